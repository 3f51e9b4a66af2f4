// Acceptance suite.  Prints one [PASS]/[FAIL] line per criterion and exits
// nonzero if any criterion fails.
//
//   acceptance            run all criteria
//   acceptance 1 4 7      run a subset
//   acceptance --report-dir DIR   also write the experiment reports

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "twrnnt/corruption.h"
#include "twrnnt/experiment.h"
#include "twrnnt/lattice.h"
#include "twrnnt/model.h"
#include "twrnnt/oracle.h"
#include "twrnnt/synthetic.h"
#include "twrnnt/token_conditional.h"
#include "twrnnt/weighted_loss.h"
#include "twrnnt/wer.h"
#include "test_util.h"

using namespace twrnnt;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char *f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

constexpr int kInstances = 1000;

// 1. Loss and conditionals against path enumeration.
Outcome oracle_equivalence() {
  const auto start = Clock::now();
  double worst_loss = 0, worst_c = 0;
  for (int i = 0; i < kInstances; ++i) {
    auto [lat, y] = testing::random_instance(1000 + i, 6, 4, 5);
    worst_loss = std::max(worst_loss,
                          std::abs(rnnt_loss(lat, y) + oracle::exact_sequence_logp(lat, y)));
    if (y.empty()) continue;
    const auto c = conditional_profile(lat, y).conditionals();
    const auto oc = oracle::exact_conditionals(lat, y);
    for (size_t u = 0; u < oc.size(); ++u)
      worst_c = std::max(worst_c, std::abs(c(static_cast<Eigen::Index>(u)) - oc[u]));
  }
  const double elapsed = seconds_since(start);
  return {worst_loss < 1e-10 && worst_c < 1e-10 && elapsed < 30,
          fmt("%d instances, max |loss - oracle| = %.2e, max |c_u - oracle| = %.2e (< 1e-10), "
              "%.1f s (< 30 s)",
              kInstances, worst_loss, worst_c, elapsed)};
}

// 2. sum log c_u + final_blank_logp + loss = 0.
Outcome telescoping() {
  double worst = 0;
  int empty = 0;
  for (int i = 0; i < kInstances; ++i) {
    auto [lat, y] = testing::random_instance(1000 + i, 6, 4, 5);
    double residual;
    if (y.empty()) {
      // No tokens: the sentence-end term is the whole sequence probability.
      ++empty;
      residual = oracle::exact_final_blank_logp(lat, y) + rnnt_loss(lat, y);
    } else {
      const auto p = conditional_profile(lat, y);
      residual = p.log_conditionals.sum() + p.final_blank_logp + rnnt_loss(lat, y);
    }
    worst = std::max(worst, std::abs(residual));
  }
  return {worst < 1e-9, fmt("%d instances (%d with U=0), max |residual| = %.2e (< 1e-9)",
                            kInstances, empty, worst)};
}

// 3. Unit weights reproduce the standard loss.
Outcome standard_reduction() {
  double worst = 0;
  for (int i = 0; i < kInstances; ++i) {
    auto [lat, y] = testing::random_instance(1000 + i, 6, 4, 5);
    const std::vector<double> ones(y.size(), 1.0);
    worst = std::max(worst, std::abs(weighted_rnnt_loss(lat, y, std::span<const double>(ones),
                                                        1.0) -
                                     rnnt_loss(lat, y)));
  }
  return {worst < 1e-9,
          fmt("%d instances, max |L_w - loss| = %.2e (< 1e-9)", kInstances, worst)};
}

// 4. Analytic gradients against central differences.
Outcome gradients() {
  const auto start = Clock::now();
  const double h = 1e-6;
  double worst_std = 0, worst_w = 0, worst_model = 0;
  for (int i = 0; i < 100; ++i) {
    auto [lat, y] = testing::random_instance(5000 + i, 6, 4, 5);
    Rng rng = make_rng(5000 + i, {kStreamTest, 1});
    std::uniform_real_distribution<double> unit(0.1, 2.0);
    std::vector<double> lambdas(y.size());
    for (double &l : lambdas) l = unit(rng);
    const double fbw = unit(rng);

    const auto g = rnnt_loss_grad(lat, y);
    const auto fd = oracle::finite_diff_grad(
        [&](const PosteriorLattice<double> &l) { return rnnt_loss(l, y); }, lat, h);
    worst_std = std::max(worst_std, oracle::max_relative_error(g, fd));

    const auto gw = weighted_rnnt_loss_grad(lat, y, std::span<const double>(lambdas), fbw);
    const auto fdw = oracle::finite_diff_grad(
        [&](const PosteriorLattice<double> &l) {
          return weighted_rnnt_loss(l, y, std::span<const double>(lambdas), fbw);
        },
        lat, h);
    worst_w = std::max(worst_w, oracle::max_relative_error(gw, fdw));
  }

  for (int i = 0; i < 10; ++i) {
    Rng rng = make_rng(6000 + i, {kStreamTest});
    const ModelDims dims{4, 6, 4};
    const auto model = TransducerModel::random(dims, 6000 + i);
    const int T = std::uniform_int_distribution<int>(2, 6)(rng);
    const int U = std::uniform_int_distribution<int>(1, 4)(rng);
    Eigen::MatrixXd x(T, dims.feature_dim);
    std::normal_distribution<double> normal;
    for (Eigen::Index r = 0; r < x.size(); ++r) x.data()[r] = normal(rng);
    const auto y = testing::random_labels(rng, U, dims.vocab_size);
    std::vector<double> lambdas(U);
    std::uniform_real_distribution<double> unit(0.1, 2.0);
    for (double &l : lambdas) l = unit(rng);
    auto objective = [&](const TransducerModel &m) {
      return weighted_rnnt_loss(model_forward(m, x, y), y, std::span<const double>(lambdas));
    };
    ForwardCache cache;
    const auto lat = model_forward(model, x, y, &cache);
    const auto g = model_backward(
        model, cache, weighted_rnnt_loss_grad(lat, y, std::span<const double>(lambdas)));
    std::uniform_int_distribution<Eigen::Index> pick(0, model.parameters().size() - 1);
    for (int k = 0; k < 10; ++k) {
      const Eigen::Index j = pick(rng);
      TransducerModel plus = model, minus = model;
      plus.parameters()(j) += h;
      minus.parameters()(j) -= h;
      const double numeric = (objective(plus) - objective(minus)) / (2 * h);
      worst_model = std::max(worst_model, oracle::relative_error(g(j), numeric));
    }
  }
  const double elapsed = seconds_since(start);
  return {worst_std < 1e-4 && worst_w < 1e-4 && worst_model < 1e-3 && elapsed < 120,
          fmt("lattice (100 instances, step 1e-6): standard %.2e, weighted %.2e (< 1e-4); "
              "model (10 x 10 coordinates): %.2e (< 1e-3); %.1f s (< 120 s)",
              worst_std, worst_w, worst_model, elapsed)};
}

// 5. Next-token distributions and total output probability.
Outcome completeness() {
  double worst_sum = 0;
  for (int i = 0; i < 100; ++i) {
    Rng rng = make_rng(7000 + i, {kStreamTest});
    const int T = std::uniform_int_distribution<int>(1, 5)(rng);
    const int V = std::uniform_int_distribution<int>(1, 4)(rng);
    const int len = std::uniform_int_distribution<int>(0, 3)(rng);
    const auto prefix = testing::random_labels(rng, len, V);
    const auto rows = testing::synthetic_transducer(7000 + i, V);
    worst_sum = std::max(worst_sum,
                         std::abs(next_token_distribution(T, V, prefix, rows).sum() - 1.0));
  }
  // Complete outputs up to length N plus the prefixes of length N+1
  // partition the output space.
  double worst_total = 0;
  int tiny = 0;
  for (int T = 1; T <= 3; ++T)
    for (int V = 1; V <= 2; ++V) {
      const int N = 4;
      const auto rows = testing::synthetic_transducer(8000 + 10 * T + V, V);
      std::vector<double> masses;
      std::vector<LabelSequence> frontier{{}};
      for (int len = 0; len <= N + 1; ++len) {
        std::vector<LabelSequence> next;
        for (const auto &y : frontier) {
          const auto lat = materialize_lattice(T, V, y, rows);
          if (len <= N) {
            masses.push_back(oracle::exact_sequence_logp(lat, y));
            for (int k = 0; k < V; ++k) {
              auto e = y;
              e.push_back(k);
              next.push_back(std::move(e));
            }
          } else {
            masses.push_back(oracle::exact_prefix_logp(lat, y, len));
          }
        }
        frontier = std::move(next);
      }
      worst_total = std::max(worst_total, std::abs(std::exp(log_sum_exp<double>(masses)) - 1.0));
      ++tiny;
    }
  return {worst_sum < 1e-9 && worst_total < 1e-8,
          fmt("100 distributions, max |sum - 1| = %.2e (< 1e-9); %d tiny transducers, "
              "max |total - 1| = %.2e (< 1e-8)",
              worst_sum, tiny, worst_total)};
}

// 6. Weight law.
Outcome weight_law() {
  double worst_mean = 0, worst_zero = 0;
  long order_violations = 0, monotone_violations = 0, pairs = 0;
  for (int i = 0; i < kInstances; ++i) {
    Rng rng = make_rng(9000 + i, {kStreamTest});
    const int n = std::uniform_int_distribution<int>(1, 20)(rng);
    std::vector<double> c(n);
    std::uniform_real_distribution<double> conf(1e-6, 1.0);
    for (double &x : c) x = conf(rng);
    if (n > 1 && i % 5 == 0) c[1] = c[0];  // exercise ties
    const double a1 = std::uniform_real_distribution<double>(0.0, 8.0)(rng);
    const double a2 = a1 + std::uniform_real_distribution<double>(0.0, 4.0)(rng);
    const auto w0 = compute_weights(c, WeightConfig{0.0}).lambdas;
    const auto w1 = compute_weights(c, WeightConfig{a1}).lambdas;
    const auto w2 = compute_weights(c, WeightConfig{a2}).lambdas;
    for (const auto *w : {&w1, &w2}) {
      double mean = 0;
      for (double x : *w) mean += x;
      worst_mean = std::max(worst_mean, std::abs(mean / n - 1.0));
    }
    for (double x : w0) worst_zero = std::max(worst_zero, std::abs(x - 1.0));
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) {
        if (c[p] > c[q]) continue;
        ++pairs;
        // c_p <= c_q: lambda_p <= lambda_q, and lambda_p / lambda_q shrinks
        // as alpha grows.
        if (w1[p] > w1[q] * (1 + 1e-12) || w2[p] > w2[q] * (1 + 1e-12)) ++order_violations;
        if (w2[p] * w1[q] > w1[p] * w2[q] * (1 + 1e-12)) ++monotone_violations;
      }
  }
  return {worst_mean < 1e-9 && worst_zero == 0 && order_violations == 0 &&
              monotone_violations == 0,
          fmt("%d vectors: max |mean - 1| = %.2e (< 1e-9), alpha 0 max |lambda - 1| = %.1e, "
              "%ld ordered pairs, %ld order and %ld monotonicity violations",
              kInstances, worst_mean, worst_zero, pairs, order_violations,
              monotone_violations)};
}

// 7. Corruption calibration on a corpus of at least 10k tokens.
Outcome calibration() {
  SyntheticSpec spec;
  spec.seed = 11;
  spec.split_sizes = {0, 2000, 0, 0, 0};
  const auto corpus = generate_synthetic_dataset(spec);
  const auto &train = corpus.split("train");
  std::vector<LabelSequence> refs;
  long tokens = 0;
  for (const auto &u : train) {
    refs.push_back(u.tokens);
    tokens += static_cast<long>(u.tokens.size());
  }
  const auto table = SubstitutionTable::nearest(corpus.vocab.prototypes);
  bool ok = tokens >= 10000;
  std::ostringstream os;
  os << tokens << " tokens:";
  for (double level : {0.1, 0.2, 0.3, 0.4}) {
    CorruptionConfig cc;
    cc.error_rate = level;
    cc.rng_seed = 12;
    const auto noisy = corrupt_utterances(train, cc, table);
    std::vector<LabelSequence> hyps;
    for (const auto &u : noisy) hyps.push_back(u.tokens);
    const double measured = corpus_wer(hyps, refs);
    ok = ok && std::abs(measured - level) <= 0.02;
    os << fmt(" %.0f%% -> %.2f%%", 100 * level, 100 * measured);
  }
  os << " (within 2 points)";
  return {ok, os.str()};
}

ExperimentSplits make_splits(const SyntheticSpec &spec) {
  auto corpus = generate_synthetic_dataset(spec);
  ExperimentSplits s;
  s.vocab = corpus.vocab;
  s.pretrain = corpus.split("pretrain");
  s.train = corpus.split("train");
  s.unlabeled = corpus.split("unlabeled");
  s.validation = corpus.split("validation");
  s.test = corpus.split("test");
  return s;
}

CorruptionExperimentConfig corruption_config(const ExperimentSplits &s) {
  CorruptionExperimentConfig cfg;
  cfg.settings.training.dims = ModelDims{s.vocab.feature_dim(), 32, s.vocab.size()};
  cfg.settings.training.epochs = 12;
  cfg.levels = {0.3};
  return cfg;
}

ExperimentSplits corruption_splits() {
  SyntheticSpec spec;
  spec.seed = 1;
  spec.noise = 0.6;
  spec.split_sizes = {300, 500, 0, 300, 500};
  return make_splits(spec);
}

void maybe_write(const std::string &dir, const std::string &name, const ExperimentReport &r) {
  if (dir.empty()) return;
  std::filesystem::create_directories(dir);
  write_report((std::filesystem::path(dir) / name).string(), r);
}

// 8. Direction and size of the recovery at 30% corruption.
Outcome corruption_direction(const std::string &report_dir, ExperimentReport *out) {
  const auto start = Clock::now();
  const auto splits = corruption_splits();
  auto cfg = corruption_config(splits);
  cfg.settings.workers = 1;
  const auto report = run_corruption_experiment(splits, cfg);
  const double elapsed = seconds_since(start);
  maybe_write(report_dir, "corruption.json", report);
  print_report_table(std::cout, report);
  *out = report;
  const auto *standard = report.find("standard", 0.3, 0);
  const auto *utterance = report.find("utterance_weights", 0.3, 0);
  const auto *token = report.find("token_weights", 0.3, 0);
  const auto *clean = report.find("clean", 0, 0);
  if (!standard || !utterance || !token || !clean) return {false, "missing report rows"};
  const double recovery = token->degradation_recovered.value_or(0.0);
  return {token->mean_test_wer < utterance->mean_test_wer &&
              utterance->mean_test_wer < standard->mean_test_wer && recovery > 0.3 &&
              elapsed < 600,
          fmt("test WER clean %.2f%%, standard %.2f%%, utterance %.2f%%, token %.2f%%; "
              "token recovery %.3f (> 0.3); %.0f s on one worker (< 600 s)",
              100 * clean->mean_test_wer, 100 * standard->mean_test_wer,
              100 * utterance->mean_test_wer, 100 * token->mean_test_wer, recovery, elapsed)};
}

// 9. Direction of the pseudo-labeling rounds.
Outcome pseudo_labeling_direction(const std::string &report_dir) {
  const auto start = Clock::now();
  SyntheticSpec spec;
  spec.seed = 1;
  spec.noise = 0.6;
  spec.split_sizes = {0, 100, 900, 300, 500};
  const auto splits = make_splits(spec);
  GenerationConfig cfg;
  cfg.settings.training.dims = ModelDims{splits.vocab.feature_dim(), 32, splits.vocab.size()};
  cfg.settings.training.steps = 1000;
  cfg.settings.workers = 0;
  cfg.rounds = 3;
  const auto report = run_pseudo_labeling(splits, cfg);
  maybe_write(report_dir, "pseudo_labeling.json", report);
  print_report_table(std::cout, report);
  bool ok = true;
  std::ostringstream os;
  for (int round = 1; round <= 3; ++round) {
    const auto *s = report.find("standard", 0, round);
    const auto *u = report.find("utterance_weights", 0, round);
    const auto *t = report.find("token_weights", 0, round);
    if (!s || !u || !t) return {false, "missing report rows"};
    const bool token_ok =
        round < 3 ? t->mean_test_wer <= s->mean_test_wer : t->mean_test_wer < s->mean_test_wer;
    ok = ok && token_ok;
    os << fmt("round %d: standard %.2f%%, utterance %.2f%%, token %.2f%%%s; ", round,
              100 * s->mean_test_wer, 100 * u->mean_test_wer, 100 * t->mean_test_wer,
              token_ok ? "" : " (token not below standard)");
    if (round == 3) {
      const bool between = t->mean_test_wer <= u->mean_test_wer &&
                           u->mean_test_wer <= s->mean_test_wer;
      ok = ok && between;
      if (!between) os << "utterance not between token and standard at round 3; ";
    }
  }
  os << fmt("%.0f s", seconds_since(start));
  return {ok, os.str()};
}

// 10. Repeating an experiment reproduces its report.
Outcome reproducibility(const ExperimentReport *first) {
  const auto splits = corruption_splits();
  auto cfg = corruption_config(splits);
  ExperimentReport a;
  if (first) {
    a = *first;
  } else {
    cfg.settings.workers = 1;
    a = run_corruption_experiment(splits, cfg);
  }
  // The repeat uses a different worker count; results must not depend on it.
  cfg.settings.workers = 3;
  const auto b = run_corruption_experiment(splits, cfg);
  const bool same = to_json(a).dump() == to_json(b).dump();
  return {same, fmt("corruption experiment repeated (1 vs 3 workers): %zu runs, reports %s",
                    b.runs.size(), same ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char **argv) {
  std::set<int> selected;
  std::string report_dir;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--report-dir" && i + 1 < argc) {
      report_dir = argv[++i];
    } else {
      try {
        selected.insert(std::stoi(arg));
      } catch (const std::exception &) {
        std::cerr << "usage: acceptance [--report-dir DIR] [criterion ...]\n";
        return 2;
      }
    }
  }
  auto wanted = [&](int k) { return selected.empty() || selected.count(k) > 0; };

  const char *names[] = {"",
                         "oracle equivalence",
                         "telescoping identity",
                         "standard-loss reduction",
                         "gradient correctness",
                         "completeness",
                         "weight law",
                         "corruption calibration",
                         "directional recovery",
                         "directional pseudo-labeling",
                         "reproducibility"};
  int failures = 0;
  auto report = [&](int k, const Outcome &o) {
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << k << ". " << names[k] << ": " << o.detail
              << std::endl;
    failures += !o.pass;
  };
  auto guarded = [&](int k, auto &&fn) {
    if (!wanted(k)) return;
    try {
      report(k, fn());
    } catch (const std::exception &e) {
      report(k, {false, std::string("exception: ") + e.what()});
    }
  };

  ExperimentReport corruption;
  bool have_corruption = false;
  guarded(1, oracle_equivalence);
  guarded(2, telescoping);
  guarded(3, standard_reduction);
  guarded(4, gradients);
  guarded(5, completeness);
  guarded(6, weight_law);
  guarded(7, calibration);
  guarded(8, [&] {
    auto o = corruption_direction(report_dir, &corruption);
    have_corruption = true;
    return o;
  });
  guarded(9, [&] { return pseudo_labeling_direction(report_dir); });
  guarded(10, [&] { return reproducibility(have_corruption ? &corruption : nullptr); });

  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed")
            << std::endl;
  return failures ? 1 : 0;
}
