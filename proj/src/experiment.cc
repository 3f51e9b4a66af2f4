// twrnnt/src/experiment.cc
//
// Copyright 2026  The twrnnt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.


#include "twrnnt/experiment.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <ostream>
#include <thread>

#include "twrnnt/rng.h"
#include "twrnnt/synthetic.h"
#include "twrnnt/wer.h"

namespace twrnnt {

using nlohmann::json;

ExperimentSplits load_splits(const std::string &dir) {
  ExperimentSplits s;
  s.vocab = read_vocab(dir + "/vocab.json");
  std::vector<Utterance> *targets[] = {&s.pretrain, &s.train, &s.unlabeled, &s.validation,
                                       &s.test};
  for (size_t i = 0; i < split_names().size(); ++i) {
    Dataset d = read_dataset(dir + "/" + split_names()[i] + ".jsonl");
    if (d.vocab_size != s.vocab.size() || d.feature_dim != s.vocab.feature_dim())
      throw DataError(split_names()[i] + " split does not match vocab.json");
    *targets[i] = std::move(d.utterances);
  }
  return s;
}

// Settings.

void ExperimentSettings::validate() const {
  training.validate();
  if (seeds.empty()) throw ConfigError("no seeds given");
  if (modes.empty()) throw ConfigError("no modes given");
  const bool weighted = std::any_of(modes.begin(), modes.end(), [](WeightingMode m) {
    return m != WeightingMode::kStandard;
  });
  if (weighted && alpha_grid.empty()) throw ConfigError("alpha grid is empty");
  for (double a : alpha_grid)
    if (!(a >= 0.0)) throw ConfigError("alpha grid values must be non-negative");
  if (max_symbols_per_frame < 1) throw ConfigError("max_symbols_per_frame must be positive");
  if (workers < 0) throw ConfigError("workers must be nonnegative");
}

json ExperimentSettings::to_json() const {
  json modes_j = json::array();
  for (auto m : modes) modes_j.push_back(to_string(m));
  return {{"training", training.to_json()},
          {"alpha_grid", alpha_grid},
          {"modes", modes_j},
          {"seeds", seeds},
          {"max_symbols_per_frame", max_symbols_per_frame}};
}

void CorruptionExperimentConfig::validate() const {
  settings.validate();
  if (levels.empty()) throw ConfigError("no corruption levels given");
  for (double l : levels)
    CorruptionConfig{l, 0, error_types, metric, separate_omit_repeat}.validate();
}

json CorruptionExperimentConfig::to_json() const {
  json types = json::array();
  for (auto t : error_types) types.push_back(to_string(t));
  return {{"settings", settings.to_json()},
          {"levels", levels},
          {"error_types", types},
          {"substitution", to_string(metric)},
          {"separate_omit_repeat", separate_omit_repeat}};
}

void GenerationConfig::validate() const {
  settings.validate();
  if (rounds < 1) throw ConfigError("rounds must be at least 1");
  if (!(labeled_share >= 0.0) || !(pseudo_share >= 0.0) || labeled_share + pseudo_share <= 0.0)
    throw ConfigError("mixing ratio must be two nonnegative numbers, not both zero");
}

json GenerationConfig::to_json() const {
  return {{"settings", settings.to_json()},
          {"rounds", rounds},
          {"labeled_to_pseudo_ratio", {labeled_share, pseudo_share}},
          {"clean_teacher_control", clean_teacher_control}};
}

// Report.

namespace {

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
double num_of(const json &j) { return j.is_null() ? NAN : j.get<double>(); }
json opt(const std::optional<double> &x) { return x ? json(*x) : json(nullptr); }
std::optional<double> opt_of(const json &j) {
  return j.is_null() ? std::nullopt : std::optional<double>(j.get<double>());
}

double finite_mean(const std::vector<double> &v) {
  double s = 0;
  int n = 0;
  for (double x : v)
    if (std::isfinite(x)) s += x, ++n;
  return n ? s / n : NAN;
}

}  // namespace

const ReportRow *ExperimentReport::find(const std::string &mode, double level,
                                        int round) const {
  for (const auto &r : rows)
    if (r.mode == mode && r.level == level && r.round == round && !r.alpha) return &r;
  return nullptr;
}

json to_json(const ExperimentReport &r) {
  json rows = json::array();
  for (const auto &row : r.rows) {
    json wers = json::array(), alphas = json::array();
    for (double w : row.test_wer) wers.push_back(num(w));
    for (const auto &a : row.chosen_alpha) alphas.push_back(opt(a));
    rows.push_back({{"mode", row.mode},
                    {"level", row.level},
                    {"round", row.round},
                    {"alpha", opt(row.alpha)},
                    {"test_wer", wers},
                    {"chosen_alpha", alphas},
                    {"mean_test_wer", num(row.mean_test_wer)},
                    {"degradation_recovered", opt(row.degradation_recovered)}});
  }
  json runs = json::array();
  for (const auto &run : r.runs) {
    json losses = json::array();
    for (double l : run.batch_losses) losses.push_back(num(l));
    runs.push_back({{"role", run.role},
                    {"mode", run.mode},
                    {"level", run.level},
                    {"round", run.round},
                    {"alpha", opt(run.alpha)},
                    {"seed", run.seed},
                    {"validation_wer", num(run.validation_wer)},
                    {"test_wer", num(run.test_wer)},
                    {"selected", run.selected},
                    {"diverged", run.diverged},
                    {"failure", run.failure},
                    {"batch_losses", losses}});
  }
  return {{"format", "twrnnt-report"},
          {"experiment", r.experiment},
          {"provenance", to_json(r.provenance)},
          {"config", r.config},
          {"measurements", r.measurements},
          {"rows", rows},
          {"runs", runs}};
}

ExperimentReport report_from_json(const json &j) {
  ExperimentReport r;
  try {
    if (j.at("format") != "twrnnt-report") throw DataError("not a report file");
    r.experiment = j.at("experiment").get<std::string>();
    r.provenance = provenance_from_json(j.at("provenance"));
    r.config = j.at("config");
    r.measurements = j.at("measurements");
    for (const auto &row : j.at("rows")) {
      ReportRow x;
      x.mode = row.at("mode").get<std::string>();
      x.level = row.at("level").get<double>();
      x.round = row.at("round").get<int>();
      x.alpha = opt_of(row.at("alpha"));
      for (const auto &w : row.at("test_wer")) x.test_wer.push_back(num_of(w));
      for (const auto &a : row.at("chosen_alpha")) x.chosen_alpha.push_back(opt_of(a));
      x.mean_test_wer = num_of(row.at("mean_test_wer"));
      x.degradation_recovered = opt_of(row.at("degradation_recovered"));
      r.rows.push_back(std::move(x));
    }
    for (const auto &run : j.at("runs")) {
      RunRecord x;
      x.role = run.at("role").get<std::string>();
      x.mode = run.at("mode").get<std::string>();
      x.level = run.at("level").get<double>();
      x.round = run.at("round").get<int>();
      x.alpha = opt_of(run.at("alpha"));
      x.seed = run.at("seed").get<std::uint64_t>();
      x.validation_wer = num_of(run.at("validation_wer"));
      x.test_wer = num_of(run.at("test_wer"));
      x.selected = run.at("selected").get<bool>();
      x.diverged = run.at("diverged").get<bool>();
      x.failure = run.at("failure").get<std::string>();
      for (const auto &l : run.at("batch_losses")) x.batch_losses.push_back(num_of(l));
      r.runs.push_back(std::move(x));
    }
  } catch (const json::exception &e) {
    throw DataError(std::string("bad report: ") + e.what());
  }
  return r;
}

void write_report(const std::string &path, const ExperimentReport &r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << to_json(r).dump(1) << '\n';
  if (!out) throw DataError("write failed: " + path);
}

ExperimentReport read_report(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  try {
    return report_from_json(json::parse(in));
  } catch (const json::parse_error &e) {
    throw DataError(path + ": " + e.what());
  }
}

namespace {

std::string pct(double x) {
  if (!std::isfinite(x)) return "   n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%6.2f", 100.0 * x);
  return buf;
}

std::string alphas(const ReportRow &row) {
  std::string s;
  for (const auto &a : row.chosen_alpha) {
    if (!a) continue;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%s%g", s.empty() ? "" : ",", *a);
    s += buf;
  }
  return s.empty() ? "" : " a=" + s;
}

}  // namespace

void print_report_table(std::ostream &os, const ExperimentReport &r) {
  char line[256];
  if (r.experiment == "corruption") {
    os << "Token error rate (%) on the test split, mean over seeds\n";
    std::snprintf(line, sizeof line, "%-8s %8s %10s %24s %24s\n", "level", "clean",
                  "standard", "utterance (recovered)", "token (recovered)");
    os << line;
    const ReportRow *clean = r.find("clean", 0, 0);
    std::vector<double> levels;
    for (const auto &row : r.rows)
      if (row.mode == "standard" &&
          std::find(levels.begin(), levels.end(), row.level) == levels.end())
        levels.push_back(row.level);
    for (double level : levels) {
      auto cell = [&](const char *mode) -> std::string {
        const ReportRow *row = r.find(mode, level, 0);
        if (!row) return "-";
        std::string s = pct(row->mean_test_wer);
        if (row->degradation_recovered) s += " (" + pct(*row->degradation_recovered) + "%)";
        return s;
      };
      std::snprintf(line, sizeof line, "%6.0f%%  %8s %10s %24s %24s\n", 100 * level,
                    clean ? pct(clean->mean_test_wer).c_str() : "-",
                    cell("standard").c_str(), cell("utterance_weights").c_str(),
                    cell("token_weights").c_str());
      os << line;
    }
    if (r.measurements.contains("reference_wer")) {
      os << "reference WER of corrupted transcripts:";
      for (const auto &m : r.measurements["reference_wer"]) {
        std::snprintf(line, sizeof line, " %.0f%%->%s%%", 100 * m.at("level").get<double>(),
                      pct(m.at("mean").get<double>()).c_str());
        os << line;
      }
      os << '\n';
    }
    os << "chosen alpha per seed:\n";
    for (const auto &row : r.rows)
      if (!row.chosen_alpha.empty() && row.chosen_alpha.front()) {
        std::snprintf(line, sizeof line, "  %3.0f%% %-18s%s\n", 100 * row.level,
                      row.mode.c_str(), alphas(row).c_str());
        os << line;
      }
    return;
  }

  int rounds = 0;
  for (const auto &row : r.rows) rounds = std::max(rounds, row.round);
  os << "Token error rate (%) on the test split per round, mean over seeds\n";
  std::snprintf(line, sizeof line, "%-28s", "mode");
  os << line;
  for (int k = 0; k <= rounds; ++k) {
    std::snprintf(line, sizeof line, " %8s", ("round " + std::to_string(k)).c_str());
    os << line;
  }
  os << '\n';
  std::vector<std::string> modes{"base"};
  for (const auto &row : r.rows)
    if (row.round > 0 && !row.alpha &&
        std::find(modes.begin(), modes.end(), row.mode) == modes.end())
      modes.push_back(row.mode);
  for (const auto &mode : modes) {
    std::snprintf(line, sizeof line, "%-28s", mode.c_str());
    os << line;
    for (int k = 0; k <= rounds; ++k) {
      const ReportRow *row = r.find(k == 0 ? "base" : mode, 0, k);
      std::snprintf(line, sizeof line, " %8s", row ? pct(row->mean_test_wer).c_str() : "-");
      os << line;
    }
    os << '\n';
  }
  bool header = false;
  for (const auto &row : r.rows)
    if (row.alpha) {
      if (!header) os << "clean-teacher control (token_weights on true transcripts):\n";
      header = true;
      std::snprintf(line, sizeof line, "  alpha %-4g %8s\n", *row.alpha,
                    pct(row.mean_test_wer).c_str());
      os << line;
    }
  os << "chosen alpha per seed:\n";
  for (const auto &row : r.rows)
    if (!row.alpha && !row.chosen_alpha.empty() && row.chosen_alpha.front()) {
      std::snprintf(line, sizeof line, "  round %d %-18s%s\n", row.round, row.mode.c_str(),
                    alphas(row).c_str());
      os << line;
    }
}

// Engines.

namespace {

void parallel_for(size_t n, int workers, const std::function<void(size_t)> &fn) {
  size_t threads = workers > 0 ? workers : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (size_t w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (size_t i; (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto &t : pool) t.join();
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

RunRecord make_record(std::string role, std::string mode, double level, int round,
                      std::optional<double> alpha, std::uint64_t seed) {
  RunRecord r;
  r.role = std::move(role);
  r.mode = std::move(mode);
  r.level = level;
  r.round = round;
  r.alpha = alpha;
  r.seed = seed;
  return r;
}

struct Job {
  RunRecord record;
  TrainingConfig config;
  const std::vector<Utterance> *data = nullptr;
  const std::vector<Utterance> *labeled = nullptr;  // set for mixed training
  bool keep_model = false;
};

struct JobResult {
  RunRecord record;
  std::optional<TransducerModel> model;
};

std::vector<JobResult> run_jobs(const std::vector<Job> &jobs, const ExperimentSplits &splits,
                                const ExperimentSettings &settings) {
  std::vector<JobResult> results(jobs.size());
  parallel_for(jobs.size(), settings.workers, [&](size_t i) {
    const Job &job = jobs[i];
    TrainingResult tr = job.labeled ? train_model_mixed(*job.labeled, *job.data, job.config)
                                    : train_model(*job.data, job.config);
    JobResult &out = results[i];
    out.record = job.record;
    out.record.batch_losses = std::move(tr.batch_losses);
    out.record.diverged = tr.diverged;
    out.record.failure = tr.failure;
    if (tr.diverged) {
      out.record.validation_wer = out.record.test_wer = NAN;
    } else {
      out.record.validation_wer =
          evaluate_wer(tr.model, splits.validation, settings.max_symbols_per_frame);
      out.record.test_wer = evaluate_wer(tr.model, splits.test, settings.max_symbols_per_frame);
      if (job.keep_model) out.model = std::move(tr.model);
    }
  });
  return results;
}

TrainingConfig run_config(const ExperimentSettings &s, WeightingMode mode,
                          std::optional<double> alpha, std::uint64_t seed) {
  TrainingConfig c = s.training;
  c.mode = mode;
  c.weights.alpha = alpha.value_or(1.0);
  c.seed = seed;
  return c;
}

std::vector<std::optional<double>> mode_alphas(const ExperimentSettings &s, WeightingMode m) {
  std::vector<std::optional<double>> out;
  if (m == WeightingMode::kStandard) {
    out.push_back(std::nullopt);
  } else {
    std::vector<double> grid = s.alpha_grid;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    for (double a : grid) out.push_back(a);
  }
  return out;
}

// Marks the selected run among [first, last) (ascending alpha): lowest
// validation WER, ties to the smaller alpha.  Returns its index or -1.
long select_alpha(std::vector<JobResult> &results, size_t first, size_t last) {
  long best = -1;
  for (size_t i = first; i < last; ++i) {
    const RunRecord &r = results[i].record;
    if (r.diverged) continue;
    if (best < 0 || r.validation_wer < results[best].record.validation_wer)
      best = static_cast<long>(i);
  }
  if (best >= 0) results[best].record.selected = true;
  return best;
}

ReportRow make_row(const std::string &mode, double level, int round,
                   const std::vector<const RunRecord *> &per_seed) {
  ReportRow row;
  row.mode = mode;
  row.level = level;
  row.round = round;
  for (const RunRecord *r : per_seed) {
    row.test_wer.push_back(r ? r->test_wer : NAN);
    row.chosen_alpha.push_back(r ? r->alpha : std::nullopt);
  }
  row.mean_test_wer = finite_mean(row.test_wer);
  return row;
}

Provenance engine_provenance(const json &config, std::uint64_t seed, const char *command) {
  Provenance p;
  p.command = command;
  p.config_hash = config_hash(config);
  p.seed = seed;
  return p;
}

}  // namespace

ExperimentReport run_corruption_experiment(const ExperimentSplits &splits,
                                           const CorruptionExperimentConfig &config) {
  config.validate();
  const auto &S = config.settings;
  if (splits.pretrain.empty()) throw DataError("corruption experiment needs a pretrain split");
  if (splits.train.empty() || splits.validation.empty() || splits.test.empty())
    throw DataError("train, validation and test splits must be nonempty");
  for (const auto &p : splits.pretrain)
    for (const auto &t : splits.train)
      if (p.id == t.id) throw DataError("pretrain and train splits share utterance " + p.id);
  const auto table = SubstitutionTable::make(config.metric, splits.vocab);
  const size_t nseeds = S.seeds.size();

  ExperimentReport report;
  report.experiment = "corruption";
  report.config = config.to_json();
  report.provenance = engine_provenance(report.config, S.seeds.front(), "run-corruption");

  // Teachers, one per seed, never see the train split.
  std::vector<Job> teachers;
  for (size_t si = 0; si < nseeds; ++si) {
    Job j;
    j.record = make_record("teacher", "standard", 0, 0, std::nullopt, S.seeds[si]);
    j.config = run_config(S, WeightingMode::kStandard, std::nullopt,
                          derive_seed(S.seeds[si], {kStreamExperiment, 0}));
    j.data = &splits.pretrain;
    j.keep_model = true;
    teachers.push_back(j);
  }
  auto teacher_results = run_jobs(teachers, splits, S);
  for (auto &t : teacher_results) {
    if (!t.model) throw NumericalError("teacher training diverged: " + t.record.failure);
    report.runs.push_back(t.record);
  }

  // Corrupted, teacher-scored train sets per (seed, level).
  std::vector<std::vector<std::vector<Utterance>>> scored(nseeds);
  json reference = json::array();
  for (size_t li = 0; li < config.levels.size(); ++li) {
    std::vector<double> measured;
    for (size_t si = 0; si < nseeds; ++si) {
      CorruptionConfig cc{config.levels[li],
                          derive_seed(S.seeds[si], {kStreamCorruption, li}),
                          config.error_types, config.metric, config.separate_omit_repeat};
      auto corrupted = corrupt_utterances(splits.train, cc, table);
      std::vector<LabelSequence> hyp, ref;
      for (size_t n = 0; n < corrupted.size(); ++n) {
        hyp.push_back(corrupted[n].tokens);
        ref.push_back(splits.train[n].tokens);
      }
      measured.push_back(corpus_wer(hyp, ref));
      scored[si].push_back(score_confidences(*teacher_results[si].model, corrupted));
    }
    reference.push_back({{"level", config.levels[li]},
                         {"per_seed", measured},
                         {"mean", finite_mean(measured)}});
  }
  report.measurements["reference_wer"] = reference;

  std::vector<Job> jobs;
  // group key -> [first, last) in jobs
  struct Group {
    size_t seed_index, level_index;
    WeightingMode mode;
    size_t first, last;
  };
  std::vector<Group> groups;
  for (size_t si = 0; si < nseeds; ++si) {
    const std::uint64_t train_seed = derive_seed(S.seeds[si], {kStreamExperiment, 1});
    Job clean;
    clean.record = make_record("clean", "standard", 0, 0, std::nullopt, S.seeds[si]);
    clean.config = run_config(S, WeightingMode::kStandard, std::nullopt, train_seed);
    clean.data = &splits.train;
    jobs.push_back(clean);
    for (size_t li = 0; li < config.levels.size(); ++li)
      for (auto mode : S.modes) {
        Group g{si, li, mode, jobs.size(), 0};
        for (auto alpha : mode_alphas(S, mode)) {
          Job j;
          j.record = make_record("student", to_string(mode), config.levels[li], 0, alpha, S.seeds[si]);
          j.config = run_config(S, mode, alpha, train_seed);
          j.data = &scored[si][li];
          jobs.push_back(j);
        }
        g.last = jobs.size();
        groups.push_back(g);
      }
  }
  auto results = run_jobs(jobs, splits, S);

  std::vector<const RunRecord *> clean_runs(nseeds);
  for (auto &r : results)
    if (r.record.role == "clean")
      for (size_t si = 0; si < nseeds; ++si)
        if (S.seeds[si] == r.record.seed && !clean_runs[si]) clean_runs[si] = &r.record;
  // selected[(level, mode)][seed]
  std::map<std::pair<size_t, int>, std::vector<const RunRecord *>> selected;
  for (const auto &g : groups) {
    auto &slot = selected[{g.level_index, static_cast<int>(g.mode)}];
    slot.resize(nseeds, nullptr);
    const long best = select_alpha(results, g.first, g.last);
    if (best >= 0) slot[g.seed_index] = &results[best].record;
  }

  report.rows.push_back(make_row("clean", 0, 0, clean_runs));
  const double clean_wer = report.rows.back().mean_test_wer;
  for (size_t li = 0; li < config.levels.size(); ++li) {
    std::optional<double> standard_wer;
    auto std_it = selected.find({li, static_cast<int>(WeightingMode::kStandard)});
    if (std_it != selected.end())
      standard_wer = make_row("standard", 0, 0, std_it->second).mean_test_wer;
    for (auto mode : S.modes) {
      ReportRow row = make_row(to_string(mode), config.levels[li], 0,
                               selected[{li, static_cast<int>(mode)}]);
      if (mode != WeightingMode::kStandard && standard_wer &&
          *standard_wer - clean_wer > 0 && std::isfinite(row.mean_test_wer))
        row.degradation_recovered =
            (*standard_wer - row.mean_test_wer) / (*standard_wer - clean_wer);
      report.rows.push_back(std::move(row));
    }
  }
  for (auto &r : results) report.runs.push_back(std::move(r.record));
  return report;
}

ExperimentReport run_pseudo_labeling(const ExperimentSplits &splits,
                                     const GenerationConfig &config) {
  config.validate();
  const auto &S = config.settings;
  if (splits.train.empty()) throw DataError("labeled split is empty");
  if (splits.unlabeled.empty()) throw DataError("unlabeled split is empty");
  if (splits.validation.empty() || splits.test.empty())
    throw DataError("validation and test splits must be nonempty");
  for (const auto &a : splits.train)
    for (const auto &b : splits.unlabeled)
      if (a.id == b.id) throw DataError("labeled and unlabeled splits share utterance " + a.id);
  const size_t nseeds = S.seeds.size();
  TrainingConfig mixed = S.training;
  mixed.labeled_fraction = config.labeled_fraction();

  ExperimentReport report;
  report.experiment = "pseudo_labeling";
  report.config = config.to_json();
  report.provenance = engine_provenance(report.config, S.seeds.front(), "run-pseudolabel");

  std::vector<Job> base_jobs;
  for (size_t si = 0; si < nseeds; ++si) {
    Job j;
    j.record = make_record("base", "base", 0, 0, std::nullopt, S.seeds[si]);
    j.config = run_config(S, WeightingMode::kStandard, std::nullopt,
                          derive_seed(S.seeds[si], {kStreamExperiment, 0}));
    j.data = &splits.train;
    j.keep_model = true;
    base_jobs.push_back(j);
  }
  auto base = run_jobs(base_jobs, splits, S);
  std::vector<const RunRecord *> base_rows;
  for (auto &b : base) {
    if (!b.model) throw NumericalError("base model diverged: " + b.record.failure);
    base_rows.push_back(&b.record);
  }
  report.rows.push_back(make_row("base", 0, 0, base_rows));
  for (auto &b : base) report.runs.push_back(b.record);

  // teacher[mode][seed]
  std::map<int, std::vector<TransducerModel>> teacher;
  for (auto mode : S.modes)
    for (auto &b : base) teacher[static_cast<int>(mode)].push_back(*b.model);

  for (int round = 1; round <= config.rounds; ++round) {
    std::map<std::pair<int, size_t>, std::vector<Utterance>> pseudo;
    for (auto mode : S.modes)
      for (size_t si = 0; si < nseeds; ++si) {
        auto p = pseudo_label(teacher[static_cast<int>(mode)][si], splits.unlabeled,
                              S.max_symbols_per_frame);
        if (p.empty())
          throw DataError("round " + std::to_string(round) + ", " + to_string(mode) +
                          ": teacher produced only empty hypotheses");
        pseudo[{static_cast<int>(mode), si}] = std::move(p);
      }
    std::vector<std::vector<Utterance>> control_sets;
    if (config.clean_teacher_control && round == 1)
      for (size_t si = 0; si < nseeds; ++si)
        control_sets.push_back(score_confidences(*base[si].model, splits.unlabeled));

    std::vector<Job> jobs;
    struct Group {
      size_t seed_index;
      WeightingMode mode;
      size_t first, last;
    };
    std::vector<Group> groups;
    for (size_t si = 0; si < nseeds; ++si) {
      const std::uint64_t seed = derive_seed(S.seeds[si], {kStreamExperiment,
                                                           static_cast<std::uint64_t>(round)});
      for (auto mode : S.modes) {
        Group g{si, mode, jobs.size(), 0};
        for (auto alpha : mode_alphas(S, mode)) {
          Job j;
          j.record = make_record("student", to_string(mode), 0, round, alpha, S.seeds[si]);
          j.config = run_config(S, mode, alpha, seed);
          j.config.labeled_fraction = mixed.labeled_fraction;
          j.labeled = &splits.train;
          j.data = &pseudo[{static_cast<int>(mode), si}];
          j.keep_model = true;
          jobs.push_back(j);
        }
        g.last = jobs.size();
        groups.push_back(g);
      }
      if (!control_sets.empty())
        for (auto alpha : mode_alphas(S, WeightingMode::kTokenWeights)) {
          Job j;
          j.record = make_record("control", "token_weights_clean_teacher", 0, round, alpha, S.seeds[si]);
          j.config = run_config(S, WeightingMode::kTokenWeights, alpha, seed);
          j.config.labeled_fraction = mixed.labeled_fraction;
          j.labeled = &splits.train;
          j.data = &control_sets[si];
          jobs.push_back(j);
        }
    }
    auto results = run_jobs(jobs, splits, S);

    std::map<int, std::vector<const RunRecord *>> chosen;
    for (const auto &g : groups) {
      auto &slot = chosen[static_cast<int>(g.mode)];
      slot.resize(nseeds, nullptr);
      const long best = select_alpha(results, g.first, g.last);
      if (best < 0)
        throw NumericalError("round " + std::to_string(round) + ", " + to_string(g.mode) +
                             ": every student diverged");
      slot[g.seed_index] = &results[best].record;
      teacher[static_cast<int>(g.mode)][g.seed_index] = *results[best].model;
    }
    for (auto mode : S.modes)
      report.rows.push_back(make_row(to_string(mode), 0, round, chosen[static_cast<int>(mode)]));
    if (!control_sets.empty())
      for (auto alpha : mode_alphas(S, WeightingMode::kTokenWeights)) {
        std::vector<const RunRecord *> per_seed(nseeds, nullptr);
        for (const auto &r : results)
          if (r.record.role == "control" && r.record.alpha == alpha)
            for (size_t si = 0; si < nseeds; ++si)
              if (S.seeds[si] == r.record.seed) per_seed[si] = &r.record;
        ReportRow row = make_row("token_weights_clean_teacher", 0, round, per_seed);
        row.alpha = alpha;
        report.rows.push_back(std::move(row));
      }
    for (auto &r : results) report.runs.push_back(std::move(r.record));
  }
  return report;
}

}  // namespace twrnnt
