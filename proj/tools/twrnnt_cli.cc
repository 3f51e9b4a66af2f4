// twrnnt/tools/twrnnt_cli.cc
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


// Command-line front end.  Every subcommand maps onto one library
// operation; all file I/O happens here.  Errors end with one JSON line on
// stderr and exit code 2 (config), 3 (data) or 4 (numerical).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "twrnnt/corruption.h"
#include "twrnnt/dataset.h"
#include "twrnnt/experiment.h"
#include "twrnnt/lattice_io.h"
#include "twrnnt/model.h"
#include "twrnnt/oracle.h"
#include "twrnnt/synthetic.h"
#include "twrnnt/training.h"
#include "twrnnt/wer.h"

using namespace twrnnt;
using nlohmann::json;

namespace {

const CLI::Validator kParentExists(
    [](std::string &path) -> std::string {
      auto parent = std::filesystem::path(path).parent_path();
      if (!parent.empty() && !std::filesystem::is_directory(parent))
        return "directory " + parent.string() + " does not exist";
      return {};
    },
    "PATH", "OutputPath");

const CLI::Validator kCreatableDir(
    [](std::string &path) -> std::string {
      std::filesystem::path p(path);
      if (std::filesystem::exists(p) && !std::filesystem::is_directory(p))
        return path + " exists and is not a directory";
      auto parent = p.parent_path();
      if (!parent.empty() && !std::filesystem::is_directory(parent))
        return "directory " + parent.string() + " does not exist";
      return {};
    },
    "DIR", "OutputDir");

const CLI::Validator kDataDir(
    [](std::string &dir) -> std::string {
      for (const char *name : {"vocab.json", "pretrain.jsonl", "train.jsonl", "unlabeled.jsonl",
                               "validation.jsonl", "test.jsonl"})
        if (!std::filesystem::is_regular_file(std::filesystem::path(dir) / name))
          return dir + " has no " + name + " (expected a gen-data output directory)";
      return {};
    },
    "DIR", "DataDir");

void print_json_line(const json &j) { std::cout << j.dump() << '\n'; }

// Shared training options.
struct TrainingFlags {
  int hidden_dim = 32;
  int epochs = 12;
  int steps = 0;
  int batch_size = 8;
  double lr = 1e-2;
  std::string precision = "float64";
  std::string normalization = "per_batch";
  double final_blank_weight = 1.0;
  int max_symbols = 4;

  void add(CLI::App *app) {
    app->add_option("--hidden-dim", hidden_dim, "Hidden width H of encoder, predictor and joiner")
        ->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--epochs", epochs, "Training epochs (ignored when --steps > 0)")
        ->capture_default_str()->check(CLI::NonNegativeNumber);
    app->add_option("--steps", steps, "Fixed number of Adam updates per run; 0 uses --epochs")
        ->capture_default_str()->check(CLI::NonNegativeNumber);
    app->add_option("--batch-size", batch_size, "Utterances per batch")
        ->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
    app->add_option("--precision", precision, "Lattice precision for the loss")
        ->capture_default_str()->check(CLI::IsMember({"float64", "float32"}));
    app->add_option("--normalization", normalization, "Token-weight normalisation scope")
        ->capture_default_str()->check(CLI::IsMember({"per_batch", "per_utterance"}));
    app->add_option("--final-blank-weight", final_blank_weight,
                    "Weight of the sentence-end term in token-weight mode")
        ->capture_default_str();
    app->add_option("--max-symbols", max_symbols, "Greedy decoding cap on tokens per frame")
        ->capture_default_str()->check(CLI::PositiveNumber);
  }

  TrainingConfig config(int feature_dim, int vocab_size) const {
    TrainingConfig c;
    c.dims = ModelDims{feature_dim, hidden_dim, vocab_size};
    c.epochs = epochs;
    c.steps = steps;
    c.batch_size = batch_size;
    c.adam.lr = lr;
    c.precision = precision_from_string(precision);
    c.weights.normalization = normalization_from_string(normalization);
    c.weights.final_blank_weight = final_blank_weight;
    return c;
  }
};

// Experiment options shared by run-corruption and run-pseudolabel.
struct ExperimentFlags {
  std::string data, out;
  std::vector<double> alpha_grid{1, 2, 4, 6, 8};
  std::vector<std::string> modes{"standard", "utterance_weights", "token_weights"};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  int workers = 1;
  bool quiet = false;
  TrainingFlags training;

  void add(CLI::App *app) {
    app->add_option("--data", data, "gen-data output directory")
        ->required()->check(kDataDir);
    app->add_option("--out", out, "Report JSON to write")->required()->check(kParentExists);
    app->add_option("--alpha-grid", alpha_grid, "Comma-separated alpha values")
        ->delimiter(',')->capture_default_str();
    app->add_option("--modes", modes, "Comma-separated training modes")
        ->delimiter(',')->capture_default_str()
        ->check(CLI::IsMember({"standard", "utterance_weights", "token_weights"}));
    app->add_option("--seeds", seeds, "Comma-separated root seeds, one replicate each")
        ->delimiter(',')->capture_default_str();
    app->add_option("--workers", workers, "Parallel training runs (0: one per hardware thread)")
        ->capture_default_str()->check(CLI::NonNegativeNumber);
    app->add_flag("--quiet", quiet, "Do not print the summary table");
    training.add(app);
  }

  ExperimentSettings settings(const Vocab &vocab) const {
    ExperimentSettings s;
    s.training = training.config(vocab.feature_dim(), vocab.size());
    s.alpha_grid = alpha_grid;
    s.modes.clear();
    for (const auto &m : modes) s.modes.push_back(weighting_mode_from_string(m));
    s.seeds = seeds;
    s.max_symbols_per_frame = training.max_symbols;
    s.workers = workers;
    return s;
  }
};

Provenance provenance_for(const std::string &command, const json &config, std::uint64_t seed) {
  Provenance p;
  p.command = command;
  p.config_hash = config_hash(config);
  p.seed = seed;
  return p;
}

void write_checkpoint(const std::string &path, const TransducerModel &model,
                      const AdamState *optimizer, const Provenance &provenance) {
  json j = checkpoint_to_json(model, optimizer);
  j["provenance"] = to_json(provenance);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump() << '\n';
}

// gen-data

struct GenData {
  std::string out;
  SyntheticSpec spec;

  void add(CLI::App *app) {
    app->add_option("--out", out, "Directory for vocab.json and the split files")
        ->required()->check(kCreatableDir);
    app->add_option("--seed", spec.seed, "Root seed")->capture_default_str();
    app->add_option("--vocab-size", spec.vocab_size, "Number of tokens |V|")->capture_default_str();
    app->add_option("--feature-dim", spec.feature_dim, "Feature dimension D")->capture_default_str();
    app->add_option("--min-tokens", spec.min_tokens, "Shortest transcript")->capture_default_str();
    app->add_option("--max-tokens", spec.max_tokens, "Longest transcript")->capture_default_str();
    app->add_option("--min-frames", spec.min_frames_per_token, "Fewest frames per token")
        ->capture_default_str();
    app->add_option("--max-frames", spec.max_frames_per_token, "Most frames per token")
        ->capture_default_str();
    app->add_option("--noise", spec.noise, "Standard deviation of per-frame Gaussian noise")
        ->capture_default_str();
    app->add_option("--prototype-scale", spec.prototype_scale,
                    "Standard deviation of token prototype entries")
        ->capture_default_str();
    app->add_flag("--allow-adjacent-repeats", spec.allow_adjacent_repeats,
                  "Allow a token to follow itself in clean transcripts");
    const char *help[] = {"Utterances in the pretrain split", "Utterances in the train split",
                          "Utterances in the unlabeled split",
                          "Utterances in the validation split", "Utterances in the test split"};
    for (size_t s = 0; s < split_names().size(); ++s)
      app->add_option("--" + split_names()[s], spec.split_sizes[s], help[s])
          ->capture_default_str();
  }

  int run() const {
    const auto corpus = generate_synthetic_dataset(spec);
    write_synthetic_corpus(out, corpus, provenance_for("gen-data", spec.to_json(), spec.seed),
                           spec);
    json summary{{"out", out}, {"vocab_size", spec.vocab_size}};
    for (size_t s = 0; s < split_names().size(); ++s) {
      int tokens = 0;
      for (const auto &u : corpus.splits[s]) tokens += static_cast<int>(u.tokens.size());
      summary["splits"][split_names()[s]] = {{"utterances", corpus.splits[s].size()},
                                             {"tokens", tokens}};
    }
    print_json_line(summary);
    return 0;
  }
};

// train

struct Train {
  std::string data, out, labeled, validation, loss_trace;
  std::string mode = "standard";
  double alpha = 1.0;
  double labeled_fraction = 0.1;
  std::uint64_t seed = 0;
  TrainingFlags training;

  void add(CLI::App *app) {
    app->add_option("--data", data, "Training set (JSON lines); pseudo-labeled when --labeled is set")
        ->required()->check(CLI::ExistingFile);
    app->add_option("--out", out, "Checkpoint to write")->required()->check(kParentExists);
    app->add_option("--labeled", labeled, "Labeled set mixed into every batch")
        ->check(CLI::ExistingFile);
    app->add_option("--labeled-fraction", labeled_fraction,
                    "Probability that a batch slot draws from --labeled")
        ->capture_default_str();
    app->add_option("--validation", validation, "Held-out set to report WER on")
        ->check(CLI::ExistingFile);
    app->add_option("--loss-trace", loss_trace, "Write per-batch losses as JSON")
        ->check(kParentExists);
    app->add_option("--mode", mode, "Training objective")
        ->capture_default_str()
        ->check(CLI::IsMember({"standard", "utterance_weights", "token_weights"}));
    app->add_option("--alpha", alpha, "Confidence exponent for weighted modes")
        ->capture_default_str();
    app->add_option("--seed", seed, "Seed for initialisation and batch order")
        ->capture_default_str();
    training.add(app);
  }

  int run() const {
    Dataset d = read_dataset(data);
    TrainingConfig cfg = training.config(d.feature_dim, d.vocab_size);
    cfg.mode = weighting_mode_from_string(mode);
    cfg.weights.alpha = alpha;
    cfg.seed = seed;
    cfg.labeled_fraction = labeled_fraction;
    TrainingResult r;
    if (!labeled.empty()) {
      Dataset l = read_dataset(labeled);
      if (l.vocab_size != d.vocab_size || l.feature_dim != d.feature_dim)
        throw DataError("--labeled and --data have different vocabularies");
      r = train_model_mixed(l.utterances, d.utterances, cfg);
    } else {
      r = train_model(d.utterances, cfg);
    }
    if (!loss_trace.empty()) {
      std::ofstream trace(loss_trace, std::ios::binary);
      trace << json{{"batch_losses", r.batch_losses}}.dump() << '\n';
    }
    if (r.diverged) throw NumericalError("training diverged: " + r.failure);
    write_checkpoint(out, r.model, &r.optimizer, provenance_for("train", cfg.to_json(), seed));
    json summary{{"checkpoint", out},
                 {"batches", r.batch_losses.size()},
                 {"final_loss", r.batch_losses.empty() ? 0.0 : r.batch_losses.back()}};
    if (!validation.empty()) {
      Dataset v = read_dataset(validation);
      summary["validation_wer"] = evaluate_wer(r.model, v.utterances, training.max_symbols);
    }
    print_json_line(summary);
    return 0;
  }
};

// decode

struct Decode {
  std::string model, in, out;
  int max_symbols = 4;

  void add(CLI::App *app) {
    app->add_option("--model", model, "Checkpoint")->required()->check(CLI::ExistingFile);
    app->add_option("--in", in, "Utterances to decode (JSON lines)")
        ->required()->check(CLI::ExistingFile);
    app->add_option("--out", out, "Hypotheses as a dataset file")
        ->required()->check(kParentExists);
    app->add_option("--max-symbols", max_symbols, "Greedy decoding cap on tokens per frame")
        ->capture_default_str()->check(CLI::PositiveNumber);
  }

  int run() const {
    const auto m = load_checkpoint(model);
    Dataset d = read_dataset(in);
    if (m.dims().feature_dim != d.feature_dim || m.dims().vocab_size != d.vocab_size)
      throw DataError("checkpoint dimensions do not match " + in);
    std::vector<LabelSequence> refs, hyps;
    int unfinished = 0;
    for (auto &u : d.utterances) {
      refs.push_back(u.tokens);
      auto r = greedy_decode(m, u.features, max_symbols);
      unfinished += !r.done;
      u.tokens = r.tokens;
      hyps.push_back(r.tokens);
      u.confidences.reset();
      u.lambdas.reset();
    }
    d.provenance = provenance_for("decode", json{{"model", model}, {"max_symbols", max_symbols}},
                                  0);
    write_dataset(out, d);
    json summary{{"out", out}, {"utterances", d.utterances.size()},
                 {"hit_symbol_cap", unfinished}};
    EditCounts c;
    try {
      summary["wer_vs_input_tokens"] = corpus_wer(hyps, refs, &c);
      summary["edits"] = {{"sub", c.substitutions}, {"ins", c.insertions}, {"del", c.deletions}};
    } catch (const DataError &) {
      summary["wer_vs_input_tokens"] = nullptr;
    }
    print_json_line(summary);
    return 0;
  }
};

// score-confidence

struct ScoreConfidence {
  std::string model, in, out, profiles;
  std::optional<double> lambda_alpha;
  std::string lambda_normalization = "per_batch";

  void add(CLI::App *app) {
    app->add_option("--model", model, "Teacher checkpoint")->required()->check(CLI::ExistingFile);
    app->add_option("--in", in, "Utterances whose tokens are scored")
        ->required()->check(CLI::ExistingFile);
    app->add_option("--out", out, "Dataset with confidences attached")
        ->required()->check(kParentExists);
    app->add_option("--profiles", profiles,
                    "Also write one conditional profile per line "
                    "{id, conditionals, final_blank_logp}")
        ->check(kParentExists);
    app->add_option("--lambda-alpha", lambda_alpha,
                    "Also store token weights c^alpha / mean(c^alpha) as \"lambda\"");
    app->add_option("--lambda-normalization", lambda_normalization,
                    "Scope of the mean for --lambda-alpha (per_batch: the whole file)")
        ->capture_default_str()->check(CLI::IsMember({"per_batch", "per_utterance"}));
  }

  int run() const {
    const auto teacher = load_checkpoint(model);
    Dataset d = read_dataset(in);
    if (teacher.dims().feature_dim != d.feature_dim || teacher.dims().vocab_size != d.vocab_size)
      throw DataError("checkpoint dimensions do not match " + in);
    d.utterances = score_confidences(teacher, d.utterances);
    if (lambda_alpha) {
      std::vector<std::vector<double>> conf;
      for (const auto &u : d.utterances) conf.push_back(*u.confidences);
      WeightConfig wc{*lambda_alpha, 1.0, normalization_from_string(lambda_normalization)};
      const auto w = compute_weights(conf, wc);
      for (size_t i = 0; i < w.size(); ++i) d.utterances[i].lambdas = w[i].lambdas;
    }
    json cfg{{"model", model}, {"lambda_alpha", lambda_alpha ? json(*lambda_alpha) : json()},
             {"lambda_normalization", lambda_normalization}};
    d.provenance = provenance_for("score-confidence", cfg, 0);
    write_dataset(out, d);
    if (!profiles.empty()) {
      std::ofstream p(profiles, std::ios::binary);
      if (!p) throw DataError("cannot write " + profiles);
      for (const auto &u : d.utterances) {
        json j{{"id", u.id}};
        if (u.tokens.empty()) {
          j["conditionals"] = json::array();
          j["final_blank_logp"] =
              -rnnt_loss(model_forward(teacher, u.features, u.tokens), u.tokens);
        } else {
          j.update(profile_to_json(
              conditional_profile(model_forward(teacher, u.features, u.tokens), u.tokens)));
        }
        p << j.dump() << '\n';
      }
    }
    double sum = 0;
    int n = 0;
    for (const auto &u : d.utterances)
      for (double c : *u.confidences) sum += c, ++n;
    print_json_line({{"out", out}, {"tokens", n}, {"mean_confidence", n ? sum / n : 0.0}});
    return 0;
  }
};

// corrupt

struct Corrupt {
  std::string in, out, vocab;
  double error_rate = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> types{"repeat", "omit", "substitute"};
  std::string substitution = "nearest";
  bool allow_omit_next_to_repeat = false;

  void add(CLI::App *app) {
    app->add_option("--in", in, "Clean dataset")->required()->check(CLI::ExistingFile);
    app->add_option("--out", out, "Corrupted dataset")->required()->check(kParentExists);
    app->add_option("--error-rate", error_rate, "Probability that a token is corrupted")
        ->required()->check(CLI::Range(0.0, 1.0));
    app->add_option("--seed", seed, "Root seed")->capture_default_str();
    app->add_option("--types", types, "Comma-separated error types to draw from")
        ->delimiter(',')->capture_default_str()
        ->check(CLI::IsMember({"repeat", "omit", "substitute"}));
    app->add_option("--substitution", substitution,
                    "Substitute choice: nearest prototype or uniform over other tokens")
        ->capture_default_str()->check(CLI::IsMember({"nearest", "uniform"}));
    app->add_option("--vocab", vocab,
                    "Prototype file for nearest substitution (default: vocab.json beside --in)")
        ->check(CLI::ExistingFile);
    app->add_flag("--allow-omit-next-to-repeat", allow_omit_next_to_repeat,
                  "Do not redraw an omission adjacent to a repetition");
  }

  int run() const {
    Dataset d = read_dataset(in);
    CorruptionConfig cc;
    cc.error_rate = error_rate;
    cc.rng_seed = seed;
    cc.error_types.clear();
    for (const auto &t : types) cc.error_types.push_back(error_type_from_string(t));
    cc.metric = substitution_metric_from_string(substitution);
    cc.separate_omit_repeat = !allow_omit_next_to_repeat;
    cc.validate();

    SubstitutionTable table = SubstitutionTable::uniform(std::max(d.vocab_size, 2));
    if (cc.metric == SubstitutionMetric::kNearestPrototype) {
      std::string vpath = vocab;
      if (vpath.empty()) {
        auto sibling = std::filesystem::path(in).parent_path() / "vocab.json";
        if (std::filesystem::is_regular_file(sibling)) vpath = sibling.string();
      }
      const bool substitutes =
          error_rate > 0 && std::find(cc.error_types.begin(), cc.error_types.end(),
                                      ErrorType::kSubstitute) != cc.error_types.end();
      if (!vpath.empty()) {
        Vocab v = read_vocab(vpath);
        if (v.size() != d.vocab_size) throw DataError(vpath + " does not match " + in);
        table = SubstitutionTable::nearest(v.prototypes);
      } else if (substitutes) {
        throw ConfigError("nearest substitution needs --vocab (no vocab.json beside --in)");
      }
    }
    std::vector<LabelSequence> refs, hyps;
    for (const auto &u : d.utterances) refs.push_back(u.tokens);
    d.utterances = corrupt_utterances(d.utterances, cc, table);
    for (const auto &u : d.utterances) hyps.push_back(u.tokens);
    json types_j = json::array();
    for (auto t : cc.error_types) types_j.push_back(to_string(t));
    json cfg{{"error_rate", error_rate},
             {"types", types_j},
             {"substitution", substitution},
             {"separate_omit_repeat", cc.separate_omit_repeat},
             {"seed", seed}};
    d.provenance = provenance_for("corrupt", cfg, seed);
    write_dataset(out, d);
    EditCounts c;
    const double measured = corpus_wer(hyps, refs, &c);
    print_json_line({{"out", out},
                     {"reference_wer", measured},
                     {"edits", {{"sub", c.substitutions}, {"ins", c.insertions},
                                {"del", c.deletions}}},
                     {"reference_tokens", c.ref_length}});
    return 0;
  }
};

// run-corruption

struct RunCorruption {
  ExperimentFlags exp;
  std::vector<double> levels{0.1, 0.2, 0.3, 0.4};
  std::vector<std::string> types{"repeat", "omit", "substitute"};
  std::string substitution = "nearest";
  bool allow_omit_next_to_repeat = false;

  void add(CLI::App *app) {
    exp.add(app);
    app->add_option("--levels", levels, "Comma-separated corruption rates")
        ->delimiter(',')->capture_default_str()->check(CLI::Range(0.0, 1.0));
    app->add_option("--types", types, "Comma-separated error types")
        ->delimiter(',')->capture_default_str()
        ->check(CLI::IsMember({"repeat", "omit", "substitute"}));
    app->add_option("--substitution", substitution, "nearest or uniform")
        ->capture_default_str()->check(CLI::IsMember({"nearest", "uniform"}));
    app->add_flag("--allow-omit-next-to-repeat", allow_omit_next_to_repeat,
                  "Do not redraw an omission adjacent to a repetition");
  }

  int run() const {
    const auto splits = load_splits(exp.data);
    CorruptionExperimentConfig cfg;
    cfg.settings = exp.settings(splits.vocab);
    cfg.levels = levels;
    cfg.error_types.clear();
    for (const auto &t : types) cfg.error_types.push_back(error_type_from_string(t));
    cfg.metric = substitution_metric_from_string(substitution);
    cfg.separate_omit_repeat = !allow_omit_next_to_repeat;
    const auto report = run_corruption_experiment(splits, cfg);
    write_report(exp.out, report);
    if (!exp.quiet) print_report_table(std::cout, report);
    return 0;
  }
};

// run-pseudolabel

struct RunPseudolabel {
  ExperimentFlags exp;
  int rounds = 3;
  std::vector<double> ratio{1, 9};
  bool control = false;

  void add(CLI::App *app) {
    exp.add(app);
    exp.training.steps = 1000;
    app->add_option("--rounds", rounds, "Pseudo-labeling generations")
        ->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--ratio", ratio, "Labeled:pseudo-labeled share of each batch, e.g. 1:9")
        ->delimiter(':')->expected(2)->capture_default_str()->check(CLI::NonNegativeNumber);
    app->add_flag("--clean-teacher-control", control,
                  "Also train token-weight students on the true unlabeled transcripts");
  }

  int run() const {
    const auto splits = load_splits(exp.data);
    GenerationConfig cfg;
    cfg.settings = exp.settings(splits.vocab);
    cfg.rounds = rounds;
    cfg.labeled_share = ratio.at(0);
    cfg.pseudo_share = ratio.at(1);
    cfg.clean_teacher_control = control;
    const auto report = run_pseudo_labeling(splits, cfg);
    write_report(exp.out, report);
    if (!exp.quiet) print_report_table(std::cout, report);
    return 0;
  }
};

// loss-check

struct LossCheck {
  std::string lattice;
  std::vector<double> lambdas;
  double final_blank_weight = 1.0;
  long max_paths = 200000;
  bool as_json = false;

  void add(CLI::App *app) {
    app->add_option("--lattice", lattice,
                    "Lattice file {t, u, v, logp, labels[, expected_loss]}")
        ->required()->check(CLI::ExistingFile);
    app->add_option("--lambdas", lambdas, "Comma-separated token weights (default all 1)")
        ->delimiter(',');
    app->add_option("--final-blank-weight", final_blank_weight, "Weight of the sentence-end term")
        ->capture_default_str();
    app->add_option("--max-paths", max_paths, "Run the enumeration oracle up to this many paths")
        ->capture_default_str();
    app->add_flag("--json", as_json, "Print one JSON object instead of text");
  }

  int run() const {
    const auto inst = read_lattice_instance(lattice);
    const auto &lat = inst.lattice;
    const auto &y = inst.labels;
    if (!lat.is_normalized(1e-9))
      throw DataError("lattice rows are not normalised (max error " +
                      std::to_string(lat.max_normalization_error()) + ")");
    const int T = lat.frames(), U = lat.labels();
    std::vector<double> w = lambdas.empty() ? std::vector<double>(U, 1.0) : lambdas;
    const double loss = rnnt_loss(lat, y);
    const double weighted = weighted_rnnt_loss(lat, y, std::span<const double>(w),
                                               final_blank_weight);
    json out{{"t", T}, {"u", U}, {"v", lat.vocab_size()}, {"loss", loss},
             {"weighted_loss", weighted}, {"lambdas", w}};
    if (U > 0) out.update(profile_to_json(conditional_profile(lat, y)));
    const std::uint64_t paths = oracle::binomial(T + U - 1, U);
    out["paths"] = paths;
    std::optional<double> oracle_loss;
    if (paths <= static_cast<std::uint64_t>(max_paths)) {
      oracle_loss = -oracle::exact_sequence_logp(lat, y);
      out["oracle_loss"] = *oracle_loss;
      out["oracle_conditionals"] = U > 0 ? json(oracle::exact_conditionals(lat, y)) : json::array();
    }
    if (inst.expected_loss) out["expected_loss"] = *inst.expected_loss;

    if (as_json) {
      std::cout << out.dump(1) << '\n';
    } else {
      char buf[128];
      std::printf("lattice       T=%d U=%d |V|=%d, %llu alignment paths\n", T, U,
                  lat.vocab_size(), static_cast<unsigned long long>(paths));
      std::snprintf(buf, sizeof buf, "%.12f", loss);
      std::cout << "loss          " << buf << '\n';
      if (oracle_loss) {
        std::snprintf(buf, sizeof buf, "%.12f", *oracle_loss);
        std::cout << "oracle loss   " << buf << '\n';
      } else {
        std::cout << "oracle loss   skipped (more than " << max_paths << " paths)\n";
      }
      if (inst.expected_loss) {
        std::snprintf(buf, sizeof buf, "%.12f", *inst.expected_loss);
        std::cout << "expected loss " << buf << '\n';
      }
      if (U > 0) {
        const auto c = out["conditionals"].get<std::vector<double>>();
        for (int u = 0; u < U; ++u) {
          std::snprintf(buf, sizeof buf, "c_%-3d         %.12f", u + 1, c[u]);
          std::cout << buf;
          if (out.contains("oracle_conditionals")) {
            std::snprintf(buf, sizeof buf, "   oracle %.12f",
                          out["oracle_conditionals"][u].get<double>());
            std::cout << buf;
          }
          std::cout << '\n';
        }
        std::snprintf(buf, sizeof buf, "%.12f", out["final_blank_logp"].get<double>());
        std::cout << "final blank   " << buf << " (log)\n";
      }
      std::snprintf(buf, sizeof buf, "%.12f", weighted);
      std::cout << "weighted loss " << buf << '\n';
    }
    if (oracle_loss && std::abs(*oracle_loss - loss) > 1e-10)
      throw NumericalError("loss disagrees with the enumeration oracle");
    if (inst.expected_loss && std::abs(*inst.expected_loss - loss) > 1e-10)
      throw NumericalError("loss disagrees with expected_loss in the lattice file");
    return 0;
  }
};

// report

struct Report {
  std::string in;
  bool as_json = false;

  void add(CLI::App *app) {
    app->add_option("--in", in, "Report JSON from run-corruption or run-pseudolabel")
        ->required()->check(CLI::ExistingFile);
    app->add_flag("--json", as_json, "Re-emit the parsed report as JSON");
  }

  int run() const {
    const auto r = read_report(in);
    if (as_json) {
      std::cout << to_json(r).dump(1) << '\n';
    } else {
      print_report_table(std::cout, r);
    }
    return 0;
  }
};

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::kConfig: return 2;
    case ErrorKind::kData: return 3;
    case ErrorKind::kNumerical: return 4;
  }
  return 1;
}

const char *kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kData: return "data";
    case ErrorKind::kNumerical: return "numerical";
  }
  return "internal";
}

int fail(const char *kind, int code, const std::string &message) {
  std::cerr << json{{"error", kind}, {"exit_code", code}, {"message", message}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Token-weighted transducer training toolkit"};
  app.set_config("--config", "", "INI file of option values; [subcommand] sections, "
                 "unknown keys are rejected");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kCodeVersion));

  GenData gen_data;
  Train train;
  Decode decode;
  ScoreConfidence score;
  Corrupt corrupt;
  RunCorruption run_corruption;
  RunPseudolabel run_pseudolabel;
  LossCheck loss_check;
  Report report;

  struct Entry {
    CLI::App *app;
    std::function<int()> run;
  };
  std::vector<Entry> entries;
  auto add = [&](const char *name, const char *help, auto &cmd) {
    CLI::App *sub = app.add_subcommand(name, help);
    cmd.add(sub);
    entries.push_back({sub, [&cmd] { return cmd.run(); }});
  };
  add("gen-data", "Generate a synthetic corpus (vocab.json plus five splits)", gen_data);
  add("train", "Train a transducer and write a checkpoint", train);
  add("decode", "Greedy-decode utterances with a checkpoint", decode);
  add("score-confidence", "Attach teacher token confidences to a dataset", score);
  add("corrupt", "Corrupt transcripts with repeat/omit/substitute errors", corrupt);
  add("run-corruption", "Corruption experiment with degradation recovery", run_corruption);
  add("run-pseudolabel", "Iterative pseudo-labeling experiment", run_pseudolabel);
  add("loss-check", "Loss, conditionals and oracle comparison for a lattice file", loss_check);
  add("report", "Print the summary table of an experiment report", report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    return fail("config", 2, e.what());
  }

  try {
    for (auto &e : entries)
      if (e.app->parsed()) return e.run();
    return fail("config", 2, "no subcommand given");
  } catch (const Error &e) {
    return fail(kind_name(e.kind()), exit_code(e.kind()), e.what());
  } catch (const std::exception &e) {
    return fail("internal", 1, e.what());
  }
}
