// twrnnt/experiment.h
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


#ifndef TWRNNT_EXPERIMENT_H_
#define TWRNNT_EXPERIMENT_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "twrnnt/corruption.h"
#include "twrnnt/dataset.h"
#include "twrnnt/training.h"

namespace twrnnt {

struct ExperimentSplits {
  std::vector<Utterance> pretrain, train, unlabeled, validation, test;
  Vocab vocab;
};

/// Reads vocab.json and the five split files from a gen-data directory.
ExperimentSplits load_splits(const std::string &dir);

/// Settings shared by both experiments.
struct ExperimentSettings {
  TrainingConfig training;  // mode, alpha and seed are set per run
  std::vector<double> alpha_grid{1, 2, 4, 6, 8};
  std::vector<WeightingMode> modes{WeightingMode::kStandard,
                                   WeightingMode::kUtteranceWeights,
                                   WeightingMode::kTokenWeights};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  int max_symbols_per_frame = 4;
  int workers = 1;  // 0: one per hardware thread

  void validate() const;
  nlohmann::json to_json() const;
};

struct CorruptionExperimentConfig {
  ExperimentSettings settings;
  std::vector<double> levels{0.1, 0.2, 0.3, 0.4};
  std::vector<ErrorType> error_types{ErrorType::kRepeat, ErrorType::kOmit,
                                     ErrorType::kSubstitute};
  SubstitutionMetric metric = SubstitutionMetric::kNearestPrototype;
  bool separate_omit_repeat = true;

  void validate() const;
  nlohmann::json to_json() const;
};

struct GenerationConfig {
  ExperimentSettings settings;
  int rounds = 3;
  // labeled : pseudo-labeled share of each batch
  double labeled_share = 1.0, pseudo_share = 9.0;
  // Also train token-weight students on the true unlabeled transcripts
  // scored by the round-0 model, once per alpha.
  bool clean_teacher_control = false;

  double labeled_fraction() const { return labeled_share / (labeled_share + pseudo_share); }
  void validate() const;
  nlohmann::json to_json() const;
};

/// One training run.  WERs are NaN when the run diverged.
struct RunRecord {
  std::string role;  // teacher | clean | student | base | control
  std::string mode;
  double level = 0;
  int round = 0;
  std::optional<double> alpha;
  std::uint64_t seed = 0;
  double validation_wer = 0;
  double test_wer = 0;
  bool selected = false;
  bool diverged = false;
  std::string failure;
  std::vector<double> batch_losses;
};

/// One line of the summary table: a (level, round, mode) cell averaged over
/// seeds, after alpha selection on validation WER.
struct ReportRow {
  std::string mode;
  double level = 0;
  int round = 0;
  std::optional<double> alpha;  // fixed alpha (control rows only)
  std::vector<double> test_wer;                    // per seed
  std::vector<std::optional<double>> chosen_alpha;  // per seed
  double mean_test_wer = 0;
  // (WER_standard - WER_mode) / (WER_standard - WER_clean), seed averages;
  // absent unless the standard run degrades.
  std::optional<double> degradation_recovered;
};

struct ExperimentReport {
  std::string experiment;  // corruption | pseudo_labeling
  Provenance provenance;
  nlohmann::json config;
  nlohmann::json measurements;  // e.g. reference WER of each corruption level
  std::vector<ReportRow> rows;
  std::vector<RunRecord> runs;

  const ReportRow *find(const std::string &mode, double level, int round) const;
};

nlohmann::json to_json(const ExperimentReport &r);
ExperimentReport report_from_json(const nlohmann::json &j);
void write_report(const std::string &path, const ExperimentReport &r);
ExperimentReport read_report(const std::string &path);

/// Human-readable summary: one line per level (corruption) or per mode
/// with a column per round (pseudo-labeling).
void print_report_table(std::ostream &os, const ExperimentReport &r);

/*
  Corruption experiment, per seed:
    teacher   standard training on the pretrain split only
    clean     standard training on the clean train split
    per level corrupt the train references, score them with the teacher,
              train one student per mode (and per alpha for weighted
              modes), pick alpha by validation WER.
  Every run within one seed shares the same initialisation and batch order.
*/
ExperimentReport run_corruption_experiment(const ExperimentSplits &splits,
                                           const CorruptionExperimentConfig &config);

/*
  Iterative pseudo-labeling, per seed:
    round 0   base model on the labeled (train) split
    round r   every mode keeps its own teacher chain: the mode's selected
              round r-1 model decodes the unlabeled split, hypotheses are
              scored with that teacher, and students are trained fresh on
              labeled plus pseudo-labeled data.
*/
ExperimentReport run_pseudo_labeling(const ExperimentSplits &splits,
                                     const GenerationConfig &config);

}  // namespace twrnnt

#endif  // TWRNNT_EXPERIMENT_H_
