// twrnnt/training.h
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


#ifndef TWRNNT_TRAINING_H_
#define TWRNNT_TRAINING_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "twrnnt/dataset.h"
#include "twrnnt/model.h"
#include "twrnnt/weighted_loss.h"

namespace twrnnt {

enum class WeightingMode { kStandard, kUtteranceWeights, kTokenWeights };
enum class Precision { kFloat64, kFloat32 };

std::string to_string(WeightingMode m);
WeightingMode weighting_mode_from_string(const std::string &s);
std::string to_string(Precision p);
Precision precision_from_string(const std::string &s);

struct TrainingConfig {
  ModelDims dims;
  int epochs = 12;
  // When positive, train for exactly this many batches (epochs continue
  // past `epochs` as needed) so runs on sets of different size get the
  // same number of updates.
  int steps = 0;
  int batch_size = 8;
  AdamHyper adam;
  Precision precision = Precision::kFloat64;
  WeightingMode mode = WeightingMode::kStandard;
  WeightConfig weights;  // alpha, final_blank_weight, normalization
  // Probability that a batch slot draws a labeled utterance when training
  // on labeled plus pseudo-labeled data.
  double labeled_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
};

/*
  Every mode runs through weighted_rnnt_loss_and_grad.

    standard            lambda = 1, final blank weight 1
    utterance_weights   lambda = w_i on every token and on the final blank,
                        w_i the batch-normalised mean confidence ^ alpha
    token_weights       lambda from compute_weights over the batch (or a
                        precomputed "lambda" record), final blank weight
                        from the config

  Utterances without confidences count as fully confident (c = 1).  The
  batch loss is the sum of utterance losses over the number of tokens.
*/
struct BatchResult {
  double loss = 0;
  Eigen::VectorXd grad;
  int tokens = 0;
};

BatchResult batch_loss_and_grad(const TransducerModel &model,
                                std::span<const Utterance *const> batch,
                                const TrainingConfig &config);

struct TrainingResult {
  TransducerModel model;
  AdamState optimizer;
  std::vector<double> batch_losses;
  bool diverged = false;
  std::string failure;
};

/// Adam over shuffled minibatches; stops at the first non-finite loss or
/// gradient and reports the run as diverged.
TrainingResult train_model(const std::vector<Utterance> &data,
                           const TrainingConfig &config);

/// Each epoch has ceil((|labeled| + |pseudo|) / batch) batches; every slot
/// draws from labeled with probability config.labeled_fraction, and each
/// source is walked in a fresh shuffled order, cycling when exhausted.
TrainingResult train_model_mixed(const std::vector<Utterance> &labeled,
                                 const std::vector<Utterance> &pseudo,
                                 const TrainingConfig &config);

std::vector<LabelSequence> decode_all(const TransducerModel &model,
                                      const std::vector<Utterance> &utts,
                                      int max_symbols_per_frame = 4);

/// Corpus token error rate of greedy hypotheses against utts' tokens.
double evaluate_wer(const TransducerModel &model, const std::vector<Utterance> &utts,
                    int max_symbols_per_frame = 4);

/// Teacher conditionals c_u on each utterance's own tokens, stored in
/// confidences (empty for utterances without tokens).
std::vector<Utterance> score_confidences(const TransducerModel &teacher,
                                         const std::vector<Utterance> &utts);

/// Greedy hypotheses become the tokens, with teacher confidences attached.
/// Empty hypotheses are dropped.
std::vector<Utterance> pseudo_label(const TransducerModel &teacher,
                                    const std::vector<Utterance> &utts,
                                    int max_symbols_per_frame = 4);

}  // namespace twrnnt

#endif  // TWRNNT_TRAINING_H_
