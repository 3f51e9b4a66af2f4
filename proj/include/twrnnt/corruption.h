// twrnnt/corruption.h
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


#ifndef TWRNNT_CORRUPTION_H_
#define TWRNNT_CORRUPTION_H_

#include <cstdint>
#include <string>
#include <vector>

#include "twrnnt/dataset.h"
#include "twrnnt/rng.h"

namespace twrnnt {

enum class ErrorType { kRepeat, kOmit, kSubstitute };
enum class SubstitutionMetric { kNearestPrototype, kUniform };

std::string to_string(ErrorType t);
ErrorType error_type_from_string(const std::string &s);
std::string to_string(SubstitutionMetric m);
SubstitutionMetric substitution_metric_from_string(const std::string &s);

struct CorruptionConfig {
  double error_rate = 0.0;
  std::uint64_t rng_seed = 0;
  std::vector<ErrorType> error_types{ErrorType::kRepeat, ErrorType::kOmit,
                                     ErrorType::kSubstitute};
  SubstitutionMetric metric = SubstitutionMetric::kNearestPrototype;
  // An omission right next to a repetition scores as one substitution
  // rather than two edits.  When set, a draw that would form such a pair is
  // redrawn among the remaining types.
  bool separate_omit_repeat = true;

  void validate() const;
};

/// For each token, the candidates a substitution may pick from.
class SubstitutionTable {
 public:
  /// Nearest distinct prototypes by Euclidean distance (all ties kept).
  static SubstitutionTable nearest(const Eigen::MatrixXd &prototypes);
  /// Every other token.
  static SubstitutionTable uniform(int vocab_size);
  static SubstitutionTable make(SubstitutionMetric m, const Vocab &vocab);

  int vocab_size() const { return static_cast<int>(candidates_.size()); }
  const std::vector<int> &candidates(int token) const { return candidates_.at(token); }

 private:
  std::vector<std::vector<int>> candidates_;
};

/// Per token: with probability error_rate apply one error type drawn
/// uniformly from cfg.error_types.  May return an empty sequence.
LabelSequence corrupt_transcript(const LabelSequence &y, const CorruptionConfig &cfg,
                                 const SubstitutionTable &table, Rng &rng);

/// Utterance n draws from its own stream derive(rng_seed, {corruption, n}).
/// Features, ids and everything else are copied unchanged; stale
/// confidences and lambdas are dropped.
std::vector<Utterance> corrupt_utterances(const std::vector<Utterance> &utts,
                                          const CorruptionConfig &cfg,
                                          const SubstitutionTable &table);

}  // namespace twrnnt

#endif  // TWRNNT_CORRUPTION_H_
