// twrnnt/synthetic.h
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


#ifndef TWRNNT_SYNTHETIC_H_
#define TWRNNT_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "twrnnt/dataset.h"

namespace twrnnt {

inline const std::vector<std::string> &split_names() {
  static const std::vector<std::string> names{"pretrain", "train", "unlabeled",
                                              "validation", "test"};
  return names;
}

struct SyntheticSpec {
  int vocab_size = 10;
  int feature_dim = 8;
  int min_tokens = 3, max_tokens = 8;
  int min_frames_per_token = 1, max_frames_per_token = 3;
  double noise = 0.6;             // stddev of the Gaussian added per frame
  double prototype_scale = 1.0;   // stddev of prototype entries
  bool allow_adjacent_repeats = false;
  std::uint64_t seed = 0;
  // utterances per split, indexed like split_names()
  std::vector<int> split_sizes{300, 500, 500, 200, 300};

  void validate() const;
  nlohmann::json to_json() const;
};

struct SyntheticCorpus {
  Vocab vocab;
  std::vector<std::vector<Utterance>> splits;  // indexed like split_names()

  const std::vector<Utterance> &split(const std::string &name) const;
};

/// Deterministic in spec.seed.  Utterance ids are "<split>-<index>", so
/// splits never share an utterance.
SyntheticCorpus generate_synthetic_dataset(const SyntheticSpec &spec);

/// Writes vocab.json and <split>.jsonl for every split into dir.
void write_synthetic_corpus(const std::string &dir, const SyntheticCorpus &corpus,
                            const Provenance &provenance, const SyntheticSpec &spec);

}  // namespace twrnnt

#endif  // TWRNNT_SYNTHETIC_H_
