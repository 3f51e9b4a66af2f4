// twrnnt/dataset.h
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


#ifndef TWRNNT_DATASET_H_
#define TWRNNT_DATASET_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "twrnnt/common.h"

namespace twrnnt {

struct Utterance {
  std::string id;
  Eigen::MatrixXd features;  // frames x feature_dim
  LabelSequence tokens;
  std::optional<std::vector<double>> confidences;
  std::optional<std::vector<double>> lambdas;

  int frames() const { return static_cast<int>(features.rows()); }
};

/// Where an artifact came from.  Written as the first line of every dataset
/// file and embedded in reports.
struct Provenance {
  int schema_version = kSchemaVersion;
  std::string code_version = kCodeVersion;
  std::string command;
  std::string config_hash;  // 16 hex digits of fnv1a(canonical config)
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const Provenance &p);
Provenance provenance_from_json(const nlohmann::json &j);

/// fnv1a of the compact dump, as 16 lowercase hex digits.
std::string config_hash(const nlohmann::json &config);

struct Dataset {
  Provenance provenance;
  int vocab_size = 0;
  int feature_dim = 0;
  std::vector<Utterance> utterances;
};

nlohmann::json to_json(const Utterance &u);
Utterance utterance_from_json(const nlohmann::json &j);

/// Checks tokens against vocab_size, feature width, and that confidences
/// and lambdas (when present) have one entry per token.
void validate_utterance(const Utterance &u, int vocab_size, int feature_dim);

/// JSON lines: a header {"provenance":…, "vocab_size":…, "feature_dim":…}
/// followed by one utterance per line.
void write_dataset(const std::string &path, const Dataset &data);
Dataset read_dataset(const std::string &path);

/// Token prototype vectors, one row per token.
struct Vocab {
  Eigen::MatrixXd prototypes;  // vocab_size x feature_dim
  Provenance provenance;

  int size() const { return static_cast<int>(prototypes.rows()); }
  int feature_dim() const { return static_cast<int>(prototypes.cols()); }
};

void write_vocab(const std::string &path, const Vocab &vocab);
Vocab read_vocab(const std::string &path);

nlohmann::json matrix_to_json(const Eigen::MatrixXd &m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json &j, const std::string &what);

}  // namespace twrnnt

#endif  // TWRNNT_DATASET_H_
