// twrnnt/src/dataset.cc
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


#include "twrnnt/dataset.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "twrnnt/rng.h"

namespace twrnnt {

using nlohmann::json;

json to_json(const Provenance &p) {
  return json{{"schema_version", p.schema_version},
              {"code_version", p.code_version},
              {"command", p.command},
              {"config_hash", p.config_hash},
              {"seed", p.seed}};
}

Provenance provenance_from_json(const json &j) {
  Provenance p;
  try {
    p.schema_version = j.at("schema_version").get<int>();
    p.code_version = j.at("code_version").get<std::string>();
    p.command = j.value("command", "");
    p.config_hash = j.value("config_hash", "");
    p.seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception &e) {
    throw DataError(std::string("bad provenance block: ") + e.what());
  }
  if (p.schema_version != kSchemaVersion)
    throw DataError("unsupported schema_version " +
                    std::to_string(p.schema_version));
  return p;
}

std::string config_hash(const json &config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(config.dump())));
  return buf;
}

json matrix_to_json(const Eigen::MatrixXd &m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json &j, const std::string &what) {
  if (!j.is_array()) throw DataError(what + ": expected an array of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json &row = j[r];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw DataError(what + ": ragged row " + std::to_string(r));
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row[c].is_number())
        throw DataError(what + ": non-numeric entry at row " + std::to_string(r));
      m(r, c) = row[c].get<double>();
      if (!std::isfinite(m(r, c)))
        throw DataError(what + ": non-finite entry at row " + std::to_string(r));
    }
  }
  return m;
}

json to_json(const Utterance &u) {
  json j{{"id", u.id}, {"features", matrix_to_json(u.features)}, {"tokens", u.tokens}};
  if (u.confidences) j["confidences"] = *u.confidences;
  if (u.lambdas) j["lambda"] = *u.lambdas;
  return j;
}

Utterance utterance_from_json(const json &j) {
  Utterance u;
  try {
    u.id = j.at("id").get<std::string>();
    u.features = matrix_from_json(j.at("features"), "utterance " + u.id + " features");
    u.tokens = j.at("tokens").get<LabelSequence>();
    if (j.contains("confidences"))
      u.confidences = j["confidences"].get<std::vector<double>>();
    if (j.contains("lambda")) u.lambdas = j["lambda"].get<std::vector<double>>();
  } catch (const json::exception &e) {
    throw DataError(std::string("bad utterance record: ") + e.what());
  }
  return u;
}

void validate_utterance(const Utterance &u, int vocab_size, int feature_dim) {
  const std::string where = "utterance " + u.id + ": ";
  if (u.features.rows() < 1) throw DataError(where + "no frames");
  if (u.features.cols() != feature_dim)
    throw DataError(where + "feature width " + std::to_string(u.features.cols()) +
                    " != " + std::to_string(feature_dim));
  for (int k : u.tokens)
    if (k < 0 || k >= vocab_size)
      throw DataError(where + "token " + std::to_string(k) + " outside vocabulary");
  if (u.confidences && u.confidences->size() != u.tokens.size())
    throw DataError(where + "confidences length differs from tokens");
  if (u.lambdas && u.lambdas->size() != u.tokens.size())
    throw DataError(where + "lambda length differs from tokens");
}

void write_dataset(const std::string &path, const Dataset &data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  json header{{"provenance", to_json(data.provenance)},
              {"vocab_size", data.vocab_size},
              {"feature_dim", data.feature_dim}};
  out << header.dump() << '\n';
  for (const auto &u : data.utterances) out << to_json(u).dump() << '\n';
  if (!out) throw DataError("write failed: " + path);
}

Dataset read_dataset(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  Dataset d;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception &e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!have_header) {
      if (!j.contains("provenance"))
        throw DataError(path + ": first line must be the provenance header");
      d.provenance = provenance_from_json(j["provenance"]);
      try {
        d.vocab_size = j.at("vocab_size").get<int>();
        d.feature_dim = j.at("feature_dim").get<int>();
      } catch (const json::exception &e) {
        throw DataError(path + ": bad header: " + e.what());
      }
      have_header = true;
      continue;
    }
    Utterance u = utterance_from_json(j);
    validate_utterance(u, d.vocab_size, d.feature_dim);
    d.utterances.push_back(std::move(u));
  }
  if (!have_header) throw DataError(path + ": empty dataset file");
  return d;
}

void write_vocab(const std::string &path, const Vocab &vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  json j{{"provenance", to_json(vocab.provenance)},
         {"vocab_size", vocab.size()},
         {"feature_dim", vocab.feature_dim()},
         {"prototypes", matrix_to_json(vocab.prototypes)}};
  out << j.dump(1) << '\n';
}

Vocab read_vocab(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception &e) {
    throw DataError(path + ": " + e.what());
  }
  Vocab v;
  v.provenance = provenance_from_json(j.at("provenance"));
  v.prototypes = matrix_from_json(j.at("prototypes"), path + " prototypes");
  if (v.size() != j.value("vocab_size", -1))
    throw DataError(path + ": vocab_size does not match prototype rows");
  return v;
}

}  // namespace twrnnt
