// twrnnt/src/corruption.cc
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


#include "twrnnt/corruption.h"

#include <algorithm>

namespace twrnnt {

std::string to_string(ErrorType t) {
  switch (t) {
    case ErrorType::kRepeat: return "repeat";
    case ErrorType::kOmit: return "omit";
    case ErrorType::kSubstitute: return "substitute";
  }
  return "?";
}

ErrorType error_type_from_string(const std::string &s) {
  if (s == "repeat") return ErrorType::kRepeat;
  if (s == "omit") return ErrorType::kOmit;
  if (s == "substitute") return ErrorType::kSubstitute;
  throw ConfigError("unknown error type '" + s + "'");
}

std::string to_string(SubstitutionMetric m) {
  return m == SubstitutionMetric::kNearestPrototype ? "nearest" : "uniform";
}

SubstitutionMetric substitution_metric_from_string(const std::string &s) {
  if (s == "nearest") return SubstitutionMetric::kNearestPrototype;
  if (s == "uniform") return SubstitutionMetric::kUniform;
  throw ConfigError("unknown substitution metric '" + s + "'");
}

void CorruptionConfig::validate() const {
  if (!(error_rate >= 0.0 && error_rate <= 1.0))
    throw ConfigError("error_rate must lie in [0, 1]");
  if (error_types.empty()) throw ConfigError("error_types is empty");
}

SubstitutionTable SubstitutionTable::nearest(const Eigen::MatrixXd &prototypes) {
  const int V = static_cast<int>(prototypes.rows());
  if (V < 2) throw ConfigError("substitution needs at least two tokens");
  SubstitutionTable t;
  t.candidates_.resize(V);
  for (int a = 0; a < V; ++a) {
    double best = INFINITY;
    for (int b = 0; b < V; ++b) {
      if (b == a) continue;
      const double d = (prototypes.row(a) - prototypes.row(b)).squaredNorm();
      if (d < best) {
        best = d;
        t.candidates_[a].assign(1, b);
      } else if (d == best) {
        t.candidates_[a].push_back(b);
      }
    }
  }
  return t;
}

SubstitutionTable SubstitutionTable::uniform(int vocab_size) {
  if (vocab_size < 2) throw ConfigError("substitution needs at least two tokens");
  SubstitutionTable t;
  t.candidates_.resize(vocab_size);
  for (int a = 0; a < vocab_size; ++a)
    for (int b = 0; b < vocab_size; ++b)
      if (b != a) t.candidates_[a].push_back(b);
  return t;
}

SubstitutionTable SubstitutionTable::make(SubstitutionMetric m, const Vocab &vocab) {
  return m == SubstitutionMetric::kNearestPrototype ? nearest(vocab.prototypes)
                                                    : uniform(vocab.size());
}

namespace {

bool conflicts(ErrorType prev, ErrorType next) {
  return (prev == ErrorType::kOmit && next == ErrorType::kRepeat) ||
         (prev == ErrorType::kRepeat && next == ErrorType::kOmit);
}

}  // namespace

LabelSequence corrupt_transcript(const LabelSequence &y, const CorruptionConfig &cfg,
                                 const SubstitutionTable &table, Rng &rng) {
  cfg.validate();
  std::bernoulli_distribution hit(cfg.error_rate);
  LabelSequence out;
  out.reserve(y.size() + y.size() / 2);
  bool prev_hit = false;
  ErrorType prev = ErrorType::kSubstitute;
  std::vector<ErrorType> allowed;
  for (int tok : y) {
    if (!hit(rng)) {
      out.push_back(tok);
      prev_hit = false;
      continue;
    }
    allowed = cfg.error_types;
    ErrorType type = allowed[std::uniform_int_distribution<size_t>(0, allowed.size() - 1)(rng)];
    if (cfg.separate_omit_repeat && prev_hit && conflicts(prev, type)) {
      std::erase_if(allowed, [&](ErrorType e) { return conflicts(prev, e); });
      if (!allowed.empty())
        type = allowed[std::uniform_int_distribution<size_t>(0, allowed.size() - 1)(rng)];
    }
    switch (type) {
      case ErrorType::kRepeat:
        out.push_back(tok);
        out.push_back(tok);
        break;
      case ErrorType::kOmit:
        break;
      case ErrorType::kSubstitute: {
        const auto &cands = table.candidates(tok);
        out.push_back(cands[std::uniform_int_distribution<size_t>(0, cands.size() - 1)(rng)]);
        break;
      }
    }
    prev_hit = true;
    prev = type;
  }
  return out;
}

std::vector<Utterance> corrupt_utterances(const std::vector<Utterance> &utts,
                                          const CorruptionConfig &cfg,
                                          const SubstitutionTable &table) {
  cfg.validate();
  std::vector<Utterance> out;
  out.reserve(utts.size());
  for (size_t n = 0; n < utts.size(); ++n) {
    Utterance u = utts[n];
    Rng rng = make_rng(cfg.rng_seed, {kStreamCorruption, n});
    u.tokens = corrupt_transcript(u.tokens, cfg, table, rng);
    u.confidences.reset();
    u.lambdas.reset();
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace twrnnt
