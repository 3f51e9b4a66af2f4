// twrnnt/src/weighted_loss.cc
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

#include "twrnnt/weighted_loss.h"

#include <cmath>

namespace twrnnt {

std::string to_string(Normalization n) {
  return n == Normalization::kPerBatch ? "per_batch" : "per_utterance";
}

Normalization normalization_from_string(const std::string &s) {
  if (s == "per_batch") return Normalization::kPerBatch;
  if (s == "per_utterance") return Normalization::kPerUtterance;
  throw ConfigError("unknown normalization '" + s +
                    "' (expected per_batch or per_utterance)");
}

namespace {

void check_confidences(const std::vector<double> &c) {
  for (size_t u = 0; u < c.size(); ++u)
    if (!(c[u] > 0.0) || c[u] > 1.0 + 1e-12)
      throw DataError("confidence c_" + std::to_string(u + 1) + " = " +
                      std::to_string(c[u]) + " outside (0, 1]");
}

// log of mean(exp(alpha * log c)) over the given confidences, fixed order.
double log_mean_power(std::span<const std::vector<double>> groups,
                      double alpha) {
  std::vector<double> terms;
  for (const auto &c : groups)
    for (double v : c) terms.push_back(alpha * std::log(v));
  return log_sum_exp<double>(terms) - std::log(static_cast<double>(terms.size()));
}

}  // namespace

std::vector<TokenWeights> compute_weights(
    std::span<const std::vector<double>> confidences,
    const WeightConfig &config) {
  if (!(config.alpha >= 0.0))
    throw ConfigError("alpha must be non-negative");
  size_t total = 0;
  for (const auto &c : confidences) {
    check_confidences(c);
    total += c.size();
  }
  if (total == 0) throw DataError("weight normalisation scope is empty");

  const double batch_norm = config.normalization == Normalization::kPerBatch
                                ? log_mean_power(confidences, config.alpha)
                                : 0.0;
  std::vector<TokenWeights> out;
  out.reserve(confidences.size());
  for (const auto &c : confidences) {
    TokenWeights w;
    w.source_confidences = c;
    w.config = config;
    if (!c.empty()) {
      const double norm =
          config.normalization == Normalization::kPerBatch
              ? batch_norm
              : log_mean_power(std::span<const std::vector<double>>(&c, 1),
                               config.alpha);
      w.lambdas.reserve(c.size());
      for (double v : c)
        w.lambdas.push_back(std::exp(config.alpha * std::log(v) - norm));
    }
    out.push_back(std::move(w));
  }
  return out;
}

TokenWeights compute_weights(const std::vector<double> &confidences,
                             const WeightConfig &config) {
  return compute_weights(std::span<const std::vector<double>>(&confidences, 1),
                         config)
      .front();
}

std::vector<double> compute_utterance_weights(
    std::span<const std::vector<double>> confidences, double alpha) {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
  if (confidences.empty()) throw DataError("weight normalisation scope is empty");
  std::vector<std::vector<double>> means;
  means.reserve(confidences.size());
  for (const auto &c : confidences) {
    check_confidences(c);
    double mean = 1.0;
    if (!c.empty()) {
      mean = 0.0;
      for (double v : c) mean += v;
      mean /= static_cast<double>(c.size());
    }
    means.push_back({mean});
  }
  const auto per_utt = compute_weights(
      means, WeightConfig{alpha, 1.0, Normalization::kPerBatch});
  std::vector<double> out;
  out.reserve(per_utt.size());
  for (const auto &w : per_utt) out.push_back(w.lambdas.front());
  return out;
}

}  // namespace twrnnt
