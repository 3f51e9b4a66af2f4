// twrnnt/src/training.cc
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


#include "twrnnt/training.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "twrnnt/rng.h"
#include "twrnnt/wer.h"

namespace twrnnt {

std::string to_string(WeightingMode m) {
  switch (m) {
    case WeightingMode::kStandard: return "standard";
    case WeightingMode::kUtteranceWeights: return "utterance_weights";
    case WeightingMode::kTokenWeights: return "token_weights";
  }
  return "?";
}

WeightingMode weighting_mode_from_string(const std::string &s) {
  if (s == "standard") return WeightingMode::kStandard;
  if (s == "utterance_weights") return WeightingMode::kUtteranceWeights;
  if (s == "token_weights") return WeightingMode::kTokenWeights;
  throw ConfigError("unknown mode '" + s + "'");
}

std::string to_string(Precision p) { return p == Precision::kFloat32 ? "float32" : "float64"; }

Precision precision_from_string(const std::string &s) {
  if (s == "float64") return Precision::kFloat64;
  if (s == "float32") return Precision::kFloat32;
  throw ConfigError("unknown precision '" + s + "'");
}

void TrainingConfig::validate() const {
  if (dims.feature_dim < 1 || dims.hidden_dim < 1 || dims.vocab_size < 1)
    throw ConfigError("model dimensions must be positive");
  if (epochs < 0) throw ConfigError("epochs must be nonnegative");
  if (steps < 0) throw ConfigError("steps must be nonnegative");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (!(adam.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(weights.alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
  if (!(weights.final_blank_weight >= 0.0))
    throw ConfigError("final_blank_weight must be non-negative");
  if (!(labeled_fraction >= 0.0 && labeled_fraction <= 1.0))
    throw ConfigError("labeled_fraction must lie in [0, 1]");
}

nlohmann::json TrainingConfig::to_json() const {
  return {{"feature_dim", dims.feature_dim},
          {"hidden_dim", dims.hidden_dim},
          {"vocab_size", dims.vocab_size},
          {"epochs", epochs},
          {"steps", steps},
          {"batch_size", batch_size},
          {"lr", adam.lr},
          {"beta1", adam.beta1},
          {"beta2", adam.beta2},
          {"eps", adam.eps},
          {"precision", to_string(precision)},
          {"mode", to_string(mode)},
          {"alpha", weights.alpha},
          {"final_blank_weight", weights.final_blank_weight},
          {"normalization", to_string(weights.normalization)},
          {"labeled_fraction", labeled_fraction},
          {"seed", seed}};
}

namespace {

std::vector<double> confidences_or_ones(const Utterance &u) {
  if (u.confidences) return *u.confidences;
  return std::vector<double>(u.tokens.size(), 1.0);
}

// Per-utterance (lambdas, final blank weight) for one batch.
std::vector<std::pair<std::vector<double>, double>> batch_weights(
    std::span<const Utterance *const> batch, const TrainingConfig &cfg) {
  std::vector<std::pair<std::vector<double>, double>> out(batch.size());
  switch (cfg.mode) {
    case WeightingMode::kStandard:
      for (size_t i = 0; i < batch.size(); ++i)
        out[i] = {std::vector<double>(batch[i]->tokens.size(), 1.0), 1.0};
      break;
    case WeightingMode::kUtteranceWeights: {
      std::vector<std::vector<double>> conf;
      for (const Utterance *u : batch) conf.push_back(confidences_or_ones(*u));
      const auto w = compute_utterance_weights(conf, cfg.weights.alpha);
      for (size_t i = 0; i < batch.size(); ++i)
        out[i] = {std::vector<double>(batch[i]->tokens.size(), w[i]), w[i]};
      break;
    }
    case WeightingMode::kTokenWeights: {
      const bool precomputed = std::all_of(batch.begin(), batch.end(), [](const Utterance *u) {
        return !u->confidences && u->lambdas;
      });
      if (precomputed) {
        for (size_t i = 0; i < batch.size(); ++i)
          out[i] = {*batch[i]->lambdas, cfg.weights.final_blank_weight};
        break;
      }
      std::vector<std::vector<double>> conf;
      for (const Utterance *u : batch) conf.push_back(confidences_or_ones(*u));
      bool any_tokens = false;
      for (const auto &c : conf) any_tokens |= !c.empty();
      if (!any_tokens) {
        for (size_t i = 0; i < batch.size(); ++i)
          out[i] = {{}, cfg.weights.final_blank_weight};
        break;
      }
      const auto w = compute_weights(conf, cfg.weights);
      for (size_t i = 0; i < batch.size(); ++i)
        out[i] = {w[i].lambdas, cfg.weights.final_blank_weight};
      break;
    }
  }
  return out;
}

template <typename Scalar>
LossAndGrad<double> utterance_loss(const PosteriorLattice<double> &lat, const LabelSequence &y,
                                   const std::vector<double> &lambdas, double fbw) {
  if constexpr (std::is_same_v<Scalar, double>) {
    return weighted_rnnt_loss_and_grad(lat, y, std::span<const double>(lambdas), fbw);
  } else {
    auto r = weighted_rnnt_loss_and_grad(lat.cast<Scalar>(), y,
                                         std::span<const double>(lambdas), fbw);
    return {static_cast<double>(r.loss), r.grad.template cast<double>()};
  }
}

}  // namespace

BatchResult batch_loss_and_grad(const TransducerModel &model,
                                std::span<const Utterance *const> batch,
                                const TrainingConfig &config) {
  BatchResult r;
  r.grad = Eigen::VectorXd::Zero(model.parameters().size());
  const auto weights = batch_weights(batch, config);
  for (size_t i = 0; i < batch.size(); ++i) {
    const Utterance &u = *batch[i];
    ForwardCache cache;
    const auto lat = model_forward(model, u.features, u.tokens, &cache);
    const auto lg = config.precision == Precision::kFloat32
                        ? utterance_loss<float>(lat, u.tokens, weights[i].first, weights[i].second)
                        : utterance_loss<double>(lat, u.tokens, weights[i].first, weights[i].second);
    r.loss += lg.loss;
    r.grad += model_backward(model, cache, lg.grad);
    r.tokens += static_cast<int>(u.tokens.size());
  }
  const double scale = 1.0 / std::max(r.tokens, 1);
  r.loss *= scale;
  r.grad *= scale;
  return r;
}

namespace {

std::vector<size_t> shuffled(size_t n, Rng &rng) {
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

// Draws the batches of one epoch.
using BatchSource = std::function<std::vector<std::vector<const Utterance *>>(int epoch)>;

TrainingResult run_training(const BatchSource &epoch_batches, const TrainingConfig &cfg) {
  TrainingResult res;
  res.model = TransducerModel::random(cfg.dims, derive_seed(cfg.seed, {kStreamInit}));
  const bool by_steps = cfg.steps > 0;
  size_t done = 0;
  for (int epoch = 0; by_steps ? done < static_cast<size_t>(cfg.steps) : epoch < cfg.epochs;
       ++epoch) {
    for (const auto &batch : epoch_batches(epoch)) {
      if (by_steps && done == static_cast<size_t>(cfg.steps)) break;
      ++done;
      BatchResult b;
      try {
        b = batch_loss_and_grad(res.model, batch, cfg);
      } catch (const NumericalError &e) {
        res.diverged = true;
        res.failure = e.what();
        return res;
      }
      res.batch_losses.push_back(b.loss);
      if (!std::isfinite(b.loss) || !b.grad.allFinite()) {
        res.diverged = true;
        res.failure = "non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                      std::to_string(res.batch_losses.size() - 1);
        return res;
      }
      adam_step(res.model.parameters(), res.optimizer, b.grad, cfg.adam);
    }
  }
  return res;
}

void check_data(const std::vector<Utterance> &data, const TrainingConfig &cfg) {
  for (const auto &u : data) validate_utterance(u, cfg.dims.vocab_size, cfg.dims.feature_dim);
}

}  // namespace

TrainingResult train_model(const std::vector<Utterance> &data, const TrainingConfig &config) {
  config.validate();
  if (data.empty()) throw DataError("training set is empty");
  check_data(data, config);
  const size_t B = config.batch_size;
  return run_training(
      [&](int epoch) {
        Rng rng = make_rng(config.seed, {kStreamShuffle, static_cast<std::uint64_t>(epoch)});
        const auto order = shuffled(data.size(), rng);
        std::vector<std::vector<const Utterance *>> batches;
        for (size_t i = 0; i < order.size(); i += B) {
          std::vector<const Utterance *> b;
          for (size_t j = i; j < std::min(i + B, order.size()); ++j) b.push_back(&data[order[j]]);
          batches.push_back(std::move(b));
        }
        return batches;
      },
      config);
}

TrainingResult train_model_mixed(const std::vector<Utterance> &labeled,
                                 const std::vector<Utterance> &pseudo,
                                 const TrainingConfig &config) {
  config.validate();
  if (pseudo.empty()) throw DataError("no pseudo-labeled utterances");
  if (labeled.empty() && config.labeled_fraction > 0)
    throw DataError("labeled set is empty");
  check_data(labeled, config);
  check_data(pseudo, config);
  const size_t B = config.batch_size;
  const size_t slots = labeled.size() + pseudo.size();
  return run_training(
      [&](int epoch) {
        const auto e = static_cast<std::uint64_t>(epoch);
        Rng mix = make_rng(config.seed, {kStreamMixing, e});
        Rng shuf_l = make_rng(config.seed, {kStreamShuffle, e, 0});
        Rng shuf_p = make_rng(config.seed, {kStreamShuffle, e, 1});
        std::vector<size_t> order_l = shuffled(labeled.size(), shuf_l);
        std::vector<size_t> order_p = shuffled(pseudo.size(), shuf_p);
        size_t next_l = 0, next_p = 0;
        std::bernoulli_distribution from_labeled(config.labeled_fraction);
        std::vector<std::vector<const Utterance *>> batches;
        for (size_t i = 0; i < slots; i += B) {
          std::vector<const Utterance *> b;
          for (size_t j = i; j < std::min(i + B, slots); ++j) {
            if (from_labeled(mix)) {
              if (next_l == order_l.size()) next_l = 0;
              b.push_back(&labeled[order_l[next_l++]]);
            } else {
              if (next_p == order_p.size()) next_p = 0;
              b.push_back(&pseudo[order_p[next_p++]]);
            }
          }
          batches.push_back(std::move(b));
        }
        return batches;
      },
      config);
}

std::vector<LabelSequence> decode_all(const TransducerModel &model,
                                      const std::vector<Utterance> &utts,
                                      int max_symbols_per_frame) {
  std::vector<LabelSequence> hyps;
  hyps.reserve(utts.size());
  for (const auto &u : utts)
    hyps.push_back(greedy_decode(model, u.features, max_symbols_per_frame).tokens);
  return hyps;
}

double evaluate_wer(const TransducerModel &model, const std::vector<Utterance> &utts,
                    int max_symbols_per_frame) {
  std::vector<LabelSequence> refs;
  refs.reserve(utts.size());
  for (const auto &u : utts) refs.push_back(u.tokens);
  return corpus_wer(decode_all(model, utts, max_symbols_per_frame), refs);
}

std::vector<Utterance> score_confidences(const TransducerModel &teacher,
                                         const std::vector<Utterance> &utts) {
  std::vector<Utterance> out = utts;
  for (auto &u : out) {
    std::vector<double> c;
    if (!u.tokens.empty()) {
      const auto profile = conditional_profile(model_forward(teacher, u.features, u.tokens),
                                               u.tokens);
      const Eigen::VectorXd cond = profile.conditionals();
      for (Eigen::Index i = 0; i < cond.size(); ++i) c.push_back(std::min(cond(i), 1.0));
    }
    u.confidences = std::move(c);
    u.lambdas.reset();
  }
  return out;
}

std::vector<Utterance> pseudo_label(const TransducerModel &teacher,
                                    const std::vector<Utterance> &utts,
                                    int max_symbols_per_frame) {
  std::vector<Utterance> labeled;
  for (const auto &u : utts) {
    Utterance p = u;
    p.tokens = greedy_decode(teacher, u.features, max_symbols_per_frame).tokens;
    if (p.tokens.empty()) continue;
    labeled.push_back(std::move(p));
  }
  return score_confidences(teacher, labeled);
}

}  // namespace twrnnt
