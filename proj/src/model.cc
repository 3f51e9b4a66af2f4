// twrnnt/src/model.cc
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

#include "twrnnt/model.h"

#include <cmath>
#include <fstream>
#include <memory>

#include "twrnnt/rng.h"

namespace twrnnt {

ParameterLayout::ParameterLayout(const ModelDims &d) {
  if (d.feature_dim < 1 || d.hidden_dim < 1 || d.vocab_size < 1)
    throw ConfigError("model dimensions must be positive");
  const Eigen::Index H = d.hidden_dim, D = d.feature_dim,
                     V1 = d.vocab_size + 1;
  Eigen::Index off = 0;
  encoder_weight = off;   off += H * D;
  encoder_bias = off;     off += H;
  embedding = off;        off += V1 * H;
  predictor_weight = off; off += H * H;
  predictor_bias = off;   off += H;
  output_weight = off;    off += V1 * H;
  output_bias = off;      off += V1;
  size = off;
}

TransducerModel::TransducerModel(const ModelDims &dims)
    : dims_(dims), params_(Eigen::VectorXd::Zero(parameter_count(dims))) {}

TransducerModel TransducerModel::random(const ModelDims &dims,
                                        std::uint64_t seed) {
  TransducerModel model(dims);
  Rng rng = make_rng(seed, {kStreamInit});
  std::normal_distribution<double> normal(0.0, 1.0);
  ParameterSlices<double *> p(model.params_.data(), dims);
  auto fill = [&](auto &m, double scale) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = scale * normal(rng);
  };
  fill(p.encoder_weight, 1.0 / std::sqrt(dims.feature_dim));
  fill(p.embedding, 1.0);
  fill(p.predictor_weight, 1.0 / std::sqrt(dims.hidden_dim));
  fill(p.output_weight, 1.0 / std::sqrt(dims.hidden_dim));
  return model;
}

namespace {

void check_features(const TransducerModel &model,
                    const Eigen::MatrixXd &features) {
  if (features.rows() < 1) throw DataError("utterance has no frames");
  if (features.cols() != model.dims().feature_dim)
    throw DataError("feature dim " + std::to_string(features.cols()) +
                    " does not match model feature dim " +
                    std::to_string(model.dims().feature_dim));
}

Eigen::MatrixXd encode(const ParameterSlices<const double *> &p,
                       const Eigen::MatrixXd &features) {
  Eigen::MatrixXd pre = features * p.encoder_weight.transpose();
  pre.rowwise() += p.encoder_bias.transpose();
  return pre.array().tanh().matrix();
}

Eigen::MatrixXd predict(const ParameterSlices<const double *> &p,
                        const std::vector<int> &inputs) {
  Eigen::MatrixXd emb(inputs.size(), p.embedding.cols());
  for (size_t i = 0; i < inputs.size(); ++i)
    emb.row(static_cast<Eigen::Index>(i)) = p.embedding.row(inputs[i]);
  Eigen::MatrixXd pre = emb * p.predictor_weight.transpose();
  pre.rowwise() += p.predictor_bias.transpose();
  return pre.array().tanh().matrix();
}

Vector<double> log_softmax(const Eigen::VectorXd &logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

}  // namespace

PosteriorLattice<double> model_forward(const TransducerModel &model,
                                       const Eigen::MatrixXd &features,
                                       const LabelSequence &tokens,
                                       ForwardCache *cache) {
  check_features(model, features);
  const ModelDims &d = model.dims();
  for (int k : tokens)
    if (k < 0 || k >= d.vocab_size)
      throw DataError("token " + std::to_string(k) + " outside vocabulary");
  const auto p = model.slices();
  const int T = static_cast<int>(features.rows());
  const int U = static_cast<int>(tokens.size());

  std::vector<int> inputs{d.vocab_size};
  inputs.insert(inputs.end(), tokens.begin(), tokens.end());
  Eigen::MatrixXd enc = encode(p, features);
  Eigen::MatrixXd pred = predict(p, inputs);

  Eigen::MatrixXd joint(static_cast<Eigen::Index>(T) * (U + 1), d.hidden_dim);
  for (int t = 0; t < T; ++t)
    for (int u = 0; u <= U; ++u)
      joint.row(static_cast<Eigen::Index>(t) * (U + 1) + u) =
          (enc.row(t) + pred.row(u)).array().tanh();

  Table<double> logits = joint * p.output_weight.transpose();
  logits.rowwise() += p.output_bias.transpose();
  auto lattice = normalize_logits(T, U, d.vocab_size, logits);

  if (cache) {
    cache->encoder = std::move(enc);
    cache->predictor = std::move(pred);
    cache->joint = std::move(joint);
    cache->predictor_inputs = std::move(inputs);
    cache->features = features;
    cache->lattice = lattice;
  }
  return lattice;
}

Eigen::VectorXd model_backward(const TransducerModel &model,
                               const ForwardCache &cache,
                               const Table<double> &dloss_dlogp) {
  const ModelDims &d = model.dims();
  const auto &lat = cache.lattice;
  if (dloss_dlogp.rows() != lat.table().rows() ||
      dloss_dlogp.cols() != lat.table().cols())
    throw DataError("lattice gradient shape does not match forward pass");
  const int T = lat.frames(), U = lat.labels();
  const auto p = model.slices();

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.parameters().size());
  ParameterSlices<double *> g(grad.data(), d);

  // log-softmax backward: dz = G - softmax * rowsum(G).
  Eigen::MatrixXd dlogits = dloss_dlogp;
  const Eigen::VectorXd row_sums = dloss_dlogp.rowwise().sum();
  dlogits -= (lat.table().array().exp().colwise() * row_sums.array()).matrix();

  g.output_weight = dlogits.transpose() * cache.joint;
  g.output_bias = dlogits.colwise().sum().transpose();

  Eigen::MatrixXd djoint = dlogits * p.output_weight;
  djoint.array() *= 1.0 - cache.joint.array().square();

  Eigen::MatrixXd denc = Eigen::MatrixXd::Zero(T, d.hidden_dim);
  Eigen::MatrixXd dpred = Eigen::MatrixXd::Zero(U + 1, d.hidden_dim);
  for (int t = 0; t < T; ++t)
    for (int u = 0; u <= U; ++u) {
      const auto r = djoint.row(static_cast<Eigen::Index>(t) * (U + 1) + u);
      denc.row(t) += r;
      dpred.row(u) += r;
    }

  denc.array() *= 1.0 - cache.encoder.array().square();
  g.encoder_weight = denc.transpose() * cache.features;
  g.encoder_bias = denc.colwise().sum().transpose();

  dpred.array() *= 1.0 - cache.predictor.array().square();
  Eigen::MatrixXd emb(U + 1, d.hidden_dim);
  for (int u = 0; u <= U; ++u)
    emb.row(u) = p.embedding.row(cache.predictor_inputs[u]);
  g.predictor_weight = dpred.transpose() * emb;
  g.predictor_bias = dpred.colwise().sum().transpose();
  const Eigen::MatrixXd demb = dpred * p.predictor_weight;
  for (int u = 0; u <= U; ++u)
    g.embedding.row(cache.predictor_inputs[u]) += demb.row(u);
  return grad;
}

Eigen::VectorXd model_backward(const TransducerModel &model,
                               const Eigen::MatrixXd &features,
                               const LabelSequence &tokens,
                               const Table<double> &dloss_dlogp) {
  ForwardCache cache;
  model_forward(model, features, tokens, &cache);
  return model_backward(model, cache, dloss_dlogp);
}

RowFunction model_rows(const TransducerModel &model,
                       const Eigen::MatrixXd &features) {
  check_features(model, features);
  const auto p = model.slices();
  const int V = model.dims().vocab_size;
  std::vector<int> all(V + 1);
  for (int k = 0; k <= V; ++k) all[k] = k;
  auto enc = std::make_shared<const Eigen::MatrixXd>(encode(p, features));
  auto pred = std::make_shared<const Eigen::MatrixXd>(predict(p, all));
  Eigen::MatrixXd out_w = p.output_weight;
  Eigen::VectorXd out_b = p.output_bias;
  return [enc, pred, out_w, out_b, V](int t, std::span<const int> prefix) {
    const int last = prefix.empty() ? V : prefix.back();
    Eigen::VectorXd z = (enc->row(t) + pred->row(last)).array().tanh();
    return log_softmax(out_w * z + out_b);
  };
}

DecodeResult greedy_decode(int frames, int vocab_size, const RowFunction &rows,
                           int max_symbols_per_frame) {
  if (max_symbols_per_frame < 1)
    throw ConfigError("max_symbols_per_frame must be >= 1");
  DecodeResult out;
  for (int t = 0; t < frames; ++t) {
    int emitted = 0;
    while (true) {
      Vector<double> row = rows(t, out.tokens);
      Eigen::Index best = 0;
      row.maxCoeff(&best);
      if (best == vocab_size) break;
      out.tokens.push_back(static_cast<int>(best));
      if (++emitted == max_symbols_per_frame) {
        out.done = false;
        break;
      }
    }
  }
  return out;
}

DecodeResult greedy_decode(const TransducerModel &model,
                           const Eigen::MatrixXd &features,
                           int max_symbols_per_frame) {
  return greedy_decode(static_cast<int>(features.rows()),
                       model.dims().vocab_size, model_rows(model, features),
                       max_symbols_per_frame);
}

DecodeResult greedy_decode(const PosteriorLattice<double> &lattice,
                           int max_symbols_per_frame) {
  const int U = lattice.labels();
  RowFunction rows = [&lattice, U](int t, std::span<const int> prefix) {
    const int u = static_cast<int>(prefix.size());
    Vector<double> row = lattice.table().row(lattice.row(t, std::min(u, U))).transpose();
    if (u >= U) row.head(lattice.vocab_size()).setConstant(kLogZero<double>);
    return row;
  };
  return greedy_decode(lattice.frames(), lattice.vocab_size(), rows,
                       max_symbols_per_frame);
}

void sgd_step(Eigen::VectorXd &params, const Eigen::VectorXd &grad, double lr) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be > 0");
  if (grad.size() != params.size())
    throw DataError("gradient size does not match parameter count");
  if (grad.hasNaN()) throw NumericalError("NaN in gradient");
  params -= lr * grad;
}

void adam_step(Eigen::VectorXd &params, AdamState &state,
               const Eigen::VectorXd &grad, const AdamHyper &hyper) {
  if (!(hyper.lr > 0.0)) throw ConfigError("learning rate must be > 0");
  if (grad.size() != params.size())
    throw DataError("gradient size does not match parameter count");
  if (!grad.allFinite()) throw NumericalError("non-finite value in gradient");
  if (state.m.size() != params.size()) {
    state.m = Eigen::VectorXd::Zero(params.size());
    state.v = Eigen::VectorXd::Zero(params.size());
    state.step = 0;
  }
  ++state.step;
  state.m = hyper.beta1 * state.m + (1.0 - hyper.beta1) * grad;
  state.v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  params.array() -= hyper.lr * (state.m.array() / c1) /
                    ((state.v.array() / c2).sqrt() + hyper.eps);
}

nlohmann::json checkpoint_to_json(const TransducerModel &model,
                                  const AdamState *optimizer) {
  const auto &p = model.parameters();
  nlohmann::json j;
  j["format"] = "twrnnt-checkpoint";
  j["version"] = 1;
  j["dims"] = {{"feature_dim", model.dims().feature_dim},
               {"hidden_dim", model.dims().hidden_dim},
               {"vocab_size", model.dims().vocab_size}};
  j["parameters"] = std::vector<double>(p.data(), p.data() + p.size());
  if (optimizer && optimizer->m.size() == p.size()) {
    j["optimizer"] = {
        {"kind", "adam"},
        {"step", optimizer->step},
        {"m", std::vector<double>(optimizer->m.data(),
                                  optimizer->m.data() + optimizer->m.size())},
        {"v", std::vector<double>(optimizer->v.data(),
                                  optimizer->v.data() + optimizer->v.size())}};
  } else {
    j["optimizer"] = nullptr;
  }
  return j;
}

TransducerModel checkpoint_from_json(const nlohmann::json &j,
                                     AdamState *optimizer) {
  try {
    if (j.at("format") != "twrnnt-checkpoint")
      throw DataError("not a twrnnt checkpoint");
    if (j.at("version").get<int>() != 1)
      throw DataError("unsupported checkpoint version " +
                      j.at("version").dump());
    ModelDims dims{j.at("dims").at("feature_dim").get<int>(),
                   j.at("dims").at("hidden_dim").get<int>(),
                   j.at("dims").at("vocab_size").get<int>()};
    TransducerModel model(dims);
    auto params = j.at("parameters").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(params.size()) != model.parameters().size())
      throw DataError("checkpoint has " + std::to_string(params.size()) +
                      " parameters, dims imply " +
                      std::to_string(model.parameters().size()));
    model.parameters() = Eigen::Map<Eigen::VectorXd>(params.data(), params.size());
    if (optimizer) {
      *optimizer = AdamState{};
      const auto &o = j.at("optimizer");
      if (!o.is_null()) {
        auto m = o.at("m").get<std::vector<double>>();
        auto v = o.at("v").get<std::vector<double>>();
        if (m.size() != params.size() || v.size() != params.size())
          throw DataError("optimizer state size mismatch");
        optimizer->m = Eigen::Map<Eigen::VectorXd>(m.data(), m.size());
        optimizer->v = Eigen::Map<Eigen::VectorXd>(v.data(), v.size());
        optimizer->step = o.at("step").get<std::int64_t>();
      }
    }
    return model;
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string &path, const TransducerModel &model,
                     const AdamState *optimizer) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path);
  os << checkpoint_to_json(model, optimizer).dump() << "\n";
}

TransducerModel load_checkpoint(const std::string &path, AdamState *optimizer) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception &e) {
    throw DataError(path + ": " + e.what());
  }
  return checkpoint_from_json(j, optimizer);
}

}  // namespace twrnnt
