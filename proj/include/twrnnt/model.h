// twrnnt/model.h
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

#ifndef TWRNNT_MODEL_H_
#define TWRNNT_MODEL_H_

#include <cstdint>
#include <string>

#include "json.hpp"

#include "twrnnt/lattice.h"
#include "twrnnt/token_conditional.h"

namespace twrnnt {

/*
  Desk-scale transducer.

    encoder    h_t = tanh(W_e x_t + b_e)                      (H)
    predictor  g_u = tanh(W_p E[tok_u] + b_p)                 (H)
               tok_0 is the begin-of-sequence row E[|V|], tok_u = y_u
    joiner     z_tu = tanh(h_t + g_u),  logits = W_o z_tu + b_o  (|V|+1)

  The predictor sees only the last emitted token, so the model has no
  recurrence and every gradient is closed form.
*/

struct ModelDims {
  int feature_dim = 8;
  int hidden_dim = 32;
  int vocab_size = 10;

  bool operator==(const ModelDims &) const = default;
};

/// Offsets of the named parameter slices inside the flat vector.
struct ParameterLayout {
  explicit ParameterLayout(const ModelDims &dims);

  Eigen::Index encoder_weight, encoder_bias;
  Eigen::Index embedding;
  Eigen::Index predictor_weight, predictor_bias;
  Eigen::Index output_weight, output_bias;
  Eigen::Index size;
};

/// Column-major views onto a flat parameter (or gradient) vector.
template <typename Ptr>
struct ParameterSlices {
  using Mat = Eigen::Map<
      std::conditional_t<std::is_const_v<std::remove_pointer_t<Ptr>>,
                         const Eigen::MatrixXd, Eigen::MatrixXd>>;
  using Vec = Eigen::Map<
      std::conditional_t<std::is_const_v<std::remove_pointer_t<Ptr>>,
                         const Eigen::VectorXd, Eigen::VectorXd>>;

  ParameterSlices(Ptr data, const ModelDims &d)
      : ParameterSlices(data, d, ParameterLayout(d)) {}
  ParameterSlices(Ptr data, const ModelDims &d, const ParameterLayout &l)
      : encoder_weight(data + l.encoder_weight, d.hidden_dim, d.feature_dim),
        encoder_bias(data + l.encoder_bias, d.hidden_dim),
        embedding(data + l.embedding, d.vocab_size + 1, d.hidden_dim),
        predictor_weight(data + l.predictor_weight, d.hidden_dim, d.hidden_dim),
        predictor_bias(data + l.predictor_bias, d.hidden_dim),
        output_weight(data + l.output_weight, d.vocab_size + 1, d.hidden_dim),
        output_bias(data + l.output_bias, d.vocab_size + 1) {}

  Mat encoder_weight;
  Vec encoder_bias;
  Mat embedding;
  Mat predictor_weight;
  Vec predictor_bias;
  Mat output_weight;
  Vec output_bias;
};

class TransducerModel {
 public:
  TransducerModel() = default;
  explicit TransducerModel(const ModelDims &dims);

  /// Gaussian weights scaled by 1/sqrt(fan_in), zero biases.
  static TransducerModel random(const ModelDims &dims, std::uint64_t seed);

  static Eigen::Index parameter_count(const ModelDims &dims) {
    return ParameterLayout(dims).size;
  }

  const ModelDims &dims() const { return dims_; }
  Eigen::VectorXd &parameters() { return params_; }
  const Eigen::VectorXd &parameters() const { return params_; }

  ParameterSlices<const double *> slices() const {
    return {params_.data(), dims_};
  }

 private:
  ModelDims dims_;
  Eigen::VectorXd params_;
};

/// Intermediate activations kept for the backward pass.
struct ForwardCache {
  Eigen::MatrixXd encoder;     // T x H
  Eigen::MatrixXd predictor;   // (U+1) x H
  Eigen::MatrixXd joint;       // T*(U+1) x H, row t*(U+1)+u
  std::vector<int> predictor_inputs;
  Eigen::MatrixXd features;    // T x D
  PosteriorLattice<double> lattice;
};

PosteriorLattice<double> model_forward(const TransducerModel &model,
                                       const Eigen::MatrixXd &features,
                                       const LabelSequence &tokens,
                                       ForwardCache *cache = nullptr);

Eigen::VectorXd model_backward(const TransducerModel &model,
                               const ForwardCache &cache,
                               const Table<double> &dloss_dlogp);

Eigen::VectorXd model_backward(const TransducerModel &model,
                               const Eigen::MatrixXd &features,
                               const LabelSequence &tokens,
                               const Table<double> &dloss_dlogp);

/// Log-probability rows of the model as a RowFunction, for
/// next_token_distribution and lattice materialisation.
RowFunction model_rows(const TransducerModel &model,
                       const Eigen::MatrixXd &features);

struct DecodeResult {
  LabelSequence tokens;
  bool done = true;  // false if some frame hit max_symbols_per_frame
};

/// Greedy decoding over an arbitrary row source: per frame take the argmax,
/// emit tokens (at most max_symbols_per_frame), advance the frame on blank
/// or at the cap.  Ties go to the lowest index.
DecodeResult greedy_decode(int frames, int vocab_size, const RowFunction &rows,
                           int max_symbols_per_frame = 4);

DecodeResult greedy_decode(const TransducerModel &model,
                           const Eigen::MatrixXd &features,
                           int max_symbols_per_frame = 4);

/// Greedy decoding of a fixed lattice: row (t, u) is read while u <= U;
/// emissions beyond U are not possible.
DecodeResult greedy_decode(const PosteriorLattice<double> &lattice,
                           int max_symbols_per_frame = 4);

// Optimisers.

void sgd_step(Eigen::VectorXd &params, const Eigen::VectorXd &grad, double lr);

struct AdamHyper {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;
};

/// Bias-corrected Adam; throws before touching anything if grad has NaN.
void adam_step(Eigen::VectorXd &params, AdamState &state,
               const Eigen::VectorXd &grad, const AdamHyper &hyper);

// Checkpoints (format documented in docs/formats.md).

nlohmann::json checkpoint_to_json(const TransducerModel &model,
                                  const AdamState *optimizer);
TransducerModel checkpoint_from_json(const nlohmann::json &j,
                                     AdamState *optimizer = nullptr);
void save_checkpoint(const std::string &path, const TransducerModel &model,
                     const AdamState *optimizer = nullptr);
TransducerModel load_checkpoint(const std::string &path,
                                AdamState *optimizer = nullptr);

}  // namespace twrnnt

#endif  // TWRNNT_MODEL_H_
