// twrnnt/weighted_loss.h
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

#ifndef TWRNNT_WEIGHTED_LOSS_H_
#define TWRNNT_WEIGHTED_LOSS_H_

#include <span>
#include <string>
#include <vector>

#include "twrnnt/lattice.h"
#include "twrnnt/token_conditional.h"

namespace twrnnt {

enum class Normalization { kPerUtterance, kPerBatch };

std::string to_string(Normalization n);
Normalization normalization_from_string(const std::string &s);

struct WeightConfig {
  double alpha = 1.0;
  double final_blank_weight = 1.0;
  Normalization normalization = Normalization::kPerBatch;
};

struct TokenWeights {
  std::vector<double> lambdas;
  std::vector<double> source_confidences;
  WeightConfig config;
};

/// lambda_u = c_u^alpha / mean(c^alpha), the mean taken over every token of
/// the batch (kPerBatch) or of the utterance (kPerUtterance).  Evaluated in
/// the log domain so large alpha on small confidences cannot produce 0/0.
/// Utterances without tokens get empty weights.
std::vector<TokenWeights> compute_weights(
    std::span<const std::vector<double>> confidences,
    const WeightConfig &config);

/// Single-utterance convenience.
TokenWeights compute_weights(const std::vector<double> &confidences,
                             const WeightConfig &config);

/// Utterance-level baseline: the mean token confidence of each utterance,
/// raised to alpha and normalised to mean one over the batch.  Utterances
/// without tokens use confidence 1.
std::vector<double> compute_utterance_weights(
    std::span<const std::vector<double>> confidences, double alpha);

template <typename Scalar>
struct LossAndGrad {
  Scalar loss = 0;
  Table<Scalar> grad;
};

namespace internal {

inline void check_weights(std::span<const double> lambdas, size_t labels) {
  if (lambdas.size() != labels)
    throw DataError("weights/labels misaligned: " +
                    std::to_string(lambdas.size()) + " weights for " +
                    std::to_string(labels) + " tokens");
}

}  // namespace internal

/// L_w = sum_u lambda_u * (-log c_u) + final_blank_weight * (-log P(end|y)).
template <typename Scalar>
Scalar weighted_rnnt_loss(const PosteriorLattice<Scalar> &lattice,
                          const LabelSequence &y,
                          std::span<const double> lambdas,
                          double final_blank_weight = 1.0) {
  check_dimensions(lattice, y);
  internal::check_weights(lambdas, y.size());
  if (y.empty())
    return Scalar(final_blank_weight) * rnnt_loss(lattice, y);
  const auto profile = conditional_profile(lattice, y);
  Scalar loss = 0;
  for (int u = 0; u < profile.size(); ++u)
    loss -= Scalar(lambdas[u]) * profile.log_conditionals(u);
  return loss - Scalar(final_blank_weight) * profile.final_blank_logp;
}

template <typename Scalar>
Scalar weighted_rnnt_loss(const PosteriorLattice<Scalar> &lattice,
                          const LabelSequence &y, const TokenWeights &weights) {
  return weighted_rnnt_loss(lattice, y, std::span<const double>(weights.lambdas),
                            weights.config.final_blank_weight);
}

/*
  Gradient of L_w by one reverse sweep over the forward node masses.

  Writing P(u) = log P(y_1..y_u) and lambda_{U+1} = final_blank_weight,
  L_w = -sum_{u=1..U} (lambda_u - lambda_{u+1}) P(u) - lambda_{U+1} log P(y).
  Each P(u) is a logsumexp over label arcs leaving row u-1, and node masses
  feed forward through blank and label arcs, so the adjoint of every node
  mass is accumulated from its two successors plus the prefix terms that
  read it.  Adjoints are kept in the linear domain (they may be negative);
  every propagation factor is exp(pred + arc - succ) <= 1.
*/
template <typename Scalar>
LossAndGrad<Scalar> weighted_rnnt_loss_and_grad(
    const PosteriorLattice<Scalar> &lattice, const LabelSequence &y,
    std::span<const double> lambdas, double final_blank_weight = 1.0) {
  check_dimensions(lattice, y);
  internal::check_weights(lambdas, y.size());
  const int T = lattice.frames(), U = lattice.labels();
  const auto alpha = forward(lattice, y).alpha;

  LossAndGrad<Scalar> out;
  Vector<Scalar> prefix = Vector<Scalar>::Zero(U + 1);
  if (U == 0) {
    out.loss = -Scalar(final_blank_weight) *
               (alpha(T - 1, 0) + lattice.blank(T - 1, 0));
  } else {
    const auto profile = conditional_profile(lattice, y);
    out.loss = 0;
    for (int u = 0; u < U; ++u)
      out.loss -= Scalar(lambdas[u]) * profile.log_conditionals(u);
    out.loss -= Scalar(final_blank_weight) * profile.final_blank_logp;
    for (int u = 1; u <= U; ++u)
      prefix(u) = prefix(u - 1) + profile.log_conditionals(u - 1);
  }
  if (alpha(T - 1, U) == kLogZero<Scalar>)
    throw NumericalError("label sequence has zero probability");

  // mu(u) multiplies P(u) in the objective G = -L_w.
  Vector<Scalar> mu = Vector<Scalar>::Zero(U + 1);
  for (int u = 1; u <= U; ++u) {
    double next = u < U ? lambdas[u] : final_blank_weight;
    mu(u) = Scalar(lambdas[u - 1] - next);
  }

  const int blank = lattice.blank();
  Table<Scalar> adj = Table<Scalar>::Zero(T, U + 1);
  Table<Scalar> &grad = out.grad;
  grad = Table<Scalar>::Zero(lattice.table().rows(), lattice.table().cols());

  adj(T - 1, U) = Scalar(final_blank_weight);
  grad(lattice.row(T - 1, U), blank) = -Scalar(final_blank_weight);

  for (int t = T - 1; t >= 0; --t) {
    for (int u = U; u >= 0; --u) {
      const Scalar a = alpha(t, u);
      if (a == kLogZero<Scalar>) continue;
      const auto r = lattice.row(t, u);
      Scalar g = adj(t, u);
      if (t < T - 1 && adj(t + 1, u) != 0) {
        const Scalar arc = a + lattice.blank(t, u);
        if (arc != kLogZero<Scalar>) {
          const Scalar d = adj(t + 1, u) * std::exp(arc - alpha(t + 1, u));
          g += d;
          grad(r, blank) -= d;
        }
      }
      if (u < U) {
        const Scalar arc = a + lattice(t, u, y[u]);
        if (arc != kLogZero<Scalar>) {
          Scalar d = 0;
          if (adj(t, u + 1) != 0)
            d += adj(t, u + 1) * std::exp(arc - alpha(t, u + 1));
          if (mu(u + 1) != 0) d += mu(u + 1) * std::exp(arc - prefix(u + 1));
          g += d;
          grad(r, y[u]) -= d;
        }
      }
      adj(t, u) = g;
    }
  }
  return out;
}

template <typename Scalar>
Table<Scalar> weighted_rnnt_loss_grad(const PosteriorLattice<Scalar> &lattice,
                                      const LabelSequence &y,
                                      std::span<const double> lambdas,
                                      double final_blank_weight = 1.0) {
  return weighted_rnnt_loss_and_grad(lattice, y, lambdas, final_blank_weight)
      .grad;
}

template <typename Scalar>
Table<Scalar> weighted_rnnt_loss_grad(const PosteriorLattice<Scalar> &lattice,
                                      const LabelSequence &y,
                                      const TokenWeights &weights) {
  return weighted_rnnt_loss_grad(lattice, y,
                                 std::span<const double>(weights.lambdas),
                                 weights.config.final_blank_weight);
}

}  // namespace twrnnt

#endif  // TWRNNT_WEIGHTED_LOSS_H_
