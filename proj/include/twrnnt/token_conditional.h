// twrnnt/token_conditional.h
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

#ifndef TWRNNT_TOKEN_CONDITIONAL_H_
#define TWRNNT_TOKEN_CONDITIONAL_H_

#include <functional>
#include <span>
#include <string>

#include "twrnnt/lattice.h"

namespace twrnnt {

/*
  Conditional token probabilities P(y_u | y_<u) for a transducer.

  joint(t, u) is the log mass of all partial alignments that emit y_1..y_u
  with y_u emitted exactly at frame t (the label arc leaves node (t, u-1)).
  Column 0 is the boundary: the empty prefix "is emitted" at frame 0 only.

  Between emitting y_{u-1} at frame t' and y_u at frame t the path takes the
  blanks logp(t', u-1, blank) .. logp(t-1, u-1, blank), then the label arc
  logp(t, u-1, y_u).  The prefix mass P(y_1..y_u) is logsumexp_t joint(t, u);
  every completion of a prefix has total mass one because rows are softmax
  normalised, so consecutive prefix masses give the conditionals.
*/

template <typename Scalar>
struct EmissionForward {
  Table<Scalar> joint;        // T x (U+1)
  Vector<Scalar> prefix_logp; // U+1, prefix_logp(0) == 0
};

enum class BlankRunSum {
  kDirect,         // explicit sum over the previous emission frame, O(T^2 U)
  kRunningPrefix,  // carries the node mass forward, O(T U)
};

namespace internal {

template <typename Scalar>
void check_conditional_inputs(const PosteriorLattice<Scalar> &lattice,
                              const LabelSequence &y) {
  check_dimensions(lattice, y);
  if (y.empty())
    throw DataError("conditional probabilities need at least one token (U=0)");
}

}  // namespace internal

/// Emission-time factorised forward pass.  Both recursions produce the same
/// table; kDirect mirrors the per-start-frame sum term by term.
template <typename Scalar>
EmissionForward<Scalar> emission_forward(
    const PosteriorLattice<Scalar> &lattice, const LabelSequence &y,
    BlankRunSum method = BlankRunSum::kRunningPrefix) {
  internal::check_conditional_inputs(lattice, y);
  const int T = lattice.frames(), U = lattice.labels();
  EmissionForward<Scalar> out;
  out.joint.setConstant(T, U + 1, kLogZero<Scalar>);
  out.joint(0, 0) = 0;
  out.prefix_logp.resize(U + 1);
  out.prefix_logp(0) = 0;
  auto &A = out.joint;

  for (int u = 1; u <= U; ++u) {
    const int prev = u - 1;
    const int token = y[u - 1];
    if (method == BlankRunSum::kDirect) {
      for (int t = 0; t < T; ++t) {
        Scalar acc = kLogZero<Scalar>;
        Scalar run = 0;  // blanks at frames t'..t-1 on row prev
        for (int start = t; start >= 0; --start) {
          if (start < t) run += lattice.blank(start, prev);
          acc = log_add(acc, A(start, prev) + run);
        }
        A(t, u) = acc + lattice(t, prev, token);
      }
    } else {
      Scalar node = kLogZero<Scalar>;  // mass at (t, prev)
      for (int t = 0; t < T; ++t) {
        if (t > 0) node += lattice.blank(t - 1, prev);
        node = log_add(node, A(t, prev));
        A(t, u) = node + lattice(t, prev, token);
      }
    }
    Scalar mass = kLogZero<Scalar>;
    for (int t = 0; t < T; ++t) mass = log_add(mass, A(t, u));
    out.prefix_logp(u) = mass;
  }
  return out;
}

template <typename Scalar>
struct ConditionalProfile {
  Vector<Scalar> log_conditionals;  // log c_u, u = 1..U
  Scalar final_blank_logp = 0;      // log P(sentence end | y)
  Scalar loglik_check = 0;          // sum log c_u + final_blank_logp

  Vector<Scalar> conditionals() const {
    return log_conditionals.array().exp();
  }
  int size() const { return static_cast<int>(log_conditionals.size()); }
};

/// Conditionals c_u = P(y_<u+1) / P(y_<u) from one emission-forward sweep,
/// plus the sentence-end term that completes the sequence probability.
template <typename Scalar>
ConditionalProfile<Scalar> conditional_profile(
    const PosteriorLattice<Scalar> &lattice, const LabelSequence &y,
    BlankRunSum method = BlankRunSum::kRunningPrefix) {
  const auto ef = emission_forward(lattice, y, method);
  const int T = lattice.frames(), U = lattice.labels();
  ConditionalProfile<Scalar> out;
  out.log_conditionals.resize(U);
  for (int u = 1; u <= U; ++u) {
    if (ef.prefix_logp(u - 1) == kLogZero<Scalar>)
      throw NumericalError("prefix has zero probability at u=" +
                           std::to_string(u));
    out.log_conditionals(u - 1) = ef.prefix_logp(u) - ef.prefix_logp(u - 1);
  }
  if (ef.prefix_logp(U) == kLogZero<Scalar>)
    throw NumericalError("prefix has zero probability at u=" +
                         std::to_string(U + 1));
  Scalar node = kLogZero<Scalar>;  // mass at (t, U)
  for (int t = 0; t < T; ++t) {
    if (t > 0) node += lattice.blank(t - 1, U);
    node = log_add(node, ef.joint(t, U));
  }
  out.final_blank_logp = node + lattice.blank(T - 1, U) - ef.prefix_logp(U);
  out.loglik_check = out.log_conditionals.sum() + out.final_blank_logp;
  return out;
}

/// P(y_u = k | y_<u) for every token k, with index |V| holding the
/// probability that the output ends after the prefix.  Uses rows 0..u-1 of
/// the lattice, which must have been built for a sequence starting with
/// y_1..y_{u-1}.  `u` is one based.
template <typename Scalar>
Vector<Scalar> next_token_distribution(const PosteriorLattice<Scalar> &lattice,
                                       const LabelSequence &y, int u) {
  if (u < 1 || u - 1 > lattice.labels() || u - 1 > static_cast<int>(y.size()))
    throw DataError("position u=" + std::to_string(u) +
                    " outside lattice with U=" +
                    std::to_string(lattice.labels()));
  for (int i = 0; i < u - 1; ++i)
    if (!Vocabulary{lattice.vocab_size()}.is_token(y[i]))
      throw DataError("prefix token outside vocabulary");
  const int T = lattice.frames(), level = u - 1;

  // Node masses on row `level`, swept level by level.
  Vector<Scalar> node = Vector<Scalar>::Constant(T, kLogZero<Scalar>);
  node(0) = 0;
  for (int t = 1; t < T; ++t) node(t) = node(t - 1) + lattice.blank(t - 1, 0);
  Scalar prefix = 0;
  for (int v = 1; v <= level; ++v) {
    Vector<Scalar> next(T);
    Scalar run = kLogZero<Scalar>;
    prefix = kLogZero<Scalar>;
    for (int t = 0; t < T; ++t) {
      Scalar emit = node(t) + lattice(t, v - 1, y[v - 1]);
      prefix = log_add(prefix, emit);
      if (t > 0) run += lattice.blank(t - 1, v);
      run = log_add(run, emit);
      next(t) = run;
    }
    node = std::move(next);
  }
  if (prefix == kLogZero<Scalar>)
    throw NumericalError("prefix has zero probability at u=" +
                         std::to_string(u));

  Vector<Scalar> dist(lattice.vocab_size() + 1);
  for (int k = 0; k < lattice.vocab_size(); ++k) {
    Scalar mass = kLogZero<Scalar>;
    for (int t = 0; t < T; ++t)
      mass = log_add(mass, node(t) + lattice(t, level, k));
    dist(k) = std::exp(mass - prefix);
  }
  dist(lattice.vocab_size()) =
      std::exp(node(T - 1) + lattice.blank(T - 1, level) - prefix);
  return dist;
}

/// Supplies the log-probability row P_{t,u}(.) for frame t after the model
/// has emitted `prefix`.  Lets callers build lattices for arbitrary label
/// sequences (a model, or a synthetic fully specified transducer).
using RowFunction =
    std::function<Vector<double>(int t, std::span<const int> prefix)>;

/// Lattice for `y` whose row (t, u) is rows(t, y_1..y_u).
PosteriorLattice<double> materialize_lattice(int frames, int vocab_size,
                                             const LabelSequence &y,
                                             const RowFunction &rows);

/// next_token_distribution after `prefix` for a fully specified transducer.
Vector<double> next_token_distribution(int frames, int vocab_size,
                                       const LabelSequence &prefix,
                                       const RowFunction &rows);

}  // namespace twrnnt

#endif  // TWRNNT_TOKEN_CONDITIONAL_H_
