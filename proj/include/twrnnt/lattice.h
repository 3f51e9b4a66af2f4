// twrnnt/lattice.h
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

#ifndef TWRNNT_LATTICE_H_
#define TWRNNT_LATTICE_H_

#include <cmath>
#include <sstream>
#include <string>

#include "twrnnt/common.h"

namespace twrnnt {

/*
  Transducer lattice conventions used throughout this library.

  Frames t = 0..T-1 and label positions u = 0..U are zero based.  At node
  (t, u) the model has consumed t frames worth of blanks and emitted
  y_1..y_u.  From (t, u):
    - emitting y_{u+1} consumes logp(t, u, y_{u+1}) and moves to (t, u+1);
    - emitting blank consumes logp(t, u, blank) and moves to (t+1, u).
  A path is complete when it leaves (T-1, U) through blank, so every
  alignment contains exactly T blanks and U label emissions.

  The blank symbol is encoded as index |V|, one past the last token.
*/

struct Vocabulary {
  int size = 0;
  int blank() const { return size; }
  bool is_token(int k) const { return k >= 0 && k < size; }
};

/// Log-probability table P_{t,u}(k) over (t, u, k).  Rows are indexed by
/// t*(U+1)+u, columns by k with the last column holding blank.
///
/// The constructor checks shape and rejects NaN / +inf; softmax
/// normalisation is checked separately (finite-difference probes need
/// perturbed, unnormalised tables).
template <typename Scalar = double>
class PosteriorLattice {
 public:
  PosteriorLattice() = default;

  PosteriorLattice(int frames, int labels, int vocab_size, Table<Scalar> logp)
      : frames_(frames),
        labels_(labels),
        vocab_size_(vocab_size),
        logp_(std::move(logp)) {
    if (frames_ < 1) throw DataError("lattice needs at least one frame");
    if (labels_ < 0) throw DataError("negative label count");
    if (vocab_size_ < 1) throw DataError("vocabulary size must be >= 1");
    if (logp_.rows() != static_cast<Eigen::Index>(frames_) * (labels_ + 1) ||
        logp_.cols() != vocab_size_ + 1) {
      std::ostringstream os;
      os << "lattice table is " << logp_.rows() << "x" << logp_.cols()
         << ", expected " << static_cast<Eigen::Index>(frames_) * (labels_ + 1)
         << "x" << vocab_size_ + 1;
      throw DataError(os.str());
    }
    for (Eigen::Index r = 0; r < logp_.rows(); ++r)
      for (Eigen::Index k = 0; k < logp_.cols(); ++k) {
        Scalar v = logp_(r, k);
        if (std::isnan(v) || v == std::numeric_limits<Scalar>::infinity())
          throw DataError("invalid log-probability at " + cell_name(r, k));
      }
  }

  int frames() const { return frames_; }
  int labels() const { return labels_; }
  int vocab_size() const { return vocab_size_; }
  int blank() const { return vocab_size_; }

  Eigen::Index row(int t, int u) const {
    return static_cast<Eigen::Index>(t) * (labels_ + 1) + u;
  }
  Scalar operator()(int t, int u, int k) const { return logp_(row(t, u), k); }
  Scalar blank(int t, int u) const { return logp_(row(t, u), vocab_size_); }

  const Table<Scalar> &table() const { return logp_; }

  /// Max over rows of |logsumexp_k logp(t,u,k)|.
  Scalar max_normalization_error() const {
    Scalar worst = 0;
    for (Eigen::Index r = 0; r < logp_.rows(); ++r) {
      Scalar m = logp_.row(r).maxCoeff();
      Scalar lse = m == kLogZero<Scalar>
                       ? m
                       : m + std::log((logp_.row(r).array() - m).exp().sum());
      worst = std::max(worst, std::abs(lse));
    }
    return worst;
  }

  bool is_normalized(Scalar tol = Scalar(1e-9)) const {
    return max_normalization_error() <= tol;
  }

  template <typename To>
  PosteriorLattice<To> cast() const {
    return PosteriorLattice<To>(frames_, labels_, vocab_size_,
                                logp_.template cast<To>());
  }

  std::string cell_name(Eigen::Index r, Eigen::Index k) const {
    std::ostringstream os;
    os << "(t=" << r / (labels_ + 1) << ", u=" << r % (labels_ + 1)
       << ", k=" << k << ")";
    return os.str();
  }

 private:
  int frames_ = 0;
  int labels_ = 0;
  int vocab_size_ = 0;
  Table<Scalar> logp_;
};

/// Throws DataError unless the lattice was built for `y`.
template <typename Scalar>
void check_dimensions(const PosteriorLattice<Scalar> &lattice,
                      const LabelSequence &y) {
  if (lattice.labels() != static_cast<int>(y.size())) {
    std::ostringstream os;
    os << "lattice/label mismatch: lattice has (T=" << lattice.frames()
       << ", U=" << lattice.labels() << "), labels need (T=" << lattice.frames()
       << ", U=" << y.size() << ")";
    throw DataError(os.str());
  }
  for (size_t i = 0; i < y.size(); ++i)
    if (y[i] < 0 || y[i] >= lattice.vocab_size())
      throw DataError("label " + std::to_string(y[i]) + " at position " +
                      std::to_string(i + 1) + " outside vocabulary of size " +
                      std::to_string(lattice.vocab_size()));
}

/// Row-wise log-softmax of raw logits shaped like a lattice table.
template <typename Scalar>
PosteriorLattice<Scalar> normalize_logits(int frames, int labels,
                                          int vocab_size,
                                          const Table<Scalar> &raw) {
  for (Eigen::Index r = 0; r < raw.rows(); ++r)
    for (Eigen::Index k = 0; k < raw.cols(); ++k)
      if (!std::isfinite(raw(r, k))) {
        std::ostringstream os;
        os << "non-finite logit " << raw(r, k) << " at (t="
           << r / (labels + 1) << ", u=" << r % (labels + 1) << ", k=" << k
           << ")";
        throw NumericalError(os.str());
      }
  Table<Scalar> out(raw.rows(), raw.cols());
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    Scalar m = raw.row(r).maxCoeff();
    Scalar lse = m + std::log((raw.row(r).array() - m).exp().sum());
    out.row(r) = raw.row(r).array() - lse;
  }
  return PosteriorLattice<Scalar>(frames, labels, vocab_size, std::move(out));
}

template <typename Scalar>
struct ForwardBackwardTables {
  Table<Scalar> alpha;  // T x (U+1); empty when only backward was run
  Table<Scalar> beta;   // T x (U+1); empty when only forward was run
  Scalar loglik = kLogZero<Scalar>;
};

/// alpha(t,u): log mass of reaching node (t,u) from (0,0).
/// loglik = alpha(T-1,U) + logp(T-1,U,blank).
template <typename Scalar>
ForwardBackwardTables<Scalar> forward(const PosteriorLattice<Scalar> &lattice,
                                      const LabelSequence &y) {
  check_dimensions(lattice, y);
  const int T = lattice.frames(), U = lattice.labels();
  ForwardBackwardTables<Scalar> out;
  out.alpha.setConstant(T, U + 1, kLogZero<Scalar>);
  auto &alpha = out.alpha;
  alpha(0, 0) = 0;
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      if (t == 0 && u == 0) continue;
      Scalar from_blank = t > 0 ? alpha(t - 1, u) + lattice.blank(t - 1, u)
                                : kLogZero<Scalar>;
      Scalar from_emit = u > 0 ? alpha(t, u - 1) + lattice(t, u - 1, y[u - 1])
                               : kLogZero<Scalar>;
      alpha(t, u) = log_add(from_blank, from_emit);
    }
  }
  out.loglik = alpha(T - 1, U) + lattice.blank(T - 1, U);
  return out;
}

/// beta(t,u): log mass of completing a path from node (t,u), including the
/// final blank.  loglik = beta(0,0).
template <typename Scalar>
ForwardBackwardTables<Scalar> backward(const PosteriorLattice<Scalar> &lattice,
                                       const LabelSequence &y) {
  check_dimensions(lattice, y);
  const int T = lattice.frames(), U = lattice.labels();
  ForwardBackwardTables<Scalar> out;
  out.beta.setConstant(T, U + 1, kLogZero<Scalar>);
  auto &beta = out.beta;
  beta(T - 1, U) = lattice.blank(T - 1, U);
  for (int t = T - 1; t >= 0; --t) {
    for (int u = U; u >= 0; --u) {
      if (t == T - 1 && u == U) continue;
      Scalar via_blank = t < T - 1 ? beta(t + 1, u) + lattice.blank(t, u)
                                   : kLogZero<Scalar>;
      Scalar via_emit = u < U ? beta(t, u + 1) + lattice(t, u, y[u])
                              : kLogZero<Scalar>;
      beta(t, u) = log_add(via_blank, via_emit);
    }
  }
  out.loglik = beta(0, 0);
  return out;
}

template <typename Scalar>
ForwardBackwardTables<Scalar> forward_backward(
    const PosteriorLattice<Scalar> &lattice, const LabelSequence &y) {
  auto out = forward(lattice, y);
  out.beta = std::move(backward(lattice, y).beta);
  return out;
}

/// Standard transducer loss -log P(y|x).
template <typename Scalar>
Scalar rnnt_loss(const PosteriorLattice<Scalar> &lattice,
                 const LabelSequence &y) {
  return -forward(lattice, y).loglik;
}

/// d rnnt_loss / d logp(t,u,k).  Each entry is minus the posterior occupancy
/// of the corresponding transition; cells no alignment uses are exactly 0.
template <typename Scalar>
Table<Scalar> rnnt_loss_grad(const PosteriorLattice<Scalar> &lattice,
                             const LabelSequence &y) {
  const auto fb = forward_backward(lattice, y);
  const int T = lattice.frames(), U = lattice.labels();
  Table<Scalar> grad = Table<Scalar>::Zero(lattice.table().rows(),
                                           lattice.table().cols());
  if (fb.loglik == kLogZero<Scalar>)
    throw NumericalError("label sequence has zero probability");
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      const Scalar a = fb.alpha(t, u);
      if (a == kLogZero<Scalar>) continue;
      const auto r = lattice.row(t, u);
      if (t < T - 1) {
        Scalar s = a + lattice.blank(t, u) + fb.beta(t + 1, u);
        if (s != kLogZero<Scalar>)
          grad(r, lattice.blank()) = -std::exp(s - fb.loglik);
      } else if (u == U) {
        grad(r, lattice.blank()) =
            -std::exp(a + lattice.blank(t, u) - fb.loglik);
      }
      if (u < U) {
        Scalar s = a + lattice(t, u, y[u]) + fb.beta(t, u + 1);
        if (s != kLogZero<Scalar>)
          grad(r, y[u]) = -std::exp(s - fb.loglik);
      }
    }
  }
  return grad;
}

}  // namespace twrnnt

#endif  // TWRNNT_LATTICE_H_
