// twrnnt/oracle.h
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

// Brute-force references for small lattices.  Everything here enumerates
// alignments explicitly and shares no code with the dynamic programs.

#ifndef TWRNNT_ORACLE_H_
#define TWRNNT_ORACLE_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "twrnnt/lattice.h"

namespace twrnnt::oracle {

inline constexpr std::uint64_t kMaxPaths = 1000000;

enum class Step : std::uint8_t { kBlank, kEmit };

struct AlignmentPath {
  std::vector<Step> steps;

  /// Frame index (zero based) at which each step is taken.
  std::vector<int> frames() const;
};

/// C(n, k) with overflow saturation.
std::uint64_t binomial(int n, int k);

/// Every complete alignment on a T x U lattice: T-1 interior blanks and U
/// emissions in any order, then the final blank.  C(T+U-1, U) paths.
std::vector<AlignmentPath> enumerate(int frames, int labels);

/// Every partial alignment that ends by emitting label `u` (u >= 1).  The
/// path holds u emissions and at most T-1 blanks and its last step is an
/// emission.
std::vector<AlignmentPath> enumerate_prefix(int frames, int u);

/// Log probability of one path (complete or partial) under the lattice.
double path_logp(const PosteriorLattice<double> &lattice,
                 const LabelSequence &y, const AlignmentPath &path);

double exact_sequence_logp(const PosteriorLattice<double> &lattice,
                           const LabelSequence &y);

/// log P(y_1..y_u); 0 for u == 0.
double exact_prefix_logp(const PosteriorLattice<double> &lattice,
                         const LabelSequence &y, int u);

/// c_u = P(y_<u+1) / P(y_<u) for u = 1..U.
std::vector<double> exact_conditionals(const PosteriorLattice<double> &lattice,
                                       const LabelSequence &y);

/// Sentence-end term log P(y) - log P(y_1..y_U).
double exact_final_blank_logp(const PosteriorLattice<double> &lattice,
                              const LabelSequence &y);

using LatticeFunctional = std::function<double(const PosteriorLattice<double> &)>;

/// Central differences on every finite cell of the lattice table; cells
/// holding -inf get 0.
Table<double> finite_diff_grad(const LatticeFunctional &f,
                               const PosteriorLattice<double> &lattice,
                               double step);

/// |a - b| / max(|a|, |b|, floor), the elementwise comparison used for
/// gradient checks.
double relative_error(double a, double b, double floor = 1e-3);

double max_relative_error(const Table<double> &a, const Table<double> &b,
                          double floor = 1e-3);

}  // namespace twrnnt::oracle

#endif  // TWRNNT_ORACLE_H_
