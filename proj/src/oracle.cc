// twrnnt/src/oracle.cc
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

#include "twrnnt/oracle.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace twrnnt::oracle {

namespace {

void check_guard(std::uint64_t count) {
  if (count > kMaxPaths)
    throw DataError("alignment enumeration guard exceeded: " +
                    std::to_string(count) + " paths > " +
                    std::to_string(kMaxPaths));
}

// Sum of path probabilities, smallest first.
double sorted_log_sum(std::vector<double> logps) {
  if (logps.empty()) return -std::numeric_limits<double>::infinity();
  std::sort(logps.begin(), logps.end());
  const double max = logps.back();
  if (max == -std::numeric_limits<double>::infinity()) return max;
  double sum = 0.0;
  for (double v : logps) sum += std::exp(v - max);
  return max + std::log(sum);
}

struct Partial {
  int t;
  int u;
  std::vector<Step> steps;
};

}  // namespace

std::vector<int> AlignmentPath::frames() const {
  std::vector<int> out;
  out.reserve(steps.size());
  int t = 0;
  for (Step s : steps) {
    out.push_back(t);
    if (s == Step::kBlank) ++t;
  }
  return out;
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    // r * (n-k+i) / i stays integral at every step.
    const std::uint64_t num = static_cast<std::uint64_t>(n - k + i);
    if (r > std::numeric_limits<std::uint64_t>::max() / num)
      return std::numeric_limits<std::uint64_t>::max();
    r = r * num / static_cast<std::uint64_t>(i);
  }
  return r;
}

std::vector<AlignmentPath> enumerate(int frames, int labels) {
  if (frames < 1 || labels < 0) throw DataError("invalid lattice size");
  check_guard(binomial(frames + labels - 1, labels));
  std::vector<AlignmentPath> out;
  std::vector<Partial> stack{{0, 0, {}}};
  while (!stack.empty()) {
    Partial p = std::move(stack.back());
    stack.pop_back();
    if (p.t == frames - 1 && p.u == labels) {
      p.steps.push_back(Step::kBlank);
      out.push_back({std::move(p.steps)});
      continue;
    }
    if (p.u < labels) {
      Partial e = p;
      e.steps.push_back(Step::kEmit);
      ++e.u;
      stack.push_back(std::move(e));
    }
    if (p.t < frames - 1) {
      p.steps.push_back(Step::kBlank);
      ++p.t;
      stack.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<AlignmentPath> enumerate_prefix(int frames, int u) {
  if (frames < 1 || u < 1) throw DataError("invalid prefix enumeration size");
  check_guard(binomial(frames + u - 1, u));
  std::vector<AlignmentPath> out;
  std::vector<Partial> stack{{0, 0, {}}};
  while (!stack.empty()) {
    Partial p = std::move(stack.back());
    stack.pop_back();
    if (p.u == u - 1) {
      AlignmentPath done{p.steps};
      done.steps.push_back(Step::kEmit);
      out.push_back(std::move(done));
    } else {
      Partial e = p;
      e.steps.push_back(Step::kEmit);
      ++e.u;
      stack.push_back(std::move(e));
    }
    if (p.t < frames - 1) {
      p.steps.push_back(Step::kBlank);
      ++p.t;
      stack.push_back(std::move(p));
    }
  }
  return out;
}

double path_logp(const PosteriorLattice<double> &lattice,
                 const LabelSequence &y, const AlignmentPath &path) {
  int t = 0, u = 0;
  double logp = 0.0;
  for (Step s : path.steps) {
    if (t >= lattice.frames() || u > lattice.labels())
      throw DataError("alignment leaves the lattice");
    if (s == Step::kBlank) {
      logp += lattice.blank(t, u);
      ++t;
    } else {
      if (u >= static_cast<int>(y.size()))
        throw DataError("alignment emits past the label sequence");
      logp += lattice(t, u, y[u]);
      ++u;
    }
  }
  return logp;
}

double exact_sequence_logp(const PosteriorLattice<double> &lattice,
                           const LabelSequence &y) {
  check_dimensions(lattice, y);
  std::vector<double> logps;
  for (const auto &path : enumerate(lattice.frames(), lattice.labels()))
    logps.push_back(path_logp(lattice, y, path));
  return sorted_log_sum(std::move(logps));
}

double exact_prefix_logp(const PosteriorLattice<double> &lattice,
                         const LabelSequence &y, int u) {
  if (u < 0 || u > lattice.labels() || u > static_cast<int>(y.size()))
    throw DataError("prefix length out of range");
  if (u == 0) return 0.0;
  std::vector<double> logps;
  for (const auto &path : enumerate_prefix(lattice.frames(), u))
    logps.push_back(path_logp(lattice, y, path));
  return sorted_log_sum(std::move(logps));
}

std::vector<double> exact_conditionals(const PosteriorLattice<double> &lattice,
                                       const LabelSequence &y) {
  check_dimensions(lattice, y);
  std::vector<double> out;
  double prev = 0.0;
  for (int u = 1; u <= lattice.labels(); ++u) {
    if (prev == -std::numeric_limits<double>::infinity())
      throw NumericalError("prefix has zero probability at u=" +
                           std::to_string(u));
    const double cur = exact_prefix_logp(lattice, y, u);
    out.push_back(std::exp(cur - prev));
    prev = cur;
  }
  return out;
}

double exact_final_blank_logp(const PosteriorLattice<double> &lattice,
                              const LabelSequence &y) {
  return exact_sequence_logp(lattice, y) -
         exact_prefix_logp(lattice, y, lattice.labels());
}

Table<double> finite_diff_grad(const LatticeFunctional &f,
                               const PosteriorLattice<double> &lattice,
                               double step) {
  if (!(step > 0.0)) throw ConfigError("finite-difference step must be > 0");
  const Table<double> &base = lattice.table();
  Table<double> grad = Table<double>::Zero(base.rows(), base.cols());
  Table<double> probe = base;
  for (Eigen::Index r = 0; r < base.rows(); ++r)
    for (Eigen::Index k = 0; k < base.cols(); ++k) {
      if (!std::isfinite(base(r, k))) continue;
      probe(r, k) = base(r, k) + step;
      const double plus = f(PosteriorLattice<double>(
          lattice.frames(), lattice.labels(), lattice.vocab_size(), probe));
      probe(r, k) = base(r, k) - step;
      const double minus = f(PosteriorLattice<double>(
          lattice.frames(), lattice.labels(), lattice.vocab_size(), probe));
      probe(r, k) = base(r, k);
      grad(r, k) = (plus - minus) / (2.0 * step);
    }
  return grad;
}

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

double max_relative_error(const Table<double> &a, const Table<double> &b,
                          double floor) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DataError("gradient tables differ in shape");
  double worst = 0.0;
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index k = 0; k < a.cols(); ++k)
      worst = std::max(worst, relative_error(a(r, k), b(r, k), floor));
  return worst;
}

}  // namespace twrnnt::oracle
