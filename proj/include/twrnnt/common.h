// twrnnt/common.h
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

#ifndef TWRNNT_COMMON_H_
#define TWRNNT_COMMON_H_

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace twrnnt {

inline constexpr const char *kCodeVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

// Error categories map onto CLI exit codes: config 2, data 3, numerical 4.
enum class ErrorKind { kConfig, kData, kNumerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string &what)
      : Error(ErrorKind::kConfig, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string &what) : Error(ErrorKind::kData, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string &what)
      : Error(ErrorKind::kNumerical, what) {}
};

/// Target token sequence y_1..y_U; tokens lie in [0, vocab_size).
using LabelSequence = std::vector<int>;

/// Row-major dense table. Lattices are stored as (T*(U+1)) x (|V|+1) so the
/// flat storage order is (t, u, k), matching the JSON wire format.
template <typename Scalar>
using Table =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
inline constexpr Scalar kLogZero = -std::numeric_limits<Scalar>::infinity();

/// log(exp(a) + exp(b)); both arguments may be -inf.
template <typename Scalar>
inline Scalar log_add(Scalar a, Scalar b) {
  if (a < b) std::swap(a, b);
  if (b == kLogZero<Scalar>) return a;
  return a + std::log1p(std::exp(b - a));
}

/// Log-sum-exp of a sequence, accumulated in the given order.
template <typename Scalar, typename Range>
inline Scalar log_sum_exp(const Range &values) {
  Scalar max = kLogZero<Scalar>;
  for (Scalar v : values) max = std::max(max, v);
  if (max == kLogZero<Scalar>) return max;
  Scalar sum = 0;
  for (Scalar v : values) sum += std::exp(v - max);
  return max + std::log(sum);
}

}  // namespace twrnnt

#endif  // TWRNNT_COMMON_H_
