// twrnnt/src/token_conditional.cc
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

#include "twrnnt/token_conditional.h"

namespace twrnnt {

PosteriorLattice<double> materialize_lattice(int frames, int vocab_size,
                                             const LabelSequence &y,
                                             const RowFunction &rows) {
  const int U = static_cast<int>(y.size());
  Table<double> logp(static_cast<Eigen::Index>(frames) * (U + 1),
                     vocab_size + 1);
  std::span<const int> all(y);
  for (int t = 0; t < frames; ++t)
    for (int u = 0; u <= U; ++u) {
      Vector<double> row = rows(t, all.first(u));
      if (row.size() != vocab_size + 1)
        throw DataError("row function returned " + std::to_string(row.size()) +
                        " entries, expected " + std::to_string(vocab_size + 1));
      logp.row(static_cast<Eigen::Index>(t) * (U + 1) + u) = row.transpose();
    }
  return PosteriorLattice<double>(frames, U, vocab_size, std::move(logp));
}

Vector<double> next_token_distribution(int frames, int vocab_size,
                                       const LabelSequence &prefix,
                                       const RowFunction &rows) {
  auto lattice = materialize_lattice(frames, vocab_size, prefix, rows);
  return next_token_distribution(lattice, prefix,
                                 static_cast<int>(prefix.size()) + 1);
}

}  // namespace twrnnt
