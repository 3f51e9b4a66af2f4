// twrnnt/src/wer.cc
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

#include "twrnnt/wer.h"

#include <algorithm>
#include <vector>

namespace twrnnt {

EditCounts align_counts(std::span<const int> hyp, std::span<const int> ref) {
  const size_t H = hyp.size(), R = ref.size();
  // cost(i, j): distance between ref[0..i) and hyp[0..j)
  std::vector<int> cost((R + 1) * (H + 1));
  auto at = [&](size_t i, size_t j) -> int & { return cost[i * (H + 1) + j]; };
  for (size_t i = 0; i <= R; ++i) at(i, 0) = static_cast<int>(i);
  for (size_t j = 0; j <= H; ++j) at(0, j) = static_cast<int>(j);
  for (size_t i = 1; i <= R; ++i)
    for (size_t j = 1; j <= H; ++j)
      at(i, j) = std::min({at(i - 1, j - 1) + (ref[i - 1] != hyp[j - 1]),
                           at(i, j - 1) + 1, at(i - 1, j) + 1});

  EditCounts c;
  c.ref_length = static_cast<int>(R);
  size_t i = R, j = H;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        at(i, j) == at(i - 1, j - 1) + (ref[i - 1] != hyp[j - 1])) {
      c.substitutions += ref[i - 1] != hyp[j - 1];
      --i, --j;
    } else if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      ++c.insertions;
      --j;
    } else {
      ++c.deletions;
      --i;
    }
  }
  return c;
}

double wer(std::span<const int> hyp, std::span<const int> ref,
           EditCounts *counts) {
  if (ref.empty() && !hyp.empty()) throw DataError("empty reference");
  EditCounts c = align_counts(hyp, ref);
  if (counts) *counts = c;
  return ref.empty() ? 0.0 : static_cast<double>(c.errors()) / c.ref_length;
}

double corpus_wer(std::span<const LabelSequence> hyps,
                  std::span<const LabelSequence> refs, EditCounts *counts) {
  if (hyps.size() != refs.size())
    throw DataError("hypothesis and reference counts differ");
  EditCounts total;
  for (size_t n = 0; n < refs.size(); ++n) total += align_counts(hyps[n], refs[n]);
  if (counts) *counts = total;
  if (total.ref_length == 0) {
    if (total.insertions > 0) throw DataError("empty reference");
    return 0.0;
  }
  return static_cast<double>(total.errors()) / total.ref_length;
}

}  // namespace twrnnt
