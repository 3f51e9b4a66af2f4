// twrnnt/wer.h
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

#ifndef TWRNNT_WER_H_
#define TWRNNT_WER_H_

#include <span>

#include "twrnnt/common.h"

namespace twrnnt {

struct EditCounts {
  int substitutions = 0;
  int insertions = 0;
  int deletions = 0;
  int ref_length = 0;

  int errors() const { return substitutions + insertions + deletions; }
  EditCounts &operator+=(const EditCounts &o) {
    substitutions += o.substitutions;
    insertions += o.insertions;
    deletions += o.deletions;
    ref_length += o.ref_length;
    return *this;
  }
};

/// Levenshtein alignment of hyp against ref.  Counts come from one optimal
/// alignment; on ties the backtrace prefers match/substitution, then
/// insertion, then deletion.  Empty references are allowed here.
EditCounts align_counts(std::span<const int> hyp, std::span<const int> ref);

/// Token error rate.  Throws DataError("empty reference") when ref is empty
/// and hyp is not; two empty sequences score 0.
double wer(std::span<const int> hyp, std::span<const int> ref,
           EditCounts *counts = nullptr);

/// Total edits over total reference length.
double corpus_wer(std::span<const LabelSequence> hyps,
                  std::span<const LabelSequence> refs,
                  EditCounts *counts = nullptr);

}  // namespace twrnnt

#endif  // TWRNNT_WER_H_
