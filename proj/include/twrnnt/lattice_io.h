// twrnnt/lattice_io.h
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


#ifndef TWRNNT_LATTICE_IO_H_
#define TWRNNT_LATTICE_IO_H_

#include <optional>
#include <string>

#include "json.hpp"

#include "twrnnt/lattice.h"
#include "twrnnt/token_conditional.h"

namespace twrnnt {

/// {"t": T, "u": U, "v": |V|, "logp": [T*(U+1)*(|V|+1) values]}, row-major
/// over (t, u, k) with blank last.  JSON has no infinities, so a hard zero
/// (-inf) is written as null.
nlohmann::json lattice_to_json(const PosteriorLattice<double> &lattice);
PosteriorLattice<double> lattice_from_json(const nlohmann::json &j);

/// Same layout with the values under "grad".
nlohmann::json gradient_to_json(const PosteriorLattice<double> &lattice,
                                const Table<double> &grad);

/// {"conditionals": [...], "final_blank_logp": x}
nlohmann::json profile_to_json(const ConditionalProfile<double> &p);

/// A lattice file for loss-check: the lattice fields plus "labels" and,
/// optionally, "expected_loss".
struct LatticeInstance {
  PosteriorLattice<double> lattice;
  LabelSequence labels;
  std::optional<double> expected_loss;
};

LatticeInstance read_lattice_instance(const std::string &path);
void write_lattice_instance(const std::string &path, const LatticeInstance &instance);

}  // namespace twrnnt

#endif  // TWRNNT_LATTICE_IO_H_
