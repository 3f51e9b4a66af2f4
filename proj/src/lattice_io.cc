// twrnnt/src/lattice_io.cc
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


#include "twrnnt/lattice_io.h"

#include <cmath>
#include <fstream>

namespace twrnnt {

using nlohmann::json;

namespace {

json flat(const Table<double> &t) {
  json out = json::array();
  for (Eigen::Index r = 0; r < t.rows(); ++r)
    for (Eigen::Index k = 0; k < t.cols(); ++k) {
      const double x = t(r, k);
      out.push_back(x == kLogZero<double> ? json(nullptr) : json(x));
    }
  return out;
}

json header(const PosteriorLattice<double> &l) {
  return {{"t", l.frames()}, {"u", l.labels()}, {"v", l.vocab_size()}};
}

}  // namespace

json lattice_to_json(const PosteriorLattice<double> &lattice) {
  json j = header(lattice);
  j["logp"] = flat(lattice.table());
  return j;
}

json gradient_to_json(const PosteriorLattice<double> &lattice, const Table<double> &grad) {
  json j = header(lattice);
  j["grad"] = flat(grad);
  return j;
}

PosteriorLattice<double> lattice_from_json(const json &j) {
  int T, U, V;
  try {
    T = j.at("t").get<int>();
    U = j.at("u").get<int>();
    V = j.at("v").get<int>();
  } catch (const json::exception &e) {
    throw DataError(std::string("lattice: ") + e.what());
  }
  if (T < 1 || U < 0 || V < 1) throw DataError("lattice: bad dimensions");
  const json &logp = j.at("logp");
  const size_t expect = static_cast<size_t>(T) * (U + 1) * (V + 1);
  if (!logp.is_array() || logp.size() != expect)
    throw DataError("lattice: logp has " + std::to_string(logp.size()) + " entries, expected " +
                    std::to_string(expect));
  Table<double> t(static_cast<Eigen::Index>(T) * (U + 1), V + 1);
  for (size_t i = 0; i < expect; ++i) {
    const json &x = logp[i];
    if (x.is_null()) {
      t.data()[i] = kLogZero<double>;
    } else if (x.is_number()) {
      t.data()[i] = x.get<double>();
    } else {
      throw DataError("lattice: logp entry " + std::to_string(i) + " is not a number");
    }
  }
  return PosteriorLattice<double>(T, U, V, std::move(t));
}

json profile_to_json(const ConditionalProfile<double> &p) {
  std::vector<double> c(p.size());
  const auto cond = p.conditionals();
  for (int u = 0; u < p.size(); ++u) c[u] = cond(u);
  return {{"conditionals", c}, {"final_blank_logp", p.final_blank_logp}};
}

LatticeInstance read_lattice_instance(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception &e) {
    throw DataError(path + ": " + e.what());
  }
  LatticeInstance inst{lattice_from_json(j), {}, std::nullopt};
  try {
    inst.labels = j.at("labels").get<LabelSequence>();
    if (j.contains("expected_loss")) inst.expected_loss = j["expected_loss"].get<double>();
  } catch (const json::exception &e) {
    throw DataError(path + ": " + e.what());
  }
  check_dimensions(inst.lattice, inst.labels);
  return inst;
}

void write_lattice_instance(const std::string &path, const LatticeInstance &instance) {
  json j = lattice_to_json(instance.lattice);
  j["labels"] = instance.labels;
  if (instance.expected_loss) j["expected_loss"] = *instance.expected_loss;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(1) << '\n';
}

}  // namespace twrnnt
