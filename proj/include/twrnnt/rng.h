// twrnnt/rng.h
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

#ifndef TWRNNT_RNG_H_
#define TWRNNT_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace twrnnt {

using Rng = std::mt19937_64;

/*
  Seed derivation.  Every random stream is keyed by the root seed plus a
  path of integers naming its purpose (stream tag, seed index, split,
  utterance index, ...).  The key is folded through SplitMix64, so a
  stream's draws depend only on its own key and never on how many other
  streams were consumed before it or on which thread runs it.
*/

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(root);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t root,
                    std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(root, path));
}

/// FNV-1a, used for config hashes in provenance blocks.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Stream tags.
enum StreamTag : std::uint64_t {
  kStreamPrototypes = 1,
  kStreamSplit = 2,
  kStreamInit = 3,
  kStreamShuffle = 4,
  kStreamCorruption = 5,
  kStreamMixing = 6,
  kStreamExperiment = 7,
  kStreamTest = 99,
};

}  // namespace twrnnt

#endif  // TWRNNT_RNG_H_
