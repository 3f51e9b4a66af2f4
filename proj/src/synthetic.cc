// twrnnt/src/synthetic.cc
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


#include "twrnnt/synthetic.h"

#include <filesystem>
#include <random>

#include "twrnnt/rng.h"

namespace twrnnt {

void SyntheticSpec::validate() const {
  if (vocab_size < 2) throw ConfigError("vocab_size must be at least 2");
  if (feature_dim < 1) throw ConfigError("feature_dim must be positive");
  if (min_tokens < 1 || max_tokens < min_tokens)
    throw ConfigError("invalid token length range");
  if (min_frames_per_token < 1 || max_frames_per_token < min_frames_per_token)
    throw ConfigError("invalid frames-per-token range");
  if (!(noise >= 0.0) || !(prototype_scale > 0.0))
    throw ConfigError("noise must be >= 0 and prototype_scale > 0");
  if (split_sizes.size() != split_names().size())
    throw ConfigError("expected one size per split");
  for (int n : split_sizes)
    if (n < 0) throw ConfigError("split sizes must be nonnegative");
}

nlohmann::json SyntheticSpec::to_json() const {
  nlohmann::json sizes;
  for (size_t s = 0; s < split_names().size(); ++s) sizes[split_names()[s]] = split_sizes[s];
  return {{"vocab_size", vocab_size},
          {"feature_dim", feature_dim},
          {"min_tokens", min_tokens},
          {"max_tokens", max_tokens},
          {"min_frames_per_token", min_frames_per_token},
          {"max_frames_per_token", max_frames_per_token},
          {"noise", noise},
          {"prototype_scale", prototype_scale},
          {"allow_adjacent_repeats", allow_adjacent_repeats},
          {"seed", seed},
          {"split_sizes", sizes}};
}

const std::vector<Utterance> &SyntheticCorpus::split(const std::string &name) const {
  for (size_t s = 0; s < split_names().size(); ++s)
    if (split_names()[s] == name) return splits.at(s);
  throw ConfigError("unknown split '" + name + "'");
}

SyntheticCorpus generate_synthetic_dataset(const SyntheticSpec &spec) {
  spec.validate();
  SyntheticCorpus corpus;
  {
    Rng rng = make_rng(spec.seed, {kStreamPrototypes});
    std::normal_distribution<double> normal(0.0, spec.prototype_scale);
    corpus.vocab.prototypes.resize(spec.vocab_size, spec.feature_dim);
    for (int k = 0; k < spec.vocab_size; ++k)
      for (int d = 0; d < spec.feature_dim; ++d) corpus.vocab.prototypes(k, d) = normal(rng);
  }
  const auto &P = corpus.vocab.prototypes;
  corpus.splits.resize(split_names().size());
  for (size_t s = 0; s < split_names().size(); ++s) {
    for (int n = 0; n < spec.split_sizes[s]; ++n) {
      Rng rng = make_rng(spec.seed, {kStreamSplit, s, static_cast<std::uint64_t>(n)});
      std::uniform_int_distribution<int> length(spec.min_tokens, spec.max_tokens);
      std::uniform_int_distribution<int> span(spec.min_frames_per_token,
                                              spec.max_frames_per_token);
      std::normal_distribution<double> noise(0.0, 1.0);
      Utterance u;
      u.id = split_names()[s] + "-" + std::to_string(n);
      const int U = length(rng);
      for (int i = 0; i < U; ++i) {
        int tok;
        if (spec.allow_adjacent_repeats || u.tokens.empty()) {
          tok = std::uniform_int_distribution<int>(0, spec.vocab_size - 1)(rng);
        } else {
          tok = std::uniform_int_distribution<int>(0, spec.vocab_size - 2)(rng);
          if (tok >= u.tokens.back()) ++tok;
        }
        u.tokens.push_back(tok);
      }
      std::vector<int> spans(U);
      int frames = 0;
      for (int &f : spans) frames += f = span(rng);
      u.features.resize(frames, spec.feature_dim);
      int row = 0;
      for (int i = 0; i < U; ++i)
        for (int f = 0; f < spans[i]; ++f, ++row)
          for (int d = 0; d < spec.feature_dim; ++d)
            u.features(row, d) = P(u.tokens[i], d) + spec.noise * noise(rng);
      corpus.splits[s].push_back(std::move(u));
    }
  }
  return corpus;
}

void write_synthetic_corpus(const std::string &dir, const SyntheticCorpus &corpus,
                            const Provenance &provenance, const SyntheticSpec &spec) {
  std::filesystem::create_directories(dir);
  Vocab vocab = corpus.vocab;
  vocab.provenance = provenance;
  write_vocab(dir + "/vocab.json", vocab);
  for (size_t s = 0; s < split_names().size(); ++s) {
    Dataset d{provenance, spec.vocab_size, spec.feature_dim, corpus.splits[s]};
    write_dataset(dir + "/" + split_names()[s] + ".jsonl", d);
  }
}

}  // namespace twrnnt
