// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "parrot/sample.hpp"

namespace parrot::data {

// English-heavy multilingual toy corpus. `pool_counts[l]` samples are drawn
// for language l; a language-balanced eval split of
// round((1 - train_fraction) * min(pool_counts)) samples per language is taken
// first and the remainder of every pool goes to training.
struct DatasetSpec {
  VocabLayout layout;
  std::size_t feature_dim = 16;
  std::vector<std::size_t> pool_counts = {1100, 200, 200, 200, 200, 200};
  double noise = 0.5;
  std::size_t prompt_length = 4;
  double train_fraction = 0.5;
  std::uint64_t seed = 1234;

  void validate() const;
  std::size_t eval_per_language() const;
  std::size_t train_count(std::size_t lang) const;
};

struct Corpus {
  VocabLayout layout;
  std::size_t feature_dim = 0;
  std::vector<Sample> samples;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

struct Split {
  Corpus train;
  Corpus eval;
  std::vector<std::vector<double>> prototypes;  // classes x feature_dim
};

// Deterministic in spec.seed. Class prototypes ~ N(0, I) are shared by all
// languages; features = prototype + noise * N(0, I). Class ids cycle through
// 0..K-1 inside each language, so every split is class balanced up to one.
Split generate(const DatasetSpec& spec);

// Line format, one sample per line after a header:
//   #parrot-corpus v1 languages=6 per_language=24 classes=8 feature_dim=16
//   lang=pt class=3 answer=51 prompt=57,60,58,63 features=0.1,-1.25,...
// Floats use the shortest decimal form that reads back to the same double.
void write_corpus(const Corpus& corpus, std::ostream& out);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus read_corpus(std::istream& in);
Corpus read_corpus(const std::filesystem::path& path);

// Checks one sample against the layout: label consistency, id ranges, and
// prompt tokens drawn from the prompt part of the sample's own block.
void validate_sample(const Sample& s, const VocabLayout& layout, std::size_t feature_dim);

}  // namespace parrot::data
