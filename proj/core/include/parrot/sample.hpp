// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace parrot {

using TokenId = std::uint32_t;

// Vocabulary of `languages` disjoint blocks of `per_language` tokens. Inside a
// block, ids [0, classes) are answer tokens (one per class) and the rest are
// prompt tokens.
struct VocabLayout {
  std::size_t languages = 6;
  std::size_t per_language = 24;
  std::size_t classes = 8;

  std::size_t total() const { return languages * per_language; }
  std::size_t language_of(TokenId t) const { return t / per_language; }
  TokenId block_begin(std::size_t lang) const {
    return static_cast<TokenId>(lang * per_language);
  }
  TokenId answer_token(std::size_t lang, std::size_t cls) const {
    return static_cast<TokenId>(lang * per_language + cls);
  }
  TokenId prompt_begin(std::size_t lang) const {
    return static_cast<TokenId>(lang * per_language + classes);
  }
  std::size_t prompt_tokens_per_language() const { return per_language - classes; }

  void validate() const;
  friend bool operator==(const VocabLayout&, const VocabLayout&) = default;
};

// Default language labels, in id order.
const std::vector<std::string>& default_language_labels();
std::string language_label(std::size_t lang);
// Inverse of language_label; throws IndexError for unknown labels.
std::size_t language_id(const std::string& label);

struct Sample {
  std::vector<double> features;
  std::uint32_t class_id = 0;
  std::uint32_t language = 0;
  std::vector<TokenId> prompt;
  TokenId answer = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

}  // namespace parrot
