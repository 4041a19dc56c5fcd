// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#include "parrot/sample.hpp"

#include <algorithm>

#include "parrot/error.hpp"

namespace parrot {

void VocabLayout::validate() const {
  if (languages == 0) throw ConfigError("vocabulary needs at least one language");
  if (classes == 0) throw ConfigError("vocabulary needs at least one class");
  if (classes > per_language) {
    throw CapacityError(std::to_string(classes) + " classes do not fit a block of " +
                        std::to_string(per_language) + " tokens");
  }
  if (classes == per_language) {
    throw CapacityError("no prompt tokens left in a block of " + std::to_string(per_language) +
                        " tokens with " + std::to_string(classes) + " classes");
  }
}

const std::vector<std::string>& default_language_labels() {
  static const std::vector<std::string> labels = {"en", "zh", "pt", "ar", "tr", "ru"};
  return labels;
}

std::string language_label(std::size_t lang) {
  const auto& labels = default_language_labels();
  if (lang < labels.size()) return labels[lang];
  return "l" + std::to_string(lang);
}

std::size_t language_id(const std::string& label) {
  const auto& labels = default_language_labels();
  if (auto it = std::find(labels.begin(), labels.end(), label); it != labels.end()) {
    return static_cast<std::size_t>(it - labels.begin());
  }
  if (label.size() > 1 && label[0] == 'l' &&
      std::all_of(label.begin() + 1, label.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return std::stoul(label.substr(1));
  }
  throw IndexError("unknown language label '" + label + "'");
}

}  // namespace parrot
