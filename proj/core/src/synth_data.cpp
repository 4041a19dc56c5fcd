// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#include "parrot/synth_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "parrot/error.hpp"
#include "parrot/rng.hpp"

namespace parrot::data {

void DatasetSpec::validate() const {
  layout.validate();
  if (feature_dim == 0) throw ConfigError("feature_dim must be positive");
  if (pool_counts.size() != layout.languages) {
    throw ConfigError("expected " + std::to_string(layout.languages) +
                      " per-language counts, got " + std::to_string(pool_counts.size()));
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("noise must be >= 0");
  if (prompt_length == 0) throw ConfigError("prompt_length must be positive");
}

std::size_t DatasetSpec::eval_per_language() const {
  const std::size_t smallest = *std::min_element(pool_counts.begin(), pool_counts.end());
  return static_cast<std::size_t>(std::llround((1.0 - train_fraction) *
                                               static_cast<double>(smallest)));
}

std::size_t DatasetSpec::train_count(std::size_t lang) const {
  return pool_counts.at(lang) - eval_per_language();
}

Split generate(const DatasetSpec& spec) {
  spec.validate();
  const VocabLayout& lay = spec.layout;
  Rng rng(spec.seed);

  Split split;
  split.prototypes.assign(lay.classes, std::vector<double>(spec.feature_dim));
  for (auto& proto : split.prototypes) {
    for (double& v : proto) v = rng.normal();
  }
  split.train.layout = split.eval.layout = lay;
  split.train.feature_dim = split.eval.feature_dim = spec.feature_dim;

  const std::size_t n_eval = spec.eval_per_language();
  const std::size_t prompt_vocab = lay.prompt_tokens_per_language();
  for (std::size_t lang = 0; lang < lay.languages; ++lang) {
    for (std::size_t i = 0; i < spec.pool_counts[lang]; ++i) {
      Sample s;
      s.language = static_cast<std::uint32_t>(lang);
      s.class_id = static_cast<std::uint32_t>(i % lay.classes);
      s.features = split.prototypes[s.class_id];
      for (double& v : s.features) v += spec.noise * rng.normal();
      s.prompt.resize(spec.prompt_length);
      for (TokenId& t : s.prompt) {
        t = lay.prompt_begin(lang) + static_cast<TokenId>(rng.index(prompt_vocab));
      }
      s.answer = lay.answer_token(lang, s.class_id);
      (i < n_eval ? split.eval : split.train).samples.push_back(std::move(s));
    }
  }
  return split;
}

void validate_sample(const Sample& s, const VocabLayout& layout, std::size_t feature_dim) {
  if (s.features.size() != feature_dim) {
    throw DimensionError("sample has " + std::to_string(s.features.size()) +
                         " features, expected " + std::to_string(feature_dim));
  }
  if (s.language >= layout.languages) throw IndexError("language id out of range");
  if (s.class_id >= layout.classes) throw IndexError("class id out of range");
  if (s.answer != layout.answer_token(s.language, s.class_id)) {
    throw IndexError("answer token " + std::to_string(s.answer) +
                     " inconsistent with language/class");
  }
  if (s.prompt.empty()) throw IndexError("empty prompt");
  const TokenId lo = layout.prompt_begin(s.language);
  const TokenId hi = layout.block_begin(s.language) + static_cast<TokenId>(layout.per_language);
  for (TokenId t : s.prompt) {
    if (t < lo || t >= hi) {
      throw IndexError("prompt token " + std::to_string(t) + " is not a " +
                       language_label(s.language) + " prompt token");
    }
  }
}

namespace {

template <typename T>
void append_list(std::string& out, const std::vector<T>& items) {
  char buf[64];
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out.push_back(',');
    auto res = std::to_chars(buf, buf + sizeof(buf), items[i]);
    out.append(buf, res.ptr);
  }
}

template <typename T>
T parse_number(std::string_view text, std::size_t line) {
  T value{};
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError("bad number '" + std::string(text) + "'", line);
  }
  return value;
}

template <typename T>
std::vector<T> parse_list(std::string_view text, std::size_t line) {
  std::vector<T> out;
  while (!text.empty()) {
    const std::size_t comma = text.find(',');
    out.push_back(parse_number<T>(text.substr(0, comma), line));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
    if (text.empty()) throw ParseError("trailing comma", line);
  }
  return out;
}

// Splits "k1=v1 k2=v2 ..." into pairs, in order.
std::vector<std::pair<std::string_view, std::string_view>> key_values(std::string_view text,
                                                                      std::size_t line) {
  std::vector<std::pair<std::string_view, std::string_view>> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] == ' ') {
      ++pos;
      continue;
    }
    std::size_t end = text.find(' ', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view field = text.substr(pos, end - pos);
    const std::size_t eq = field.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw ParseError("expected key=value, got '" + std::string(field) + "'", line);
    }
    out.emplace_back(field.substr(0, eq), field.substr(eq + 1));
    pos = end;
  }
  return out;
}

}  // namespace

void write_corpus(const Corpus& corpus, std::ostream& out) {
  out << "#parrot-corpus v1 languages=" << corpus.layout.languages
      << " per_language=" << corpus.layout.per_language << " classes=" << corpus.layout.classes
      << " feature_dim=" << corpus.feature_dim << '\n';
  std::string line;
  for (const Sample& s : corpus.samples) {
    line = "lang=" + language_label(s.language) + " class=" + std::to_string(s.class_id) +
           " answer=" + std::to_string(s.answer) + " prompt=";
    append_list(line, s.prompt);
    line += " features=";
    append_list(line, s.features);
    out << line << '\n';
  }
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_corpus(corpus, out);
}

Corpus read_corpus(std::istream& in) {
  Corpus corpus;
  std::string text;
  std::size_t line = 0;
  bool have_header = false;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    std::string_view view(text);
    if (!have_header) {
      constexpr std::string_view kMagic = "#parrot-corpus v1";
      if (!view.starts_with(kMagic)) throw ParseError("missing '#parrot-corpus v1' header", line);
      bool seen[4] = {false, false, false, false};
      for (auto [k, v] : key_values(view.substr(kMagic.size()), line)) {
        if (k == "languages") {
          corpus.layout.languages = parse_number<std::size_t>(v, line);
          seen[0] = true;
        } else if (k == "per_language") {
          corpus.layout.per_language = parse_number<std::size_t>(v, line);
          seen[1] = true;
        } else if (k == "classes") {
          corpus.layout.classes = parse_number<std::size_t>(v, line);
          seen[2] = true;
        } else if (k == "feature_dim") {
          corpus.feature_dim = parse_number<std::size_t>(v, line);
          seen[3] = true;
        } else {
          throw ParseError("unknown header key '" + std::string(k) + "'", line);
        }
      }
      if (!(seen[0] && seen[1] && seen[2] && seen[3])) {
        throw ParseError("incomplete corpus header", line);
      }
      have_header = true;
      continue;
    }
    const auto fields = key_values(view, line);
    constexpr std::string_view kOrder[] = {"lang", "class", "answer", "prompt", "features"};
    if (fields.size() != std::size(kOrder)) {
      throw ParseError("expected fields lang, class, answer, prompt, features", line);
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (fields[i].first != kOrder[i]) {
        throw ParseError("unexpected field '" + std::string(fields[i].first) + "'", line);
      }
    }
    Sample s;
    try {
      s.language = static_cast<std::uint32_t>(language_id(std::string(fields[0].second)));
    } catch (const IndexError& e) {
      throw ParseError(e.what(), line);
    }
    s.class_id = parse_number<std::uint32_t>(fields[1].second, line);
    s.answer = parse_number<TokenId>(fields[2].second, line);
    s.prompt = parse_list<TokenId>(fields[3].second, line);
    s.features = parse_list<double>(fields[4].second, line);
    try {
      validate_sample(s, corpus.layout, corpus.feature_dim);
    } catch (const Error& e) {
      throw ParseError(e.what(), line);
    }
    corpus.samples.push_back(std::move(s));
  }
  if (!have_header) throw ParseError("empty corpus file", line == 0 ? 1 : line);
  return corpus;
}

Corpus read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus '" + path.string() + "'");
  return read_corpus(in);
}

}  // namespace parrot::data
