// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#include "parrot/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <string_view>

#include "parrot/error.hpp"

namespace parrot::config {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  T v{};
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("bad value '" + text + "' for key '" + key + "'");
  }
  return v;
}

template <>
bool parse_value<bool>(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("bad boolean '" + text + "' for key '" + key + "'");
}

template <typename T>
std::string format_value(T v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
  }
}

template <typename Root>
struct Binding {
  std::string key;
  std::function<void(Root&, const std::string&)> set;
  std::function<std::string(const Root&)> get;
};

template <typename Root, typename T>
Binding<Root> bind(std::string key, T Root::*member) {
  return Binding<Root>{
      key,
      [key, member](Root& r, const std::string& text) { r.*member = parse_value<T>(key, text); },
      [member](const Root& r) { return format_value(r.*member); }};
}

// Lifts a binding on a sub-object into one on the enclosing object.
template <typename Root, typename Sub>
Binding<Root> lift(const Binding<Sub>& b, Sub Root::*member, const std::string& prefix) {
  return Binding<Root>{prefix + b.key,
                       [set = b.set, member](Root& r, const std::string& t) { set(r.*member, t); },
                       [get = b.get, member](const Root& r) { return get(r.*member); }};
}

std::vector<Binding<VocabLayout>> layout_bindings() {
  return {bind("languages", &VocabLayout::languages), bind("per_language", &VocabLayout::per_language),
          bind("classes", &VocabLayout::classes)};
}

std::vector<Binding<align::AlignmentConfig>> alignment_bindings() {
  using A = align::AlignmentConfig;
  return {bind("experts", &A::experts), bind("hidden", &A::hidden),
          bind("alpha", &A::alpha),     bind("top_k", &A::top_k),
          bind("seed", &A::seed),       bind("init_stddev", &A::init_stddev),
          bind("router_init_stddev", &A::router_init_stddev)};
}

std::vector<Binding<model::ModelConfig>> model_bindings() {
  using M = model::ModelConfig;
  std::vector<Binding<M>> out;
  for (const auto& b : layout_bindings()) out.push_back(lift(b, &M::layout, "vocab."));
  out.push_back(bind("model.feature_dim", &M::feature_dim));
  for (auto& b : std::vector<Binding<M>>{
           bind("patches", &M::patches), bind("vision_width", &M::vision_width),
           bind("width", &M::width), bind("use_moe", &M::use_moe), bind("seed", &M::seed),
           bind("embed_stddev", &M::embed_stddev),
           bind("embed_language_stddev", &M::embed_language_stddev)}) {
    b.key = "model." + b.key;
    out.push_back(b);
  }
  for (const auto& b : alignment_bindings()) out.push_back(lift(b, &M::alignment, "alignment."));
  return out;
}

std::vector<Binding<train::StageConfig>> stage_bindings() {
  using S = train::StageConfig;
  return {bind("lr", &S::lr),       bind("steps", &S::steps), bind("batch_size", &S::batch_size),
          bind("weight_decay", &S::weight_decay), bind("cosine", &S::cosine),
          bind("seed", &S::seed),   bind("beta1", &S::beta1), bind("beta2", &S::beta2),
          bind("eps", &S::eps)};
}

std::vector<Binding<data::DatasetSpec>> data_bindings() {
  using D = data::DatasetSpec;
  std::vector<Binding<D>> out = {bind("feature_dim", &D::feature_dim), bind("noise", &D::noise),
                                 bind("prompt_length", &D::prompt_length),
                                 bind("train_fraction", &D::train_fraction),
                                 bind("seed", &D::seed)};
  out.push_back(Binding<D>{
      "pool_counts",
      [](D& d, const std::string& text) {
        d.pool_counts.clear();
        std::string_view rest(text);
        while (true) {
          const auto comma = rest.find(',');
          d.pool_counts.push_back(
              parse_value<std::size_t>("pool_counts", trim(rest.substr(0, comma))));
          if (comma == std::string_view::npos) break;
          rest.remove_prefix(comma + 1);
        }
      },
      [](const D& d) {
        std::string s;
        for (std::size_t i = 0; i < d.pool_counts.size(); ++i) {
          if (i) s += ',';
          s += std::to_string(d.pool_counts[i]);
        }
        return s;
      }});
  return out;
}

// Experiment keys. Vocabulary and widths that data, model and alignment share
// are set once and propagated by sync().
std::vector<Binding<ExperimentConfig>> experiment_bindings() {
  using E = ExperimentConfig;
  std::vector<Binding<E>> out;
  out.push_back(bind("seed", &E::seed));
  for (const auto& b : layout_bindings()) {
    out.push_back(lift(lift(b, &data::DatasetSpec::layout, ""), &E::data, "vocab."));
  }
  for (const auto& b : data_bindings()) out.push_back(lift(b, &E::data, "data."));
  for (const auto& b : model_bindings()) {
    if (b.key.starts_with("vocab.") || b.key == "model.feature_dim") continue;
    out.push_back(lift(b, &E::model, ""));
  }
  for (const auto& b : stage_bindings()) out.push_back(lift(b, &E::stage1, "stage1."));
  for (const auto& b : stage_bindings()) out.push_back(lift(b, &E::stage2, "stage2."));
  out.push_back(lift(bind("circular_seed", &EvalOptions::circular_seed), &E::eval, "eval."));
  return out;
}

void sync(ExperimentConfig& cfg) {
  cfg.model.layout = cfg.data.layout;
  cfg.model.feature_dim = cfg.data.feature_dim;
  cfg.model.alignment.channels = cfg.model.width;
  cfg.stage1.stage = 1;
  cfg.stage2.stage = 2;
}

template <typename Root>
void apply_bindings(Root& root, const std::vector<Binding<Root>>& bindings, const KeyValues& kv) {
  for (const auto& [key, value] : kv) {
    bool found = false;
    for (const auto& b : bindings) {
      if (b.key == key) {
        b.set(root, value);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("unknown config key '" + key + "'");
  }
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  stage1.stage = 1;
  stage1.steps = 300;
  stage2.stage = 2;
  stage2.steps = 600;
  data.prompt_length = 2;
  model.embed_language_stddev = 1.5;
  sync(*this);
}

void ExperimentConfig::validate() const {
  data.validate();
  model.validate();
  stage1.validate();
  stage2.validate();
  if (!(model.layout.languages == data.layout.languages &&
        model.layout.per_language == data.layout.per_language &&
        model.layout.classes == data.layout.classes && model.feature_dim == data.feature_dim)) {
    throw ConfigError("model and data disagree on vocabulary or feature width");
  }
}

void derive_seeds(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  if (seed == 0) return;
  std::uint64_t state = seed;
  auto next = [&state] {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  cfg.data.seed = next();
  cfg.model.seed = next();
  cfg.model.alignment.seed = next();
  cfg.stage1.seed = next();
  cfg.stage2.seed = next();
  cfg.eval.circular_seed = next();
}

void apply_overrides(ExperimentConfig& cfg, const KeyValues& kv) {
  KeyValues rest;
  for (const auto& entry : kv) {
    if (entry.first == "seed") {
      derive_seeds(cfg, parse_value<std::uint64_t>("seed", entry.second));
    } else {
      rest.push_back(entry);
    }
  }
  apply_bindings(cfg, experiment_bindings(), rest);
  sync(cfg);
}

KeyValues to_key_values(const ExperimentConfig& cfg) {
  KeyValues out;
  for (const auto& b : experiment_bindings()) out.emplace_back(b.key, b.get(cfg));
  return out;
}

KeyValues parse_ini(std::istream& in) {
  KeyValues out;
  std::string line, section;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) throw ParseError("malformed section header", n);
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", n);
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", n);
    out.emplace_back(section.empty() ? key : section + "." + key, value);
  }
  return out;
}

ExperimentConfig parse(std::istream& in) {
  ExperimentConfig cfg;
  KeyValues kv;
  try {
    kv = parse_ini(in);
  } catch (const ParseError& e) {
    throw ConfigError(std::string("config ") + e.what());
  }
  apply_overrides(cfg, kv);
  cfg.validate();
  return cfg;
}

ExperimentConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  return parse(in);
}

void write(const ExperimentConfig& cfg, std::ostream& out) {
  std::string current;
  for (const auto& [key, value] : to_key_values(cfg)) {
    const auto dot = key.find('.');
    const std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
    if (section != current) {
      out << "\n[" << section << "]\n";
      current = section;
    }
    out << name << " = " << value << '\n';
  }
}

KeyValues model_key_values(const model::ModelConfig& cfg) {
  KeyValues out;
  for (const auto& b : model_bindings()) out.emplace_back(b.key, b.get(cfg));
  return out;
}

model::ModelConfig model_from_key_values(const KeyValues& kv) {
  model::ModelConfig cfg;
  apply_bindings(cfg, model_bindings(), kv);
  cfg.alignment.channels = cfg.width;
  cfg.validate();
  return cfg;
}

}  // namespace parrot::config
