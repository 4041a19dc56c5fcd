// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "parrot/synth_data.hpp"
#include "parrot/toy_model.hpp"
#include "parrot/trainer.hpp"

namespace parrot::config {

struct EvalOptions {
  std::uint64_t circular_seed = 5;
};

// Every knob of one experiment. The file format is INI-like:
//
//   seed = 1
//   [data]
//   pool_counts = 1100,200,200,200,200,200
//   [stage2]
//   lr = 0.001
//
// Keys are "section.name" internally ("data.noise"); top-level keys have no
// section. Unknown sections or keys are rejected.
struct ExperimentConfig {
  // 0 keeps the per-section seeds; anything else derives all of them.
  std::uint64_t seed = 0;
  data::DatasetSpec data;
  model::ModelConfig model;
  train::StageConfig stage1;
  train::StageConfig stage2;
  EvalOptions eval;

  ExperimentConfig();
  // Cross-section consistency (vocabulary shared by data and model, widths).
  void validate() const;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Sets the global seed and, when nonzero, rederives every per-section seed.
void derive_seeds(ExperimentConfig& cfg, std::uint64_t seed);

// Applies "section.key" = value assignments in order; throws ConfigError on
// unknown keys or unparsable values. A "seed" entry is applied first so
// explicit per-section seeds still win.
void apply_overrides(ExperimentConfig& cfg, const KeyValues& kv);
// Fully resolved key/value view, in a fixed order.
KeyValues to_key_values(const ExperimentConfig& cfg);

KeyValues parse_ini(std::istream& in);
ExperimentConfig load(const std::filesystem::path& path);
ExperimentConfig parse(std::istream& in);
void write(const ExperimentConfig& cfg, std::ostream& out);

// Model-only subset ("model.*", "alignment.*" and the vocabulary keys), used
// by checkpoints.
KeyValues model_key_values(const model::ModelConfig& cfg);
model::ModelConfig model_from_key_values(const KeyValues& kv);

}  // namespace parrot::config
