// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>

#include "parrot/toy_model.hpp"

namespace parrot::train {

struct CheckpointMeta {
  int stage = 1;
  std::size_t step = 0;
  std::string rng_state;  // empty when not recorded
};

// Text container, bit exact through hexadecimal floats:
//
//   #parrot-checkpoint v1
//   stage 2
//   step 600
//   moe_initialized 1
//   rng <engine state>
//   config model.width=32          (one line per model key)
//   param llm.head.bias 2 1 144
//   <values as hex floats, space separated>
//   end
void save_checkpoint(const model::ToyModel& model, const CheckpointMeta& meta, std::ostream& out);
void save_checkpoint(const model::ToyModel& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path);

// Rebuilds the model from the embedded config and loads every array. Missing,
// unexpected or mis-shaped arrays raise CheckpointError naming the keys.
std::unique_ptr<model::ToyModel> load_checkpoint(std::istream& in, CheckpointMeta* meta = nullptr);
std::unique_ptr<model::ToyModel> load_checkpoint(const std::filesystem::path& path,
                                                 CheckpointMeta* meta = nullptr);

}  // namespace parrot::train
