// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>

#include "parrot/config.hpp"
#include "parrot/evaluator.hpp"
#include "parrot/gradcheck.hpp"
#include "parrot/synth_data.hpp"
#include "parrot/toy_model.hpp"
#include "parrot/trainer.hpp"

// Glue shared by the CLI and the end-to-end tests.
namespace parrot::pipeline {

enum class Stages { kFirst, kSecond, kBoth };

struct TrainResult {
  std::unique_ptr<model::ToyModel> model;
  train::StageResult stage1;
  train::StageResult stage2;
};

std::unique_ptr<model::ToyModel> build_model(const config::ExperimentConfig& cfg);

// Stage 1 on a fresh model, then init_moe + stage 2 (skipping init_moe for
// --no-moe models). Stage 2 alone continues `start` when given.
TrainResult train(const config::ExperimentConfig& cfg, const data::Corpus& corpus, Stages stages,
                  std::unique_ptr<model::ToyModel> start = nullptr);

// Seed used for init_moe: the alignment seed.
std::uint64_t moe_seed(const config::ExperimentConfig& cfg);

struct GradCheckOptions {
  std::size_t batch = 2;
  double eps = 1e-3;
  double tolerance = 1e-4;
  Stencil stencil = Stencil::kFivePoint;
};

// Finite-difference check of the mean stage-2 loss over every trainable
// parameter of a freshly built (and MoE-initialized) model, on the first
// `batch` training samples of the configured corpus.
GradCheckReport gradcheck_stage2(const config::ExperimentConfig& cfg,
                                 const GradCheckOptions& opts = {});

}  // namespace parrot::pipeline
