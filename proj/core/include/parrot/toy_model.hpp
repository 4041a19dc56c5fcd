// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "parrot/alignment.hpp"
#include "parrot/param_store.hpp"
#include "parrot/sample.hpp"

namespace parrot::model {

struct ModelConfig {
  VocabLayout layout;
  std::size_t feature_dim = 16;   // D
  std::size_t patches = 4;        // M; the stub emits M + 1 tokens
  std::size_t vision_width = 16;  // C_v
  std::size_t width = 32;         // C
  align::AlignmentConfig alignment;
  bool use_moe = true;
  std::uint64_t seed = 7;
  double embed_stddev = 1.0;
  // Scale of a per-language centroid added to every token row of that
  // language's block; > 0 mimics a pretrained table that separates languages.
  double embed_language_stddev = 0.0;

  void validate() const;
};

enum class Stage { kAlignment = 1, kInstruction = 2 };

enum class ParamGroup { kVision, kProjector, kLlm, kMoe };

// Group from the parameter-name prefix ("vision.", "projector.", "llm.", "moe.").
ParamGroup group_of(std::string_view name);
// Stage 1 trains the projector only; stage 2 adds the LLM and MoE groups.
// The vision stub is never trainable.
bool trainable_in(ParamGroup group, Stage stage);

struct Output {
  Var logits;                      // 1 x V_total
  std::optional<Var> probs;        // router distribution, stage 2 with MoE only
};

struct Prediction {
  std::vector<double> logits;
  std::optional<std::vector<double>> probs;
};

// Frozen vision stub -> projector -> (alignment) -> mean-pool head, plus a
// word-embedding table. Parameters are registered in a fixed order so
// checkpoints and optimizer states line up by name.
class ToyModel {
 public:
  explicit ToyModel(const ModelConfig& cfg);
  ToyModel(const ToyModel&) = delete;
  ToyModel& operator=(const ToyModel&) = delete;

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  Stage stage() const { return stage_; }
  // Applies the stage's trainable mask to every parameter.
  void set_stage(Stage stage);

  bool has_moe() const { return bank_ != nullptr; }
  bool moe_initialized() const { return bank_ && bank_->initialized(); }
  void init_moe(std::uint64_t seed);
  const align::ExpertBank* experts() const { return bank_.get(); }
  align::ExpertBank* experts() { return bank_.get(); }

  // Zv = g(x): (M+1) x C_v tokens of the frozen stub, CLS first.
  Tensor vision_features(std::span<const double> x) const;
  align::VisualTokens encode_image(Tape& tape, std::span<const double> x) const;
  align::TextEmbeddings embed_prompt(Tape& tape, std::span<const TokenId> tokens) const;

  // Stage 1 (or no MoE) bypasses the alignment module: Gv = Hv.
  Output forward_logits(Tape& tape, const Sample& sample) const;
  Var loss(Tape& tape, const Sample& sample) const;
  // Mean cross-entropy over the batch; per-sample outputs are appended to `outputs`.
  Var batch_loss(Tape& tape, std::span<const Sample> batch,
                 std::vector<Output>* outputs = nullptr) const;

  // Inference-mode forward; never touches gradients.
  Prediction predict(const Sample& sample) const;

 private:
  ModelConfig cfg_;
  ParamStore store_;
  Stage stage_ = Stage::kAlignment;
  Parameter* vision_weight_;
  Parameter* vision_bias_;
  Parameter* proj1_weight_;
  Parameter* proj1_bias_;
  Parameter* proj2_weight_;
  Parameter* proj2_bias_;
  Parameter* embed_;
  Parameter* head_weight_;
  Parameter* head_bias_;
  std::unique_ptr<align::ExpertBank> bank_;
};

}  // namespace parrot::model
