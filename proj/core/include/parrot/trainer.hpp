// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "parrot/rng.hpp"
#include "parrot/synth_data.hpp"
#include "parrot/toy_model.hpp"

namespace parrot::train {

struct StageConfig {
  int stage = 1;
  double lr = 1e-3;
  std::size_t steps = 200;
  std::size_t batch_size = 16;
  double weight_decay = 0.0;
  bool cosine = true;
  std::uint64_t seed = 99;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

// Learning rates used for the 7B-scale runs (1e-3 then 2e-5).
StageConfig reference_preset(int stage);

// lr0 * 0.5 * (1 + cos(pi * step / total)); lr0 when total is 0.
double cosine_lr(std::size_t step, std::size_t total, double lr0);

// AdamW with decoupled weight decay. Moments are keyed by parameter name and
// created lazily for updatable parameters only.
class AdamW {
 public:
  AdamW(double beta1, double beta2, double eps, double weight_decay);
  explicit AdamW(const StageConfig& cfg)
      : AdamW(cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay) {}

  // Updates every updatable parameter that carries a gradient; others are untouched.
  void step(std::span<Parameter* const> params, double lr);

  std::size_t step_count() const { return t_; }
  bool has_moments(const std::string& name) const { return moments_.count(name) != 0; }
  std::size_t moment_count() const { return moments_.size(); }

 private:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };
  double beta1_, beta2_, eps_, weight_decay_;
  std::size_t t_ = 0;
  std::map<std::string, Moments> moments_;
};

struct LossRecord {
  std::size_t step;
  double loss;
  double lr;
};

struct RoutingRecord {
  std::size_t step;
  std::uint32_t language;
  std::vector<double> probs;
};

struct StageResult {
  std::vector<LossRecord> losses;
  std::vector<RoutingRecord> routing;
  std::string sampler_state;  // batch sampler RNG after the last step; empty if no steps
};

// Seeded epoch-wise permutation batches; reshuffles when a pass is exhausted.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed);
  std::vector<std::size_t> next();
  std::string rng_state() const { return rng_.state(); }

 private:
  std::size_t n_, batch_size_, cursor_ = 0;
  std::vector<std::size_t> order_;
  Rng rng_;
};

// Projector-only training with the MoE bypassed.
StageResult train_stage1(model::ToyModel& model, const data::Corpus& corpus,
                         const StageConfig& cfg);

// Random MoE initialization that must precede stage 2.
void init_moe(model::ToyModel& model, std::uint64_t seed);

// Projector + LLM + MoE training; router probabilities of every sample are
// logged with their language. Throws StateError if the MoE was never initialized.
StageResult train_stage2(model::ToyModel& model, const data::Corpus& corpus,
                         const StageConfig& cfg);

void write_loss_trace(std::span<const LossRecord> records, std::ostream& out);
void write_routing_log(std::span<const RoutingRecord> records, std::ostream& out);
std::vector<RoutingRecord> read_routing_log(std::istream& in);

}  // namespace parrot::train
