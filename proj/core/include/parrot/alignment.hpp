// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "parrot/param_store.hpp"
#include "parrot/tape.hpp"

// Language-expert alignment of visual tokens:
//
//   g  = softmax(h_cls Ht^T / sqrt(C)) Ht          text guidance for the CLS query
//   P  = topk(softmax(W_r g + b_r))                 router distribution over experts
//   D  = sum_i P_i Expert_i(Hv)                     expert mixture, row-wise
//   Gv = Hv + alpha D                               residual reweighting
namespace parrot::align {

struct AlignmentConfig {
  std::size_t experts = 6;
  std::size_t channels = 32;
  std::size_t hidden = 32;
  double alpha = 1.0;
  // Active experts per sample; equal to `experts` gives the dense mixture.
  std::size_t top_k = 6;
  std::uint64_t seed = 17;
  double init_stddev = 0.02;         // expert weights
  double router_init_stddev = 0.02;  // router weights

  void validate() const;
};

// (M+1) x C visual tokens; row 0 is the CLS token.
struct VisualTokens {
  Var tokens;
  explicit VisualTokens(Var t);
  std::size_t patches() const { return tokens.shape().rows() - 1; }
  std::size_t width() const { return tokens.shape().cols(); }
};

// N x C prompt embeddings.
struct TextEmbeddings {
  Var tokens;
  explicit TextEmbeddings(Var t);
  std::size_t length() const { return tokens.shape().rows(); }
  std::size_t width() const { return tokens.shape().cols(); }
};

struct GuidanceVector {
  Var vector;     // 1 x C
  Var attention;  // 1 x N, non-negative, sums to one
};

struct RouterProbs {
  Var probs;  // 1 x E
};

// Router plus E two-layer SiLU experts, all C -> H -> C, registered under
// `prefix` ("moe.router.weight", "moe.expert3.fc2.bias", ...).
class ExpertBank {
 public:
  ExpertBank(const AlignmentConfig& cfg, ParamStore& store, const std::string& prefix = "moe");

  // Router and expert weights ~ N(0, init_stddev^2), biases zero.
  void initialize(std::uint64_t seed);
  bool initialized() const { return initialized_; }
  void mark_initialized(bool v) { initialized_ = v; }

  std::size_t size() const { return experts_.size(); }
  const AlignmentConfig& config() const { return cfg_; }

  Var router_logits(Tape& tape, Var guidance) const;
  // Expert i applied to every row of x.
  Var expert(Tape& tape, std::size_t i, Var x) const;

  std::vector<Parameter*> parameters() const;

 private:
  struct Mlp {
    Parameter* fc1_weight;
    Parameter* fc1_bias;
    Parameter* fc2_weight;
    Parameter* fc2_bias;
  };

  AlignmentConfig cfg_;
  Parameter* router_weight_;
  Parameter* router_bias_;
  std::vector<Mlp> experts_;
  bool initialized_ = false;
};

GuidanceVector cls_cross_attention(const VisualTokens& hv, const TextEmbeddings& ht);

RouterProbs route(Tape& tape, const ExpertBank& bank, const GuidanceVector& g, std::size_t top_k);

// Experts whose probability is exactly zero are skipped.
Var moe_transform(Tape& tape, const ExpertBank& bank, const VisualTokens& hv,
                  const RouterProbs& p);

Var reweight(const VisualTokens& hv, Var delta, double alpha);

struct AlignmentOutput {
  Var gv;
  std::optional<RouterProbs> probs;  // absent when the MoE is bypassed
};

enum class MoeMode { kBypass, kActive };

AlignmentOutput forward(Tape& tape, const ExpertBank& bank, const VisualTokens& hv,
                        const TextEmbeddings& ht, const AlignmentConfig& cfg, MoeMode mode);

}  // namespace parrot::align
