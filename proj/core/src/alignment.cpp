// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#include "parrot/alignment.hpp"

#include <algorithm>
#include <cmath>

#include "parrot/error.hpp"
#include "parrot/ops.hpp"
#include "parrot/rng.hpp"

namespace parrot::align {

void AlignmentConfig::validate() const {
  if (experts == 0) throw ConfigError("alignment: expert count must be positive");
  if (channels == 0 || hidden == 0) throw ConfigError("alignment: widths must be positive");
  if (top_k == 0 || top_k > experts) {
    throw ConfigError("alignment: top_k must lie in [1, " + std::to_string(experts) + "]");
  }
  if (!std::isfinite(alpha)) throw ConfigError("alignment: alpha must be finite");
  if (!(init_stddev >= 0.0) || !(router_init_stddev >= 0.0)) {
    throw ConfigError("alignment: init scales must be >= 0");
  }
}

VisualTokens::VisualTokens(Var t) : tokens(t) {
  if (t.shape().rank() != 2 || t.shape().rows() < 2) {
    throw DimensionError("visual tokens need a CLS row plus at least one patch, got " +
                         t.shape().str());
  }
}

TextEmbeddings::TextEmbeddings(Var t) : tokens(t) {
  if (t.shape().rank() != 2 || t.shape().rows() < 1) {
    throw DimensionError("text embeddings need at least one row, got " + t.shape().str());
  }
}

ExpertBank::ExpertBank(const AlignmentConfig& cfg, ParamStore& store, const std::string& prefix)
    : cfg_(cfg) {
  cfg_.validate();
  const std::size_t c = cfg_.channels, h = cfg_.hidden, e = cfg_.experts;
  router_weight_ = &store.add(prefix + ".router.weight", Shape{c, e});
  router_bias_ = &store.add(prefix + ".router.bias", Shape{1, e});
  for (std::size_t i = 0; i < e; ++i) {
    const std::string base = prefix + ".expert" + std::to_string(i);
    experts_.push_back(Mlp{&store.add(base + ".fc1.weight", Shape{c, h}),
                           &store.add(base + ".fc1.bias", Shape{1, h}),
                           &store.add(base + ".fc2.weight", Shape{h, c}),
                           &store.add(base + ".fc2.bias", Shape{1, c})});
  }
}

void ExpertBank::initialize(std::uint64_t seed) {
  Rng rng(seed);
  auto fill = [&rng](Parameter* p, double stddev) {
    for (double& v : p->tensor.values()) v = rng.normal(0.0, stddev);
  };
  auto zero = [](Parameter* p) {
    for (double& v : p->tensor.values()) v = 0.0;
  };
  fill(router_weight_, cfg_.router_init_stddev);
  zero(router_bias_);
  for (const Mlp& m : experts_) {
    fill(m.fc1_weight, cfg_.init_stddev);
    zero(m.fc1_bias);
    fill(m.fc2_weight, cfg_.init_stddev);
    zero(m.fc2_bias);
  }
  initialized_ = true;
}

Var ExpertBank::router_logits(Tape& tape, Var guidance) const {
  return ops::linear(guidance, tape.parameter(*router_weight_), tape.parameter(*router_bias_));
}

Var ExpertBank::expert(Tape& tape, std::size_t i, Var x) const {
  if (i >= experts_.size()) throw IndexError("expert index " + std::to_string(i));
  const Mlp& m = experts_[i];
  Var hidden = ops::silu(
      ops::linear(x, tape.parameter(*m.fc1_weight), tape.parameter(*m.fc1_bias)));
  return ops::linear(hidden, tape.parameter(*m.fc2_weight), tape.parameter(*m.fc2_bias));
}

std::vector<Parameter*> ExpertBank::parameters() const {
  std::vector<Parameter*> out{router_weight_, router_bias_};
  for (const Mlp& m : experts_) {
    out.insert(out.end(), {m.fc1_weight, m.fc1_bias, m.fc2_weight, m.fc2_bias});
  }
  return out;
}

GuidanceVector cls_cross_attention(const VisualTokens& hv, const TextEmbeddings& ht) {
  if (hv.width() != ht.width()) {
    throw DimensionError("cross-attention: visual width " + std::to_string(hv.width()) +
                         " vs text width " + std::to_string(ht.width()));
  }
  Var cls = ops::slice_row(hv.tokens, 0);
  Var scores = ops::scale(ops::matmul(cls, ops::transpose(ht.tokens)),
                          1.0 / std::sqrt(static_cast<double>(hv.width())));
  Var weights = ops::softmax_rows(scores);
  return GuidanceVector{ops::matmul(weights, ht.tokens), weights};
}

RouterProbs route(Tape& tape, const ExpertBank& bank, const GuidanceVector& g,
                  std::size_t top_k) {
  if (g.vector.shape().cols() != bank.config().channels) {
    throw DimensionError("router: guidance width " + std::to_string(g.vector.shape().cols()) +
                         " vs channels " + std::to_string(bank.config().channels));
  }
  Var p = ops::softmax_rows(bank.router_logits(tape, g.vector));
  if (top_k < bank.size()) p = ops::topk_renormalize(p, top_k);
  return RouterProbs{p};
}

Var moe_transform(Tape& tape, const ExpertBank& bank, const VisualTokens& hv,
                  const RouterProbs& p) {
  const Tensor& probs = p.probs.value();
  if (probs.size() != bank.size()) {
    throw DimensionError("moe: " + std::to_string(probs.size()) + " router weights for " +
                         std::to_string(bank.size()) + " experts");
  }
  std::optional<Var> acc;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    if (probs[i] == 0.0) continue;
    Var term = ops::scale_by_entry(bank.expert(tape, i, hv.tokens), p.probs, i);
    acc = acc ? ops::add(*acc, term) : term;
  }
  if (!acc) throw ContractError("moe: router distribution has no mass");
  return *acc;
}

Var reweight(const VisualTokens& hv, Var delta, double alpha) {
  if (!(hv.tokens.shape() == delta.shape())) {
    throw DimensionError("reweight: " + hv.tokens.shape().str() + " vs " +
                         delta.shape().str());
  }
  return ops::axpy(hv.tokens, delta, alpha);
}

AlignmentOutput forward(Tape& tape, const ExpertBank& bank, const VisualTokens& hv,
                        const TextEmbeddings& ht, const AlignmentConfig& cfg, MoeMode mode) {
  if (mode == MoeMode::kBypass) return AlignmentOutput{hv.tokens, std::nullopt};
  if (!bank.initialized()) throw StateError("MoE forward before its parameters were initialized");
  GuidanceVector g = cls_cross_attention(hv, ht);
  RouterProbs p = route(tape, bank, g, cfg.top_k);
  Var delta = moe_transform(tape, bank, hv, p);
  return AlignmentOutput{reweight(hv, delta, cfg.alpha), p};
}

}  // namespace parrot::align
