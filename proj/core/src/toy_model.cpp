// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#include "parrot/toy_model.hpp"

#include <cmath>

#include "parrot/error.hpp"
#include "parrot/ops.hpp"
#include "parrot/rng.hpp"

namespace parrot::model {

void ModelConfig::validate() const {
  layout.validate();
  if (feature_dim == 0 || patches == 0 || vision_width == 0 || width == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  alignment.validate();
  if (alignment.channels != width) {
    throw ConfigError("alignment channels (" + std::to_string(alignment.channels) +
                      ") must equal model width (" + std::to_string(width) + ")");
  }
  if (!(embed_stddev >= 0.0) || !(embed_language_stddev >= 0.0)) {
    throw ConfigError("embedding init scales must be >= 0");
  }
}

ParamGroup group_of(std::string_view name) {
  if (name.starts_with("vision.")) return ParamGroup::kVision;
  if (name.starts_with("projector.")) return ParamGroup::kProjector;
  if (name.starts_with("llm.")) return ParamGroup::kLlm;
  if (name.starts_with("moe.")) return ParamGroup::kMoe;
  throw ContractError("parameter '" + std::string(name) + "' belongs to no group");
}

bool trainable_in(ParamGroup group, Stage stage) {
  switch (group) {
    case ParamGroup::kVision:
      return false;
    case ParamGroup::kProjector:
      return true;
    case ParamGroup::kLlm:
    case ParamGroup::kMoe:
      return stage == Stage::kInstruction;
  }
  return false;
}

namespace {

void fill_normal(Parameter& p, Rng& rng, double stddev) {
  for (double& v : p.tensor.values()) v = rng.normal(0.0, stddev);
}

}  // namespace

ToyModel::ToyModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t d = cfg_.feature_dim, cv = cfg_.vision_width, c = cfg_.width;
  const std::size_t tokens = cfg_.patches + 1, vocab = cfg_.layout.total();

  vision_weight_ = &store_.add("vision.weight", Shape{d, tokens * cv});
  vision_bias_ = &store_.add("vision.bias", Shape{1, tokens * cv});
  proj1_weight_ = &store_.add("projector.fc1.weight", Shape{cv, c});
  proj1_bias_ = &store_.add("projector.fc1.bias", Shape{1, c});
  proj2_weight_ = &store_.add("projector.fc2.weight", Shape{c, c});
  proj2_bias_ = &store_.add("projector.fc2.bias", Shape{1, c});
  embed_ = &store_.add("llm.embed", Shape{vocab, c});
  head_weight_ = &store_.add("llm.head.weight", Shape{2 * c, vocab});
  head_bias_ = &store_.add("llm.head.bias", Shape{1, vocab});
  if (cfg_.use_moe) bank_ = std::make_unique<align::ExpertBank>(cfg_.alignment, store_, "moe");

  // Biases start at zero; MoE weights stay zero until init_moe().
  Rng rng(cfg_.seed);
  fill_normal(*vision_weight_, rng, 1.0 / std::sqrt(static_cast<double>(d)));
  fill_normal(*proj1_weight_, rng, 1.0 / std::sqrt(static_cast<double>(cv)));
  fill_normal(*proj2_weight_, rng, 1.0 / std::sqrt(static_cast<double>(c)));
  fill_normal(*embed_, rng, cfg_.embed_stddev);
  if (cfg_.embed_language_stddev > 0.0) {
    std::vector<double> centroid(c);
    for (std::size_t lang = 0; lang < cfg_.layout.languages; ++lang) {
      for (double& v : centroid) v = rng.normal(0.0, cfg_.embed_language_stddev);
      for (std::size_t t = 0; t < cfg_.layout.per_language; ++t) {
        const std::size_t row = cfg_.layout.block_begin(lang) + t;
        for (std::size_t j = 0; j < c; ++j) embed_->tensor.at(row, j) += centroid[j];
      }
    }
  }
  fill_normal(*head_weight_, rng, 1.0 / std::sqrt(static_cast<double>(2 * c)));

  vision_weight_->frozen = true;
  vision_bias_->frozen = true;
  set_stage(Stage::kAlignment);
}

void ToyModel::set_stage(Stage stage) {
  stage_ = stage;
  for (Parameter* p : store_.all()) p->trainable = trainable_in(group_of(p->name), stage);
}

void ToyModel::init_moe(std::uint64_t seed) {
  if (!bank_) throw StateError("model was built without an MoE module");
  bank_->initialize(seed);
}

Tensor ToyModel::vision_features(std::span<const double> x) const {
  if (x.size() != cfg_.feature_dim) {
    throw DimensionError("image feature width " + std::to_string(x.size()) + ", expected " +
                         std::to_string(cfg_.feature_dim));
  }
  const std::size_t out = (cfg_.patches + 1) * cfg_.vision_width;
  const Tensor& w = vision_weight_->tensor;
  const Tensor& b = vision_bias_->tensor;
  Tensor z(Shape{cfg_.patches + 1, cfg_.vision_width});
  for (std::size_t j = 0; j < out; ++j) z[j] = b[j];
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < out; ++j) z[j] += x[i] * w[i * out + j];
  }
  return z;
}

align::VisualTokens ToyModel::encode_image(Tape& tape, std::span<const double> x) const {
  Var zv = tape.constant(vision_features(x));
  Var h = ops::gelu(
      ops::linear(zv, tape.parameter(*proj1_weight_), tape.parameter(*proj1_bias_)));
  return align::VisualTokens(
      ops::linear(h, tape.parameter(*proj2_weight_), tape.parameter(*proj2_bias_)));
}

align::TextEmbeddings ToyModel::embed_prompt(Tape& tape, std::span<const TokenId> tokens) const {
  if (tokens.empty()) throw IndexError("empty prompt");
  return align::TextEmbeddings(ops::gather_rows(tape.parameter(*embed_), tokens));
}

Output ToyModel::forward_logits(Tape& tape, const Sample& sample) const {
  align::VisualTokens hv = encode_image(tape, sample.features);
  align::TextEmbeddings ht = embed_prompt(tape, sample.prompt);
  Output out;
  Var gv = hv.tokens;
  if (bank_ && stage_ == Stage::kInstruction) {
    align::AlignmentOutput a =
        align::forward(tape, *bank_, hv, ht, cfg_.alignment, align::MoeMode::kActive);
    gv = a.gv;
    out.probs = a.probs->probs;
  }
  Var pooled = ops::concat_cols(ops::mean_rows(gv), ops::mean_rows(ht.tokens));
  out.logits = ops::linear(pooled, tape.parameter(*head_weight_), tape.parameter(*head_bias_));
  return out;
}

Var ToyModel::loss(Tape& tape, const Sample& sample) const {
  return ops::cross_entropy(forward_logits(tape, sample).logits, sample.answer);
}

Var ToyModel::batch_loss(Tape& tape, std::span<const Sample> batch,
                         std::vector<Output>* outputs) const {
  if (batch.empty()) throw ContractError("batch_loss on an empty batch");
  std::optional<Var> total;
  for (const Sample& s : batch) {
    Output o = forward_logits(tape, s);
    Var l = ops::cross_entropy(o.logits, s.answer);
    total = total ? ops::add(*total, l) : l;
    if (outputs) outputs->push_back(o);
  }
  return ops::scale(*total, 1.0 / static_cast<double>(batch.size()));
}

Prediction ToyModel::predict(const Sample& sample) const {
  Tape tape(Tape::Mode::kInference);
  Output o = forward_logits(tape, sample);
  Prediction p;
  const auto v = o.logits.value().values();
  p.logits.assign(v.begin(), v.end());
  if (o.probs) {
    const auto q = o.probs->value().values();
    p.probs.emplace(q.begin(), q.end());
  }
  return p;
}

}  // namespace parrot::model
