// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <map>

#include "oracle.hpp"
#include "parrot/error.hpp"
#include "parrot/gradcheck.hpp"
#include "parrot/ops.hpp"
#include "parrot/synth_data.hpp"
#include "parrot/toy_model.hpp"
#include "parrot/trainer.hpp"

namespace parrot::model {
namespace {

using Snapshot = std::map<std::string, std::vector<double>>;

Snapshot snapshot(const ToyModel& m) {
  Snapshot s;
  for (const Parameter* p : m.params().all()) {
    s[p->name].assign(p->tensor.values().begin(), p->tensor.values().end());
  }
  return s;
}

Sample make_sample(const ModelConfig& cfg, std::uint64_t seed, std::uint32_t lang = 2) {
  Rng rng(seed);
  Sample s;
  for (std::size_t i = 0; i < cfg.feature_dim; ++i) s.features.push_back(rng.normal());
  s.class_id = 3;
  s.language = lang;
  for (int i = 0; i < 3; ++i) {
    s.prompt.push_back(cfg.layout.prompt_begin(lang) +
                       static_cast<TokenId>(rng.index(cfg.layout.prompt_tokens_per_language())));
  }
  s.answer = cfg.layout.answer_token(lang, s.class_id);
  return s;
}

void perturb_moe(ToyModel& m, double scale) {
  Rng rng(77);
  for (Parameter* p : m.params().with_prefix("moe.")) {
    for (double& v : p->tensor.values()) v += scale * rng.normal();
  }
}

TEST(ToyModel, ParameterGroupsAndNames) {
  ToyModel m(ModelConfig{});
  EXPECT_EQ(group_of("vision.weight"), ParamGroup::kVision);
  EXPECT_EQ(group_of("projector.fc2.bias"), ParamGroup::kProjector);
  EXPECT_EQ(group_of("llm.embed"), ParamGroup::kLlm);
  EXPECT_EQ(group_of("moe.expert0.fc1.weight"), ParamGroup::kMoe);
  for (const Parameter* p : m.params().all()) {
    const ParamGroup g = group_of(p->name);
    EXPECT_EQ(p->trainable, g == ParamGroup::kProjector) << p->name;
    EXPECT_EQ(p->frozen, g == ParamGroup::kVision) << p->name;
  }
  m.set_stage(Stage::kInstruction);
  for (const Parameter* p : m.params().all()) {
    EXPECT_EQ(p->updatable(), group_of(p->name) != ParamGroup::kVision) << p->name;
  }
  EXPECT_EQ(m.params().get("llm.head.weight").tensor.shape(), (Shape{64, 144}));
  EXPECT_EQ(m.params().get("llm.embed").tensor.shape(), (Shape{144, 32}));
}

TEST(ToyModel, ZeroInputThroughZeroBiasesGivesZeroHv) {
  ToyModel m(ModelConfig{});
  Tape tape;
  const std::vector<double> x(16, 0.0);
  const align::VisualTokens hv = m.encode_image(tape, x);
  EXPECT_EQ(hv.tokens.shape(), (Shape{5, 32}));
  for (double v : hv.tokens.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(ToyModel, EncodeImageMatchesHandComposition) {
  ModelConfig cfg;
  ToyModel m(cfg);
  for (Parameter* p : m.params().all()) {
    if (p->name.ends_with("bias")) {
      Rng rng(std::hash<std::string>{}(p->name));
      for (double& v : p->tensor.values()) v = 0.1 * rng.normal();
    }
  }
  const Sample s = make_sample(cfg, 4);
  Tape tape;
  const align::VisualTokens hv = m.encode_image(tape, s.features);

  const auto& P = m.params();
  const Tensor& vw = P.get("vision.weight").tensor;
  const Tensor& vb = P.get("vision.bias").tensor;
  oracle::LMat zv(5, std::vector<long double>(16));
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t j = 0; j < 16; ++j) {
      long double acc = vb[t * 16 + j];
      for (std::size_t i = 0; i < 16; ++i) acc += s.features[i] * vw.at(i, t * 16 + j);
      zv[t][j] = acc;
    }
  }
  oracle::LMat h = oracle::matmul(zv, oracle::to_long(P.get("projector.fc1.weight").tensor));
  for (auto& row : h) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      const long double x = row[j] + P.get("projector.fc1.bias").tensor[j];
      row[j] = 0.5L * x * (1.0L + std::tanh(0.7978845608L * (x + 0.044715L * x * x * x)));
    }
  }
  oracle::LMat out = oracle::matmul(h, oracle::to_long(P.get("projector.fc2.weight").tensor));
  for (auto& row : out)
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += P.get("projector.fc2.bias").tensor[j];
  EXPECT_LE(oracle::max_abs_diff(out, hv.tokens.value()), 1e-12);
}

TEST(ToyModel, DeterministicGivenSeed) {
  ModelConfig cfg;
  ToyModel a(cfg), b(cfg);
  EXPECT_EQ(snapshot(a), snapshot(b));
  const Sample s = make_sample(cfg, 5);
  EXPECT_EQ(a.predict(s).logits, b.predict(s).logits);
  cfg.seed = 8;
  ToyModel c(cfg);
  EXPECT_NE(snapshot(a), snapshot(c));
}

TEST(ToyModel, InputErrors) {
  ModelConfig cfg;
  ToyModel m(cfg);
  Tape tape;
  EXPECT_THROW(m.encode_image(tape, std::vector<double>(15, 0.0)), DimensionError);
  const std::vector<TokenId> bad = {0, static_cast<TokenId>(cfg.layout.total())};
  EXPECT_THROW(m.embed_prompt(tape, bad), IndexError);
  EXPECT_THROW(m.embed_prompt(tape, std::vector<TokenId>{}), IndexError);
  Sample s = make_sample(cfg, 6);
  s.answer = static_cast<TokenId>(cfg.layout.total());
  EXPECT_THROW(m.loss(tape, s), IndexError);
}

TEST(ToyModel, EmbedPromptRowsAreTableRows) {
  ModelConfig cfg;
  ToyModel m(cfg);
  const std::vector<TokenId> ids = {30, 7, 30, 143};
  Tape tape;
  const align::TextEmbeddings ht = m.embed_prompt(tape, ids);
  const Tensor& table = m.params().get("llm.embed").tensor;
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = 0; j < 32; ++j) EXPECT_EQ(ht.tokens.value().at(i, j), table.at(ids[i], j));
}

TEST(ToyModel, StageOneLogitsIgnoreMoeWeights) {
  ModelConfig cfg;
  ToyModel m(cfg);
  m.init_moe(3);
  const Sample s = make_sample(cfg, 7);
  const Prediction before = m.predict(s);
  EXPECT_FALSE(before.probs.has_value());
  perturb_moe(m, 5.0);
  EXPECT_EQ(m.predict(s).logits, before.logits);
}

TEST(ToyModel, StageTwoWithZeroAlphaEqualsStageOne) {
  ModelConfig cfg;
  cfg.alignment.alpha = 0.0;
  ToyModel m(cfg);
  m.init_moe(3);
  perturb_moe(m, 1.0);
  const Sample s = make_sample(cfg, 8);
  const Prediction one = m.predict(s);
  m.set_stage(Stage::kInstruction);
  const Prediction two = m.predict(s);
  EXPECT_EQ(one.logits, two.logits);
  ASSERT_TRUE(two.probs.has_value());
  EXPECT_EQ(two.probs->size(), 6u);
}

TEST(ToyModel, StageTwoMoeChangesLogits) {
  ModelConfig cfg;
  ToyModel m(cfg);
  m.init_moe(3);
  m.set_stage(Stage::kInstruction);
  const Sample s = make_sample(cfg, 9);
  const Prediction before = m.predict(s);
  perturb_moe(m, 0.1);
  EXPECT_NE(m.predict(s).logits, before.logits);
}

TEST(ToyModel, MoeMustBeInitializedForStageTwo) {
  ToyModel m(ModelConfig{});
  m.set_stage(Stage::kInstruction);
  EXPECT_THROW(m.predict(make_sample(m.config(), 10)), StateError);
  ModelConfig no;
  no.use_moe = false;
  ToyModel plain(no);
  EXPECT_THROW(plain.init_moe(1), StateError);
  EXPECT_FALSE(plain.params().contains("moe.router.weight"));
  plain.set_stage(Stage::kInstruction);
  EXPECT_FALSE(plain.predict(make_sample(no, 10)).probs.has_value());
}

TEST(ToyModel, LossGradientOverAllTrainableParameters) {
  ModelConfig cfg;
  cfg.width = 8;
  cfg.vision_width = 8;
  cfg.alignment.hidden = 8;
  cfg.alignment.channels = 8;
  cfg.alignment.experts = 3;
  cfg.alignment.top_k = 3;
  cfg.alignment.init_stddev = 0.3;
  cfg.alignment.router_init_stddev = 0.3;
  ToyModel m(cfg);
  m.init_moe(4);
  m.set_stage(Stage::kInstruction);
  const Sample s = make_sample(cfg, 11);
  const std::vector<Parameter*> params = m.params().all();
  const GradCheckReport r =
      finite_diff_check([&](Tape& t) { return m.loss(t, s); }, params, 1e-3, Stencil::kFivePoint);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_param << "[" << r.worst_index << "]";
  for (const ParamCheck& p : r.params) EXPECT_EQ(p.skipped, p.name.starts_with("vision.")) << p.name;
}

TEST(ToyModel, OptimizerStepInStageOneTouchesOnlyProjector) {
  ModelConfig cfg;
  ToyModel m(cfg);
  m.init_moe(2);
  const Snapshot before = snapshot(m);
  train::AdamW opt(0.9, 0.999, 1e-8, 0.0);
  std::vector<Parameter*> params = m.params().all();
  for (Parameter* p : params) {  // gradients everywhere, masked or not
    for (double& g : p->tensor.grad()) g = 1.0;
  }
  opt.step(params, 1e-2);
  const Snapshot after = snapshot(m);
  for (const auto& [name, values] : before) {
    if (name.starts_with("projector.")) {
      EXPECT_NE(after.at(name), values) << name;
    } else {
      EXPECT_EQ(after.at(name), values) << name;
    }
  }
}

TEST(ToyModel, LanguageBlocksPartitionTheVocabulary) {
  const VocabLayout layout;
  for (std::size_t l = 0; l < layout.languages; ++l) {
    EXPECT_EQ(layout.language_of(layout.block_begin(l)), l);
    EXPECT_EQ(layout.language_of(layout.block_begin(l) + layout.per_language - 1), l);
    EXPECT_EQ(layout.language_of(layout.answer_token(l, layout.classes - 1)), l);
  }
  EXPECT_EQ(layout.total(), 144u);
}

TEST(ToyModel, LanguageCentroidsSeparateEmbeddingBlocks) {
  ModelConfig cfg;
  cfg.embed_stddev = 0.1;
  cfg.embed_language_stddev = 2.0;
  ToyModel m(cfg);
  const Tensor& e = m.params().get("llm.embed").tensor;
  auto dist2 = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t j = 0; j < 32; ++j) s += (e.at(a, j) - e.at(b, j)) * (e.at(a, j) - e.at(b, j));
    return s;
  };
  EXPECT_LT(dist2(0, 1), dist2(0, 24));
  EXPECT_LT(dist2(30, 40), dist2(30, 60));
}

}  // namespace
}  // namespace parrot::model
