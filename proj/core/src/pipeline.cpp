// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#include "parrot/pipeline.hpp"

#include "parrot/error.hpp"

namespace parrot::pipeline {

std::unique_ptr<model::ToyModel> build_model(const config::ExperimentConfig& cfg) {
  cfg.validate();
  return std::make_unique<model::ToyModel>(cfg.model);
}

std::uint64_t moe_seed(const config::ExperimentConfig& cfg) { return cfg.model.alignment.seed; }

TrainResult train(const config::ExperimentConfig& cfg, const data::Corpus& corpus, Stages stages,
                  std::unique_ptr<model::ToyModel> start) {
  TrainResult r;
  r.model = start ? std::move(start) : build_model(cfg);
  if (stages != Stages::kSecond) {
    r.stage1 = train::train_stage1(*r.model, corpus, cfg.stage1);
  }
  if (stages != Stages::kFirst) {
    if (r.model->has_moe() && !r.model->moe_initialized()) {
      train::init_moe(*r.model, moe_seed(cfg));
    }
    r.stage2 = train::train_stage2(*r.model, corpus, cfg.stage2);
  }
  return r;
}

GradCheckReport gradcheck_stage2(const config::ExperimentConfig& cfg,
                                 const GradCheckOptions& opts) {
  auto model = build_model(cfg);
  if (model->has_moe()) model->init_moe(moe_seed(cfg));
  model->set_stage(model::Stage::kInstruction);
  const data::Split split = data::generate(cfg.data);
  if (split.train.samples.size() < opts.batch || opts.batch == 0) {
    throw ConfigError("gradcheck batch larger than the training set");
  }
  const std::vector<Sample> batch(split.train.samples.begin(),
                                  split.train.samples.begin() + opts.batch);
  const std::vector<Parameter*> params = model->params().all();
  const model::ToyModel& m = *model;
  return finite_diff_check([&](Tape& tape) { return m.batch_loss(tape, batch); }, params,
                           opts.eps, opts.stencil);
}

}  // namespace parrot::pipeline
