// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#include "parrot/trainer.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "parrot/error.hpp"

namespace parrot::train {

void StageConfig::validate() const {
  if (stage != 1 && stage != 2) throw ConfigError("stage must be 1 or 2");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be > 0");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
}

StageConfig reference_preset(int stage) {
  StageConfig cfg;
  cfg.stage = stage;
  cfg.lr = stage == 1 ? 1e-3 : 2e-5;
  return cfg;
}

double cosine_lr(std::size_t step, std::size_t total, double lr0) {
  if (total == 0) return lr0;
  const double t = static_cast<double>(step) / static_cast<double>(total);
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

AdamW::AdamW(double beta1, double beta2, double eps, double weight_decay)
    : beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {}

void AdamW::step(std::span<Parameter* const> params, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (Parameter* p : params) {
    if (!p->updatable() || !p->tensor.has_grad()) continue;
    auto [it, fresh] = moments_.try_emplace(p->name);
    Moments& mom = it->second;
    auto w = p->tensor.values();
    auto g = p->tensor.grad_view();
    if (fresh) {
      mom.m.assign(w.size(), 0.0);
      mom.v.assign(w.size(), 0.0);
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      mom.m[i] = beta1_ * mom.m[i] + (1.0 - beta1_) * g[i];
      mom.v[i] = beta2_ * mom.v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double mhat = mom.m[i] / bc1;
      const double vhat = mom.v[i] / bc2;
      if (weight_decay_ != 0.0) w[i] -= lr * weight_decay_ * w[i];
      w[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

BatchSampler::BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : n_(n), batch_size_(batch_size), order_(n), rng_(seed) {
  if (n == 0) throw ConfigError("training corpus is empty");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  rng_.shuffle(std::span<std::size_t>(order_));
}

std::vector<std::size_t> BatchSampler::next() {
  std::vector<std::size_t> batch;
  batch.reserve(batch_size_);
  while (batch.size() < batch_size_) {
    if (cursor_ == n_) {
      rng_.shuffle(std::span<std::size_t>(order_));
      cursor_ = 0;
    }
    batch.push_back(order_[cursor_++]);
  }
  return batch;
}

namespace {

StageResult run_stage(model::ToyModel& model, const data::Corpus& corpus,
                      const StageConfig& cfg, bool log_routing) {
  cfg.validate();
  if (corpus.samples.empty()) throw ConfigError("training corpus is empty");
  StageResult result;
  if (cfg.steps == 0) return result;

  AdamW opt(cfg);
  BatchSampler sampler(corpus.samples.size(), cfg.batch_size, cfg.seed);
  std::vector<Parameter*> params = model.params().all();
  std::vector<Sample> batch;
  std::vector<model::Output> outputs;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    batch.clear();
    for (std::size_t i : sampler.next()) batch.push_back(corpus.samples[i]);
    const double lr = cfg.cosine ? cosine_lr(step, cfg.steps, cfg.lr) : cfg.lr;

    model.params().zero_grads();
    outputs.clear();
    Tape tape;
    Var loss = model.batch_loss(tape, batch, &outputs);
    tape.backward(loss);
    opt.step(params, lr);

    result.losses.push_back(LossRecord{step, loss.value().item(), lr});
    if (log_routing) {
      for (std::size_t i = 0; i < batch.size(); ++i) {
        if (!outputs[i].probs) continue;
        const auto p = outputs[i].probs->value().values();
        result.routing.push_back(
            RoutingRecord{step, batch[i].language, std::vector<double>(p.begin(), p.end())});
      }
    }
  }
  model.params().zero_grads();
  result.sampler_state = sampler.rng_state();
  return result;
}

}  // namespace

StageResult train_stage1(model::ToyModel& model, const data::Corpus& corpus,
                         const StageConfig& cfg) {
  if (cfg.stage != 1) throw ConfigError("train_stage1 given a stage-" + std::to_string(cfg.stage) + " config");
  model.set_stage(model::Stage::kAlignment);
  return run_stage(model, corpus, cfg, false);
}

void init_moe(model::ToyModel& model, std::uint64_t seed) { model.init_moe(seed); }

StageResult train_stage2(model::ToyModel& model, const data::Corpus& corpus,
                         const StageConfig& cfg) {
  if (cfg.stage != 2) throw ConfigError("train_stage2 given a stage-" + std::to_string(cfg.stage) + " config");
  if (model.has_moe() && !model.moe_initialized()) {
    throw StateError("stage 2 requires init_moe() first");
  }
  model.set_stage(model::Stage::kInstruction);
  return run_stage(model, corpus, cfg, true);
}

namespace {

void put_double(std::ostream& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

}  // namespace

void write_loss_trace(std::span<const LossRecord> records, std::ostream& out) {
  out << "step loss lr\n";
  for (const LossRecord& r : records) {
    out << r.step << ' ';
    put_double(out, r.loss);
    out << ' ';
    put_double(out, r.lr);
    out << '\n';
  }
}

void write_routing_log(std::span<const RoutingRecord> records, std::ostream& out) {
  out << "step lang probs\n";
  for (const RoutingRecord& r : records) {
    out << r.step << ' ' << language_label(r.language) << ' ';
    for (std::size_t i = 0; i < r.probs.size(); ++i) {
      if (i) out << ',';
      put_double(out, r.probs[i]);
    }
    out << '\n';
  }
}

std::vector<RoutingRecord> read_routing_log(std::istream& in) {
  std::vector<RoutingRecord> out;
  std::string line;
  std::size_t n = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (n == 1 && line == "step lang probs") continue;
    std::istringstream is(line);
    std::string step, lang, probs, extra;
    if (!(is >> step >> lang >> probs) || (is >> extra)) {
      throw ParseError("expected 'step lang p0,p1,...'", n);
    }
    RoutingRecord r{};
    auto sres = std::from_chars(step.data(), step.data() + step.size(), r.step);
    if (sres.ec != std::errc() || sres.ptr != step.data() + step.size()) {
      throw ParseError("bad step '" + step + "'", n);
    }
    try {
      r.language = static_cast<std::uint32_t>(language_id(lang));
    } catch (const IndexError& e) {
      throw ParseError(e.what(), n);
    }
    std::string_view rest(probs);
    while (true) {
      const std::size_t comma = rest.find(',');
      std::string_view tok = rest.substr(0, comma);
      double v = 0.0;
      auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(v)) {
        throw ParseError("bad probability '" + std::string(tok) + "'", n);
      }
      r.probs.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (width == 0) width = r.probs.size();
    if (r.probs.size() != width) throw ParseError("inconsistent expert count", n);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace parrot::train
