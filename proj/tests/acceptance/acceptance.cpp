// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eval_fixture.hpp"
#include "oracle.hpp"
#include "parrot/alignment.hpp"
#include "parrot/checkpoint.hpp"
#include "parrot/config.hpp"
#include "parrot/error.hpp"
#include "parrot/evaluator.hpp"
#include "parrot/pipeline.hpp"

namespace {

using namespace parrot;
using Clock = std::chrono::steady_clock;
using Snapshot = std::map<std::string, std::vector<double>>;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Snapshot snapshot(const model::ToyModel& m, const std::function<bool(const std::string&)>& keep) {
  Snapshot s;
  for (const Parameter* p : m.params().all()) {
    if (keep(p->name)) s[p->name].assign(p->tensor.values().begin(), p->tensor.values().end());
  }
  return s;
}

bool starts(const std::string& s, const char* prefix) { return s.starts_with(prefix); }

bool same_values(const Tensor& a, const Tensor& b) {
  return std::equal(a.values().begin(), a.values().end(), b.values().begin(), b.values().end());
}

// ---- 1 ----

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  const GradCheckReport r = pipeline::gradcheck_stage2(config::ExperimentConfig{});
  const double secs = seconds_since(t0);
  return {r.max_rel_error < 1e-4 && secs < 60.0,
          "max rel err " + fmt("%.3g", r.max_rel_error) + " over " + std::to_string(r.checked) +
              " entries (" + r.worst_param + "), " + fmt("%.1f", secs) + " s"};
}

// ---- 2 ----

struct Bank {
  ParamStore store;
  align::ExpertBank bank;
  explicit Bank(const align::AlignmentConfig& cfg, std::uint64_t seed) : bank(cfg, store) {
    bank.initialize(seed);
  }
  const Tensor& t(const std::string& name) const { return store.get(name).tensor; }
  oracle::LMat expert(std::size_t i, const Tensor& x) const {
    const std::string b = "moe.expert" + std::to_string(i);
    return oracle::mlp(oracle::to_long(x), t(b + ".fc1.weight"), t(b + ".fc1.bias"),
                       t(b + ".fc2.weight"), t(b + ".fc2.bias"));
  }
};

align::AlignmentConfig toy_alignment() {
  align::AlignmentConfig cfg = config::ExperimentConfig{}.model.alignment;
  cfg.init_stddev = 0.3;
  cfg.router_init_stddev = 0.3;
  return cfg;
}

Outcome alignment_oracles() {
  const align::AlignmentConfig cfg = toy_alignment();
  const std::size_t C = cfg.channels, E = cfg.experts, N = 5;
  Rng rng(101);
  double worst[4] = {0, 0, 0, 0};
  for (int trial = 0; trial < 100; ++trial) {
    Bank b(cfg, 1000 + trial);
    const Tensor hv = oracle::random_tensor(rng, N, C);
    const Tensor ht = oracle::random_tensor(rng, 3, C);
    Tape tape;
    align::VisualTokens v(tape.constant(hv));
    align::TextEmbeddings t(tape.constant(ht));

    const align::GuidanceVector g = align::cls_cross_attention(v, t);
    const auto g_ref = oracle::cls_attention(hv, ht);
    worst[0] = std::max(worst[0], oracle::max_abs_diff(g_ref, g.vector.value()));

    auto logits = oracle::matmul({g_ref}, oracle::to_long(b.t("moe.router.weight")))[0];
    for (std::size_t e = 0; e < E; ++e) logits[e] += b.t("moe.router.bias")[e];
    const auto dense = oracle::softmax(logits);
    const std::size_t k = 1 + static_cast<std::size_t>(trial) % E;
    std::vector<std::size_t> order(E);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t c) { return dense[a] > dense[c]; });
    std::vector<long double> topk(E, 0.0L);
    long double kept = 0.0L;
    for (std::size_t i = 0; i < k; ++i) kept += dense[order[i]];
    for (std::size_t i = 0; i < k; ++i) topk[order[i]] = dense[order[i]] / kept;
    worst[1] = std::max(worst[1], oracle::max_abs_diff(dense, align::route(tape, b.bank, g, E).probs.value()));
    const align::RouterProbs p = align::route(tape, b.bank, g, k);
    worst[1] = std::max(worst[1], oracle::max_abs_diff(topk, p.probs.value()));

    const Var mixed = align::moe_transform(tape, b.bank, v, p);
    oracle::LMat mix_ref(N, std::vector<long double>(C, 0.0L));
    for (std::size_t e = 0; e < E; ++e) {
      if (p.probs.value()[e] == 0.0) continue;
      const auto y = b.expert(e, hv);
      for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < C; ++j) mix_ref[i][j] += p.probs.value()[e] * y[i][j];
    }
    worst[2] = std::max(worst[2], oracle::max_abs_diff(mix_ref, mixed.value()));

    const double alpha = rng.uniform() * 2.0;
    const Var gv = align::reweight(v, mixed, alpha);
    oracle::LMat rw_ref = oracle::to_long(hv);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < C; ++j) rw_ref[i][j] += alpha * mix_ref[i][j];
    worst[3] = std::max(worst[3], oracle::max_abs_diff(rw_ref, gv.value()));
  }
  const double w = *std::max_element(worst, worst + 4);
  return {w <= 1e-10, "attention " + fmt("%.2g", worst[0]) + ", router " + fmt("%.2g", worst[1]) +
                          ", mixture " + fmt("%.2g", worst[2]) + ", reweight " +
                          fmt("%.2g", worst[3]) + " (100 instances)"};
}

// ---- 3 ----

Outcome identities() {
  const align::AlignmentConfig cfg = toy_alignment();
  const std::size_t C = cfg.channels, E = cfg.experts;
  Rng rng(202);
  bool onehot = true, alpha0 = true, bypass = true;
  double perm_err = 0.0;

  Bank b(cfg, 7);
  for (std::size_t j = 0; j < E; ++j) {
    const Tensor hv = oracle::random_tensor(rng, 5, C);
    std::vector<double> p(E, 0.0);
    p[j] = 1.0;
    Tape tape;
    Var x = tape.constant(hv);
    const Var mixed = align::moe_transform(tape, b.bank, align::VisualTokens(x),
                                           align::RouterProbs{tape.constant(Tensor::row(p))});
    onehot = onehot && same_values(mixed.value(), b.bank.expert(tape, j, x).value());
  }

  align::AlignmentConfig zero = cfg;
  zero.alpha = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor hv = oracle::random_tensor(rng, 5, C);
    Tape tape;
    const align::AlignmentOutput out =
        align::forward(tape, b.bank, align::VisualTokens(tape.constant(hv)),
                       align::TextEmbeddings(tape.constant(oracle::random_tensor(rng, 3, C))), zero,
                       align::MoeMode::kActive);
    alpha0 = alpha0 && same_values(out.gv.value(), hv);
  }

  config::ExperimentConfig ecfg;
  const data::Split split = data::generate(ecfg.data);
  auto m = pipeline::build_model(ecfg);
  m->init_moe(pipeline::moe_seed(ecfg));
  std::vector<std::vector<double>> before;
  for (std::size_t i = 0; i < 20; ++i) before.push_back(m->predict(split.eval.samples[i]).logits);
  for (Parameter* p : m->params().with_prefix("moe."))
    for (double& v : p->tensor.values()) v += rng.normal();
  for (std::size_t i = 0; i < 20; ++i)
    bypass = bypass && m->predict(split.eval.samples[i]).logits == before[i];

  Bank a(cfg, 31), c(cfg, 32);
  std::vector<std::size_t> perm(E);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::rotate(perm.begin(), perm.begin() + 2, perm.end());
  std::swap(perm[0], perm[3]);
  for (std::size_t i = 0; i < E; ++i) {
    for (const char* part : {".fc1.weight", ".fc1.bias", ".fc2.weight", ".fc2.bias"}) {
      c.store.get("moe.expert" + std::to_string(i) + part).tensor =
          a.t("moe.expert" + std::to_string(perm[i]) + part);
    }
    c.store.get("moe.router.bias").tensor[i] = a.t("moe.router.bias")[perm[i]];
    for (std::size_t ch = 0; ch < C; ++ch)
      c.store.get("moe.router.weight").tensor.at(ch, i) = a.t("moe.router.weight").at(ch, perm[i]);
  }
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape;
    align::VisualTokens v(tape.constant(oracle::random_tensor(rng, 5, C)));
    align::TextEmbeddings t(tape.constant(oracle::random_tensor(rng, 3, C)));
    const auto oa = align::forward(tape, a.bank, v, t, cfg, align::MoeMode::kActive);
    const auto oc = align::forward(tape, c.bank, v, t, cfg, align::MoeMode::kActive);
    perm_err = std::max(perm_err, oracle::max_abs_diff(oracle::to_long(oa.gv.value()), oc.gv.value()));
    for (std::size_t i = 0; i < E; ++i) {
      perm_err = std::max(perm_err, std::abs(oc.probs->probs.value()[i] -
                                             oa.probs->probs.value()[perm[i]]));
    }
  }
  const auto yn = [](bool v) { return v ? "exact" : "broken"; };
  return {onehot && alpha0 && bypass && perm_err <= 1e-12,
          std::string("one-hot ") + yn(onehot) + ", alpha=0 " + yn(alpha0) + ", stage-1 bypass " +
              yn(bypass) + ", permutation " + fmt("%.2g", perm_err)};
}

// ---- 4 ----

Outcome freezing() {
  config::ExperimentConfig cfg;
  cfg.stage1.steps = 40;
  cfg.stage2.steps = 40;
  const data::Split split = data::generate(cfg.data);
  auto all = [](const std::string&) { return true; };
  auto m = pipeline::build_model(cfg);
  const Snapshot init = snapshot(*m, all);
  train::train_stage1(*m, split.train, cfg.stage1);
  const Snapshot after1 = snapshot(*m, all);
  bool s1 = true;
  for (const auto& [name, v] : init) {
    const bool same = after1.at(name) == v;
    s1 = s1 && (starts(name, "projector.") ? !same : same);
  }

  bool rejected = false;
  try {
    train::train_stage2(*m, split.train, cfg.stage2);
  } catch (const StateError&) {
    rejected = true;
  }

  train::init_moe(*m, pipeline::moe_seed(cfg));
  const Snapshot pre2 = snapshot(*m, all);
  train::train_stage2(*m, split.train, cfg.stage2);
  const Snapshot after2 = snapshot(*m, all);
  bool s2 = true;
  for (const auto& [name, v] : pre2) {
    const bool same = after2.at(name) == v;
    s2 = s2 && (starts(name, "vision.") ? same : true);
  }
  s2 = s2 && after2.at("moe.router.weight") != pre2.at("moe.router.weight") &&
       after2.at("llm.embed") != pre2.at("llm.embed");
  const auto yn = [](bool v) { return v ? "ok" : "violated"; };
  return {s1 && s2 && rejected, std::string("stage 1 ") + yn(s1) + ", stage 2 " + yn(s2) +
                                    ", stage 2 without MoE init " +
                                    (rejected ? "rejected" : "accepted")};
}

// ---- 5, 6, 7, 8: the default experiment ----

struct Arm {
  std::unique_ptr<model::ToyModel> model;
  eval::MetricsReport report;
  std::string checkpoint;
  std::string report_text;
  double init_purity = 0.0;
  double purity = 0.0;
};

Arm run_arm(const config::ExperimentConfig& cfg, const data::Split& split) {
  Arm a;
  pipeline::TrainResult r = pipeline::train(cfg, split.train, pipeline::Stages::kFirst);
  if (r.model->has_moe()) {
    train::init_moe(*r.model, pipeline::moe_seed(cfg));
    r.model->set_stage(model::Stage::kInstruction);
    std::vector<eval::EvalItem> items;
    eval::evaluate(*r.model, split.eval, cfg.eval.circular_seed, &items);
    a.init_purity = eval::expert_distribution(eval::routing_records(items), 6).purity;
  }
  const std::size_t steps1 = r.stage1.losses.size();
  r = pipeline::train(cfg, split.train, pipeline::Stages::kSecond, std::move(r.model));
  std::vector<eval::EvalItem> items;
  a.report = eval::evaluate(*r.model, split.eval, cfg.eval.circular_seed, &items);
  if (r.model->has_moe()) {
    a.purity = eval::expert_distribution(eval::routing_records(items), 6).purity;
  }
  std::ostringstream ck, rep;
  train::save_checkpoint(*r.model,
                         train::CheckpointMeta{2, steps1 + r.stage2.losses.size(),
                                               r.stage2.sampler_state},
                         ck);
  eval::write_report(a.report, rep);
  a.checkpoint = ck.str();
  a.report_text = rep.str();
  a.model = std::move(r.model);
  return a;
}

struct Experiment {
  data::Split split;
  Arm moe, plain, moe_again;
  double seconds = 0.0;
};

Experiment run_experiment() {
  Experiment x;
  const config::ExperimentConfig cfg;
  const auto t0 = Clock::now();
  x.split = data::generate(cfg.data);
  x.moe = run_arm(cfg, x.split);
  config::ExperimentConfig no = cfg;
  no.model.use_moe = false;
  x.plain = run_arm(no, x.split);
  x.seconds = seconds_since(t0);
  x.moe_again = run_arm(cfg, x.split);
  return x;
}

Outcome ablation(const Experiment& x) {
  const double with = x.moe.report.mean_non_english_accuracy();
  const double without = x.plain.report.mean_non_english_accuracy();
  bool strict = true;
  std::string wb;
  for (std::size_t l = 1; l < x.moe.report.per_language.size(); ++l) {
    const double a = x.moe.report.per_language[l].wrong_block_rate;
    const double b = x.plain.report.per_language[l].wrong_block_rate;
    strict = strict && a < b;
    wb += " " + language_label(l) + " " + fmt("%.2f", a) + "<" + fmt("%.2f", b);
  }
  const double gap = with - without;
  return {gap >= 0.10 && strict && x.seconds < 300.0,
          "non-English accuracy " + fmt("%.3f", with) + " vs " + fmt("%.3f", without) + " (+" +
              fmt("%.1f", 100.0 * gap) + " pp); wrong-block" + wb + "; " +
              fmt("%.1f", x.seconds) + " s"};
}

Outcome specialization(const Experiment& x) {
  return {x.moe.purity >= 0.8 && x.moe.init_purity < x.moe.purity,
          "purity " + fmt("%.3f", x.moe.purity) + " after stage 2, " +
              fmt("%.3f", x.moe.init_purity) + " at MoE init (chance " + fmt("%.3f", 1.0 / 6) +
              ")"};
}

Outcome circular(const Experiment& x) {
  const auto items = fixture::items();
  const auto pairs = fixture::pairs();
  std::ostringstream rep;
  eval::write_report(eval::score(items, pairs, fixture::kLayout), rep);
  const bool fixture_ok = rep.str() == fixture::kReport;

  Rng rng(2024);
  std::vector<eval::CircularPair> random;
  for (std::size_t i = 0; i < 10000; ++i) {
    random.push_back(fixture::pair(i, rng.uniform() < 0.5 ? eval::Verdict::kYes : eval::Verdict::kNo,
                                   rng.uniform() < 0.5 ? eval::Verdict::kYes : eval::Verdict::kNo));
  }
  const eval::CircularResult mc = eval::circular_evaluate(random);
  const bool mc_ok =
      std::abs(mc.circular_accuracy - 0.25) <= 0.02 && std::abs(mc.naive_accuracy - 0.5) <= 0.02;

  bool runs_ok = true;
  for (const Arm* a : {&x.moe, &x.plain, &x.moe_again}) {
    runs_ok = runs_ok && a->report.circular.circular_accuracy <= a->report.circular.naive_accuracy;
  }
  return {fixture_ok && mc_ok && runs_ok,
          std::string("fixture ") + (fixture_ok ? "exact" : "differs") + ", Monte Carlo circular " +
              fmt("%.4f", mc.circular_accuracy) + " naive " + fmt("%.4f", mc.naive_accuracy) +
              ", runs circular<=naive " + (runs_ok ? "yes" : "no") + " (MoE " +
              fmt("%.3f", x.moe.report.circular.circular_accuracy) + "<=" +
              fmt("%.3f", x.moe.report.circular.naive_accuracy) + ")"};
}

Outcome reproducibility(const Experiment& x) {
  const bool ck = x.moe.checkpoint == x.moe_again.checkpoint;
  const bool rep = x.moe.report_text == x.moe_again.report_text;
  std::istringstream in(x.moe.checkpoint);
  const auto loaded = train::load_checkpoint(in);
  bool logits = true;
  for (std::size_t i = 0; i < 32; ++i) {
    const Sample& s = x.split.eval.samples[(i * 53) % x.split.eval.samples.size()];
    const auto a = x.moe.model->predict(s);
    const auto b = loaded->predict(s);
    logits = logits && a.logits == b.logits && a.probs == b.probs;
  }
  const auto yn = [](bool v) { return v ? "identical" : "differ"; };
  return {ck && rep && logits, std::string("checkpoints ") + yn(ck) + ", reports " + yn(rep) +
                                   ", round-trip probe logits " + yn(logits)};
}

Outcome guarded(const std::function<Outcome()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {false, std::string("error: ") + e.what()};
  }
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
      {"gradient suite", gradient_suite},
      {"alignment oracles", alignment_oracles},
      {"algebraic identities", identities},
      {"freezing protocol", freezing},
  };
  std::optional<Experiment> x;
  std::string experiment_error;
  auto with_experiment = [&](Outcome (*f)(const Experiment&)) {
    return [&, f] {
      if (!x && experiment_error.empty()) {
        try {
          x = run_experiment();
        } catch (const std::exception& e) {
          experiment_error = e.what();
        }
      }
      if (!x) return Outcome{false, "experiment failed: " + experiment_error};
      return f(*x);
    };
  };
  checks.emplace_back("MoE ablation", with_experiment(ablation));
  checks.emplace_back("expert specialization", with_experiment(specialization));
  checks.emplace_back("circular evaluation", with_experiment(circular));
  checks.emplace_back("reproducibility", with_experiment(reproducibility));

  int failed = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const Outcome o = guarded(checks[i].second);
    failed += !o.pass;
    std::printf("[%s] %zu. %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, checks[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(checks.size()) - failed,
              checks.size());
  return failed == 0 ? 0 : 1;
}
