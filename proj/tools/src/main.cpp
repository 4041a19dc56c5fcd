// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

void add_config_options(CLI::App* cmd, parrot::cli::ConfigSource& src) {
  cmd->add_option("-c,--config", src.file, "Experiment config (INI)");
  cmd->add_option("-s,--set", src.overrides, "Override a config key, e.g. --set stage2.steps=100")
      ->take_all();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace parrot::cli;
  CLI::App app{"Parrot-style multilingual visual-token alignment toy"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate the synthetic train/eval corpora");
  add_config_options(gen_cmd, gen.config);
  gen_cmd->add_option("-o,--out", gen.out_dir, "Output directory")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Run stage 1, stage 2 or both");
  add_config_options(train_cmd, tr.config);
  train_cmd->add_option("--corpus", tr.corpus, "Training corpus")->required();
  train_cmd->add_option("-o,--out", tr.out_dir, "Output directory")->required();
  train_cmd->add_option("--stage", tr.stage, "1, 2 or both")
      ->check(CLI::IsMember({"1", "2", "both"}))
      ->capture_default_str();
  train_cmd->add_flag("--no-moe", tr.no_moe, "Ablation arm: build the model without the MoE");
  train_cmd->add_option("--alpha", tr.alpha, "Reweighting coefficient");
  train_cmd->add_option("--topk", tr.top_k, "Active experts per sample");
  train_cmd->add_option("--init", tr.init, "Stage-1 checkpoint to continue from (--stage 2)");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on an eval corpus");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->required();
  eval_cmd->add_option("--corpus", ev.corpus, "Eval corpus")->required();
  eval_cmd->add_option("-o,--out", ev.out_dir, "Output directory")->required();
  eval_cmd->add_option("--circular-seed", ev.circular_seed, "Seed for negative questions")
      ->capture_default_str();

  AnalyzeArgs an;
  auto* analyze_cmd =
      app.add_subcommand("analyze", "Expert histograms, routing purity and ablation tables");
  analyze_cmd->add_option("--routing", an.routing, "Routing log (step lang probs)");
  analyze_cmd->add_option("--languages", an.languages, "Language count")->capture_default_str();
  analyze_cmd->add_option("--with", an.with_report, "report.tsv of the MoE arm");
  analyze_cmd->add_option("--without", an.without_report, "report.tsv of the --no-moe arm");
  analyze_cmd->add_option("-o,--out", an.out_dir, "Output directory")->required();

  GradcheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the stage-2 loss");
  add_config_options(gc_cmd, gc.config);
  gc_cmd->add_option("--batch", gc.batch, "Samples in the checked loss")->capture_default_str();
  gc_cmd->add_option("--eps", gc.eps, "Finite-difference step")->capture_default_str();
  gc_cmd->add_option("--tolerance", gc.tolerance, "Max relative error")->capture_default_str();
  gc_cmd->add_option("-o,--out", gc.out_dir, "Optional output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen_cmd) return gen_data(gen);
    if (*train_cmd) return train(tr);
    if (*eval_cmd) return evaluate(ev);
    if (*analyze_cmd) return analyze(an);
    if (*gc_cmd) return gradcheck(gc);
  } catch (...) {
    return exit_code_for_current_exception();
  }
  return kUsage;
}
