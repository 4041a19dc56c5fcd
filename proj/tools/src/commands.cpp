// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "parrot/checkpoint.hpp"
#include "parrot/error.hpp"
#include "parrot/evaluator.hpp"
#include "parrot/pipeline.hpp"
#include "parrot/synth_data.hpp"
#include "parrot/trainer.hpp"

#ifndef PARROT_VERSION
#define PARROT_VERSION "unknown"
#endif

namespace parrot::cli {
namespace fs = std::filesystem;
namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

void make_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

void require_file(const fs::path& path, const char* what) {
  if (!fs::is_regular_file(path)) {
    throw IoError(std::string(what) + " '" + path.string() + "' does not exist");
  }
}

void echo_config(const config::ExperimentConfig& cfg, const fs::path& dir) {
  auto out = open_out(dir / "config.ini");
  out << "# resolved configuration\n";
  config::write(cfg, out);
}

using Fields = std::vector<std::pair<std::string, std::string>>;

void write_run_record(const fs::path& dir, const std::string& command, const Fields& fields) {
  auto out = open_out(dir / "run.txt");
  out << "tool parrot " << PARROT_VERSION << '\n';
  out << "command " << command << '\n';
  for (const auto& [k, v] : fields) out << k << ' ' << v << '\n';
}

void check_layout(const data::Corpus& corpus, const model::ModelConfig& m) {
  const VocabLayout& a = corpus.layout;
  const VocabLayout& b = m.layout;
  if (a.languages != b.languages || a.per_language != b.per_language ||
      a.classes != b.classes || corpus.feature_dim != m.feature_dim) {
    throw DimensionError("corpus layout does not match the model configuration");
  }
}

std::string seeds_line(const config::ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "data=" << cfg.data.seed << " model=" << cfg.model.seed
     << " moe=" << cfg.model.alignment.seed << " stage1=" << cfg.stage1.seed
     << " stage2=" << cfg.stage2.seed << " circular=" << cfg.eval.circular_seed;
  return os.str();
}

void write_loss(const fs::path& path, const train::StageResult& r) {
  auto out = open_out(path);
  train::write_loss_trace(r.losses, out);
}

}  // namespace

config::ExperimentConfig resolve_config(const ConfigSource& src) {
  config::ExperimentConfig cfg;
  if (src.file) {
    require_file(*src.file, "config");
    cfg = config::load(*src.file);
  }
  config::KeyValues kv;
  for (const std::string& item : src.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override '" + item + "' is not key=value");
    }
    auto trim = [](std::string t) {
      const auto b = t.find_first_not_of(" \t");
      const auto e = t.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
    };
    kv.emplace_back(trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
  }
  config::apply_overrides(cfg, kv);
  cfg.validate();
  return cfg;
}

int gen_data(const GenDataArgs& args) {
  const config::ExperimentConfig cfg = resolve_config(args.config);
  const data::Split split = data::generate(cfg.data);
  make_out_dir(args.out_dir);
  data::write_corpus(split.train, args.out_dir / "train.corpus");
  data::write_corpus(split.eval, args.out_dir / "eval.corpus");
  echo_config(cfg, args.out_dir);
  write_run_record(args.out_dir, "gen-data",
                   {{"seed", std::to_string(cfg.seed)}, {"seeds", seeds_line(cfg)},
                    {"train_samples", std::to_string(split.train.samples.size())},
                    {"eval_samples", std::to_string(split.eval.samples.size())}});
  std::cout << "wrote " << split.train.samples.size() << " train and "
            << split.eval.samples.size() << " eval samples to " << args.out_dir.string() << '\n';
  return kOk;
}

int train(const TrainArgs& args) {
  ConfigSource src = args.config;
  if (args.no_moe) src.overrides.push_back("model.use_moe=false");
  if (args.alpha) {
    std::ostringstream os;
    os.precision(17);
    os << *args.alpha;
    src.overrides.push_back("alignment.alpha=" + os.str());
  }
  if (args.top_k) src.overrides.push_back("alignment.top_k=" + std::to_string(*args.top_k));
  const config::ExperimentConfig cfg = resolve_config(src);

  pipeline::Stages stages;
  if (args.stage == "1") {
    stages = pipeline::Stages::kFirst;
  } else if (args.stage == "2") {
    stages = pipeline::Stages::kSecond;
  } else if (args.stage == "both") {
    stages = pipeline::Stages::kBoth;
  } else {
    throw ConfigError("--stage must be 1, 2 or both");
  }

  std::unique_ptr<model::ToyModel> start;
  std::size_t prior_steps = 0;
  if (stages == pipeline::Stages::kSecond) {
    if (!args.init) throw StateError("--stage 2 needs --init with a stage-1 checkpoint");
    require_file(*args.init, "checkpoint");
    train::CheckpointMeta meta;
    start = train::load_checkpoint(*args.init, &meta);
    prior_steps = meta.step;
    if (meta.stage != 1) {
      throw StateError("--init checkpoint is from stage " + std::to_string(meta.stage) +
                       ", expected stage 1");
    }
    const auto have = config::model_key_values(start->config());
    const auto want = config::model_key_values(cfg.model);
    std::string diff;
    for (std::size_t i = 0; i < have.size(); ++i) {
      if (have[i] != want[i]) diff += " " + want[i].first;
    }
    if (!diff.empty()) throw StateError("--init checkpoint was trained with a different model:" + diff);
  } else if (args.init) {
    throw ConfigError("--init is only valid with --stage 2");
  }

  require_file(args.corpus, "corpus");
  const data::Corpus corpus = data::read_corpus(args.corpus);
  check_layout(corpus, cfg.model);

  pipeline::TrainResult r = pipeline::train(cfg, corpus, stages, std::move(start));

  make_out_dir(args.out_dir);
  train::CheckpointMeta meta;
  meta.stage = stages == pipeline::Stages::kFirst ? 1 : 2;
  meta.step = prior_steps + r.stage1.losses.size() + r.stage2.losses.size();
  meta.rng_state = stages == pipeline::Stages::kFirst ? r.stage1.sampler_state
                                                      : r.stage2.sampler_state;
  train::save_checkpoint(*r.model, meta, args.out_dir / "model.ckpt");
  if (stages != pipeline::Stages::kSecond) write_loss(args.out_dir / "loss_stage1.txt", r.stage1);
  if (stages != pipeline::Stages::kFirst) write_loss(args.out_dir / "loss_stage2.txt", r.stage2);
  if (stages != pipeline::Stages::kFirst && r.model->has_moe()) {
    auto out = open_out(args.out_dir / "routing_stage2.log");
    train::write_routing_log(r.stage2.routing, out);
  }
  echo_config(cfg, args.out_dir);
  write_run_record(args.out_dir, "train",
                   {{"stage", args.stage},
                    {"moe", cfg.model.use_moe ? "on" : "off"},
                    {"seed", std::to_string(cfg.seed)},
                    {"seeds", seeds_line(cfg)},
                    {"corpus_samples", std::to_string(corpus.samples.size())}});

  auto last = [](const train::StageResult& s) {
    return s.losses.empty() ? std::string("-") : std::to_string(s.losses.back().loss);
  };
  std::cout << "stage1 final loss " << last(r.stage1) << ", stage2 final loss " << last(r.stage2)
            << "; checkpoint " << (args.out_dir / "model.ckpt").string() << '\n';
  return kOk;
}

int evaluate(const EvalArgs& args) {
  require_file(args.checkpoint, "checkpoint");
  require_file(args.corpus, "corpus");
  train::CheckpointMeta meta;
  auto model = train::load_checkpoint(args.checkpoint, &meta);
  const data::Corpus corpus = data::read_corpus(args.corpus);
  check_layout(corpus, model->config());

  std::vector<eval::EvalItem> items;
  std::vector<eval::CircularPair> pairs;
  const eval::MetricsReport report =
      eval::evaluate(*model, corpus, args.circular_seed, &items, &pairs);

  make_out_dir(args.out_dir);
  {
    auto out = open_out(args.out_dir / "report.tsv");
    eval::write_report(report, out);
  }
  {
    auto out = open_out(args.out_dir / "items.tsv");
    eval::write_items(items, pairs, out);
  }
  const auto routing = eval::routing_records(items);
  double purity = -1.0;
  if (!routing.empty()) {
    {
      auto out = open_out(args.out_dir / "routing_eval.log");
      train::write_routing_log(routing, out);
    }
    const auto hist = eval::expert_distribution(routing, model->config().layout.languages);
    auto out = open_out(args.out_dir / "histogram.tsv");
    eval::write_histogram(hist, out);
    purity = hist.purity;
  }
  {
    auto out = open_out(args.out_dir / "config.ini");
    out << "# model configuration read from the checkpoint\n";
    for (const auto& [k, v] : config::model_key_values(model->config())) {
      out << k << " = " << v << '\n';
    }
    out << "eval.circular_seed = " << args.circular_seed << '\n';
  }
  write_run_record(args.out_dir, "eval",
                   {{"checkpoint_stage", std::to_string(meta.stage)},
                    {"checkpoint_step", std::to_string(meta.step)},
                    {"seed", std::to_string(args.circular_seed)},
                    {"eval_samples", std::to_string(corpus.samples.size())}});

  std::printf("overall %.4f  non-english %.4f  circular %.4f  naive %.4f", report.overall_accuracy,
              report.mean_non_english_accuracy(), report.circular.circular_accuracy,
              report.circular.naive_accuracy);
  if (purity >= 0.0) std::printf("  purity %.4f", purity);
  std::printf("\n");
  return kOk;
}

int analyze(const AnalyzeArgs& args) {
  if (!args.routing && !(args.with_report && args.without_report)) {
    throw ConfigError("analyze needs --routing, or both --with and --without");
  }
  if (args.with_report.has_value() != args.without_report.has_value()) {
    throw ConfigError("--with and --without must be given together");
  }
  make_out_dir(args.out_dir);
  Fields fields;
  if (args.routing) {
    require_file(*args.routing, "routing log");
    std::ifstream in(*args.routing);
    const auto log = train::read_routing_log(in);
    const auto hist = eval::expert_distribution(log, args.languages);
    auto out = open_out(args.out_dir / "histogram.tsv");
    eval::write_histogram(hist, out);
    fields.emplace_back("routing_records", std::to_string(log.size()));
    std::printf("routing purity %.4f over %zu records\n", hist.purity, log.size());
  }
  if (args.with_report) {
    require_file(*args.with_report, "report");
    require_file(*args.without_report, "report");
    std::ifstream a(*args.with_report);
    std::ifstream b(*args.without_report);
    const eval::MetricsReport with_moe = eval::read_report(a);
    const eval::MetricsReport without_moe = eval::read_report(b);
    const auto rows = eval::ablation_compare(with_moe, without_moe);
    auto out = open_out(args.out_dir / "ablation.tsv");
    eval::write_ablation(rows, out);
    std::printf("non-english accuracy %.4f with MoE, %.4f without\n",
                with_moe.mean_non_english_accuracy(), without_moe.mean_non_english_accuracy());
  }
  fields.emplace_back("languages", std::to_string(args.languages));
  write_run_record(args.out_dir, "analyze", fields);
  return kOk;
}

int gradcheck(const GradcheckArgs& args) {
  const config::ExperimentConfig cfg = resolve_config(args.config);
  pipeline::GradCheckOptions opts;
  opts.batch = args.batch;
  opts.eps = args.eps;
  opts.tolerance = args.tolerance;
  const GradCheckReport r = pipeline::gradcheck_stage2(cfg, opts);
  const bool pass = r.max_rel_error < args.tolerance;

  std::ostringstream table;
  table << "param\tchecked\tmax_rel_error\tstatus\n";
  for (const ParamCheck& p : r.params) {
    table << p.name << '\t' << p.checked << '\t' << p.max_rel_error << '\t'
          << (p.frozen ? "frozen" : p.skipped ? "skipped" : "checked") << '\n';
  }
  if (args.out_dir) {
    make_out_dir(*args.out_dir);
    auto out = open_out(*args.out_dir / "gradcheck.tsv");
    out << table.str();
    echo_config(cfg, *args.out_dir);
    write_run_record(*args.out_dir, "gradcheck",
                     {{"seed", std::to_string(cfg.seed)}, {"seeds", seeds_line(cfg)}});
  }
  std::printf("checked %zu elements; max rel. error %.3g at %s[%zu] (tolerance %.3g): %s\n",
              r.checked, r.max_rel_error, r.worst_param.c_str(), r.worst_index, args.tolerance,
              pass ? "PASS" : "FAIL");
  return pass ? kOk : kCheckFailed;
}

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kIoError;
  } catch (const StateError& e) {
    std::cerr << "state error: " << e.what() << '\n';
    return kStateError;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return kStateError;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const CapacityError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const DimensionError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const IndexError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
}

}  // namespace parrot::cli
