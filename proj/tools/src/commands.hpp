// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "parrot/config.hpp"

namespace parrot::cli {

enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kUsage = 2,
  kConfigError = 3,
  kDataError = 4,
  kIoError = 5,
  kStateError = 6,
  kInternalError = 70,
};

// Config file (optional) followed by "key=value" overrides, in order.
struct ConfigSource {
  std::optional<std::filesystem::path> file;
  std::vector<std::string> overrides;
};

config::ExperimentConfig resolve_config(const ConfigSource& src);

struct GenDataArgs {
  ConfigSource config;
  std::filesystem::path out_dir;
};

struct TrainArgs {
  ConfigSource config;
  std::filesystem::path corpus;
  std::filesystem::path out_dir;
  std::string stage = "both";  // 1, 2 or both
  bool no_moe = false;
  std::optional<double> alpha;
  std::optional<std::size_t> top_k;
  std::optional<std::filesystem::path> init;  // stage-1 checkpoint for --stage 2
};

struct EvalArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path corpus;
  std::filesystem::path out_dir;
  std::uint64_t circular_seed = 5;
};

struct AnalyzeArgs {
  std::optional<std::filesystem::path> routing;
  std::size_t languages = 6;
  std::optional<std::filesystem::path> with_report;
  std::optional<std::filesystem::path> without_report;
  std::filesystem::path out_dir;
};

struct GradcheckArgs {
  ConfigSource config;
  std::size_t batch = 2;
  double eps = 1e-3;
  double tolerance = 1e-4;
  std::optional<std::filesystem::path> out_dir;
};

// Each command returns an ExitCode. Library errors propagate as exceptions;
// run_guarded() maps them to exit codes.
int gen_data(const GenDataArgs& args);
int train(const TrainArgs& args);
int evaluate(const EvalArgs& args);
int analyze(const AnalyzeArgs& args);
int gradcheck(const GradcheckArgs& args);

int exit_code_for_current_exception();

}  // namespace parrot::cli
