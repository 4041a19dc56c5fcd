// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "parrot/sample.hpp"
#include "parrot/synth_data.hpp"
#include "parrot/toy_model.hpp"
#include "parrot/trainer.hpp"

namespace parrot::eval {

// First index of the maximum; ties resolve to the lower index.
std::size_t argmax(std::span<const double> v);

struct EvalItem {
  Sample sample;
  TokenId predicted = 0;
  std::vector<double> logits;
  std::optional<std::vector<double>> probs;
};

std::vector<EvalItem> predict_all(const model::ToyModel& model, const data::Corpus& corpus);

enum class Verdict { kYes, kNo };

// One image asked "is this class c?" twice: once for its true class (expected
// Yes) and once for another class (expected No).
struct CircularPair {
  std::size_t item = 0;
  std::uint32_t positive_class = 0;
  std::uint32_t negative_class = 0;
  Verdict positive_verdict = Verdict::kNo;
  Verdict negative_verdict = Verdict::kNo;
};

struct CircularResult {
  std::size_t instances = 0;
  std::size_t instances_correct = 0;
  std::size_t questions = 0;
  std::size_t questions_correct = 0;
  double circular_accuracy = 0.0;
  double naive_accuracy = 0.0;
};

// An instance counts only if the positive question got Yes and the negative
// question got No; naive accuracy scores the 2n questions independently.
CircularResult circular_evaluate(std::span<const CircularPair> pairs);

// Yes/No verdict for "is this image class `cls`?": Yes iff `cls` has the
// highest logit among the answer tokens of the prompt's language block.
Verdict class_verdict(const EvalItem& item, std::uint32_t cls, const VocabLayout& layout);

// One pair per item; the negative class is drawn uniformly from the other
// classes with a generator seeded by `seed`.
std::vector<CircularPair> build_circular_pairs(std::span<const EvalItem> items,
                                               const VocabLayout& layout, std::uint64_t seed);

struct LanguageMetrics {
  std::size_t count = 0;
  std::size_t correct = 0;
  std::size_t wrong_block = 0;
  double accuracy = 0.0;
  double wrong_block_rate = 0.0;
};

struct MetricsReport {
  std::vector<LanguageMetrics> per_language;
  std::size_t total = 0;
  std::size_t correct = 0;
  double overall_accuracy = 0.0;
  CircularResult circular;

  // Mean accuracy over languages 1..L-1 (everything but English).
  double mean_non_english_accuracy() const;
};

// Accuracy is exact-token match; wrong-block counts predictions that fall
// outside the prompt language's token block.
MetricsReport score(std::span<const EvalItem> items, std::span<const CircularPair> pairs,
                    const VocabLayout& layout);

MetricsReport evaluate(const model::ToyModel& model, const data::Corpus& corpus,
                       std::uint64_t circular_seed, std::vector<EvalItem>* items_out = nullptr,
                       std::vector<CircularPair>* pairs_out = nullptr);

// ---- expert routing analysis ----

struct ExpertHistogram {
  std::size_t languages = 0;
  std::size_t experts = 0;
  std::vector<std::size_t> samples;                 // per language
  std::vector<std::vector<double>> mean_probs;      // languages x experts
  std::vector<std::vector<std::size_t>> counts;     // argmax-expert counts
  std::vector<int> assignment;                      // language -> expert, -1 if unmatched
  std::size_t matched = 0;
  double purity = 0.0;
};

// Maximum-weight language->expert matching on a rectangular count matrix
// (Hungarian method). Returns the expert per row, -1 for unmatched rows.
std::vector<int> max_assignment(const std::vector<std::vector<std::size_t>>& counts);

ExpertHistogram expert_distribution(std::span<const train::RoutingRecord> log,
                                    std::size_t languages);

// Router records of an evaluated corpus, step 0.
std::vector<train::RoutingRecord> routing_records(std::span<const EvalItem> items);

// ---- ablation ----

struct AblationRow {
  std::uint32_t language = 0;
  double accuracy_with = 0.0;
  double accuracy_without = 0.0;
  double accuracy_delta = 0.0;
  double wrong_block_with = 0.0;
  double wrong_block_without = 0.0;
};

std::vector<AblationRow> ablation_compare(const MetricsReport& with_moe,
                                          const MetricsReport& without_moe);

// ---- text outputs ----

void write_report(const MetricsReport& report, std::ostream& out);
// Inverse of write_report. Circular counts are not stored, only the two rates.
MetricsReport read_report(std::istream& in);
void write_items(std::span<const EvalItem> items, std::span<const CircularPair> pairs,
                 std::ostream& out);
void write_histogram(const ExpertHistogram& h, std::ostream& out);
void write_ablation(std::span<const AblationRow> rows, std::ostream& out);

}  // namespace parrot::eval
