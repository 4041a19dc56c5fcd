// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#include "parrot/evaluator.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "parrot/error.hpp"
#include "parrot/rng.hpp"

namespace parrot::eval {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void put(std::ostream& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

}  // namespace

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw ContractError("argmax of an empty vector");
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::vector<EvalItem> predict_all(const model::ToyModel& model, const data::Corpus& corpus) {
  std::vector<EvalItem> items;
  items.reserve(corpus.samples.size());
  for (const Sample& s : corpus.samples) {
    model::Prediction p = model.predict(s);
    EvalItem item;
    item.sample = s;
    item.predicted = static_cast<TokenId>(argmax(p.logits));
    item.logits = std::move(p.logits);
    item.probs = std::move(p.probs);
    items.push_back(std::move(item));
  }
  return items;
}

CircularResult circular_evaluate(std::span<const CircularPair> pairs) {
  CircularResult r;
  for (const CircularPair& p : pairs) {
    const bool pos = p.positive_verdict == Verdict::kYes;
    const bool neg = p.negative_verdict == Verdict::kNo;
    ++r.instances;
    r.questions += 2;
    r.questions_correct += static_cast<std::size_t>(pos) + static_cast<std::size_t>(neg);
    if (pos && neg) ++r.instances_correct;
  }
  r.circular_accuracy = ratio(r.instances_correct, r.instances);
  r.naive_accuracy = ratio(r.questions_correct, r.questions);
  return r;
}

Verdict class_verdict(const EvalItem& item, std::uint32_t cls, const VocabLayout& layout) {
  if (cls >= layout.classes) throw IndexError("class " + std::to_string(cls) + " out of range");
  const TokenId begin = layout.answer_token(item.sample.language, 0);
  std::span<const double> block(item.logits.data() + begin, layout.classes);
  return argmax(block) == cls ? Verdict::kYes : Verdict::kNo;
}

std::vector<CircularPair> build_circular_pairs(std::span<const EvalItem> items,
                                               const VocabLayout& layout, std::uint64_t seed) {
  if (layout.classes < 2) throw ConfigError("circular evaluation needs at least two classes");
  Rng rng(seed);
  std::vector<CircularPair> pairs;
  pairs.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::uint32_t cls = items[i].sample.class_id;
    const auto offset = static_cast<std::uint32_t>(1 + rng.index(layout.classes - 1));
    CircularPair p;
    p.item = i;
    p.positive_class = cls;
    p.negative_class = static_cast<std::uint32_t>((cls + offset) % layout.classes);
    p.positive_verdict = class_verdict(items[i], p.positive_class, layout);
    p.negative_verdict = class_verdict(items[i], p.negative_class, layout);
    pairs.push_back(p);
  }
  return pairs;
}

double MetricsReport::mean_non_english_accuracy() const {
  if (per_language.size() < 2) return 0.0;
  double s = 0.0;
  for (std::size_t l = 1; l < per_language.size(); ++l) s += per_language[l].accuracy;
  return s / static_cast<double>(per_language.size() - 1);
}

MetricsReport score(std::span<const EvalItem> items, std::span<const CircularPair> pairs,
                    const VocabLayout& layout) {
  MetricsReport r;
  r.per_language.resize(layout.languages);
  for (const EvalItem& it : items) {
    if (it.predicted >= layout.total()) throw IndexError("prediction outside vocabulary");
    LanguageMetrics& m = r.per_language.at(it.sample.language);
    ++m.count;
    if (it.predicted == it.sample.answer) ++m.correct;
    if (layout.language_of(it.predicted) != it.sample.language) ++m.wrong_block;
  }
  for (LanguageMetrics& m : r.per_language) {
    m.accuracy = ratio(m.correct, m.count);
    m.wrong_block_rate = ratio(m.wrong_block, m.count);
    r.total += m.count;
    r.correct += m.correct;
  }
  r.overall_accuracy = ratio(r.correct, r.total);
  r.circular = circular_evaluate(pairs);
  return r;
}

MetricsReport evaluate(const model::ToyModel& model, const data::Corpus& corpus,
                       std::uint64_t circular_seed, std::vector<EvalItem>* items_out,
                       std::vector<CircularPair>* pairs_out) {
  std::vector<EvalItem> items = predict_all(model, corpus);
  std::vector<CircularPair> pairs = build_circular_pairs(items, corpus.layout, circular_seed);
  MetricsReport r = score(items, pairs, corpus.layout);
  if (items_out) *items_out = std::move(items);
  if (pairs_out) *pairs_out = std::move(pairs);
  return r;
}

std::vector<int> max_assignment(const std::vector<std::vector<std::size_t>>& counts) {
  const std::size_t rows = counts.size();
  if (rows == 0) return {};
  const std::size_t cols = counts[0].size();
  for (const auto& r : counts) {
    if (r.size() != cols) throw DimensionError("ragged count matrix");
  }
  const std::size_t n = std::max(rows, cols);
  std::size_t peak = 0;
  for (const auto& r : counts) {
    for (std::size_t c : r) peak = std::max(peak, c);
  }
  // Minimize peak - count on the zero-padded square matrix. 1-based arrays
  // with potentials u, v and column matches p.
  auto cost = [&](std::size_t i, std::size_t j) -> long long {
    const std::size_t c = (i < rows && j < cols) ? counts[i][j] : 0;
    return static_cast<long long>(peak) - static_cast<long long>(c);
  };
  constexpr long long kInf = std::numeric_limits<long long>::max() / 4;
  std::vector<long long> u(n + 1, 0), v(n + 1, 0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      long long delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const long long cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> out(rows, -1);
  for (std::size_t j = 1; j <= n; ++j) {
    if (p[j] != 0 && p[j] - 1 < rows && j - 1 < cols) out[p[j] - 1] = static_cast<int>(j - 1);
  }
  return out;
}

ExpertHistogram expert_distribution(std::span<const train::RoutingRecord> log,
                                    std::size_t languages) {
  ExpertHistogram h;
  h.languages = languages;
  h.experts = log.empty() ? 0 : log.front().probs.size();
  h.samples.assign(languages, 0);
  h.mean_probs.assign(languages, std::vector<double>(h.experts, 0.0));
  h.counts.assign(languages, std::vector<std::size_t>(h.experts, 0));
  for (const train::RoutingRecord& r : log) {
    if (r.language >= languages) throw IndexError("routing record language out of range");
    if (r.probs.size() != h.experts) throw DimensionError("inconsistent expert count in routing log");
    ++h.samples[r.language];
    for (std::size_t e = 0; e < h.experts; ++e) h.mean_probs[r.language][e] += r.probs[e];
    ++h.counts[r.language][argmax(r.probs)];
  }
  std::size_t total = 0;
  for (std::size_t l = 0; l < languages; ++l) {
    total += h.samples[l];
    if (h.samples[l] == 0) continue;
    for (double& m : h.mean_probs[l]) m /= static_cast<double>(h.samples[l]);
  }
  if (h.experts > 0) {
    h.assignment = max_assignment(h.counts);
    for (std::size_t l = 0; l < languages; ++l) {
      if (h.assignment[l] >= 0) h.matched += h.counts[l][static_cast<std::size_t>(h.assignment[l])];
    }
  } else {
    h.assignment.assign(languages, -1);
  }
  h.purity = ratio(h.matched, total);
  return h;
}

std::vector<train::RoutingRecord> routing_records(std::span<const EvalItem> items) {
  std::vector<train::RoutingRecord> out;
  for (const EvalItem& it : items) {
    if (it.probs) out.push_back(train::RoutingRecord{0, it.sample.language, *it.probs});
  }
  return out;
}

std::vector<AblationRow> ablation_compare(const MetricsReport& with_moe,
                                          const MetricsReport& without_moe) {
  if (with_moe.per_language.size() != without_moe.per_language.size()) {
    throw DimensionError("ablation reports cover different language sets");
  }
  std::vector<AblationRow> rows;
  for (std::size_t l = 0; l < with_moe.per_language.size(); ++l) {
    const LanguageMetrics& a = with_moe.per_language[l];
    const LanguageMetrics& b = without_moe.per_language[l];
    rows.push_back(AblationRow{static_cast<std::uint32_t>(l), a.accuracy, b.accuracy,
                               a.accuracy - b.accuracy, a.wrong_block_rate, b.wrong_block_rate});
  }
  return rows;
}

void write_report(const MetricsReport& r, std::ostream& out) {
  out << "lang\tcount\tcorrect\twrong_block\taccuracy\twrong_block_rate\n";
  for (std::size_t l = 0; l < r.per_language.size(); ++l) {
    const LanguageMetrics& m = r.per_language[l];
    out << language_label(l) << '\t' << m.count << '\t' << m.correct << '\t' << m.wrong_block
        << '\t';
    put(out, m.accuracy);
    out << '\t';
    put(out, m.wrong_block_rate);
    out << '\n';
  }
  out << "overall_accuracy\t";
  put(out, r.overall_accuracy);
  out << "\nmean_non_english_accuracy\t";
  put(out, r.mean_non_english_accuracy());
  out << "\ncircular_accuracy\t";
  put(out, r.circular.circular_accuracy);
  out << "\nnaive_accuracy\t";
  put(out, r.circular.naive_accuracy);
  out << '\n';
}

MetricsReport read_report(std::istream& in) {
  MetricsReport r;
  std::string line;
  std::size_t n = 0;
  auto number = [&n](const std::string& text) {
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
      throw ParseError("bad number '" + text + "'", n);
    }
    return v;
  };
  while (std::getline(in, line)) {
    ++n;
    if (n == 1) {
      if (!line.starts_with("lang\t")) throw ParseError("missing report header", n);
      continue;
    }
    if (line.empty()) continue;
    std::istringstream is(line);
    std::vector<std::string> f;
    for (std::string cell; std::getline(is, cell, '\t');) f.push_back(cell);
    if (f.size() == 2) {
      if (f[0] == "circular_accuracy") {
        r.circular.circular_accuracy = number(f[1]);
      } else if (f[0] == "naive_accuracy") {
        r.circular.naive_accuracy = number(f[1]);
      } else if (f[0] != "overall_accuracy" && f[0] != "mean_non_english_accuracy") {
        throw ParseError("unknown report key '" + f[0] + "'", n);
      }
      continue;
    }
    if (f.size() != 6) throw ParseError("expected 6 fields", n);
    std::size_t lang = 0;
    try {
      lang = language_id(f[0]);
    } catch (const IndexError&) {
      throw ParseError("unknown language '" + f[0] + "'", n);
    }
    if (lang != r.per_language.size()) throw ParseError("languages out of order", n);
    LanguageMetrics m;
    m.count = static_cast<std::size_t>(number(f[1]));
    m.correct = static_cast<std::size_t>(number(f[2]));
    m.wrong_block = static_cast<std::size_t>(number(f[3]));
    m.accuracy = number(f[4]);
    m.wrong_block_rate = number(f[5]);
    r.total += m.count;
    r.correct += m.correct;
    r.per_language.push_back(m);
  }
  if (r.per_language.empty()) throw ParseError("report has no languages", n);
  r.overall_accuracy =
      r.total == 0 ? 0.0 : static_cast<double>(r.correct) / static_cast<double>(r.total);
  return r;
}

void write_items(std::span<const EvalItem> items, std::span<const CircularPair> pairs,
                 std::ostream& out) {
  out << "index\tlang\tclass\tanswer\tpredicted\tpos_class\tpos_verdict\tneg_class\tneg_verdict\n";
  auto verdict = [](Verdict v) { return v == Verdict::kYes ? "yes" : "no"; };
  for (std::size_t i = 0; i < items.size(); ++i) {
    const EvalItem& it = items[i];
    out << i << '\t' << language_label(it.sample.language) << '\t' << it.sample.class_id << '\t'
        << it.sample.answer << '\t' << it.predicted;
    if (i < pairs.size()) {
      const CircularPair& p = pairs[i];
      out << '\t' << p.positive_class << '\t' << verdict(p.positive_verdict) << '\t'
          << p.negative_class << '\t' << verdict(p.negative_verdict);
    }
    out << '\n';
  }
}

void write_histogram(const ExpertHistogram& h, std::ostream& out) {
  out << "lang\tsamples\tassigned_expert";
  for (std::size_t e = 0; e < h.experts; ++e) out << "\tmean_p" << e;
  for (std::size_t e = 0; e < h.experts; ++e) out << "\targmax_count" << e;
  out << '\n';
  for (std::size_t l = 0; l < h.languages; ++l) {
    out << language_label(l) << '\t' << h.samples[l] << '\t' << h.assignment[l];
    for (double m : h.mean_probs[l]) {
      out << '\t';
      put(out, m);
    }
    for (std::size_t c : h.counts[l]) out << '\t' << c;
    out << '\n';
  }
  out << "purity\t";
  put(out, h.purity);
  out << '\n';
}

void write_ablation(std::span<const AblationRow> rows, std::ostream& out) {
  out << "lang\taccuracy_moe\taccuracy_no_moe\taccuracy_delta\twrong_block_moe\twrong_block_no_moe\n";
  for (const AblationRow& r : rows) {
    out << language_label(r.language) << '\t';
    put(out, r.accuracy_with);
    out << '\t';
    put(out, r.accuracy_without);
    out << '\t';
    put(out, r.accuracy_delta);
    out << '\t';
    put(out, r.wrong_block_with);
    out << '\t';
    put(out, r.wrong_block_without);
    out << '\n';
  }
}

}  // namespace parrot::eval
