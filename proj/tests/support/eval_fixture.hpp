// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "parrot/evaluator.hpp"

// Hand-scored twelve-item fixture, two items per language.
namespace fixture {

using parrot::TokenId;
using parrot::eval::CircularPair;
using parrot::eval::EvalItem;
using parrot::eval::Verdict;

inline const parrot::VocabLayout kLayout;

// Logits peak at `predicted`; inside the language block the runner-up is
// `block_class` unless the prediction itself lies in the block.
inline EvalItem make_item(std::uint32_t lang, std::uint32_t cls, TokenId predicted,
                          std::uint32_t block_class) {
  EvalItem it;
  it.sample.language = lang;
  it.sample.class_id = cls;
  it.sample.answer = kLayout.answer_token(lang, cls);
  it.predicted = predicted;
  it.logits.assign(kLayout.total(), 0.0);
  it.logits[kLayout.answer_token(lang, block_class)] = 1.0;
  it.logits[predicted] = 5.0;
  return it;
}

inline EvalItem correct(std::uint32_t lang, std::uint32_t cls) {
  return make_item(lang, cls, kLayout.answer_token(lang, cls), cls);
}
inline EvalItem wrong_class(std::uint32_t lang, std::uint32_t cls) {
  const std::uint32_t other = (cls + 1) % kLayout.classes;
  return make_item(lang, cls, kLayout.answer_token(lang, other), other);
}
inline EvalItem wrong_block(std::uint32_t lang, std::uint32_t cls) {
  const std::uint32_t other_lang = (lang + 1) % kLayout.languages;
  return make_item(lang, cls, kLayout.answer_token(other_lang, cls), cls);
}

inline CircularPair pair(std::size_t i, Verdict pos, Verdict neg) {
  CircularPair p;
  p.item = i;
  p.positive_verdict = pos;
  p.negative_verdict = neg;
  return p;
}

inline std::vector<EvalItem> items() {
  return {correct(0, 1),     correct(0, 2),     correct(1, 3),     wrong_block(1, 4),
          wrong_class(2, 5), wrong_block(2, 6), correct(3, 7),     correct(3, 0),
          wrong_block(4, 1), wrong_block(4, 2), correct(5, 3),     wrong_class(5, 4)};
}

// 5 fully correct, 3 false Yes on the negative, 2 false No on the positive,
// 2 both wrong.
inline std::vector<CircularPair> pairs() {
  const Verdict Y = Verdict::kYes, N = Verdict::kNo;
  std::vector<CircularPair> p;
  for (std::size_t i = 0; i < 5; ++i) p.push_back(pair(p.size(), Y, N));
  for (std::size_t i = 0; i < 3; ++i) p.push_back(pair(p.size(), Y, Y));
  for (std::size_t i = 0; i < 2; ++i) p.push_back(pair(p.size(), N, N));
  for (std::size_t i = 0; i < 2; ++i) p.push_back(pair(p.size(), N, Y));
  return p;
}

inline const std::string kReport =
    "lang\tcount\tcorrect\twrong_block\taccuracy\twrong_block_rate\n"
    "en\t2\t2\t0\t1\t0\n"
    "zh\t2\t1\t1\t0.5\t0.5\n"
    "pt\t2\t0\t1\t0\t0.5\n"
    "ar\t2\t2\t0\t1\t0\n"
    "tr\t2\t0\t2\t0\t1\n"
    "ru\t2\t1\t0\t0.5\t0\n"
    "overall_accuracy\t0.5\n"
    "mean_non_english_accuracy\t0.4\n"
    "circular_accuracy\t0.4166666666666667\n"
    "naive_accuracy\t0.625\n";

}  // namespace fixture
