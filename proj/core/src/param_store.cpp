// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#include "parrot/param_store.hpp"

#include "parrot/error.hpp"

namespace parrot {

Parameter& ParamStore::add(std::string name, Shape shape) {
  if (find(name) != nullptr) throw ContractError("duplicate parameter name '" + name + "'");
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->tensor = Tensor(shape);
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParamStore::find(std::string_view name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter* ParamStore::find(std::string_view name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

Parameter& ParamStore::get(std::string_view name) {
  Parameter* p = find(name);
  if (p == nullptr) throw ContractError("unknown parameter '" + std::string(name) + "'");
  return *p;
}

const Parameter& ParamStore::get(std::string_view name) const {
  const Parameter* p = find(name);
  if (p == nullptr) throw ContractError("unknown parameter '" + std::string(name) + "'");
  return *p;
}

std::size_t ParamStore::element_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->tensor.size();
  return n;
}

std::vector<Parameter*> ParamStore::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParamStore::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<Parameter*> ParamStore::with_prefix(std::string_view prefix) {
  std::vector<Parameter*> out;
  for (auto& p : params_) {
    if (std::string_view(p->name).starts_with(prefix)) out.push_back(p.get());
  }
  return out;
}

void ParamStore::zero_grads() {
  for (auto& p : params_) p->tensor.zero_grad();
}

}  // namespace parrot
