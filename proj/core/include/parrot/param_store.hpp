// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "parrot/tensor.hpp"

namespace parrot {

// Insertion-ordered registry of uniquely named parameters with stable addresses.
class ParamStore {
 public:
  Parameter& add(std::string name, Shape shape);

  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  std::size_t size() const { return params_.size(); }
  std::size_t element_count() const;

  // Parameters in registration order.
  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::vector<Parameter*> with_prefix(std::string_view prefix);

  void zero_grads();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

}  // namespace parrot
