// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#include "parrot/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include "parrot/config.hpp"
#include "parrot/error.hpp"

namespace parrot::train {
namespace {

constexpr std::string_view kMagic = "#parrot-checkpoint v1";

struct Array {
  std::vector<std::size_t> dims;
  std::vector<double> values;
};

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (const auto& i : items) s += (s.empty() ? "" : ", ") + i;
  return s;
}

}  // namespace

void save_checkpoint(const model::ToyModel& model, const CheckpointMeta& meta, std::ostream& out) {
  out << kMagic << '\n';
  out << "stage " << meta.stage << '\n';
  out << "step " << meta.step << '\n';
  out << "moe_initialized " << (model.moe_initialized() ? 1 : 0) << '\n';
  if (!meta.rng_state.empty()) out << "rng " << meta.rng_state << '\n';
  for (const auto& [k, v] : config::model_key_values(model.config())) {
    out << "config " << k << '=' << v << '\n';
  }
  char buf[40];
  for (const Parameter* p : model.params().all()) {
    const Shape& s = p->tensor.shape();
    out << "param " << p->name << ' ' << s.rank();
    for (std::size_t i = 0; i < s.rank(); ++i) out << ' ' << s.dim(i);
    out << '\n';
    bool first = true;
    for (double v : p->tensor.values()) {
      if (!first) out << ' ';
      first = false;
      auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
  out << "end\n";
}

void save_checkpoint(const model::ToyModel& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  save_checkpoint(model, meta, out);
  if (!out) throw IoError("failed writing checkpoint '" + path.string() + "'");
}

std::unique_ptr<model::ToyModel> load_checkpoint(std::istream& in, CheckpointMeta* meta_out) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw CheckpointError("missing '#parrot-checkpoint v1' header");
  }
  CheckpointMeta meta;
  bool moe_initialized = false;
  config::KeyValues kv;
  std::map<std::string, Array> arrays;
  std::vector<std::string> order;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    std::istringstream is(line);
    std::string tag;
    is >> tag;
    if (tag == "stage") {
      is >> meta.stage;
    } else if (tag == "step") {
      is >> meta.step;
    } else if (tag == "moe_initialized") {
      int v = 0;
      is >> v;
      moe_initialized = v != 0;
    } else if (tag == "rng") {
      std::getline(is >> std::ws, meta.rng_state);
    } else if (tag == "config") {
      std::string item;
      is >> item;
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw CheckpointError("malformed config line '" + line + "'");
      kv.emplace_back(item.substr(0, eq), item.substr(eq + 1));
    } else if (tag == "param") {
      std::string name;
      std::size_t rank = 0;
      is >> name >> rank;
      Array a;
      a.dims.resize(rank);
      std::size_t count = 1;
      for (auto& d : a.dims) {
        is >> d;
        count *= d;
      }
      if (!is || rank > Shape::kMaxRank) throw CheckpointError("malformed param header '" + line + "'");
      std::string values;
      if (!std::getline(in, values)) throw CheckpointError("truncated array '" + name + "'");
      const char* p = values.data();
      const char* end = values.data() + values.size();
      a.values.reserve(count);
      while (p < end) {
        if (*p == ' ') {
          ++p;
          continue;
        }
        double v = 0.0;
        auto res = std::from_chars(p, end, v, std::chars_format::hex);
        if (res.ec != std::errc()) throw CheckpointError("bad value in array '" + name + "'");
        a.values.push_back(v);
        p = res.ptr;
      }
      if (a.values.size() != count) {
        throw CheckpointError("array '" + name + "' holds " + std::to_string(a.values.size()) +
                              " values, header says " + std::to_string(count));
      }
      if (arrays.count(name)) throw CheckpointError("duplicate array '" + name + "'");
      order.push_back(name);
      arrays.emplace(name, std::move(a));
    } else if (!tag.empty()) {
      throw CheckpointError("unknown record '" + tag + "'");
    }
  }
  if (!ended) throw CheckpointError("checkpoint truncated (no 'end')");

  model::ModelConfig cfg;
  try {
    cfg = config::model_from_key_values(kv);
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("embedded config: ") + e.what());
  }
  auto model = std::make_unique<model::ToyModel>(cfg);

  std::vector<std::string> missing, mismatched, unexpected;
  for (Parameter* p : model->params().all()) {
    auto it = arrays.find(p->name);
    if (it == arrays.end()) {
      missing.push_back(p->name);
      continue;
    }
    const Shape& s = p->tensor.shape();
    bool same = it->second.dims.size() == s.rank();
    for (std::size_t i = 0; same && i < s.rank(); ++i) same = it->second.dims[i] == s.dim(i);
    if (!same) {
      mismatched.push_back(p->name);
      continue;
    }
    std::copy(it->second.values.begin(), it->second.values.end(), p->tensor.values().begin());
  }
  for (const auto& name : order) {
    if (!model->params().contains(name)) unexpected.push_back(name);
  }
  if (!missing.empty() || !mismatched.empty() || !unexpected.empty()) {
    std::string msg = "checkpoint does not match model:";
    if (!missing.empty()) msg += " missing [" + join(missing) + "]";
    if (!mismatched.empty()) msg += " shape mismatch [" + join(mismatched) + "]";
    if (!unexpected.empty()) msg += " unexpected [" + join(unexpected) + "]";
    throw CheckpointError(msg);
  }
  if (model->has_moe()) model->experts()->mark_initialized(moe_initialized);
  if (meta.stage != 1 && meta.stage != 2) throw CheckpointError("invalid stage in checkpoint");
  model->set_stage(meta.stage == 2 ? model::Stage::kInstruction : model::Stage::kAlignment);
  if (meta_out) *meta_out = meta;
  return model;
}

std::unique_ptr<model::ToyModel> load_checkpoint(const std::filesystem::path& path,
                                                 CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  return load_checkpoint(in, meta);
}

}  // namespace parrot::train
