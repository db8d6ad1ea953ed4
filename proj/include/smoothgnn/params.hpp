#pragma once

#include <string>
#include <utility>
#include <vector>

#include "smoothgnn/errors.hpp"
#include "smoothgnn/rng.hpp"
#include "smoothgnn/tensor.hpp"

namespace sg {

// Named learnable tensors in insertion order (the order fixes checkpoint
// layout and Adam state alignment).
class ParamStore {
 public:
  TensorPtr create(const std::string& name, std::vector<int64_t> shape) {
    if (has(name)) throw ValidationError("parameter already exists: " + name);
    auto t = tensor(std::move(shape), true);
    items_.emplace_back(name, t);
    return t;
  }

  // Glorot-uniform initialized matrix [fan_out, fan_in] (or vector).
  TensorPtr create_glorot(const std::string& name, std::vector<int64_t> shape, Rng& rng) {
    auto t = create(name, shape);
    const double fan_in = t->cols();
    const double fan_out = t->rows();
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& w : t->v) w = rng.uniform(-limit, limit);
    return t;
  }

  bool has(const std::string& name) const {
    for (const auto& [n, t] : items_) {
      if (n == name) return true;
    }
    return false;
  }

  TensorPtr get(const std::string& name) const {
    for (const auto& [n, t] : items_) {
      if (n == name) return t;
    }
    throw ValidationError("unknown parameter: " + name);
  }

  const std::vector<std::pair<std::string, TensorPtr>>& items() const { return items_; }
  size_t size() const { return items_.size(); }

  std::vector<TensorPtr> tensors() const {
    std::vector<TensorPtr> out;
    out.reserve(items_.size());
    for (const auto& [n, t] : items_) out.push_back(t);
    return out;
  }

  void zero_grad() {
    for (auto& [n, t] : items_) t->zero_grad();
  }

  std::vector<std::vector<double>> snapshot() const {
    std::vector<std::vector<double>> out;
    out.reserve(items_.size());
    for (const auto& [n, t] : items_) out.push_back(t->v);
    return out;
  }

  void restore(const std::vector<std::vector<double>>& snap) {
    if (snap.size() != items_.size()) throw ValidationError("snapshot size mismatch");
    for (size_t i = 0; i < snap.size(); ++i) items_[i].second->v = snap[i];
  }

 private:
  std::vector<std::pair<std::string, TensorPtr>> items_;
};

}  // namespace sg
