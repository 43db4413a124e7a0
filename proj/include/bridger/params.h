#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bridger/error.h"
#include "bridger/rng.h"
#include "bridger/tensor.h"

namespace bridger::ad {

template <class T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;  // same shape as value, accumulated by Tape::backward
};

// Registry of named parameters. Iteration order is creation order, which is
// fixed by model construction and therefore deterministic.
template <class T>
class ParameterSet {
 public:
  Parameter<T>& create(const std::string& name, std::vector<int> shape) {
    if (index_.count(name)) throw Error("duplicate parameter name: " + name);
    auto p = std::make_unique<Parameter<T>>();
    p->name = name;
    p->value = Tensor<T>(shape);
    p->grad = Tensor<T>(std::move(shape));
    index_.emplace(name, items_.size());
    items_.push_back(std::move(p));
    return *items_.back();
  }

  Parameter<T>* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : items_[it->second].get();
  }

  const Parameter<T>* find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : items_[it->second].get();
  }

  Parameter<T>& get(const std::string& name) {
    if (auto* p = find(name)) return *p;
    throw Error("unknown parameter: " + name);
  }

  const Parameter<T>& get(const std::string& name) const {
    if (auto* p = find(name)) return *p;
    throw Error("unknown parameter: " + name);
  }

  std::size_t size() const { return items_.size(); }

  std::int64_t total_values() const {
    std::int64_t n = 0;
    for (const auto& p : items_) n += p->value.numel();
    return n;
  }

  void zero_grads() {
    for (auto& p : items_) {
      std::fill(p->grad.values.begin(), p->grad.values.end(), T(0));
    }
  }

  const std::vector<std::unique_ptr<Parameter<T>>>& items() const { return items_; }
  std::vector<std::unique_ptr<Parameter<T>>>& items() { return items_; }

 private:
  std::vector<std::unique_ptr<Parameter<T>>> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Dense weight matrices: truncated normal, std 0.02, cut at 2 sigma.
template <class T>
void init_dense(Parameter<T>& p, Rng& rng) {
  for (auto& v : p.value.values) v = static_cast<T>(rng.truncated_normal(0.02));
}

// Learned embedding tables: uniform in +-0.5/dim, dim = embedding width.
template <class T>
void init_embedding(Parameter<T>& p, Rng& rng) {
  const double half = 0.5 / static_cast<double>(p.value.cols());
  for (auto& v : p.value.values) v = static_cast<T>(rng.uniform(-half, half));
}

}  // namespace bridger::ad
