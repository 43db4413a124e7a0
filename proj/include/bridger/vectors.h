#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "bridger/corpus.h"
#include "bridger/error.h"

namespace bridger {

// Frozen word-vector table. Out-of-vocabulary tokens map to the zero vector.
class StaticVectors {
 public:
  explicit StaticVectors(int dim) : dim_(dim), zero_(static_cast<std::size_t>(dim), 0.0) {}

  // Plain text, one token per line: token followed by `dim` floats. A
  // duplicate token keeps the last occurrence (a warning goes to stderr).
  static StaticVectors load(const std::string& path, int dim);

  int dim() const { return dim_; }
  std::size_t size() const { return table_.size(); }

  const std::vector<double>& lookup(const std::string& token) const {
    auto it = table_.find(token);
    return it == table_.end() ? zero_ : it->second;
  }

  bool contains(const std::string& token) const { return table_.count(token) != 0; }

  void set(const std::string& token, std::vector<double> v);

  void save(const std::string& path) const;

 private:
  int dim_;
  std::unordered_map<std::string, std::vector<double>> table_;
  std::vector<double> zero_;
};

// Precomputed per-token contextual vectors, keyed by document. The file is
// line-delimited JSON: a header record {"dim": D} followed by
// {"doc_id": ..., "vectors": [[...], ...]} records.
class ContextualVectors {
 public:
  static ContextualVectors load(const std::string& path);

  int dim() const { return dim_; }

  const std::vector<std::vector<double>>* find(const std::string& doc_id) const {
    auto it = by_doc_.find(doc_id);
    return it == by_doc_.end() ? nullptr : &it->second;
  }

  // Every corpus document must be covered with exactly one vector per token.
  void validate_against(const Corpus& corpus) const;

  void set(const std::string& doc_id, std::vector<std::vector<double>> vectors);
  void set_dim(int dim) { dim_ = dim; }

  void save(const std::string& path) const;

 private:
  int dim_ = 0;
  std::unordered_map<std::string, std::vector<std::vector<double>>> by_doc_;
};

ContextualVectors load_contextual_vectors(const std::string& path, const Corpus& corpus);

}  // namespace bridger
