#include "bridger/vectors.h"

#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace bridger {

using nlohmann::json;

void StaticVectors::set(const std::string& token, std::vector<double> v) {
  if (static_cast<int>(v.size()) != dim_) {
    throw DataError("static vector for '" + token + "' has dimension " +
                    std::to_string(v.size()) + ", expected " + std::to_string(dim_));
  }
  table_[token] = std::move(v);
}

StaticVectors StaticVectors::load(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open static vector file: " + path);
  StaticVectors vecs(dim);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(dim));
    double x;
    while (fields >> x) v.push_back(x);
    if (static_cast<int>(v.size()) != dim) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(dim) + " values for token '" + token + "', got " +
                      std::to_string(v.size()));
    }
    if (vecs.table_.count(token)) {
      std::cerr << "warning: " << path << ":" << line_no << ": duplicate token '" << token
                << "', keeping the last occurrence\n";
    }
    vecs.table_[token] = std::move(v);
  }
  return vecs;
}

void StaticVectors::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write static vector file: " + path);
  out.precision(17);
  for (const auto& [token, v] : table_) {
    out << token;
    for (double x : v) out << " " << x;
    out << "\n";
  }
}

ContextualVectors ContextualVectors::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open contextual vector file: " + path);
  ContextualVectors vecs;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": invalid JSON");
    }
    try {
      if (!have_header) {
        vecs.dim_ = rec.at("dim").get<int>();
        if (vecs.dim_ <= 0) {
          throw DataError(path + ": header dim must be positive");
        }
        have_header = true;
        continue;
      }
      const auto doc_id = rec.at("doc_id").get<std::string>();
      auto vectors = rec.at("vectors").get<std::vector<std::vector<double>>>();
      for (const auto& v : vectors) {
        if (static_cast<int>(v.size()) != vecs.dim_) {
          throw DataError(path + ":" + std::to_string(line_no) + ": document " + doc_id +
                          " has a vector of dimension " + std::to_string(v.size()) +
                          ", header says " + std::to_string(vecs.dim_));
        }
      }
      if (!vecs.by_doc_.emplace(doc_id, std::move(vectors)).second) {
        throw DataError(path + ":" + std::to_string(line_no) + ": duplicate doc_id " + doc_id);
      }
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": malformed record: " + e.what());
    }
  }
  if (!have_header) throw DataError(path + ": missing {\"dim\": D} header record");
  return vecs;
}

void ContextualVectors::validate_against(const Corpus& corpus) const {
  for (const auto& doc : corpus.docs) {
    const auto* vectors = find(doc.id);
    if (!vectors) {
      throw DataError("contextual vectors missing for document " + doc.id);
    }
    if (static_cast<int>(vectors->size()) != doc.token_count()) {
      throw DataError("contextual vectors for document " + doc.id + " have " +
                      std::to_string(vectors->size()) + " entries but the document has " +
                      std::to_string(doc.token_count()) + " tokens");
    }
  }
}

void ContextualVectors::set(const std::string& doc_id,
                            std::vector<std::vector<double>> vectors) {
  by_doc_[doc_id] = std::move(vectors);
}

void ContextualVectors::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write contextual vector file: " + path);
  out << json{{"dim", dim_}}.dump() << "\n";
  for (const auto& [doc_id, vectors] : by_doc_) {
    out << json{{"doc_id", doc_id}, {"vectors", vectors}}.dump() << "\n";
  }
}

ContextualVectors load_contextual_vectors(const std::string& path, const Corpus& corpus) {
  ContextualVectors vecs = ContextualVectors::load(path);
  vecs.validate_against(corpus);
  return vecs;
}

}  // namespace bridger
