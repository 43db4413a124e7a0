#pragma once

#include <sstream>
#include <string>

#include "bridger/corpus.h"
#include "bridger/model.h"
#include "bridger/vectors.h"

namespace fixtures {

// Small network shape so tests and finite-difference checks stay fast.
inline bridger::EncoderConfig tiny_encoder() {
  bridger::EncoderConfig cfg;
  cfg.static_dim = 6;
  cfg.char_emb_dim = 3;
  cfg.char_filter_widths = {2, 3};
  cfg.char_filters = 2;
  cfg.lstm_layers = 2;
  cfg.lstm_hidden = 4;
  cfg.ffnn_hidden = 5;
  cfg.feature_dim = 3;
  cfg.lstm_dropout = 0.4;
  cfg.ffnn_dropout = 0.2;
  cfg.embedding_dropout = 0.5;
  return cfg;
}

inline bridger::Corpus corpus_from(const std::string& jsonl) {
  std::istringstream in(jsonl);
  return bridger::parse_corpus(in, "<fixture>");
}

// Random unit-scale static vectors for every token type in the corpus.
inline bridger::StaticVectors random_statics(const bridger::Corpus& corpus, int dim,
                                             std::uint64_t seed) {
  bridger::StaticVectors vecs(dim);
  bridger::Rng rng(seed);
  for (const auto& doc : corpus.docs) {
    for (const auto& tok : doc.tokens) {
      if (vecs.contains(tok)) continue;
      std::vector<double> v(static_cast<std::size_t>(dim));
      for (auto& x : v) x = rng.uniform(-1.0, 1.0);
      vecs.set(tok, std::move(v));
    }
  }
  return vecs;
}

// Two sentences, six tokens, three single-token mentions, one two-token
// mention, one cluster and one bridging link.
inline const char* kSmallDoc =
    R"({"doc_id":"doc0","sentences":[["the","plant","shut","down"],["workers","protested"]],)"
    R"("mentions":[{"id":"m1","start":0,"end":1},{"id":"m2","start":3,"end":3},)"
    R"({"id":"m3","start":4,"end":4},{"id":"m4","start":5,"end":5}],)"
    R"("clusters":[["m2","m4"]],)"
    R"("bridging":[{"anaphor":"m3","antecedent":"m1","relation":"ELEMENT"}]})";

inline const char* kSecondDoc =
    R"({"doc_id":"doc1","sentences":[["a","storm","hit","the","coast"],["waves","rose"]],)"
    R"("mentions":[{"id":"n1","start":0,"end":1},{"id":"n2","start":3,"end":4},)"
    R"({"id":"n3","start":5,"end":5}],)"
    R"("clusters":[["n1","n2"]],)"
    R"("bridging":[{"anaphor":"n3","antecedent":"n2","relation":"SUBSET"}]})";

inline std::string two_doc_corpus() {
  return std::string(kSmallDoc) + "\n" + kSecondDoc + "\n";
}

// Several multi-token spans so every attention and tower weight receives
// strong gradient signal; used by finite-difference verification.
inline const char* kGradCheckDoc =
    R"({"doc_id":"g0","sentences":[["a","big","red","dog","saw","the","old","cat"],)"
    R"(["the","small","bird","flew","over","town"],["it","sang"]],)"
    R"("mentions":[{"id":"m1","start":0,"end":3},{"id":"m2","start":5,"end":7},)"
    R"({"id":"m3","start":8,"end":10},{"id":"m4","start":11,"end":13},)"
    R"({"id":"m5","start":14,"end":14},{"id":"m6","start":14,"end":15}],)"
    R"("clusters":[["m1","m5"],["m2","m6"]],)"
    R"("bridging":[{"anaphor":"m3","antecedent":"m1"},{"anaphor":"m4","antecedent":"m2"}]})";

}  // namespace fixtures
