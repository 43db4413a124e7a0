#pragma once

#include <vector>

#include "bridger/evaluation.h"
#include "bridger/scorer.h"

namespace bridger {

// Frozen inputs for every document of a corpus.
template <class T>
class CorpusFeatures {
 public:
  CorpusFeatures(const Corpus& corpus, const StaticVectors& statics,
                 const ContextualVectors* contextual, const CharVocab& vocab,
                 const EncoderConfig& cfg) {
    docs_.reserve(corpus.docs.size());
    for (const auto& doc : corpus.docs) {
      docs_.push_back(prepare_doc_inputs<T>(doc, statics, contextual, vocab, cfg));
    }
  }

  const DocInputs<T>& doc(int i) const { return docs_[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return docs_.size(); }

 private:
  std::vector<DocInputs<T>> docs_;
};

// Shared per-document subgraph: encoder, attention scores and the stacked
// mention representations. Score heads are appended per query.
template <class T>
struct DocGraph {
  ad::Tape<T> tape;
  int encoded = -1;
  int alpha = -1;
  int mentions = -1;  // -1 when the document has no mentions
};

template <class T>
DocGraph<T> build_doc_graph(const Model<T>& model, const DocInputs<T>& inputs,
                            Rng* dropout_rng) {
  DocGraph<T> g;
  const int emb = embed_tokens(g.tape, model, inputs, dropout_rng);
  g.encoded = encode_document(g.tape, model, emb, inputs.sentence_lengths, dropout_rng);
  g.alpha = attention_scores(g.tape, model, g.encoded, dropout_rng);
  if (!inputs.doc->mentions.empty()) {
    g.mentions = mention_matrix(g.tape, model, g.encoded, g.alpha, inputs.doc->mentions);
  }
  return g;
}

template <class T>
std::vector<double> query_candidate_scores(DocGraph<T>& g, const Model<T>& model, Task task,
                                           int query, const std::vector<int>& candidates,
                                           Rng* dropout_rng = nullptr) {
  const int pairs = pair_matrix(g.tape, model, g.mentions, query, candidates);
  const int scores = score_pairs(g.tape, model, task, pairs, dropout_rng);
  const auto& t = g.tape.val(scores);
  return std::vector<double>(t.values.begin(), t.values.end());
}

// One link decision per query mention; a link is emitted only when some
// candidate beats the artificial antecedent's pinned 0.
template <class T>
std::vector<PredictedLink> predict_document_links(const Model<T>& model, int doc_index,
                                                  const DocInputs<T>& inputs, Task task,
                                                  const std::vector<int>& queries,
                                                  int max_antecedents) {
  std::vector<PredictedLink> links;
  if (inputs.doc->mentions.empty() || queries.empty()) return links;
  DocGraph<T> g = build_doc_graph(model, inputs, nullptr);
  const int n = static_cast<int>(inputs.doc->mentions.size());
  for (int q : queries) {
    const auto candidates = candidate_antecedents(q, n, max_antecedents);
    if (candidates.empty()) continue;
    const auto scores = query_candidate_scores(g, model, task, q, candidates);
    const LinkDecision d = decide_link(scores);
    if (d.link) {
      links.push_back({doc_index, q, candidates[static_cast<std::size_t>(d.candidate)], d.score});
    }
  }
  return links;
}

// Forced antecedent choice for the given gold anaphors. With
// include_epsilon the model may abstain (antecedent -1).
template <class T>
std::vector<PredictedLink> predict_forced_choices(const Model<T>& model, int doc_index,
                                                  const DocInputs<T>& inputs, Task task,
                                                  const std::vector<int>& anaphors,
                                                  int max_antecedents, bool include_epsilon) {
  std::vector<PredictedLink> picks;
  if (anaphors.empty()) return picks;
  DocGraph<T> g = build_doc_graph(model, inputs, nullptr);
  const int n = static_cast<int>(inputs.doc->mentions.size());
  for (int q : anaphors) {
    const auto candidates = candidate_antecedents(q, n, max_antecedents);
    PredictedLink pick;
    pick.doc = doc_index;
    pick.anaphor = q;
    if (!candidates.empty()) {
      const auto scores = query_candidate_scores(g, model, task, q, candidates);
      if (include_epsilon) {
        const LinkDecision d = decide_link(scores);
        if (d.link) {
          pick.antecedent = candidates[static_cast<std::size_t>(d.candidate)];
          pick.score = d.score;
        }
      } else {
        const int choice = forced_choice(scores);
        pick.antecedent = candidates[static_cast<std::size_t>(choice)];
        pick.score = scores[static_cast<std::size_t>(choice)];
      }
    }
    picks.push_back(pick);
  }
  return picks;
}

// Full-corpus link prediction under an evaluation setting.
template <class T>
std::vector<PredictedLink> predict_corpus_links(const Model<T>& model, const Corpus& corpus,
                                                const CorpusFeatures<T>& features, Task task,
                                                EvalSetting setting, int max_antecedents) {
  const auto statuses = classify_information_status(corpus);
  std::vector<PredictedLink> links;
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    const auto queries = query_mentions(corpus.docs[d], statuses[d], setting);
    auto doc_links = predict_document_links(model, static_cast<int>(d),
                                            features.doc(static_cast<int>(d)), task, queries,
                                            max_antecedents);
    links.insert(links.end(), doc_links.begin(), doc_links.end());
  }
  return links;
}

// Forced picks for every gold bridging anaphor in the corpus.
template <class T>
std::vector<PredictedLink> predict_corpus_forced(const Model<T>& model, const Corpus& corpus,
                                                 const CorpusFeatures<T>& features, Task task,
                                                 int max_antecedents, bool include_epsilon) {
  std::vector<PredictedLink> picks;
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    std::vector<int> anaphors;
    for (const auto& link : corpus.docs[d].bridging) anaphors.push_back(link.anaphor);
    std::sort(anaphors.begin(), anaphors.end());
    auto doc_picks =
        predict_forced_choices(model, static_cast<int>(d), features.doc(static_cast<int>(d)),
                               task, anaphors, max_antecedents, include_epsilon);
    picks.insert(picks.end(), doc_picks.begin(), doc_picks.end());
  }
  return picks;
}

}  // namespace bridger
