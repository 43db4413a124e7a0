#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bridger/inference.h"

namespace bridger {

// Target positions within the candidate list for a query mention; the
// position `candidates.size()` stands for the artificial antecedent and is
// used whenever no real target falls inside the candidate window.
//
// Bridging: candidates in the gold coreference cluster of the gold bridging
// antecedent (the antecedent itself always counts, clustered or not).
// Coreference: candidates in the query's own gold cluster.
inline std::vector<int> gold_targets(int query, const std::vector<int>& candidates,
                                     const DocGold& gold, Task task) {
  const int eps = static_cast<int>(candidates.size());
  std::vector<int> targets;
  if (task == Task::kBridging) {
    const int ante = gold.bridging_antecedent[static_cast<std::size_t>(query)];
    if (ante >= 0) {
      const int cluster = gold.cluster_of[static_cast<std::size_t>(ante)];
      for (std::size_t pos = 0; pos < candidates.size(); ++pos) {
        const int cand = candidates[pos];
        if (cand == ante ||
            (cluster >= 0 && gold.cluster_of[static_cast<std::size_t>(cand)] == cluster)) {
          targets.push_back(static_cast<int>(pos));
        }
      }
    }
  } else {
    const int cluster = gold.cluster_of[static_cast<std::size_t>(query)];
    if (cluster >= 0) {
      for (std::size_t pos = 0; pos < candidates.size(); ++pos) {
        if (gold.cluster_of[static_cast<std::size_t>(candidates[pos])] == cluster) {
          targets.push_back(static_cast<int>(pos));
        }
      }
    }
  }
  if (targets.empty()) targets.push_back(eps);
  return targets;
}

// Negative marginal log-likelihood of the target set under a softmax over
// all candidate scores (the artificial antecedent included), fused through
// log-sum-exp for stability.
template <class T>
int marginal_nll(ad::Tape<T>& tape, int scores_with_eps, const std::vector<int>& targets) {
  if (targets.empty()) throw Error("marginal_nll: empty target set");
  const int all = tape.logsumexp(scores_with_eps);
  const int picked = tape.logsumexp(tape.gather_rows(scores_with_eps, targets));
  return tape.add(all, tape.scale(picked, T(-1)));
}

// Epoch query selection. Every bridging mention is kept; DN and DO mentions
// are sampled without replacement, at most gamma times the corpus-wide
// bridging count each. Counts are exact, not expected values.
inline std::vector<std::vector<char>> undersample_queries(
    const std::vector<std::vector<InfoStatus>>& statuses, double gamma, Rng& rng) {
  std::vector<std::vector<char>> kept(statuses.size());
  std::vector<std::pair<int, int>> dn, docs_old;
  int bridging_total = 0;
  for (std::size_t d = 0; d < statuses.size(); ++d) {
    kept[d].assign(statuses[d].size(), 0);
    for (std::size_t m = 0; m < statuses[d].size(); ++m) {
      switch (statuses[d][m]) {
        case InfoStatus::kBridging:
          kept[d][m] = 1;
          ++bridging_total;
          break;
        case InfoStatus::kDiscourseNew:
          dn.emplace_back(static_cast<int>(d), static_cast<int>(m));
          break;
        case InfoStatus::kDiscourseOld:
          docs_old.emplace_back(static_cast<int>(d), static_cast<int>(m));
          break;
      }
    }
  }
  const auto quota = static_cast<long long>(gamma * bridging_total + 1e-9);
  for (auto* pool : {&dn, &docs_old}) {
    const int keep_n = static_cast<int>(
        std::min<long long>(static_cast<long long>(pool->size()), quota));
    for (int i : rng.sample_without_replacement(static_cast<int>(pool->size()), keep_n)) {
      const auto [d, m] = (*pool)[static_cast<std::size_t>(i)];
      kept[static_cast<std::size_t>(d)][static_cast<std::size_t>(m)] = 1;
    }
  }
  return kept;
}

template <class T>
class AdamOptimizer {
 public:
  AdamOptimizer(const ad::ParameterSet<T>& params, const TrainConfig& cfg) : cfg_(cfg) {
    for (const auto& p : params.items()) {
      m_.emplace_back(p->value.shape);
      v_.emplace_back(p->value.shape);
    }
  }

  void step(ad::ParameterSet<T>& params) {
    ++t_;
    const T lr = static_cast<T>(cfg_.learning_rate);
    const T b1 = static_cast<T>(cfg_.adam_beta1);
    const T b2 = static_cast<T>(cfg_.adam_beta2);
    const T eps = static_cast<T>(cfg_.adam_eps);
    const T corr1 = T(1) - static_cast<T>(std::pow(cfg_.adam_beta1, t_));
    const T corr2 = T(1) - static_cast<T>(std::pow(cfg_.adam_beta2, t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = *params.items()[i];
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::int64_t j = 0; j < p.value.numel(); ++j) {
        const T g = p.grad[j];
        m[j] = b1 * m[j] + (T(1) - b1) * g;
        v[j] = b2 * v[j] + (T(1) - b2) * g * g;
        const T m_hat = m[j] / corr1;
        const T v_hat = v[j] / corr2;
        p.value[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
      }
    }
  }

  int steps_taken() const { return t_; }

 private:
  TrainConfig cfg_;
  std::vector<ad::Tensor<T>> m_, v_;
  int t_ = 0;
};

struct EpochLog {
  int epoch = 0;
  double bridging_loss = 0.0;
  double coref_loss = 0.0;
  int queries = 0;
  double total() const { return bridging_loss + coref_loss; }
};

template <class T>
struct TrainResult {
  Model<T> model;
  std::vector<EpochLog> log;
};

// Combined per-document loss over the given query mentions. Returns -1 when
// nothing contributes (no queries with candidates, or both weights zero).
// Per-task sums are written to bridging_out / coref_out when non-null.
template <class T>
int document_loss(DocGraph<T>& g, const Model<T>& model, const Document& doc,
                  const DocGold& gold, const std::vector<int>& queries,
                  const TrainConfig& cfg, Rng* dropout_rng, double* bridging_out,
                  double* coref_out) {
  const int n = static_cast<int>(doc.mentions.size());
  std::vector<int> bridging_terms, coref_terms;
  for (int q : queries) {
    const auto candidates = candidate_antecedents(q, n, cfg.max_antecedents);
    if (candidates.empty()) continue;  // a lone artificial antecedent has loss 0
    // Both tasks rank the same candidates and share the pair representation.
    const int pairs = pair_matrix(g.tape, model, g.mentions, q, candidates);
    if (cfg.bridging_loss_weight > 0.0) {
      const int scores = with_epsilon(
          g.tape, score_pairs(g.tape, model, Task::kBridging, pairs, dropout_rng));
      bridging_terms.push_back(
          marginal_nll(g.tape, scores, gold_targets(q, candidates, gold, Task::kBridging)));
    }
    if (cfg.coref_loss_weight > 0.0) {
      const int scores = with_epsilon(
          g.tape, score_pairs(g.tape, model, Task::kCoreference, pairs, dropout_rng));
      coref_terms.push_back(
          marginal_nll(g.tape, scores, gold_targets(q, candidates, gold, Task::kCoreference)));
    }
  }
  int total = -1;
  if (!bridging_terms.empty()) {
    const int sum = g.tape.sum(g.tape.concat(bridging_terms, 0));
    if (bridging_out) *bridging_out = static_cast<double>(g.tape.val(sum)[0]);
    total = g.tape.scale(sum, static_cast<T>(cfg.bridging_loss_weight));
  }
  if (!coref_terms.empty()) {
    const int sum = g.tape.sum(g.tape.concat(coref_terms, 0));
    if (coref_out) *coref_out = static_cast<double>(g.tape.val(sum)[0]);
    const int weighted = g.tape.scale(sum, static_cast<T>(cfg.coref_loss_weight));
    total = total < 0 ? weighted : g.tape.add(total, weighted);
  }
  return total;
}

// Document-per-step training: shuffled document order each epoch, one Adam
// step per document, both task losses over the same undersampled queries.
template <class T>
TrainResult<T> train_model(
    const Corpus& corpus, const StaticVectors& statics, const ContextualVectors* contextual,
    const EncoderConfig& enc, SharingMode sharing, const TrainConfig& cfg,
    const std::function<void(const Model<T>&, const EpochLog&)>& on_epoch = nullptr) {
  cfg.validate();
  Rng rng(cfg.seed);
  CharVocab vocab = CharVocab::build(corpus);
  Model<T> model(enc, sharing, std::move(vocab), rng);
  CorpusFeatures<T> features(corpus, statics, contextual, model.char_vocab(), enc);
  const auto statuses = classify_information_status(corpus);
  std::vector<DocGold> golds;
  golds.reserve(corpus.docs.size());
  for (const auto& doc : corpus.docs) golds.push_back(build_doc_gold(doc));

  AdamOptimizer<T> adam(model.params(), cfg);
  std::vector<EpochLog> log;

  std::vector<std::vector<char>> kept;
  const auto all_kept = [&] {
    std::vector<std::vector<char>> k(statuses.size());
    for (std::size_t d = 0; d < statuses.size(); ++d) k[d].assign(statuses[d].size(), 1);
    return k;
  };
  if (!cfg.undersample) {
    kept = all_kept();
  } else if (!cfg.resample_each_epoch) {
    kept = undersample_queries(statuses, cfg.gamma, rng);
  }

  std::vector<int> order(corpus.docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.undersample && cfg.resample_each_epoch) {
      kept = undersample_queries(statuses, cfg.gamma, rng);
    }
    rng.shuffle(order);
    EpochLog entry;
    entry.epoch = epoch;
    for (int d : order) {
      const auto& doc = corpus.docs[static_cast<std::size_t>(d)];
      if (doc.mentions.empty()) continue;
      std::vector<int> queries;
      for (std::size_t m = 0; m < doc.mentions.size(); ++m) {
        if (kept[static_cast<std::size_t>(d)][m]) queries.push_back(static_cast<int>(m));
      }
      if (queries.empty()) continue;
      entry.queries += static_cast<int>(queries.size());
      try {
        DocGraph<T> g = build_doc_graph(model, features.doc(d), &rng);
        double bridging_loss = 0.0, coref_loss = 0.0;
        const int loss =
            document_loss(g, model, doc, golds[static_cast<std::size_t>(d)], queries, cfg,
                          &rng, &bridging_loss, &coref_loss);
        if (loss < 0) continue;
        entry.bridging_loss += bridging_loss;
        entry.coref_loss += coref_loss;
        model.params().zero_grads();
        g.tape.backward(loss);
        adam.step(model.params());
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", document " + doc.id + ": " +
                           e.what());
      }
    }
    log.push_back(entry);
    if (on_epoch) on_epoch(model, entry);
  }
  return {std::move(model), std::move(log)};
}

}  // namespace bridger
