#pragma once

#include <vector>

#include "bridger/mentions.h"

namespace bridger {

// The up-to-K nearest preceding mentions in document order (farthest first,
// closest last). The artificial no-antecedent candidate is implicit: its
// score is pinned at 0 and it sits after the real candidates.
inline std::vector<int> candidate_antecedents(int query, int n_mentions, int max_antecedents) {
  if (query < 0 || query >= n_mentions) throw Error("candidate_antecedents: bad query index");
  const int lo = std::max(0, query - max_antecedents);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(query - lo));
  for (int i = lo; i < query; ++i) out.push_back(i);
  return out;
}

// Pair rows [M_i, M_j, M_i * M_j, distance-feature] for one query against
// its candidates -> {k, pair_dim}. Distance is the mention-index gap.
template <class T>
int pair_matrix(ad::Tape<T>& tape, const Model<T>& model, int mention_rows, int query,
                const std::vector<int>& candidates) {
  if (candidates.empty()) throw Error("pair_matrix: no candidates");
  const int k = static_cast<int>(candidates.size());
  std::vector<int> query_ids(static_cast<std::size_t>(k), query);
  std::vector<int> dist_buckets;
  dist_buckets.reserve(candidates.size());
  for (int c : candidates) dist_buckets.push_back(bucket(query - c));

  const int antecedent_rows = tape.gather_rows(mention_rows, candidates);
  const int anaphor_rows = tape.gather_rows(mention_rows, query_ids);
  const int product = tape.mul(antecedent_rows, anaphor_rows);
  const int dist_rows = tape.gather_rows(tape.param(*model.distance_embedding), dist_buckets);
  return tape.concat({antecedent_rows, anaphor_rows, product, dist_rows}, 1);
}

// Task tower over pair rows -> {k} scores. The hidden layers come shared or
// task-specific from the model's sharing mode; the head is task-specific.
template <class T>
int score_pairs(ad::Tape<T>& tape, const Model<T>& model, Task task, int pairs,
                Rng* dropout_rng) {
  return ffnn_scalar(tape, model.tower(task), pairs, model.encoder_config().ffnn_dropout,
                     dropout_rng);
}

// Candidate scores followed by the pinned 0 of the artificial antecedent.
template <class T>
int with_epsilon(ad::Tape<T>& tape, int scores) {
  return tape.concat({scores, tape.input(ad::Tensor<T>::scalar(T(0)))}, 0);
}

struct LinkDecision {
  bool link = false;
  int candidate = -1;  // position within the candidate list
  double score = 0.0;  // score of the chosen candidate (0 when abstaining)
};

// Argmax over candidates plus the artificial antecedent at exactly 0.
// Ties go to no-link first, then to the nearest candidate. Equivalent to:
// link iff max candidate score > 0.
inline LinkDecision decide_link(const std::vector<double>& scores) {
  LinkDecision d;
  double best = 0.0;
  int best_idx = -1;
  for (int i = static_cast<int>(scores.size()) - 1; i >= 0; --i) {
    if (scores[static_cast<std::size_t>(i)] > best) {
      best = scores[static_cast<std::size_t>(i)];
      best_idx = i;
    }
  }
  if (best_idx >= 0) {
    d.link = true;
    d.candidate = best_idx;
    d.score = best;
  }
  return d;
}

// Forced choice among candidates only; ties go to the nearest candidate.
// Returns -1 only for an empty candidate list.
inline int forced_choice(const std::vector<double>& scores) {
  int best_idx = -1;
  double best = 0.0;
  for (int i = static_cast<int>(scores.size()) - 1; i >= 0; --i) {
    if (best_idx < 0 || scores[static_cast<std::size_t>(i)] > best) {
      best = scores[static_cast<std::size_t>(i)];
      best_idx = i;
    }
  }
  return best_idx;
}

}  // namespace bridger
