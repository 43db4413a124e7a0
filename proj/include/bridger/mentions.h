#pragma once

#include <utility>
#include <vector>

#include "bridger/encoder.h"
#include "bridger/model.h"
#include "bridger/tape.h"

namespace bridger {

// Exponential buckets for mention widths and mention-pair distances:
// [1],[2],[3],[4],[5-7],[8-15],[16-31],[32-63],[64-127],[128+] -> 0..9.
inline int bucket(int value) {
  if (value < 1) throw Error("bucket: value must be >= 1, got " + std::to_string(value));
  if (value <= 4) return value - 1;
  if (value <= 7) return 4;
  if (value <= 15) return 5;
  if (value <= 31) return 6;
  if (value <= 63) return 7;
  if (value <= 127) return 8;
  return 9;
}

// Two relu hidden layers with dropout and a scalar head, applied row-wise:
// {n, in} -> {n}.
template <class T>
int ffnn_scalar(ad::Tape<T>& tape, const typename Model<T>::Ffnn& f, int x, double dropout_rate,
                Rng* dropout_rng) {
  int h = tape.relu(tape.add(tape.matmul(x, tape.param(*f.w1)), tape.param(*f.b1)));
  h = maybe_dropout(tape, h, dropout_rate, dropout_rng);
  h = tape.relu(tape.add(tape.matmul(h, tape.param(*f.w2)), tape.param(*f.b2)));
  h = maybe_dropout(tape, h, dropout_rate, dropout_rng);
  const int out = tape.add(tape.matmul(h, tape.param(*f.wo)), tape.param(*f.bo));
  return tape.reshape(out, {tape.val(x).shape[0]});
}

// Per-token attention scores over the encoded document -> {T}.
template <class T>
int attention_scores(ad::Tape<T>& tape, const Model<T>& model, int encoded, Rng* dropout_rng) {
  return ffnn_scalar(tape, model.attention, encoded,
                     model.encoder_config().ffnn_dropout, dropout_rng);
}

// Softmax over the span's scores and the weighted sum of its token vectors.
// Returns {weights {len}, head {1, encoded_dim}}.
template <class T>
std::pair<int, int> head_attention(ad::Tape<T>& tape, int alpha, int encoded, int start,
                                   int end) {
  const int len = end - start + 1;
  const int weights = tape.softmax(tape.slice(alpha, start, end + 1));
  std::vector<int> span(static_cast<std::size_t>(len));
  for (int t = 0; t < len; ++t) span[static_cast<std::size_t>(t)] = start + t;
  const int span_rows = tape.gather_rows(encoded, span);
  const int head = tape.matmul(tape.reshape(weights, {1, len}), span_rows);
  return {weights, head};
}

// One mention vector [x_start, x_end, head, width-feature] -> {mention_dim}.
template <class T>
int represent_mention(ad::Tape<T>& tape, const Model<T>& model, int encoded, int alpha,
                      const Mention& mention) {
  const auto& cfg = model.encoder_config();
  const int x_start =
      tape.reshape(tape.gather_rows(encoded, {mention.start}), {cfg.encoded_dim()});
  const int x_end =
      tape.reshape(tape.gather_rows(encoded, {mention.end}), {cfg.encoded_dim()});
  const int head = tape.reshape(
      head_attention(tape, alpha, encoded, mention.start, mention.end).second,
      {cfg.encoded_dim()});
  const int width_feat =
      tape.reshape(tape.gather_rows(tape.param(*model.width_embedding), {bucket(mention.width())}),
                   {cfg.feature_dim});
  return tape.concat({x_start, x_end, head, width_feat}, 0);
}

// All mention vectors stacked -> {n, mention_dim}.
template <class T>
int mention_matrix(ad::Tape<T>& tape, const Model<T>& model, int encoded, int alpha,
                   const std::vector<Mention>& mentions) {
  const auto& cfg = model.encoder_config();
  std::vector<int> starts, ends, width_buckets;
  std::vector<int> heads;
  starts.reserve(mentions.size());
  ends.reserve(mentions.size());
  for (const auto& m : mentions) {
    starts.push_back(m.start);
    ends.push_back(m.end);
    width_buckets.push_back(bucket(m.width()));
    heads.push_back(head_attention(tape, alpha, encoded, m.start, m.end).second);
  }
  const int start_rows = tape.gather_rows(encoded, starts);
  const int end_rows = tape.gather_rows(encoded, ends);
  const int head_rows = heads.size() == 1 ? heads[0] : tape.concat(heads, 0);
  const int width_rows = tape.gather_rows(tape.param(*model.width_embedding), width_buckets);
  (void)cfg;
  return tape.concat({start_rows, end_rows, head_rows, width_rows}, 1);
}

}  // namespace bridger
