#pragma once

#include <map>
#include <string>
#include <vector>

#include "bridger/model.h"
#include "bridger/tape.h"
#include "bridger/vectors.h"

namespace bridger {

// Non-differentiable per-document inputs: frozen embedding rows and
// character id sequences, ready to be placed on a tape.
template <class T>
struct DocInputs {
  const Document* doc = nullptr;
  ad::Tensor<T> static_rows;      // {T, static_dim}
  ad::Tensor<T> contextual_rows;  // {T, contextual_dim}; empty when disabled
  std::vector<std::vector<int>> char_ids;
  std::vector<int> sentence_lengths;
};

template <class T>
DocInputs<T> prepare_doc_inputs(const Document& doc, const StaticVectors& statics,
                                const ContextualVectors* contextual, const CharVocab& vocab,
                                const EncoderConfig& cfg) {
  if (statics.dim() != cfg.static_dim) {
    throw DataError("static vector dimension " + std::to_string(statics.dim()) +
                    " does not match configured static_dim " + std::to_string(cfg.static_dim));
  }
  DocInputs<T> inputs;
  inputs.doc = &doc;
  const int t_count = doc.token_count();
  inputs.static_rows = ad::Tensor<T>({t_count, cfg.static_dim});
  for (int t = 0; t < t_count; ++t) {
    const auto& v = statics.lookup(doc.tokens[static_cast<std::size_t>(t)]);
    for (int j = 0; j < cfg.static_dim; ++j) {
      inputs.static_rows.at(t, j) = static_cast<T>(v[static_cast<std::size_t>(j)]);
    }
  }

  const int ctx_dim = cfg.contextual_dim();
  if (cfg.contextual_mode != ContextualMode::kOff) {
    if (!contextual) {
      throw DataError("contextual mode is enabled but no contextual vectors were provided");
    }
    if (contextual->dim() != cfg.contextual_file_dim) {
      throw DataError("contextual vector file dimension " + std::to_string(contextual->dim()) +
                      " does not match configured contextual_file_dim " +
                      std::to_string(cfg.contextual_file_dim));
    }
    const auto* vectors = contextual->find(doc.id);
    if (!vectors) throw DataError("contextual vectors missing for document " + doc.id);
    if (static_cast<int>(vectors->size()) != t_count) {
      throw DataError("contextual vectors for document " + doc.id + " have " +
                      std::to_string(vectors->size()) + " entries but the document has " +
                      std::to_string(t_count) + " tokens");
    }
    inputs.contextual_rows = ad::Tensor<T>({t_count, ctx_dim});
    for (int t = 0; t < t_count; ++t) {
      const auto& v = (*vectors)[static_cast<std::size_t>(t)];
      if (cfg.contextual_mode == ContextualMode::kConcat) {
        for (int j = 0; j < ctx_dim; ++j) {
          inputs.contextual_rows.at(t, j) = static_cast<T>(v[static_cast<std::size_t>(j)]);
        }
      } else {  // mean of the four stacked chunks
        for (int j = 0; j < ctx_dim; ++j) {
          double acc = 0.0;
          for (int chunk = 0; chunk < 4; ++chunk) {
            acc += v[static_cast<std::size_t>(chunk * ctx_dim + j)];
          }
          inputs.contextual_rows.at(t, j) = static_cast<T>(acc / 4.0);
        }
      }
    }
  }

  inputs.char_ids.reserve(static_cast<std::size_t>(t_count));
  for (const auto& tok : doc.tokens) inputs.char_ids.push_back(vocab.encode(tok));
  for (const auto& sent : doc.sentences) {
    inputs.sentence_lengths.push_back(static_cast<int>(sent.size()));
  }
  return inputs;
}

// Draw a keep-mask with the given keep probability; one byte per element.
inline std::vector<std::uint8_t> draw_keep_mask(Rng& rng, std::int64_t n, double drop_rate) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(n));
  for (auto& m : mask) m = rng.uniform() >= drop_rate ? 1 : 0;
  return mask;
}

template <class T>
int maybe_dropout(ad::Tape<T>& tape, int node, double rate, Rng* rng) {
  if (!rng || rate <= 0.0) return node;
  const auto mask = draw_keep_mask(*rng, tape.val(node).numel(), rate);
  return tape.dropout(node, mask, 1.0 - rate);
}

// Character CNN for one token: embedded characters convolved at each filter
// width and max-pooled over time -> {char_out_dim} vector.
template <class T>
int char_cnn_embed(ad::Tape<T>& tape, const Model<T>& model, int char_table_node,
                   const std::vector<int>& char_ids) {
  if (char_ids.empty()) throw Error("char_cnn_embed: empty token");
  const auto& cfg = model.encoder_config();
  auto chars = tape.gather_rows(char_table_node, char_ids);
  std::vector<int> parts;
  for (std::size_t wi = 0; wi < cfg.char_filter_widths.size(); ++wi) {
    auto w = tape.param(*model.char_conv[wi].first);
    auto b = tape.param(*model.char_conv[wi].second);
    parts.push_back(tape.conv1d_max_pool(chars, w, b, cfg.char_filter_widths[wi]));
  }
  return parts.size() == 1 ? parts[0] : tape.concat(parts, 0);
}

template <class T>
int char_cnn_embed(ad::Tape<T>& tape, const Model<T>& model, const std::vector<int>& char_ids) {
  return char_cnn_embed(tape, model, tape.param(*model.char_table), char_ids);
}

// Per-token concatenation of the static, character and contextual channels,
// with embedding dropout during training -> {T, token_dim}.
template <class T>
int embed_tokens(ad::Tape<T>& tape, const Model<T>& model, const DocInputs<T>& inputs,
                 Rng* dropout_rng) {
  const auto& cfg = model.encoder_config();
  const int t_count = inputs.doc->token_count();
  if (t_count == 0) throw Error("embed_tokens: empty document");

  auto char_table_node = tape.param(*model.char_table);
  // Identical tokens share one CNN subgraph within the document.
  std::map<std::string, int> token_cache;
  std::vector<int> char_rows;
  char_rows.reserve(static_cast<std::size_t>(t_count));
  for (int t = 0; t < t_count; ++t) {
    const std::string& tok = inputs.doc->tokens[static_cast<std::size_t>(t)];
    auto it = token_cache.find(tok);
    if (it == token_cache.end()) {
      const int vec = char_cnn_embed(tape, model, char_table_node,
                                     inputs.char_ids[static_cast<std::size_t>(t)]);
      it = token_cache.emplace(tok, tape.reshape(vec, {1, cfg.char_out_dim()})).first;
    }
    char_rows.push_back(it->second);
  }
  const int char_matrix =
      char_rows.size() == 1 ? char_rows[0] : tape.concat(char_rows, 0);

  std::vector<int> channels;
  channels.push_back(tape.input(inputs.static_rows));
  channels.push_back(char_matrix);
  if (cfg.contextual_mode != ContextualMode::kOff) {
    channels.push_back(tape.input(inputs.contextual_rows));
  }
  const int emb = tape.concat(channels, 1);
  return maybe_dropout(tape, emb, cfg.embedding_dropout, dropout_rng);
}

// Stacked bidirectional LSTM over each sentence independently; state is
// reset at sentence boundaries. Inter-layer dropout only -> {T, 2H}.
template <class T>
int encode_document(ad::Tape<T>& tape, const Model<T>& model, int emb,
                    const std::vector<int>& sentence_lengths, Rng* dropout_rng) {
  const auto& cfg = model.encoder_config();
  const int hid = cfg.lstm_hidden;
  int current = emb;
  for (int layer = 0; layer < cfg.lstm_layers; ++layer) {
    const int in_dim = layer == 0 ? cfg.token_dim() : cfg.encoded_dim();
    auto wf = tape.param(*model.lstm[static_cast<std::size_t>(layer)][0].w);
    auto bf = tape.param(*model.lstm[static_cast<std::size_t>(layer)][0].b);
    auto wb = tape.param(*model.lstm[static_cast<std::size_t>(layer)][1].w);
    auto bb = tape.param(*model.lstm[static_cast<std::size_t>(layer)][1].b);

    std::vector<int> out_rows;
    int offset = 0;
    for (int len : sentence_lengths) {
      std::vector<int> xs(static_cast<std::size_t>(len));
      for (int t = 0; t < len; ++t) {
        xs[static_cast<std::size_t>(t)] =
            tape.reshape(tape.gather_rows(current, {offset + t}), {in_dim});
      }
      std::vector<int> fwd(static_cast<std::size_t>(len)), bwd(static_cast<std::size_t>(len));
      int h = tape.input(ad::Tensor<T>({hid}));
      int c = tape.input(ad::Tensor<T>({hid}));
      for (int t = 0; t < len; ++t) {
        const int hc = tape.lstm_cell(xs[static_cast<std::size_t>(t)], h, c, wf, bf);
        h = tape.slice(hc, 0, hid);
        c = tape.slice(hc, hid, 2 * hid);
        fwd[static_cast<std::size_t>(t)] = h;
      }
      h = tape.input(ad::Tensor<T>({hid}));
      c = tape.input(ad::Tensor<T>({hid}));
      for (int t = len - 1; t >= 0; --t) {
        const int hc = tape.lstm_cell(xs[static_cast<std::size_t>(t)], h, c, wb, bb);
        h = tape.slice(hc, 0, hid);
        c = tape.slice(hc, hid, 2 * hid);
        bwd[static_cast<std::size_t>(t)] = h;
      }
      for (int t = 0; t < len; ++t) {
        out_rows.push_back(tape.reshape(
            tape.concat({fwd[static_cast<std::size_t>(t)], bwd[static_cast<std::size_t>(t)]}, 0),
            {1, 2 * hid}));
      }
      offset += len;
    }
    current = out_rows.size() == 1 ? out_rows[0] : tape.concat(out_rows, 0);
    if (layer + 1 < cfg.lstm_layers) {
      current = maybe_dropout(tape, current, cfg.lstm_dropout, dropout_rng);
    }
  }
  return current;
}

}  // namespace bridger
