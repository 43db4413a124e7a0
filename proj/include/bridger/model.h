#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "bridger/config.h"
#include "bridger/corpus.h"
#include "bridger/params.h"
#include "bridger/rng.h"

namespace bridger {

// Byte-level character vocabulary collected from the training corpus.
// Id 0 is the learned unknown character; unseen bytes map there.
class CharVocab {
 public:
  CharVocab() { id_.fill(0); }

  static CharVocab build(const Corpus& corpus) {
    std::array<bool, 256> seen{};
    for (const auto& doc : corpus.docs) {
      for (const auto& tok : doc.tokens) {
        for (unsigned char ch : tok) seen[ch] = true;
      }
    }
    std::vector<int> bytes;
    for (int b = 0; b < 256; ++b) {
      if (seen[static_cast<std::size_t>(b)]) bytes.push_back(b);
    }
    return from_bytes(bytes);
  }

  static CharVocab from_bytes(const std::vector<int>& bytes) {
    CharVocab v;
    v.bytes_ = bytes;
    int next = 1;
    for (int b : bytes) {
      if (b < 0 || b > 255) throw DataError("character vocabulary byte out of range");
      v.id_[static_cast<std::size_t>(b)] = next++;
    }
    v.size_ = next;
    return v;
  }

  int size() const { return size_; }  // includes the unknown slot

  std::vector<int> encode(const std::string& token) const {
    std::vector<int> ids;
    ids.reserve(token.size());
    for (unsigned char ch : token) ids.push_back(id_[ch]);
    return ids;
  }

  const std::vector<int>& bytes() const { return bytes_; }

 private:
  std::array<int, 256> id_{};
  int size_ = 1;
  std::vector<int> bytes_;
};

enum class Task { kBridging, kCoreference };

inline const char* task_name(Task t) {
  return t == Task::kBridging ? "bridging" : "coreference";
}

// All trainable state plus cached handles into the parameter registry.
// Creation order is fixed, so initialization draws are deterministic given
// the seed. Tower hidden-layer handles alias the shared parameters when the
// sharing mode says so; output heads are always task-specific.
template <class T>
class Model {
 public:
  struct Ffnn {
    ad::Parameter<T>* w1 = nullptr;
    ad::Parameter<T>* b1 = nullptr;
    ad::Parameter<T>* w2 = nullptr;
    ad::Parameter<T>* b2 = nullptr;
    ad::Parameter<T>* wo = nullptr;
    ad::Parameter<T>* bo = nullptr;
  };
  struct LstmDir {
    ad::Parameter<T>* w = nullptr;
    ad::Parameter<T>* b = nullptr;
  };

  Model(EncoderConfig enc, SharingMode sharing, CharVocab vocab, Rng& rng)
      : enc_(std::move(enc)), sharing_(sharing), vocab_(std::move(vocab)) {
    enc_.validate();

    char_table = &params_.create("char_cnn.table", {vocab_.size(), enc_.char_emb_dim});
    ad::init_embedding(*char_table, rng);
    for (int w : enc_.char_filter_widths) {
      auto& cw = params_.create("char_cnn.w" + std::to_string(w) + ".filters",
                                {w * enc_.char_emb_dim, enc_.char_filters});
      ad::init_dense(cw, rng);
      auto& cb = params_.create("char_cnn.w" + std::to_string(w) + ".bias",
                                {enc_.char_filters});
      char_conv.push_back({&cw, &cb});
    }

    const int hid = enc_.lstm_hidden;
    for (int layer = 0; layer < enc_.lstm_layers; ++layer) {
      const int in = layer == 0 ? enc_.token_dim() : enc_.encoded_dim();
      std::array<LstmDir, 2> dirs;
      for (int d = 0; d < 2; ++d) {
        const std::string base =
            "encoder.lstm" + std::to_string(layer) + (d == 0 ? ".fwd" : ".bwd");
        auto& w = params_.create(base + ".w", {4 * hid, in + hid});
        ad::init_dense(w, rng);
        auto& b = params_.create(base + ".b", {4 * hid});
        dirs[static_cast<std::size_t>(d)] = {&w, &b};
      }
      lstm.push_back(dirs);
    }

    attention = make_ffnn("attention", enc_.encoded_dim(), rng);

    width_embedding = &params_.create("features.width", {10, enc_.feature_dim});
    ad::init_embedding(*width_embedding, rng);
    distance_embedding = &params_.create("features.distance", {10, enc_.feature_dim});
    ad::init_embedding(*distance_embedding, rng);

    build_towers(rng);
  }

  const EncoderConfig& encoder_config() const { return enc_; }
  SharingMode sharing() const { return sharing_; }
  const CharVocab& char_vocab() const { return vocab_; }
  ad::ParameterSet<T>& params() { return params_; }
  const ad::ParameterSet<T>& params() const { return params_; }

  const Ffnn& tower(Task task) const {
    return task == Task::kBridging ? bridging_tower : coref_tower;
  }

  ad::Parameter<T>* char_table = nullptr;
  std::vector<std::pair<ad::Parameter<T>*, ad::Parameter<T>*>> char_conv;  // per width
  std::vector<std::array<LstmDir, 2>> lstm;  // [layer][fwd=0, bwd=1]
  Ffnn attention;
  ad::Parameter<T>* width_embedding = nullptr;
  ad::Parameter<T>* distance_embedding = nullptr;
  Ffnn bridging_tower;
  Ffnn coref_tower;

 private:
  Ffnn make_ffnn(const std::string& base, int input_dim, Rng& rng) {
    Ffnn f;
    f.w1 = &params_.create(base + ".h1.w", {input_dim, enc_.ffnn_hidden});
    ad::init_dense(*f.w1, rng);
    f.b1 = &params_.create(base + ".h1.b", {enc_.ffnn_hidden});
    f.w2 = &params_.create(base + ".h2.w", {enc_.ffnn_hidden, enc_.ffnn_hidden});
    ad::init_dense(*f.w2, rng);
    f.b2 = &params_.create(base + ".h2.b", {enc_.ffnn_hidden});
    f.wo = &params_.create(base + ".out.w", {enc_.ffnn_hidden, 1});
    ad::init_dense(*f.wo, rng);
    f.bo = &params_.create(base + ".out.b", {1});
    return f;
  }

  void build_towers(Rng& rng) {
    const int pair_dim = enc_.pair_dim();
    const int hid = enc_.ffnn_hidden;
    auto dense = [&](const std::string& name, std::vector<int> shape) {
      auto& p = params_.create(name, std::move(shape));
      ad::init_dense(p, rng);
      return &p;
    };
    auto bias = [&](const std::string& name, int n) {
      return &params_.create(name, {n});
    };

    const bool share1 = sharing_ != SharingMode::kEncoderOnly;
    const bool share2 = sharing_ == SharingMode::kShareFfnn2;

    if (share1) {
      bridging_tower.w1 = coref_tower.w1 = dense("tower.shared.h1.w", {pair_dim, hid});
      bridging_tower.b1 = coref_tower.b1 = bias("tower.shared.h1.b", hid);
    } else {
      bridging_tower.w1 = dense("tower.bridging.h1.w", {pair_dim, hid});
      bridging_tower.b1 = bias("tower.bridging.h1.b", hid);
      coref_tower.w1 = dense("tower.coref.h1.w", {pair_dim, hid});
      coref_tower.b1 = bias("tower.coref.h1.b", hid);
    }
    if (share2) {
      bridging_tower.w2 = coref_tower.w2 = dense("tower.shared.h2.w", {hid, hid});
      bridging_tower.b2 = coref_tower.b2 = bias("tower.shared.h2.b", hid);
    } else {
      bridging_tower.w2 = dense("tower.bridging.h2.w", {hid, hid});
      bridging_tower.b2 = bias("tower.bridging.h2.b", hid);
      coref_tower.w2 = dense("tower.coref.h2.w", {hid, hid});
      coref_tower.b2 = bias("tower.coref.h2.b", hid);
    }
    bridging_tower.wo = dense("tower.bridging.out.w", {hid, 1});
    bridging_tower.bo = bias("tower.bridging.out.b", 1);
    coref_tower.wo = dense("tower.coref.out.w", {hid, 1});
    coref_tower.bo = bias("tower.coref.out.b", 1);
  }

  EncoderConfig enc_;
  SharingMode sharing_;
  CharVocab vocab_;
  ad::ParameterSet<T> params_;
};

}  // namespace bridger
