#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bridger/error.h"

namespace bridger {

enum class ContextualMode { kOff, kConcat, kMeanOfFour };
enum class SharingMode { kEncoderOnly, kShareFfnn1, kShareFfnn2 };

const char* contextual_mode_name(ContextualMode m);
ContextualMode contextual_mode_from_string(const std::string& s);
const char* sharing_mode_name(SharingMode m);
SharingMode sharing_mode_from_string(const std::string& s);

// Network shape and dropout rates. Defaults are the full-scale settings;
// tests shrink them.
struct EncoderConfig {
  int static_dim = 300;
  int char_emb_dim = 8;
  std::vector<int> char_filter_widths = {3, 4, 5};
  int char_filters = 50;
  ContextualMode contextual_mode = ContextualMode::kOff;
  int contextual_file_dim = 0;  // dimension of vectors as stored in the file
  int lstm_layers = 3;
  int lstm_hidden = 200;
  int ffnn_hidden = 150;
  int feature_dim = 20;
  double lstm_dropout = 0.4;
  double ffnn_dropout = 0.2;
  double embedding_dropout = 0.5;

  int char_out_dim() const {
    return static_cast<int>(char_filter_widths.size()) * char_filters;
  }
  int contextual_dim() const {
    switch (contextual_mode) {
      case ContextualMode::kOff: return 0;
      case ContextualMode::kConcat: return contextual_file_dim;
      case ContextualMode::kMeanOfFour: return contextual_file_dim / 4;
    }
    return 0;
  }
  int token_dim() const { return static_dim + char_out_dim() + contextual_dim(); }
  int encoded_dim() const { return 2 * lstm_hidden; }
  int mention_dim() const { return 3 * encoded_dim() + feature_dim; }
  int pair_dim() const { return 3 * mention_dim() + feature_dim; }

  void validate() const;
  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
};

struct TrainConfig {
  std::uint64_t seed = 1;
  int epochs = 200;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double gamma = 2.0;  // negative example ratio
  bool undersample = true;
  bool resample_each_epoch = true;
  int max_antecedents = 150;
  double bridging_loss_weight = 1.0;
  double coref_loss_weight = 1.0;
  int checkpoint_every = 0;  // 0 = final checkpoint only

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// Full CLI-facing configuration: model + training + paths + mode flags.
struct RunConfig {
  EncoderConfig encoder;
  TrainConfig train;
  SharingMode sharing = SharingMode::kShareFfnn1;

  std::string corpus_path;
  std::string static_vectors_path;
  std::string contextual_vectors_path;
  std::string checkpoint_path;
  std::string output_path;

  std::string setting = "keep";   // keep | remove
  std::string task = "bridging";  // bridging | coreference
  int folds = 10;
  bool include_epsilon = false;
  bool parallel_folds = false;

  void validate() const;
  nlohmann::json to_json() const;

  // Flat key/value text ("key = value", '#' comments). Unknown keys are
  // rejected. Values loaded here can be overridden by CLI flags.
  void apply_file(const std::string& path);
  void apply_pair(const std::string& key, const std::string& value);
};

}  // namespace bridger
