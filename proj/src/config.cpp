#include "bridger/config.h"

#include <fstream>
#include <sstream>

namespace bridger {

using nlohmann::json;

const char* contextual_mode_name(ContextualMode m) {
  switch (m) {
    case ContextualMode::kOff: return "off";
    case ContextualMode::kConcat: return "concat";
    case ContextualMode::kMeanOfFour: return "mean4";
  }
  return "?";
}

ContextualMode contextual_mode_from_string(const std::string& s) {
  if (s == "off") return ContextualMode::kOff;
  if (s == "concat") return ContextualMode::kConcat;
  if (s == "mean4") return ContextualMode::kMeanOfFour;
  throw UsageError("unknown contextual mode: " + s + " (expected off|concat|mean4)");
}

const char* sharing_mode_name(SharingMode m) {
  switch (m) {
    case SharingMode::kEncoderOnly: return "encoder_only";
    case SharingMode::kShareFfnn1: return "share_ffnn_1";
    case SharingMode::kShareFfnn2: return "share_ffnn_2";
  }
  return "?";
}

SharingMode sharing_mode_from_string(const std::string& s) {
  if (s == "encoder_only") return SharingMode::kEncoderOnly;
  if (s == "share_ffnn_1") return SharingMode::kShareFfnn1;
  if (s == "share_ffnn_2") return SharingMode::kShareFfnn2;
  throw UsageError("unknown sharing mode: " + s +
                   " (expected encoder_only|share_ffnn_1|share_ffnn_2)");
}

void EncoderConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw UsageError(std::string(name) + " must be positive");
  };
  positive(static_dim, "static_dim");
  positive(char_emb_dim, "char_emb_dim");
  positive(char_filters, "char_filters");
  positive(lstm_layers, "lstm_layers");
  positive(lstm_hidden, "lstm_hidden");
  positive(ffnn_hidden, "ffnn_hidden");
  positive(feature_dim, "feature_dim");
  if (char_filter_widths.empty()) throw UsageError("char_filter_widths must be non-empty");
  for (int w : char_filter_widths) positive(w, "char filter width");
  for (double r : {lstm_dropout, ffnn_dropout, embedding_dropout}) {
    if (r < 0.0 || r >= 1.0) throw UsageError("dropout rates must be in [0,1)");
  }
  if (contextual_mode == ContextualMode::kMeanOfFour && contextual_file_dim % 4 != 0) {
    throw UsageError("contextual mean4 mode needs a file dimension divisible by 4");
  }
  if (contextual_mode != ContextualMode::kOff && contextual_file_dim <= 0) {
    throw UsageError("contextual mode enabled but contextual_file_dim not set");
  }
}

json EncoderConfig::to_json() const {
  return json{{"static_dim", static_dim},
              {"char_emb_dim", char_emb_dim},
              {"char_filter_widths", char_filter_widths},
              {"char_filters", char_filters},
              {"contextual_mode", contextual_mode_name(contextual_mode)},
              {"contextual_file_dim", contextual_file_dim},
              {"lstm_layers", lstm_layers},
              {"lstm_hidden", lstm_hidden},
              {"ffnn_hidden", ffnn_hidden},
              {"feature_dim", feature_dim},
              {"lstm_dropout", lstm_dropout},
              {"ffnn_dropout", ffnn_dropout},
              {"embedding_dropout", embedding_dropout}};
}

EncoderConfig EncoderConfig::from_json(const json& j) {
  EncoderConfig c;
  c.static_dim = j.at("static_dim").get<int>();
  c.char_emb_dim = j.at("char_emb_dim").get<int>();
  c.char_filter_widths = j.at("char_filter_widths").get<std::vector<int>>();
  c.char_filters = j.at("char_filters").get<int>();
  c.contextual_mode = contextual_mode_from_string(j.at("contextual_mode").get<std::string>());
  c.contextual_file_dim = j.at("contextual_file_dim").get<int>();
  c.lstm_layers = j.at("lstm_layers").get<int>();
  c.lstm_hidden = j.at("lstm_hidden").get<int>();
  c.ffnn_hidden = j.at("ffnn_hidden").get<int>();
  c.feature_dim = j.at("feature_dim").get<int>();
  c.lstm_dropout = j.at("lstm_dropout").get<double>();
  c.ffnn_dropout = j.at("ffnn_dropout").get<double>();
  c.embedding_dropout = j.at("embedding_dropout").get<double>();
  return c;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw UsageError("epochs must be non-negative");
  if (learning_rate <= 0) throw UsageError("learning_rate must be positive");
  if (gamma < 0) throw UsageError("gamma must be non-negative");
  if (max_antecedents < 1) throw UsageError("max_antecedents must be positive");
  if (bridging_loss_weight < 0 || coref_loss_weight < 0) {
    throw UsageError("task loss weights must be non-negative");
  }
}

json TrainConfig::to_json() const {
  return json{{"seed", seed},
              {"epochs", epochs},
              {"learning_rate", learning_rate},
              {"adam_beta1", adam_beta1},
              {"adam_beta2", adam_beta2},
              {"adam_eps", adam_eps},
              {"gamma", gamma},
              {"undersample", undersample},
              {"resample_each_epoch", resample_each_epoch},
              {"max_antecedents", max_antecedents},
              {"bridging_loss_weight", bridging_loss_weight},
              {"coref_loss_weight", coref_loss_weight},
              {"checkpoint_every", checkpoint_every}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.epochs = j.at("epochs").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.adam_beta1 = j.at("adam_beta1").get<double>();
  c.adam_beta2 = j.at("adam_beta2").get<double>();
  c.adam_eps = j.at("adam_eps").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.undersample = j.at("undersample").get<bool>();
  c.resample_each_epoch = j.at("resample_each_epoch").get<bool>();
  c.max_antecedents = j.at("max_antecedents").get<int>();
  c.bridging_loss_weight = j.at("bridging_loss_weight").get<double>();
  c.coref_loss_weight = j.at("coref_loss_weight").get<double>();
  c.checkpoint_every = j.at("checkpoint_every").get<int>();
  return c;
}

void RunConfig::validate() const {
  encoder.validate();
  train.validate();
  if (setting != "keep" && setting != "remove") {
    throw UsageError("setting must be keep or remove, got " + setting);
  }
  if (task != "bridging" && task != "coreference") {
    throw UsageError("task must be bridging or coreference, got " + task);
  }
  if (folds < 2) throw UsageError("folds must be at least 2");
}

json RunConfig::to_json() const {
  json j;
  j["encoder"] = encoder.to_json();
  j["train"] = train.to_json();
  j["sharing"] = sharing_mode_name(sharing);
  j["corpus"] = corpus_path;
  j["static_vectors"] = static_vectors_path;
  j["contextual_vectors"] = contextual_vectors_path;
  j["checkpoint"] = checkpoint_path;
  j["output"] = output_path;
  j["setting"] = setting;
  j["task"] = task;
  j["folds"] = folds;
  j["include_epsilon"] = include_epsilon;
  j["parallel_folds"] = parallel_folds;
  return j;
}

namespace {

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw UsageError("config key " + key + ": expected an integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw UsageError("config key " + key + ": expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("config key " + key + ": expected a boolean, got '" + v + "'");
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

}  // namespace

void RunConfig::apply_pair(const std::string& key, const std::string& value) {
  if (key == "seed") train.seed = static_cast<std::uint64_t>(std::stoull(value));
  else if (key == "epochs") train.epochs = to_int(key, value);
  else if (key == "learning_rate") train.learning_rate = to_double(key, value);
  else if (key == "adam_beta1") train.adam_beta1 = to_double(key, value);
  else if (key == "adam_beta2") train.adam_beta2 = to_double(key, value);
  else if (key == "adam_eps") train.adam_eps = to_double(key, value);
  else if (key == "gamma") train.gamma = to_double(key, value);
  else if (key == "undersample") train.undersample = to_bool(key, value);
  else if (key == "resample_each_epoch") train.resample_each_epoch = to_bool(key, value);
  else if (key == "max_antecedents") train.max_antecedents = to_int(key, value);
  else if (key == "bridging_loss_weight") train.bridging_loss_weight = to_double(key, value);
  else if (key == "coref_loss_weight") train.coref_loss_weight = to_double(key, value);
  else if (key == "checkpoint_every") train.checkpoint_every = to_int(key, value);
  else if (key == "sharing") sharing = sharing_mode_from_string(value);
  else if (key == "static_dim") encoder.static_dim = to_int(key, value);
  else if (key == "char_emb_dim") encoder.char_emb_dim = to_int(key, value);
  else if (key == "char_filters") encoder.char_filters = to_int(key, value);
  else if (key == "char_filter_widths") {
    encoder.char_filter_widths.clear();
    std::istringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      encoder.char_filter_widths.push_back(to_int(key, trim(item)));
    }
  } else if (key == "contextual_mode") {
    encoder.contextual_mode = contextual_mode_from_string(value);
  } else if (key == "contextual_file_dim") encoder.contextual_file_dim = to_int(key, value);
  else if (key == "lstm_layers") encoder.lstm_layers = to_int(key, value);
  else if (key == "lstm_hidden") encoder.lstm_hidden = to_int(key, value);
  else if (key == "ffnn_hidden") encoder.ffnn_hidden = to_int(key, value);
  else if (key == "feature_dim") encoder.feature_dim = to_int(key, value);
  else if (key == "lstm_dropout") encoder.lstm_dropout = to_double(key, value);
  else if (key == "ffnn_dropout") encoder.ffnn_dropout = to_double(key, value);
  else if (key == "embedding_dropout") encoder.embedding_dropout = to_double(key, value);
  else if (key == "corpus") corpus_path = value;
  else if (key == "static_vectors") static_vectors_path = value;
  else if (key == "contextual_vectors") contextual_vectors_path = value;
  else if (key == "checkpoint") checkpoint_path = value;
  else if (key == "output") output_path = value;
  else if (key == "setting") setting = value;
  else if (key == "task") task = value;
  else if (key == "folds") folds = to_int(key, value);
  else if (key == "include_epsilon") include_epsilon = to_bool(key, value);
  else if (key == "parallel_folds") parallel_folds = to_bool(key, value);
  else throw UsageError("unknown config key: " + key);
}

void RunConfig::apply_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(line_no) +
                       ": expected 'key = value', got '" + line + "'");
    }
    try {
      apply_pair(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const UsageError& e) {
      throw UsageError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace bridger
