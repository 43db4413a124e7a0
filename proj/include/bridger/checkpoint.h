#pragma once

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bridger/config.h"
#include "bridger/model.h"

namespace bridger {

// Checkpoint layout: 8-byte magic, little-endian u64 manifest length, JSON
// manifest (format version, configs, character vocabulary, parameter table
// with byte offsets), then the raw little-endian parameter payload in
// registry order.
inline constexpr char kCheckpointMagic[9] = "BRGCKPT1";
inline constexpr int kCheckpointVersion = 1;

template <class T>
const char* checkpoint_dtype();
template <>
inline const char* checkpoint_dtype<float>() {
  return "f32";
}
template <>
inline const char* checkpoint_dtype<double>() {
  return "f64";
}

template <class T>
void save_checkpoint(const Model<T>& model, const TrainConfig& train, const std::string& path,
                     const nlohmann::json* run_config = nullptr) {
  nlohmann::json manifest;
  manifest["format_version"] = kCheckpointVersion;
  manifest["dtype"] = checkpoint_dtype<T>();
  manifest["encoder"] = model.encoder_config().to_json();
  manifest["sharing"] = sharing_mode_name(model.sharing());
  manifest["train"] = train.to_json();
  manifest["char_vocab_bytes"] = model.char_vocab().bytes();
  if (run_config) manifest["run_config"] = *run_config;

  nlohmann::json params = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& p : model.params().items()) {
    params.push_back({{"name", p->name},
                      {"shape", p->value.shape},
                      {"offset", offset},
                      {"count", p->value.numel()}});
    offset += static_cast<std::uint64_t>(p->value.numel()) * sizeof(T);
  }
  manifest["params"] = std::move(params);
  manifest["payload_bytes"] = offset;

  const std::string manifest_str = manifest.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint file: " + path);
  out.write(kCheckpointMagic, 8);
  const std::uint64_t mlen = manifest_str.size();
  char lenbuf[8];
  for (int i = 0; i < 8; ++i) lenbuf[i] = static_cast<char>((mlen >> (8 * i)) & 0xff);
  out.write(lenbuf, 8);
  out.write(manifest_str.data(), static_cast<std::streamsize>(manifest_str.size()));
  for (const auto& p : model.params().items()) {
    out.write(reinterpret_cast<const char*>(p->value.values.data()),
              static_cast<std::streamsize>(p->value.numel() * sizeof(T)));
  }
  if (!out) throw DataError("failed while writing checkpoint file: " + path);
}

// Restores the model described by the manifest. The optional expectations
// reject a checkpoint whose saved configuration differs, naming the field.
// Nothing is returned on failure, so there is no partially loaded model.
template <class T>
Model<T> load_checkpoint(const std::string& path, TrainConfig* train_out = nullptr,
                         const SharingMode* expected_sharing = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint file: " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  auto corrupt = [&](const std::string& why) {
    return DataError("corrupt checkpoint " + path + ": " + why);
  };
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) {
    throw corrupt("bad magic");
  }
  std::uint64_t mlen = 0;
  for (int i = 0; i < 8; ++i) {
    mlen |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
  }
  if (16 + mlen > bytes.size()) throw corrupt("truncated manifest");
  nlohmann::json manifest =
      nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<long>(mlen),
                            nullptr, false);
  if (manifest.is_discarded()) throw corrupt("manifest is not valid JSON");

  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != kCheckpointVersion) {
      throw DataError("checkpoint " + path + " has format version " + std::to_string(version) +
                      ", expected " + std::to_string(kCheckpointVersion));
    }
    const auto dtype = manifest.at("dtype").get<std::string>();
    if (dtype != checkpoint_dtype<T>()) {
      throw DataError("checkpoint " + path + " stores dtype " + dtype + ", expected " +
                      checkpoint_dtype<T>() + " (field: dtype)");
    }
    const EncoderConfig enc = EncoderConfig::from_json(manifest.at("encoder"));
    const SharingMode sharing = sharing_mode_from_string(manifest.at("sharing").get<std::string>());
    if (expected_sharing && sharing != *expected_sharing) {
      throw DataError("checkpoint " + path + " was saved with sharing mode " +
                      sharing_mode_name(sharing) + ", expected " +
                      sharing_mode_name(*expected_sharing) + " (field: sharing)");
    }
    const TrainConfig train = TrainConfig::from_json(manifest.at("train"));
    const CharVocab vocab =
        CharVocab::from_bytes(manifest.at("char_vocab_bytes").get<std::vector<int>>());

    Rng init_rng(0);
    Model<T> model(enc, sharing, vocab, init_rng);

    const std::uint64_t payload_offset = 16 + mlen;
    const std::uint64_t payload_bytes = manifest.at("payload_bytes").get<std::uint64_t>();
    if (payload_offset + payload_bytes != bytes.size()) {
      throw corrupt("payload size mismatch (" + std::to_string(bytes.size() - payload_offset) +
                    " bytes on disk, manifest says " + std::to_string(payload_bytes) + ")");
    }

    std::size_t filled = 0;
    for (const auto& entry : manifest.at("params")) {
      const auto name = entry.at("name").get<std::string>();
      auto* p = model.params().find(name);
      if (!p) {
        throw DataError("checkpoint " + path + " has unknown parameter " + name);
      }
      const auto shape = entry.at("shape").get<std::vector<int>>();
      if (shape != p->value.shape) {
        throw DataError("checkpoint " + path + " parameter " + name + " has shape " +
                        ad::Tensor<T>::shape_str_of(shape) + ", model expects " +
                        p->value.shape_str());
      }
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const auto count = entry.at("count").get<std::uint64_t>();
      if (count != static_cast<std::uint64_t>(p->value.numel()) ||
          offset + count * sizeof(T) > payload_bytes) {
        throw corrupt("parameter " + name + " payload out of bounds");
      }
      std::memcpy(p->value.values.data(), bytes.data() + payload_offset + offset,
                  count * sizeof(T));
      ++filled;
    }
    if (filled != model.params().size()) {
      throw DataError("checkpoint " + path + " covers " + std::to_string(filled) +
                      " parameters, model has " + std::to_string(model.params().size()));
    }
    if (train_out) *train_out = train;
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw corrupt(std::string("manifest field error: ") + e.what());
  }
}

}  // namespace bridger
