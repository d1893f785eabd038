// SPDX-License-Identifier: Apache-2.0
//
// csipos - CSI-based user positioning toolkit for massive MIMO
// Copyright (C) 2026 The csipos authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "csipos/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "csipos/config.hpp"
#include "csipos/error.hpp"

namespace csipos::train {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

namespace {

constexpr std::array<char, 8> kMagic{'C', 'S', 'I', 'P', 'C', 'K', 'P', 'T'};
constexpr std::size_t kHeaderBytes = 8 + 4 + 4 + 8;

std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ULL;
  }
  return h;
}

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t offset) {
  T value;
  std::memcpy(&value, in.data() + offset, sizeof(T));
  return value;
}

}  // namespace

void save_checkpoint(const nn::PosNet<float>& model, const TrainHistory& history, const data::NormStats& norm,
                     const std::filesystem::path& path) {
  std::string payload;
  json arrays = json::array();
  for (const auto& p : model.parameters()) {
    arrays.push_back({{"name", p.name},
                      {"shape", p.shape},
                      {"offset", payload.size()},
                      {"count", p.values.size()},
                      {"trainable", p.trainable}});
    payload.append(reinterpret_cast<const char*>(p.values.data()), p.values.size() * sizeof(float));
  }
  const json manifest = {{"format", "csipos-checkpoint"},
                         {"version", kCheckpointVersion},
                         {"model", model.config()},
                         {"seed", model.seed()},
                         {"init_scheme", model.parameters().init_scheme},
                         {"dtype", "float32"},
                         {"input_scale", norm.scale},
                         {"history", history},
                         {"arrays", arrays},
                         {"payload_bytes", payload.size()},
                         {"payload_hash", fnv1a(payload.data(), payload.size())}};
  const std::string text = manifest.dump();

  std::string file;
  file.append(kMagic.data(), kMagic.size());
  put<std::uint32_t>(file, kCheckpointVersion);
  put<std::uint32_t>(file, 0);
  put<std::uint64_t>(file, text.size());
  file += text;
  file += payload;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  out.write(file.data(), static_cast<std::streamsize>(file.size()));
  if (!out) throw IoError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  const std::string file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = " in '" + path.string() + "'";

  if (file.size() < kHeaderBytes || std::memcmp(file.data(), kMagic.data(), kMagic.size()) != 0) {
    throw CorruptionError("not a checkpoint file" + where);
  }
  const auto version = take<std::uint32_t>(file, 8);
  if (version != kCheckpointVersion) {
    throw VersionMismatchError("checkpoint version " + std::to_string(version) + " (expected " +
                               std::to_string(kCheckpointVersion) + ")" + where);
  }
  const auto manifest_len = take<std::uint64_t>(file, 16);
  if (manifest_len > file.size() - kHeaderBytes) throw CorruptionError("truncated manifest" + where);

  json manifest;
  try {
    manifest = json::parse(file.substr(kHeaderBytes, manifest_len));
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("unreadable manifest: ") + e.what() + where);
  }

  try {
    if (manifest.at("format").get<std::string>() != "csipos-checkpoint") {
      throw CorruptionError("unexpected format tag" + where);
    }
    if (manifest.at("version").get<std::uint32_t>() != kCheckpointVersion) {
      throw VersionMismatchError("manifest version disagrees with header" + where);
    }
    const std::size_t payload_start = kHeaderBytes + manifest_len;
    const auto payload_bytes = manifest.at("payload_bytes").get<std::size_t>();
    if (file.size() != payload_start + payload_bytes) {
      throw CorruptionError("payload holds " + std::to_string(file.size() - payload_start) + " bytes, manifest says " +
                            std::to_string(payload_bytes) + where);
    }
    const char* payload = file.data() + payload_start;
    if (fnv1a(payload, payload_bytes) != manifest.at("payload_hash").get<std::uint64_t>()) {
      throw CorruptionError("payload checksum mismatch" + where);
    }

    Checkpoint ck{nn::PosNet<float>(manifest.at("model").get<nn::ModelConfig>(), manifest.at("seed").get<std::uint64_t>()),
                  manifest.at("history").get<TrainHistory>(),
                  data::NormStats{manifest.at("input_scale").get<double>()}};
    auto& params = ck.model.parameters();
    const auto& arrays = manifest.at("arrays");
    if (arrays.size() != params.size()) throw CorruptionError("array table does not match the model" + where);
    for (const auto& a : arrays) {
      auto& p = params.at(a.at("name").get<std::string>());
      const auto count = a.at("count").get<std::size_t>();
      const auto offset = a.at("offset").get<std::size_t>();
      if (a.at("shape").get<std::vector<int>>() != p.shape || count != p.values.size() ||
          offset + count * sizeof(float) > payload_bytes) {
        throw CorruptionError("array '" + p.name + "' has an inconsistent shape or extent" + where);
      }
      std::memcpy(p.values.data(), payload + offset, count * sizeof(float));
    }
    params.init_scheme = manifest.value("init_scheme", params.init_scheme);
    return ck;
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("malformed manifest: ") + e.what() + where);
  } catch (const ConfigError& e) {
    throw CorruptionError(std::string("malformed manifest: ") + e.what() + where);
  }
}

}  // namespace csipos::train
