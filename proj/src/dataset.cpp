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

#include "csipos/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "csipos/error.hpp"
#include "csipos/npy.hpp"

static_assert(std::endian::native == std::endian::little,
              "dataset files are little endian; big-endian hosts need byte swapping");

namespace csipos::data {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kFeatureFile = "features.f32";
constexpr const char* kLabelFile = "labels.f64";
constexpr const char* kMetaFile = "meta.bin";
constexpr const char* kManifestFile = "manifest.json";

struct Fnv1a {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void add(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  }
};

std::vector<char> read_exact(const fs::path& path, std::uint64_t expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TruncationError("missing data file " + path.string());
  in.seekg(0, std::ios::end);
  const auto actual = static_cast<std::uint64_t>(in.tellg());
  if (actual < expected) {
    throw TruncationError(path.filename().string() + " holds " + std::to_string(actual) +
                          " bytes, manifest expects " + std::to_string(expected));
  }
  if (actual > expected) {
    throw MalformedManifestError(path.filename().string() + " is longer than the manifest states");
  }
  in.seekg(0);
  std::vector<char> buf(static_cast<std::size_t>(expected));
  in.read(buf.data(), static_cast<std::streamsize>(expected));
  if (!in) throw TruncationError("short read on " + path.string());
  return buf;
}

void write_file(const fs::path& path, const void* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw IoError("failed writing " + path.string());
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void check_shape(const Records& records, const IngestOptions& options) {
  if (!options.strict) return;
  for (const auto& r : records) {
    if (r.features.antennas != options.expected_antennas ||
        r.features.subcarriers != options.expected_subcarriers) {
      throw ShapeMismatchError("record shape " + std::to_string(r.features.antennas) + "x" +
                               std::to_string(r.features.subcarriers) + " but strict mode expects " +
                               std::to_string(options.expected_antennas) + "x" +
                               std::to_string(options.expected_subcarriers));
    }
  }
}

Records native_adapter(const fs::path& path, const IngestOptions& options) {
  Records records = load_dataset(path);
  if (options.limit && records.size() > *options.limit) records.resize(*options.limit);
  check_shape(records, options);
  return records;
}

// Layout of the published ultra-dense indoor CSI sets as distributed:
//   <dir>/user_positions.npy                 (N, 2|3) positions, mm
//   <dir>/samples/channel_measurement_NNNNNN.npy   (antennas, subcarriers) complex
Records ultradense_adapter(const fs::path& path, const IngestOptions& options) {
  const auto positions_arr = npy::read(path / "user_positions.npy");
  if (positions_arr.shape.size() != 2 || positions_arr.shape[1] < 2) {
    throw ShapeMismatchError("user_positions.npy must be (N, 2) or (N, 3)");
  }
  const auto positions = npy::as_real(positions_arr);
  const std::size_t cols = positions_arr.shape[1];
  std::size_t n = positions_arr.shape[0];
  if (options.limit) n = std::min(n, *options.limit);

  Records records(n);
  for (std::size_t i = 0; i < n; ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "channel_measurement_%06zu.npy", i);
    const auto arr = npy::read(path / "samples" / name);
    if (arr.shape.size() != 2) throw ShapeMismatchError(std::string(name) + " is not a matrix");
    const int m = static_cast<int>(arr.shape[0]);
    const int k = static_cast<int>(arr.shape[1]);
    if (options.strict && (m != options.expected_antennas || k != options.expected_subcarriers)) {
      throw ShapeMismatchError(std::string(name) + " has shape " + std::to_string(m) + "x" +
                               std::to_string(k));
    }
    const auto H = npy::as_complex(arr);
    records[i].features = to_feature_tensor(H, m, k);
    records[i].label = {positions[i * cols], positions[i * cols + 1]};
    records[i].user_id = 0;
    records[i].timestamp = 0.0;
  }
  return records;
}

}  // namespace

FeatureTensor to_feature_tensor(std::span<const std::complex<double>> H, int antennas, int subcarriers) {
  if (H.size() != static_cast<std::size_t>(antennas) * subcarriers) {
    throw ShapeMismatchError("channel matrix size does not match antennas x subcarriers");
  }
  FeatureTensor t;
  t.antennas = antennas;
  t.subcarriers = subcarriers;
  t.values.resize(H.size() * 2);
  for (std::size_t i = 0; i < H.size(); ++i) {
    t.values[2 * i] = static_cast<float>(H[i].real());
    t.values[2 * i + 1] = static_cast<float>(H[i].imag());
  }
  return t;
}

std::vector<std::complex<float>> from_feature_tensor(const FeatureTensor& tensor) {
  std::vector<std::complex<float>> H(tensor.values.size() / 2);
  for (std::size_t i = 0; i < H.size(); ++i) H[i] = {tensor.values[2 * i], tensor.values[2 * i + 1]};
  return H;
}

LabeledRecord to_record(const sim::ChannelSample& sample) {
  LabeledRecord r;
  r.features = to_feature_tensor(sample.H, sample.num_antennas, sample.num_subcarriers);
  r.label = sample.position;
  r.user_id = sample.user_id;
  r.timestamp = sample.timestamp;
  return r;
}

Records to_records(const std::vector<sim::ChannelSample>& samples) {
  Records out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(to_record(s));
  return out;
}

std::size_t count_labels_outside(const Records& records, const Rect& area) {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [&](const auto& r) {
    return r.label[0] < area.x0 || r.label[0] > area.x0 + area.width || r.label[1] < area.y0 ||
           r.label[1] > area.y0 + area.height;
  }));
}

void SplitSpec::validate() const {
  if (train_frac < 0.0 || val_frac < 0.0 || test_frac < 0.0) {
    throw SplitError("split fractions must be non-negative");
  }
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-12) {
    throw SplitError("split fractions must sum to 1");
  }
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  if (n < 3) throw SplitError("need at least 3 samples to split, got " + std::to_string(n));
  const auto n_train = static_cast<std::size_t>(std::floor(spec.train_frac * static_cast<double>(n) + 1e-7));
  const auto n_val = static_cast<std::size_t>(std::floor(spec.val_frac * static_cast<double>(n) + 1e-7));

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(spec.seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(perm[i], perm[pick(rng)]);
  }

  SplitIndices out;
  out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                 perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
  return out;
}

Records select(const Records& records, std::span<const std::size_t> indices) {
  Records out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(records.at(i));
  return out;
}

NormStats fit_normaliser(const Records& records) {
  if (records.empty()) throw EmptyInputError("cannot fit a normaliser on no records");
  float max_abs = 0.0f;
  for (const auto& r : records) {
    for (float v : r.features.values) max_abs = std::max(max_abs, std::abs(v));
  }
  if (!(max_abs > 0.0f)) throw NormaliserError("fitting set is all zeros");
  return {static_cast<double>(max_abs)};
}

void apply_normaliser_in_place(Records& records, const NormStats& stats) {
  if (!(stats.scale > 0.0)) throw NormaliserError("normaliser scale must be positive");
  for (auto& r : records) {
    for (float& v : r.features.values) v = static_cast<float>(static_cast<double>(v) / stats.scale);
  }
}

Records apply_normaliser(Records records, const NormStats& stats) {
  apply_normaliser_in_place(records, stats);
  return records;
}

std::vector<float> pack_batch(const Records& records, std::span<const std::size_t> indices,
                              double input_scale) {
  if (indices.empty()) return {};
  const int m_count = records.at(indices[0]).features.antennas;
  const int k_count = records.at(indices[0]).features.subcarriers;
  const std::size_t plane = static_cast<std::size_t>(m_count) * k_count;
  std::vector<float> out(indices.size() * plane * 2);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& f = records.at(indices[b]).features;
    if (f.antennas != m_count || f.subcarriers != k_count) {
      throw ShapeMismatchError("records in one batch must share a shape");
    }
    float* re = out.data() + b * plane * 2;
    float* im = re + plane;
    for (std::size_t i = 0; i < plane; ++i) {
      if (input_scale == 1.0) {
        re[i] = f.values[2 * i];
        im[i] = f.values[2 * i + 1];
      } else {
        re[i] = static_cast<float>(f.values[2 * i] / input_scale);
        im[i] = static_cast<float>(f.values[2 * i + 1] / input_scale);
      }
    }
  }
  return out;
}

std::uint64_t content_hash(const Records& records) {
  Fnv1a h;
  for (const auto& r : records) {
    h.add(r.features.values.data(), r.features.values.size() * sizeof(float));
    h.add(r.label.data(), sizeof(double) * 2);
  }
  return h.h;
}

void store_dataset(const Records& records, const fs::path& dir) {
  const int m_count = records.empty() ? 0 : records.front().features.antennas;
  const int k_count = records.empty() ? 0 : records.front().features.subcarriers;
  const std::size_t per_record = static_cast<std::size_t>(m_count) * k_count * 2;

  std::vector<float> features;
  features.reserve(records.size() * per_record);
  std::vector<double> labels;
  labels.reserve(records.size() * 2);
  std::vector<char> meta(records.size() * 16);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.features.antennas != m_count || r.features.subcarriers != k_count ||
        r.features.values.size() != per_record) {
      throw ShapeMismatchError("all records in a dataset must share one shape");
    }
    features.insert(features.end(), r.features.values.begin(), r.features.values.end());
    labels.push_back(r.label[0]);
    labels.push_back(r.label[1]);
    const std::int64_t uid = r.user_id;
    std::memcpy(meta.data() + 16 * i, &uid, 8);
    std::memcpy(meta.data() + 16 * i + 8, &r.timestamp, 8);
  }

  fs::create_directories(dir);
  write_file(dir / kFeatureFile, features.data(), features.size() * sizeof(float));
  write_file(dir / kLabelFile, labels.data(), labels.size() * sizeof(double));
  write_file(dir / kMetaFile, meta.data(), meta.size());

  json manifest = {
      {"format", "csipos-dataset"},
      {"version", kDatasetFormatVersion},
      {"count", records.size()},
      {"antennas", m_count},
      {"subcarriers", k_count},
      {"features",
       {{"file", kFeatureFile},
        {"dtype", "float32-le"},
        {"shape", {records.size(), m_count, k_count, 2}},
        {"layout", "record, antenna, subcarrier, [re, im]"},
        {"offset", 0},
        {"record_bytes", per_record * sizeof(float)},
        {"bytes", features.size() * sizeof(float)}}},
      {"labels",
       {{"file", kLabelFile},
        {"dtype", "float64-le"},
        {"shape", {records.size(), 2}},
        {"units", "mm"},
        {"offset", 0},
        {"bytes", labels.size() * sizeof(double)}}},
      {"meta",
       {{"file", kMetaFile},
        {"layout", "int64-le user_id, float64-le timestamp_s"},
        {"record_bytes", 16},
        {"bytes", meta.size()}}},
      {"content_hash", hex64(content_hash(records))},
  };
  const std::string text = manifest.dump(2) + "\n";
  write_file(dir / kManifestFile, text.data(), text.size());
}

Records load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifestFile;
  std::ifstream in(manifest_path);
  if (!in) throw MalformedManifestError("no manifest.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw MalformedManifestError(std::string("manifest.json does not parse: ") + e.what());
  }

  std::uint64_t count = 0;
  int m_count = 0;
  int k_count = 0;
  std::uint64_t feature_bytes = 0;
  std::uint64_t label_bytes = 0;
  std::uint64_t meta_bytes = 0;
  try {
    if (manifest.at("format").get<std::string>() != "csipos-dataset") {
      throw MalformedManifestError("manifest format is not csipos-dataset");
    }
    const int version = manifest.at("version").get<int>();
    if (version != kDatasetFormatVersion) {
      throw VersionMismatchError("dataset version " + std::to_string(version) + ", reader supports " +
                                 std::to_string(kDatasetFormatVersion));
    }
    count = manifest.at("count").get<std::uint64_t>();
    m_count = manifest.at("antennas").get<int>();
    k_count = manifest.at("subcarriers").get<int>();
    feature_bytes = manifest.at("features").at("bytes").get<std::uint64_t>();
    label_bytes = manifest.at("labels").at("bytes").get<std::uint64_t>();
    meta_bytes = manifest.at("meta").at("bytes").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw MalformedManifestError(std::string("manifest.json is missing fields: ") + e.what());
  }
  const std::uint64_t per_record = static_cast<std::uint64_t>(m_count) * k_count * 2;
  if (m_count < 0 || k_count < 0 || feature_bytes != count * per_record * sizeof(float) ||
      label_bytes != count * 2 * sizeof(double) || meta_bytes != count * 16) {
    throw MalformedManifestError("manifest sizes are inconsistent");
  }

  const auto features = read_exact(dir / kFeatureFile, feature_bytes);
  const auto labels = read_exact(dir / kLabelFile, label_bytes);
  const auto meta = read_exact(dir / kMetaFile, meta_bytes);

  Records records(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    r.features.antennas = m_count;
    r.features.subcarriers = k_count;
    r.features.values.resize(static_cast<std::size_t>(per_record));
    std::memcpy(r.features.values.data(), features.data() + i * per_record * sizeof(float),
                per_record * sizeof(float));
    std::memcpy(r.label.data(), labels.data() + i * 16, 16);
    std::int64_t uid = 0;
    std::memcpy(&uid, meta.data() + i * 16, 8);
    std::memcpy(&r.timestamp, meta.data() + i * 16 + 8, 8);
    r.user_id = static_cast<int>(uid);
  }
  return records;
}

AdapterRegistry& AdapterRegistry::instance() {
  static AdapterRegistry registry = [] {
    AdapterRegistry r;
    r.add("synthetic-native", native_adapter);
    r.add("ultradense-npy", ultradense_adapter);
    return r;
  }();
  return registry;
}

void AdapterRegistry::add(const std::string& name, Adapter adapter) { adapters_[name] = std::move(adapter); }

bool AdapterRegistry::contains(const std::string& name) const { return adapters_.contains(name); }

std::vector<std::string> AdapterRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : adapters_) out.push_back(name);
  return out;
}

const Adapter& AdapterRegistry::get(const std::string& name) const {
  const auto it = adapters_.find(name);
  if (it == adapters_.end()) throw UnknownAdapterError("no ingest adapter named '" + name + "'");
  return it->second;
}

Records ingest_external(const fs::path& path, const std::string& adapter_name, const IngestOptions& options) {
  return AdapterRegistry::instance().get(adapter_name)(path, options);
}

}  // namespace csipos::data
