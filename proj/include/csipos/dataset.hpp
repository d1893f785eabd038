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

#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csipos/channel_sim.hpp"
#include "csipos/geometry.hpp"

namespace csipos::data {

inline constexpr int kDatasetFormatVersion = 1;

// Real view of an M x K complex channel: values[(m * K + k) * 2 + part], part 0
// is the real component and part 1 the imaginary one.
struct FeatureTensor {
  int antennas = 0;
  int subcarriers = 0;
  std::vector<float> values;

  float at(int m, int k, int part) const {
    return values[(static_cast<std::size_t>(m) * subcarriers + k) * 2 + part];
  }
  std::size_t size() const { return values.size(); }
};

struct LabeledRecord {
  FeatureTensor features;
  Point2 label{};  // mm
  int user_id = 0;
  double timestamp = 0.0;
};

using Records = std::vector<LabeledRecord>;

FeatureTensor to_feature_tensor(std::span<const std::complex<double>> H, int antennas, int subcarriers);
std::vector<std::complex<float>> from_feature_tensor(const FeatureTensor& tensor);

LabeledRecord to_record(const sim::ChannelSample& sample);
Records to_records(const std::vector<sim::ChannelSample>& samples);

// Labels that fall outside `area` (mm) are counted, not rejected.
std::size_t count_labels_outside(const Records& records, const Rect& area);

struct SplitSpec {
  double train_frac = 0.85;
  double val_frac = 0.05;
  double test_frac = 0.10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// Sizes are floor(train_frac*n), floor(val_frac*n), and the remainder.
SplitIndices split_indices(std::size_t n, const SplitSpec& spec);

Records select(const Records& records, std::span<const std::size_t> indices);

struct NormStats {
  double scale = 1.0;
};

NormStats fit_normaliser(const Records& records);
Records apply_normaliser(Records records, const NormStats& stats);
void apply_normaliser_in_place(Records& records, const NormStats& stats);

// Packs records into a contiguous (B, 2, M, K) buffer, the layout the network
// consumes. Input scale is applied on the fly.
std::vector<float> pack_batch(const Records& records, std::span<const std::size_t> indices,
                              double input_scale = 1.0);

// Dataset directory: manifest.json, features.f32, labels.f64, meta.bin.
void store_dataset(const Records& records, const std::filesystem::path& dir);
Records load_dataset(const std::filesystem::path& dir);

// FNV-1a over feature bytes and labels; stable content fingerprint.
std::uint64_t content_hash(const Records& records);

struct IngestOptions {
  bool strict = true;
  int expected_antennas = 64;
  int expected_subcarriers = 100;
  std::optional<std::size_t> limit;  // read at most this many records
};

using Adapter = std::function<Records(const std::filesystem::path&, const IngestOptions&)>;

class AdapterRegistry {
 public:
  // Registry pre-populated with the built-in adapters.
  static AdapterRegistry& instance();

  void add(const std::string& name, Adapter adapter);
  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;
  const Adapter& get(const std::string& name) const;

 private:
  std::map<std::string, Adapter> adapters_;
};

Records ingest_external(const std::filesystem::path& path, const std::string& adapter_name,
                        const IngestOptions& options = {});

}  // namespace csipos::data
