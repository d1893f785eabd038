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

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "csipos/dataset.hpp"
#include "csipos/error.hpp"
#include "csipos/npy.hpp"

using namespace csipos;
using namespace csipos::data;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("csipos_test_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Records random_records(std::size_t n, int m, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  Records out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].features.antennas = m;
    out[i].features.subcarriers = k;
    out[i].features.values.resize(static_cast<std::size_t>(m) * k * 2);
    for (auto& v : out[i].features.values) v = g(rng);
    out[i].label = {u(rng), u(rng)};
    out[i].user_id = static_cast<int>(i % 4);
    out[i].timestamp = 0.5 * static_cast<double>(i);
  }
  return out;
}

bool same(const Records& a, const Records& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].features.antennas != b[i].features.antennas) return false;
    if (a[i].features.subcarriers != b[i].features.subcarriers) return false;
    if (a[i].features.values != b[i].features.values) return false;
    if (a[i].label != b[i].label || a[i].user_id != b[i].user_id || a[i].timestamp != b[i].timestamp) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("feature tensor holds real and imaginary parts", "[dataset]") {
  std::vector<std::complex<double>> H(6, {0.0, 0.0});
  auto t = to_feature_tensor(H, 2, 3);
  CHECK(t.size() == 12);
  CHECK(std::all_of(t.values.begin(), t.values.end(), [](float v) { return v == 0.0f; }));

  H[0] = {1.0, 2.0};
  H[5] = {-3.0, 0.5};
  t = to_feature_tensor(H, 2, 3);
  CHECK(t.at(0, 0, 0) == 1.0f);
  CHECK(t.at(0, 0, 1) == 2.0f);
  CHECK(t.at(1, 2, 0) == -3.0f);
  CHECK(t.at(1, 2, 1) == 0.5f);

  CHECK_THROWS_AS(to_feature_tensor(H, 2, 2), ShapeMismatchError);
}

TEST_CASE("feature tensor round trip is exact for float values", "[dataset][property]") {
  std::mt19937_64 rng(3);
  std::normal_distribution<float> g;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::complex<double>> H(64 * 20);
    for (auto& h : H) h = {g(rng), g(rng)};
    const auto back = from_feature_tensor(to_feature_tensor(H, 64, 20));
    REQUIRE(back.size() == H.size());
    for (std::size_t i = 0; i < H.size(); ++i) {
      CHECK(static_cast<double>(back[i].real()) == H[i].real());
      CHECK(static_cast<double>(back[i].imag()) == H[i].imag());
    }
  }
}

TEST_CASE("split sizes", "[dataset]") {
  SplitSpec spec;
  auto s = split_indices(252004, spec);
  CHECK(s.train.size() == 214203);
  CHECK(s.val.size() == 12600);
  CHECK(s.test.size() == 25201);

  s = split_indices(100, spec);
  CHECK(s.train.size() == 85);
  CHECK(s.val.size() == 5);
  CHECK(s.test.size() == 10);

  CHECK_THROWS_AS(split_indices(2, spec), SplitError);
  spec.train_frac = 0.9;
  CHECK_THROWS_AS(split_indices(100, spec), SplitError);
}

TEST_CASE("splits partition the index range", "[dataset][property]") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> un(3, 3000);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = un(rng);
    SplitSpec spec;
    spec.seed = rng();
    const auto s = split_indices(n, spec);
    CHECK(s.train.size() == static_cast<std::size_t>(std::floor(0.85 * static_cast<double>(n))));
    CHECK(s.val.size() == static_cast<std::size_t>(std::floor(0.05 * static_cast<double>(n))));
    std::vector<std::size_t> all;
    all.insert(all.end(), s.train.begin(), s.train.end());
    all.insert(all.end(), s.val.begin(), s.val.end());
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    REQUIRE(all.size() == n);
    for (std::size_t i = 0; i < n; ++i) CHECK(all[i] == i);

    const auto again = split_indices(n, spec);
    CHECK(again.train == s.train);
    CHECK(again.val == s.val);
    CHECK(again.test == s.test);
  }
  SplitSpec a, b;
  a.seed = 1;
  b.seed = 2;
  CHECK(split_indices(500, a).train != split_indices(500, b).train);
}

TEST_CASE("normaliser", "[dataset]") {
  Records r = random_records(5, 2, 3, 1);
  for (auto& rec : r)
    for (auto& v : rec.features.values) v = std::clamp(v, -3.5f, 3.5f);
  r[2].features.values[4] = -4.0f;
  const auto stats = fit_normaliser(r);
  CHECK(stats.scale == 4.0);
  const auto n = apply_normaliser(r, stats);
  float max_abs = 0.0f;
  for (const auto& rec : n)
    for (float v : rec.features.values) max_abs = std::max(max_abs, std::abs(v));
  CHECK(max_abs == 1.0f);

  CHECK(same(apply_normaliser(r, NormStats{1.0}), r));
  CHECK_THROWS_AS(fit_normaliser(Records{}), EmptyInputError);
  Records zeros = random_records(2, 1, 1, 0);
  for (auto& rec : zeros) std::fill(rec.features.values.begin(), rec.features.values.end(), 0.0f);
  CHECK_THROWS_AS(fit_normaliser(zeros), NormaliserError);
  CHECK_THROWS_AS(apply_normaliser(r, NormStats{0.0}), NormaliserError);
}

TEST_CASE("normalising twice with fitted stats is idempotent on the second fit", "[dataset][property]") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Records r = random_records(8, 4, 5, seed);
    const auto once = apply_normaliser(r, fit_normaliser(r));
    const auto stats2 = fit_normaliser(once);
    CHECK(stats2.scale == 1.0);
    CHECK(same(apply_normaliser(once, stats2), once));
  }
}

TEST_CASE("batch packing uses a channel-major layout", "[dataset]") {
  const Records r = random_records(3, 2, 4, 9);
  const std::vector<std::size_t> idx{2, 0};
  const auto buf = pack_batch(r, idx);
  REQUIRE(buf.size() == 2 * 2 * 2 * 4);
  for (std::size_t b = 0; b < idx.size(); ++b)
    for (int part = 0; part < 2; ++part)
      for (int m = 0; m < 2; ++m)
        for (int k = 0; k < 4; ++k)
          CHECK(buf[((b * 2 + part) * 2 + m) * 4 + k] == r[idx[b]].features.at(m, k, part));
  const auto halved = pack_batch(r, idx, 2.0);
  for (std::size_t i = 0; i < buf.size(); ++i) CHECK(halved[i] == buf[i] / 2.0f);
}

TEST_CASE("dataset persistence", "[dataset]") {
  TempDir tmp("ds");
  const Records r = random_records(10, 3, 7, 42);
  const fs::path dir = tmp.path / "set";
  store_dataset(r, dir);
  CHECK(same(load_dataset(dir), r));
  CHECK(content_hash(load_dataset(dir)) == content_hash(r));

  SECTION("truncated feature file") {
    const auto f = dir / "features.f32";
    fs::resize_file(f, fs::file_size(f) - 4);
    CHECK_THROWS_AS(load_dataset(dir), TruncationError);
  }
  SECTION("empty directory") {
    fs::create_directories(tmp.path / "empty");
    CHECK_THROWS_AS(load_dataset(tmp.path / "empty"), MalformedManifestError);
  }
  SECTION("garbage manifest") {
    std::ofstream(dir / "manifest.json") << "{ not json";
    CHECK_THROWS_AS(load_dataset(dir), MalformedManifestError);
  }
  SECTION("future version") {
    std::ifstream in(dir / "manifest.json");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const auto pos = text.find("\"version\": 1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 12, "\"version\": 9");
    std::ofstream(dir / "manifest.json") << text;
    CHECK_THROWS_AS(load_dataset(dir), VersionMismatchError);
  }
}

TEST_CASE("ingest adapters", "[dataset]") {
  TempDir tmp("ingest");
  const Records r = random_records(6, 64, 100, 5);
  store_dataset(r, tmp.path / "native");
  CHECK(same(ingest_external(tmp.path / "native", "synthetic-native"), load_dataset(tmp.path / "native")));

  IngestOptions limited;
  limited.limit = 4;
  CHECK(ingest_external(tmp.path / "native", "synthetic-native", limited).size() == 4);

  CHECK_THROWS_AS(ingest_external(tmp.path / "native", "no-such-layout"), UnknownAdapterError);
  CHECK(AdapterRegistry::instance().contains("ultradense-npy"));

  store_dataset(random_records(2, 32, 100, 6), tmp.path / "narrow");
  CHECK_THROWS_AS(ingest_external(tmp.path / "narrow", "synthetic-native"), ShapeMismatchError);
  IngestOptions loose;
  loose.strict = false;
  CHECK(ingest_external(tmp.path / "narrow", "synthetic-native", loose).size() == 2);
}

TEST_CASE("npy directory adapter", "[dataset]") {
  TempDir tmp("npy");
  const int n = 3, m = 4, k = 5;
  npy::Array pos;
  pos.descr = "<f8";
  pos.shape = {static_cast<std::size_t>(n), 3};
  std::vector<double> p{10, 20, 0, 30, 40, 0, 50, 60, 0};
  pos.bytes.resize(p.size() * 8);
  std::memcpy(pos.bytes.data(), p.data(), pos.bytes.size());
  npy::write(tmp.path / "user_positions.npy", pos);
  fs::create_directories(tmp.path / "samples");
  std::vector<std::vector<std::complex<double>>> hs;
  for (int i = 0; i < n; ++i) {
    npy::Array a;
    a.descr = "<c16";
    a.shape = {static_cast<std::size_t>(m), static_cast<std::size_t>(k)};
    std::vector<std::complex<double>> h(m * k);
    for (int j = 0; j < m * k; ++j) h[j] = {0.25 * i + j, -0.5 * j};
    a.bytes.resize(h.size() * 16);
    std::memcpy(a.bytes.data(), h.data(), a.bytes.size());
    char name[64];
    std::snprintf(name, sizeof name, "channel_measurement_%06d.npy", i);
    npy::write(tmp.path / "samples" / name, a);
    hs.push_back(h);
  }
  IngestOptions opt;
  opt.expected_antennas = m;
  opt.expected_subcarriers = k;
  const auto recs = ingest_external(tmp.path, "ultradense-npy", opt);
  REQUIRE(recs.size() == 3);
  CHECK(recs[1].label == Point2{30, 40});
  CHECK(recs[2].features.at(1, 2, 0) == static_cast<float>(hs[2][7].real()));
  CHECK(recs[2].features.at(1, 2, 1) == static_cast<float>(hs[2][7].imag()));

  IngestOptions strict_default;
  CHECK_THROWS_AS(ingest_external(tmp.path, "ultradense-npy", strict_default), ShapeMismatchError);
}

TEST_CASE("npy files round trip", "[dataset]") {
  TempDir tmp("npyrt");
  npy::Array a;
  a.descr = "<f4";
  a.shape = {2, 3};
  std::vector<float> v{1, 2, 3, 4, 5, 6};
  a.bytes.resize(24);
  std::memcpy(a.bytes.data(), v.data(), 24);
  npy::write(tmp.path / "a.npy", a);
  const auto b = npy::read(tmp.path / "a.npy");
  CHECK(b.descr == "<f4");
  CHECK(b.shape == a.shape);
  CHECK(b.bytes == a.bytes);
  CHECK(npy::as_real(b) == std::vector<double>{1, 2, 3, 4, 5, 6});

  a.fortran_order = true;
  npy::write(tmp.path / "f.npy", a);
  // column-major storage of [[1,3,5],[2,4,6]]
  CHECK(npy::as_real(npy::read(tmp.path / "f.npy")) == std::vector<double>{1, 3, 5, 2, 4, 6});
}
