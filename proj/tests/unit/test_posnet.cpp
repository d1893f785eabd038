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
#include <cmath>
#include <random>

#include "csipos/error.hpp"
#include "csipos/posnet.hpp"

using namespace csipos;
using namespace csipos::nn;

namespace {

template <typename T>
std::vector<T> noise(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(g(rng));
  return v;
}

// Gives every trainable array random values so no gradient path is trivially zero.
template <typename T>
void scramble(PosNet<T>& net, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.4);
  for (auto& a : net.parameters()) {
    if (!a.trainable) continue;
    for (auto& v : a.values) v = static_cast<T>(g(rng));
  }
}

ModelConfig small_config() {
  ModelConfig c;
  c.input_rows = 8;
  c.input_cols = 10;
  c.num_dense_blocks = 2;
  c.layers_per_block = 2;
  c.growth_rate = 4;
  c.fc_widths = {16, 8};
  return c;
}

std::size_t input_size(const ModelConfig& c, int batch) {
  return static_cast<std::size_t>(batch) * c.input_channels * c.input_rows * c.input_cols;
}

}  // namespace

TEST_CASE("layer counts", "[posnet]") {
  ModelConfig def;
  CHECK(count_layers(PosNet<float>(def, 0)) == LayerCounts{16, 3});

  ModelConfig two;
  two.input_rows = 8;
  two.input_cols = 8;
  two.num_dense_blocks = 2;
  two.layers_per_block = 3;
  two.use_stem = true;
  CHECK(count_layers(PosNet<float>(two, 0)) == LayerCounts{7, 3});
  two.use_stem = false;
  CHECK(count_layers(PosNet<float>(two, 0)).conv == 6);

  ModelConfig one_fc = small_config();
  one_fc.fc_widths = {64};
  CHECK(count_layers(PosNet<float>(one_fc, 0)).fc == 2);
}

TEST_CASE("invalid configs are rejected", "[posnet]") {
  ModelConfig c = small_config();
  c.growth_rate = 0;
  CHECK_THROWS_AS(PosNet<float>(c, 0), ConfigError);
  c = small_config();
  c.kernel_size = 4;
  CHECK_THROWS_AS(PosNet<float>(c, 0), ConfigError);
  c = small_config();
  c.input_rows = 1;
  c.num_dense_blocks = 4;
  CHECK_THROWS_AS(PosNet<float>(c, 0), ConfigError);
}

TEST_CASE("output shapes and finiteness", "[posnet]") {
  ModelConfig def;
  PosNet<float> net(def, 1);
  const std::vector<float> zeros(input_size(def, 1), 0.0f);
  const auto out = net.predict(zeros, 1);
  REQUIRE(out.size() == 2);
  CHECK(std::isfinite(out[0]));
  CHECK(std::isfinite(out[1]));

  const ModelConfig c = small_config();
  PosNet<float> small(c, 2);
  scramble(small, 3);
  const auto x = noise<float>(input_size(c, 7), 4);
  CHECK(small.predict(x, 7).size() == 14);
  CHECK(small.forward(x, 7, Mode::kTrain).size() == 14);
  CHECK_THROWS_AS(small.predict(x, 6), ShapeMismatchError);
}

TEST_CASE("inference is deterministic", "[posnet]") {
  const ModelConfig c = small_config();
  PosNet<float> net(c, 5);
  scramble(net, 6);
  const auto x = noise<float>(input_size(c, 4), 7);
  const auto a = net.predict(x, 4);
  const auto b = net.predict(x, 4);
  CHECK(a == b);
  CHECK(net.forward(x, 4, Mode::kInference) == a);
}

TEST_CASE("initial weights depend only on the seed", "[posnet]") {
  const ModelConfig c = small_config();
  PosNet<float> a(c, 11), b(c, 11), d(c, 12);
  REQUIRE(a.parameters().size() == b.parameters().size());
  bool any_diff = false;
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    CHECK(a.parameters()[i].values == b.parameters()[i].values);
    any_diff = any_diff || a.parameters()[i].values != d.parameters()[i].values;
  }
  CHECK(any_diff);
}

TEST_CASE("dense block concatenation grows channels by the growth rate", "[posnet]") {
  ModelConfig c = small_config();
  c.layers_per_block = 3;
  c.growth_rate = 5;
  PosNet<float> net(c, 0);
  for (int b = 0; b < c.num_dense_blocks; ++b) {
    const int c0 = b == 0 ? c.input_channels : c.input_channels + c.layers_per_block * c.growth_rate;
    int i = 0;
    for (const auto& node : net.graph()) {
      if (node.kind != LayerKind::kConv || node.block != b) continue;
      CHECK(node.in_channels == c0 + i * c.growth_rate);
      CHECK(node.out_channels == c.growth_rate);
      ++i;
    }
    CHECK(i == c.layers_per_block);
  }
}

TEST_CASE("output depends on antenna order", "[posnet]") {
  const ModelConfig c = small_config();
  PosNet<double> net(c, 1);
  scramble(net, 2);
  auto x = noise<double>(input_size(c, 1), 3);
  const auto a = net.predict(x, 1);
  // swap antenna rows 0 and 5 in both channels
  for (int ch = 0; ch < 2; ++ch)
    for (int k = 0; k < c.input_cols; ++k)
      std::swap(x[(ch * c.input_rows + 0) * c.input_cols + k], x[(ch * c.input_rows + 5) * c.input_cols + k]);
  const auto b = net.predict(x, 1);
  CHECK(std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) > 1e-9);
}

TEST_CASE("parameter count is a function of the config", "[posnet]") {
  const ModelConfig c = small_config();
  CHECK(parameter_count(c) == parameter_count(c));
  CHECK(parameter_count(c) == PosNet<double>(c, 99).parameters().trainable_count());
  ModelConfig wider = c;
  wider.growth_rate = 6;
  CHECK(parameter_count(wider) > parameter_count(c));

  // hand count for one block of two layers on a 4x6 input, fc [5]
  ModelConfig h;
  h.input_rows = 4;
  h.input_cols = 6;
  h.num_dense_blocks = 1;
  h.layers_per_block = 2;
  h.growth_rate = 3;
  h.fc_widths = {5};
  const std::size_t conv = (3 * 2 * 9 + 3) + (3 * 5 * 9 + 3);
  const std::size_t bn = 2 * 8;
  const std::size_t fc = (8 * 24 * 5 + 5) + (5 * 2 + 2);
  CHECK(parameter_count(h) == conv + bn + fc);
}

TEST_CASE("untrained output equals the label centre", "[posnet]") {
  const ModelConfig c = small_config();
  PosNet<float> net(c, 0);
  net.set_label_transform({500.0, 250.0}, 300.0);
  const auto out = net.predict(noise<float>(input_size(c, 3), 1), 3);
  for (int b = 0; b < 3; ++b) {
    CHECK(out[2 * b] == 500.0f);
    CHECK(out[2 * b + 1] == 250.0f);
  }
  CHECK_THROWS_AS(net.set_label_transform({0, 0}, 0.0), ConfigError);
}

TEST_CASE("analytic gradients match finite differences", "[posnet][gradient]") {
  ModelConfig c;
  c.input_rows = 4;
  c.input_cols = 6;
  c.num_dense_blocks = 1;
  c.layers_per_block = 2;
  c.growth_rate = 3;
  c.fc_widths = {5};
  PosNet<double> net(c, 7);
  scramble(net, 8);
  net.set_label_transform({10.0, -20.0}, 3.0);
  const int batch = 3;
  const auto x = noise<double>(input_size(c, batch), 9);
  const auto w = noise<double>(static_cast<std::size_t>(batch) * 2, 10);

  auto loss = [&]() {
    const auto out = net.forward(x, batch, Mode::kTrain);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += w[i] * out[i];
    return s;
  };
  net.zero_grad();
  loss();
  net.backward(w);

  const double h = 1e-6;
  int checked = 0;
  for (std::size_t a = 0; a < net.parameters().size(); ++a) {
    auto& p = net.parameters()[a];
    if (!p.trainable) continue;
    const auto& g = net.gradients()[a];
    const std::size_t step = std::max<std::size_t>(1, p.values.size() / 7);
    for (std::size_t i = 0; i < p.values.size(); i += step) {
      const double keep = p.values[i];
      p.values[i] = keep + h;
      const double up = loss();
      p.values[i] = keep - h;
      const double down = loss();
      p.values[i] = keep;
      const double numeric = (up - down) / (2 * h);
      INFO(p.name << "[" << i << "] analytic " << g.values[i] << " numeric " << numeric);
      CHECK(std::abs(numeric - g.values[i]) <= 1e-4 * std::max(1.0, std::abs(numeric)));
      ++checked;
    }
  }
  CHECK(checked > 40);
}

TEST_CASE("a sample's prediction does not depend on its batch position", "[posnet][property]") {
  ModelConfig c;
  c.input_rows = 64;
  c.input_cols = 20;
  PosNet<float> net(c, 3);
  scramble(net, 4);
  for (auto& a : net.parameters())
    for (auto& v : a.values) v *= 0.5f;
  for (const char* name : {"block0.bn.running_var", "block1.bn.running_var", "block2.bn.running_var",
                           "block3.bn.running_var"}) {
    for (auto& v : net.parameters().at(name).values) v = std::abs(v) + 0.5f;
  }
  net.set_label_transform({500, 500}, 300);
  const int n = 37;
  const std::size_t per = input_size(c, 1);
  const auto x = noise<float>(per * n, 5);
  const auto batched = net.predict(x, n);

  for (int i = 0; i < n; ++i) {
    const std::vector<float> one(x.begin() + per * i, x.begin() + per * (i + 1));
    const auto alone = net.predict(one, 1);
    CHECK(alone[0] == batched[2 * i]);
    CHECK(alone[1] == batched[2 * i + 1]);
  }
  // reversed order
  std::vector<float> rev(x.size());
  for (int i = 0; i < n; ++i) std::copy_n(x.begin() + per * i, per, rev.begin() + per * (n - 1 - i));
  const auto out_rev = net.predict(rev, n);
  for (int i = 0; i < n; ++i) {
    CHECK(out_rev[2 * (n - 1 - i)] == batched[2 * i]);
    CHECK(out_rev[2 * (n - 1 - i) + 1] == batched[2 * i + 1]);
  }
}
