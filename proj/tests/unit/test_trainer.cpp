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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "csipos/checkpoint.hpp"
#include "csipos/error.hpp"
#include "csipos/metrics.hpp"
#include "csipos/trainer.hpp"

using namespace csipos;
using namespace csipos::train;
namespace fs = std::filesystem;

namespace {

nn::ModelConfig tiny_model() {
  nn::ModelConfig c;
  c.input_rows = 4;
  c.input_cols = 6;
  c.num_dense_blocks = 1;
  c.layers_per_block = 2;
  c.growth_rate = 4;
  c.fc_widths = {32};
  return c;
}

data::Records synthetic(std::size_t n, std::uint64_t seed, int rows = 4, int cols = 6) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  data::Records out(n);
  for (auto& r : out) {
    r.features.antennas = rows;
    r.features.subcarriers = cols;
    r.features.values.resize(static_cast<std::size_t>(rows) * cols * 2);
    for (auto& v : r.features.values) v = g(rng);
    r.label = {u(rng), u(rng)};
  }
  return out;
}

std::vector<Point2> labels(const data::Records& r) {
  std::vector<Point2> out;
  for (const auto& x : r) out.push_back(x.label);
  return out;
}

fs::path temp_file(const std::string& tag) {
  return fs::temp_directory_path() / ("csipos_" + tag + "_" + std::to_string(std::random_device{}()) + ".ckpt");
}

}  // namespace

TEST_CASE("losses and their output gradients", "[trainer]") {
  const std::vector<float> out{3, 4, 0, 0};
  const std::vector<Point2> tgt{{0, 0}, {0, 0}};
  std::vector<float> g;
  CHECK(loss_and_gradient(out, tgt, Loss::kMeanSquaredEuclidean, &g) == Catch::Approx(12.5));
  CHECK(g[0] == Catch::Approx(3.0));
  CHECK(g[1] == Catch::Approx(4.0));
  CHECK(loss_and_gradient(out, tgt, Loss::kMeanEuclidean, &g) == Catch::Approx(2.5));
  CHECK(g[0] == Catch::Approx(0.3));
  CHECK(g[1] == Catch::Approx(0.4));
  CHECK(g[2] == 0.0f);
  CHECK(loss_from_string(to_string(Loss::kMeanEuclidean)) == Loss::kMeanEuclidean);
  CHECK_THROWS_AS(loss_from_string("huber"), ConfigError);
}

TEST_CASE("train config validation", "[trainer]") {
  TrainConfig c;
  c.learning_rate = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.patience = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("a small network memorises eight records", "[trainer]") {
  const auto recs = synthetic(8, 1);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.learning_rate = 3e-3;
  cfg.max_epochs = 2000;
  cfg.patience = 2000;
  cfg.max_steps = 2000;
  cfg.stop_at_val_error_mm = 1.0;
  cfg.seed = 2;
  auto result = train::train(nn::PosNet<float>(tiny_model(), 3), recs, recs, cfg);
  const double err = evaluate(result.model, recs);
  INFO("epochs " << result.history.epochs() << " error " << err);
  CHECK(err < 1.0);
  CHECK(result.history.steps <= 2000);
}

TEST_CASE("zero epochs returns the initial model", "[trainer]") {
  const auto recs = synthetic(10, 2);
  nn::PosNet<float> model(tiny_model(), 4);
  TrainConfig cfg;
  cfg.max_epochs = 0;
  auto result = train::train(model, recs, recs, cfg);
  CHECK(result.history.epochs() == 0);
  CHECK(result.history.best_epoch == 0);
  for (std::size_t i = 0; i < model.parameters().size(); ++i) {
    CHECK(result.model.parameters()[i].values == model.parameters()[i].values);
  }
}

TEST_CASE("early stopping when the validation error cannot improve", "[trainer]") {
  auto recs = synthetic(16, 3);
  for (auto& r : recs) std::fill(r.features.values.begin(), r.features.values.end(), 0.0f);
  // labels symmetric about their mean, so the constant centroid output is optimal from the start
  for (std::size_t i = 0; i < recs.size(); ++i) recs[i].label = {i % 2 ? 100.0 : -100.0, i % 4 < 2 ? 50.0 : -50.0};
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.patience = 1;
  cfg.max_epochs = 50;
  auto result = train::train(nn::PosNet<float>(tiny_model(), 5), recs, recs, cfg);
  CHECK(result.history.epochs() == 2);
}

TEST_CASE("training is reproducible for a fixed seed", "[trainer]") {
  const auto tr = synthetic(40, 4);
  const auto va = synthetic(10, 5);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.max_epochs = 5;
  cfg.seed = 9;
  auto a = train::train(nn::PosNet<float>(tiny_model(), 1), tr, va, cfg);
  auto b = train::train(nn::PosNet<float>(tiny_model(), 1), tr, va, cfg);
  CHECK(a.history.same_numerics(b.history));
  for (std::size_t i = 0; i < a.model.parameters().size(); ++i) {
    CHECK(a.model.parameters()[i].values == b.model.parameters()[i].values);
  }
  cfg.seed = 10;
  auto c = train::train(nn::PosNet<float>(tiny_model(), 1), tr, va, cfg);
  CHECK_FALSE(a.history.same_numerics(c.history));
}

TEST_CASE("returned snapshot is the best validation epoch", "[trainer][property]") {
  const auto tr = synthetic(48, 6);
  const auto va = synthetic(12, 7);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.max_epochs = 12;
  cfg.learning_rate = 5e-3;
  auto r = train::train(nn::PosNet<float>(tiny_model(), 2), tr, va, cfg);
  const auto& h = r.history;
  REQUIRE(h.epochs() > 0);
  CHECK(h.val_loss.size() == h.epochs());
  CHECK(h.val_mean_error_mm.size() == h.epochs());
  CHECK(h.wall_time_s.size() == h.epochs());
  const double best = *std::min_element(h.val_mean_error_mm.begin(), h.val_mean_error_mm.end());
  CHECK(h.val_mean_error_mm[h.best_epoch - 1] == best);
  const double final_err = evaluate(r.model, va);
  CHECK(final_err == Catch::Approx(best).epsilon(1e-9));
  for (double e : h.val_mean_error_mm) CHECK(final_err <= e * (1 + 1e-9));
}

TEST_CASE("mean-Euclidean loss agrees with the mean error metric", "[trainer][property]") {
  const auto recs = synthetic(30, 8);
  nn::PosNet<float> model(tiny_model(), 6);
  for (auto& a : model.parameters()) {
    if (!a.trainable) continue;
    std::mt19937_64 rng(a.values.size());
    std::normal_distribution<float> g(0.0f, 0.3f);
    for (auto& v : a.values) v = g(rng);
  }
  model.set_label_transform({500, 500}, 300);
  const auto est = predict(model, recs);
  const double loss = dataset_loss(model, recs, Loss::kMeanEuclidean);
  CHECK(loss == Catch::Approx(metrics::mean_error(est, labels(recs))).epsilon(1e-6));
  CHECK(evaluate(model, recs) == Catch::Approx(loss).epsilon(1e-6));
}

TEST_CASE("evaluate on simple predictors", "[trainer]") {
  data::Records two = synthetic(2, 9);
  for (auto& r : two) std::fill(r.features.values.begin(), r.features.values.end(), 0.0f);
  two[0].label = {-7.0, 0.0};
  two[1].label = {7.0, 0.0};
  nn::PosNet<float> centroid(tiny_model(), 0);
  CHECK(evaluate(centroid, two) == 7.0);

  two[1].label = {-7.0, 0.0};
  centroid.set_label_transform({-7.0, 0.0}, 1.0);
  CHECK(evaluate(centroid, two) == 0.0);
}

TEST_CASE("checkpoints", "[trainer][checkpoint]") {
  const auto tr = synthetic(24, 10);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.max_epochs = 3;
  auto r = train::train(nn::PosNet<float>(tiny_model(), 7), tr, tr, cfg);
  const data::NormStats norm{2.5};
  const auto path = temp_file("ckpt");

  save_checkpoint(r.model, r.history, norm, path);
  const auto loaded = load_checkpoint(path);
  CHECK(loaded.norm.scale == 2.5);
  CHECK(loaded.model.seed() == r.model.seed());
  for (std::size_t i = 0; i < r.model.parameters().size(); ++i) {
    CHECK(loaded.model.parameters()[i].name == r.model.parameters()[i].name);
    CHECK(loaded.model.parameters()[i].values == r.model.parameters()[i].values);
  }
  CHECK(predict(loaded.model, tr) == predict(r.model, tr));
  CHECK(loaded.history.same_numerics(r.history));
  CHECK(loaded.history.wall_time_s == r.history.wall_time_s);
  CHECK(loaded.history.epochs() == 3);

  SECTION("wrong version") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    const std::uint32_t v = kCheckpointVersion + 1;
    f.write(reinterpret_cast<const char*>(&v), 4);
    f.close();
    CHECK_THROWS_AS(load_checkpoint(path), VersionMismatchError);
  }
  SECTION("flipped payload byte") {
    const auto size = fs::file_size(path);
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(static_cast<std::streamoff>(size - 5));
    char c;
    f.read(&c, 1);
    c = static_cast<char>(c ^ 0x40);
    f.seekp(static_cast<std::streamoff>(size - 5));
    f.write(&c, 1);
    f.close();
    CHECK_THROWS_AS(load_checkpoint(path), CorruptionError);
  }
  SECTION("truncated") {
    fs::resize_file(path, fs::file_size(path) / 2);
    CHECK_THROWS_AS(load_checkpoint(path), CorruptionError);
  }
  SECTION("not a checkpoint") {
    std::ofstream(path, std::ios::binary) << "hello world, this is not it";
    CHECK_THROWS_AS(load_checkpoint(path), CorruptionError);
  }
  fs::remove(path);
}
