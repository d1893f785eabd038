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

#include <filesystem>
#include <random>

#include "../support/oracles.hpp"
#include "csipos/config.hpp"
#include "csipos/error.hpp"
#include "csipos/experiments.hpp"
#include "csipos/report.hpp"

using namespace csipos;
using namespace csipos::exp;
namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

SceneConfig small_scene() {
  SceneConfig s;
  s.array.num_rows = 2;
  s.array.num_cols = 2;
  s.radio.num_subcarriers = 4;
  s.grid.spacing = 250.0;
  s.noise_std = 0.0;
  return s;
}

nn::ModelConfig small_model(const SceneConfig& s) {
  nn::ModelConfig m;
  m.input_rows = s.array.num_antennas();
  m.input_cols = s.radio.num_subcarriers;
  m.num_dense_blocks = 1;
  m.layers_per_block = 2;
  m.growth_rate = 3;
  m.fc_widths = {8};
  return m;
}

nn::PosNet<float> scrambled(const nn::ModelConfig& c, std::uint64_t seed) {
  nn::PosNet<float> net(c, seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 0.5f);
  for (auto& a : net.parameters())
    if (a.trainable)
      for (auto& v : a.values) v = g(rng);
  net.set_label_transform({500, 500}, 300);
  return net;
}

}  // namespace

TEST_CASE("trajectory names round trip", "[experiments]") {
  for (auto t : {Trajectory::kBack, Trajectory::kLeft, Trajectory::kRight, Trajectory::kFront, Trajectory::kMiddleLR,
                 Trajectory::kMiddleFB, Trajectory::kNone}) {
    CHECK(trajectory_from_string(to_string(t)) == t);
  }
  CHECK_THROWS_AS(trajectory_from_string("sideways"), ConfigError);
}

TEST_CASE("scenario list and user placement", "[experiments]") {
  const Rect area{0, 0, 1000, 1000};
  const auto users = quadrant_users(area);
  CHECK(users == std::vector<Point2>{{250, 250}, {750, 250}, {250, 750}, {750, 750}});
  const auto sc = default_scenarios(area);
  REQUIRE(sc.size() == 7);
  CHECK(sc.back().trajectory == Trajectory::kNone);
  for (const auto& s : sc) {
    CHECK(s.duration == 120.0);
    CHECK(s.dt == 0.5);
    CHECK(s.users_mm == users);
  }
  ScenarioSpec bad = sc.front();
  bad.dt = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("walker lines sit outside the user area", "[experiments]") {
  const Rect area{0, 0, 1000, 1000};
  AgentSpec agent;
  CHECK_FALSE(make_trajectory(Trajectory::kNone, area, agent).has_value());
  const auto front = make_trajectory(Trajectory::kFront, area, agent);
  REQUIRE(front.has_value());
  CHECK(front->waypoints().front() == Vec3{-0.3, -0.3, 1.0});
  CHECK(front->waypoints().back() == Vec3{1.3, -0.3, 1.0});
  const auto back = make_trajectory(Trajectory::kBack, area, agent);
  CHECK(back->waypoints().front().y == 1.3);
  const auto mfb = make_trajectory(Trajectory::kMiddleFB, area, agent);
  CHECK(mfb->waypoints().front().x == 0.5);
}

TEST_CASE("scene environment", "[experiments]") {
  SceneConfig s;
  const auto env = make_environment(s);
  CHECK(env.scatterers.size() == 8);
  for (const auto& sc : env.scatterers) {
    CHECK(std::abs(sc.gain()) >= 0.3);
    CHECK(std::abs(sc.gain()) <= 0.9);
    CHECK(sc.position().x >= -1.0);
    CHECK(sc.position().z <= 2.5);
  }
  CHECK(env.noise_std > 0.0);
  SceneConfig other = s;
  other.scatterer_seed = 2;
  CHECK(make_environment(other).scatterers[0].position() != env.scatterers[0].position());
  CHECK(simulate_grid(s, 1).size() == 5041);
}

TEST_CASE("front walker crosses the first user's direct path", "[experiments]") {
  const SceneConfig scene;
  const auto walker = make_trajectory(Trajectory::kFront, scene.grid.area, AgentSpec{});
  sim::Environment env;
  env.agents.push_back(*walker);
  bool blocked = false;
  for (double t = 0; t < 120; t += 0.5) {
    blocked = blocked || sim::los_blocked_fraction({0.25, 0.25, 1.0}, scene.array, env, t) >= kBlockedFraction;
  }
  CHECK(blocked);
}

TEST_CASE("nomadic run", "[experiments]") {
  const SceneConfig scene = small_scene();
  const auto env = make_environment(scene);
  const auto model = scrambled(small_model(scene), 2);
  const auto scenarios = default_scenarios(scene.grid.area);
  const auto report = run_nomadic(model, data::NormStats{1e-3}, scenarios, env, scene.array, scene.radio,
                                  scene.grid.user_height, AgentSpec{}, scene.grid.area, 5);
  CHECK(report.series.size() == 7 * 4);
  CHECK(report.scenario_names().front() == "reference");
  for (int u = 0; u < 4; ++u) {
    const auto& ref = report.at("reference", u);
    CHECK(ref.deviation_mm.size() == 240);
    CHECK(ref.mean_deviation_mm == 0.0);
    CHECK(std::all_of(ref.deviation_mm.begin(), ref.deviation_mm.end(), [](double d) { return d == 0.0; }));
    CHECK_FALSE(ref.ever_blocked);
  }
  CHECK(report.at("front", 0).ever_blocked);
  CHECK(report.at("front", 0).blocked.size() == 240);
  CHECK_FALSE(report.at("back", 0).ever_blocked);

  SECTION("same seed, same numbers") {
    const auto again = run_nomadic(model, data::NormStats{1e-3}, scenarios, env, scene.array, scene.radio,
                                   scene.grid.user_height, AgentSpec{}, scene.grid.area, 5);
    for (std::size_t i = 0; i < report.series.size(); ++i) {
      CHECK(again.series[i].deviation_mm == report.series[i].deviation_mm);
    }
  }
  SECTION("scenario list errors") {
    auto dup = scenarios;
    dup.push_back(scenarios.front());
    CHECK_THROWS_AS(run_nomadic(model, data::NormStats{1e-3}, dup, env, scene.array, scene.radio, 1.0, AgentSpec{},
                                scene.grid.area, 5),
                    ConfigError);
    std::vector<ScenarioSpec> no_static(scenarios.begin(), scenarios.end() - 1);
    CHECK_THROWS_AS(run_nomadic(model, data::NormStats{1e-3}, no_static, env, scene.array, scene.radio, 1.0,
                                AgentSpec{}, scene.grid.area, 5),
                    ConfigError);
  }
}

TEST_CASE("cross-environment evaluation", "[experiments]") {
  const SceneConfig scene = small_scene();
  const auto a = simulate_grid(scene, 3);
  REQUIRE(a.size() == 25);
  train::TrainConfig tc;
  tc.max_epochs = 2;
  tc.batch_size = 8;
  data::SplitSpec split;
  split.train_frac = 0.6;
  split.val_frac = 0.2;
  split.test_frac = 0.2;
  BaselineSpec base;
  base.draws = 100000;

  const auto same = run_cross_environment(a, a, small_model(scene), tc, split, 1, base);
  CHECK(same.b_test.mean_mm == same.a_test.mean_mm);
  CHECK(same.b_test.cdf == same.a_test.cdf);
  CHECK_THAT(same.centroid_baseline_mm, WithinAbs(382.6, 2.0));
  CHECK_THAT(same.random_pair_baseline_mm, WithinAbs(521.4, 2.5));

  auto shifted = a;
  shifted.back().label[0] += 1.0;
  CHECK_THROWS_AS(run_cross_environment(a, shifted, small_model(scene), tc, split, 1, base), GridMismatchError);
  auto shorter = a;
  shorter.pop_back();
  CHECK_THROWS_AS(run_cross_environment(a, shorter, small_model(scene), tc, split, 1, base), GridMismatchError);
}

TEST_CASE("config documents round trip", "[experiments][config]") {
  SceneConfig s = small_scene();
  s.blockers.push_back(sim::Blocker({Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{1, 0, 1}, Vec3{0, 0, 1}}));
  json j = s;
  const SceneConfig back = j.get<SceneConfig>();
  CHECK(json(back) == j);

  nn::ModelConfig m;
  m.fc_widths = {7, 5};
  CHECK(json(json(m).get<nn::ModelConfig>()) == json(m));
  train::TrainConfig t;
  t.loss = train::Loss::kMeanEuclidean;
  CHECK(json(json(t).get<train::TrainConfig>()) == json(t));

  json bad = json(m);
  bad["growth"] = 3;
  CHECK_THROWS_AS(bad.get<nn::ModelConfig>(), ConfigError);

  json doc = {{"train", json(t)}};
  apply_override(doc, "train.learning_rate=0.01");
  apply_override(doc, "train.loss=mean-squared-euclidean");
  const auto t2 = doc["train"].get<train::TrainConfig>();
  CHECK(t2.learning_rate == 0.01);
  CHECK(t2.loss == train::Loss::kMeanSquaredEuclidean);
  CHECK_THROWS_AS(apply_override(doc, "no-equals-sign"), ConfigError);
}

TEST_CASE("report tables and series files", "[experiments][report]") {
  metrics::ErrorSummary zero;
  zero.count = 3;
  zero.cdf = {0, 0, 0};
  const auto text = error_table({{"test", zero}}, 114.56, false);
  CHECK_THAT(text, ContainsSubstring("0.00 mm"));
  CHECK_THAT(text, ContainsSubstring("0.000 \xce\xbb"));
  const auto tsv = error_table({{"test", zero}}, 114.56, true);
  CHECK_THAT(tsv, ContainsSubstring("dataset\tn\tmean_mm\tmean_lambda"));

  metrics::DeviationReport rep;
  rep.reference_mm = {{0, 0}, {1, 1}};
  for (const char* name : {"reference", "front"}) {
    for (int u = 0; u < 2; ++u) {
      metrics::DeviationSeries s;
      s.scenario = name;
      s.user = u;
      s.times = {0.0, 0.5, 1.0};
      s.deviation_mm = {1.0 * u, 2.0, 3.5};
      s.mean_deviation_mm = (u + 5.5) / 3.0;
      s.blocked = {false, std::string(name) == "front" && u == 0, false};
      s.ever_blocked = s.blocked[1];
      rep.series.push_back(s);
    }
  }
  const auto dt = deviation_table(rep, false);
  CHECK_THAT(dt, ContainsSubstring("*"));
  CHECK_THAT(dt, ContainsSubstring("front"));

  const fs::path dir = fs::temp_directory_path() / ("csipos_series_" + std::to_string(std::random_device{}()));
  const auto files = write_deviation_series(rep, dir);
  REQUIRE(files.size() == 2);
  const auto table = read_deviation_series(dir / "series_front.tsv");
  CHECK(table.scenario == "front");
  CHECK(table.times == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(table.deviation_mm[1] == std::vector<double>{1.0, 2.0, 3.5});
  CHECK(table.blocked[0] == std::vector<bool>{false, true, false});
  fs::remove_all(dir);
}
