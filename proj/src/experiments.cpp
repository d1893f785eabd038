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

#include "csipos/experiments.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "csipos/error.hpp"

namespace csipos::exp {

namespace {

struct TrajectoryName {
  Trajectory trajectory;
  const char* name;
};

constexpr TrajectoryName kTrajectoryNames[] = {
    {Trajectory::kBack, "back"},         {Trajectory::kLeft, "left"},
    {Trajectory::kRight, "right"},       {Trajectory::kFront, "front"},
    {Trajectory::kMiddleLR, "middle-lr"}, {Trajectory::kMiddleFB, "middle-fb"},
    {Trajectory::kNone, "none"},
};

std::vector<Point2> labels_of(const data::Records& records) {
  std::vector<Point2> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.label);
  return out;
}

}  // namespace

const char* to_string(Trajectory trajectory) {
  for (const auto& t : kTrajectoryNames) {
    if (t.trajectory == trajectory) return t.name;
  }
  return "none";
}

Trajectory trajectory_from_string(const std::string& name) {
  for (const auto& t : kTrajectoryNames) {
    if (name == t.name) return t.trajectory;
  }
  throw ConfigError("unknown trajectory '" + name + "'");
}

void ScenarioSpec::validate() const {
  if (name.empty()) throw ConfigError("scenario needs a name");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("scenario '" + name + "': dt must be positive");
  if (!(duration >= dt)) throw ConfigError("scenario '" + name + "': duration must cover at least one step");
  if (users_mm.empty()) throw ConfigError("scenario '" + name + "' has no users");
}

std::vector<Point2> quadrant_users(const Rect& a) {
  const double qx = 0.25 * a.width;
  const double qy = 0.25 * a.height;
  return {{a.x0 + qx, a.y0 + qy},
          {a.x0 + 3 * qx, a.y0 + qy},
          {a.x0 + qx, a.y0 + 3 * qy},
          {a.x0 + 3 * qx, a.y0 + 3 * qy}};
}

std::vector<ScenarioSpec> default_scenarios(const Rect& area_mm, double duration, double dt) {
  const auto users = quadrant_users(area_mm);
  std::vector<ScenarioSpec> out;
  for (auto t : {Trajectory::kBack, Trajectory::kLeft, Trajectory::kRight, Trajectory::kFront,
                 Trajectory::kMiddleLR, Trajectory::kMiddleFB}) {
    out.push_back({to_string(t), t, duration, dt, users});
  }
  out.push_back({"reference", Trajectory::kNone, duration, dt, users});
  return out;
}

std::optional<sim::MovingAgent> make_trajectory(Trajectory trajectory, const Rect& area_mm, const AgentSpec& agent) {
  if (trajectory == Trajectory::kNone) return std::nullopt;
  const double x0 = area_mm.x0 / 1000.0;
  const double y0 = area_mm.y0 / 1000.0;
  const double x1 = x0 + area_mm.width / 1000.0;
  const double y1 = y0 + area_mm.height / 1000.0;
  const double xm = 0.5 * (x0 + x1);
  const double ym = 0.5 * (y0 + y1);
  const double m = agent.margin;
  const double z = agent.scatterer_height;
  Vec3 a;
  Vec3 b;
  switch (trajectory) {
    case Trajectory::kBack:
      a = {x0 - m, y1 + m, z};
      b = {x1 + m, y1 + m, z};
      break;
    case Trajectory::kFront:
      a = {x0 - m, y0 - m, z};
      b = {x1 + m, y0 - m, z};
      break;
    case Trajectory::kLeft:
      a = {x0 - m, y0 - m, z};
      b = {x0 - m, y1 + m, z};
      break;
    case Trajectory::kRight:
      a = {x1 + m, y0 - m, z};
      b = {x1 + m, y1 + m, z};
      break;
    case Trajectory::kMiddleLR:
      a = {x0 - m, ym, z};
      b = {x1 + m, ym, z};
      break;
    case Trajectory::kMiddleFB:
      a = {xm, y0 - m, z};
      b = {xm, y1 + m, z};
      break;
    case Trajectory::kNone:
      break;
  }
  return sim::MovingAgent({a, b}, agent.speed, agent.body_radius, agent.body_height, agent.scatter_gain);
}

void SceneConfig::validate() const {
  array.validate();
  radio.validate();
  if (num_scatterers < 0) throw ConfigError("num_scatterers must be >= 0");
  if (!(gain_min >= 0.0 && gain_min <= gain_max && gain_max <= 1.0)) {
    throw ConfigError("scatterer gains must satisfy 0 <= gain_min <= gain_max <= 1");
  }
  if (!(scatter_box_min.x <= scatter_box_max.x && scatter_box_min.y <= scatter_box_max.y &&
        scatter_box_min.z <= scatter_box_max.z)) {
    throw ConfigError("scatter box min must not exceed max");
  }
  if (noise_std && !(*noise_std >= 0.0)) throw ConfigError("noise_std must be >= 0");
  if (!std::isfinite(snr_db)) throw ConfigError("snr_db must be finite");
}

sim::Environment make_environment(const SceneConfig& scene) {
  scene.validate();
  sim::Environment env;
  std::mt19937_64 rng(scene.scatterer_seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Vec3 lo = scene.scatter_box_min;
  const Vec3 hi = scene.scatter_box_max;
  for (int i = 0; i < scene.num_scatterers; ++i) {
    const double x = lo.x + (hi.x - lo.x) * u(rng);
    const double y = lo.y + (hi.y - lo.y) * u(rng);
    const double z = lo.z + (hi.z - lo.z) * u(rng);
    const double mag = scene.gain_min + (scene.gain_max - scene.gain_min) * u(rng);
    const double phase = 2.0 * std::numbers::pi * u(rng);
    env.scatterers.emplace_back(Vec3{x, y, z}, std::polar(mag, phase));
  }
  env.blockers = scene.blockers;
  if (scene.noise_std) {
    env.noise_std = *scene.noise_std;
  } else {
    const Point2 c = scene.grid.area.centre();
    const Vec3 probe{c[0] / 1000.0, c[1] / 1000.0, scene.grid.user_height};
    env.noise_std = sim::noise_std_for_snr(scene.snr_db, probe, env, scene.array, scene.radio);
  }
  return env;
}

data::Records simulate_grid(const SceneConfig& scene, std::uint64_t seed) {
  const auto env = make_environment(scene);
  return data::to_records(sim::generate_grid_dataset(scene.grid, env, scene.array, scene.radio, seed));
}

BenchmarkResult run_benchmark(const data::Records& dataset, nn::ModelConfig model_config,
                              const train::TrainConfig& train_config, const data::SplitSpec& split,
                              std::uint64_t model_seed, double report_wavelength, std::ostream* progress) {
  if (dataset.empty()) throw EmptyInputError("benchmark dataset is empty");
  model_config.input_rows = dataset.front().features.antennas;
  model_config.input_cols = dataset.front().features.subcarriers;

  BenchmarkResult result{{}, {nn::PosNet<float>(model_config, model_seed), {}}, {}, {}};
  result.split = data::split_indices(dataset.size(), split);
  auto train_set = data::select(dataset, result.split.train);
  auto val_set = data::select(dataset, result.split.val);
  auto test_set = data::select(dataset, result.split.test);
  result.norm = data::fit_normaliser(train_set);
  data::apply_normaliser_in_place(train_set, result.norm);
  data::apply_normaliser_in_place(val_set, result.norm);
  data::apply_normaliser_in_place(test_set, result.norm);

  result.trained = train::train(std::move(result.trained.model), train_set, val_set, train_config, progress);
  const auto estimates = train::predict(result.trained.model, test_set);
  result.test = metrics::summarize(estimates, labels_of(test_set), report_wavelength);
  return result;
}

CrossEnvironmentResult run_cross_environment(const BenchmarkResult& trained_on_a, const data::Records& env_a,
                                             const data::Records& env_b, const BaselineSpec& baseline,
                                             double report_wavelength) {
  if (env_a.size() != env_b.size()) throw GridMismatchError("environments hold different sample counts");
  for (std::size_t i = 0; i < env_a.size(); ++i) {
    if (env_a[i].label != env_b[i].label) {
      throw GridMismatchError("environments disagree on the position of sample " + std::to_string(i));
    }
  }
  CrossEnvironmentResult out;
  const auto& model = trained_on_a.trained.model;
  auto test_a = data::apply_normaliser(data::select(env_a, trained_on_a.split.test), trained_on_a.norm);
  auto test_b = data::apply_normaliser(data::select(env_b, trained_on_a.split.test), trained_on_a.norm);
  const auto truths = labels_of(test_a);
  out.a_test = metrics::summarize(train::predict(model, test_a), truths, report_wavelength);
  out.b_test = metrics::summarize(train::predict(model, test_b), truths, report_wavelength);
  out.b_error_vector_mm = out.b_test.mean_vector_mm;
  out.centroid_baseline_mm = metrics::centroid_baseline(baseline.area_mm, baseline.draws, baseline.seed);
  out.random_pair_baseline_mm =
      metrics::random_pair_baseline(baseline.area_mm, baseline.draws, derive_seed(baseline.seed, 1));
  return out;
}

CrossEnvironmentResult run_cross_environment(const data::Records& env_a, const data::Records& env_b,
                                             const nn::ModelConfig& model_config,
                                             const train::TrainConfig& train_config, const data::SplitSpec& split,
                                             std::uint64_t model_seed, const BaselineSpec& baseline,
                                             double report_wavelength, std::ostream* progress) {
  if (env_a.size() != env_b.size()) throw GridMismatchError("environments hold different sample counts");
  const auto trained =
      run_benchmark(env_a, model_config, train_config, split, model_seed, report_wavelength, progress);
  return run_cross_environment(trained, env_a, env_b, baseline, report_wavelength);
}

metrics::DeviationReport run_nomadic(const nn::PosNet<float>& model, const data::NormStats& norm,
                                     const std::vector<ScenarioSpec>& scenarios, const sim::Environment& env,
                                     const sim::ArrayGeometry& geom, const sim::RadioConfig& radio,
                                     double user_height, const AgentSpec& agent, const Rect& area_mm,
                                     std::uint64_t seed) {
  if (scenarios.empty()) throw ConfigError("no scenarios given");
  const ScenarioSpec* static_spec = nullptr;
  for (const auto& s : scenarios) {
    s.validate();
    for (const auto& other : scenarios) {
      if (&other != &s && other.name == s.name) throw ConfigError("duplicate scenario name '" + s.name + "'");
    }
    if (s.trajectory == Trajectory::kNone && !static_spec) static_spec = &s;
  }
  if (!static_spec) throw ConfigError("scenario list needs a static reference (trajectory 'none')");

  std::vector<metrics::ScenarioEstimates> runs;
  std::vector<std::vector<std::vector<bool>>> blocked;  // [scenario][user][t]
  for (std::size_t si = 0; si < scenarios.size(); ++si) {
    const auto& spec = scenarios[si];
    sim::Environment scene_env = env;
    if (auto walker = make_trajectory(spec.trajectory, area_mm, agent)) scene_env.agents.push_back(*walker);

    std::vector<Vec3> users;
    for (const auto& p : spec.users_mm) users.push_back({p[0] / 1000.0, p[1] / 1000.0, user_height});
    const auto series =
        sim::generate_timeseries(users, scene_env, spec.duration, spec.dt, geom, radio, derive_seed(seed, si));

    metrics::ScenarioEstimates run;
    run.name = spec.name;
    std::vector<std::vector<bool>> flags(users.size());
    for (std::size_t u = 0; u < users.size(); ++u) {
      auto records = data::apply_normaliser(data::to_records(series[u]), norm);
      run.estimates.push_back(train::predict(model, records));
      if (u == 0) {
        for (const auto& r : series[u]) run.times.push_back(r.timestamp);
      }
      for (const auto& r : series[u]) {
        flags[u].push_back(sim::los_blocked_fraction(users[u], geom, scene_env, r.timestamp) >= kBlockedFraction);
      }
    }
    runs.push_back(std::move(run));
    blocked.push_back(std::move(flags));
  }

  const std::size_t static_index = static_cast<std::size_t>(static_spec - scenarios.data());
  auto report = metrics::deviation_report(runs[static_index], runs);
  for (auto& s : report.series) {
    for (std::size_t si = 0; si < scenarios.size(); ++si) {
      if (scenarios[si].name != s.scenario) continue;
      s.blocked = blocked[si][static_cast<std::size_t>(s.user)];
      for (bool b : s.blocked) s.ever_blocked = s.ever_blocked || b;
      break;
    }
  }
  return report;
}

}  // namespace csipos::exp
