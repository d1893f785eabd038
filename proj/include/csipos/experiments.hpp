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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "csipos/channel_sim.hpp"
#include "csipos/dataset.hpp"
#include "csipos/metrics.hpp"
#include "csipos/posnet.hpp"
#include "csipos/trainer.hpp"

namespace csipos::exp {

enum class Trajectory { kBack, kLeft, kRight, kFront, kMiddleLR, kMiddleFB, kNone };

const char* to_string(Trajectory trajectory);
Trajectory trajectory_from_string(const std::string& name);

struct ScenarioSpec {
  std::string name;
  Trajectory trajectory = Trajectory::kNone;
  double duration = 120.0;  // s
  double dt = 0.5;          // s
  std::vector<Point2> users_mm;

  void validate() const;
};

// Walker placement and body. Distances in metres.
struct AgentSpec {
  double margin = 0.3;  // offset of the walking line from the user area edge
  double speed = 0.5;   // m/s
  double body_radius = 0.2;
  double body_height = 1.8;
  double scatterer_height = 1.0;
  sim::Complex scatter_gain{0.5, 0.0};
};

// Four users at the centres of the area's quadrants.
std::vector<Point2> quadrant_users(const Rect& area_mm);

// The six walking scenarios plus the static reference, in that order.
std::vector<ScenarioSpec> default_scenarios(const Rect& area_mm, double duration = 120.0, double dt = 0.5);

/// Walker for the trajectory relative to the user area; none for kNone.
/// back/front run along the far/near edge (seen from the array), left/right
/// along the sides, middle-lr/middle-fb through the centre.
std::optional<sim::MovingAgent> make_trajectory(Trajectory trajectory, const Rect& area_mm, const AgentSpec& agent);

/// Static room: array, radio, user grid and a seeded random scatterer set.
struct SceneConfig {
  sim::ArrayGeometry array{8, 8, 0.0574, {0.5, -1.5, 1.25}, {0.0, 1.0, 0.0}};
  sim::RadioConfig radio{2.61e9, 40e6, 20, 114.56};
  sim::GridSpec grid{{0.0, 0.0, 1000.0, 1000.0}, 1000.0 / 70.0, 1.0};
  int num_scatterers = 8;
  double gain_min = 0.3;
  double gain_max = 0.9;
  // Scatterers are drawn uniformly inside this box (metres).
  Vec3 scatter_box_min{-1.0, -0.5, 0.0};
  Vec3 scatter_box_max{2.0, 2.5, 2.5};
  std::uint64_t scatterer_seed = 1;
  double snr_db = 20.0;
  std::optional<double> noise_std;  // overrides snr_db when set
  std::vector<sim::Blocker> blockers;

  void validate() const;
};

sim::Environment make_environment(const SceneConfig& scene);

data::Records simulate_grid(const SceneConfig& scene, std::uint64_t seed);

struct BenchmarkResult {
  metrics::ErrorSummary test;
  train::TrainResult trained;
  data::NormStats norm;
  data::SplitIndices split;
};

/// Splits, fits the normaliser on train, trains and reports the test error.
/// The model input shape follows the dataset.
BenchmarkResult run_benchmark(const data::Records& dataset, nn::ModelConfig model_config,
                              const train::TrainConfig& train_config, const data::SplitSpec& split,
                              std::uint64_t model_seed, double report_wavelength = metrics::kReportWavelengthMm,
                              std::ostream* progress = nullptr);

struct CrossEnvironmentResult {
  metrics::ErrorSummary a_test;
  metrics::ErrorSummary b_test;
  Point2 b_error_vector_mm{};
  double centroid_baseline_mm = 0.0;
  double random_pair_baseline_mm = 0.0;
};

struct BaselineSpec {
  Rect area_mm{0.0, 0.0, 1000.0, 1000.0};
  long draws = 1000000;
  std::uint64_t seed = 7;
};

/// Evaluates an environment-A model on B's records at A's test indices.
CrossEnvironmentResult run_cross_environment(const BenchmarkResult& trained_on_a, const data::Records& env_a,
                                             const data::Records& env_b, const BaselineSpec& baseline,
                                             double report_wavelength = metrics::kReportWavelengthMm);

CrossEnvironmentResult run_cross_environment(const data::Records& env_a, const data::Records& env_b,
                                             const nn::ModelConfig& model_config,
                                             const train::TrainConfig& train_config, const data::SplitSpec& split,
                                             std::uint64_t model_seed, const BaselineSpec& baseline,
                                             double report_wavelength = metrics::kReportWavelengthMm,
                                             std::ostream* progress = nullptr);

// Share of array elements that must lose the direct path for a timestep to
// count as blocked.
inline constexpr double kBlockedFraction = 0.5;

/// Runs every scenario as a time series per user, estimates positions and
/// reports deviations from the static scenario's mean estimate, with
/// per-timestep blocked flags.
metrics::DeviationReport run_nomadic(const nn::PosNet<float>& model, const data::NormStats& norm,
                                     const std::vector<ScenarioSpec>& scenarios, const sim::Environment& env,
                                     const sim::ArrayGeometry& geom, const sim::RadioConfig& radio,
                                     double user_height, const AgentSpec& agent, const Rect& area_mm,
                                     std::uint64_t seed);

}  // namespace csipos::exp
