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

#include <array>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "csipos/geometry.hpp"

namespace csipos::sim {

inline constexpr double kSpeedOfLight = 299792458.0;
// Shortest path segment accepted before the 1/d terms are considered singular.
inline constexpr double kMinPathLength = 1e-6;

using Complex = std::complex<double>;
using Rng = std::mt19937_64;

/// Uniform rectangular array. Antenna m = row * num_cols + col sits at
/// origin + (col - (num_cols-1)/2) * spacing * horizontal
///        + (row - (num_rows-1)/2) * spacing * vertical,
/// where horizontal/vertical span the plane orthogonal to the boresight.
struct ArrayGeometry {
  int num_rows = 8;
  int num_cols = 8;
  double element_spacing = 0.0574;  // metres, half a wavelength at 2.61 GHz
  Vec3 origin{};
  Vec3 boresight{0.0, 1.0, 0.0};

  void validate() const;
  int num_antennas() const { return num_rows * num_cols; }
  std::vector<Vec3> antenna_positions() const;
};

struct RadioConfig {
  double carrier_freq = 2.61e9;     // Hz
  double bandwidth = 40e6;          // Hz
  int num_subcarriers = 100;
  double report_wavelength = 114.56;  // mm, used for lambda-normalised reporting only

  void validate() const;
};

class Scatterer {
 public:
  Scatterer(Vec3 position, Complex gain);

  Vec3 position() const { return position_; }
  Complex gain() const { return gain_; }

 private:
  Vec3 position_;
  Complex gain_;
};

/// Planar quadrilateral (corners in order) that blocks any path crossing it.
class Blocker {
 public:
  explicit Blocker(std::array<Vec3, 4> corners);

  const std::array<Vec3, 4>& corners() const { return corners_; }
  // True iff the open segment a->b crosses the rectangle.
  bool intersects(Vec3 a, Vec3 b) const;

 private:
  std::array<Vec3, 4> corners_;
};

/// Person walking back and forth along a polyline. The body is a vertical
/// cylinder standing on z = 0; it carries one scatterer at the interpolated
/// waypoint position (waypoint z sets the scatterer height).
class MovingAgent {
 public:
  MovingAgent(std::vector<Vec3> waypoints, double speed, double body_radius,
              double body_height = 1.8, Complex scatter_gain = {0.5, 0.0});

  const std::vector<Vec3>& waypoints() const { return waypoints_; }
  double speed() const { return speed_; }
  double body_radius() const { return body_radius_; }
  double body_height() const { return body_height_; }
  Complex scatter_gain() const { return scatter_gain_; }
  double path_length() const { return path_length_; }

  Vec3 position_at(double t) const;
  bool blocks(Vec3 a, Vec3 b, double t) const;

 private:
  std::vector<Vec3> waypoints_;
  double speed_;
  double body_radius_;
  double body_height_;
  Complex scatter_gain_;
  double path_length_ = 0.0;
};

struct Environment {
  std::vector<Scatterer> scatterers;
  std::vector<Blocker> blockers;
  std::vector<MovingAgent> agents;
  double noise_std = 0.0;
  Complex los_gain{1.0, 0.0};

  void validate() const;
};

/// H is stored row-major: H[m * num_subcarriers + k].
struct ChannelSample {
  int num_antennas = 0;
  int num_subcarriers = 0;
  std::vector<Complex> H;
  Point2 position{};  // mm
  double timestamp = 0.0;
  int user_id = 0;

  Complex at(int m, int k) const { return H[static_cast<std::size_t>(m) * num_subcarriers + k]; }
};

std::vector<double> subcarrier_frequencies(const RadioConfig& config);

double path_delay(Vec3 a, Vec3 b);

bool los_visible(Vec3 user, Vec3 antenna, const Environment& env, double t);

// Fraction of array elements whose direct path from `user` is blocked at t.
double los_blocked_fraction(Vec3 user, const ArrayGeometry& geom, const Environment& env, double t);

ChannelSample generate_sample(Vec3 user, const Environment& env, const ArrayGeometry& geom,
                              const RadioConfig& config, double t, Rng& rng, int user_id = 0);

struct GridSpec {
  Rect area;              // mm
  double spacing = 10.0;  // mm
  double user_height = 1.0;  // m
};

// Number of grid points along one axis of the given extent.
int grid_points(double extent, double spacing);

std::vector<ChannelSample> generate_grid_dataset(const GridSpec& grid, const Environment& env,
                                                 const ArrayGeometry& geom, const RadioConfig& config,
                                                 std::uint64_t seed);

std::vector<std::vector<ChannelSample>> generate_timeseries(const std::vector<Vec3>& users,
                                                            const Environment& env, double duration,
                                                            double dt, const ArrayGeometry& geom,
                                                            const RadioConfig& config,
                                                            std::uint64_t seed);

// Number of samples a time series of this duration holds.
int timeseries_length(double duration, double dt);

// Per-entry noise std that puts the noise ~snr_db below the mean noise-free
// channel power observed at `probe`.
double noise_std_for_snr(double snr_db, Vec3 probe, Environment env, const ArrayGeometry& geom,
                         const RadioConfig& config);

}  // namespace csipos::sim
