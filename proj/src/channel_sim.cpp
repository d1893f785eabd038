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

#include "csipos/channel_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "csipos/error.hpp"

namespace csipos::sim {

namespace {

bool finite(Vec3 v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

// Restricts [lo, hi] to the parameter range where a + s*d lies in [zmin, zmax]
// along one coordinate. Returns false if empty.
bool clip_slab(double a, double d, double zmin, double zmax, double& lo, double& hi) {
  if (std::abs(d) < 1e-15) return a >= zmin && a <= zmax;
  double s0 = (zmin - a) / d;
  double s1 = (zmax - a) / d;
  if (s0 > s1) std::swap(s0, s1);
  lo = std::max(lo, s0);
  hi = std::min(hi, s1);
  return lo < hi;
}

bool segment_blocked(Vec3 a, Vec3 b, const Environment& env, double t, int skip_agent) {
  for (const auto& blocker : env.blockers) {
    if (blocker.intersects(a, b)) return true;
  }
  for (std::size_t i = 0; i < env.agents.size(); ++i) {
    if (static_cast<int>(i) == skip_agent) continue;
    if (env.agents[i].blocks(a, b, t)) return true;
  }
  return false;
}

double checked_distance(Vec3 a, Vec3 b) {
  const double d = distance(a, b);
  if (!(d >= kMinPathLength)) {
    throw CoincidentGeometryError("path segment shorter than " + std::to_string(kMinPathLength) +
                                  " m (d = " + std::to_string(d) + ")");
  }
  return d;
}

struct Path {
  Complex amplitude;
  double length;
};

}  // namespace

void ArrayGeometry::validate() const {
  if (num_rows < 1 || num_cols < 1) throw ConfigError("array must have at least one row and column");
  if (!(element_spacing > 0.0)) throw ConfigError("element_spacing must be positive");
  if (!finite(origin)) throw ConfigError("array origin must be finite");
  if (std::abs(norm(boresight) - 1.0) > 1e-9) throw ConfigError("boresight must have unit norm");
}

std::vector<Vec3> ArrayGeometry::antenna_positions() const {
  // In-plane axes: horizontal is orthogonal to both boresight and the world
  // vertical; a vertical boresight falls back to the world x axis.
  const Vec3 up{0.0, 0.0, 1.0};
  Vec3 horizontal = cross(boresight, up);
  if (norm(horizontal) < 1e-12) {
    horizontal = {1.0, 0.0, 0.0};
  } else {
    horizontal = (1.0 / norm(horizontal)) * horizontal;
  }
  const Vec3 vertical = cross(horizontal, boresight);

  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(num_antennas()));
  const double rc = 0.5 * (num_rows - 1);
  const double cc = 0.5 * (num_cols - 1);
  for (int r = 0; r < num_rows; ++r) {
    for (int c = 0; c < num_cols; ++c) {
      out.push_back(origin + ((c - cc) * element_spacing) * horizontal +
                    ((r - rc) * element_spacing) * vertical);
    }
  }
  return out;
}

void RadioConfig::validate() const {
  if (!(bandwidth > 0.0) || !(carrier_freq > bandwidth / 2.0)) {
    throw ConfigError("radio config requires carrier_freq > bandwidth/2 > 0");
  }
  if (num_subcarriers < 1) throw ConfigError("num_subcarriers must be >= 1");
  if (!(report_wavelength > 0.0)) throw ConfigError("report_wavelength must be positive");
}

Scatterer::Scatterer(Vec3 position, Complex gain) : position_(position), gain_(gain) {
  if (!finite(position)) throw ConfigError("scatterer position must be finite");
  if (!(std::abs(gain) <= 1.0)) throw ConfigError("scatterer |gain| must not exceed 1");
}

Blocker::Blocker(std::array<Vec3, 4> corners) : corners_(corners) {
  for (const auto& c : corners_) {
    if (!finite(c)) throw ConfigError("blocker corners must be finite");
  }
  const Vec3 n = cross(corners_[1] - corners_[0], corners_[3] - corners_[0]);
  const double nn = norm(n);
  if (nn < 1e-12) throw ConfigError("blocker corners are degenerate");
  const double off = dot(corners_[2] - corners_[0], (1.0 / nn) * n);
  if (std::abs(off) > 1e-9) throw ConfigError("blocker corners are not coplanar");
}

bool Blocker::intersects(Vec3 a, Vec3 b) const {
  const Vec3 n = cross(corners_[1] - corners_[0], corners_[3] - corners_[0]);
  const Vec3 d = b - a;
  const double denom = dot(n, d);
  if (std::abs(denom) < 1e-15 * norm(n) * std::max(norm(d), 1e-300)) return false;
  const double s = dot(n, corners_[0] - a) / denom;
  if (!(s > 0.0 && s < 1.0)) return false;
  const Vec3 q = a + s * d;
  // Inside test against each edge of the (convex) quadrilateral.
  int sign = 0;
  for (int i = 0; i < 4; ++i) {
    const Vec3 e = corners_[(i + 1) % 4] - corners_[i];
    const double side = dot(n, cross(e, q - corners_[i]));
    const int sgn = side > 0 ? 1 : (side < 0 ? -1 : 0);
    if (sgn == 0) continue;
    if (sign == 0) sign = sgn;
    if (sgn != sign) return false;
  }
  return true;
}

MovingAgent::MovingAgent(std::vector<Vec3> waypoints, double speed, double body_radius,
                         double body_height, Complex scatter_gain)
    : waypoints_(std::move(waypoints)),
      speed_(speed),
      body_radius_(body_radius),
      body_height_(body_height),
      scatter_gain_(scatter_gain) {
  if (waypoints_.size() < 2) throw ConfigError("moving agent needs at least 2 waypoints");
  if (!(speed_ > 0.0)) throw ConfigError("moving agent speed must be positive");
  if (!(body_radius_ > 0.0)) throw ConfigError("moving agent body_radius must be positive");
  if (!(body_height_ > 0.0)) throw ConfigError("moving agent body_height must be positive");
  if (!(std::abs(scatter_gain_) <= 1.0)) throw ConfigError("agent scatter |gain| must not exceed 1");
  for (std::size_t i = 0; i + 1 < waypoints_.size(); ++i) {
    path_length_ += distance(waypoints_[i], waypoints_[i + 1]);
  }
  if (!(path_length_ > 0.0)) throw ConfigError("moving agent path has zero length");
}

Vec3 MovingAgent::position_at(double t) const {
  // Back and forth: distance travelled folds onto [0, L] as a triangular wave.
  double s = std::fmod(speed_ * t, 2.0 * path_length_);
  if (s < 0.0) s += 2.0 * path_length_;
  if (s > path_length_) s = 2.0 * path_length_ - s;
  for (std::size_t i = 0; i + 1 < waypoints_.size(); ++i) {
    const double seg = distance(waypoints_[i], waypoints_[i + 1]);
    if (s <= seg || i + 2 == waypoints_.size()) {
      const double frac = seg > 0.0 ? std::min(s / seg, 1.0) : 0.0;
      return waypoints_[i] + frac * (waypoints_[i + 1] - waypoints_[i]);
    }
    s -= seg;
  }
  return waypoints_.back();
}

bool MovingAgent::blocks(Vec3 a, Vec3 b, double t) const {
  const Vec3 c = position_at(t);
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double ax = a.x - c.x;
  const double ay = a.y - c.y;
  const double r2 = body_radius_ * body_radius_;

  double lo = 0.0;
  double hi = 1.0;
  const double qa = dx * dx + dy * dy;
  if (qa < 1e-30) {
    if (ax * ax + ay * ay >= r2) return false;
  } else {
    const double qb = 2.0 * (dx * ax + dy * ay);
    const double qc = ax * ax + ay * ay - r2;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc <= 0.0) return false;
    const double root = std::sqrt(disc);
    lo = std::max(lo, (-qb - root) / (2.0 * qa));
    hi = std::min(hi, (-qb + root) / (2.0 * qa));
    if (!(lo < hi)) return false;
  }
  return clip_slab(a.z, b.z - a.z, 0.0, body_height_, lo, hi);
}

void Environment::validate() const {
  if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be >= 0");
  if (!std::isfinite(los_gain.real()) || !std::isfinite(los_gain.imag())) {
    throw ConfigError("los_gain must be finite");
  }
}

std::vector<double> subcarrier_frequencies(const RadioConfig& config) {
  const int k_count = config.num_subcarriers;
  if (k_count == 1) return {config.carrier_freq};
  std::vector<double> f(static_cast<std::size_t>(k_count));
  const double f0 = config.carrier_freq - config.bandwidth / 2.0;
  const double step = config.bandwidth / (k_count - 1);
  for (int k = 0; k < k_count; ++k) f[k] = f0 + k * step;
  f.back() = config.carrier_freq + config.bandwidth / 2.0;
  return f;
}

double path_delay(Vec3 a, Vec3 b) { return distance(a, b) / kSpeedOfLight; }

bool los_visible(Vec3 user, Vec3 antenna, const Environment& env, double t) {
  return !segment_blocked(user, antenna, env, t, -1);
}

double los_blocked_fraction(Vec3 user, const ArrayGeometry& geom, const Environment& env, double t) {
  const auto antennas = geom.antenna_positions();
  int blocked = 0;
  for (const auto& p : antennas) {
    if (!los_visible(user, p, env, t)) ++blocked;
  }
  return static_cast<double>(blocked) / static_cast<double>(antennas.size());
}

ChannelSample generate_sample(Vec3 user, const Environment& env, const ArrayGeometry& geom,
                              const RadioConfig& config, double t, Rng& rng, int user_id) {
  const auto freqs = subcarrier_frequencies(config);
  const auto antennas = geom.antenna_positions();
  const int m_count = static_cast<int>(antennas.size());
  const int k_count = config.num_subcarriers;

  struct PointScatterer {
    Vec3 position;
    Complex gain;
    int agent;  // owning agent index, -1 for static scatterers
  };
  std::vector<PointScatterer> points;
  points.reserve(env.scatterers.size() + env.agents.size());
  for (const auto& s : env.scatterers) points.push_back({s.position(), s.gain(), -1});
  for (std::size_t i = 0; i < env.agents.size(); ++i) {
    points.push_back({env.agents[i].position_at(t), env.agents[i].scatter_gain(), static_cast<int>(i)});
  }

  // User-to-scatterer legs do not depend on the antenna.
  std::vector<double> d1(points.size());
  std::vector<char> leg1_open(points.size());
  for (std::size_t s = 0; s < points.size(); ++s) {
    d1[s] = checked_distance(user, points[s].position);
    leg1_open[s] = !segment_blocked(user, points[s].position, env, t, points[s].agent);
  }

  ChannelSample out;
  out.num_antennas = m_count;
  out.num_subcarriers = k_count;
  out.H.assign(static_cast<std::size_t>(m_count) * k_count, Complex{});
  out.position = {user.x * 1000.0, user.y * 1000.0};
  out.timestamp = t;
  out.user_id = user_id;

  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  std::vector<Path> paths;
  for (int m = 0; m < m_count; ++m) {
    const Vec3 ant = antennas[static_cast<std::size_t>(m)];
    paths.clear();
    const double d0 = checked_distance(user, ant);
    if (env.los_gain != Complex{} && los_visible(user, ant, env, t)) {
      paths.push_back({env.los_gain / d0, d0});
    }
    for (std::size_t s = 0; s < points.size(); ++s) {
      const double d2 = checked_distance(points[s].position, ant);
      if (!leg1_open[s] || points[s].gain == Complex{}) continue;
      if (segment_blocked(points[s].position, ant, env, t, points[s].agent)) continue;
      paths.push_back({points[s].gain / (d1[s] * d2), d1[s] + d2});
    }
    Complex* row = out.H.data() + static_cast<std::size_t>(m) * k_count;
    for (int k = 0; k < k_count; ++k) {
      Complex acc{};
      for (const auto& p : paths) {
        const double phase = -kTwoPi * freqs[k] * p.length / kSpeedOfLight;
        acc += p.amplitude * Complex(std::cos(phase), std::sin(phase));
      }
      row[k] = acc;
    }
  }

  if (env.noise_std > 0.0) {
    std::normal_distribution<double> normal(0.0, env.noise_std / std::numbers::sqrt2);
    for (auto& h : out.H) {
      const double re = normal(rng);
      const double im = normal(rng);
      h += Complex(re, im);
    }
  }
  return out;
}

int grid_points(double extent, double spacing) {
  if (!std::isfinite(extent) || extent < 0.0) return 0;
  return static_cast<int>(std::floor(extent / spacing + 1.0 + 1e-9));
}

std::vector<ChannelSample> generate_grid_dataset(const GridSpec& grid, const Environment& env,
                                                 const ArrayGeometry& geom, const RadioConfig& config,
                                                 std::uint64_t seed) {
  geom.validate();
  config.validate();
  env.validate();
  if (!(grid.spacing > 0.0)) throw ConfigError("grid spacing must be positive");
  const int nx = grid_points(grid.area.width, grid.spacing);
  const int ny = grid_points(grid.area.height, grid.spacing);
  if (nx < 1 || ny < 1) throw EmptyGridError("grid area yields no sample points");

  const long total = static_cast<long>(nx) * ny;
  std::vector<ChannelSample> out(static_cast<std::size_t>(total));
  // Exceptions cannot leave an OpenMP region; the first one is rethrown after.
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < total; ++i) {
    try {
      const long iy = i / nx;
      const long ix = i % nx;
      const double x_mm = grid.area.x0 + static_cast<double>(ix) * grid.spacing;
      const double y_mm = grid.area.y0 + static_cast<double>(iy) * grid.spacing;
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
      auto sample = generate_sample({x_mm / 1000.0, y_mm / 1000.0, grid.user_height}, env, geom,
                                    config, 0.0, rng, 0);
      sample.position = {x_mm, y_mm};
      out[static_cast<std::size_t>(i)] = std::move(sample);
    } catch (...) {
#pragma omp critical(csipos_grid_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

int timeseries_length(double duration, double dt) {
  if (!(duration > 0.0) || !(dt > 0.0)) throw ConfigError("duration and dt must be positive");
  return static_cast<int>(std::floor(duration / dt + 1e-9));
}

std::vector<std::vector<ChannelSample>> generate_timeseries(const std::vector<Vec3>& users,
                                                            const Environment& env, double duration,
                                                            double dt, const ArrayGeometry& geom,
                                                            const RadioConfig& config,
                                                            std::uint64_t seed) {
  geom.validate();
  config.validate();
  env.validate();
  const int n = timeseries_length(duration, dt);
  std::vector<std::vector<ChannelSample>> out(users.size());
  for (auto& series : out) series.resize(static_cast<std::size_t>(n));

  const long total = static_cast<long>(users.size()) * n;
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 8)
  for (long idx = 0; idx < total; ++idx) {
    try {
      const std::size_t u = static_cast<std::size_t>(idx / n);
      const int i = static_cast<int>(idx % n);
      Rng rng(derive_seed(derive_seed(seed, u), static_cast<std::uint64_t>(i)));
      out[u][static_cast<std::size_t>(i)] =
          generate_sample(users[u], env, geom, config, i * dt, rng, static_cast<int>(u));
    } catch (...) {
#pragma omp critical(csipos_series_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

double noise_std_for_snr(double snr_db, Vec3 probe, Environment env, const ArrayGeometry& geom,
                         const RadioConfig& config) {
  env.noise_std = 0.0;
  Rng rng(0);
  const auto sample = generate_sample(probe, env, geom, config, 0.0, rng);
  double power = 0.0;
  for (const auto& h : sample.H) power += std::norm(h);
  power /= static_cast<double>(sample.H.size());
  return std::sqrt(power / std::pow(10.0, snr_db / 10.0));
}

}  // namespace csipos::sim
