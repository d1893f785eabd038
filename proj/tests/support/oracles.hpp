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

// Independent reference computations used by the tests. None of these call
// into the library's numerical code.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "csipos/geometry.hpp"

namespace oracle {

using cplx = std::complex<double>;
constexpr double c0 = 299792458.0;

struct Pt {
  double x, y, z;
};

inline double dist(Pt a, Pt b) { return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z)); }

// Positions of a URA whose boresight is +y: columns along +x, rows along +z.
inline std::vector<Pt> ura_facing_y(int rows, int cols, double spacing, Pt origin) {
  std::vector<Pt> out;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out.push_back({origin.x + (c - 0.5 * (cols - 1)) * spacing, origin.y, origin.z + (r - 0.5 * (rows - 1)) * spacing});
  return out;
}

inline std::vector<double> band(double fc, double bw, int k) {
  std::vector<double> f;
  if (k == 1) return {fc};
  for (int i = 0; i < k; ++i) f.push_back(fc - bw / 2 + bw * i / (k - 1));
  return f;
}

struct Reflector {
  Pt p;
  cplx g;
};

/// Sums every propagation path one at a time: direct path then each
/// single-bounce reflector. Unobstructed environment, no noise.
inline std::vector<cplx> path_sum(Pt user, const std::vector<Pt>& antennas, const std::vector<Reflector>& refl,
                                  const std::vector<double>& freqs, cplx los_gain) {
  std::vector<cplx> H(antennas.size() * freqs.size(), cplx{0, 0});
  const cplx j{0.0, 1.0};
  for (std::size_t m = 0; m < antennas.size(); ++m) {
    for (std::size_t k = 0; k < freqs.size(); ++k) {
      const double d0 = dist(user, antennas[m]);
      H[m * freqs.size() + k] += los_gain / d0 * std::exp(-j * (2 * std::numbers::pi * freqs[k] * d0 / c0));
    }
    for (const auto& r : refl) {
      const double d1 = dist(user, r.p);
      const double d2 = dist(r.p, antennas[m]);
      for (std::size_t k = 0; k < freqs.size(); ++k) {
        H[m * freqs.size() + k] += r.g / (d1 * d2) * std::exp(-j * (2 * std::numbers::pi * freqs[k] * (d1 + d2) / c0));
      }
    }
  }
  return H;
}

/// Distance from point (px, py) to the 2-D segment a->b.
inline double point_segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double vx = bx - ax, vy = by - ay;
  const double len2 = vx * vx + vy * vy;
  double s = len2 > 0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
  s = std::fmin(1.0, std::fmax(0.0, s));
  const double qx = ax + s * vx - px, qy = ay + s * vy - py;
  return std::sqrt(qx * qx + qy * qy);
}

/// Whether a vertical cylinder (centre cx, cy, radius r, z in [0, h]) meets
/// the 3-D segment a->b: restrict the segment to its part inside the height
/// slab, then compare the planar distance to the axis with r. Returns the
/// signed clearance distance - r (negative = blocked); NaN when the segment
/// never enters the slab.
inline double cylinder_clearance(Pt a, Pt b, double cx, double cy, double r, double h) {
  double s0 = 0.0, s1 = 1.0;
  const double dz = b.z - a.z;
  if (std::abs(dz) < 1e-15) {
    if (a.z < 0.0 || a.z > h) return std::nan("");
  } else {
    double t0 = (0.0 - a.z) / dz, t1 = (h - a.z) / dz;
    if (t0 > t1) std::swap(t0, t1);
    s0 = std::fmax(s0, t0);
    s1 = std::fmin(s1, t1);
    if (!(s0 < s1)) return std::nan("");
  }
  const double ax = a.x + s0 * (b.x - a.x), ay = a.y + s0 * (b.y - a.y);
  const double bx = a.x + s1 * (b.x - a.x), by = a.y + s1 * (b.y - a.y);
  return point_segment_distance(cx, cy, ax, ay, bx, by) - r;
}

/// Back-and-forth walk on a 2-waypoint line at speed v: the travelled
/// distance folded as a triangular wave of period 2L.
inline Pt ping_pong(Pt w0, Pt w1, double v, double t) {
  const double L = dist(w0, w1);
  const double period = 2 * L;
  double s = v * t - period * std::floor(v * t / period);
  const double frac = (s <= L ? s : period - s) / L;
  return {w0.x + frac * (w1.x - w0.x), w0.y + frac * (w1.y - w0.y), w0.z + frac * (w1.z - w0.z)};
}

// Closed forms for the unit square: E|U - centre| and E|U - V|.
inline double unit_square_centroid_distance() {
  return (std::sqrt(2.0) + std::log(1.0 + std::sqrt(2.0))) / 6.0;
}
inline double unit_square_pair_distance() {
  return (2.0 + std::sqrt(2.0) + 5.0 * std::log(1.0 + std::sqrt(2.0))) / 15.0;
}

/// Plain Monte Carlo over the unit square with its own generator.
inline double mc_unit_square(bool pair, long draws, std::uint64_t seed) {
  std::minstd_rand rng(static_cast<std::uint_fast32_t>(seed | 1));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double sum = 0.0;
  for (long i = 0; i < draws; ++i) {
    const double x = u(rng), y = u(rng);
    if (pair) {
      const double x2 = u(rng), y2 = u(rng);
      sum += std::hypot(x - x2, y - y2);
    } else {
      sum += std::hypot(x - 0.5, y - 0.5);
    }
  }
  return sum / static_cast<double>(draws);
}

/// Midpoint-rule quadrature of E|U - centre| over a w x h rectangle.
inline double quadrature_centroid(double w, double h, int n) {
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const double x = (i + 0.5) / n * w - w / 2, y = (k + 0.5) / n * h - h / 2;
      sum += std::hypot(x, y);
    }
  return sum / (static_cast<double>(n) * n);
}

}  // namespace oracle
