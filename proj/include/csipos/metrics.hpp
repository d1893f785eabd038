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
#include <span>
#include <string>
#include <vector>

#include "csipos/geometry.hpp"

namespace csipos::metrics {

inline constexpr double kReportWavelengthMm = 114.56;

double mean_error(std::span<const Point2> estimates, std::span<const Point2> truths);

/// mm expressed in wavelengths, rounded to 3 decimals.
double to_lambda(double mm, double report_wavelength = kReportWavelengthMm);

Point2 mean_error_vector(std::span<const Point2> estimates, std::span<const Point2> truths);

// Per-sample Euclidean errors, in input order.
std::vector<double> errors(std::span<const Point2> estimates, std::span<const Point2> truths);

struct ErrorSummary {
  std::size_t count = 0;
  double mean_mm = 0.0;
  double mean_lambda = 0.0;  // unrounded mean_mm / report_wavelength
  Point2 mean_vector_mm{};
  std::vector<double> cdf;  // sorted errors
};

ErrorSummary summarize(std::span<const Point2> estimates, std::span<const Point2> truths,
                       double report_wavelength = kReportWavelengthMm);

// Empirical quantile of the sorted error list, q in [0, 1], nearest rank.
double quantile(const ErrorSummary& summary, double q);

// Mean of a point set; equal points give that point exactly.
Point2 mean_point(std::span<const Point2> points);

/// Estimates of every user over one scenario: estimates[u][i] at times[i].
struct ScenarioEstimates {
  std::string name;
  std::vector<double> times;
  std::vector<std::vector<Point2>> estimates;
};

struct DeviationSeries {
  std::string scenario;
  int user = 0;
  std::vector<double> times;
  std::vector<double> deviation_mm;
  double mean_deviation_mm = 0.0;
  std::vector<bool> blocked;  // per timestep, empty when unknown
  bool ever_blocked = false;
};

struct DeviationReport {
  std::vector<Point2> reference_mm;  // per user
  std::vector<DeviationSeries> series;  // static scenario first, then scenario order; user-minor

  const DeviationSeries& at(const std::string& scenario, int user) const;
  std::vector<std::string> scenario_names() const;
};

/// Reference per user = mean of its static estimates. Every scenario, the
/// static one included, is reported as distances to that reference.
DeviationReport deviation_report(const ScenarioEstimates& static_run,
                                 const std::vector<ScenarioEstimates>& scenarios);

// Mean deviation over the timesteps whose blocked flag equals `blocked`;
// NaN when there are none.
double conditional_mean_deviation(const DeviationSeries& series, bool blocked);

/// Monte Carlo E|U - centre| for U uniform over the area.
double centroid_baseline(const Rect& area, long n_mc, std::uint64_t seed);
/// Monte Carlo E|U - V| for independent U, V uniform over the area.
double random_pair_baseline(const Rect& area, long n_mc, std::uint64_t seed);

}  // namespace csipos::metrics
