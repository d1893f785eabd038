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

#include "csipos/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "csipos/error.hpp"

namespace csipos::metrics {

namespace {

void check_pair(std::span<const Point2> estimates, std::span<const Point2> truths) {
  if (estimates.size() != truths.size()) {
    throw LengthMismatchError("estimates (" + std::to_string(estimates.size()) + ") and truths (" +
                              std::to_string(truths.size()) + ") differ in length");
  }
  if (estimates.empty()) throw EmptyInputError("no estimates given");
}

double point_distance(const Point2& a, const Point2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

template <typename Draw>
double monte_carlo(long n_mc, std::uint64_t seed, Draw draw) {
  if (n_mc < 1) throw ConfigError("n_mc must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double sum = 0.0;
  for (long i = 0; i < n_mc; ++i) sum += draw(rng, u);
  return sum / static_cast<double>(n_mc);
}

}  // namespace

double mean_error(std::span<const Point2> estimates, std::span<const Point2> truths) {
  check_pair(estimates, truths);
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) sum += point_distance(estimates[i], truths[i]);
  return sum / static_cast<double>(estimates.size());
}

double to_lambda(double mm, double report_wavelength) {
  if (!(report_wavelength > 0.0)) throw ConfigError("report_wavelength must be positive");
  return std::round(mm / report_wavelength * 1000.0) / 1000.0;
}

Point2 mean_error_vector(std::span<const Point2> estimates, std::span<const Point2> truths) {
  check_pair(estimates, truths);
  Point2 sum{0.0, 0.0};
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    sum[0] += estimates[i][0] - truths[i][0];
    sum[1] += estimates[i][1] - truths[i][1];
  }
  const double n = static_cast<double>(estimates.size());
  return {sum[0] / n, sum[1] / n};
}

std::vector<double> errors(std::span<const Point2> estimates, std::span<const Point2> truths) {
  check_pair(estimates, truths);
  std::vector<double> out(estimates.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = point_distance(estimates[i], truths[i]);
  return out;
}

ErrorSummary summarize(std::span<const Point2> estimates, std::span<const Point2> truths,
                       double report_wavelength) {
  if (!(report_wavelength > 0.0)) throw ConfigError("report_wavelength must be positive");
  ErrorSummary s;
  s.cdf = errors(estimates, truths);
  s.count = s.cdf.size();
  s.mean_mm = mean_error(estimates, truths);
  s.mean_lambda = s.mean_mm / report_wavelength;
  s.mean_vector_mm = mean_error_vector(estimates, truths);
  std::sort(s.cdf.begin(), s.cdf.end());
  return s;
}

double quantile(const ErrorSummary& summary, double q) {
  if (summary.cdf.empty()) throw EmptyInputError("empty error distribution");
  q = std::clamp(q, 0.0, 1.0);
  const auto n = summary.cdf.size();
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return summary.cdf[rank - 1];
}

Point2 mean_point(std::span<const Point2> points) {
  if (points.empty()) throw EmptyInputError("mean of no points");
  const Point2 first = points.front();
  Point2 offset{0.0, 0.0};
  for (const auto& p : points) {
    offset[0] += p[0] - first[0];
    offset[1] += p[1] - first[1];
  }
  const double n = static_cast<double>(points.size());
  return {first[0] + offset[0] / n, first[1] + offset[1] / n};
}

const DeviationSeries& DeviationReport::at(const std::string& scenario, int user) const {
  for (const auto& s : series) {
    if (s.scenario == scenario && s.user == user) return s;
  }
  throw ConfigError("no deviation series for scenario '" + scenario + "' user " + std::to_string(user));
}

std::vector<std::string> DeviationReport::scenario_names() const {
  std::vector<std::string> names;
  for (const auto& s : series) {
    if (std::find(names.begin(), names.end(), s.scenario) == names.end()) names.push_back(s.scenario);
  }
  return names;
}

DeviationReport deviation_report(const ScenarioEstimates& static_run,
                                 const std::vector<ScenarioEstimates>& scenarios) {
  DeviationReport report;
  if (static_run.estimates.empty()) throw EmptyInputError("static run has no users");
  for (const auto& per_user : static_run.estimates) {
    if (per_user.empty()) throw EmptyInputError("static run has a user without estimates");
    report.reference_mm.push_back(mean_point(per_user));
  }
  const auto users = static_run.estimates.size();

  auto add = [&](const ScenarioEstimates& run) {
    if (run.estimates.size() != users) {
      throw LengthMismatchError("scenario '" + run.name + "' has a different user count");
    }
    for (std::size_t u = 0; u < users; ++u) {
      const auto& est = run.estimates[u];
      if (est.empty()) throw EmptyInputError("scenario '" + run.name + "' has a user without estimates");
      if (!run.times.empty() && run.times.size() != est.size()) {
        throw LengthMismatchError("scenario '" + run.name + "' times and estimates differ in length");
      }
      DeviationSeries s;
      s.scenario = run.name;
      s.user = static_cast<int>(u);
      s.times = run.times;
      s.deviation_mm.reserve(est.size());
      double sum = 0.0;
      for (const auto& e : est) {
        const double d = point_distance(e, report.reference_mm[u]);
        s.deviation_mm.push_back(d);
        sum += d;
      }
      s.mean_deviation_mm = sum / static_cast<double>(est.size());
      report.series.push_back(std::move(s));
    }
  };
  add(static_run);
  for (const auto& run : scenarios) {
    if (run.name != static_run.name) add(run);
  }
  return report;
}

double conditional_mean_deviation(const DeviationSeries& series, bool blocked) {
  if (series.blocked.size() != series.deviation_mm.size()) {
    throw LengthMismatchError("blocked flags missing for scenario '" + series.scenario + "'");
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < series.deviation_mm.size(); ++i) {
    if (series.blocked[i] == blocked) {
      sum += series.deviation_mm[i];
      ++n;
    }
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

double centroid_baseline(const Rect& area, long n_mc, std::uint64_t seed) {
  const Point2 c = area.centre();
  return monte_carlo(n_mc, seed, [&](auto& rng, auto& u) {
    const double x = area.x0 + area.width * u(rng);
    const double y = area.y0 + area.height * u(rng);
    return std::hypot(x - c[0], y - c[1]);
  });
}

double random_pair_baseline(const Rect& area, long n_mc, std::uint64_t seed) {
  return monte_carlo(n_mc, seed, [&](auto& rng, auto& u) {
    const double x1 = u(rng);
    const double y1 = u(rng);
    const double x2 = u(rng);
    const double y2 = u(rng);
    const double dx = area.width * (x1 - x2);
    const double dy = area.height * (y1 - y2);
    return std::hypot(dx, dy);
  });
}

}  // namespace csipos::metrics
