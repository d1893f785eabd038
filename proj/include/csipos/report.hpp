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

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "csipos/config.hpp"
#include "csipos/experiments.hpp"
#include "csipos/metrics.hpp"

namespace csipos::metrics {
void to_json(json& j, const ErrorSummary& s);
void to_json(json& j, const DeviationSeries& s);
void to_json(json& j, const DeviationReport& r);
}  // namespace csipos::metrics

namespace csipos::exp {

void to_json(json& j, const CrossEnvironmentResult& r);

/// Numbers of one study plus everything needed to regenerate them.
struct ExperimentResult {
  std::string kind;  // benchmark | exp1 | exp2 | eval
  json provenance;   // configs, seeds, dataset hashes, tool version
  json results;      // numeric tables
};

// results.json in `dir`, holding kind, provenance and results.
void write_result(const ExperimentResult& result, const std::filesystem::path& dir);

using SummaryRow = std::pair<std::string, metrics::ErrorSummary>;

// One row per summary: mm and lambda columns, mean error vector, quantiles.
// The human-readable form ends with a "<label>: X mm / Y λ" line per row.
std::string error_table(const std::vector<SummaryRow>& rows, double report_wavelength, bool tsv);

// Mean deviation per user (rows) and scenario (columns); '*' marks series
// during which the direct path was blocked at least once.
std::string deviation_table(const metrics::DeviationReport& report, bool tsv);

// Writes series_<scenario>.tsv per scenario: t, then dev_u<k> and blocked_u<k>
// per user. Returns the written paths.
std::vector<std::filesystem::path> write_deviation_series(const metrics::DeviationReport& report,
                                                          const std::filesystem::path& dir);

struct SeriesTable {
  std::string scenario;
  std::vector<double> times;
  std::vector<std::vector<double>> deviation_mm;  // [user][t]
  std::vector<std::vector<bool>> blocked;         // [user][t]
};

SeriesTable read_deviation_series(const std::filesystem::path& file);

}  // namespace csipos::exp
