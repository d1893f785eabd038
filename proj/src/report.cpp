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

#include "csipos/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "csipos/error.hpp"

namespace csipos::metrics {

void to_json(json& j, const ErrorSummary& s) {
  j = {{"count", s.count},
       {"mean_mm", s.mean_mm},
       {"mean_lambda", s.mean_lambda},
       {"mean_vector_mm", s.mean_vector_mm},
       {"median_mm", s.cdf.empty() ? 0.0 : quantile(s, 0.5)},
       {"p90_mm", s.cdf.empty() ? 0.0 : quantile(s, 0.9)},
       {"cdf_mm", s.cdf}};
}

void to_json(json& j, const DeviationSeries& s) {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  j = {{"scenario", s.scenario},
       {"user", s.user},
       {"mean_deviation_mm", s.mean_deviation_mm},
       {"ever_blocked", s.ever_blocked},
       {"times", s.times},
       {"deviation_mm", s.deviation_mm},
       {"blocked", s.blocked}};
  if (s.blocked.size() == s.deviation_mm.size()) {
    j["mean_blocked_mm"] = finite_or_null(conditional_mean_deviation(s, true));
    j["mean_unblocked_mm"] = finite_or_null(conditional_mean_deviation(s, false));
  }
}

void to_json(json& j, const DeviationReport& r) {
  j = {{"reference_mm", r.reference_mm}, {"series", r.series}};
}

}  // namespace csipos::metrics

namespace csipos::exp {

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string render(const std::vector<std::vector<std::string>>& cells, bool tsv) {
  std::ostringstream os;
  if (tsv) {
    for (const auto& row : cells) {
      for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "\t" : "") << row[c];
      os << '\n';
    }
    return os.str();
  }
  std::vector<std::size_t> width;
  for (const auto& row : cells) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) {
        os << std::left << std::setw(static_cast<int>(width[c])) << row[c];
      } else {
        os << "  " << std::right << std::setw(static_cast<int>(width[c])) << row[c];
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace

void to_json(json& j, const CrossEnvironmentResult& r) {
  j = {{"a_test", r.a_test},
       {"b_test", r.b_test},
       {"b_error_vector_mm", r.b_error_vector_mm},
       {"centroid_baseline_mm", r.centroid_baseline_mm},
       {"random_pair_baseline_mm", r.random_pair_baseline_mm}};
}

void write_result(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_json_file(dir / "results.json",
                  {{"kind", result.kind}, {"provenance", result.provenance}, {"results", result.results}});
}

std::string error_table(const std::vector<SummaryRow>& rows, double report_wavelength, bool tsv) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"dataset", "n", "mean_mm", "mean_lambda", "dx_mm", "dy_mm", "median_mm", "p90_mm"});
  for (const auto& [label, s] : rows) {
    const bool has = !s.cdf.empty();
    cells.push_back({label, std::to_string(s.count), fixed(s.mean_mm, 2),
                     fixed(metrics::to_lambda(s.mean_mm, report_wavelength), 3), fixed(s.mean_vector_mm[0], 2),
                     fixed(s.mean_vector_mm[1], 2), has ? fixed(metrics::quantile(s, 0.5), 2) : "-",
                     has ? fixed(metrics::quantile(s, 0.9), 2) : "-"});
  }
  std::string out = render(cells, tsv);
  if (!tsv) {
    for (const auto& [label, s] : rows) {
      out += label + ": " + fixed(s.mean_mm, 2) + " mm / " + fixed(metrics::to_lambda(s.mean_mm, report_wavelength), 3) +
             " \xce\xbb\n";
    }
  }
  return out;
}

std::string deviation_table(const metrics::DeviationReport& report, bool tsv) {
  const auto names = report.scenario_names();
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"user"};
  for (const auto& n : names) header.push_back(n);
  cells.push_back(header);
  for (std::size_t u = 0; u < report.reference_mm.size(); ++u) {
    std::vector<std::string> row{std::to_string(u + 1)};
    for (const auto& n : names) {
      const auto& s = report.at(n, static_cast<int>(u));
      row.push_back(fixed(s.mean_deviation_mm, 2) + (s.ever_blocked ? "*" : ""));
    }
    cells.push_back(row);
  }
  return render(cells, tsv);
}

std::vector<std::filesystem::path> write_deviation_series(const metrics::DeviationReport& report,
                                                          const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const auto users = report.reference_mm.size();
  for (const auto& name : report.scenario_names()) {
    const auto path = dir / ("series_" + name + ".tsv");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << "# scenario=" << name << '\n' << "t";
    for (std::size_t u = 0; u < users; ++u) out << "\tdev_u" << u + 1;
    for (std::size_t u = 0; u < users; ++u) out << "\tblocked_u" << u + 1;
    out << '\n' << std::setprecision(17);
    const auto& first = report.at(name, 0);
    for (std::size_t i = 0; i < first.deviation_mm.size(); ++i) {
      out << (i < first.times.size() ? first.times[i] : static_cast<double>(i));
      for (std::size_t u = 0; u < users; ++u) out << '\t' << report.at(name, static_cast<int>(u)).deviation_mm[i];
      for (std::size_t u = 0; u < users; ++u) {
        const auto& b = report.at(name, static_cast<int>(u)).blocked;
        out << '\t' << (i < b.size() && b[i] ? 1 : 0);
      }
      out << '\n';
    }
    if (!out) throw IoError("failed writing '" + path.string() + "'");
    written.push_back(path);
  }
  return written;
}

SeriesTable read_deviation_series(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open '" + file.string() + "'");
  SeriesTable table;
  std::string line;
  std::size_t users = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# scenario=", 0) == 0) {
      table.scenario = line.substr(11);
      continue;
    }
    std::istringstream ss(line);
    std::vector<std::string> fields;
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    if (!header) {
      if (fields.empty() || fields[0] != "t" || fields.size() % 2 == 0) {
        throw MalformedManifestError("unexpected series header in '" + file.string() + "'");
      }
      users = (fields.size() - 1) / 2;
      table.deviation_mm.resize(users);
      table.blocked.resize(users);
      header = true;
      continue;
    }
    if (fields.size() != 1 + 2 * users) throw MalformedManifestError("ragged row in '" + file.string() + "'");
    try {
      table.times.push_back(std::stod(fields[0]));
      for (std::size_t u = 0; u < users; ++u) {
        table.deviation_mm[u].push_back(std::stod(fields[1 + u]));
        table.blocked[u].push_back(fields[1 + users + u] == "1");
      }
    } catch (const std::exception&) {
      throw MalformedManifestError("non-numeric field in '" + file.string() + "'");
    }
  }
  if (!header) throw MalformedManifestError("empty series file '" + file.string() + "'");
  if (table.scenario.empty()) table.scenario = file.stem().string();
  return table;
}

}  // namespace csipos::exp
