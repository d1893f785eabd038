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

#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "csipos/error.hpp"

namespace csipos::tools {

namespace {

constexpr const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

double nice_step(double span) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace

void write_series_svg(const exp::SeriesTable& table, const std::filesystem::path& path, double window_s) {
  constexpr double W = 800, H = 420, L = 70, R = 150, T = 40, B = 50;
  std::size_t n = table.times.size();
  if (window_s > 0.0) {
    n = static_cast<std::size_t>(std::count_if(table.times.begin(), table.times.end(),
                                               [&](double t) { return t < window_s; }));
  }
  double t_max = window_s > 0.0 ? window_s : (n ? table.times[n - 1] : 1.0);
  if (!(t_max > 0.0)) t_max = 1.0;
  double y_max = 0.0;
  for (const auto& dev : table.deviation_mm) {
    for (std::size_t i = 0; i < n; ++i) y_max = std::max(y_max, dev[i]);
  }
  const double y_step = nice_step(y_max > 0.0 ? y_max : 1.0);
  y_max = std::max(y_step, std::ceil(y_max / y_step) * y_step);
  const double t_step = nice_step(t_max);

  auto px = [&](double t) { return L + (W - L - R) * t / t_max; };
  auto py = [&](double v) { return H - B - (H - T - B) * v / y_max; };

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">Deviation, scenario "
     << table.scenario << "</text>\n";
  for (double v = 0.0; v <= y_max + 1e-9; v += y_step) {
    os << "<line x1=\"" << L << "\" x2=\"" << W - R << "\" y1=\"" << py(v) << "\" y2=\"" << py(v)
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">" << std::setprecision(0) << v
       << std::setprecision(2) << "</text>\n";
  }
  for (double t = 0.0; t <= t_max + 1e-9; t += t_step) {
    os << "<line x1=\"" << px(t) << "\" x2=\"" << px(t) << "\" y1=\"" << T << "\" y2=\"" << H - B
       << "\" stroke=\"#eee\"/>\n";
    os << "<text x=\"" << px(t) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << std::setprecision(0)
       << t << std::setprecision(2) << "</text>\n";
  }
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">time [s]</text>\n";
  os << "<text transform=\"translate(18," << (T + H - B) / 2
     << ") rotate(-90)\" text-anchor=\"middle\">deviation [mm]</text>\n";

  for (std::size_t u = 0; u < table.deviation_mm.size(); ++u) {
    const char* colour = kColours[u % std::size(kColours)];
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < n; ++i) os << px(table.times[i]) << ',' << py(table.deviation_mm[u][i]) << ' ';
    os << "\"/>\n";
    for (std::size_t i = 0; i < n; ++i) {
      if (table.blocked[u][i]) {
        os << "<circle cx=\"" << px(table.times[i]) << "\" cy=\"" << py(table.deviation_mm[u][i])
           << "\" r=\"2.5\" fill=\"" << colour << "\"/>\n";
      }
    }
    const double ly = T + 16 + 20 * static_cast<double>(u);
    os << "<line x1=\"" << W - R + 12 << "\" x2=\"" << W - R + 36 << "\" y1=\"" << ly << "\" y2=\"" << ly
       << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - R + 42 << "\" y=\"" << ly + 4 << "\">user " << u + 1 << "</text>\n";
  }
  const double ly = T + 16 + 20 * static_cast<double>(table.deviation_mm.size());
  os << "<circle cx=\"" << W - R + 24 << "\" cy=\"" << ly << "\" r=\"2.5\" fill=\"black\"/>\n";
  os << "<text x=\"" << W - R + 42 << "\" y=\"" << ly + 4 << "\">direct path blocked</text>\n";
  os << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << os.str();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace csipos::tools
