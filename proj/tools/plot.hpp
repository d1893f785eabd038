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

#include "csipos/report.hpp"

namespace csipos::tools {

/// Deviation-vs-time line chart, one line per user. Blocked timesteps are
/// drawn as dots. window_s > 0 keeps only t < window_s.
void write_series_svg(const exp::SeriesTable& table, const std::filesystem::path& path, double window_s);

}  // namespace csipos::tools
