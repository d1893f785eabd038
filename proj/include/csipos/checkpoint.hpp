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
#include <filesystem>

#include "csipos/dataset.hpp"
#include "csipos/posnet.hpp"
#include "csipos/trainer.hpp"

namespace csipos::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  nn::PosNet<float> model;
  TrainHistory history;
  data::NormStats norm;
};

/// Single file: 8-byte magic, u32 version, u32 reserved, u64 manifest length,
/// JSON manifest (model config, seed, array table, history, payload hash),
/// then the raw little-endian float32 arrays back to back.
void save_checkpoint(const nn::PosNet<float>& model, const TrainHistory& history, const data::NormStats& norm,
                     const std::filesystem::path& path);

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace csipos::train
