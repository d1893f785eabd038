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
#include <initializer_list>
#include <string>

#include <nlohmann/json.hpp>

#include "csipos/channel_sim.hpp"
#include "csipos/dataset.hpp"
#include "csipos/experiments.hpp"
#include "csipos/posnet.hpp"
#include "csipos/trainer.hpp"

// JSON mapping of every configuration type. Reading is strict: unknown keys
// and ill-typed values raise ConfigError; missing keys keep their defaults.

namespace csipos {

using json = nlohmann::json;

void to_json(json& j, const Vec3& v);
void from_json(const json& j, Vec3& v);
void to_json(json& j, const Rect& r);
void from_json(const json& j, Rect& r);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& value);

// Throws ConfigError naming the first key of `j` not in `allowed`.
void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& context);

// Parses `text` as JSON when possible, otherwise keeps it as a string, then
// stores it at the dotted `path` inside `target` (e.g. "train.max_epochs=5").
void apply_override(json& target, const std::string& assignment);

}  // namespace csipos

namespace csipos::sim {
void to_json(json& j, const ArrayGeometry& g);
void from_json(const json& j, ArrayGeometry& g);
void to_json(json& j, const RadioConfig& r);
void from_json(const json& j, RadioConfig& r);
void to_json(json& j, const GridSpec& g);
void from_json(const json& j, GridSpec& g);
void to_json(json& j, const Environment& env);
void from_json(const json& j, Environment& env);
}  // namespace csipos::sim

namespace csipos::nn {
void to_json(json& j, const ModelConfig& c);
void from_json(const json& j, ModelConfig& c);
}  // namespace csipos::nn

namespace csipos::data {
void to_json(json& j, const SplitSpec& s);
void from_json(const json& j, SplitSpec& s);
}  // namespace csipos::data

namespace csipos::train {
void to_json(json& j, const TrainConfig& c);
void from_json(const json& j, TrainConfig& c);
void to_json(json& j, const TrainHistory& h);
void from_json(const json& j, TrainHistory& h);
}  // namespace csipos::train

namespace csipos::exp {
void to_json(json& j, const ScenarioSpec& s);
void from_json(const json& j, ScenarioSpec& s);
void to_json(json& j, const AgentSpec& a);
void from_json(const json& j, AgentSpec& a);
void to_json(json& j, const SceneConfig& s);
void from_json(const json& j, SceneConfig& s);
void to_json(json& j, const BaselineSpec& b);
void from_json(const json& j, BaselineSpec& b);
}  // namespace csipos::exp
