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

#include "csipos/config.hpp"

#include <fstream>
#include <sstream>

#include "csipos/error.hpp"

namespace csipos {

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    it->get_to(out);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid value for '") + key + "': " + e.what());
  }
}

void expect_object(const json& j, const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + " must be a JSON object");
}

json complex_to_json(sim::Complex c) { return json::array({c.real(), c.imag()}); }

sim::Complex complex_from_json(const json& j, const std::string& context) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(context + " must be a number or a [re, im] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

void read_complex(const json& j, const char* key, sim::Complex& out) {
  if (j.contains(key)) out = complex_from_json(j.at(key), key);
}

}  // namespace

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kCoincidentGeometry: return "coincident-geometry";
    case ErrorKind::kEmptyGrid: return "empty-grid";
    case ErrorKind::kSplit: return "split";
    case ErrorKind::kNormaliser: return "normaliser";
    case ErrorKind::kVersionMismatch: return "version-mismatch";
    case ErrorKind::kTruncated: return "truncated";
    case ErrorKind::kMalformedManifest: return "malformed-manifest";
    case ErrorKind::kCorrupt: return "corrupt";
    case ErrorKind::kUnknownAdapter: return "unknown-adapter";
    case ErrorKind::kShapeMismatch: return "shape-mismatch";
    case ErrorKind::kLengthMismatch: return "length-mismatch";
    case ErrorKind::kEmptyInput: return "empty-input";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kGridMismatch: return "grid-mismatch";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

void to_json(json& j, const Vec3& v) { j = json::array({v.x, v.y, v.z}); }

void from_json(const json& j, Vec3& v) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("a 3-vector must be an array of three numbers");
  try {
    v = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid 3-vector: ") + e.what());
  }
}

void to_json(json& j, const Rect& r) {
  j = {{"x0", r.x0}, {"y0", r.y0}, {"width", r.width}, {"height", r.height}};
}

void from_json(const json& j, Rect& r) {
  expect_object(j, "rectangle");
  require_keys(j, {"x0", "y0", "width", "height"}, "rectangle");
  read(j, "x0", r.x0);
  read(j, "y0", r.y0);
  read(j, "width", r.width);
  read(j, "height", r.height);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse '" + path.string() + "': " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& value) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << value.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || item.key() == a;
    if (!known) throw ConfigError("unknown key '" + item.key() + "' in " + context);
  }
}

void apply_override(json& target, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &target;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw ConfigError("override path '" + path + "' crosses a non-object");
    node = &(*node)[parts[i]];
    if (node->is_null()) *node = json::object();
  }
  if (!node->is_object()) throw ConfigError("override path '" + path + "' crosses a non-object");
  (*node)[parts.back()] = std::move(value);
}

}  // namespace csipos

namespace csipos::sim {

void to_json(json& j, const ArrayGeometry& g) {
  j = {{"num_rows", g.num_rows},
       {"num_cols", g.num_cols},
       {"element_spacing", g.element_spacing},
       {"origin", g.origin},
       {"boresight", g.boresight}};
}

void from_json(const json& j, ArrayGeometry& g) {
  require_keys(j, {"num_rows", "num_cols", "element_spacing", "origin", "boresight"}, "array");
  read(j, "num_rows", g.num_rows);
  read(j, "num_cols", g.num_cols);
  read(j, "element_spacing", g.element_spacing);
  read(j, "origin", g.origin);
  read(j, "boresight", g.boresight);
}

void to_json(json& j, const RadioConfig& r) {
  j = {{"carrier_freq", r.carrier_freq},
       {"bandwidth", r.bandwidth},
       {"num_subcarriers", r.num_subcarriers},
       {"report_wavelength", r.report_wavelength}};
}

void from_json(const json& j, RadioConfig& r) {
  require_keys(j, {"carrier_freq", "bandwidth", "num_subcarriers", "report_wavelength"}, "radio");
  read(j, "carrier_freq", r.carrier_freq);
  read(j, "bandwidth", r.bandwidth);
  read(j, "num_subcarriers", r.num_subcarriers);
  read(j, "report_wavelength", r.report_wavelength);
}

void to_json(json& j, const GridSpec& g) {
  j = {{"area", g.area}, {"spacing", g.spacing}, {"user_height", g.user_height}};
}

void from_json(const json& j, GridSpec& g) {
  require_keys(j, {"area", "spacing", "user_height"}, "grid");
  read(j, "area", g.area);
  read(j, "spacing", g.spacing);
  read(j, "user_height", g.user_height);
}

void to_json(json& j, const Environment& env) {
  json scatterers = json::array();
  for (const auto& s : env.scatterers) {
    scatterers.push_back({{"position", s.position()}, {"gain", complex_to_json(s.gain())}});
  }
  json blockers = json::array();
  for (const auto& b : env.blockers) {
    json corners = json::array();
    for (const auto& c : b.corners()) corners.push_back(c);
    blockers.push_back({{"corners", corners}});
  }
  json agents = json::array();
  for (const auto& a : env.agents) {
    agents.push_back({{"waypoints", a.waypoints()},
                      {"speed", a.speed()},
                      {"body_radius", a.body_radius()},
                      {"body_height", a.body_height()},
                      {"scatter_gain", complex_to_json(a.scatter_gain())}});
  }
  j = {{"scatterers", scatterers},
       {"blockers", blockers},
       {"agents", agents},
       {"noise_std", env.noise_std},
       {"los_gain", complex_to_json(env.los_gain)}};
}

void from_json(const json& j, Environment& env) {
  require_keys(j, {"scatterers", "blockers", "agents", "noise_std", "los_gain"}, "environment");
  env = Environment{};
  for (const auto& s : j.value("scatterers", json::array())) {
    require_keys(s, {"position", "gain"}, "scatterer");
    Vec3 p;
    read(s, "position", p);
    sim::Complex g{0.0, 0.0};
    read_complex(s, "gain", g);
    env.scatterers.emplace_back(p, g);
  }
  for (const auto& b : j.value("blockers", json::array())) {
    require_keys(b, {"corners"}, "blocker");
    std::vector<Vec3> corners;
    read(b, "corners", corners);
    if (corners.size() != 4) throw ConfigError("a blocker needs exactly four corners");
    env.blockers.emplace_back(std::array<Vec3, 4>{corners[0], corners[1], corners[2], corners[3]});
  }
  for (const auto& a : j.value("agents", json::array())) {
    require_keys(a, {"waypoints", "speed", "body_radius", "body_height", "scatter_gain"}, "agent");
    std::vector<Vec3> waypoints;
    double speed = 0.5;
    double radius = 0.2;
    double height = 1.8;
    sim::Complex gain{0.5, 0.0};
    read(a, "waypoints", waypoints);
    read(a, "speed", speed);
    read(a, "body_radius", radius);
    read(a, "body_height", height);
    read_complex(a, "scatter_gain", gain);
    env.agents.emplace_back(std::move(waypoints), speed, radius, height, gain);
  }
  read(j, "noise_std", env.noise_std);
  read_complex(j, "los_gain", env.los_gain);
}

}  // namespace csipos::sim

namespace csipos::nn {

void to_json(json& j, const ModelConfig& c) {
  j = {{"input_rows", c.input_rows},
       {"input_cols", c.input_cols},
       {"input_channels", c.input_channels},
       {"num_dense_blocks", c.num_dense_blocks},
       {"layers_per_block", c.layers_per_block},
       {"growth_rate", c.growth_rate},
       {"use_stem", c.use_stem},
       {"stem_channels", c.stem_channels},
       {"kernel_size", c.kernel_size},
       {"fc_widths", c.fc_widths},
       {"output_dim", c.output_dim},
       {"batchnorm_per_block", c.batchnorm_per_block},
       {"bn_momentum", c.bn_momentum},
       {"bn_eps", c.bn_eps}};
}

void from_json(const json& j, ModelConfig& c) {
  require_keys(j,
               {"input_rows", "input_cols", "input_channels", "num_dense_blocks", "layers_per_block",
                "growth_rate", "use_stem", "stem_channels", "kernel_size", "fc_widths", "output_dim",
                "batchnorm_per_block", "bn_momentum", "bn_eps"},
               "model");
  read(j, "input_rows", c.input_rows);
  read(j, "input_cols", c.input_cols);
  read(j, "input_channels", c.input_channels);
  read(j, "num_dense_blocks", c.num_dense_blocks);
  read(j, "layers_per_block", c.layers_per_block);
  read(j, "growth_rate", c.growth_rate);
  read(j, "use_stem", c.use_stem);
  read(j, "stem_channels", c.stem_channels);
  read(j, "kernel_size", c.kernel_size);
  read(j, "fc_widths", c.fc_widths);
  read(j, "output_dim", c.output_dim);
  read(j, "batchnorm_per_block", c.batchnorm_per_block);
  read(j, "bn_momentum", c.bn_momentum);
  read(j, "bn_eps", c.bn_eps);
}

}  // namespace csipos::nn

namespace csipos::data {

void to_json(json& j, const SplitSpec& s) {
  j = {{"train_frac", s.train_frac}, {"val_frac", s.val_frac}, {"test_frac", s.test_frac}, {"seed", s.seed}};
}

void from_json(const json& j, SplitSpec& s) {
  require_keys(j, {"train_frac", "val_frac", "test_frac", "seed"}, "split");
  read(j, "train_frac", s.train_frac);
  read(j, "val_frac", s.val_frac);
  read(j, "test_frac", s.test_frac);
  read(j, "seed", s.seed);
}

}  // namespace csipos::data

namespace csipos::train {

void to_json(json& j, const TrainConfig& c) {
  j = {{"loss", to_string(c.loss)},
       {"learning_rate", c.learning_rate},
       {"lr_decay", c.lr_decay},
       {"beta1", c.beta1},
       {"beta2", c.beta2},
       {"epsilon", c.epsilon},
       {"batch_size", c.batch_size},
       {"max_epochs", c.max_epochs},
       {"patience", c.patience},
       {"max_steps", c.max_steps},
       {"stop_at_val_error_mm", c.stop_at_val_error_mm},
       {"seed", c.seed}};
}

void from_json(const json& j, TrainConfig& c) {
  require_keys(j,
               {"loss", "learning_rate", "lr_decay", "beta1", "beta2", "epsilon", "batch_size", "max_epochs",
                "patience", "max_steps", "stop_at_val_error_mm", "seed"},
               "train");
  std::string loss = to_string(c.loss);
  read(j, "loss", loss);
  c.loss = loss_from_string(loss);
  read(j, "learning_rate", c.learning_rate);
  read(j, "lr_decay", c.lr_decay);
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "epsilon", c.epsilon);
  read(j, "batch_size", c.batch_size);
  read(j, "max_epochs", c.max_epochs);
  read(j, "patience", c.patience);
  read(j, "max_steps", c.max_steps);
  read(j, "stop_at_val_error_mm", c.stop_at_val_error_mm);
  read(j, "seed", c.seed);
}

void to_json(json& j, const TrainHistory& h) {
  j = {{"train_loss", h.train_loss},
       {"val_loss", h.val_loss},
       {"val_mean_error_mm", h.val_mean_error_mm},
       {"wall_time_s", h.wall_time_s},
       {"best_epoch", h.best_epoch},
       {"steps", h.steps}};
}

void from_json(const json& j, TrainHistory& h) {
  require_keys(j, {"train_loss", "val_loss", "val_mean_error_mm", "wall_time_s", "best_epoch", "steps"},
               "history");
  h = TrainHistory{};
  read(j, "train_loss", h.train_loss);
  read(j, "val_loss", h.val_loss);
  read(j, "val_mean_error_mm", h.val_mean_error_mm);
  read(j, "wall_time_s", h.wall_time_s);
  read(j, "best_epoch", h.best_epoch);
  read(j, "steps", h.steps);
  const auto n = h.train_loss.size();
  if (h.val_loss.size() != n || h.val_mean_error_mm.size() != n || h.wall_time_s.size() != n) {
    throw ConfigError("history columns differ in length");
  }
}

}  // namespace csipos::train

namespace csipos::exp {

void to_json(json& j, const ScenarioSpec& s) {
  j = {{"name", s.name},
       {"trajectory", to_string(s.trajectory)},
       {"duration", s.duration},
       {"dt", s.dt},
       {"users_mm", s.users_mm}};
}

void from_json(const json& j, ScenarioSpec& s) {
  require_keys(j, {"name", "trajectory", "duration", "dt", "users_mm"}, "scenario");
  read(j, "name", s.name);
  std::string trajectory = to_string(s.trajectory);
  read(j, "trajectory", trajectory);
  s.trajectory = trajectory_from_string(trajectory);
  read(j, "duration", s.duration);
  read(j, "dt", s.dt);
  read(j, "users_mm", s.users_mm);
}

void to_json(json& j, const AgentSpec& a) {
  j = {{"margin", a.margin},
       {"speed", a.speed},
       {"body_radius", a.body_radius},
       {"body_height", a.body_height},
       {"scatterer_height", a.scatterer_height},
       {"scatter_gain", complex_to_json(a.scatter_gain)}};
}

void from_json(const json& j, AgentSpec& a) {
  require_keys(j, {"margin", "speed", "body_radius", "body_height", "scatterer_height", "scatter_gain"}, "agent");
  read(j, "margin", a.margin);
  read(j, "speed", a.speed);
  read(j, "body_radius", a.body_radius);
  read(j, "body_height", a.body_height);
  read(j, "scatterer_height", a.scatterer_height);
  read_complex(j, "scatter_gain", a.scatter_gain);
}

void to_json(json& j, const SceneConfig& s) {
  json blockers = json::array();
  for (const auto& b : s.blockers) {
    json corners = json::array();
    for (const auto& c : b.corners()) corners.push_back(c);
    blockers.push_back({{"corners", corners}});
  }
  j = {{"array", s.array},
       {"radio", s.radio},
       {"grid", s.grid},
       {"num_scatterers", s.num_scatterers},
       {"gain_min", s.gain_min},
       {"gain_max", s.gain_max},
       {"scatter_box_min", s.scatter_box_min},
       {"scatter_box_max", s.scatter_box_max},
       {"scatterer_seed", s.scatterer_seed},
       {"snr_db", s.snr_db},
       {"noise_std", s.noise_std ? json(*s.noise_std) : json(nullptr)},
       {"blockers", blockers}};
}

void from_json(const json& j, SceneConfig& s) {
  require_keys(j,
               {"array", "radio", "grid", "num_scatterers", "gain_min", "gain_max", "scatter_box_min",
                "scatter_box_max", "scatterer_seed", "snr_db", "noise_std", "blockers"},
               "scene");
  read(j, "array", s.array);
  read(j, "radio", s.radio);
  read(j, "grid", s.grid);
  read(j, "num_scatterers", s.num_scatterers);
  read(j, "gain_min", s.gain_min);
  read(j, "gain_max", s.gain_max);
  read(j, "scatter_box_min", s.scatter_box_min);
  read(j, "scatter_box_max", s.scatter_box_max);
  read(j, "scatterer_seed", s.scatterer_seed);
  read(j, "snr_db", s.snr_db);
  if (j.contains("noise_std")) {
    if (j["noise_std"].is_null()) {
      s.noise_std.reset();
    } else {
      double v = 0.0;
      read(j, "noise_std", v);
      s.noise_std = v;
    }
  }
  if (j.contains("blockers")) {
    sim::Environment tmp;
    from_json(json{{"blockers", j["blockers"]}}, tmp);
    s.blockers = tmp.blockers;
  }
}

void to_json(json& j, const BaselineSpec& b) {
  j = {{"area_mm", b.area_mm}, {"draws", b.draws}, {"seed", b.seed}};
}

void from_json(const json& j, BaselineSpec& b) {
  require_keys(j, {"area_mm", "draws", "seed"}, "baseline");
  read(j, "area_mm", b.area_mm);
  read(j, "draws", b.draws);
  read(j, "seed", b.seed);
}

}  // namespace csipos::exp
