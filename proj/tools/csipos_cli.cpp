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

// csipos command line: simulate, ingest, train, eval, exp1, exp2, plot.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "csipos/checkpoint.hpp"
#include "csipos/config.hpp"
#include "csipos/error.hpp"
#include "csipos/experiments.hpp"
#include "csipos/report.hpp"
#include "plot.hpp"

namespace fs = std::filesystem;
using namespace csipos;

namespace {

enum ExitCode : int { kOk = 0, kOther = 1, kConfigExit = 2, kDataExit = 3, kDivergenceExit = 4 };

// Sub-seeds derived from the master seed of a run.
enum SeedSlot : std::uint64_t { kDataSeed = 1, kSplitSeed = 2, kModelSeed = 3, kShuffleSeed = 4, kNoiseSeed = 5 };

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out;
  int workers = 0;
  // command specific, mapped onto config keys
  std::string dataset;
  std::string checkpoint;
  std::string input;
  std::string adapter;
  std::optional<double> window;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

fs::path output_dir(const Options& o) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv("CSIPOS_OUT"); env && *env) return env;
  return "csipos-out";
}

class Run {
 public:
  Run(std::string command, const Options& o, int argc, char** argv) : command_(std::move(command)), out_(output_dir(o)) {
    if (!o.config.empty()) doc_ = read_json_file(o.config);
    if (doc_.is_null()) doc_ = json::object();
    if (!doc_.is_object()) throw ConfigError("config document must be a JSON object");
    for (const auto& s : o.sets) apply_override(doc_, s);
    if (o.seed) doc_["seed"] = *o.seed;
    if (!doc_.contains("seed")) doc_["seed"] = 0;
    try {
      seed_ = doc_["seed"].get<std::uint64_t>();
    } catch (const json::exception&) {
      throw ConfigError("seed must be a non-negative integer");
    }
    if (o.workers > 0) omp_set_num_threads(o.workers);
    for (int i = 0; i < argc; ++i) argv_.emplace_back(argv[i]);
    config_path_ = o.config;
    workers_ = omp_get_max_threads();
  }

  json& doc() { return doc_; }
  const fs::path& out() const { return out_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t seed(SeedSlot slot) const { return derive_seed(seed_, slot); }

  // Written before any other output and refreshed when the command ends.
  void write_manifest(const json& resolved, bool finished) {
    fs::create_directories(out_);
    if (started_.empty()) started_ = utc_now();
    json m = {{"command", command_},
              {"argv", argv_},
              {"config_path", config_path_},
              {"config", resolved},
              {"seed", seed_},
              {"output_dir", out_.string()},
              {"tool_version", CSIPOS_VERSION},
              {"workers", workers_},
              {"started_at", started_}};
    if (finished) m["finished_at"] = utc_now();
    write_json_file(out_ / "run_manifest.json", m);
  }

  json provenance(const json& resolved) const {
    return {{"command", command_}, {"config", resolved}, {"seed", seed_}, {"tool_version", CSIPOS_VERSION},
            {"workers", workers_}};
  }

 private:
  std::string command_;
  fs::path out_;
  json doc_;
  std::uint64_t seed_ = 0;
  std::vector<std::string> argv_;
  std::string config_path_;
  int workers_ = 1;
  std::string started_;
};

template <typename T>
T section(const json& doc, const char* key, T fallback = T{}) {
  if (!doc.contains(key)) return fallback;
  T value = fallback;
  from_json(doc.at(key), value);
  return value;
}

std::string text_field(const json& doc, const char* key, const std::string& what) {
  if (!doc.contains(key) || !doc[key].is_string() || doc[key].get<std::string>().empty()) {
    throw ConfigError(what + " is required (config key '" + key + "')");
  }
  return doc[key].get<std::string>();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

void write_history(const train::TrainHistory& h, const fs::path& path) {
  std::ostringstream os;
  os << "epoch\ttrain_loss\tval_loss\tval_mean_error_mm\twall_time_s\n" << std::setprecision(10);
  for (std::size_t i = 0; i < h.epochs(); ++i) {
    os << i + 1 << '\t' << h.train_loss[i] << '\t' << h.val_loss[i] << '\t' << h.val_mean_error_mm[i] << '\t'
       << h.wall_time_s[i] << '\n';
  }
  write_text(path, os.str());
}

// ---------------------------------------------------------------- commands

int cmd_simulate(Run& run) {
  auto& doc = run.doc();
  require_keys(doc, {"seed", "mode", "scene", "timeseries"}, "simulate config");
  const auto scene = section<exp::SceneConfig>(doc, "scene");
  const std::string mode = doc.value("mode", "grid");
  json resolved = {{"seed", run.seed()}, {"mode", mode}, {"scene", scene}};

  data::Records records;
  if (mode == "grid") {
    run.write_manifest(resolved, false);
    records = exp::simulate_grid(scene, run.seed(kDataSeed));
  } else if (mode == "timeseries") {
    const json ts = doc.value("timeseries", json::object());
    require_keys(ts, {"scenario", "agent"}, "timeseries");
    exp::ScenarioSpec spec{"reference", exp::Trajectory::kNone, 120.0, 0.5, exp::quadrant_users(scene.grid.area)};
    if (ts.contains("scenario")) from_json(ts["scenario"], spec);
    const auto agent = section<exp::AgentSpec>(ts, "agent");
    spec.validate();
    resolved["timeseries"] = {{"scenario", spec}, {"agent", agent}};
    run.write_manifest(resolved, false);
    auto env = exp::make_environment(scene);
    if (auto walker = exp::make_trajectory(spec.trajectory, scene.grid.area, agent)) env.agents.push_back(*walker);
    std::vector<Vec3> users;
    for (const auto& p : spec.users_mm) users.push_back({p[0] / 1000.0, p[1] / 1000.0, scene.grid.user_height});
    const auto series = sim::generate_timeseries(users, env, spec.duration, spec.dt, scene.array, scene.radio,
                                                 run.seed(kDataSeed));
    for (const auto& s : series) {
      auto r = data::to_records(s);
      records.insert(records.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    }
  } else {
    throw ConfigError("mode must be 'grid' or 'timeseries'");
  }
  data::store_dataset(records, run.out() / "dataset");
  std::cout << "wrote " << records.size() << " records to " << (run.out() / "dataset").string()
            << " (hash " << hex(data::content_hash(records)) << ")\n";
  run.write_manifest(resolved, true);
  return kOk;
}

int cmd_ingest(Run& run) {
  auto& doc = run.doc();
  require_keys(doc, {"seed", "adapter", "input", "strict", "expected_antennas", "expected_subcarriers", "limit"},
               "ingest config");
  const std::string adapter = doc.value("adapter", "synthetic-native");
  const std::string input = text_field(doc, "input", "--input");
  data::IngestOptions opt;
  opt.strict = doc.value("strict", opt.strict);
  opt.expected_antennas = doc.value("expected_antennas", opt.expected_antennas);
  opt.expected_subcarriers = doc.value("expected_subcarriers", opt.expected_subcarriers);
  if (doc.contains("limit") && !doc["limit"].is_null()) opt.limit = doc["limit"].get<std::size_t>();
  json resolved = {{"adapter", adapter},
                   {"input", input},
                   {"strict", opt.strict},
                   {"expected_antennas", opt.expected_antennas},
                   {"expected_subcarriers", opt.expected_subcarriers},
                   {"limit", opt.limit ? json(*opt.limit) : json(nullptr)}};
  run.write_manifest(resolved, false);
  const auto records = data::ingest_external(input, adapter, opt);
  data::store_dataset(records, run.out() / "dataset");
  std::cout << "ingested " << records.size() << " records via " << adapter << " (hash "
            << hex(data::content_hash(records)) << ")\n";
  run.write_manifest(resolved, true);
  return kOk;
}

struct TrainSetup {
  nn::ModelConfig model;
  train::TrainConfig train;
  data::SplitSpec split;
  std::uint64_t model_seed = 0;
};

TrainSetup train_setup(const Run& run, const json& doc) {
  TrainSetup s;
  s.model = section<nn::ModelConfig>(doc, "model");
  s.train = section<train::TrainConfig>(doc, "train");
  s.split = section<data::SplitSpec>(doc, "split");
  s.split.seed = run.seed(kSplitSeed);
  s.train.seed = run.seed(kShuffleSeed);
  s.model_seed = run.seed(kModelSeed);
  s.train.validate();
  s.split.validate();
  return s;
}

json resolved_train(const TrainSetup& s) {
  return {{"model", s.model}, {"train", s.train}, {"split", s.split}, {"model_seed", s.model_seed}};
}

int cmd_train(Run& run) {
  auto& doc = run.doc();
  require_keys(doc, {"seed", "dataset", "model", "train", "split"}, "train config");
  const std::string dataset_dir = text_field(doc, "dataset", "--dataset");
  const auto setup = train_setup(run, doc);
  json resolved = resolved_train(setup);
  resolved["seed"] = run.seed();
  resolved["dataset"] = dataset_dir;
  run.write_manifest(resolved, false);

  const auto records = data::load_dataset(dataset_dir);
  const auto result = exp::run_benchmark(records, setup.model, setup.train, setup.split, setup.model_seed,
                                         metrics::kReportWavelengthMm, &std::cout);
  train::save_checkpoint(result.trained.model, result.trained.history, result.norm, run.out() / "model.ckpt");
  write_history(result.trained.history, run.out() / "history.tsv");

  json provenance = run.provenance(resolved);
  provenance["dataset_hash"] = hex(data::content_hash(records));
  exp::ExperimentResult er{"benchmark", provenance,
                           {{"test", result.test},
                            {"best_epoch", result.trained.history.best_epoch},
                            {"epochs", result.trained.history.epochs()},
                            {"val_mean_error_mm", result.trained.history.val_mean_error_mm}}};
  exp::write_result(er, run.out());
  const std::vector<exp::SummaryRow> rows{{"test", result.test}};
  std::cout << exp::error_table(rows, metrics::kReportWavelengthMm, false);
  write_text(run.out() / "summary.tsv", exp::error_table(rows, metrics::kReportWavelengthMm, true));
  run.write_manifest(resolved, true);
  return kOk;
}

int cmd_eval(Run& run) {
  auto& doc = run.doc();
  require_keys(doc, {"seed", "checkpoint", "dataset", "subset", "split", "report_wavelength"}, "eval config");
  const std::string ckpt_path = text_field(doc, "checkpoint", "--checkpoint");
  const std::string dataset_dir = text_field(doc, "dataset", "--dataset");
  const std::string subset = doc.value("subset", "all");
  const double wavelength = doc.value("report_wavelength", metrics::kReportWavelengthMm);
  auto split = section<data::SplitSpec>(doc, "split");
  split.seed = run.seed(kSplitSeed);
  json resolved = {{"seed", run.seed()},
                   {"checkpoint", ckpt_path},
                   {"dataset", dataset_dir},
                   {"subset", subset},
                   {"split", split},
                   {"report_wavelength", wavelength}};
  run.write_manifest(resolved, false);

  const auto ck = train::load_checkpoint(ckpt_path);
  auto records = data::load_dataset(dataset_dir);
  if (subset == "test") {
    records = data::select(records, data::split_indices(records.size(), split).test);
  } else if (subset != "all") {
    throw ConfigError("subset must be 'all' or 'test'");
  }
  data::apply_normaliser_in_place(records, ck.norm);
  std::vector<Point2> truths;
  for (const auto& r : records) truths.push_back(r.label);
  const auto summary = metrics::summarize(train::predict(ck.model, records), truths, wavelength);

  json provenance = run.provenance(resolved);
  provenance["dataset_hash"] = hex(data::content_hash(data::load_dataset(dataset_dir)));
  exp::write_result({"eval", provenance, {{"summary", summary}}}, run.out());
  const std::vector<exp::SummaryRow> rows{{subset, summary}};
  std::cout << exp::error_table(rows, wavelength, false);
  write_text(run.out() / "summary.tsv", exp::error_table(rows, wavelength, true));
  run.write_manifest(resolved, true);
  return kOk;
}

int cmd_exp1(Run& run) {
  auto& doc = run.doc();
  require_keys(doc, {"seed", "scene_a", "scene_b", "model", "train", "split", "baseline"}, "exp1 config");
  const auto scene_a = section<exp::SceneConfig>(doc, "scene_a");
  exp::SceneConfig scene_b = scene_a;
  scene_b.scatterer_seed = derive_seed(scene_a.scatterer_seed, 0xB);
  if (doc.contains("scene_b")) from_json(doc["scene_b"], scene_b);
  exp::BaselineSpec baseline;
  baseline.area_mm = scene_a.grid.area;
  if (doc.contains("baseline")) from_json(doc["baseline"], baseline);
  const auto setup = train_setup(run, doc);
  json resolved = resolved_train(setup);
  resolved["seed"] = run.seed();
  resolved["scene_a"] = scene_a;
  resolved["scene_b"] = scene_b;
  resolved["baseline"] = baseline;
  run.write_manifest(resolved, false);

  const auto a = exp::simulate_grid(scene_a, run.seed(kDataSeed));
  const auto b = exp::simulate_grid(scene_b, run.seed(kDataSeed));
  const auto trained = exp::run_benchmark(a, setup.model, setup.train, setup.split, setup.model_seed,
                                          scene_a.radio.report_wavelength, &std::cout);
  const auto r = exp::run_cross_environment(trained, a, b, baseline, scene_a.radio.report_wavelength);
  train::save_checkpoint(trained.trained.model, trained.trained.history, trained.norm, run.out() / "model_a.ckpt");
  write_history(trained.trained.history, run.out() / "history.tsv");

  json provenance = run.provenance(resolved);
  provenance["dataset_hash_a"] = hex(data::content_hash(a));
  provenance["dataset_hash_b"] = hex(data::content_hash(b));
  exp::write_result({"exp1", provenance, r}, run.out());

  const std::vector<exp::SummaryRow> rows{{"A (train env)", r.a_test}, {"B (other env)", r.b_test}};
  std::ostringstream human;
  human << exp::error_table(rows, scene_a.radio.report_wavelength, false) << std::fixed << std::setprecision(2)
        << "B mean error vector: (" << r.b_error_vector_mm[0] << ", " << r.b_error_vector_mm[1] << ") mm\n"
        << "centroid baseline: " << r.centroid_baseline_mm << " mm\n"
        << "random-pair baseline: " << r.random_pair_baseline_mm << " mm\n";
  std::cout << human.str();
  std::ostringstream tsv;
  tsv << exp::error_table(rows, scene_a.radio.report_wavelength, true) << std::setprecision(10)
      << "centroid-baseline\t\t" << r.centroid_baseline_mm << "\t\t\t\t\t\n"
      << "random-pair-baseline\t\t" << r.random_pair_baseline_mm << "\t\t\t\t\t\n";
  write_text(run.out() / "summary.tsv", tsv.str());
  write_text(run.out() / "summary.txt", human.str());
  run.write_manifest(resolved, true);
  return kOk;
}

int cmd_exp2(Run& run) {
  auto& doc = run.doc();
  require_keys(doc, {"seed", "checkpoint", "scene", "agent", "scenarios", "duration", "dt"}, "exp2 config");
  const std::string ckpt_path = text_field(doc, "checkpoint", "--checkpoint");
  const auto scene = section<exp::SceneConfig>(doc, "scene");
  const auto agent = section<exp::AgentSpec>(doc, "agent");
  const double duration = doc.value("duration", 120.0);
  const double dt = doc.value("dt", 0.5);
  std::vector<exp::ScenarioSpec> scenarios = exp::default_scenarios(scene.grid.area, duration, dt);
  if (doc.contains("scenarios")) {
    scenarios.clear();
    for (const auto& s : doc["scenarios"]) {
      exp::ScenarioSpec spec{"", exp::Trajectory::kNone, duration, dt, exp::quadrant_users(scene.grid.area)};
      from_json(s, spec);
      scenarios.push_back(spec);
    }
  }
  json resolved = {{"seed", run.seed()}, {"checkpoint", ckpt_path}, {"scene", scene},
                   {"agent", agent},     {"scenarios", scenarios}};
  run.write_manifest(resolved, false);

  const auto ck = train::load_checkpoint(ckpt_path);
  const auto env = exp::make_environment(scene);
  const auto report = exp::run_nomadic(ck.model, ck.norm, scenarios, env, scene.array, scene.radio,
                                       scene.grid.user_height, agent, scene.grid.area, run.seed(kNoiseSeed));
  exp::write_deviation_series(report, run.out());
  json provenance = run.provenance(resolved);
  exp::write_result({"exp2", provenance, report}, run.out());
  std::cout << "mean deviation [mm]; * = direct path blocked during the run\n" << exp::deviation_table(report, false);
  write_text(run.out() / "deviation.tsv", exp::deviation_table(report, true));
  run.write_manifest(resolved, true);
  return kOk;
}

int cmd_plot(Run& run) {
  auto& doc = run.doc();
  require_keys(doc, {"seed", "input", "window_s"}, "plot config");
  const std::string input = text_field(doc, "input", "--input");
  const double window = doc.value("window_s", 0.0);
  json resolved = {{"input", input}, {"window_s", window}};
  run.write_manifest(resolved, false);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(input)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("series_", 0) == 0 && entry.path().extension() == ".tsv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw EmptyInputError("no series_*.tsv files in '" + input + "'");
  for (const auto& f : files) {
    const auto table = exp::read_deviation_series(f);
    const auto svg = run.out() / ("plot_" + table.scenario + ".svg");
    tools::write_series_svg(table, svg, window);
    std::cout << "wrote " << svg.string() << '\n';
  }
  run.write_manifest(resolved, true);
  return kOk;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kConfig:
    case ErrorKind::kUnknownAdapter:
      return kConfigExit;
    case ErrorKind::kDivergence:
      return kDivergenceExit;
    default:
      return kDataExit;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"csipos: CSI-based positioning with dense convolutional regression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(CSIPOS_VERSION));

  Options o;
  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON configuration document")->check(CLI::ExistingFile);
    sub->add_option("--set", o.sets, "Override a config key, e.g. train.max_epochs=5");
    sub->add_option("--seed", o.seed, "Master seed (overrides the config's seed)");
    sub->add_option("--out", o.out, "Output directory (default: $CSIPOS_OUT or ./csipos-out)");
    sub->add_option("--workers", o.workers, "Cap on worker threads")->check(CLI::NonNegativeNumber);
  };

  auto* simulate = app.add_subcommand("simulate", "Simulate a grid or time-series dataset");
  common(simulate);
  auto* ingest = app.add_subcommand("ingest", "Convert an external dataset to the native format");
  common(ingest);
  ingest->add_option("--input", o.input, "Path of the external dataset");
  ingest->add_option("--adapter", o.adapter, "Adapter name (synthetic-native, ultradense-npy)");
  auto* train_cmd = app.add_subcommand("train", "Train on a dataset and write a checkpoint");
  common(train_cmd);
  train_cmd->add_option("--dataset", o.dataset, "Dataset directory");
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  common(eval);
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint file");
  eval->add_option("--dataset", o.dataset, "Dataset directory");
  auto* exp1 = app.add_subcommand("exp1", "Cross-environment study");
  common(exp1);
  auto* exp2 = app.add_subcommand("exp2", "Nomadic deviation study");
  common(exp2);
  exp2->add_option("--checkpoint", o.checkpoint, "Checkpoint trained on the same scene");
  auto* plot = app.add_subcommand("plot", "Plot exp2 deviation series as SVG");
  common(plot);
  plot->add_option("--input", o.input, "exp2 output directory");
  plot->add_option("--window", o.window, "Only plot the first N seconds (e.g. 60)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigExit;
  }

  try {
    auto* sub = app.get_subcommands().front();
    Run run(sub->get_name(), o, argc, argv);
    auto& doc = run.doc();
    if (!o.dataset.empty()) doc["dataset"] = o.dataset;
    if (!o.checkpoint.empty()) doc["checkpoint"] = o.checkpoint;
    if (!o.input.empty()) doc["input"] = o.input;
    if (!o.adapter.empty()) doc["adapter"] = o.adapter;
    if (o.window) doc["window_s"] = *o.window;

    if (sub == simulate) return cmd_simulate(run);
    if (sub == ingest) return cmd_ingest(run);
    if (sub == train_cmd) return cmd_train(run);
    if (sub == eval) return cmd_eval(run);
    if (sub == exp1) return cmd_exp1(run);
    if (sub == exp2) return cmd_exp2(run);
    if (sub == plot) return cmd_plot(run);
  } catch (const DivergenceError& e) {
    std::cerr << "error [divergence, epoch " << e.epoch() << "]: " << e.what() << '\n';
    return kDivergenceExit;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const json::exception& e) {
    std::cerr << "error [config]: " << e.what() << '\n';
    return kConfigExit;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error [io]: " << e.what() << '\n';
    return kDataExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}
