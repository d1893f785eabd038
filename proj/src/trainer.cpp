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

#include "csipos/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "csipos/error.hpp"
#include "csipos/metrics.hpp"

namespace csipos::train {

namespace {

class Adam {
 public:
  Adam(const nn::ParameterSet<float>& params, const TrainConfig& config) : config_(config) {
    for (const auto& p : params) {
      m_.emplace_back(p.trainable ? p.values.size() : 0, 0.0f);
      v_.emplace_back(p.trainable ? p.values.size() : 0, 0.0f);
    }
  }

  void step(nn::ParameterSet<float>& params, const nn::ParameterSet<float>& grads, double learning_rate) {
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    const float step = static_cast<float>(learning_rate * std::sqrt(bc2) / bc1);
    const float b1 = static_cast<float>(config_.beta1);
    const float b2 = static_cast<float>(config_.beta2);
    const float eps = static_cast<float>(config_.epsilon * std::sqrt(bc2));
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!params[i].trainable) continue;
      auto& w = params[i].values;
      const auto& g = grads[i].values;
      auto& m = m_[i];
      auto& v = v_[i];
#pragma omp simd
      for (std::size_t j = 0; j < w.size(); ++j) {
        m[j] = b1 * m[j] + (1.0f - b1) * g[j];
        v[j] = b2 * v[j] + (1.0f - b2) * g[j] * g[j];
        w[j] -= step * m[j] / (std::sqrt(v[j]) + eps);
      }
    }
  }

 private:
  TrainConfig config_;
  long t_ = 0;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
};

void fit_label_transform(nn::PosNet<float>& model, const data::Records& records) {
  double cx = 0.0;
  double cy = 0.0;
  for (const auto& r : records) {
    cx += r.label[0];
    cy += r.label[1];
  }
  cx /= static_cast<double>(records.size());
  cy /= static_cast<double>(records.size());
  double vx = 0.0;
  double vy = 0.0;
  for (const auto& r : records) {
    vx += (r.label[0] - cx) * (r.label[0] - cx);
    vy += (r.label[1] - cy) * (r.label[1] - cy);
  }
  double scale = std::sqrt(std::max(vx, vy) / static_cast<double>(records.size()));
  if (!(scale > 0.0)) scale = 1.0;
  model.set_label_transform({cx, cy}, scale);
}

}  // namespace

const char* to_string(Loss loss) {
  return loss == Loss::kMeanEuclidean ? "mean-euclidean" : "mean-squared-euclidean";
}

Loss loss_from_string(const std::string& name) {
  if (name == "mean-euclidean") return Loss::kMeanEuclidean;
  if (name == "mean-squared-euclidean") return Loss::kMeanSquaredEuclidean;
  throw ConfigError("unknown loss '" + name + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("lr_decay must lie in (0, 1]");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (max_epochs < 0 || max_steps < 0) throw ConfigError("max_epochs and max_steps must be >= 0");
}

bool TrainHistory::same_numerics(const TrainHistory& other) const {
  return train_loss == other.train_loss && val_loss == other.val_loss &&
         val_mean_error_mm == other.val_mean_error_mm && best_epoch == other.best_epoch && steps == other.steps;
}

double loss_and_gradient(std::span<const float> outputs, std::span<const Point2> targets, Loss loss,
                         std::vector<float>* gradient) {
  const std::size_t n = targets.size();
  if (outputs.size() != 2 * n || n == 0) throw LengthMismatchError("outputs and targets disagree in length");
  if (gradient) gradient->assign(outputs.size(), 0.0f);
  double total = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = static_cast<double>(outputs[2 * i]) - targets[i][0];
    const double dy = static_cast<double>(outputs[2 * i + 1]) - targets[i][1];
    const double sq = dx * dx + dy * dy;
    if (loss == Loss::kMeanSquaredEuclidean) {
      total += sq;
      if (gradient) {
        (*gradient)[2 * i] = static_cast<float>(2.0 * dx * inv_n);
        (*gradient)[2 * i + 1] = static_cast<float>(2.0 * dy * inv_n);
      }
    } else {
      const double d = std::sqrt(sq);
      total += d;
      if (gradient && d > 0.0) {
        (*gradient)[2 * i] = static_cast<float>(dx / d * inv_n);
        (*gradient)[2 * i + 1] = static_cast<float>(dy / d * inv_n);
      }
    }
  }
  return total * inv_n;
}

std::vector<Point2> predict(const nn::PosNet<float>& model, const data::Records& records) {
  constexpr std::size_t kChunk = 256;
  std::vector<Point2> out;
  out.reserve(records.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < records.size(); start += kChunk) {
    const std::size_t stop = std::min(records.size(), start + kChunk);
    idx.resize(stop - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto x = data::pack_batch(records, idx);
    const auto y = model.predict(x, static_cast<int>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out.push_back({static_cast<double>(y[2 * i]), static_cast<double>(y[2 * i + 1])});
    }
  }
  return out;
}

double evaluate(const nn::PosNet<float>& model, const data::Records& records) {
  if (records.empty()) throw EmptyInputError("cannot evaluate on no records");
  const auto estimates = predict(model, records);
  std::vector<Point2> truths;
  truths.reserve(records.size());
  for (const auto& r : records) truths.push_back(r.label);
  return metrics::mean_error(estimates, truths);
}

double dataset_loss(const nn::PosNet<float>& model, const data::Records& records, Loss loss) {
  if (records.empty()) throw EmptyInputError("cannot compute a loss on no records");
  const auto estimates = predict(model, records);
  std::vector<float> flat;
  flat.reserve(estimates.size() * 2);
  for (const auto& e : estimates) {
    flat.push_back(static_cast<float>(e[0]));
    flat.push_back(static_cast<float>(e[1]));
  }
  std::vector<Point2> truths;
  for (const auto& r : records) truths.push_back(r.label);
  return loss_and_gradient(flat, truths, loss, nullptr);
}

TrainResult train(nn::PosNet<float> model, const data::Records& train_records, const data::Records& val_records,
                  const TrainConfig& config, std::ostream* progress) {
  config.validate();
  TrainHistory history;
  if (config.max_epochs == 0) return {std::move(model), std::move(history)};
  if (train_records.empty() || val_records.empty()) {
    throw EmptyInputError("training needs non-empty train and validation records");
  }

  fit_label_transform(model, train_records);
  Adam adam(model.parameters(), config);
  nn::ParameterSet<float> best = model.parameters();
  double best_error = std::numeric_limits<double>::infinity();
  int since_improvement = 0;
  double learning_rate = config.learning_rate;

  const std::size_t n = train_records.size();
  std::vector<std::size_t> order(n);
  std::vector<float> grad;
  std::vector<Point2> targets;
  const auto start = std::chrono::steady_clock::now();

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(order[i], order[pick(rng)]);
    }

    double loss_sum = 0.0;
    std::size_t seen = 0;
    const std::size_t bs = static_cast<std::size_t>(config.batch_size);
    for (std::size_t b0 = 0; b0 < n; b0 += bs) {
      const std::size_t count = std::min(bs, n - b0);
      // Batch statistics of a single sample are degenerate.
      if (count == 1 && n > 1 && bs > 1) continue;
      const std::span<const std::size_t> idx(order.data() + b0, count);
      const auto x = data::pack_batch(train_records, idx);
      targets.clear();
      for (auto i : idx) targets.push_back(train_records[i].label);

      model.zero_grad();
      const auto out = model.forward(x, static_cast<int>(count), nn::Mode::kTrain);
      const double loss = loss_and_gradient(out, targets, config.loss, &grad);
      if (!std::isfinite(loss)) {
        throw DivergenceError(epoch, "training loss became non-finite in epoch " + std::to_string(epoch));
      }
      model.backward(grad);
      adam.step(model.parameters(), model.gradients(), learning_rate);
      loss_sum += loss * static_cast<double>(count);
      seen += count;
      ++history.steps;
      if (config.max_steps > 0 && history.steps >= config.max_steps) break;
    }
    if (!model.parameters().all_finite()) {
      throw DivergenceError(epoch, "parameters became non-finite in epoch " + std::to_string(epoch));
    }

    const double train_loss = seen > 0 ? loss_sum / static_cast<double>(seen) : 0.0;
    const double val_loss = dataset_loss(model, val_records, config.loss);
    const double val_error = evaluate(model, val_records);
    if (!std::isfinite(val_loss) || !std::isfinite(val_error)) {
      throw DivergenceError(epoch, "validation loss became non-finite in epoch " + std::to_string(epoch));
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    history.train_loss.push_back(train_loss);
    history.val_loss.push_back(val_loss);
    history.val_mean_error_mm.push_back(val_error);
    history.wall_time_s.push_back(elapsed);

    if (val_error < best_error) {
      best_error = val_error;
      best = model.parameters();
      history.best_epoch = epoch;
      since_improvement = 0;
    } else {
      ++since_improvement;
    }
    if (progress) {
      *progress << "epoch=" << epoch << " train_loss=" << train_loss << " val_loss=" << val_loss
                << " val_mm=" << val_error << " best_mm=" << best_error << " lr=" << learning_rate
                << " steps=" << history.steps << " t=" << elapsed << "s\n"
                << std::flush;
    }
    if (since_improvement >= config.patience) break;
    if (config.max_steps > 0 && history.steps >= config.max_steps) break;
    if (config.stop_at_val_error_mm > 0.0 && best_error <= config.stop_at_val_error_mm) break;
    learning_rate *= config.lr_decay;
  }

  model.parameters() = std::move(best);
  return {std::move(model), std::move(history)};
}

}  // namespace csipos::train
