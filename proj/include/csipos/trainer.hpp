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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "csipos/dataset.hpp"
#include "csipos/posnet.hpp"

namespace csipos::train {

enum class Loss { kMeanSquaredEuclidean, kMeanEuclidean };

const char* to_string(Loss loss);
Loss loss_from_string(const std::string& name);

// Adam with bias correction. learning_rate is decayed by lr_decay after every
// epoch. max_steps (0 = unlimited) and stop_at_val_error_mm (0 = disabled)
// end training early once reached.
struct TrainConfig {
  Loss loss = Loss::kMeanSquaredEuclidean;
  double learning_rate = 1e-3;
  double lr_decay = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 64;
  int max_epochs = 100;
  int patience = 10;
  long max_steps = 0;
  double stop_at_val_error_mm = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> val_mean_error_mm;
  std::vector<double> wall_time_s;
  int best_epoch = 0;  // 1-based; 0 when no epoch ran
  long steps = 0;

  std::size_t epochs() const { return train_loss.size(); }
  // Everything except wall-clock time.
  bool same_numerics(const TrainHistory& other) const;
};

struct TrainResult {
  nn::PosNet<float> model;
  TrainHistory history;
};

/// Trains on records whose features are already normalised. The label
/// transform is fitted on the training labels. Returns the snapshot with the
/// lowest validation mean error. Progress lines go to `progress` if given.
TrainResult train(nn::PosNet<float> model, const data::Records& train_records, const data::Records& val_records,
                  const TrainConfig& config, std::ostream* progress = nullptr);

// Inference-mode predictions, (n, 2) mm, in record order.
std::vector<Point2> predict(const nn::PosNet<float>& model, const data::Records& records);

double evaluate(const nn::PosNet<float>& model, const data::Records& records);

// Loss of the frozen model over the records, inference mode.
double dataset_loss(const nn::PosNet<float>& model, const data::Records& records, Loss loss);

// Batch loss and its gradient with respect to the outputs.
double loss_and_gradient(std::span<const float> outputs, std::span<const Point2> targets, Loss loss,
                         std::vector<float>* gradient);

}  // namespace csipos::train
