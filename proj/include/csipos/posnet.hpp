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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "csipos/geometry.hpp"
#include "csipos/kernels.hpp"

namespace csipos::nn {

/// Hyperparameters of the dense-block regression network.
///
/// Layout: [optional stem conv] -> (dense block -> batch norm -> 2x2 average
/// pool) x num_dense_blocks, with no pooling after the last block -> flatten ->
/// fully connected layers of fc_widths -> linear output of output_dim.
/// Inside a block, layer i sees the concatenation of the block input and every
/// earlier layer output, i.e. c0 + i * growth_rate channels, and emits
/// growth_rate channels. Every conv and hidden dense layer is followed by ReLU.
struct ModelConfig {
  int input_rows = 64;       // antennas
  int input_cols = 100;      // subcarriers
  int input_channels = 2;    // real / imaginary
  int num_dense_blocks = 4;
  int layers_per_block = 4;
  int growth_rate = 12;
  bool use_stem = false;
  int stem_channels = 16;
  int kernel_size = 3;
  std::vector<int> fc_widths{256, 128};
  int output_dim = 2;
  bool batchnorm_per_block = true;
  double bn_momentum = 0.1;
  double bn_eps = 1e-3;

  void validate() const;
  // Spatial size entering block b.
  int block_rows(int b) const;
  int block_cols(int b) const;
};

enum class LayerKind { kConv, kReLU, kConcat, kBatchNorm, kAvgPool, kFlatten, kDense };

struct LayerNode {
  LayerKind kind;
  std::string name;
  int block = -1;  // -1 outside dense blocks
  int in_channels = 0;
  int out_channels = 0;
  int rows = 0;
  int cols = 0;
};

struct LayerCounts {
  int conv = 0;
  int fc = 0;
  friend bool operator==(const LayerCounts&, const LayerCounts&) = default;
};

template <typename T>
struct ParamArray {
  std::string name;
  std::vector<int> shape;
  std::vector<T> values;
  bool trainable = true;
};

/// Named weight arrays in a fixed order. Non-trainable entries are buffers
/// (batch-norm running statistics, label transform).
template <typename T>
class ParameterSet {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t add(std::string name, std::vector<int> shape, bool trainable);
  std::size_t find(const std::string& name) const;
  ParamArray<T>& at(const std::string& name);
  const ParamArray<T>& at(const std::string& name) const;

  ParamArray<T>& operator[](std::size_t i) { return arrays_[i]; }
  const ParamArray<T>& operator[](std::size_t i) const { return arrays_[i]; }
  std::size_t size() const { return arrays_.size(); }
  auto begin() { return arrays_.begin(); }
  auto end() { return arrays_.end(); }
  auto begin() const { return arrays_.begin(); }
  auto end() const { return arrays_.end(); }

  std::size_t trainable_count() const;
  bool all_finite() const;

  std::string init_scheme;
  std::uint64_t seed = 0;

 private:
  std::vector<ParamArray<T>> arrays_;
};

enum class Mode { kTrain, kInference };

template <typename T>
class PosNet {
 public:
  PosNet(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  std::uint64_t seed() const { return params_.seed; }
  const std::vector<LayerNode>& graph() const { return graph_; }

  ParameterSet<T>& parameters() { return params_; }
  const ParameterSet<T>& parameters() const { return params_; }
  ParameterSet<T>& gradients() { return grads_; }
  const ParameterSet<T>& gradients() const { return grads_; }

  // Output = centre + scale * network output; keeps targets O(1) for training
  // while predictions stay in millimetres.
  void set_label_transform(Point2 centre, double scale);
  Point2 label_centre() const;
  double label_scale() const;

  /// input is (batch, input_channels, input_rows, input_cols); returns
  /// (batch, output_dim) in mm. Training mode uses batch statistics, updates
  /// running statistics, and caches activations for backward().
  std::vector<T> forward(std::span<const T> input, int batch, Mode mode);

  /// Inference with a private workspace; safe to call concurrently.
  std::vector<T> predict(std::span<const T> input, int batch) const;

  /// Back-propagates dLoss/dOutput (mm units) from the last training-mode
  /// forward; gradients accumulate until zero_grad().
  void backward(std::span<const T> grad_output);
  void zero_grad();

 private:
  struct ConvRef {
    std::size_t weight = 0;
    std::size_t bias = 0;
    kernels::ConvShape shape;
  };
  struct BlockRef {
    int c0 = 0;
    int channels = 0;
    int rows = 0;
    int cols = 0;
    std::vector<ConvRef> layers;
    std::size_t gamma = 0;
    std::size_t beta = 0;
    std::size_t running_mean = 0;
    std::size_t running_var = 0;
    std::size_t plane() const { return static_cast<std::size_t>(rows) * cols; }
    std::size_t sample_size() const { return plane() * static_cast<std::size_t>(channels); }
  };
  struct DenseRef {
    std::size_t weight = 0;
    std::size_t bias = 0;
    int in = 0;
    int out = 0;
  };
  struct Workspace {
    int batch = 0;
    std::vector<T> input;
    std::vector<std::vector<T>> cat;
    std::vector<std::vector<T>> block_out;
    std::vector<std::vector<T>> bn_mean;
    std::vector<std::vector<T>> bn_inv_std;
    std::vector<std::vector<T>> fc_act;  // fc_act[l] = output of dense l (post-ReLU for hidden)
  };

  void forward_impl(Workspace& ws, std::span<const T> input, int batch, Mode mode,
                    ParameterSet<T>* running_stats) const;
  std::vector<T> read_output(const Workspace& ws) const;
  void initialise(std::uint64_t seed);

  ModelConfig config_;
  std::vector<LayerNode> graph_;
  ParameterSet<T> params_;
  ParameterSet<T> grads_;
  bool has_stem_ = false;
  ConvRef stem_;
  std::vector<BlockRef> blocks_;
  std::vector<DenseRef> dense_;
  std::size_t label_centre_ = 0;
  std::size_t label_scale_ = 0;
  Workspace train_ws_;
};

template <typename T>
LayerCounts count_layers(const PosNet<T>& model);

std::size_t parameter_count(const ModelConfig& config);

extern template class ParameterSet<float>;
extern template class ParameterSet<double>;
extern template class PosNet<float>;
extern template class PosNet<double>;

}  // namespace csipos::nn
