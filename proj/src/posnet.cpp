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

#include "csipos/posnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "csipos/error.hpp"

namespace csipos::nn {

void ModelConfig::validate() const {
  if (input_rows < 1 || input_cols < 1 || input_channels < 1) throw ConfigError("input dimensions must be >= 1");
  if (num_dense_blocks < 1 || layers_per_block < 1) throw ConfigError("need at least one dense block and layer");
  if (growth_rate < 1) throw ConfigError("growth_rate must be >= 1");
  if (use_stem && stem_channels < 1) throw ConfigError("stem_channels must be >= 1");
  if (kernel_size < 1 || kernel_size % 2 == 0) throw ConfigError("kernel_size must be odd and >= 1");
  for (int w : fc_widths) {
    if (w < 1) throw ConfigError("fc widths must be >= 1");
  }
  if (output_dim != 2) throw ConfigError("output_dim must be 2");
  if (!(bn_momentum > 0.0 && bn_momentum <= 1.0) || !(bn_eps > 0.0)) {
    throw ConfigError("batch-norm momentum must lie in (0, 1] and eps must be positive");
  }
  const int last = num_dense_blocks - 1;
  if (block_rows(last) < 1 || block_cols(last) < 1) {
    throw ConfigError("input " + std::to_string(input_rows) + "x" + std::to_string(input_cols) +
                      " pools below 1x1 before dense block " + std::to_string(num_dense_blocks));
  }
}

int ModelConfig::block_rows(int b) const {
  int r = input_rows;
  for (int i = 0; i < b; ++i) r /= 2;
  return r;
}

int ModelConfig::block_cols(int b) const {
  int c = input_cols;
  for (int i = 0; i < b; ++i) c /= 2;
  return c;
}

template <typename T>
std::size_t ParameterSet<T>::add(std::string name, std::vector<int> shape, bool trainable) {
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                        [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
  arrays_.push_back({std::move(name), std::move(shape), std::vector<T>(n, T(0)), trainable});
  return arrays_.size() - 1;
}

template <typename T>
std::size_t ParameterSet<T>::find(const std::string& name) const {
  for (std::size_t i = 0; i < arrays_.size(); ++i) {
    if (arrays_[i].name == name) return i;
  }
  return npos;
}

template <typename T>
ParamArray<T>& ParameterSet<T>::at(const std::string& name) {
  const auto i = find(name);
  if (i == npos) throw ConfigError("no parameter named " + name);
  return arrays_[i];
}

template <typename T>
const ParamArray<T>& ParameterSet<T>::at(const std::string& name) const {
  const auto i = find(name);
  if (i == npos) throw ConfigError("no parameter named " + name);
  return arrays_[i];
}

template <typename T>
std::size_t ParameterSet<T>::trainable_count() const {
  std::size_t n = 0;
  for (const auto& a : arrays_) {
    if (a.trainable) n += a.values.size();
  }
  return n;
}

template <typename T>
bool ParameterSet<T>::all_finite() const {
  for (const auto& a : arrays_) {
    for (T v : a.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

template <typename T>
PosNet<T>::PosNet(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const int k = config_.kernel_size;
  auto add_conv = [&](const std::string& name, int cin, int cout, int rows, int cols) {
    ConvRef ref;
    ref.shape = {cin, cout, rows, cols, k};
    ref.weight = params_.add(name + ".weight", {cout, cin, k, k}, true);
    ref.bias = params_.add(name + ".bias", {cout}, true);
    return ref;
  };

  int channels = config_.input_channels;
  if (config_.use_stem) {
    has_stem_ = true;
    stem_ = add_conv("stem", channels, config_.stem_channels, config_.input_rows, config_.input_cols);
    graph_.push_back({LayerKind::kConv, "stem", -1, channels, config_.stem_channels, config_.input_rows,
                      config_.input_cols});
    graph_.push_back({LayerKind::kReLU, "stem.relu", -1, config_.stem_channels, config_.stem_channels,
                      config_.input_rows, config_.input_cols});
    channels = config_.stem_channels;
  }

  for (int b = 0; b < config_.num_dense_blocks; ++b) {
    BlockRef block;
    block.c0 = channels;
    block.rows = config_.block_rows(b);
    block.cols = config_.block_cols(b);
    block.channels = channels + config_.layers_per_block * config_.growth_rate;
    const std::string prefix = "block" + std::to_string(b);
    for (int l = 0; l < config_.layers_per_block; ++l) {
      const int cin = channels + l * config_.growth_rate;
      const std::string name = prefix + ".conv" + std::to_string(l);
      if (l > 0) {
        graph_.push_back({LayerKind::kConcat, name + ".concat", b, cin, cin, block.rows, block.cols});
      }
      block.layers.push_back(add_conv(name, cin, config_.growth_rate, block.rows, block.cols));
      graph_.push_back({LayerKind::kConv, name, b, cin, config_.growth_rate, block.rows, block.cols});
      graph_.push_back(
          {LayerKind::kReLU, name + ".relu", b, config_.growth_rate, config_.growth_rate, block.rows, block.cols});
    }
    graph_.push_back({LayerKind::kConcat, prefix + ".concat", b, block.channels, block.channels, block.rows,
                      block.cols});
    if (config_.batchnorm_per_block) {
      block.gamma = params_.add(prefix + ".bn.gamma", {block.channels}, true);
      block.beta = params_.add(prefix + ".bn.beta", {block.channels}, true);
      block.running_mean = params_.add(prefix + ".bn.running_mean", {block.channels}, false);
      block.running_var = params_.add(prefix + ".bn.running_var", {block.channels}, false);
      graph_.push_back({LayerKind::kBatchNorm, prefix + ".bn", b, block.channels, block.channels, block.rows,
                        block.cols});
    }
    if (b + 1 < config_.num_dense_blocks) {
      graph_.push_back({LayerKind::kAvgPool, prefix + ".pool", b, block.channels, block.channels, block.rows / 2,
                        block.cols / 2});
    }
    channels = block.channels;
    blocks_.push_back(std::move(block));
  }

  const auto& last = blocks_.back();
  int features = static_cast<int>(last.sample_size());
  graph_.push_back({LayerKind::kFlatten, "flatten", -1, last.channels, features, 1, 1});
  std::vector<int> widths = config_.fc_widths;
  widths.push_back(config_.output_dim);
  for (std::size_t l = 0; l < widths.size(); ++l) {
    DenseRef ref;
    ref.in = features;
    ref.out = widths[l];
    const std::string name = "fc" + std::to_string(l);
    ref.weight = params_.add(name + ".weight", {ref.out, ref.in}, true);
    ref.bias = params_.add(name + ".bias", {ref.out}, true);
    graph_.push_back({LayerKind::kDense, name, -1, ref.in, ref.out, 1, 1});
    if (l + 1 < widths.size()) graph_.push_back({LayerKind::kReLU, name + ".relu", -1, ref.out, ref.out, 1, 1});
    dense_.push_back(ref);
    features = ref.out;
  }
  label_centre_ = params_.add("label.centre", {2}, false);
  label_scale_ = params_.add("label.scale", {1}, false);

  initialise(seed);
  grads_ = params_;
  zero_grad();
}

template <typename T>
void PosNet<T>::initialise(std::uint64_t seed) {
  params_.seed = seed;
  params_.init_scheme = "he-normal/zero-output";
  std::mt19937_64 rng(seed);
  auto he_fill = [&](std::vector<T>& w, std::size_t fan_in) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (auto& v : w) v = static_cast<T>(dist(rng));
  };
  if (has_stem_) he_fill(params_[stem_.weight].values, stem_.shape.patch());
  for (auto& block : blocks_) {
    for (auto& layer : block.layers) he_fill(params_[layer.weight].values, layer.shape.patch());
    if (config_.batchnorm_per_block) {
      std::fill(params_[block.gamma].values.begin(), params_[block.gamma].values.end(), T(1));
      std::fill(params_[block.running_var].values.begin(), params_[block.running_var].values.end(), T(1));
    }
  }
  // He init for hidden layers, zeros for the output layer.
  for (std::size_t l = 0; l + 1 < dense_.size(); ++l) {
    he_fill(params_[dense_[l].weight].values, static_cast<std::size_t>(dense_[l].in));
  }
  params_[label_scale_].values[0] = T(1);
}

template <typename T>
void PosNet<T>::set_label_transform(Point2 centre, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("label scale must be positive");
  params_[label_centre_].values = {static_cast<T>(centre[0]), static_cast<T>(centre[1])};
  params_[label_scale_].values = {static_cast<T>(scale)};
}

template <typename T>
Point2 PosNet<T>::label_centre() const {
  const auto& c = params_[label_centre_].values;
  return {static_cast<double>(c[0]), static_cast<double>(c[1])};
}

template <typename T>
double PosNet<T>::label_scale() const {
  return static_cast<double>(params_[label_scale_].values[0]);
}

template <typename T>
void PosNet<T>::zero_grad() {
  for (auto& g : grads_) std::fill(g.values.begin(), g.values.end(), T(0));
}

template <typename T>
void PosNet<T>::forward_impl(Workspace& ws, std::span<const T> input, int batch, Mode mode,
                             ParameterSet<T>* running_stats) const {
  const std::size_t in_plane = static_cast<std::size_t>(config_.input_rows) * config_.input_cols;
  const std::size_t in_size = in_plane * config_.input_channels;
  if (batch < 1 || input.size() != in_size * static_cast<std::size_t>(batch)) {
    throw ShapeMismatchError("forward expects (" + std::to_string(batch) + ", " +
                             std::to_string(config_.input_channels) + ", " + std::to_string(config_.input_rows) +
                             ", " + std::to_string(config_.input_cols) + ") input, got " +
                             std::to_string(input.size()) + " values");
  }
  const std::size_t nb = blocks_.size();
  ws.batch = batch;
  ws.cat.resize(nb);
  ws.block_out.resize(nb);
  ws.bn_mean.resize(nb);
  ws.bn_inv_std.resize(nb);
  ws.fc_act.resize(dense_.size());

  const T momentum = static_cast<T>(config_.bn_momentum);
  const T eps = static_cast<T>(config_.bn_eps);
  const auto& P = params_;

  for (std::size_t b = 0; b < nb; ++b) {
    const auto& block = blocks_[b];
    const std::size_t stride = block.sample_size();
    const std::size_t plane = block.plane();
    auto& cat = ws.cat[b];
    cat.assign(stride * static_cast<std::size_t>(batch), T(0));

    if (b == 0) {
      if (has_stem_) {
        ws.input.assign(input.begin(), input.end());
        kernels::conv2d_forward<T>(stem_.shape, batch, ws.input.data(), in_size, P[stem_.weight].values.data(),
                                   P[stem_.bias].values.data(), cat.data(), stride);
        kernels::relu_forward<T>(batch, cat.data(), stride, static_cast<std::size_t>(block.c0) * plane);
      } else {
        for (int n = 0; n < batch; ++n) {
          std::copy_n(input.data() + n * in_size, in_size, cat.data() + n * stride);
        }
      }
    } else {
      const auto& prev = blocks_[b - 1];
      kernels::avgpool2_forward<T>(batch, prev.channels, prev.rows, prev.cols, ws.block_out[b - 1].data(),
                                   prev.sample_size(), cat.data(), stride);
    }

    for (std::size_t l = 0; l < block.layers.size(); ++l) {
      const auto& layer = block.layers[l];
      T* slot = cat.data() + static_cast<std::size_t>(layer.shape.in_channels) * plane;
      kernels::conv2d_forward<T>(layer.shape, batch, cat.data(), stride, P[layer.weight].values.data(),
                                 P[layer.bias].values.data(), slot, stride);
      kernels::relu_forward<T>(batch, slot, stride, static_cast<std::size_t>(layer.shape.out_channels) * plane);
    }

    auto& out = ws.block_out[b];
    if (!config_.batchnorm_per_block) {
      out = cat;
      continue;
    }
    out.resize(stride * static_cast<std::size_t>(batch));
    if (mode == Mode::kTrain) {
      ws.bn_mean[b].resize(static_cast<std::size_t>(block.channels));
      ws.bn_inv_std[b].resize(static_cast<std::size_t>(block.channels));
      // Running statistics live in the parameter set; a const predict() never
      // reaches this branch.
      auto& stats = running_stats ? *running_stats : const_cast<ParameterSet<T>&>(params_);
      kernels::batchnorm_forward_train<T>(batch, block.channels, plane, cat.data(), stride,
                                          P[block.gamma].values.data(), P[block.beta].values.data(), out.data(),
                                          ws.bn_mean[b].data(), ws.bn_inv_std[b].data(),
                                          stats[block.running_mean].values.data(),
                                          stats[block.running_var].values.data(), momentum, eps);
    } else {
      kernels::batchnorm_forward_infer<T>(batch, block.channels, plane, cat.data(), stride,
                                          P[block.gamma].values.data(), P[block.beta].values.data(),
                                          P[block.running_mean].values.data(), P[block.running_var].values.data(),
                                          out.data(), eps);
    }
  }

  const T* x = ws.block_out.back().data();
  for (std::size_t l = 0; l < dense_.size(); ++l) {
    const auto& d = dense_[l];
    auto& act = ws.fc_act[l];
    act.resize(static_cast<std::size_t>(d.out) * batch);
    kernels::dense_forward<T>(batch, d.in, d.out, x, P[d.weight].values.data(), P[d.bias].values.data(),
                              act.data());
    if (l + 1 < dense_.size()) kernels::relu_forward<T>(batch, act.data(), static_cast<std::size_t>(d.out), d.out);
    x = act.data();
  }
}

template <typename T>
std::vector<T> PosNet<T>::read_output(const Workspace& ws) const {
  const auto& z = ws.fc_act.back();
  const auto& centre = params_[label_centre_].values;
  const T scale = params_[label_scale_].values[0];
  std::vector<T> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = centre[i % 2] + scale * z[i];
  return out;
}

template <typename T>
std::vector<T> PosNet<T>::forward(std::span<const T> input, int batch, Mode mode) {
  forward_impl(train_ws_, input, batch, mode, mode == Mode::kTrain ? &params_ : nullptr);
  return read_output(train_ws_);
}

template <typename T>
std::vector<T> PosNet<T>::predict(std::span<const T> input, int batch) const {
  constexpr int kChunk = 64;
  const std::size_t per_sample = static_cast<std::size_t>(config_.input_rows) * config_.input_cols *
                                 static_cast<std::size_t>(config_.input_channels);
  if (batch < 1 || input.size() != per_sample * static_cast<std::size_t>(batch)) {
    throw ShapeMismatchError("predict input size does not match batch x input shape");
  }
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(batch) * 2);
  Workspace ws;
  for (int n0 = 0; n0 < batch; n0 += kChunk) {
    const int nb = std::min(kChunk, batch - n0);
    forward_impl(ws, input.subspan(static_cast<std::size_t>(n0) * per_sample, per_sample * nb), nb,
                 Mode::kInference, nullptr);
    const auto part = read_output(ws);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

template <typename T>
void PosNet<T>::backward(std::span<const T> grad_output) {
  Workspace& ws = train_ws_;
  const int batch = ws.batch;
  if (batch < 1 || grad_output.size() != static_cast<std::size_t>(batch) * 2) {
    throw ShapeMismatchError("backward expects (batch, 2) gradient matching the last forward");
  }
  const auto& P = params_;
  auto& G = grads_;

  // d(output mm) -> d(network output)
  const T scale = P[label_scale_].values[0];
  std::vector<T> delta(grad_output.size());
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = scale * grad_output[i];

  for (std::size_t l = dense_.size(); l-- > 0;) {
    const auto& d = dense_[l];
    const T* x = l > 0 ? ws.fc_act[l - 1].data() : ws.block_out.back().data();
    std::vector<T> dx(static_cast<std::size_t>(d.in) * batch, T(0));
    kernels::dense_backward<T>(batch, d.in, d.out, x, P[d.weight].values.data(), delta.data(), dx.data(),
                               G[d.weight].values.data(), G[d.bias].values.data());
    if (l > 0) kernels::relu_backward<T>(batch, x, dx.data(), static_cast<std::size_t>(d.in), d.in);
    delta = std::move(dx);
  }

  // delta now holds d(block_out of the last block).
  std::vector<T> d_out = std::move(delta);
  for (std::size_t b = blocks_.size(); b-- > 0;) {
    const auto& block = blocks_[b];
    const std::size_t stride = block.sample_size();
    const std::size_t plane = block.plane();
    const auto& cat = ws.cat[b];
    std::vector<T> d_cat(stride * static_cast<std::size_t>(batch), T(0));

    if (config_.batchnorm_per_block) {
      kernels::batchnorm_backward<T>(batch, block.channels, plane, cat.data(), stride, P[block.gamma].values.data(),
                                     ws.bn_mean[b].data(), ws.bn_inv_std[b].data(), d_out.data(), d_cat.data(),
                                     G[block.gamma].values.data(), G[block.beta].values.data());
    } else {
      for (std::size_t i = 0; i < d_cat.size(); ++i) d_cat[i] += d_out[i];
    }

    for (std::size_t l = block.layers.size(); l-- > 0;) {
      const auto& layer = block.layers[l];
      const std::size_t offset = static_cast<std::size_t>(layer.shape.in_channels) * plane;
      const std::size_t count = static_cast<std::size_t>(layer.shape.out_channels) * plane;
      kernels::relu_backward<T>(batch, cat.data() + offset, d_cat.data() + offset, stride, count);
      kernels::conv2d_backward<T>(layer.shape, batch, cat.data(), stride, P[layer.weight].values.data(),
                                  d_cat.data() + offset, stride, d_cat.data(), stride, G[layer.weight].values.data(),
                                  G[layer.bias].values.data());
    }

    if (b > 0) {
      const auto& prev = blocks_[b - 1];
      std::vector<T> d_prev(prev.sample_size() * static_cast<std::size_t>(batch), T(0));
      kernels::avgpool2_backward<T>(batch, prev.channels, prev.rows, prev.cols, d_cat.data(), stride,
                                    d_prev.data(), prev.sample_size());
      d_out = std::move(d_prev);
    } else if (has_stem_) {
      const std::size_t count = static_cast<std::size_t>(block.c0) * plane;
      kernels::relu_backward<T>(batch, cat.data(), d_cat.data(), stride, count);
      const std::size_t in_size = static_cast<std::size_t>(config_.input_channels) * plane;
      kernels::conv2d_backward<T>(stem_.shape, batch, ws.input.data(), in_size, P[stem_.weight].values.data(),
                                  d_cat.data(), stride, nullptr, 0, G[stem_.weight].values.data(),
                                  G[stem_.bias].values.data());
    }
  }
}

template <typename T>
LayerCounts count_layers(const PosNet<T>& model) {
  LayerCounts counts;
  for (const auto& node : model.graph()) {
    if (node.kind == LayerKind::kConv) ++counts.conv;
    if (node.kind == LayerKind::kDense) ++counts.fc;
  }
  return counts;
}

std::size_t parameter_count(const ModelConfig& config) {
  // Shapes only depend on the config; a tiny float model is built to read them.
  return PosNet<float>(config, 0).parameters().trainable_count();
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template class PosNet<float>;
template class PosNet<double>;
template LayerCounts count_layers<float>(const PosNet<float>&);
template LayerCounts count_layers<double>(const PosNet<double>&);

}  // namespace csipos::nn
