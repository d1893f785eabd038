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

// Layer kernels used by the positioning network. Tensors are NCHW; every
// batched argument takes a per-sample stride so dense-block concatenation
// buffers can be addressed as channel prefixes without copies.
//
// Gradient outputs (grad_in, grad_weight, grad_bias, ...) ACCUMULATE into the
// destination; callers zero them. A null grad_in skips the input gradient.
//
// The kernels in csipos::kernels are OpenMP-parallel over samples (conv) or
// rows/channels (dense, batch norm). Per-thread partial sums are reduced in
// thread order, so results are bit-reproducible for a fixed thread count.
// csipos::kernels::reference holds straightforward serial versions with the
// same signatures; they exist for testing and benchmarking.

namespace csipos::kernels {

// 2-D convolution, stride 1, zero "same" padding, odd square kernel.
struct ConvShape {
  int in_channels = 1;
  int out_channels = 1;
  int rows = 1;
  int cols = 1;
  int kernel = 3;

  std::size_t plane() const { return static_cast<std::size_t>(rows) * cols; }
  std::size_t patch() const { return static_cast<std::size_t>(in_channels) * kernel * kernel; }
  std::size_t weight_count() const { return static_cast<std::size_t>(out_channels) * patch(); }
};

// C(R x N) += A(R x T) * B(T x N). A(r, t) = a[r * a_rs + t * a_ts];
// B and C are row-major with leading dimensions ldb / ldc. Serial.
template <typename T>
void gemm_acc(int rows, int cols, int inner, const T* a, std::size_t a_rs, std::size_t a_ts, const T* b,
              std::size_t ldb, T* c, std::size_t ldc);

template <typename T>
void conv2d_forward(const ConvShape& s, int batch, const T* in, std::size_t in_stride, const T* weight,
                    const T* bias, T* out, std::size_t out_stride);

template <typename T>
void conv2d_backward(const ConvShape& s, int batch, const T* in, std::size_t in_stride, const T* weight,
                     const T* grad_out, std::size_t grad_out_stride, T* grad_in, std::size_t grad_in_stride,
                     T* grad_weight, T* grad_bias);

// In-place ReLU on `count` values of each sample.
template <typename T>
void relu_forward(int batch, T* data, std::size_t stride, std::size_t count);

// grad *= (activation > 0), activation being the ReLU output.
template <typename T>
void relu_backward(int batch, const T* activation, T* grad, std::size_t stride, std::size_t count);

// Training-mode batch norm over (batch, plane) per channel. Stores the batch
// mean and inverse std for the backward pass and updates running statistics
// with running = (1 - momentum) * running + momentum * batch (unbiased var).
template <typename T>
void batchnorm_forward_train(int batch, int channels, std::size_t plane, const T* in, std::size_t stride,
                             const T* gamma, const T* beta, T* out, T* batch_mean, T* batch_inv_std,
                             T* running_mean, T* running_var, T momentum, T eps);

template <typename T>
void batchnorm_forward_infer(int batch, int channels, std::size_t plane, const T* in, std::size_t stride,
                             const T* gamma, const T* beta, const T* running_mean, const T* running_var,
                             T* out, T eps);

template <typename T>
void batchnorm_backward(int batch, int channels, std::size_t plane, const T* in, std::size_t stride,
                        const T* gamma, const T* batch_mean, const T* batch_inv_std, const T* grad_out,
                        T* grad_in, T* grad_gamma, T* grad_beta);

// 2x2 average pooling, stride 2; odd trailing rows/cols are dropped.
template <typename T>
void avgpool2_forward(int batch, int channels, int rows, int cols, const T* in, std::size_t in_stride, T* out,
                      std::size_t out_stride);

template <typename T>
void avgpool2_backward(int batch, int channels, int rows, int cols, const T* grad_out,
                       std::size_t grad_out_stride, T* grad_in, std::size_t grad_in_stride);

// out(batch x out_f) = in(batch x in_f) * weight(out_f x in_f)^T + bias
template <typename T>
void dense_forward(int batch, int in_features, int out_features, const T* in, const T* weight, const T* bias,
                   T* out);

template <typename T>
void dense_backward(int batch, int in_features, int out_features, const T* in, const T* weight,
                    const T* grad_out, T* grad_in, T* grad_weight, T* grad_bias);

namespace reference {

template <typename T>
void conv2d_forward(const ConvShape& s, int batch, const T* in, std::size_t in_stride, const T* weight,
                    const T* bias, T* out, std::size_t out_stride);

template <typename T>
void conv2d_backward(const ConvShape& s, int batch, const T* in, std::size_t in_stride, const T* weight,
                     const T* grad_out, std::size_t grad_out_stride, T* grad_in, std::size_t grad_in_stride,
                     T* grad_weight, T* grad_bias);

template <typename T>
void batchnorm_forward_train(int batch, int channels, std::size_t plane, const T* in, std::size_t stride,
                             const T* gamma, const T* beta, T* out, T* batch_mean, T* batch_inv_std,
                             T* running_mean, T* running_var, T momentum, T eps);

template <typename T>
void batchnorm_backward(int batch, int channels, std::size_t plane, const T* in, std::size_t stride,
                        const T* gamma, const T* batch_mean, const T* batch_inv_std, const T* grad_out,
                        T* grad_in, T* grad_gamma, T* grad_beta);

template <typename T>
void avgpool2_forward(int batch, int channels, int rows, int cols, const T* in, std::size_t in_stride, T* out,
                      std::size_t out_stride);

template <typename T>
void dense_forward(int batch, int in_features, int out_features, const T* in, const T* weight, const T* bias,
                   T* out);

template <typename T>
void dense_backward(int batch, int in_features, int out_features, const T* in, const T* weight,
                    const T* grad_out, T* grad_in, T* grad_weight, T* grad_bias);

}  // namespace reference

}  // namespace csipos::kernels
