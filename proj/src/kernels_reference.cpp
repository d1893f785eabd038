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

// Serial reference kernels. Deliberately naive loop nests that mirror the
// mathematical definitions; the optimised kernels are tested against these.

#include <cmath>
#include <vector>

#include "csipos/kernels.hpp"

namespace csipos::kernels::reference {

template <typename T>
void conv2d_forward(const ConvShape& s, int batch, const T* in, std::size_t in_stride, const T* weight,
                    const T* bias, T* out, std::size_t out_stride) {
  const int k = s.kernel;
  const int pad = k / 2;
  for (int n = 0; n < batch; ++n) {
    for (int co = 0; co < s.out_channels; ++co) {
      for (int r = 0; r < s.rows; ++r) {
        for (int c = 0; c < s.cols; ++c) {
          T sum = bias[co];
          for (int ci = 0; ci < s.in_channels; ++ci) {
            for (int kh = 0; kh < k; ++kh) {
              for (int kw = 0; kw < k; ++kw) {
                const int rr = r + kh - pad;
                const int cc = c + kw - pad;
                if (rr < 0 || rr >= s.rows || cc < 0 || cc >= s.cols) continue;
                sum += weight[((co * s.in_channels + ci) * k + kh) * k + kw] *
                       in[n * in_stride + (ci * s.rows + rr) * s.cols + cc];
              }
            }
          }
          out[n * out_stride + (co * s.rows + r) * s.cols + c] = sum;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward(const ConvShape& s, int batch, const T* in, std::size_t in_stride, const T* weight,
                     const T* grad_out, std::size_t grad_out_stride, T* grad_in, std::size_t grad_in_stride,
                     T* grad_weight, T* grad_bias) {
  const int k = s.kernel;
  const int pad = k / 2;
  for (int n = 0; n < batch; ++n) {
    for (int co = 0; co < s.out_channels; ++co) {
      for (int r = 0; r < s.rows; ++r) {
        for (int c = 0; c < s.cols; ++c) {
          const T g = grad_out[n * grad_out_stride + (co * s.rows + r) * s.cols + c];
          grad_bias[co] += g;
          for (int ci = 0; ci < s.in_channels; ++ci) {
            for (int kh = 0; kh < k; ++kh) {
              for (int kw = 0; kw < k; ++kw) {
                const int rr = r + kh - pad;
                const int cc = c + kw - pad;
                if (rr < 0 || rr >= s.rows || cc < 0 || cc >= s.cols) continue;
                const std::size_t wi = ((co * s.in_channels + ci) * k + kh) * k + kw;
                const std::size_t xi = (ci * s.rows + rr) * s.cols + cc;
                grad_weight[wi] += g * in[n * in_stride + xi];
                if (grad_in) grad_in[n * grad_in_stride + xi] += g * weight[wi];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void batchnorm_forward_train(int batch, int channels, std::size_t plane, const T* in, std::size_t stride,
                             const T* gamma, const T* beta, T* out, T* batch_mean, T* batch_inv_std,
                             T* running_mean, T* running_var, T momentum, T eps) {
  const double count = static_cast<double>(batch) * static_cast<double>(plane);
  for (int c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (int n = 0; n < batch; ++n)
      for (std::size_t p = 0; p < plane; ++p) sum += in[n * stride + c * plane + p];
    const double mean = sum / count;
    double sq = 0.0;
    for (int n = 0; n < batch; ++n)
      for (std::size_t p = 0; p < plane; ++p) {
        const double d = in[n * stride + c * plane + p] - mean;
        sq += d * d;
      }
    const double var = sq / count;
    const double inv_std = 1.0 / std::sqrt(var + eps);
    batch_mean[c] = static_cast<T>(mean);
    batch_inv_std[c] = static_cast<T>(inv_std);
    running_mean[c] = static_cast<T>((1.0 - momentum) * running_mean[c] + momentum * mean);
    running_var[c] = static_cast<T>((1.0 - momentum) * running_var[c] +
                                    momentum * (count > 1.0 ? sq / (count - 1.0) : var));
    for (int n = 0; n < batch; ++n)
      for (std::size_t p = 0; p < plane; ++p) {
        const double xhat = (in[n * stride + c * plane + p] - mean) * inv_std;
        out[(n * channels + c) * plane + p] = static_cast<T>(gamma[c] * xhat + beta[c]);
      }
  }
}

template <typename T>
void batchnorm_backward(int batch, int channels, std::size_t plane, const T* in, std::size_t stride,
                        const T* gamma, const T* batch_mean, const T* batch_inv_std, const T* grad_out,
                        T* grad_in, T* grad_gamma, T* grad_beta) {
  const double count = static_cast<double>(batch) * static_cast<double>(plane);
  for (int c = 0; c < channels; ++c) {
    std::vector<double> xhat;
    std::vector<double> dy;
    for (int n = 0; n < batch; ++n)
      for (std::size_t p = 0; p < plane; ++p) {
        xhat.push_back((in[n * stride + c * plane + p] - batch_mean[c]) * batch_inv_std[c]);
        dy.push_back(grad_out[(n * channels + c) * plane + p]);
      }
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (std::size_t i = 0; i < dy.size(); ++i) {
      sum_dy += dy[i];
      sum_dy_xhat += dy[i] * xhat[i];
    }
    grad_gamma[c] += static_cast<T>(sum_dy_xhat);
    grad_beta[c] += static_cast<T>(sum_dy);
    std::size_t i = 0;
    for (int n = 0; n < batch; ++n)
      for (std::size_t p = 0; p < plane; ++p, ++i) {
        grad_in[n * stride + c * plane + p] += static_cast<T>(
            gamma[c] * batch_inv_std[c] / count * (count * dy[i] - sum_dy - xhat[i] * sum_dy_xhat));
      }
  }
}

template <typename T>
void avgpool2_forward(int batch, int channels, int rows, int cols, const T* in, std::size_t in_stride, T* out,
                      std::size_t out_stride) {
  const int orows = rows / 2;
  const int ocols = cols / 2;
  for (int n = 0; n < batch; ++n)
    for (int c = 0; c < channels; ++c)
      for (int r = 0; r < orows; ++r)
        for (int q = 0; q < ocols; ++q) {
          T sum = 0;
          for (int dr = 0; dr < 2; ++dr)
            for (int dq = 0; dq < 2; ++dq) sum += in[n * in_stride + (c * rows + 2 * r + dr) * cols + 2 * q + dq];
          out[n * out_stride + (c * orows + r) * ocols + q] = sum / T(4);
        }
}

template <typename T>
void dense_forward(int batch, int in_features, int out_features, const T* in, const T* weight, const T* bias,
                   T* out) {
  for (int n = 0; n < batch; ++n)
    for (int j = 0; j < out_features; ++j) {
      T sum = bias[j];
      for (int i = 0; i < in_features; ++i) sum += weight[j * in_features + i] * in[n * in_features + i];
      out[n * out_features + j] = sum;
    }
}

template <typename T>
void dense_backward(int batch, int in_features, int out_features, const T* in, const T* weight,
                    const T* grad_out, T* grad_in, T* grad_weight, T* grad_bias) {
  for (int n = 0; n < batch; ++n)
    for (int j = 0; j < out_features; ++j) {
      const T g = grad_out[n * out_features + j];
      grad_bias[j] += g;
      for (int i = 0; i < in_features; ++i) {
        grad_weight[j * in_features + i] += g * in[n * in_features + i];
        if (grad_in) grad_in[n * in_features + i] += g * weight[j * in_features + i];
      }
    }
}

#define CSIPOS_INSTANTIATE(T)                                                                                  \
  template void conv2d_forward<T>(const ConvShape&, int, const T*, std::size_t, const T*, const T*, T*,        \
                                  std::size_t);                                                                \
  template void conv2d_backward<T>(const ConvShape&, int, const T*, std::size_t, const T*, const T*,           \
                                   std::size_t, T*, std::size_t, T*, T*);                                      \
  template void batchnorm_forward_train<T>(int, int, std::size_t, const T*, std::size_t, const T*, const T*,   \
                                           T*, T*, T*, T*, T*, T, T);                                          \
  template void batchnorm_backward<T>(int, int, std::size_t, const T*, std::size_t, const T*, const T*,        \
                                      const T*, const T*, T*, T*, T*);                                         \
  template void avgpool2_forward<T>(int, int, int, int, const T*, std::size_t, T*, std::size_t);               \
  template void dense_forward<T>(int, int, int, const T*, const T*, const T*, T*);                             \
  template void dense_backward<T>(int, int, int, const T*, const T*, const T*, T*, T*, T*);

CSIPOS_INSTANTIATE(float)
CSIPOS_INSTANTIATE(double)

#undef CSIPOS_INSTANTIATE

}  // namespace csipos::kernels::reference
