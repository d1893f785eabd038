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

#include "csipos/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace csipos::kernels {

namespace {

template <typename T>
constexpr int kLanes = static_cast<int>(64 / sizeof(T));

constexpr int kRowBlock = 8;

// Register-blocked tile: CB rows of C by V columns, accumulated over `inner`.
template <typename T, int CB, int V>
inline void gemm_tile(int inner, const T* a, std::size_t a_rs, std::size_t a_ts, const T* b, std::size_t ldb,
                      T* c, std::size_t ldc) {
  T acc[CB][V];
  for (int i = 0; i < CB; ++i) {
#pragma omp simd
    for (int v = 0; v < V; ++v) acc[i][v] = c[i * ldc + v];
  }
  for (int t = 0; t < inner; ++t) {
    const T* bt = b + static_cast<std::size_t>(t) * ldb;
    const T* at = a + static_cast<std::size_t>(t) * a_ts;
    for (int i = 0; i < CB; ++i) {
      const T av = at[i * a_rs];
#pragma omp simd
      for (int v = 0; v < V; ++v) acc[i][v] += av * bt[v];
    }
  }
  for (int i = 0; i < CB; ++i) {
#pragma omp simd
    for (int v = 0; v < V; ++v) c[i * ldc + v] = acc[i][v];
  }
}

template <typename T, int CB>
inline void gemm_tile_narrow(int width, int inner, const T* a, std::size_t a_rs, std::size_t a_ts, const T* b,
                             std::size_t ldb, T* c, std::size_t ldc) {
  for (int i = 0; i < CB; ++i) {
    for (int v = 0; v < width; ++v) {
      T acc = c[i * ldc + v];
      for (int t = 0; t < inner; ++t) acc += a[i * a_rs + t * a_ts] * b[static_cast<std::size_t>(t) * ldb + v];
      c[i * ldc + v] = acc;
    }
  }
}

template <typename T, int CB>
inline void gemm_row_block(int cols, int inner, const T* a, std::size_t a_rs, std::size_t a_ts, const T* b,
                           std::size_t ldb, T* c, std::size_t ldc) {
  constexpr int V = kLanes<T>;
  int n0 = 0;
  for (; n0 + V <= cols; n0 += V) gemm_tile<T, CB, V>(inner, a, a_rs, a_ts, b + n0, ldb, c + n0, ldc);
  if (n0 + V / 2 <= cols) {
    gemm_tile<T, CB, V / 2>(inner, a, a_rs, a_ts, b + n0, ldb, c + n0, ldc);
    n0 += V / 2;
  }
  if (n0 < cols) gemm_tile_narrow<T, CB>(cols - n0, inner, a, a_rs, a_ts, b + n0, ldb, c + n0, ldc);
}

// Patch-major im2col: colT[p * patch + (ci * k + kh) * k + kw].
template <typename T>
void im2col_t(const ConvShape& s, const T* in, T* col_t) {
  const int k = s.kernel;
  const int pad = k / 2;
  const std::size_t patch = s.patch();
  for (int r = 0; r < s.rows; ++r) {
    for (int c = 0; c < s.cols; ++c) {
      T* dst = col_t + (static_cast<std::size_t>(r) * s.cols + c) * patch;
      for (int ci = 0; ci < s.in_channels; ++ci) {
        const T* src = in + static_cast<std::size_t>(ci) * s.plane();
        for (int kh = 0; kh < k; ++kh) {
          const int rr = r + kh - pad;
          for (int kw = 0; kw < k; ++kw) {
            const int cc = c + kw - pad;
            *dst++ = (rr >= 0 && rr < s.rows && cc >= 0 && cc < s.cols)
                         ? src[static_cast<std::size_t>(rr) * s.cols + cc]
                         : T(0);
          }
        }
      }
    }
  }
}

// Row-major im2col: col[((ci * k + kh) * k + kw) * plane + p].
template <typename T>
void im2col(const ConvShape& s, const T* in, T* col) {
  const int k = s.kernel;
  const int pad = k / 2;
  const std::size_t plane = s.plane();
  for (int ci = 0; ci < s.in_channels; ++ci) {
    const T* src = in + static_cast<std::size_t>(ci) * plane;
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        T* dst = col + (static_cast<std::size_t>(ci * k + kh) * k + kw) * plane;
        for (int r = 0; r < s.rows; ++r) {
          const int rr = r + kh - pad;
          T* drow = dst + static_cast<std::size_t>(r) * s.cols;
          if (rr < 0 || rr >= s.rows) {
            std::fill(drow, drow + s.cols, T(0));
            continue;
          }
          const T* srow = src + static_cast<std::size_t>(rr) * s.cols;
          const int shift = kw - pad;
          for (int c = 0; c < s.cols; ++c) {
            const int cc = c + shift;
            drow[c] = (cc >= 0 && cc < s.cols) ? srow[cc] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_acc(const ConvShape& s, const T* col, T* grad_in) {
  const int k = s.kernel;
  const int pad = k / 2;
  const std::size_t plane = s.plane();
  for (int ci = 0; ci < s.in_channels; ++ci) {
    T* dst = grad_in + static_cast<std::size_t>(ci) * plane;
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        const T* src = col + (static_cast<std::size_t>(ci * k + kh) * k + kw) * plane;
        const int shift = kw - pad;
        for (int r = 0; r < s.rows; ++r) {
          const int rr = r + kh - pad;
          if (rr < 0 || rr >= s.rows) continue;
          const T* srow = src + static_cast<std::size_t>(r) * s.cols;
          T* drow = dst + static_cast<std::size_t>(rr) * s.cols;
          const int c_lo = std::max(0, -shift);
          const int c_hi = std::min(s.cols, s.cols - shift);
          for (int c = c_lo; c < c_hi; ++c) drow[c + shift] += srow[c];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
void gemm_acc(int rows, int cols, int inner, const T* a, std::size_t a_rs, std::size_t a_ts, const T* b,
              std::size_t ldb, T* c, std::size_t ldc) {
  int r0 = 0;
  for (; r0 + kRowBlock <= rows; r0 += kRowBlock) {
    gemm_row_block<T, kRowBlock>(cols, inner, a + r0 * a_rs, a_rs, a_ts, b, ldb, c + r0 * ldc, ldc);
  }
  for (; r0 < rows; ++r0) gemm_row_block<T, 1>(cols, inner, a + r0 * a_rs, a_rs, a_ts, b, ldb, c + r0 * ldc, ldc);
}

template <typename T>
void conv2d_forward(const ConvShape& s, int batch, const T* in, std::size_t in_stride, const T* weight,
                    const T* bias, T* out, std::size_t out_stride) {
  const std::size_t plane = s.plane();
  const std::size_t patch = s.patch();
#pragma omp parallel
  {
    std::vector<T> col(patch * plane);
#pragma omp for schedule(static)
    for (int n = 0; n < batch; ++n) {
      im2col(s, in + n * in_stride, col.data());
      T* o = out + n * out_stride;
      for (int co = 0; co < s.out_channels; ++co) std::fill(o + co * plane, o + (co + 1) * plane, bias[co]);
      gemm_acc<T>(s.out_channels, static_cast<int>(plane), static_cast<int>(patch), weight, patch, 1, col.data(),
                  plane, o, plane);
    }
  }
}

template <typename T>
void conv2d_backward(const ConvShape& s, int batch, const T* in, std::size_t in_stride, const T* weight,
                     const T* grad_out, std::size_t grad_out_stride, T* grad_in, std::size_t grad_in_stride,
                     T* grad_weight, T* grad_bias) {
  const std::size_t plane = s.plane();
  const std::size_t patch = s.patch();
  const std::size_t wcount = s.weight_count();
  const int threads = omp_get_max_threads();
  std::vector<std::vector<T>> partial_w(static_cast<std::size_t>(threads));
  std::vector<std::vector<T>> partial_b(static_cast<std::size_t>(threads));

#pragma omp parallel
  {
    const int tid = omp_get_thread_num();
    auto& gw = partial_w[static_cast<std::size_t>(tid)];
    auto& gb = partial_b[static_cast<std::size_t>(tid)];
    gw.assign(wcount, T(0));
    gb.assign(static_cast<std::size_t>(s.out_channels), T(0));
    std::vector<T> col_t(patch * plane);
    std::vector<T> dcol(grad_in ? patch * plane : 0);
#pragma omp for schedule(static)
    for (int n = 0; n < batch; ++n) {
      const T* go = grad_out + n * grad_out_stride;
      for (int co = 0; co < s.out_channels; ++co) {
        const T* row = go + co * plane;
        T acc = 0;
#pragma omp simd reduction(+ : acc)
        for (std::size_t p = 0; p < plane; ++p) acc += row[p];
        gb[static_cast<std::size_t>(co)] += acc;
      }
      im2col_t(s, in + n * in_stride, col_t.data());
      gemm_acc<T>(s.out_channels, static_cast<int>(patch), static_cast<int>(plane), go, plane, 1, col_t.data(),
                  patch, gw.data(), patch);
      if (grad_in) {
        std::fill(dcol.begin(), dcol.end(), T(0));
        gemm_acc<T>(static_cast<int>(patch), static_cast<int>(plane), s.out_channels, weight, 1, patch, go, plane,
                    dcol.data(), plane);
        col2im_acc(s, dcol.data(), grad_in + n * grad_in_stride);
      }
    }
  }
  for (int t = 0; t < threads; ++t) {
    const auto& gw = partial_w[static_cast<std::size_t>(t)];
    const auto& gb = partial_b[static_cast<std::size_t>(t)];
    if (gw.empty()) continue;
    for (std::size_t i = 0; i < wcount; ++i) grad_weight[i] += gw[i];
    for (int co = 0; co < s.out_channels; ++co) grad_bias[co] += gb[static_cast<std::size_t>(co)];
  }
}

template <typename T>
void relu_forward(int batch, T* data, std::size_t stride, std::size_t count) {
#pragma omp parallel for schedule(static)
  for (int n = 0; n < batch; ++n) {
    T* p = data + n * stride;
#pragma omp simd
    for (std::size_t i = 0; i < count; ++i) p[i] = p[i] > T(0) ? p[i] : T(0);
  }
}

template <typename T>
void relu_backward(int batch, const T* activation, T* grad, std::size_t stride, std::size_t count) {
#pragma omp parallel for schedule(static)
  for (int n = 0; n < batch; ++n) {
    const T* a = activation + n * stride;
    T* g = grad + n * stride;
#pragma omp simd
    for (std::size_t i = 0; i < count; ++i) g[i] = a[i] > T(0) ? g[i] : T(0);
  }
}

template <typename T>
void batchnorm_forward_train(int batch, int channels, std::size_t plane, const T* in, std::size_t stride,
                             const T* gamma, const T* beta, T* out, T* batch_mean, T* batch_inv_std,
                             T* running_mean, T* running_var, T momentum, T eps) {
  const double count = static_cast<double>(batch) * static_cast<double>(plane);
  const std::size_t out_stride = static_cast<std::size_t>(channels) * plane;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (int n = 0; n < batch; ++n) {
      const T* x = in + n * stride + c * plane;
#pragma omp simd reduction(+ : sum)
      for (std::size_t p = 0; p < plane; ++p) sum += static_cast<double>(x[p]);
    }
    const double mean = sum / count;
    double sq = 0.0;
    for (int n = 0; n < batch; ++n) {
      const T* x = in + n * stride + c * plane;
#pragma omp simd reduction(+ : sq)
      for (std::size_t p = 0; p < plane; ++p) {
        const double d = static_cast<double>(x[p]) - mean;
        sq += d * d;
      }
    }
    const double var = sq / count;
    const T inv_std = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
    const T m = static_cast<T>(mean);
    batch_mean[c] = m;
    batch_inv_std[c] = inv_std;
    const double unbiased = count > 1.0 ? sq / (count - 1.0) : var;
    running_mean[c] = (T(1) - momentum) * running_mean[c] + momentum * m;
    running_var[c] = (T(1) - momentum) * running_var[c] + momentum * static_cast<T>(unbiased);
    const T g = gamma[c] * inv_std;
    const T b = beta[c];
    for (int n = 0; n < batch; ++n) {
      const T* x = in + n * stride + c * plane;
      T* y = out + n * out_stride + c * plane;
#pragma omp simd
      for (std::size_t p = 0; p < plane; ++p) y[p] = (x[p] - m) * g + b;
    }
  }
}

template <typename T>
void batchnorm_forward_infer(int batch, int channels, std::size_t plane, const T* in, std::size_t stride,
                             const T* gamma, const T* beta, const T* running_mean, const T* running_var,
                             T* out, T eps) {
  const std::size_t out_stride = static_cast<std::size_t>(channels) * plane;
#pragma omp parallel for schedule(static)
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < channels; ++c) {
      const T inv_std = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var[c]) + eps));
      const T g = gamma[c] * inv_std;
      const T m = running_mean[c];
      const T b = beta[c];
      const T* x = in + n * stride + c * plane;
      T* y = out + n * out_stride + c * plane;
#pragma omp simd
      for (std::size_t p = 0; p < plane; ++p) y[p] = (x[p] - m) * g + b;
    }
  }
}

template <typename T>
void batchnorm_backward(int batch, int channels, std::size_t plane, const T* in, std::size_t stride,
                        const T* gamma, const T* batch_mean, const T* batch_inv_std, const T* grad_out,
                        T* grad_in, T* grad_gamma, T* grad_beta) {
  const double count = static_cast<double>(batch) * static_cast<double>(plane);
  const std::size_t out_stride = static_cast<std::size_t>(channels) * plane;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    const T m = batch_mean[c];
    const T inv_std = batch_inv_std[c];
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (int n = 0; n < batch; ++n) {
      const T* x = in + n * stride + c * plane;
      const T* dy = grad_out + n * out_stride + c * plane;
#pragma omp simd reduction(+ : sum_dy, sum_dy_xhat)
      for (std::size_t p = 0; p < plane; ++p) {
        sum_dy += static_cast<double>(dy[p]);
        sum_dy_xhat += static_cast<double>(dy[p]) * static_cast<double>((x[p] - m) * inv_std);
      }
    }
    grad_gamma[c] += static_cast<T>(sum_dy_xhat);
    grad_beta[c] += static_cast<T>(sum_dy);
    const T k = gamma[c] * inv_std;
    const T mean_dy = static_cast<T>(sum_dy / count);
    const T mean_dy_xhat = static_cast<T>(sum_dy_xhat / count);
    for (int n = 0; n < batch; ++n) {
      const T* x = in + n * stride + c * plane;
      const T* dy = grad_out + n * out_stride + c * plane;
      T* dx = grad_in + n * stride + c * plane;
#pragma omp simd
      for (std::size_t p = 0; p < plane; ++p) {
        const T xhat = (x[p] - m) * inv_std;
        dx[p] += k * (dy[p] - mean_dy - xhat * mean_dy_xhat);
      }
    }
  }
}

template <typename T>
void avgpool2_forward(int batch, int channels, int rows, int cols, const T* in, std::size_t in_stride, T* out,
                      std::size_t out_stride) {
  const int orows = rows / 2;
  const int ocols = cols / 2;
  const std::size_t iplane = static_cast<std::size_t>(rows) * cols;
  const std::size_t oplane = static_cast<std::size_t>(orows) * ocols;
#pragma omp parallel for schedule(static)
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < channels; ++c) {
      const T* x = in + n * in_stride + c * iplane;
      T* y = out + n * out_stride + c * oplane;
      for (int r = 0; r < orows; ++r) {
        const T* r0 = x + static_cast<std::size_t>(2 * r) * cols;
        const T* r1 = r0 + cols;
        for (int q = 0; q < ocols; ++q) {
          y[r * ocols + q] = T(0.25) * (r0[2 * q] + r0[2 * q + 1] + r1[2 * q] + r1[2 * q + 1]);
        }
      }
    }
  }
}

template <typename T>
void avgpool2_backward(int batch, int channels, int rows, int cols, const T* grad_out,
                       std::size_t grad_out_stride, T* grad_in, std::size_t grad_in_stride) {
  const int orows = rows / 2;
  const int ocols = cols / 2;
  const std::size_t iplane = static_cast<std::size_t>(rows) * cols;
  const std::size_t oplane = static_cast<std::size_t>(orows) * ocols;
#pragma omp parallel for schedule(static)
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < channels; ++c) {
      const T* dy = grad_out + n * grad_out_stride + c * oplane;
      T* dx = grad_in + n * grad_in_stride + c * iplane;
      for (int r = 0; r < orows; ++r) {
        T* r0 = dx + static_cast<std::size_t>(2 * r) * cols;
        T* r1 = r0 + cols;
        for (int q = 0; q < ocols; ++q) {
          const T g = T(0.25) * dy[r * ocols + q];
          r0[2 * q] += g;
          r0[2 * q + 1] += g;
          r1[2 * q] += g;
          r1[2 * q + 1] += g;
        }
      }
    }
  }
}

template <typename T>
void dense_forward(int batch, int in_features, int out_features, const T* in, const T* weight, const T* bias,
                   T* out) {
  // out^T = W * in^T, computed on a transposed copy of the input.
  std::vector<T> in_t(static_cast<std::size_t>(in_features) * batch);
  for (int n = 0; n < batch; ++n) {
    for (int i = 0; i < in_features; ++i) in_t[static_cast<std::size_t>(i) * batch + n] = in[n * in_features + i];
  }
  std::vector<T> out_t(static_cast<std::size_t>(out_features) * batch);
  for (int j = 0; j < out_features; ++j) std::fill_n(out_t.begin() + j * batch, batch, bias[j]);
  constexpr int kChunk = 32;
  const int chunks = (out_features + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < chunks; ++ch) {
    const int j0 = ch * kChunk;
    const int nrows = std::min(kChunk, out_features - j0);
    gemm_acc<T>(nrows, batch, in_features, weight + static_cast<std::size_t>(j0) * in_features, in_features, 1,
                in_t.data(), batch, out_t.data() + static_cast<std::size_t>(j0) * batch, batch);
  }
  for (int n = 0; n < batch; ++n) {
    for (int j = 0; j < out_features; ++j) out[n * out_features + j] = out_t[static_cast<std::size_t>(j) * batch + n];
  }
}

template <typename T>
void dense_backward(int batch, int in_features, int out_features, const T* in, const T* weight,
                    const T* grad_out, T* grad_in, T* grad_weight, T* grad_bias) {
  for (int j = 0; j < out_features; ++j) {
    T acc = 0;
    for (int n = 0; n < batch; ++n) acc += grad_out[n * out_features + j];
    grad_bias[j] += acc;
  }
  constexpr int kChunk = 32;
  const int row_chunks = (out_features + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < row_chunks; ++ch) {
    const int j0 = ch * kChunk;
    const int nrows = std::min(kChunk, out_features - j0);
    gemm_acc<T>(nrows, in_features, batch, grad_out + j0, 1, out_features, in, in_features,
                grad_weight + static_cast<std::size_t>(j0) * in_features, in_features);
  }
  if (!grad_in) return;
  constexpr int kColChunk = 256;
  const int col_chunks = (in_features + kColChunk - 1) / kColChunk;
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < col_chunks; ++ch) {
    const int i0 = ch * kColChunk;
    const int ncols = std::min(kColChunk, in_features - i0);
    gemm_acc<T>(batch, ncols, out_features, grad_out, out_features, 1, weight + i0, in_features, grad_in + i0,
                in_features);
  }
}

#define CSIPOS_INSTANTIATE(T)                                                                                  \
  template void gemm_acc<T>(int, int, int, const T*, std::size_t, std::size_t, const T*, std::size_t, T*,      \
                            std::size_t);                                                                      \
  template void conv2d_forward<T>(const ConvShape&, int, const T*, std::size_t, const T*, const T*, T*,        \
                                  std::size_t);                                                                \
  template void conv2d_backward<T>(const ConvShape&, int, const T*, std::size_t, const T*, const T*,           \
                                   std::size_t, T*, std::size_t, T*, T*);                                      \
  template void relu_forward<T>(int, T*, std::size_t, std::size_t);                                            \
  template void relu_backward<T>(int, const T*, T*, std::size_t, std::size_t);                                 \
  template void batchnorm_forward_train<T>(int, int, std::size_t, const T*, std::size_t, const T*, const T*,   \
                                           T*, T*, T*, T*, T*, T, T);                                          \
  template void batchnorm_forward_infer<T>(int, int, std::size_t, const T*, std::size_t, const T*, const T*,   \
                                           const T*, const T*, T*, T);                                         \
  template void batchnorm_backward<T>(int, int, std::size_t, const T*, std::size_t, const T*, const T*,        \
                                      const T*, const T*, T*, T*, T*);                                         \
  template void avgpool2_forward<T>(int, int, int, int, const T*, std::size_t, T*, std::size_t);               \
  template void avgpool2_backward<T>(int, int, int, int, const T*, std::size_t, T*, std::size_t);              \
  template void dense_forward<T>(int, int, int, const T*, const T*, const T*, T*);                             \
  template void dense_backward<T>(int, int, int, const T*, const T*, const T*, T*, T*, T*);

CSIPOS_INSTANTIATE(float)
CSIPOS_INSTANTIATE(double)

#undef CSIPOS_INSTANTIATE

}  // namespace csipos::kernels
