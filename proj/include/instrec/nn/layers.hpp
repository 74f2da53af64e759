// Copyright 2026 The instrec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "instrec/common.hpp"
#include "instrec/errors.hpp"
#include "instrec/nn/gemm.hpp"

// Trunk tensors are laid out channel-major, (channels, batch, height, width),
// so per-channel reductions and the im2col GEMMs stream contiguous memory.
// Head tensors are plain row-major (batch, features).

namespace instrec::nn {

template <class T>
struct Param {
  std::vector<T> value;
  std::vector<T> grad;

  void resize(std::size_t size) {
    value.assign(size, T(0));
    grad.assign(size, T(0));
  }
};

template <class T>
class Conv2d {
 public:
  Conv2d(int in_c, int out_c, int kh, int kw, int pad)
      : in_c_(in_c), out_c_(out_c), kh_(kh), kw_(kw), pad_(pad) {
    weight_.resize(static_cast<std::size_t>(out_c) * in_c * kh * kw);
    bias_.resize(out_c);
  }

  void init(Rng& rng) {
    const T bound = T(1) / std::sqrt(T(in_c_ * kh_ * kw_));
    for (auto& v : weight_.value) v = static_cast<T>(rng.uniform(-bound, bound));
    for (auto& v : bias_.value) v = static_cast<T>(rng.uniform(-bound, bound));
  }

  int out_h(int h) const { return h + 2 * pad_ - kh_ + 1; }
  int out_w(int w) const { return w + 2 * pad_ - kw_ + 1; }
  int in_channels() const { return in_c_; }
  int out_channels() const { return out_c_; }
  std::size_t parameter_count() const {
    return weight_.value.size() + bias_.value.size();
  }

  // x: (in_c, n, h, w) -> y: (out_c, n, out_h, out_w)
  void forward(std::span<const T> x, int n, int h, int w, std::vector<T>& y) {
    n_ = n; h_ = h; w_ = w;
    oh_ = out_h(h); ow_ = out_w(w);
    const std::size_t cols = static_cast<std::size_t>(n) * oh_ * ow_;
    const int k = in_c_ * kh_ * kw_;
    col_.resize(static_cast<std::size_t>(k) * cols);
    im2col(x.data(), col_.data());
    y.resize(static_cast<std::size_t>(out_c_) * cols);
    gemm<T>(false, false, out_c_, static_cast<int>(cols), k, T(1),
            weight_.value.data(), col_.data(), T(0), y.data());
#pragma omp parallel for schedule(static)
    for (int c = 0; c < out_c_; ++c) {
      T b = bias_.value[c];
      T* row = y.data() + static_cast<std::size_t>(c) * cols;
      for (std::size_t i = 0; i < cols; ++i) row[i] += b;
    }
  }

  // Accumulates weight gradients; writes input gradient unless dx == nullptr.
  // Reuses the col buffer, so backward must follow its matching forward.
  void backward(std::span<const T> dy, std::vector<T>* dx) {
    const std::size_t cols = static_cast<std::size_t>(n_) * oh_ * ow_;
    const int k = in_c_ * kh_ * kw_;
#pragma omp parallel for schedule(static)
    for (int c = 0; c < out_c_; ++c) {
      const T* row = dy.data() + static_cast<std::size_t>(c) * cols;
      T acc = 0;
      for (std::size_t i = 0; i < cols; ++i) acc += row[i];
      bias_.grad[c] += acc;
    }
    gemm<T>(false, true, out_c_, k, static_cast<int>(cols), T(1), dy.data(),
            col_.data(), T(1), weight_.grad.data());
    if (dx) {
      // dcol overwrites col_: dW above already consumed it.
      gemm<T>(true, false, k, static_cast<int>(cols), out_c_, T(1),
              weight_.value.data(), dy.data(), T(0), col_.data());
      dx->assign(static_cast<std::size_t>(in_c_) * n_ * h_ * w_, T(0));
      col2im(col_.data(), dx->data());
    }
  }

  Param<T> weight_;  // (out_c, in_c * kh * kw)
  Param<T> bias_;    // (out_c)

 private:
  void im2col(const T* x, T* col) const {
    const std::size_t cols = static_cast<std::size_t>(n_) * oh_ * ow_;
    const std::size_t plane = static_cast<std::size_t>(h_) * w_;
    const int taps = kh_ * kw_;
#pragma omp parallel for schedule(static)
    for (int r = 0; r < in_c_ * taps; ++r) {
      const int ci = r / taps;
      const int ky = (r % taps) / kw_;
      const int kx = r % kw_;
      T* dst = col + static_cast<std::size_t>(r) * cols;
      const int x_lo = std::max(0, pad_ - kx);
      const int x_hi = std::min(ow_, w_ + pad_ - kx);
      for (int b = 0; b < n_; ++b) {
        const T* src = x + (static_cast<std::size_t>(ci) * n_ + b) * plane;
        for (int y = 0; y < oh_; ++y) {
          const int sy = y + ky - pad_;
          T* drow = dst + (static_cast<std::size_t>(b) * oh_ + y) * ow_;
          if (sy < 0 || sy >= h_ || x_lo >= x_hi) {
            std::memset(drow, 0, sizeof(T) * ow_);
            continue;
          }
          if (x_lo > 0) std::memset(drow, 0, sizeof(T) * x_lo);
          std::memcpy(drow + x_lo,
                      src + static_cast<std::size_t>(sy) * w_ + (x_lo + kx - pad_),
                      sizeof(T) * (x_hi - x_lo));
          if (x_hi < ow_) {
            std::memset(drow + x_hi, 0, sizeof(T) * (ow_ - x_hi));
          }
        }
      }
    }
  }

  // Each thread owns one input channel, so the += scatters never collide.
  void col2im(const T* col, T* dx) const {
    const std::size_t cols = static_cast<std::size_t>(n_) * oh_ * ow_;
    const std::size_t plane = static_cast<std::size_t>(h_) * w_;
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < in_c_; ++ci) {
      for (int ky = 0; ky < kh_; ++ky) {
        for (int kx = 0; kx < kw_; ++kx) {
          const T* src = col + (static_cast<std::size_t>(ci) * kh_ * kw_ +
                                static_cast<std::size_t>(ky) * kw_ + kx) * cols;
          const int x_lo = std::max(0, pad_ - kx);
          const int x_hi = std::min(ow_, w_ + pad_ - kx);
          if (x_lo >= x_hi) continue;
          for (int b = 0; b < n_; ++b) {
            T* dst = dx + (static_cast<std::size_t>(ci) * n_ + b) * plane;
            for (int y = 0; y < oh_; ++y) {
              const int sy = y + ky - pad_;
              if (sy < 0 || sy >= h_) continue;
              const T* srow = src + (static_cast<std::size_t>(b) * oh_ + y) * ow_;
              T* drow = dst + static_cast<std::size_t>(sy) * w_ + (x_lo + kx - pad_);
              for (int i = 0; i < x_hi - x_lo; ++i) drow[i] += srow[x_lo + i];
            }
          }
        }
      }
    }
  }

  int in_c_, out_c_, kh_, kw_, pad_;
  int n_ = 0, h_ = 0, w_ = 0, oh_ = 0, ow_ = 0;
  std::vector<T> col_;
};

template <class T>
class BatchNorm2d {
 public:
  explicit BatchNorm2d(int channels) : channels_(channels) {
    gamma_.resize(channels);
    beta_.resize(channels);
    running_mean_.assign(channels, T(0));
    running_var_.assign(channels, T(1));
    std::fill(gamma_.value.begin(), gamma_.value.end(), T(1));
  }

  std::size_t parameter_count() const { return 2 * static_cast<std::size_t>(channels_); }

  // In-place over x laid out (channels, count) with count = n*h*w.
  void forward(std::span<T> x, std::size_t count, bool train) {
    count_ = count;
    if (train) {
      xhat_.resize(x.size());
      inv_std_.resize(channels_);
#pragma omp parallel for schedule(static)
      for (int c = 0; c < channels_; ++c) {
        T* row = x.data() + c * count;
        double sum = 0, sumsq = 0;
        for (std::size_t i = 0; i < count; ++i) {
          sum += row[i];
          sumsq += static_cast<double>(row[i]) * row[i];
        }
        const T mean = static_cast<T>(sum / static_cast<double>(count));
        const T var = static_cast<T>(
            std::max(0.0, sumsq / static_cast<double>(count) -
                              static_cast<double>(mean) * mean));
        const T inv = T(1) / std::sqrt(var + eps_);
        inv_std_[c] = inv;
        T* xh = xhat_.data() + c * count;
        const T g = gamma_.value[c], b = beta_.value[c];
        for (std::size_t i = 0; i < count; ++i) {
          xh[i] = (row[i] - mean) * inv;
          row[i] = g * xh[i] + b;
        }
        running_mean_[c] = (T(1) - momentum_) * running_mean_[c] + momentum_ * mean;
        const T unbiased = count > 1 ? var * static_cast<T>(count) /
                                           static_cast<T>(count - 1)
                                     : var;
        running_var_[c] = (T(1) - momentum_) * running_var_[c] + momentum_ * unbiased;
      }
    } else {
#pragma omp parallel for schedule(static)
      for (int c = 0; c < channels_; ++c) {
        T* row = x.data() + c * count;
        const T inv = T(1) / std::sqrt(running_var_[c] + eps_);
        const T g = gamma_.value[c], b = beta_.value[c];
        const T mean = running_mean_[c];
        for (std::size_t i = 0; i < count; ++i) {
          row[i] = g * (row[i] - mean) * inv + b;
        }
      }
    }
  }

  // In-place on dy; valid only after a train-mode forward.
  void backward(std::span<T> dy) {
    const std::size_t count = count_;
#pragma omp parallel for schedule(static)
    for (int c = 0; c < channels_; ++c) {
      T* dr = dy.data() + c * count;
      const T* xh = xhat_.data() + c * count;
      double sum_dy = 0, sum_dy_xh = 0;
      for (std::size_t i = 0; i < count; ++i) {
        sum_dy += dr[i];
        sum_dy_xh += static_cast<double>(dr[i]) * xh[i];
      }
      gamma_.grad[c] += static_cast<T>(sum_dy_xh);
      beta_.grad[c] += static_cast<T>(sum_dy);
      const T g_inv = gamma_.value[c] * inv_std_[c];
      const T mean_dy = static_cast<T>(sum_dy / static_cast<double>(count));
      const T mean_dy_xh = static_cast<T>(sum_dy_xh / static_cast<double>(count));
      for (std::size_t i = 0; i < count; ++i) {
        dr[i] = g_inv * (dr[i] - mean_dy - xh[i] * mean_dy_xh);
      }
    }
  }

  Param<T> gamma_, beta_;
  std::vector<T> running_mean_, running_var_;

 private:
  int channels_;
  T momentum_ = T(0.1), eps_ = T(1e-5);
  std::size_t count_ = 0;
  std::vector<T> xhat_;
  std::vector<T> inv_std_;
};

template <class T>
class MaxPool2d {
 public:
  MaxPool2d(int kh, int kw) : kh_(kh), kw_(kw) {}

  int out_h(int h) const { return h / kh_; }
  int out_w(int w) const { return w / kw_; }

  void forward(std::span<const T> x, int c, int n, int h, int w, std::vector<T>& y) {
    c_ = c; n_ = n; h_ = h; w_ = w;
    const int oh = out_h(h), ow = out_w(w);
    const std::size_t planes = static_cast<std::size_t>(c) * n;
    y.resize(planes * oh * ow);
    argmax_.resize(y.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(planes); ++p) {
      const T* src = x.data() + p * h * w;
      T* dst = y.data() + p * static_cast<std::size_t>(oh) * ow;
      std::uint32_t* arg = argmax_.data() + p * static_cast<std::size_t>(oh) * ow;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          int best_idx = (oy * kh_) * w + ox * kw_;
          T best = src[best_idx];
          for (int ky = 0; ky < kh_; ++ky) {
            for (int kx = 0; kx < kw_; ++kx) {
              const int idx = (oy * kh_ + ky) * w + ox * kw_ + kx;
              if (src[idx] > best) {
                best = src[idx];
                best_idx = idx;
              }
            }
          }
          dst[oy * ow + ox] = best;
          arg[oy * ow + ox] = static_cast<std::uint32_t>(best_idx);
        }
      }
    }
  }

  void backward(std::span<const T> dy, std::vector<T>& dx) const {
    const int oh = out_h(h_), ow = out_w(w_);
    const std::size_t planes = static_cast<std::size_t>(c_) * n_;
    dx.assign(planes * h_ * w_, T(0));
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(planes); ++p) {
      const T* src = dy.data() + p * static_cast<std::size_t>(oh) * ow;
      const std::uint32_t* arg = argmax_.data() + p * static_cast<std::size_t>(oh) * ow;
      T* dst = dx.data() + p * static_cast<std::size_t>(h_) * w_;
      for (int i = 0; i < oh * ow; ++i) dst[arg[i]] += src[i];
    }
  }

 private:
  int kh_, kw_;
  int c_ = 0, n_ = 0, h_ = 0, w_ = 0;
  std::vector<std::uint32_t> argmax_;
};

template <class T>
class Dense {
 public:
  Dense(int in_f, int out_f) : in_f_(in_f), out_f_(out_f) {
    weight_.resize(static_cast<std::size_t>(out_f) * in_f);
    bias_.resize(out_f);
  }

  void init(Rng& rng) {
    const T bound = T(1) / std::sqrt(T(in_f_));
    for (auto& v : weight_.value) v = static_cast<T>(rng.uniform(-bound, bound));
    for (auto& v : bias_.value) v = static_cast<T>(rng.uniform(-bound, bound));
  }

  std::size_t parameter_count() const {
    return weight_.value.size() + bias_.value.size();
  }

  // x: (n, in_f) -> y: (n, out_f)
  void forward(std::span<const T> x, int n, std::vector<T>& y) {
    n_ = n;
    x_.assign(x.begin(), x.end());
    y.resize(static_cast<std::size_t>(n) * out_f_);
    gemm<T>(false, true, n, out_f_, in_f_, T(1), x.data(), weight_.value.data(),
            T(0), y.data());
    for (int i = 0; i < n; ++i) {
      T* row = y.data() + static_cast<std::size_t>(i) * out_f_;
      for (int o = 0; o < out_f_; ++o) row[o] += bias_.value[o];
    }
  }

  void backward(std::span<const T> dy, std::vector<T>* dx) {
    gemm<T>(true, false, out_f_, in_f_, n_, T(1), dy.data(), x_.data(), T(1),
            weight_.grad.data());
    for (int i = 0; i < n_; ++i) {
      const T* row = dy.data() + static_cast<std::size_t>(i) * out_f_;
      for (int o = 0; o < out_f_; ++o) bias_.grad[o] += row[o];
    }
    if (dx) {
      dx->resize(static_cast<std::size_t>(n_) * in_f_);
      gemm<T>(false, false, n_, in_f_, out_f_, T(1), dy.data(),
              weight_.value.data(), T(0), dx->data());
    }
  }

  Param<T> weight_;  // (out_f, in_f)
  Param<T> bias_;

 private:
  int in_f_, out_f_;
  int n_ = 0;
  std::vector<T> x_;
};

template <class T>
class Dropout {
 public:
  explicit Dropout(T rate) : rate_(rate) {}

  void forward(std::span<T> x, bool train, Rng* rng) {
    active_ = train && rate_ > T(0);
    if (!active_) return;
    if (!rng) fail(ErrorCategory::state, "dropout requires an RNG in train mode");
    mask_.resize(x.size());
    const T scale = T(1) / (T(1) - rate_);
    for (std::size_t i = 0; i < x.size(); ++i) {
      mask_[i] = (rng->uniform() >= static_cast<double>(rate_)) ? scale : T(0);
      x[i] *= mask_[i];
    }
  }

  void backward(std::span<T> dy) const {
    if (!active_) return;
    for (std::size_t i = 0; i < dy.size(); ++i) dy[i] *= mask_[i];
  }

 private:
  T rate_;
  bool active_ = false;
  std::vector<T> mask_;
};

template <class T>
inline void leaky_relu_forward(std::span<T> x, T slope) {
  for (auto& v : x) {
    if (v < T(0)) v *= slope;
  }
}

// `y` is the forward output; the sign survives because slope > 0.
template <class T>
inline void leaky_relu_backward(std::span<const T> y, std::span<T> dy, T slope) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < T(0)) dy[i] *= slope;
  }
}

template <class T>
inline void sigmoid_forward(std::span<T> x) {
  for (auto& v : x) v = T(1) / (T(1) + std::exp(-v));
}

template <class T>
inline void sigmoid_backward(std::span<const T> y, std::span<T> dy) {
  for (std::size_t i = 0; i < y.size(); ++i) dy[i] *= y[i] * (T(1) - y[i]);
}

}  // namespace instrec::nn
