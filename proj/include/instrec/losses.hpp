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
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "instrec/errors.hpp"

namespace instrec {

enum class LossKind { balanced_ce, focal, level_weighted };

const char* to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

struct LossConfig {
  LossKind kind = LossKind::focal;
  double gamma = 2.0;  // focal exponent
  double alpha = 0.1;  // level weight on instrument terms
  std::vector<double> class_weights;  // balanced_ce; empty = unit weights
};

namespace detail {

// Keeps log() finite when predictions saturate.
template <class T>
constexpr T clamp_eps() {
  return std::is_same_v<T, float> ? T(1e-7) : T(1e-12);
}

template <class T>
inline T clamp_prob(T p) {
  constexpr T eps = clamp_eps<T>();
  return std::min(std::max(p, eps), T(1) - eps);
}

}  // namespace detail

// All losses return the mean over batch elements and labels, and optionally
// write the gradient w.r.t. each prediction into `grad` (same layout as
// `predictions`). Predictions are expected strictly inside (0, 1); values at
// the boundary are clamped to keep results finite.

// Per-label binary cross-entropy with per-class weights (empty = all ones).
template <class T>
double balanced_ce(std::span<const T> predictions,
                   std::span<const std::uint8_t> targets,
                   std::span<const double> class_weights, std::size_t dim,
                   std::span<T> grad = {}) {
  if (predictions.size() != targets.size() || dim == 0 ||
      predictions.size() % dim != 0) {
    fail(ErrorCategory::shape, "loss inputs disagree in shape");
  }
  if (!class_weights.empty() && class_weights.size() != dim) {
    fail(ErrorCategory::shape, "class weight vector length mismatch");
  }
  if (!grad.empty() && grad.size() != predictions.size()) {
    fail(ErrorCategory::shape, "gradient buffer has the wrong size");
  }
  const double scale = 1.0 / static_cast<double>(predictions.size());
  double total = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double w = class_weights.empty() ? 1.0 : class_weights[i % dim];
    const T p = detail::clamp_prob(predictions[i]);
    const bool y = targets[i] != 0;
    total += w * -(y ? std::log(static_cast<double>(p))
                     : std::log(1.0 - static_cast<double>(p)));
    if (!grad.empty()) {
      const double g = y ? -1.0 / static_cast<double>(p)
                         : 1.0 / (1.0 - static_cast<double>(p));
      grad[i] = static_cast<T>(w * g * scale);
    }
  }
  return total * scale;
}

// Unweighted per-label binary cross-entropy.
template <class T>
double bce(std::span<const T> predictions, std::span<const std::uint8_t> targets,
           std::size_t dim, std::span<T> grad = {}) {
  return balanced_ce(predictions, targets, {}, dim, grad);
}

// Focal loss: mean of (1 - p_t)^gamma * -log(p_t) with p_t the predicted
// probability of the true label value. gamma = 0 reduces exactly to bce().
template <class T>
double focal(std::span<const T> predictions, std::span<const std::uint8_t> targets,
             double gamma, std::size_t dim, std::span<T> grad = {}) {
  if (gamma < 0) fail(ErrorCategory::config, "focal gamma must be >= 0");
  if (predictions.size() != targets.size() || dim == 0 ||
      predictions.size() % dim != 0) {
    fail(ErrorCategory::shape, "loss inputs disagree in shape");
  }
  if (!grad.empty() && grad.size() != predictions.size()) {
    fail(ErrorCategory::shape, "gradient buffer has the wrong size");
  }
  const double scale = 1.0 / static_cast<double>(predictions.size());
  double total = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool y = targets[i] != 0;
    const double p = static_cast<double>(detail::clamp_prob(predictions[i]));
    const double pt = y ? p : 1.0 - p;
    const double focus = std::pow(1.0 - pt, gamma);
    total += focus * -std::log(pt);
    if (!grad.empty()) {
      // d/dp_t of -(1-p_t)^g log(p_t), then the chain through p_t(p).
      double d = -focus / pt;
      if (gamma > 0) {
        d += gamma * std::pow(1.0 - pt, gamma - 1.0) * std::log(pt);
      }
      grad[i] = static_cast<T>((y ? d : -d) * scale);
    }
  }
  return total * scale;
}

// Level-weighted cross-entropy: alpha on instrument labels, (1 - alpha) on
// group labels, with plain binary cross-entropy inside.
template <class T>
double level_weighted(std::span<const T> predictions,
                      std::span<const std::uint8_t> targets, double alpha,
                      std::size_t instrument_count, std::size_t dim,
                      std::span<T> grad = {}) {
  if (!(alpha >= 0 && alpha <= 1)) {
    fail(ErrorCategory::config, "alpha must be in [0, 1]");
  }
  if (instrument_count > dim) {
    fail(ErrorCategory::shape, "instrument count exceeds label dimension");
  }
  if (predictions.size() != targets.size() || dim == 0 ||
      predictions.size() % dim != 0) {
    fail(ErrorCategory::shape, "loss inputs disagree in shape");
  }
  if (!grad.empty() && grad.size() != predictions.size()) {
    fail(ErrorCategory::shape, "gradient buffer has the wrong size");
  }
  const double scale = 1.0 / static_cast<double>(predictions.size());
  double total = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double w = (i % dim) < instrument_count ? alpha : 1.0 - alpha;
    const T p = detail::clamp_prob(predictions[i]);
    const bool y = targets[i] != 0;
    total += w * -(y ? std::log(static_cast<double>(p))
                     : std::log(1.0 - static_cast<double>(p)));
    if (!grad.empty()) {
      const double g = y ? -1.0 / static_cast<double>(p)
                         : 1.0 / (1.0 - static_cast<double>(p));
      grad[i] = static_cast<T>(w * g * scale);
    }
  }
  return total * scale;
}

// Dispatch through a LossConfig; used by the training loop.
template <class T>
double evaluate_loss(const LossConfig& config, std::span<const T> predictions,
                     std::span<const std::uint8_t> targets, std::size_t dim,
                     std::size_t instrument_count, std::span<T> grad = {}) {
  switch (config.kind) {
    case LossKind::balanced_ce:
      return balanced_ce(predictions, targets, config.class_weights, dim, grad);
    case LossKind::focal:
      return focal(predictions, targets, config.gamma, dim, grad);
    case LossKind::level_weighted:
      return level_weighted(predictions, targets, config.alpha, instrument_count,
                            dim, grad);
  }
  fail(ErrorCategory::config, "unknown loss kind");
}

struct ClassWeights {
  std::vector<double> weights;            // mean-normalized inverse frequency
  std::vector<std::size_t> zero_support;  // label indices clamped to count 1
};

// w_c = N / n_c over the training label matrix, normalized to mean 1.
// Labels that never occur are clamped to n_c = 1 and reported.
ClassWeights compute_class_weights(std::span<const std::uint8_t> labels,
                                   std::size_t rows, std::size_t dim);

struct AlphaSweepRow {
  double alpha = 0;
  double f1_all = 0;
  double f1_groups = 0;
  double f1_instruments = 0;
};

struct AlphaSweepResult {
  std::vector<AlphaSweepRow> rows;
  double best_alpha = 0;  // argmax of f1_all
};

// Runs `evaluate` (train + score with the level-weighted loss at the given
// alpha) for every grid point. `evaluate` returns (f1_all, f1_groups,
// f1_instruments).
AlphaSweepResult alpha_grid_search(
    std::span<const double> alphas,
    const std::function<std::array<double, 3>(double alpha)>& evaluate);

}  // namespace instrec
