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

#include "instrec/losses.hpp"

namespace instrec {

const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::balanced_ce: return "balanced_ce";
    case LossKind::focal: return "focal";
    case LossKind::level_weighted: return "level_weighted";
  }
  return "unknown";
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "balanced_ce") return LossKind::balanced_ce;
  if (name == "focal") return LossKind::focal;
  if (name == "level_weighted") return LossKind::level_weighted;
  fail(ErrorCategory::config, "unknown loss '" + name +
                                  "' (expected balanced_ce, focal or "
                                  "level_weighted)");
}

ClassWeights compute_class_weights(std::span<const std::uint8_t> labels,
                                   std::size_t rows, std::size_t dim) {
  if (rows == 0 || dim == 0 || labels.size() != rows * dim) {
    fail(ErrorCategory::shape, "label matrix shape mismatch");
  }
  std::vector<std::size_t> counts(dim, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::uint8_t* row = labels.data() + r * dim;
    for (std::size_t c = 0; c < dim; ++c) {
      if (row[c]) ++counts[c];
    }
  }
  ClassWeights out;
  out.weights.resize(dim);
  double sum = 0;
  for (std::size_t c = 0; c < dim; ++c) {
    std::size_t n = counts[c];
    if (n == 0) {
      out.zero_support.push_back(c);
      n = 1;
    }
    out.weights[c] = static_cast<double>(rows) / static_cast<double>(n);
    sum += out.weights[c];
  }
  const double mean = sum / static_cast<double>(dim);
  for (auto& w : out.weights) w /= mean;
  return out;
}

AlphaSweepResult alpha_grid_search(
    std::span<const double> alphas,
    const std::function<std::array<double, 3>(double alpha)>& evaluate) {
  if (alphas.empty()) {
    fail(ErrorCategory::config, "alpha grid must not be empty");
  }
  AlphaSweepResult result;
  double best_f1 = -1;
  for (double alpha : alphas) {
    if (!(alpha >= 0 && alpha <= 1)) {
      fail(ErrorCategory::config, "alpha grid values must be in [0, 1]");
    }
    auto [f1_all, f1_groups, f1_instruments] = evaluate(alpha);
    result.rows.push_back({alpha, f1_all, f1_groups, f1_instruments});
    if (f1_all > best_f1) {
      best_f1 = f1_all;
      result.best_alpha = alpha;
    }
  }
  return result;
}

}  // namespace instrec
