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

#include <Eigen/Core>

namespace instrec::nn {

// C (m x n) = alpha * op(A) * op(B) + beta * C, all row-major contiguous.
// op transposes the stored matrix: when trans_a is set, A is stored k x m.
template <class T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a,
          const T* b, T beta, T* c) {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Map = Eigen::Map<const Mat>;
  Eigen::Map<Mat> C(c, m, n);
  auto mul = [&](const auto& A, const auto& B) {
    if (beta == T(0)) {
      C.noalias() = alpha * (A * B);
    } else {
      C *= beta;
      C.noalias() += alpha * (A * B);
    }
  };
  if (!trans_a && !trans_b) {
    mul(Map(a, m, k), Map(b, k, n));
  } else if (trans_a && !trans_b) {
    mul(Map(a, k, m).transpose(), Map(b, k, n));
  } else if (!trans_a && trans_b) {
    mul(Map(a, m, k), Map(b, n, k).transpose());
  } else {
    mul(Map(a, k, m).transpose(), Map(b, n, k).transpose());
  }
}

}  // namespace instrec::nn
