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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "instrec/taxonomy.hpp"

namespace instrec {

double f1_score(double precision, double recall);

struct LabelScore {
  std::int64_t tp = 0, fp = 0, fn = 0;
  std::int64_t support = 0;  // positives in the targets
  double precision = 0, recall = 0, f1 = 0;
};

struct MicroScore {
  std::int64_t tp = 0, fp = 0, fn = 0;
  double precision = 0, recall = 0, f1 = 0;
};

struct MetricsReport {
  std::vector<std::string> labels;     // index order of the label space
  std::vector<LabelScore> per_label;
  MicroScore micro_instruments;
  MicroScore micro_groups;
  MicroScore micro_all;
};

// Pooled counts over all (frame, label) pairs; zero denominators score 0.
MetricsReport score(std::span<const std::uint8_t> predictions,
                    std::span<const std::uint8_t> targets, std::size_t rows,
                    const LabelSpace& space);

struct CooccurrenceMatrix {
  std::vector<std::string> labels;      // instrument names
  std::vector<std::int64_t> raw;        // dim x dim counts
  std::vector<double> normalized;       // column-normalized, zero diagonal
  std::size_t dim = 0;

  std::int64_t raw_at(std::size_t i, std::size_t j) const { return raw[i * dim + j]; }
  double norm_at(std::size_t i, std::size_t j) const {
    return normalized[i * dim + j];
  }
};

// Joint-appearance counts of instrument pairs per frame. The raw matrix is
// symmetric with the per-label frame count on the diagonal; normalization is
// column-wise min-max over off-diagonal entries with a forced zero diagonal
// and constant columns mapped to zero.
CooccurrenceMatrix cooccurrence(std::span<const std::uint8_t> targets,
                                std::size_t rows, const LabelSpace& space);

// raw(i, j) = frames where instrument i is a false positive while
// instrument j is present in the targets.
CooccurrenceMatrix fp_cooccurrence(std::span<const std::uint8_t> predictions,
                                   std::span<const std::uint8_t> targets,
                                   std::size_t rows, const LabelSpace& space);

// raw(i, j) = frames where instrument i is a false negative while
// instrument j is predicted.
CooccurrenceMatrix fn_cooccurrence(std::span<const std::uint8_t> predictions,
                                   std::span<const std::uint8_t> targets,
                                   std::size_t rows, const LabelSpace& space);

struct ConsistencyViolation {
  std::size_t frame = 0;
  std::string instrument;
  std::string group;
};

// One record per (frame, instrument) predicted without its group.
std::vector<ConsistencyViolation> consistency_audit(
    std::span<const std::uint8_t> predictions, std::size_t rows,
    const LabelSpace& space);

// Writes metrics_per_label.csv (sorted by support, descending),
// metrics_summary.csv, cooc.csv, cooc_fp.csv and cooc_fn.csv. Re-runs on
// identical inputs produce byte-identical files.
void emit_reports(const MetricsReport& report, const CooccurrenceMatrix& cooc,
                  const CooccurrenceMatrix& fp, const CooccurrenceMatrix& fn,
                  const std::filesystem::path& out_dir);

}  // namespace instrec
