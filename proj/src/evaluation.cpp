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

#include "instrec/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "instrec/errors.hpp"

namespace instrec {

double f1_score(double precision, double recall) {
  const double denom = precision + recall;
  if (denom <= 0) return 0.0;
  return 2.0 * precision * recall / denom;
}

namespace {

void check_batch(std::span<const std::uint8_t> predictions,
                 std::span<const std::uint8_t> targets, std::size_t rows,
                 std::size_t dim) {
  if (predictions.size() != rows * dim || targets.size() != rows * dim) {
    fail(ErrorCategory::shape, "prediction/target batch shape mismatch");
  }
}

MicroScore pooled(std::span<const LabelScore> scores, std::size_t begin,
                  std::size_t end) {
  MicroScore micro;
  for (std::size_t i = begin; i < end; ++i) {
    micro.tp += scores[i].tp;
    micro.fp += scores[i].fp;
    micro.fn += scores[i].fn;
  }
  micro.precision =
      micro.tp + micro.fp > 0
          ? static_cast<double>(micro.tp) / static_cast<double>(micro.tp + micro.fp)
          : 0.0;
  micro.recall =
      micro.tp + micro.fn > 0
          ? static_cast<double>(micro.tp) / static_cast<double>(micro.tp + micro.fn)
          : 0.0;
  micro.f1 = f1_score(micro.precision, micro.recall);
  return micro;
}

// Column-wise min-max over off-diagonal entries; forced zero diagonal;
// constant columns map to zero.
std::vector<double> normalize_columns(const std::vector<std::int64_t>& raw,
                                      std::size_t dim) {
  std::vector<double> out(raw.size(), 0.0);
  for (std::size_t j = 0; j < dim; ++j) {
    std::int64_t lo = std::numeric_limits<std::int64_t>::max();
    std::int64_t hi = std::numeric_limits<std::int64_t>::min();
    for (std::size_t i = 0; i < dim; ++i) {
      if (i == j) continue;
      lo = std::min(lo, raw[i * dim + j]);
      hi = std::max(hi, raw[i * dim + j]);
    }
    if (hi <= lo) continue;  // constant column
    const double range = static_cast<double>(hi - lo);
    for (std::size_t i = 0; i < dim; ++i) {
      if (i == j) continue;
      out[i * dim + j] = static_cast<double>(raw[i * dim + j] - lo) / range;
    }
  }
  return out;
}

CooccurrenceMatrix make_matrix(std::vector<std::int64_t> raw,
                               const LabelSpace& space) {
  CooccurrenceMatrix m;
  m.dim = space.instrument_count();
  m.labels = space.instruments();
  m.normalized = normalize_columns(raw, m.dim);
  m.raw = std::move(raw);
  return m;
}

void require_instruments(const LabelSpace& space) {
  if (space.instrument_count() < 2) {
    fail(ErrorCategory::config,
         "co-occurrence needs at least 2 instrument labels");
  }
}

std::string format6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void write_matrix_csv(const CooccurrenceMatrix& m,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCategory::io, "cannot write " + path.string());
  out << "label";
  for (const auto& name : m.labels) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < m.dim; ++i) {
    out << m.labels[i];
    for (std::size_t j = 0; j < m.dim; ++j) {
      out << ',' << format6(m.norm_at(i, j));
    }
    out << '\n';
  }
}

}  // namespace

MetricsReport score(std::span<const std::uint8_t> predictions,
                    std::span<const std::uint8_t> targets, std::size_t rows,
                    const LabelSpace& space) {
  const std::size_t dim = space.size();
  check_batch(predictions, targets, rows, dim);

  MetricsReport report;
  report.labels = space.label_names();
  report.per_label.resize(dim);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::uint8_t* p = predictions.data() + r * dim;
    const std::uint8_t* t = targets.data() + r * dim;
    for (std::size_t c = 0; c < dim; ++c) {
      auto& s = report.per_label[c];
      if (t[c]) ++s.support;
      if (p[c] && t[c]) ++s.tp;
      else if (p[c] && !t[c]) ++s.fp;
      else if (!p[c] && t[c]) ++s.fn;
    }
  }
  for (auto& s : report.per_label) {
    s.precision = s.tp + s.fp > 0
                      ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp)
                      : 0.0;
    s.recall = s.tp + s.fn > 0
                   ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn)
                   : 0.0;
    s.f1 = f1_score(s.precision, s.recall);
  }
  const std::size_t icount = space.instrument_count();
  report.micro_instruments = pooled(report.per_label, 0, icount);
  report.micro_groups = pooled(report.per_label, icount, dim);
  report.micro_all = pooled(report.per_label, 0, dim);
  return report;
}

CooccurrenceMatrix cooccurrence(std::span<const std::uint8_t> targets,
                                std::size_t rows, const LabelSpace& space) {
  require_instruments(space);
  const std::size_t dim = space.size();
  const std::size_t icount = space.instrument_count();
  if (targets.size() != rows * dim) {
    fail(ErrorCategory::shape, "target batch shape mismatch");
  }
  std::vector<std::int64_t> raw(icount * icount, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::uint8_t* t = targets.data() + r * dim;
    for (std::size_t i = 0; i < icount; ++i) {
      if (!t[i]) continue;
      for (std::size_t j = 0; j < icount; ++j) {
        if (t[j]) ++raw[i * icount + j];
      }
    }
  }
  return make_matrix(std::move(raw), space);
}

CooccurrenceMatrix fp_cooccurrence(std::span<const std::uint8_t> predictions,
                                   std::span<const std::uint8_t> targets,
                                   std::size_t rows, const LabelSpace& space) {
  require_instruments(space);
  const std::size_t dim = space.size();
  const std::size_t icount = space.instrument_count();
  check_batch(predictions, targets, rows, dim);
  std::vector<std::int64_t> raw(icount * icount, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::uint8_t* p = predictions.data() + r * dim;
    const std::uint8_t* t = targets.data() + r * dim;
    for (std::size_t i = 0; i < icount; ++i) {
      if (!(p[i] && !t[i])) continue;  // i must be a false positive
      for (std::size_t j = 0; j < icount; ++j) {
        if (t[j]) ++raw[i * icount + j];
      }
    }
  }
  return make_matrix(std::move(raw), space);
}

CooccurrenceMatrix fn_cooccurrence(std::span<const std::uint8_t> predictions,
                                   std::span<const std::uint8_t> targets,
                                   std::size_t rows, const LabelSpace& space) {
  require_instruments(space);
  const std::size_t dim = space.size();
  const std::size_t icount = space.instrument_count();
  check_batch(predictions, targets, rows, dim);
  std::vector<std::int64_t> raw(icount * icount, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::uint8_t* p = predictions.data() + r * dim;
    const std::uint8_t* t = targets.data() + r * dim;
    for (std::size_t i = 0; i < icount; ++i) {
      if (!(!p[i] && t[i])) continue;  // i must be a false negative
      for (std::size_t j = 0; j < icount; ++j) {
        if (p[j]) ++raw[i * icount + j];
      }
    }
  }
  return make_matrix(std::move(raw), space);
}

std::vector<ConsistencyViolation> consistency_audit(
    std::span<const std::uint8_t> predictions, std::size_t rows,
    const LabelSpace& space) {
  const std::size_t dim = space.size();
  if (predictions.size() != rows * dim) {
    fail(ErrorCategory::shape, "prediction batch shape mismatch");
  }
  std::vector<ConsistencyViolation> violations;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::uint8_t* p = predictions.data() + r * dim;
    for (std::size_t i = 0; i < space.instrument_count(); ++i) {
      if (!p[i]) continue;
      const GroupLabel& group = space.group_of(space.instruments()[i]);
      if (!p[space.group_index(group.code)]) {
        violations.push_back({r, space.instruments()[i], group.code});
      }
    }
  }
  return violations;
}

void emit_reports(const MetricsReport& report, const CooccurrenceMatrix& cooc,
                  const CooccurrenceMatrix& fp, const CooccurrenceMatrix& fn,
                  const std::filesystem::path& out_dir) {
  if (report.per_label.empty()) {
    fail(ErrorCategory::config, "refusing to emit reports for an empty test set");
  }
  std::filesystem::create_directories(out_dir);

  {
    std::vector<std::size_t> order(report.per_label.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return report.per_label[a].support > report.per_label[b].support;
    });
    std::ofstream out(out_dir / "metrics_per_label.csv");
    if (!out) fail(ErrorCategory::io, "cannot write metrics_per_label.csv");
    out << "label,support,tp,fp,fn,precision,recall,f1\n";
    for (std::size_t i : order) {
      const auto& s = report.per_label[i];
      out << report.labels[i] << ',' << s.support << ',' << s.tp << ',' << s.fp
          << ',' << s.fn << ',' << format6(s.precision) << ','
          << format6(s.recall) << ',' << format6(s.f1) << '\n';
    }
  }
  {
    std::ofstream out(out_dir / "metrics_summary.csv");
    if (!out) fail(ErrorCategory::io, "cannot write metrics_summary.csv");
    out << "level,tp,fp,fn,precision,recall,f1\n";
    auto row = [&](const char* level, const MicroScore& m) {
      out << level << ',' << m.tp << ',' << m.fp << ',' << m.fn << ','
          << format6(m.precision) << ',' << format6(m.recall) << ','
          << format6(m.f1) << '\n';
    };
    row("instruments", report.micro_instruments);
    row("groups", report.micro_groups);
    row("all", report.micro_all);
  }
  write_matrix_csv(cooc, out_dir / "cooc.csv");
  write_matrix_csv(fp, out_dir / "cooc_fp.csv");
  write_matrix_csv(fn, out_dir / "cooc_fn.csv");
}

}  // namespace instrec
