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

#include "instrec/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "instrec/common.hpp"
#include "instrec/errors.hpp"

namespace instrec {

ActivationTrack make_track(std::string track_id, double duration,
                           std::map<std::string, std::vector<Interval>> activations,
                           bool has_bleed) {
  if (duration < 0 || !std::isfinite(duration)) {
    fail(ErrorCategory::structural,
         "track '" + track_id + "' has invalid duration");
  }
  for (auto& [instrument, intervals] : activations) {
    for (auto& iv : intervals) {
      if (!(iv.start < iv.end)) {
        fail(ErrorCategory::structural,
             "track '" + track_id + "': empty or reversed interval for '" +
                 instrument + "'");
      }
      iv.start = std::max(0.0, iv.start);
      iv.end = std::min(duration, iv.end);
    }
    std::erase_if(intervals, [](const Interval& iv) { return !(iv.start < iv.end); });
    std::sort(intervals.begin(), intervals.end(),
              [](const Interval& a, const Interval& b) { return a.start < b.start; });
    std::vector<Interval> merged;
    for (const auto& iv : intervals) {
      if (!merged.empty() && iv.start <= merged.back().end) {
        merged.back().end = std::max(merged.back().end, iv.end);
      } else {
        merged.push_back(iv);
      }
    }
    intervals = std::move(merged);
  }
  std::erase_if(activations, [](const auto& kv) { return kv.second.empty(); });
  return ActivationTrack{std::move(track_id), duration, std::move(activations),
                         has_bleed};
}

namespace {

// Positive-measure intersection with frame [k, k+1).
bool active_in_frame(const std::vector<Interval>& intervals, int k) {
  const double lo = k, hi = k + 1;
  for (const auto& iv : intervals) {
    if (iv.start >= hi) break;  // sorted
    if (iv.end > lo && iv.start < hi) return true;
  }
  return false;
}

double active_time_in_frame(const std::vector<Interval>& intervals, int k) {
  const double lo = k, hi = k + 1;
  double total = 0;
  for (const auto& iv : intervals) {
    if (iv.start >= hi) break;
    total += std::max(0.0, std::min(iv.end, hi) - std::max(iv.start, lo));
  }
  return total;
}

}  // namespace

std::vector<LabeledFrame> frame_labels(const ActivationTrack& track,
                                       const LabelSpace& space) {
  std::vector<std::string> unknown;
  for (const auto& [instrument, _] : track.activations) {
    if (!space.find_instrument(instrument)) unknown.push_back(instrument);
  }
  if (!unknown.empty()) {
    std::string joined;
    for (const auto& name : unknown) {
      if (!joined.empty()) joined += ", ";
      joined += name;
    }
    fail(ErrorCategory::lookup, "track '" + track.track_id +
                                    "' has instruments missing from the label "
                                    "space: " + joined);
  }

  const int frames = static_cast<int>(std::floor(track.duration));
  std::vector<LabeledFrame> out;
  out.reserve(frames);
  std::vector<std::string> active;
  for (int k = 0; k < frames; ++k) {
    active.clear();
    for (const auto& [instrument, intervals] : track.activations) {
      if (active_in_frame(intervals, k)) active.push_back(instrument);
    }
    out.push_back({track.track_id, k, expand_labels(space, active)});
  }
  return out;
}

double short_activation_fraction(std::span<const ActivationTrack> tracks,
                                 double min_duration) {
  if (min_duration <= 0) {
    fail(ErrorCategory::config, "min_duration must be positive");
  }
  if (tracks.empty()) {
    fail(ErrorCategory::config,
         "short-activation statistic is undefined for an empty track list");
  }
  std::uint64_t active_pairs = 0, short_pairs = 0;
  for (const auto& track : tracks) {
    const int frames = static_cast<int>(std::floor(track.duration));
    for (const auto& [instrument, intervals] : track.activations) {
      for (int k = 0; k < frames; ++k) {
        if (!active_in_frame(intervals, k)) continue;
        ++active_pairs;
        if (active_time_in_frame(intervals, k) < min_duration) ++short_pairs;
      }
    }
  }
  if (active_pairs == 0) return 0.0;
  return static_cast<double>(short_pairs) / static_cast<double>(active_pairs);
}

namespace {

// Per-track active-frame counts per instrument index.
std::vector<std::vector<std::int64_t>> per_track_counts(
    std::span<const ActivationTrack> tracks, const LabelSpace& space) {
  std::vector<std::vector<std::int64_t>> counts(
      tracks.size(), std::vector<std::int64_t>(space.instrument_count(), 0));
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    const auto& track = tracks[t];
    const int frames = static_cast<int>(std::floor(track.duration));
    for (const auto& [instrument, intervals] : track.activations) {
      std::size_t idx = space.instrument_index(instrument);
      for (int k = 0; k < frames; ++k) {
        if (active_in_frame(intervals, k)) ++counts[t][idx];
      }
    }
  }
  return counts;
}

double l1_divergence(const std::vector<std::int64_t>& train,
                     const std::vector<std::int64_t>& test) {
  const double train_total = std::accumulate(train.begin(), train.end(), 0.0);
  const double test_total = std::accumulate(test.begin(), test.end(), 0.0);
  if (train_total == 0 && test_total == 0) return 0.0;
  if (train_total == 0 || test_total == 0) return 2.0;  // maximal L1
  double d = 0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    d += std::abs(train[i] / train_total - test[i] / test_total);
  }
  return d;
}

}  // namespace

DatasetSplit split_tracks(std::span<const ActivationTrack> tracks,
                          const LabelSpace& space, double test_fraction,
                          std::uint64_t seed, double max_divergence,
                          int iterations) {
  if (!(test_fraction > 0 && test_fraction < 1)) {
    fail(ErrorCategory::config, "test_fraction must be in (0, 1)");
  }
  if (iterations < 1) {
    fail(ErrorCategory::config, "split iterations must be >= 1");
  }
  const std::size_t n = tracks.size();
  std::size_t test_count = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(n)));
  test_count = std::clamp<std::size_t>(test_count, 1, n > 1 ? n - 1 : 0);
  if (n < 2) {
    fail(ErrorCategory::config, "cannot split fewer than 2 tracks");
  }

  const auto counts = per_track_counts(tracks, space);
  std::vector<double> track_frames(n);
  for (std::size_t t = 0; t < n; ++t) {
    track_frames[t] = std::floor(tracks[t].duration);
  }

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::vector<char> best_is_test;
  double best_divergence = std::numeric_limits<double>::infinity();

  std::vector<std::int64_t> train_counts(space.instrument_count());
  std::vector<std::int64_t> test_counts(space.instrument_count());
  for (int it = 0; it < iterations; ++it) {
    // Partial Fisher-Yates: the first test_count entries become the test set.
    for (std::size_t i = 0; i < test_count; ++i) {
      std::size_t j = i + rng.index(n - i);
      std::swap(order[i], order[j]);
    }
    std::fill(train_counts.begin(), train_counts.end(), 0);
    std::fill(test_counts.begin(), test_counts.end(), 0);
    std::vector<char> is_test(n, 0);
    for (std::size_t i = 0; i < test_count; ++i) is_test[order[i]] = 1;
    for (std::size_t t = 0; t < n; ++t) {
      auto& acc = is_test[t] ? test_counts : train_counts;
      for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += counts[t][c];
    }
    double d = l1_divergence(train_counts, test_counts);
    if (d < best_divergence) {
      best_divergence = d;
      best_is_test = std::move(is_test);
      if (best_divergence == 0.0) break;
    }
  }

  DatasetSplit split;
  split.divergence = best_divergence;
  split.within_bound = best_divergence <= max_divergence;
  double total_frames = 0, test_frame_count = 0;
  std::fill(train_counts.begin(), train_counts.end(), 0);
  std::fill(test_counts.begin(), test_counts.end(), 0);
  for (std::size_t t = 0; t < n; ++t) {
    total_frames += track_frames[t];
    if (best_is_test[t]) {
      split.test_tracks.push_back(tracks[t].track_id);
      test_frame_count += track_frames[t];
      for (std::size_t c = 0; c < test_counts.size(); ++c)
        test_counts[c] += counts[t][c];
    } else {
      split.train_tracks.push_back(tracks[t].track_id);
      for (std::size_t c = 0; c < train_counts.size(); ++c)
        train_counts[c] += counts[t][c];
    }
  }
  split.test_fraction = total_frames > 0 ? test_frame_count / total_frames : 0.0;
  for (std::size_t c = 0; c < space.instrument_count(); ++c) {
    if (test_counts[c] > 0 && train_counts[c] == 0) {
      split.test_only_instruments.push_back(space.instruments()[c]);
    }
  }
  return split;
}

FrameSet build_frame_set(std::span<const ActivationTrack> tracks,
                         const LabelSpace& space) {
  FrameSet set;
  set.label_names = space.label_names();
  for (const auto& track : tracks) {
    for (auto& frame : frame_labels(track, space)) {
      set.track_ids.push_back(frame.track_id);
      set.frame_indices.push_back(frame.frame_index);
      set.labels.insert(set.labels.end(), frame.labels.begin(), frame.labels.end());
    }
  }
  return set;
}

}  // namespace instrec
