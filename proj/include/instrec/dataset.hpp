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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "instrec/taxonomy.hpp"

namespace instrec {

// Half-open activation span [start, end) in seconds.
struct Interval {
  double start = 0;
  double end = 0;
};

// Per-track instrument activations. Intervals per instrument are sorted,
// merged and clipped to [0, duration] on construction.
struct ActivationTrack {
  std::string track_id;
  double duration = 0;
  std::map<std::string, std::vector<Interval>> activations;
  bool has_bleed = false;
};

// Validates invariants and normalizes (sorts, merges, clips) the intervals.
ActivationTrack make_track(std::string track_id, double duration,
                           std::map<std::string, std::vector<Interval>> activations,
                           bool has_bleed = false);

// One 1-second frame covering [frame_index, frame_index + 1) seconds.
struct LabeledFrame {
  std::string track_id;
  int frame_index = 0;
  std::vector<std::uint8_t> labels;  // multi-hot over instruments + groups
};

// One frame per whole second of the track. An instrument is active in frame
// k iff one of its intervals intersects [k, k+1) with positive measure;
// group labels follow from the instruments. The trailing partial second is
// dropped.
std::vector<LabeledFrame> frame_labels(const ActivationTrack& track,
                                       const LabelSpace& space);

// Fraction of (frame, active-instrument) pairs whose total active time
// within the frame is below `min_duration` seconds.
double short_activation_fraction(std::span<const ActivationTrack> tracks,
                                 double min_duration);

struct DatasetSplit {
  std::vector<std::string> train_tracks;
  std::vector<std::string> test_tracks;
  double divergence = 0;     // L1 distance of per-instrument frame proportions
  double test_fraction = 0;  // achieved, in frames
  std::vector<std::string> test_only_instruments;
  bool within_bound = true;  // divergence <= the requested bound
};

// Seeded randomized search over track partitions: draws `iterations`
// candidate partitions with round(test_fraction * N) test tracks and keeps
// the one with the smallest divergence. Deterministic per seed. When no
// candidate meets `max_divergence` the best one is returned with
// within_bound = false.
DatasetSplit split_tracks(std::span<const ActivationTrack> tracks,
                          const LabelSpace& space, double test_fraction,
                          std::uint64_t seed, double max_divergence,
                          int iterations);

// Frame-major label matrix plus its provenance; the row layout matches the
// frame manifest CSV (track_id, frame_index, one column per label).
struct FrameSet {
  std::vector<std::string> label_names;
  std::vector<std::string> track_ids;   // per row
  std::vector<int> frame_indices;       // per row
  std::vector<std::uint8_t> labels;     // rows x label_names.size()

  std::size_t rows() const { return track_ids.size(); }
  std::size_t dim() const { return label_names.size(); }
  const std::uint8_t* row(std::size_t r) const { return labels.data() + r * dim(); }
};

FrameSet build_frame_set(std::span<const ActivationTrack> tracks,
                         const LabelSpace& space);

void write_frame_manifest(const FrameSet& frames, const std::filesystem::path& path);
FrameSet read_frame_manifest(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// MedleyDB ingestion

struct IngestResult {
  std::vector<ActivationTrack> tracks;  // bleed-free tracks only
  int total_tracks = 0;                 // metadata entries seen
  int excluded_bleed = 0;
};

// Reads MedleyDB-format metadata (key-value documents with `has_bleed` and
// per-stem `instrument` fields) and activation-confidence tables (CSV with a
// leading `time` column). Stem confidence curves are thresholded into
// intervals and merged per instrument.
IngestResult ingest_medleydb(const std::filesystem::path& metadata_dir,
                             const std::filesystem::path& annotations_dir,
                             double confidence_threshold = 0.5);

// Thresholds one sampled confidence curve into merged half-open intervals.
// Each sample spans [t_k, t_{k+1}); the final sample extends by the median
// step. Exposed for tests.
std::vector<Interval> threshold_confidence(std::span<const double> times,
                                           std::span<const double> confidence,
                                           double threshold);

// ---------------------------------------------------------------------------
// Synthetic corpus

struct SynthInstrument {
  std::string name;
  std::vector<double> frequencies_hz;
  double gain = 1.0;
};

struct SynthSpec {
  int track_count = 0;
  double track_duration = 0;  // seconds
  int sample_rate = 22050;
  double noise_level = 0.0;   // stddev of additive white noise
  std::vector<double> polyphony_weights;  // weight of k active = weights[k-1]
  std::vector<SynthInstrument> instruments;
};

SynthSpec load_synth_spec(const std::filesystem::path& path);

// Throws a config error when an instrument lacks a taxonomy assignment.
void validate_synth_spec(const SynthSpec& spec, const Taxonomy& taxonomy);

struct SynthCorpus {
  std::vector<ActivationTrack> tracks;
  std::vector<std::vector<float>> audio;  // per track, sample_rate * duration samples
  int sample_rate = 22050;
};

// Deterministic per seed. Each second of a track activates a freshly drawn
// instrument subset; the audio is the sum of the active instruments'
// sinusoid signatures plus white noise.
SynthCorpus generate_synthetic_corpus(const SynthSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Corpus directory layout: corpus.json + activations/*.csv (+ audio/*.f32)

void write_corpus(const std::filesystem::path& dir,
                  std::span<const ActivationTrack> tracks,
                  const std::vector<std::vector<float>>* audio = nullptr,
                  int sample_rate = 22050);

struct Corpus {
  std::vector<ActivationTrack> tracks;
  int sample_rate = 22050;
  std::map<std::string, std::filesystem::path> audio_files;  // track -> .f32 path
};

Corpus read_corpus(const std::filesystem::path& dir);

std::vector<float> read_audio_f32(const std::filesystem::path& path);

}  // namespace instrec
