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
#include <span>
#include <string>
#include <vector>

#include "instrec/dataset.hpp"

namespace instrec {

// One MFCC block for a single 1-second frame: `coefficients` rows by
// `time_steps` columns, single channel, row-major.
struct FeatureTensor {
  int coefficients = 0;
  int time_steps = 0;
  std::vector<float> data;  // coefficients * time_steps
  std::string track_id;
  int frame_index = 0;
};

struct MfccConfig {
  int sample_rate = 22050;
  int window_size = 2048;
  int hop_size = 1024;
  int mel_bands = 128;
  int coefficients = 80;
  double log_floor = 1e-10;

  // Centered framing with reflection padding: 1 + floor(sample_rate / hop).
  int time_steps() const { return 1 + sample_rate / hop_size; }
};

// Deterministic MFCC pipeline: Hann-windowed STFT, mel filter bank,
// log, orthonormal DCT-II. All arithmetic in double, stored as float.
class MfccExtractor {
 public:
  explicit MfccExtractor(MfccConfig config = {});

  const MfccConfig& config() const { return config_; }

  // `audio` must hold exactly one second (sample_rate samples), all finite.
  FeatureTensor extract(std::span<const float> audio) const;

 private:
  MfccConfig config_;
  std::vector<double> window_;       // Hann, window_size
  std::vector<double> mel_weights_;  // mel_bands x (window_size/2 + 1)
  std::vector<double> dct_;          // coefficients x mel_bands
};

// ---------------------------------------------------------------------------
// Feature store: store.json + index.csv + one .feat blob per track holding
// little-endian float32 frames back to back.

class FeatureStoreWriter {
 public:
  FeatureStoreWriter(const std::filesystem::path& dir, int coefficients,
                     int time_steps);
  ~FeatureStoreWriter();

  void add(const std::string& track_id, int frame_index,
           std::span<const float> data);
  void finalize();

 private:
  std::filesystem::path dir_;
  int coefficients_, time_steps_;
  std::string current_track_;
  std::vector<std::tuple<std::string, int, std::uint64_t>> index_;
  void* out_ = nullptr;  // std::ofstream, kept out of the header
  std::uint64_t offset_ = 0;
  bool finalized_ = false;
};

class FeatureStore {
 public:
  static FeatureStore open(const std::filesystem::path& dir);

  int coefficients() const { return coefficients_; }
  int time_steps() const { return time_steps_; }
  std::size_t frame_size() const {
    return static_cast<std::size_t>(coefficients_) * time_steps_;
  }

  bool contains(const std::string& track_id, int frame_index) const;
  std::vector<float> load(const std::string& track_id, int frame_index) const;

  // Bulk load aligned with a frame manifest; throws when a row is missing.
  std::vector<float> load_rows(const FrameSet& frames) const;

 private:
  std::filesystem::path dir_;
  int coefficients_ = 0, time_steps_ = 0;
  std::map<std::pair<std::string, int>, std::uint64_t> offsets_;  // bytes
};

struct BatchExtractReport {
  std::size_t frames_written = 0;
  std::vector<std::pair<std::string, std::string>> failed_tracks;  // id, reason
};

// Extracts one tensor per manifest row into a fresh store at `out_dir`.
// Tracks with missing or short audio are reported and skipped; remaining
// tracks are still processed. Re-runs overwrite deterministically.
BatchExtractReport batch_extract(const Corpus& corpus, const FrameSet& frames,
                                 const std::filesystem::path& out_dir,
                                 const MfccConfig& config = {});

}  // namespace instrec
