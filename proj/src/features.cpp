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

#include "instrec/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <fstream>

#include <json.hpp>

#include "instrec/errors.hpp"

namespace instrec {

namespace {

// In-place iterative radix-2 FFT. n must be a power of two.
void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

MfccExtractor::MfccExtractor(MfccConfig config) : config_(config) {
  if (config_.window_size <= 0 || !std::has_single_bit(
          static_cast<unsigned>(config_.window_size))) {
    fail(ErrorCategory::config, "window_size must be a power of two");
  }
  if (config_.hop_size <= 0 || config_.mel_bands <= 0 || config_.coefficients <= 0) {
    fail(ErrorCategory::config, "invalid MFCC configuration");
  }
  if (config_.coefficients > config_.mel_bands) {
    fail(ErrorCategory::config, "coefficients must not exceed mel_bands");
  }

  const int n = config_.window_size;
  window_.resize(n);
  for (int i = 0; i < n; ++i) {
    window_[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);
  }

  // Triangular mel filters, peak 1, spanning 0 Hz .. Nyquist.
  const int bins = n / 2 + 1;
  const int bands = config_.mel_bands;
  const double mel_max = hz_to_mel(config_.sample_rate / 2.0);
  std::vector<double> edges(bands + 2);
  for (int i = 0; i < bands + 2; ++i) {
    edges[i] = mel_to_hz(mel_max * i / (bands + 1));
  }
  mel_weights_.assign(static_cast<std::size_t>(bands) * bins, 0.0);
  for (int b = 0; b < bands; ++b) {
    const double lo = edges[b], center = edges[b + 1], hi = edges[b + 2];
    for (int k = 0; k < bins; ++k) {
      const double freq =
          static_cast<double>(k) * config_.sample_rate / n;
      double w = 0;
      if (freq > lo && freq < center) {
        w = (freq - lo) / (center - lo);
      } else if (freq >= center && freq < hi) {
        w = (hi - freq) / (hi - center);
      }
      mel_weights_[static_cast<std::size_t>(b) * bins + k] = w;
    }
  }

  // Orthonormal DCT-II.
  dct_.resize(static_cast<std::size_t>(config_.coefficients) * bands);
  const double norm0 = std::sqrt(1.0 / bands);
  const double norm = std::sqrt(2.0 / bands);
  for (int c = 0; c < config_.coefficients; ++c) {
    for (int b = 0; b < bands; ++b) {
      dct_[static_cast<std::size_t>(c) * bands + b] =
          (c == 0 ? norm0 : norm) *
          std::cos(M_PI * c * (2.0 * b + 1.0) / (2.0 * bands));
    }
  }
}

FeatureTensor MfccExtractor::extract(std::span<const float> audio) const {
  if (audio.size() != static_cast<std::size_t>(config_.sample_rate)) {
    fail(ErrorCategory::shape,
         "expected exactly " + std::to_string(config_.sample_rate) +
             " samples, got " + std::to_string(audio.size()));
  }
  for (float v : audio) {
    if (!std::isfinite(v)) {
      fail(ErrorCategory::config, "audio contains non-finite samples");
    }
  }

  const int n = config_.window_size;
  const int bins = n / 2 + 1;
  const int bands = config_.mel_bands;
  const int steps = config_.time_steps();
  const int half = n / 2;
  const auto total = static_cast<long long>(audio.size());

  FeatureTensor out;
  out.coefficients = config_.coefficients;
  out.time_steps = steps;
  out.data.assign(static_cast<std::size_t>(config_.coefficients) * steps, 0.0f);

  std::vector<std::complex<double>> buf(n);
  std::vector<double> power(bins), mel(bands), coeffs(config_.coefficients);
  for (int t = 0; t < steps; ++t) {
    const long long center = static_cast<long long>(t) * config_.hop_size;
    for (int i = 0; i < n; ++i) {
      long long idx = center - half + i;
      // Reflection padding at both ends.
      if (idx < 0) idx = -idx;
      if (idx >= total) idx = 2 * (total - 1) - idx;
      buf[i] = window_[i] * static_cast<double>(audio[static_cast<std::size_t>(idx)]);
    }
    fft(buf);
    for (int k = 0; k < bins; ++k) power[k] = std::norm(buf[k]);
    for (int b = 0; b < bands; ++b) {
      const double* w = &mel_weights_[static_cast<std::size_t>(b) * bins];
      double acc = 0;
      for (int k = 0; k < bins; ++k) acc += w[k] * power[k];
      mel[b] = std::log(acc + config_.log_floor);
    }
    for (int c = 0; c < config_.coefficients; ++c) {
      const double* d = &dct_[static_cast<std::size_t>(c) * bands];
      double acc = 0;
      for (int b = 0; b < bands; ++b) acc += d[b] * mel[b];
      coeffs[c] = acc;
    }
    for (int c = 0; c < config_.coefficients; ++c) {
      out.data[static_cast<std::size_t>(c) * steps + t] =
          static_cast<float>(coeffs[c]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

FeatureStoreWriter::FeatureStoreWriter(const std::filesystem::path& dir,
                                       int coefficients, int time_steps)
    : dir_(dir), coefficients_(coefficients), time_steps_(time_steps) {
  std::filesystem::create_directories(dir_);
}

FeatureStoreWriter::~FeatureStoreWriter() {
  delete static_cast<std::ofstream*>(out_);
}

void FeatureStoreWriter::add(const std::string& track_id, int frame_index,
                             std::span<const float> data) {
  if (finalized_) fail(ErrorCategory::state, "feature store already finalized");
  if (data.size() != static_cast<std::size_t>(coefficients_) * time_steps_) {
    fail(ErrorCategory::shape, "feature row has the wrong size");
  }
  if (track_id != current_track_) {
    delete static_cast<std::ofstream*>(out_);
    auto* stream = new std::ofstream(dir_ / (track_id + ".feat"),
                                     std::ios::binary | std::ios::trunc);
    if (!*stream) {
      delete stream;
      fail(ErrorCategory::io, "cannot write feature blob for " + track_id);
    }
    out_ = stream;
    current_track_ = track_id;
    offset_ = 0;
  }
  auto* stream = static_cast<std::ofstream*>(out_);
  stream->write(reinterpret_cast<const char*>(data.data()),
                static_cast<std::streamsize>(data.size() * sizeof(float)));
  index_.emplace_back(track_id, frame_index, offset_);
  offset_ += data.size() * sizeof(float);
}

void FeatureStoreWriter::finalize() {
  if (finalized_) return;
  delete static_cast<std::ofstream*>(out_);
  out_ = nullptr;
  finalized_ = true;

  nlohmann::json meta;
  meta["format"] = "instrec-features-v1";
  meta["dtype"] = "f32le";
  meta["coefficients"] = coefficients_;
  meta["time_steps"] = time_steps_;
  std::ofstream mf(dir_ / "store.json");
  if (!mf) fail(ErrorCategory::io, "cannot write store.json");
  mf << meta.dump(2) << '\n';

  std::ofstream idx(dir_ / "index.csv");
  if (!idx) fail(ErrorCategory::io, "cannot write index.csv");
  idx << "track_id,frame_index,offset_bytes\n";
  for (const auto& [track, frame, offset] : index_) {
    idx << track << ',' << frame << ',' << offset << '\n';
  }
}

FeatureStore FeatureStore::open(const std::filesystem::path& dir) {
  FeatureStore store;
  store.dir_ = dir;
  {
    std::ifstream mf(dir / "store.json");
    if (!mf) fail(ErrorCategory::io, "cannot open feature store at " + dir.string());
    nlohmann::json meta;
    try {
      mf >> meta;
      store.coefficients_ = meta.at("coefficients").get<int>();
      store.time_steps_ = meta.at("time_steps").get<int>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCategory::parse, "store.json: " + std::string(e.what()));
    }
  }
  std::ifstream idx(dir / "index.csv");
  if (!idx) fail(ErrorCategory::io, "feature store has no index.csv");
  std::string line;
  std::getline(idx, line);  // header
  int line_no = 1;
  while (std::getline(idx, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      fail(ErrorCategory::parse,
           "index.csv line " + std::to_string(line_no) + ": bad row");
    }
    store.offsets_[{line.substr(0, c1),
                    std::stoi(line.substr(c1 + 1, c2 - c1 - 1))}] =
        std::stoull(line.substr(c2 + 1));
  }
  return store;
}

bool FeatureStore::contains(const std::string& track_id, int frame_index) const {
  return offsets_.contains({track_id, frame_index});
}

std::vector<float> FeatureStore::load(const std::string& track_id,
                                      int frame_index) const {
  auto it = offsets_.find({track_id, frame_index});
  if (it == offsets_.end()) {
    fail(ErrorCategory::lookup, "feature store has no frame " + track_id + "/" +
                                    std::to_string(frame_index));
  }
  std::ifstream in(dir_ / (track_id + ".feat"), std::ios::binary);
  if (!in) fail(ErrorCategory::io, "cannot open feature blob for " + track_id);
  std::vector<float> data(frame_size());
  in.seekg(static_cast<std::streamoff>(it->second));
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!in) fail(ErrorCategory::io, "short read in feature blob for " + track_id);
  return data;
}

std::vector<float> FeatureStore::load_rows(const FrameSet& frames) const {
  std::vector<float> out(frames.rows() * frame_size());
  std::string open_track;
  std::ifstream in;
  for (std::size_t r = 0; r < frames.rows(); ++r) {
    const auto& track = frames.track_ids[r];
    auto it = offsets_.find({track, frames.frame_indices[r]});
    if (it == offsets_.end()) {
      fail(ErrorCategory::lookup,
           "feature store has no frame " + track + "/" +
               std::to_string(frames.frame_indices[r]));
    }
    if (track != open_track) {
      in.close();
      in.clear();
      in.open(dir_ / (track + ".feat"), std::ios::binary);
      if (!in) fail(ErrorCategory::io, "cannot open feature blob for " + track);
      open_track = track;
    }
    in.seekg(static_cast<std::streamoff>(it->second));
    in.read(reinterpret_cast<char*>(out.data() + r * frame_size()),
            static_cast<std::streamsize>(frame_size() * sizeof(float)));
    if (!in) fail(ErrorCategory::io, "short read in feature blob for " + track);
  }
  return out;
}

BatchExtractReport batch_extract(const Corpus& corpus, const FrameSet& frames,
                                 const std::filesystem::path& out_dir,
                                 const MfccConfig& config) {
  MfccConfig cfg = config;
  cfg.sample_rate = corpus.sample_rate;
  MfccExtractor extractor(cfg);
  FeatureStoreWriter writer(out_dir, cfg.coefficients, cfg.time_steps());

  BatchExtractReport report;
  std::string loaded_track;
  std::vector<float> audio;
  std::string failed_track;
  for (std::size_t r = 0; r < frames.rows(); ++r) {
    const auto& track = frames.track_ids[r];
    const int frame = frames.frame_indices[r];
    if (track == failed_track) continue;
    if (track != loaded_track) {
      auto it = corpus.audio_files.find(track);
      if (it == corpus.audio_files.end()) {
        report.failed_tracks.emplace_back(track, "no audio file in corpus");
        failed_track = track;
        continue;
      }
      try {
        audio = read_audio_f32(it->second);
      } catch (const Error& e) {
        report.failed_tracks.emplace_back(track, e.what());
        failed_track = track;
        continue;
      }
      loaded_track = track;
    }
    const std::size_t begin = static_cast<std::size_t>(frame) * cfg.sample_rate;
    if (begin + cfg.sample_rate > audio.size()) {
      report.failed_tracks.emplace_back(
          track, "audio shorter than frame " + std::to_string(frame));
      failed_track = track;
      continue;
    }
    FeatureTensor tensor = extractor.extract(
        std::span<const float>(audio.data() + begin, cfg.sample_rate));
    writer.add(track, frame, tensor.data);
    ++report.frames_written;
  }
  writer.finalize();
  return report;
}

}  // namespace instrec
