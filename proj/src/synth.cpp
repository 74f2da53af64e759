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

#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "instrec/common.hpp"
#include "instrec/dataset.hpp"
#include "instrec/errors.hpp"

namespace instrec {

namespace {

using nlohmann::json;

void check_spec(const SynthSpec& spec) {
  if (spec.track_count < 1) fail(ErrorCategory::config, "track_count must be >= 1");
  if (spec.track_duration <= 0) {
    fail(ErrorCategory::config, "track_duration must be positive");
  }
  if (spec.sample_rate < 1000) {
    fail(ErrorCategory::config, "sample_rate must be >= 1000");
  }
  if (spec.instruments.empty()) {
    fail(ErrorCategory::config, "synthetic spec lists no instruments");
  }
  if (spec.polyphony_weights.empty()) {
    fail(ErrorCategory::config, "polyphony_weights must not be empty");
  }
  if (spec.polyphony_weights.size() > spec.instruments.size()) {
    fail(ErrorCategory::config,
         "polyphony exceeds the number of available instruments");
  }
  double total = 0;
  for (double w : spec.polyphony_weights) {
    if (w < 0) fail(ErrorCategory::config, "polyphony weights must be >= 0");
    total += w;
  }
  if (total <= 0) {
    fail(ErrorCategory::config, "polyphony weights must not all be zero");
  }
  for (const auto& inst : spec.instruments) {
    if (inst.name.empty()) fail(ErrorCategory::config, "instrument without a name");
    if (inst.frequencies_hz.empty()) {
      fail(ErrorCategory::config,
           "instrument '" + inst.name + "' has no signature frequencies");
    }
  }
}

}  // namespace

SynthSpec load_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::io, "cannot open synth spec " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    fail(ErrorCategory::parse, path.string() + ": " + e.what());
  }
  SynthSpec spec;
  try {
    spec.track_count = doc.at("track_count").get<int>();
    spec.track_duration = doc.at("track_duration").get<double>();
    spec.sample_rate = doc.value("sample_rate", 22050);
    spec.noise_level = doc.value("noise_level", 0.0);
    spec.polyphony_weights = doc.at("polyphony").get<std::vector<double>>();
    for (const auto& inst : doc.at("instruments")) {
      SynthInstrument si;
      si.name = inst.at("name").get<std::string>();
      si.frequencies_hz = inst.at("frequencies").get<std::vector<double>>();
      si.gain = inst.value("gain", 1.0);
      spec.instruments.push_back(std::move(si));
    }
  } catch (const json::exception& e) {
    fail(ErrorCategory::parse, path.string() + ": " + e.what());
  }
  check_spec(spec);
  return spec;
}

void validate_synth_spec(const SynthSpec& spec, const Taxonomy& taxonomy) {
  check_spec(spec);
  for (const auto& inst : spec.instruments) {
    if (!taxonomy.assignments().contains(inst.name)) {
      fail(ErrorCategory::config, "synthetic instrument '" + inst.name +
                                      "' has no taxonomy assignment");
    }
  }
}

SynthCorpus generate_synthetic_corpus(const SynthSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  SynthCorpus corpus;
  corpus.sample_rate = spec.sample_rate;

  const int seconds = static_cast<int>(std::floor(spec.track_duration));
  const int sr = spec.sample_rate;
  const double poly_total = std::accumulate(spec.polyphony_weights.begin(),
                                            spec.polyphony_weights.end(), 0.0);
  Rng master(seed);

  for (int t = 0; t < spec.track_count; ++t) {
    Rng rng = master.fork(static_cast<std::uint64_t>(t));
    char id[32];
    std::snprintf(id, sizeof(id), "synth_%04d", t);

    std::map<std::string, std::vector<Interval>> activations;
    std::vector<float> audio(
        static_cast<std::size_t>(std::llround(spec.track_duration * sr)), 0.0f);
    std::vector<std::size_t> pool(spec.instruments.size());

    for (int k = 0; k < seconds; ++k) {
      // Draw the polyphony, then that many distinct instruments.
      double u = rng.uniform() * poly_total;
      std::size_t poly = spec.polyphony_weights.size();
      for (std::size_t i = 0; i < spec.polyphony_weights.size(); ++i) {
        u -= spec.polyphony_weights[i];
        if (u < 0) {
          poly = i + 1;
          break;
        }
      }
      std::iota(pool.begin(), pool.end(), 0);
      for (std::size_t i = 0; i < poly; ++i) {
        std::size_t j = i + rng.index(pool.size() - i);
        std::swap(pool[i], pool[j]);
      }
      for (std::size_t i = 0; i < poly; ++i) {
        const auto& inst = spec.instruments[pool[i]];
        activations[inst.name].push_back(
            {static_cast<double>(k), static_cast<double>(k + 1)});
        const double amp = inst.gain / static_cast<double>(inst.frequencies_hz.size());
        for (int s = 0; s < sr; ++s) {
          const double time = k + static_cast<double>(s) / sr;
          double v = 0;
          for (double f : inst.frequencies_hz) v += std::sin(2.0 * M_PI * f * time);
          audio[static_cast<std::size_t>(k) * sr + s] +=
              static_cast<float>(amp * v);
        }
      }
      if (spec.noise_level > 0) {
        for (int s = 0; s < sr; ++s) {
          audio[static_cast<std::size_t>(k) * sr + s] +=
              static_cast<float>(spec.noise_level * rng.normal());
        }
      }
    }
    corpus.tracks.push_back(
        make_track(id, spec.track_duration, std::move(activations), false));
    corpus.audio.push_back(std::move(audio));
  }
  return corpus;
}

}  // namespace instrec
