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

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "instrec/dataset.hpp"
#include "instrec/errors.hpp"

namespace instrec {

namespace {

const std::string kMetadataSuffix = "_METADATA.yaml";

std::string strip(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\''))) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

struct TrackMetadata {
  bool has_bleed = false;
  std::map<std::string, std::string> stem_instrument;  // stem key -> instrument
};

// Minimal reader for the MedleyDB metadata documents: pulls `has_bleed` and
// each stem's `instrument` field, keyed by the stem map key (e.g. "S01").
TrackMetadata parse_metadata(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::io, "cannot open metadata " + path.string());
  TrackMetadata meta;
  std::string line, current_stem;
  bool in_stems = false;
  int stems_indent = -1;
  while (std::getline(in, line)) {
    const auto indent = static_cast<int>(line.find_first_not_of(' '));
    std::string body = strip(line);
    if (body.empty() || body[0] == '#') continue;
    auto colon = body.find(':');
    if (colon == std::string::npos) continue;
    std::string key = strip(body.substr(0, colon));
    std::string value = unquote(strip(body.substr(colon + 1)));

    if (indent == 0) {
      in_stems = (key == "stems");
      if (key == "has_bleed") {
        meta.has_bleed = (value == "yes" || value == "true");
      }
      current_stem.clear();
      stems_indent = -1;
      continue;
    }
    if (!in_stems) continue;
    if (value.empty()) {  // a nested map key, e.g. "S01:"
      if (stems_indent == -1) stems_indent = indent;
      if (indent == stems_indent) current_stem = key;
    } else if (key == "instrument" && !current_stem.empty()) {
      meta.stem_instrument[current_stem] = value;
    }
  }
  return meta;
}

double parse_number(std::string_view s, const std::string& context) {
  double v = 0;
  std::string t = strip(s);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    fail(ErrorCategory::parse, context + ": bad number '" + t + "'");
  }
  return v;
}

}  // namespace

std::vector<Interval> threshold_confidence(std::span<const double> times,
                                           std::span<const double> confidence,
                                           double threshold) {
  if (times.size() != confidence.size()) {
    fail(ErrorCategory::shape, "time and confidence columns differ in length");
  }
  if (times.empty()) return {};
  // Median step covers the final sample and any trailing gap.
  double step = 1.0;
  if (times.size() > 1) {
    std::vector<double> steps;
    steps.reserve(times.size() - 1);
    for (std::size_t i = 1; i < times.size(); ++i) {
      steps.push_back(times[i] - times[i - 1]);
    }
    std::nth_element(steps.begin(), steps.begin() + steps.size() / 2, steps.end());
    step = steps[steps.size() / 2];
  }
  std::vector<Interval> intervals;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (confidence[i] < threshold) continue;
    const double start = times[i];
    const double end = i + 1 < times.size() ? times[i + 1] : times[i] + step;
    if (!intervals.empty() && start <= intervals.back().end) {
      intervals.back().end = std::max(intervals.back().end, end);
    } else {
      intervals.push_back({start, end});
    }
  }
  return intervals;
}

IngestResult ingest_medleydb(const std::filesystem::path& metadata_dir,
                             const std::filesystem::path& annotations_dir,
                             double confidence_threshold) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(metadata_dir)) {
    fail(ErrorCategory::io, "metadata directory not found: " + metadata_dir.string());
  }
  if (!fs::is_directory(annotations_dir)) {
    fail(ErrorCategory::io,
         "annotations directory not found: " + annotations_dir.string());
  }

  std::vector<std::string> track_ids;
  for (const auto& entry : fs::directory_iterator(metadata_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() > kMetadataSuffix.size() && name.ends_with(kMetadataSuffix)) {
      track_ids.push_back(name.substr(0, name.size() - kMetadataSuffix.size()));
    }
  }
  std::sort(track_ids.begin(), track_ids.end());

  IngestResult result;
  result.total_tracks = static_cast<int>(track_ids.size());
  for (const auto& track_id : track_ids) {
    TrackMetadata meta =
        parse_metadata(metadata_dir / (track_id + kMetadataSuffix));
    if (meta.has_bleed) {
      ++result.excluded_bleed;
      continue;
    }

    fs::path annotation;
    for (const char* suffix : {"_ACTIVATION_CONF.lab", "_ACTIVATION_CONF.csv"}) {
      fs::path candidate = annotations_dir / (track_id + suffix);
      if (fs::exists(candidate)) {
        annotation = candidate;
        break;
      }
    }
    if (annotation.empty()) {
      fail(ErrorCategory::io,
           "missing activation annotation for track '" + track_id + "'");
    }

    std::ifstream in(annotation);
    if (!in) fail(ErrorCategory::io, "cannot open " + annotation.string());
    std::string line;
    if (!std::getline(in, line)) {
      fail(ErrorCategory::parse, annotation.string() + ": empty annotation file");
    }
    std::vector<std::string> header;
    {
      std::istringstream ss(line);
      std::string field;
      while (std::getline(ss, field, ',')) header.push_back(strip(field));
    }
    if (header.empty() || header[0] != "time") {
      fail(ErrorCategory::parse,
           annotation.string() + ": first column must be 'time'");
    }

    std::vector<double> times;
    std::vector<std::vector<double>> columns(header.size() - 1);
    int line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (strip(line).empty()) continue;
      std::istringstream ss(line);
      std::string field;
      std::size_t col = 0;
      const std::string ctx =
          annotation.string() + " line " + std::to_string(line_no);
      while (std::getline(ss, field, ',')) {
        if (col >= header.size()) {
          fail(ErrorCategory::parse, ctx + ": too many fields");
        }
        double v = parse_number(field, ctx);
        if (col == 0) {
          times.push_back(v);
        } else {
          columns[col - 1].push_back(v);
        }
        ++col;
      }
      if (col != header.size()) {
        fail(ErrorCategory::parse, ctx + ": expected " +
                                       std::to_string(header.size()) + " fields");
      }
    }

    std::map<std::string, std::vector<Interval>> activations;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const std::string& stem = header[c + 1];
      auto it = meta.stem_instrument.find(stem);
      if (it == meta.stem_instrument.end()) continue;  // stem without metadata
      auto intervals = threshold_confidence(times, columns[c], confidence_threshold);
      auto& dest = activations[it->second];
      dest.insert(dest.end(), intervals.begin(), intervals.end());
    }

    double duration = 0;
    if (!times.empty()) {
      const double step =
          times.size() > 1 ? times[1] - times[0] : 1.0;  // uniform grids in practice
      duration = times.back() + step;
    }
    result.tracks.push_back(
        make_track(track_id, duration, std::move(activations), false));
  }
  return result;
}

}  // namespace instrec
