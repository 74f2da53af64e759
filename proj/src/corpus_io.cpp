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

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "instrec/dataset.hpp"
#include "instrec/errors.hpp"

namespace instrec {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double parse_double(std::string_view s, const std::string& context) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorCategory::parse, context + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

int parse_int(std::string_view s, const std::string& context) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorCategory::parse, context + ": bad integer '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

void write_corpus(const std::filesystem::path& dir,
                  std::span<const ActivationTrack> tracks,
                  const std::vector<std::vector<float>>* audio, int sample_rate) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "activations");
  if (audio) fs::create_directories(dir / "audio");

  json meta;
  meta["format"] = "instrec-corpus-v1";
  meta["sample_rate"] = sample_rate;
  meta["tracks"] = json::array();
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    const auto& track = tracks[t];
    const std::string act_rel = "activations/" + track.track_id + ".csv";
    {
      std::ofstream out(dir / act_rel);
      if (!out) fail(ErrorCategory::io, "cannot write " + (dir / act_rel).string());
      out << "instrument,start,end\n";
      for (const auto& [instrument, intervals] : track.activations) {
        for (const auto& iv : intervals) {
          out << instrument << ',' << fmt(iv.start) << ',' << fmt(iv.end) << '\n';
        }
      }
    }
    json entry;
    entry["id"] = track.track_id;
    entry["duration"] = track.duration;
    entry["has_bleed"] = track.has_bleed;
    entry["activations"] = act_rel;
    if (audio) {
      const std::string audio_rel = "audio/" + track.track_id + ".f32";
      const auto& samples = (*audio)[t];
      std::ofstream out(dir / audio_rel, std::ios::binary);
      if (!out) fail(ErrorCategory::io, "cannot write " + (dir / audio_rel).string());
      out.write(reinterpret_cast<const char*>(samples.data()),
                static_cast<std::streamsize>(samples.size() * sizeof(float)));
      entry["audio"] = audio_rel;
    }
    meta["tracks"].push_back(std::move(entry));
  }
  std::ofstream out(dir / "corpus.json");
  if (!out) fail(ErrorCategory::io, "cannot write " + (dir / "corpus.json").string());
  out << meta.dump(2) << '\n';
}

Corpus read_corpus(const std::filesystem::path& dir) {
  std::ifstream in(dir / "corpus.json");
  if (!in) {
    fail(ErrorCategory::io, "cannot open corpus " + (dir / "corpus.json").string());
  }
  json meta;
  try {
    in >> meta;
  } catch (const json::exception& e) {
    fail(ErrorCategory::parse, "corpus.json: " + std::string(e.what()));
  }
  Corpus corpus;
  corpus.sample_rate = meta.value("sample_rate", 22050);
  for (const auto& entry : meta.at("tracks")) {
    const std::string id = entry.at("id").get<std::string>();
    const double duration = entry.at("duration").get<double>();
    const bool has_bleed = entry.value("has_bleed", false);

    std::map<std::string, std::vector<Interval>> activations;
    const auto act_path = dir / entry.at("activations").get<std::string>();
    std::ifstream act(act_path);
    if (!act) fail(ErrorCategory::io, "cannot open " + act_path.string());
    std::string line;
    std::getline(act, line);  // header
    int line_no = 1;
    while (std::getline(act, line)) {
      ++line_no;
      if (line.empty()) continue;
      auto fields = split_csv_line(line);
      if (fields.size() != 3) {
        fail(ErrorCategory::parse, act_path.string() + " line " +
                                       std::to_string(line_no) +
                                       ": expected instrument,start,end");
      }
      const std::string ctx = act_path.string() + " line " + std::to_string(line_no);
      activations[fields[0]].push_back(
          {parse_double(fields[1], ctx), parse_double(fields[2], ctx)});
    }
    corpus.tracks.push_back(make_track(id, duration, std::move(activations), has_bleed));
    if (entry.contains("audio")) {
      corpus.audio_files[id] = dir / entry.at("audio").get<std::string>();
    }
  }
  return corpus;
}

std::vector<float> read_audio_f32(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) fail(ErrorCategory::io, "cannot open audio file " + path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes % sizeof(float) != 0) {
    fail(ErrorCategory::parse, path.string() + ": size is not a multiple of 4");
  }
  std::vector<float> samples(bytes / sizeof(float));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(samples.data()), static_cast<std::streamsize>(bytes));
  if (!in) fail(ErrorCategory::io, "short read on " + path.string());
  return samples;
}

void write_frame_manifest(const FrameSet& frames, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCategory::io, "cannot write manifest " + path.string());
  out << "track_id,frame_index";
  for (const auto& name : frames.label_names) out << ',' << name;
  out << '\n';
  for (std::size_t r = 0; r < frames.rows(); ++r) {
    out << frames.track_ids[r] << ',' << frames.frame_indices[r];
    const std::uint8_t* row = frames.row(r);
    for (std::size_t c = 0; c < frames.dim(); ++c) {
      out << ',' << static_cast<int>(row[c]);
    }
    out << '\n';
  }
}

FrameSet read_frame_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::io, "cannot open manifest " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    fail(ErrorCategory::parse, path.string() + ": empty manifest");
  }
  auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "track_id" || header[1] != "frame_index") {
    fail(ErrorCategory::parse, path.string() + ": bad manifest header");
  }
  FrameSet set;
  set.label_names.assign(header.begin() + 2, header.end());
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      fail(ErrorCategory::parse, path.string() + " line " + std::to_string(line_no) +
                                     ": expected " + std::to_string(header.size()) +
                                     " fields");
    }
    const std::string ctx = path.string() + " line " + std::to_string(line_no);
    set.track_ids.push_back(fields[0]);
    set.frame_indices.push_back(parse_int(fields[1], ctx));
    for (std::size_t c = 2; c < fields.size(); ++c) {
      int v = parse_int(fields[c], ctx);
      if (v != 0 && v != 1) {
        fail(ErrorCategory::parse, ctx + ": labels must be 0 or 1");
      }
      set.labels.push_back(static_cast<std::uint8_t>(v));
    }
  }
  return set;
}

}  // namespace instrec
