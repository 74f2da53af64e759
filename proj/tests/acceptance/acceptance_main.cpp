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

// End-to-end verification suite. Runs every numbered criterion (or a single
// one via --only N) and prints one PASS/FAIL line each.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "instrec/common.hpp"
#include "instrec/dataset.hpp"
#include "instrec/evaluation.hpp"
#include "instrec/features.hpp"
#include "instrec/losses.hpp"
#include "instrec/network.hpp"
#include "instrec/taxonomy.hpp"
#include "instrec/training.hpp"

using namespace instrec;

namespace {

struct Outcome {
  bool pass = true;
  bool skipped = false;
  std::string detail;
};

struct Check {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

#define EXPECT(cond, message)                         \
  do {                                                \
    if (!(cond)) return {false, false, (message)};    \
  } while (0)

__attribute__((format(printf, 1, 2)))
std::string fmt(const char* format, ...) {
  va_list args;
  va_start(args, format);
  char buf[512];
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

std::filesystem::path scratch_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("instrec_accept_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Taxonomy over n instruments spread across 3 groups.
Taxonomy grouped_taxonomy(const std::vector<std::string>& instruments,
                          const std::vector<int>& group_of) {
  std::ostringstream doc;
  doc << "NODE 1 brightgroup\nNODE 11 bright\n"
         "NODE 2 midgroup\nNODE 21 mid\n"
         "NODE 3 lowgroup\nNODE 31 low\n";
  const char* codes[] = {"11", "21", "31"};
  for (std::size_t i = 0; i < instruments.size(); ++i) {
    doc << "ASSIGN " << instruments[i] << ' ' << codes[group_of[i]] << '\n';
  }
  std::istringstream in(doc.str());
  return load_taxonomy(in);
}

struct Pipeline {
  LabelSpace space;
  FrameSet train_frames, test_frames;
  TrainData train_data, test_data;
  DatasetSplit split;
};

// synth -> frame labels -> split -> MFCC features, all in memory.
Pipeline run_pipeline(const SynthSpec& spec, const Taxonomy& taxonomy,
                      std::uint64_t seed, double test_fraction) {
  Pipeline p;
  p.space = build_label_space(taxonomy, 2);
  SynthCorpus corpus = generate_synthetic_corpus(spec, seed);
  p.split = split_tracks(corpus.tracks, p.space, test_fraction, seed + 1, 0.5, 400);

  MfccExtractor extractor({.sample_rate = spec.sample_rate});
  auto collect = [&](const std::vector<std::string>& ids, FrameSet& frames,
                     TrainData& data) {
    std::vector<ActivationTrack> subset;
    std::vector<const std::vector<float>*> audio;
    for (std::size_t t = 0; t < corpus.tracks.size(); ++t) {
      if (std::find(ids.begin(), ids.end(), corpus.tracks[t].track_id) !=
          ids.end()) {
        subset.push_back(corpus.tracks[t]);
        audio.push_back(&corpus.audio[t]);
      }
    }
    frames = build_frame_set(subset, p.space);
    data.rows = frames.rows();
    data.dim = frames.dim();
    data.labels = frames.labels;
    data.feature_size = static_cast<std::size_t>(80) * 22;
    data.features.resize(data.rows * data.feature_size);
    std::size_t row = 0;
    for (std::size_t t = 0; t < subset.size(); ++t) {
      const int frames_n = static_cast<int>(std::floor(subset[t].duration));
      for (int k = 0; k < frames_n; ++k, ++row) {
        FeatureTensor tensor = extractor.extract(std::span<const float>(
            audio[t]->data() + static_cast<std::size_t>(k) * spec.sample_rate,
            spec.sample_rate));
        std::copy(tensor.data.begin(), tensor.data.end(),
                  data.features.begin() + row * data.feature_size);
      }
    }
    return row;
  };
  collect(p.split.train_tracks, p.train_frames, p.train_data);
  collect(p.split.test_tracks, p.test_frames, p.test_data);
  return p;
}

double micro_gap(const MetricsReport& report) {
  return report.micro_groups.f1 - report.micro_instruments.f1;
}

// ---------------------------------------------------------------------------

Outcome criterion_1_architecture() {
  const auto t0 = std::chrono::steady_clock::now();
  VggNetF net{NetworkSpec{.output_dim = 85}};
  const std::vector<std::size_t> expected_params = {
      640, 128, 36928, 128, 73856, 256, 147584, 256, 295168,
      512, 590080, 512, 393472, 512, 65792, 32896, 10965};
  std::vector<std::size_t> params;
  for (const auto& row : net.layer_summary()) {
    if (row.parameters > 0) params.push_back(row.parameters);
  }
  EXPECT(params == expected_params, "per-layer parameter counts diverge");
  EXPECT(net.parameter_count() == 1649685,
         fmt("total parameters %zu != 1649685", net.parameter_count()));

  struct Row { const char* kind; std::vector<int> shape; };
  const std::vector<Row> table = {
      {"Input", {1, 80, 22}},
      {"Conv2d", {64, 80, 22}},  {"BatchNormalization", {64, 80, 22}},
      {"Conv2d", {64, 80, 22}},  {"BatchNormalization", {64, 80, 22}},
      {"MaxPool2d", {64, 40, 11}},
      {"Conv2d", {128, 40, 11}}, {"BatchNormalization", {128, 40, 11}},
      {"Conv2d", {128, 40, 11}}, {"BatchNormalization", {128, 40, 11}},
      {"MaxPool2d", {128, 20, 5}},
      {"Conv2d", {256, 20, 5}},  {"BatchNormalization", {256, 20, 5}},
      {"Conv2d", {256, 20, 5}},  {"BatchNormalization", {256, 20, 5}},
      {"MaxPool2d", {256, 6, 1}},
      {"Conv2d", {256, 1, 1}},   {"BatchNormalization", {256, 1, 1}},
      {"Squeeze", {256}},
      {"Dropout", {256}}, {"Dense", {256}},
      {"Dropout", {256}}, {"Dense", {128}},
      {"Dropout", {128}}, {"Dense", {85}},
      {"Sigmoid", {85}},
  };
  const auto rows = net.layer_summary();
  EXPECT(rows.size() == table.size(), "layer count diverges from the table");
  for (std::size_t i = 0; i < table.size(); ++i) {
    EXPECT(rows[i].kind == table[i].kind,
           fmt("row %zu kind %s != %s", i, rows[i].kind.c_str(), table[i].kind));
    EXPECT(rows[i].out_shape == table[i].shape,
           fmt("row %zu output shape diverges", i));
  }
  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT(dt < 1.0, "architecture audit exceeded 1 s");
  return {true, false,
          fmt("17 layer counts exact, total 1649685, shape trace exact (%.2f s)", dt)};
}

Outcome criterion_2_loss_identities() {
  Rng rng(100);
  double worst_focal = 0, worst_level = 0, worst_balanced = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 4 + rng.index(8), dim = 3 + rng.index(8);
    std::vector<double> pred(n * dim);
    std::vector<std::uint8_t> targ(n * dim);
    for (auto& p : pred) p = 0.02 + 0.96 * rng.uniform();
    for (auto& t : targ) t = rng.uniform() < 0.4 ? 1 : 0;
    const double reference = bce<double>(pred, targ, dim);
    worst_focal = std::max(
        worst_focal, std::abs(focal<double>(pred, targ, 0.0, dim) - reference));
    const std::size_t icount = dim / 2;
    worst_level = std::max(
        worst_level,
        std::abs(level_weighted<double>(pred, targ, 0.5, icount, dim) -
                 0.5 * reference));
    std::vector<double> ones(dim, 1.0);
    worst_balanced = std::max(
        worst_balanced,
        std::abs(balanced_ce<double>(pred, targ, ones, dim) - reference));
  }
  EXPECT(worst_focal < 1e-9, fmt("focal(gamma=0) vs bce: %.2e", worst_focal));
  EXPECT(worst_level < 1e-9, fmt("level_weighted(0.5) vs bce/2: %.2e", worst_level));
  EXPECT(worst_balanced < 1e-9, fmt("balanced(1) vs bce: %.2e", worst_balanced));
  return {true, false,
          fmt("identities hold on 100 random batches (max dev %.1e, %.1e, %.1e)",
              worst_focal, worst_level, worst_balanced)};
}

Outcome criterion_3_gradients() {
  Rng rng(200);
  // Losses against central differences.
  double worst_loss = 0;
  {
    const std::size_t n = 5, dim = 6;
    std::vector<double> pred(n * dim);
    std::vector<std::uint8_t> targ(n * dim);
    for (auto& p : pred) p = 0.05 + 0.9 * rng.uniform();
    for (auto& t : targ) t = rng.uniform() < 0.4 ? 1 : 0;
    std::vector<double> weights(dim);
    for (auto& w : weights) w = 0.25 + rng.uniform();

    std::vector<double> grad(pred.size());
    auto check = [&](auto value_of) {
      value_of(std::span<double>(grad));
      for (std::size_t i = 0; i < pred.size(); ++i) {
        const double h = 1e-7, saved = pred[i];
        pred[i] = saved + h;
        const double up = value_of(std::span<double>());
        pred[i] = saved - h;
        const double down = value_of(std::span<double>());
        pred[i] = saved;
        const double fd = (up - down) / (2 * h);
        const double scale = std::max({std::abs(grad[i]), std::abs(fd), 1e-10});
        worst_loss = std::max(worst_loss, std::abs(grad[i] - fd) / scale);
      }
    };
    check([&](std::span<double> g) {
      return balanced_ce<double>(pred, targ, weights, dim, g);
    });
    check([&](std::span<double> g) {
      return focal<double>(pred, targ, 2.0, dim, g);
    });
    check([&](std::span<double> g) {
      return level_weighted<double>(pred, targ, 0.3, 4, dim, g);
    });
  }
  EXPECT(worst_loss < 1e-4, fmt("loss gradient rel err %.2e", worst_loss));

  // Through a down-scaled network in double precision.
  NetworkSpec spec;
  spec.conv_widths = {4, 6, 8};
  spec.head_widths = {16, 8};
  spec.output_dim = 2;
  spec.dropout_rate = 0.0;
  VggNetD net{spec};
  net.init(rng);
  const int n = 3;
  std::vector<double> x(static_cast<std::size_t>(n) * 80 * 22);
  for (auto& v : x) v = rng.normal();
  std::vector<std::uint8_t> targ(n * 2);
  for (auto& t : targ) t = rng.uniform() < 0.5 ? 1 : 0;
  const auto loss_of = [&]() {
    const auto& pred = net.forward(x, n, true);
    return focal<double>(pred, targ, 2.0, 2);
  };
  net.zero_grad();
  const auto& pred = net.forward(x, n, true);
  std::vector<double> grad(pred.size());
  focal<double>(pred, targ, 2.0, 2, std::span<double>(grad));
  net.backward(grad);

  auto params = net.parameters();
  double worst_net = 0;
  Rng pick(201);
  for (int probe = 0; probe < 20; ++probe) {
    auto& p = params[pick.index(params.size())];
    const std::size_t k = pick.index(p.value->size());
    const double analytic = (*p.grad)[k];
    const double h = 1e-5, saved = (*p.value)[k];
    (*p.value)[k] = saved + h;
    const double up = loss_of();
    (*p.value)[k] = saved - h;
    const double down = loss_of();
    (*p.value)[k] = saved;
    const double fd = (up - down) / (2 * h);
    const double scale = std::max({std::abs(analytic), std::abs(fd), 1e-8});
    worst_net = std::max(worst_net, std::abs(analytic - fd) / scale);
  }
  EXPECT(worst_net < 1e-3, fmt("network gradient rel err %.2e", worst_net));
  return {true, false, fmt("loss rel err %.1e (<1e-4), network probe rel err %.1e (<1e-3)",
                           worst_loss, worst_net)};
}

Outcome criterion_4_f1_spot_checks() {
  EXPECT(std::abs(f1_score(0.76, 0.72) - 0.7395) <= 1e-4,
         fmt("F1(0.76, 0.72) = %.6f", f1_score(0.76, 0.72)));
  for (double p : {0.0, 0.25, 1.0}) {
    EXPECT(std::abs(f1_score(p, p) - p) < 1e-12, fmt("F1(%g, %g) != %g", p, p, p));
  }
  return {true, false, "F1(0.76,0.72)=0.7395 within 1e-4; F1(p,p)=p for 0, 0.25, 1"};
}

Outcome criterion_5_cooccurrence() {
  // Hand case: off-diagonal column {1, 3} -> {0, 1}.
  std::vector<std::string> names{"a", "b", "c"};
  Taxonomy tax = grouped_taxonomy(names, {0, 1, 2});
  LabelSpace space = build_label_space(tax, 2);
  std::vector<std::uint8_t> targ;
  auto push_frame = [&](std::initializer_list<const char*> active) {
    std::vector<std::string> list;
    for (const char* name : active) list.emplace_back(name);
    auto row = expand_labels(space, list);
    targ.insert(targ.end(), row.begin(), row.end());
  };
  push_frame({"a", "b"});
  push_frame({"a", "c"});
  push_frame({"a", "c"});
  push_frame({"a", "c"});
  CooccurrenceMatrix m = cooccurrence(targ, 4, space);
  const auto a = space.instrument_index("a"), b = space.instrument_index("b"),
             c = space.instrument_index("c");
  EXPECT(m.raw_at(b, a) == 1 && m.raw_at(c, a) == 3, "raw column mismatch");
  EXPECT(m.norm_at(b, a) == 0.0 && m.norm_at(c, a) == 1.0,
         "column {1,3} did not normalize to {0,1}");

  // Constant column -> 0; zero diagonal; range bound.
  std::vector<std::uint8_t> all;
  targ.swap(all);
  push_frame({"a", "b", "c"});
  push_frame({"a", "b", "c"});
  CooccurrenceMatrix constant = cooccurrence(targ, 2, space);
  for (std::size_t i = 0; i < constant.dim; ++i) {
    for (std::size_t j = 0; j < constant.dim; ++j) {
      EXPECT(constant.norm_at(i, j) == 0.0, "constant column must normalize to 0");
    }
  }

  // Brute-force fp/fn oracles on random instances (10 labels, 50 frames).
  std::vector<std::string> many;
  std::vector<int> groups;
  for (int i = 0; i < 10; ++i) {
    many.push_back("inst" + std::to_string(i));
    groups.push_back(i % 3);
  }
  LabelSpace big = build_label_space(grouped_taxonomy(many, groups), 2);
  Rng rng(300);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t rows = 50, dim = big.size(), icount = big.instrument_count();
    std::vector<std::uint8_t> pred(rows * dim), tg(rows * dim);
    for (auto& v : pred) v = rng.uniform() < 0.3 ? 1 : 0;
    for (auto& v : tg) v = rng.uniform() < 0.3 ? 1 : 0;
    CooccurrenceMatrix fp = fp_cooccurrence(pred, tg, rows, big);
    CooccurrenceMatrix fn = fn_cooccurrence(pred, tg, rows, big);
    CooccurrenceMatrix co = cooccurrence(tg, rows, big);
    for (std::size_t i = 0; i < icount; ++i) {
      EXPECT(co.norm_at(i, i) == 0.0, "diagonal must be zero");
      for (std::size_t j = 0; j < icount; ++j) {
        std::int64_t fp_expect = 0, fn_expect = 0, co_expect = 0;
        for (std::size_t r = 0; r < rows; ++r) {
          const auto* p = pred.data() + r * dim;
          const auto* t = tg.data() + r * dim;
          if (p[i] && !t[i] && t[j]) ++fp_expect;
          if (!p[i] && t[i] && p[j]) ++fn_expect;
          if (t[i] && t[j]) ++co_expect;
        }
        EXPECT(fp.raw_at(i, j) == fp_expect, "fp oracle mismatch");
        EXPECT(fn.raw_at(i, j) == fn_expect, "fn oracle mismatch");
        EXPECT(co.raw_at(i, j) == co_expect, "cooc oracle mismatch");
        EXPECT(co.norm_at(i, j) >= 0.0 && co.norm_at(i, j) <= 1.0,
               "normalized value out of [0,1]");
      }
    }
  }
  return {true, false,
          "hand case, degenerate column, and 30 random instances match the "
          "brute-force oracles exactly"};
}

Outcome criterion_6_frame_oracle() {
  std::vector<std::string> names{"a", "b", "c", "d"};
  LabelSpace space = build_label_space(grouped_taxonomy(names, {0, 1, 2, 0}), 2);
  Rng rng(400);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double duration = 2.0 + rng.uniform() * 5.0;
    std::map<std::string, std::vector<Interval>> acts;
    for (const auto& name : names) {
      if (rng.uniform() < 0.25) continue;
      std::vector<Interval> ivs;
      const int n = 1 + static_cast<int>(rng.index(4));
      for (int i = 0; i < n; ++i) {
        const double start =
            std::floor(rng.uniform() * (duration - 0.002) * 1000.0) / 1000.0;
        const double len =
            std::max(0.001, std::floor(rng.uniform() * 1800.0) / 1000.0);
        ivs.push_back({start, std::min(duration, start + len)});
      }
      acts[name] = std::move(ivs);
    }
    ActivationTrack track = make_track("t", duration, acts);
    auto frames = frame_labels(track, space);
    for (const auto& frame : frames) {
      for (const auto& name : names) {
        bool expect = false;
        if (auto it = track.activations.find(name);
            it != track.activations.end()) {
          for (int ms = 0; ms < 1000 && !expect; ++ms) {
            const double t = frame.frame_index + (ms + 0.5) / 1000.0;
            for (const auto& iv : it->second) {
              if (t >= iv.start && t < iv.end) {
                expect = true;
                break;
              }
            }
          }
        }
        const bool got = frame.labels[space.instrument_index(name)] != 0;
        EXPECT(got == expect,
               fmt("trial %d: frame %d, '%s': label %d vs oracle %d", trial,
                   frame.frame_index, name.c_str(), got, expect));
        ++checked;
      }
    }
  }
  return {true, false,
          fmt("1000 randomized interval sets, %d (frame, instrument) pairs "
              "agree exactly with the 1 ms oracle", checked)};
}

SynthSpec separable_spec(int tracks, double duration) {
  SynthSpec spec;
  spec.track_count = tracks;
  spec.track_duration = duration;
  spec.sample_rate = 22050;
  spec.noise_level = 0.01;
  spec.polyphony_weights = {0.6, 0.4};
  spec.instruments = {
      {"bell", {2400, 4800}, 1.0},      {"chime", {3200, 6400}, 1.0},
      {"flute", {900, 1800}, 1.0},      {"reed", {1200, 2400}, 1.0},
      {"organ", {600, 1500}, 1.0},      {"bass", {120, 240, 360}, 1.0},
      {"drone", {80, 160}, 1.0},        {"horn", {400, 800}, 1.0},
  };
  return spec;
}

std::vector<int> separable_groups() { return {0, 0, 1, 1, 1, 2, 2, 2}; }

std::vector<std::string> spec_names(const SynthSpec& spec) {
  std::vector<std::string> names;
  for (const auto& inst : spec.instruments) names.push_back(inst.name);
  return names;
}

Outcome criterion_7_split_quality() {
  SynthSpec spec = separable_spec(40, 50.0);
  Taxonomy tax = grouped_taxonomy(spec_names(spec), separable_groups());
  LabelSpace space = build_label_space(tax, 2);
  SynthCorpus corpus = generate_synthetic_corpus(spec, 7000);

  DatasetSplit a = split_tracks(corpus.tracks, space, 0.2, 77, 0.2, 400);
  DatasetSplit b = split_tracks(corpus.tracks, space, 0.2, 77, 0.2, 400);
  EXPECT(a.train_tracks == b.train_tracks && a.test_tracks == b.test_tracks,
         "split is not deterministic per seed");
  EXPECT(std::abs(a.test_fraction - 0.20) <= 0.05,
         fmt("test fraction %.3f outside 0.20 +/- 0.05", a.test_fraction));
  EXPECT(a.within_bound && a.divergence <= 0.2,
         fmt("divergence %.4f above the configured bound", a.divergence));

  // Corpus of identical tracks attains divergence 0.
  std::vector<ActivationTrack> same;
  for (int t = 0; t < 10; ++t) {
    same.push_back(make_track("s" + std::to_string(t), 10.0,
                              {{"bell", {{0.0, 10.0}}},
                               {"bass", {{0.0, 10.0}}}}));
  }
  DatasetSplit zero = split_tracks(same, space, 0.2, 5, 0.01, 100);
  EXPECT(zero.divergence == 0.0, fmt("identical corpus divergence %.6f != 0",
                                     zero.divergence));
  return {true, false,
          fmt("fraction %.3f, divergence %.4f <= 0.2, deterministic; "
              "identical corpus reaches 0", a.test_fraction, a.divergence)};
}

Outcome criterion_8_end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  SynthSpec spec = separable_spec(40, 50.0);  // 2000 frames
  Taxonomy tax = grouped_taxonomy(spec_names(spec), separable_groups());
  Pipeline p = run_pipeline(spec, tax, 8000, 0.2);

  TrainingConfig config;  // 30 epochs, batch 32, lr 0.001
  config.seed = 8001;
  config.loss.kind = LossKind::focal;
  TrainedModel model = train_flat(p.train_data, p.space, config);

  auto activations = infer(*model.net, p.test_data.features, p.test_data.rows);
  auto predictions = decide(activations, 0.5);
  MetricsReport report =
      score(predictions, p.test_data.labels, p.test_data.rows, p.space);
  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  EXPECT(report.micro_groups.f1 >= 0.90,
         fmt("group micro F1 %.4f < 0.90", report.micro_groups.f1));
  EXPECT(report.micro_instruments.f1 >= 0.90,
         fmt("instrument micro F1 %.4f < 0.90", report.micro_instruments.f1));
  return {true, false,
          fmt("test micro F1: groups %.4f, instruments %.4f on %zu test frames "
              "(wall %.0f s; the 10 min budget assumes a multi-core desktop CPU)",
              report.micro_groups.f1, report.micro_instruments.f1,
              p.test_data.rows, dt)};
}

Outcome criterion_9_hierarchy_advantage() {
  const auto t0 = std::chrono::steady_clock::now();
  // Three groups; the two instruments inside each group share one signature,
  // so instrument identity is unlearnable while the group stays separable.
  SynthSpec spec;
  spec.track_count = 25;
  spec.track_duration = 32.0;  // 800 frames
  spec.sample_rate = 22050;
  spec.noise_level = 0.01;
  spec.polyphony_weights = {1.0};
  spec.instruments = {
      {"alto", {2400, 4800}, 1.0},  {"bravo", {2400, 4800}, 1.0},
      {"china", {900, 1800}, 1.0},  {"delta", {900, 1800}, 1.0},
      {"echo", {120, 240}, 1.0},    {"fox", {120, 240}, 1.0},
  };
  Taxonomy tax = grouped_taxonomy(spec_names(spec), {0, 0, 1, 1, 2, 2});
  Pipeline p = run_pipeline(spec, tax, 9000, 0.2);

  TrainingConfig config;
  config.epochs = 6;
  config.seed = 9001;
  config.loss.kind = LossKind::focal;

  TrainedModel flat = train_flat(p.train_data, p.space, config);
  auto flat_report = score(decide(infer(*flat.net, p.test_data.features,
                                        p.test_data.rows), 0.5),
                           p.test_data.labels, p.test_data.rows, p.space);

  SpecializedTrainResult ensemble =
      train_specialized(p.train_data, p.space, config);
  auto spec_report = score(
      decide(infer(ensemble.ensemble, p.test_data.features, p.test_data.rows,
                   p.space), 0.5),
      p.test_data.labels, p.test_data.rows, p.space);

  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT(micro_gap(flat_report) >= 0.15,
         fmt("flat gap %.4f < 0.15 (groups %.4f, instruments %.4f)",
             micro_gap(flat_report), flat_report.micro_groups.f1,
             flat_report.micro_instruments.f1));
  EXPECT(micro_gap(spec_report) >= 0.15,
         fmt("specialized gap %.4f < 0.15 (groups %.4f, instruments %.4f)",
             micro_gap(spec_report), spec_report.micro_groups.f1,
             spec_report.micro_instruments.f1));
  return {true, false,
          fmt("flat: groups %.4f vs instruments %.4f; specialized: %.4f vs %.4f "
              "(wall %.0f s)",
              flat_report.micro_groups.f1, flat_report.micro_instruments.f1,
              spec_report.micro_groups.f1, spec_report.micro_instruments.f1, dt)};
}

Outcome criterion_10_gating_consistency() {
  std::vector<std::string> names{"a", "b", "c", "d", "e", "f"};
  LabelSpace space =
      build_label_space(grouped_taxonomy(names, {0, 0, 1, 1, 2, 2}), 2);

  // Untrained ensemble with random weights: activations hover around 0.5,
  // the harshest regime for the gate.
  NetworkSpec base;
  base.conv_widths = {4, 6, 8};
  base.head_widths = {16, 8};
  base.dropout_rate = 0.0;
  Rng rng(500);
  SpecializedEnsemble ensemble;
  ensemble.label_fingerprint = space.fingerprint();
  {
    NetworkSpec gspec = base;
    gspec.output_dim = static_cast<int>(space.group_count());
    ensemble.group_model = std::make_unique<VggNetF>(gspec);
    ensemble.group_model->init(rng);
  }
  const char* codes[] = {"11", "21", "31"};
  for (int g = 0; g < 3; ++g) {
    SpecializedEnsemble::Entry entry;
    entry.group_code = codes[g];
    entry.instrument_columns = {static_cast<std::size_t>(2 * g),
                                static_cast<std::size_t>(2 * g + 1)};
    NetworkSpec ispec = base;
    ispec.output_dim = 2;
    entry.model = std::make_unique<VggNetF>(ispec);
    entry.model->init(rng);
    ensemble.entries.push_back(std::move(entry));
  }

  std::size_t audited = 0;
  for (int batch = 0; batch < 1000; ++batch) {
    const std::size_t rows = 1 + rng.index(4);
    std::vector<float> features(rows * 80 * 22);
    for (auto& v : features) v = static_cast<float>(rng.normal());
    auto act = infer(ensemble, features, rows, space, 0.5);
    auto pred = decide(act, 0.5);
    auto violations = consistency_audit(pred, rows, space);
    EXPECT(violations.empty(),
           fmt("batch %d: %zu violations under gating", batch, violations.size()));
    audited += rows;
  }

  // Adversarial flat activations: instrument on while its own group is off.
  std::vector<float> crafted(space.size() * 3, 0.05f);
  crafted[space.instrument_index("a")] = 0.9f;                 // "11" off -> violation
  crafted[space.size() + space.instrument_index("c")] = 0.9f;  // "21" off -> violation
  crafted[space.size() + space.group_index("31")] = 0.9f;      // unrelated group on
  crafted[2 * space.size() + space.instrument_index("e")] = 0.9f;
  crafted[2 * space.size() + space.group_index("31")] = 0.9f;  // consistent pair
  auto flagged = consistency_audit(decide(crafted, 0.5), 3, space);
  EXPECT(flagged.size() == 2,
         fmt("expected 2 flagged violations, got %zu", flagged.size()));
  EXPECT(flagged[0].frame == 0 && flagged[0].instrument == "a" &&
             flagged[1].frame == 1 && flagged[1].instrument == "c",
         "violations identify the wrong (frame, instrument) pairs");
  return {true, false,
          fmt("0 violations over 1000 gated random batches (%zu frames); "
              "adversarial ungated activations flagged exactly", audited)};
}

Outcome criterion_11_reproducibility() {
  const auto dir = scratch_dir("repro");
  SynthSpec spec = separable_spec(10, 24.0);  // 240 frames
  Taxonomy tax = grouped_taxonomy(spec_names(spec), separable_groups());

  auto run_once = [&](const std::filesystem::path& out) {
    Pipeline p = run_pipeline(spec, tax, 11000, 0.2);
    TrainingConfig config;
    config.epochs = 3;
    config.seed = 11001;
    config.loss.kind = LossKind::focal;
    TrainedModel model = train_flat(p.train_data, p.space, config);
    auto activations = infer(*model.net, p.test_data.features, p.test_data.rows);
    auto predictions = decide(activations, 0.5);
    MetricsReport report =
        score(predictions, p.test_data.labels, p.test_data.rows, p.space);
    emit_reports(report, cooccurrence(p.test_data.labels, p.test_data.rows, p.space),
                 fp_cooccurrence(predictions, p.test_data.labels, p.test_data.rows,
                                 p.space),
                 fn_cooccurrence(predictions, p.test_data.labels, p.test_data.rows,
                                 p.space),
                 out);
    CheckpointMeta meta;
    meta.epoch = config.epochs;
    meta.seed = config.seed;
    meta.loss_name = "focal";
    meta.label_fingerprint = p.space.fingerprint();
    save_checkpoint(out / "model.ckpt", *model.net, meta);
    return p;
  };
  Pipeline p1 = run_once(dir / "run1");
  run_once(dir / "run2");

  for (const char* name : {"metrics_per_label.csv", "metrics_summary.csv",
                           "cooc.csv", "cooc_fp.csv", "cooc_fn.csv"}) {
    EXPECT(read_bytes(dir / "run1" / name) == read_bytes(dir / "run2" / name),
           fmt("%s differs between identical runs", name));
  }
  auto ckpt1 = load_checkpoint<float>(dir / "run1" / "model.ckpt");
  auto ckpt2 = load_checkpoint<float>(dir / "run2" / "model.ckpt");
  const std::size_t probe_rows = 16;
  const auto& probe = p1.test_data.features;
  auto out1 = infer(*ckpt1.net, std::span<const float>(probe.data(),
                                                       probe_rows * 80 * 22),
                    probe_rows);
  auto out2 = infer(*ckpt2.net, std::span<const float>(probe.data(),
                                                       probe_rows * 80 * 22),
                    probe_rows);
  float worst = 0;
  for (std::size_t i = 0; i < out1.size(); ++i) {
    worst = std::max(worst, std::abs(out1[i] - out2[i]));
  }
  EXPECT(worst <= 1e-6f, fmt("checkpoint probe deviation %.2e > 1e-6", worst));
  std::filesystem::remove_all(dir);
  return {true, false,
          fmt("5 metrics tables byte-equal; checkpoint probe deviation %.1e",
              worst)};
}

Outcome criterion_12_medleydb() {
  const char* root = std::getenv("INSTREC_MEDLEYDB_ROOT");
  if (!root || !*root) {
    return {true, true,
            "set INSTREC_MEDLEYDB_ROOT to a MedleyDB copy to enable this check"};
  }
  namespace fs = std::filesystem;
  const fs::path base = root;
  fs::path metadata, annotations;
  for (const char* candidate : {"Metadata", "metadata", "medleydb/data/Metadata"}) {
    if (fs::is_directory(base / candidate)) {
      metadata = base / candidate;
      break;
    }
  }
  for (const char* candidate :
       {"Annotations/Instrument_Activations/ACTIVATION_CONF",
        "annotations", "ACTIVATION_CONF"}) {
    if (fs::is_directory(base / candidate)) {
      annotations = base / candidate;
      break;
    }
  }
  if (metadata.empty() || annotations.empty()) {
    return {false, false,
            "INSTREC_MEDLEYDB_ROOT is set but metadata/annotation dirs were "
            "not found under it"};
  }
  IngestResult result = ingest_medleydb(metadata, annotations, 0.5);
  EXPECT(result.total_tracks == 122,
         fmt("expected 122 metadata entries, found %d", result.total_tracks));
  EXPECT(static_cast<int>(result.tracks.size()) == 94,
         fmt("expected 94 bleed-free tracks, found %zu", result.tracks.size()));
  const double fraction = short_activation_fraction(result.tracks, 0.1);
  EXPECT(fraction < 0.0026,
         fmt("short-activation fraction %.5f >= 0.0026", fraction));
  return {true, false,
          fmt("94 of 122 tracks retained; short-activation fraction %.5f < 0.0026",
              fraction)};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[i + 1]);
    }
  }

  const std::vector<Check> checks = {
      {1, "architecture audit (per-layer counts, total, shape trace)",
       criterion_1_architecture},
      {2, "loss identities (focal gamma=0, level alpha=0.5, unit weights)",
       criterion_2_loss_identities},
      {3, "gradient checks (losses and down-scaled network)",
       criterion_3_gradients},
      {4, "F1 spot checks", criterion_4_f1_spot_checks},
      {5, "co-occurrence normalization and error-matrix oracles",
       criterion_5_cooccurrence},
      {6, "frame labeling against the 1 ms oracle", criterion_6_frame_oracle},
      {7, "split quality on a 40-track synthetic corpus",
       criterion_7_split_quality},
      {8, "synthetic end-to-end training (flat, focal, 30 epochs)",
       criterion_8_end_to_end},
      {9, "hierarchy advantage with confusable instrument pairs",
       criterion_9_hierarchy_advantage},
      {10, "gated inference consistency and adversarial audit",
       criterion_10_gating_consistency},
      {11, "pipeline reproducibility (byte-equal tables, 1e-6 checkpoints)",
       criterion_11_reproducibility},
      {12, "MedleyDB ingest statistics (optional, needs a local copy)",
       criterion_12_medleydb},
  };

  int failures = 0, ran = 0;
  for (const auto& check : checks) {
    if (only != 0 && check.id != only) continue;
    ++ran;
    Outcome outcome;
    try {
      outcome = check.run();
    } catch (const std::exception& e) {
      outcome = {false, false, std::string("exception: ") + e.what()};
    }
    const char* tag = outcome.skipped ? "SKIP" : (outcome.pass ? "PASS" : "FAIL");
    std::printf("[%s] criterion %d: %s — %s\n", tag, check.id, check.title,
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion matched --only %d\n", only);
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
