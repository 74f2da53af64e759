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

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "instrec/common.hpp"
#include "instrec/dataset.hpp"
#include "instrec/evaluation.hpp"
#include "instrec/features.hpp"
#include "instrec/losses.hpp"
#include "instrec/network.hpp"
#include "instrec/taxonomy.hpp"
#include "instrec/training.hpp"

namespace instrec::cli {

using nlohmann::json;

// Every flag has a config-file key of the same name; precedence is
// built-in defaults < config file < command-line flags.
struct RunConfig {
  // Paths.
  std::string config;
  std::string corpus;
  std::string taxonomy;
  std::string store;
  std::string out;
  std::string manifest;
  std::string test_manifest;
  std::string checkpoint;
  std::string spec;        // synthetic corpus description
  std::string metadata;    // MedleyDB metadata dir
  std::string annotations; // MedleyDB activation dir

  // Shared numerics.
  int depth = 2;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  double max_divergence = 0.2;
  int iterations = 2000;
  double confidence_threshold = 0.5;

  // Training.
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 0.001;
  std::string loss = "focal";
  double gamma = 2.0;
  double alpha = 0.1;
  std::string strategy = "flat";
  double gating_threshold = -1.0;  // < 0 means ungated
  double decision_threshold = 0.5;
  std::vector<double> alphas{0.1, 0.3, 0.5, 0.7, 0.9};

  json to_json() const;
  void apply_file(const std::filesystem::path& path);

  TrainingConfig training() const {
    TrainingConfig t;
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.learning_rate = learning_rate;
    t.seed = seed;
    t.loss.kind = loss_kind_from_string(loss);
    t.loss.gamma = gamma;
    t.loss.alpha = alpha;
    return t;
  }
  std::optional<double> gating() const {
    if (gating_threshold < 0) return std::nullopt;
    return gating_threshold;
  }
};

json RunConfig::to_json() const {
  json j;
  j["corpus"] = corpus;
  j["taxonomy"] = taxonomy;
  j["store"] = store;
  j["out"] = out;
  j["manifest"] = manifest;
  j["test_manifest"] = test_manifest;
  j["checkpoint"] = checkpoint;
  j["spec"] = spec;
  j["metadata"] = metadata;
  j["annotations"] = annotations;
  j["depth"] = depth;
  j["seed"] = seed;
  j["test_fraction"] = test_fraction;
  j["max_divergence"] = max_divergence;
  j["iterations"] = iterations;
  j["confidence_threshold"] = confidence_threshold;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  j["loss"] = loss;
  j["gamma"] = gamma;
  j["alpha"] = alpha;
  j["strategy"] = strategy;
  j["gating_threshold"] = gating_threshold;
  j["decision_threshold"] = decision_threshold;
  j["alphas"] = alphas;
  return j;
}

void RunConfig::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::io, "cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCategory::parse, path.string() + ": " + e.what());
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) {
      try {
        j.at(key).get_to(field);
      } catch (const json::exception& e) {
        fail(ErrorCategory::config,
             std::string("config key '") + key + "': " + e.what());
      }
    }
  };
  get("corpus", corpus);
  get("taxonomy", taxonomy);
  get("store", store);
  get("out", out);
  get("manifest", manifest);
  get("test_manifest", test_manifest);
  get("checkpoint", checkpoint);
  get("spec", spec);
  get("metadata", metadata);
  get("annotations", annotations);
  get("depth", depth);
  get("seed", seed);
  get("test_fraction", test_fraction);
  get("max_divergence", max_divergence);
  get("iterations", iterations);
  get("confidence_threshold", confidence_threshold);
  get("epochs", epochs);
  get("batch_size", batch_size);
  get("learning_rate", learning_rate);
  get("loss", loss);
  get("gamma", gamma);
  get("alpha", alpha);
  get("strategy", strategy);
  get("gating_threshold", gating_threshold);
  get("decision_threshold", decision_threshold);
  get("alphas", alphas);
}

namespace {

std::string require(const std::string& value, const char* flag) {
  if (value.empty()) {
    fail(ErrorCategory::usage, std::string("missing required option ") + flag);
  }
  return value;
}

std::string corpus_or_env(const RunConfig& cfg) {
  if (!cfg.corpus.empty()) return cfg.corpus;
  if (const char* env = std::getenv("INSTREC_CORPUS_ROOT"); env && *env) {
    return env;
  }
  fail(ErrorCategory::usage,
       "missing --corpus (or INSTREC_CORPUS_ROOT environment variable)");
}

// Written at the end of every successful run: the effective config, the
// seed, and a digest of each produced file.
void write_run_manifest(const RunConfig& cfg, const std::string& command,
                        const json& extra,
                        std::chrono::steady_clock::time_point started) {
  const std::filesystem::path out_dir = cfg.out;
  json manifest;
  manifest["command"] = command;
  manifest["config"] = cfg.to_json();
  manifest["seed"] = cfg.seed;
  manifest["results"] = extra;
  json artifacts = json::object();
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(out_dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename() == "run_manifest.json") continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();
    char digest[32];
    std::snprintf(digest, sizeof(digest), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    artifacts[std::filesystem::relative(file, out_dir).generic_string()] = digest;
  }
  manifest["artifacts"] = artifacts;
  manifest["timing"] = {
      {"wall_seconds",
       std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
           .count()}};
  std::ofstream out(out_dir / "run_manifest.json");
  if (!out) fail(ErrorCategory::io, "cannot write run_manifest.json");
  out << manifest.dump(2) << '\n';
}

LabelSpace space_from(const RunConfig& cfg) {
  Taxonomy tax = load_taxonomy_file(require(cfg.taxonomy, "--taxonomy"));
  return build_label_space(tax, cfg.depth);
}

void check_manifest_space(const FrameSet& frames, const LabelSpace& space,
                          const std::string& which) {
  if (frames.label_names != space.label_names()) {
    fail(ErrorCategory::state,
         which + " was built against a different label space; regenerate it "
                 "with the current taxonomy and depth");
  }
}

void write_train_log(const std::filesystem::path& path,
                     const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) fail(ErrorCategory::io, "cannot write " + path.string());
  out << "epoch,mean_loss,seconds\n";
  for (const auto& entry : log) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%d,%.8f,%.3f", entry.epoch, entry.mean_loss,
                  entry.seconds);
    out << buf << '\n';
  }
}

// ---------------------------------------------------------------------------

int cmd_synth(const RunConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  SynthSpec spec = load_synth_spec(require(cfg.spec, "--spec"));
  Taxonomy tax = load_taxonomy_file(require(cfg.taxonomy, "--taxonomy"));
  validate_synth_spec(spec, tax);
  SynthCorpus corpus = generate_synthetic_corpus(spec, cfg.seed);
  RunConfig out_cfg = cfg;
  out_cfg.out = require(cfg.out, "--out");
  write_corpus(out_cfg.out, corpus.tracks, &corpus.audio, corpus.sample_rate);
  json extra;
  extra["tracks"] = corpus.tracks.size();
  extra["sample_rate"] = corpus.sample_rate;
  write_run_manifest(out_cfg, "synth", extra, started);
  std::cout << "synth: wrote " << corpus.tracks.size() << " tracks to "
            << out_cfg.out << "\n";
  return 0;
}

int cmd_ingest(const RunConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  IngestResult result =
      ingest_medleydb(require(cfg.metadata, "--metadata"),
                      require(cfg.annotations, "--annotations"),
                      cfg.confidence_threshold);
  RunConfig out_cfg = cfg;
  out_cfg.out = require(cfg.out, "--out");
  write_corpus(out_cfg.out, result.tracks);
  json extra;
  extra["total_tracks"] = result.total_tracks;
  extra["retained_tracks"] = result.tracks.size();
  extra["excluded_bleed"] = result.excluded_bleed;
  if (!result.tracks.empty()) {
    extra["short_activation_fraction_0.1s"] =
        short_activation_fraction(result.tracks, 0.1);
  }
  write_run_manifest(out_cfg, "ingest", extra, started);
  std::cout << "ingest: retained " << result.tracks.size() << " of "
            << result.total_tracks << " tracks (" << result.excluded_bleed
            << " with bleed)\n";
  return 0;
}

int cmd_split(const RunConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  Corpus corpus = read_corpus(corpus_or_env(cfg));
  LabelSpace space = space_from(cfg);
  DatasetSplit split =
      split_tracks(corpus.tracks, space, cfg.test_fraction, cfg.seed,
                   cfg.max_divergence, cfg.iterations);

  RunConfig out_cfg = cfg;
  out_cfg.out = require(cfg.out, "--out");
  std::filesystem::create_directories(out_cfg.out);
  const std::filesystem::path out_dir = out_cfg.out;

  auto subset = [&](const std::vector<std::string>& ids) {
    std::vector<ActivationTrack> tracks;
    for (const auto& track : corpus.tracks) {
      if (std::find(ids.begin(), ids.end(), track.track_id) != ids.end()) {
        tracks.push_back(track);
      }
    }
    return tracks;
  };
  FrameSet train_frames = build_frame_set(subset(split.train_tracks), space);
  FrameSet test_frames = build_frame_set(subset(split.test_tracks), space);
  write_frame_manifest(train_frames, out_dir / "train_frames.csv");
  write_frame_manifest(test_frames, out_dir / "test_frames.csv");

  json split_json;
  split_json["train_tracks"] = split.train_tracks;
  split_json["test_tracks"] = split.test_tracks;
  split_json["divergence"] = split.divergence;
  split_json["test_fraction"] = split.test_fraction;
  split_json["test_only_instruments"] = split.test_only_instruments;
  split_json["within_bound"] = split.within_bound;
  {
    std::ofstream out(out_dir / "split.json");
    if (!out) fail(ErrorCategory::io, "cannot write split.json");
    out << split_json.dump(2) << '\n';
  }
  write_run_manifest(out_cfg, "split", split_json, started);
  std::cout << "split: " << split.train_tracks.size() << " train / "
            << split.test_tracks.size() << " test tracks, divergence "
            << split.divergence << (split.within_bound ? "" : " (above bound)")
            << "\n";
  return 0;
}

int cmd_features(const RunConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  Corpus corpus = read_corpus(corpus_or_env(cfg));
  FrameSet frames = read_frame_manifest(require(cfg.manifest, "--manifest"));
  if (!cfg.test_manifest.empty()) {
    FrameSet more = read_frame_manifest(cfg.test_manifest);
    if (more.label_names != frames.label_names) {
      fail(ErrorCategory::state, "manifests disagree on the label space");
    }
    frames.track_ids.insert(frames.track_ids.end(), more.track_ids.begin(),
                            more.track_ids.end());
    frames.frame_indices.insert(frames.frame_indices.end(),
                                more.frame_indices.begin(),
                                more.frame_indices.end());
    frames.labels.insert(frames.labels.end(), more.labels.begin(),
                         more.labels.end());
  }
  RunConfig out_cfg = cfg;
  out_cfg.out = require(cfg.out, "--out");
  BatchExtractReport report = batch_extract(corpus, frames, out_cfg.out);
  for (const auto& [track, reason] : report.failed_tracks) {
    std::cerr << "warning: track '" << track << "' skipped: " << reason << "\n";
  }
  if (report.frames_written == 0 && !report.failed_tracks.empty()) {
    fail(ErrorCategory::io, "no features were extracted");
  }
  json extra;
  extra["frames_written"] = report.frames_written;
  extra["failed_tracks"] = report.failed_tracks.size();
  write_run_manifest(out_cfg, "features", extra, started);
  std::cout << "features: wrote " << report.frames_written << " tensors to "
            << out_cfg.out << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  LabelSpace space = space_from(cfg);
  FrameSet frames = read_frame_manifest(require(cfg.manifest, "--manifest"));
  check_manifest_space(frames, space, "train manifest");
  FeatureStore store = FeatureStore::open(require(cfg.store, "--store"));
  TrainData data = assemble_train_data(frames, store);
  TrainingConfig training = cfg.training();

  RunConfig out_cfg = cfg;
  out_cfg.out = require(cfg.out, "--out");
  std::filesystem::create_directories(out_cfg.out);
  const std::filesystem::path out_dir = out_cfg.out;

  json extra;
  if (strategy_from_string(cfg.strategy) == Strategy::flat) {
    TrainedModel model = train_flat(data, space, training);
    CheckpointMeta meta;
    meta.epoch = training.epochs;
    meta.seed = training.seed;
    meta.loss_name = to_string(training.loss.kind);
    meta.label_fingerprint = space.fingerprint();
    meta.labels = space.label_names();
    save_checkpoint(out_dir / "model.ckpt", *model.net, meta);
    write_train_log(out_dir / "train_log.csv", model.log);
    extra["final_loss"] = model.log.back().mean_loss;
    extra["checkpoint"] = "model.ckpt";
  } else {
    SpecializedTrainResult result = train_specialized(data, space, training);
    save_ensemble(out_dir / "ensemble", result.ensemble, space, training);
    for (const auto& [name, log] : result.logs) {
      write_train_log(out_dir / ("train_log_" + name + ".csv"), log);
      extra["final_loss_" + name] = log.back().mean_loss;
    }
    extra["ensemble"] = "ensemble";
  }
  write_run_manifest(out_cfg, "train", extra, started);
  std::cout << "train: " << cfg.strategy << " strategy, " << training.epochs
            << " epochs, outputs in " << out_cfg.out << "\n";
  return 0;
}

struct LoadedModel {
  std::unique_ptr<VggNetF> flat;
  std::optional<SpecializedEnsemble> ensemble;
};

LoadedModel load_model(const RunConfig& cfg, const LabelSpace& space) {
  const std::string path = require(cfg.checkpoint, "--checkpoint");
  LoadedModel model;
  if (std::filesystem::is_directory(path)) {
    model.ensemble = load_ensemble(path, space);
  } else {
    if (!std::filesystem::exists(path)) {
      fail(ErrorCategory::missing_checkpoint, "no checkpoint at " + path);
    }
    auto loaded = load_checkpoint<float>(path, space.fingerprint());
    model.flat = std::move(loaded.net);
  }
  return model;
}

int cmd_evaluate(const RunConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  LabelSpace space = space_from(cfg);
  FrameSet frames = read_frame_manifest(require(cfg.manifest, "--manifest"));
  check_manifest_space(frames, space, "test manifest");
  if (frames.rows() == 0) {
    fail(ErrorCategory::config, "test manifest has no frames");
  }
  FeatureStore store = FeatureStore::open(require(cfg.store, "--store"));
  TrainData data = assemble_train_data(frames, store);
  LoadedModel model = load_model(cfg, space);

  std::vector<float> activations =
      model.ensemble
          ? infer(*model.ensemble, data.features, data.rows, space, cfg.gating())
          : infer(*model.flat, data.features, data.rows);
  std::vector<std::uint8_t> predictions =
      decide(activations, cfg.decision_threshold);

  MetricsReport report = score(predictions, data.labels, data.rows, space);
  CooccurrenceMatrix cooc = cooccurrence(data.labels, data.rows, space);
  CooccurrenceMatrix fp = fp_cooccurrence(predictions, data.labels, data.rows, space);
  CooccurrenceMatrix fn = fn_cooccurrence(predictions, data.labels, data.rows, space);
  auto violations = consistency_audit(predictions, data.rows, space);

  RunConfig out_cfg = cfg;
  out_cfg.out = require(cfg.out, "--out");
  emit_reports(report, cooc, fp, fn, out_cfg.out);
  {
    std::ofstream out(std::filesystem::path(out_cfg.out) / "consistency_audit.csv");
    if (!out) fail(ErrorCategory::io, "cannot write consistency_audit.csv");
    out << "frame,instrument,group\n";
    for (const auto& v : violations) {
      out << v.frame << ',' << v.instrument << ',' << v.group << '\n';
    }
  }
  json extra;
  extra["frames"] = data.rows;
  extra["micro_f1_instruments"] = report.micro_instruments.f1;
  extra["micro_f1_groups"] = report.micro_groups.f1;
  extra["micro_f1_all"] = report.micro_all.f1;
  extra["consistency_violations"] = violations.size();
  write_run_manifest(out_cfg, "evaluate", extra, started);
  std::cout << "evaluate: micro F1 instruments "
            << report.micro_instruments.f1 << ", groups "
            << report.micro_groups.f1 << ", violations " << violations.size()
            << "\n";
  return 0;
}

int cmd_cooc(const RunConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  LabelSpace space = space_from(cfg);
  FrameSet frames = read_frame_manifest(require(cfg.manifest, "--manifest"));
  check_manifest_space(frames, space, "manifest");
  if (frames.rows() == 0) {
    fail(ErrorCategory::config, "manifest has no frames");
  }
  CooccurrenceMatrix matrix = cooccurrence(frames.labels, frames.rows(), space);
  RunConfig out_cfg = cfg;
  out_cfg.out = require(cfg.out, "--out");
  std::filesystem::create_directories(out_cfg.out);
  {
    std::ofstream out(std::filesystem::path(out_cfg.out) / "cooc.csv");
    if (!out) fail(ErrorCategory::io, "cannot write cooc.csv");
    out << "label";
    for (const auto& name : matrix.labels) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < matrix.dim; ++i) {
      out << matrix.labels[i];
      for (std::size_t j = 0; j < matrix.dim; ++j) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", matrix.norm_at(i, j));
        out << ',' << buf;
      }
      out << '\n';
    }
  }
  json extra;
  extra["frames"] = frames.rows();
  extra["instruments"] = matrix.dim;
  write_run_manifest(out_cfg, "cooc", extra, started);
  std::cout << "cooc: " << matrix.dim << "x" << matrix.dim << " matrix from "
            << frames.rows() << " frames\n";
  return 0;
}

int cmd_alpha_sweep(const RunConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  LabelSpace space = space_from(cfg);
  FrameSet train_frames = read_frame_manifest(require(cfg.manifest, "--manifest"));
  FrameSet test_frames =
      read_frame_manifest(require(cfg.test_manifest, "--test-manifest"));
  check_manifest_space(train_frames, space, "train manifest");
  check_manifest_space(test_frames, space, "test manifest");
  FeatureStore store = FeatureStore::open(require(cfg.store, "--store"));
  TrainData train_data = assemble_train_data(train_frames, store);
  TrainData test_data = assemble_train_data(test_frames, store);

  AlphaSweepResult result =
      alpha_grid_search(cfg.alphas, [&](double alpha) -> std::array<double, 3> {
        TrainingConfig training = cfg.training();
        training.loss.kind = LossKind::level_weighted;
        training.loss.alpha = alpha;
        TrainedModel model = train_flat(train_data, space, training);
        auto activations = infer(*model.net, test_data.features, test_data.rows);
        auto predictions = decide(activations, cfg.decision_threshold);
        MetricsReport report =
            score(predictions, test_data.labels, test_data.rows, space);
        return {report.micro_all.f1, report.micro_groups.f1,
                report.micro_instruments.f1};
      });

  RunConfig out_cfg = cfg;
  out_cfg.out = require(cfg.out, "--out");
  std::filesystem::create_directories(out_cfg.out);
  {
    std::ofstream out(std::filesystem::path(out_cfg.out) / "alpha_sweep.csv");
    if (!out) fail(ErrorCategory::io, "cannot write alpha_sweep.csv");
    out << "alpha,f1_all_nodes,f1_groups,f1_instruments\n";
    for (const auto& row : result.rows) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%.4f,%.6f,%.6f,%.6f", row.alpha,
                    row.f1_all, row.f1_groups, row.f1_instruments);
      out << buf << '\n';
    }
  }
  json extra;
  extra["best_alpha"] = result.best_alpha;
  write_run_manifest(out_cfg, "alpha-sweep", extra, started);
  std::cout << "alpha-sweep: best alpha " << result.best_alpha << "\n";
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  RunConfig cfg;
  // First pass: honor --config before binding flags, so flags win.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string_view(argv[i]) == "--config") {
      cfg.apply_file(argv[i + 1]);
      break;
    }
  }

  CLI::App app{"Hierarchical multi-label instrument recognition toolkit"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", cfg.config,
                    "JSON config file (flags override it)");
    sub->add_option("--corpus", cfg.corpus,
                    "Corpus directory (default: $INSTREC_CORPUS_ROOT)");
    sub->add_option("--taxonomy", cfg.taxonomy, "Taxonomy document");
    sub->add_option("--store", cfg.store, "Feature store directory");
    sub->add_option("--out", cfg.out, "Output directory");
    sub->add_option("--manifest", cfg.manifest, "Frame manifest CSV");
    sub->add_option("--test-manifest", cfg.test_manifest, "Test frame manifest CSV");
    sub->add_option("--checkpoint", cfg.checkpoint,
                    "Checkpoint file or ensemble directory");
    sub->add_option("--depth", cfg.depth, "Taxonomy truncation depth");
    sub->add_option("--seed", cfg.seed, "Deterministic seed");
    sub->add_option("--test-fraction", cfg.test_fraction, "Test split fraction");
    sub->add_option("--max-divergence", cfg.max_divergence,
                    "Acceptable split divergence");
    sub->add_option("--iterations", cfg.iterations, "Split search iterations");
    sub->add_option("--confidence-threshold", cfg.confidence_threshold,
                    "Activation confidence threshold");
    sub->add_option("--epochs", cfg.epochs, "Training epochs");
    sub->add_option("--batch-size", cfg.batch_size, "Training batch size");
    sub->add_option("--learning-rate", cfg.learning_rate, "Adam learning rate");
    sub->add_option("--loss", cfg.loss,
                    "Loss: balanced_ce, focal or level_weighted");
    sub->add_option("--gamma", cfg.gamma, "Focal exponent");
    sub->add_option("--alpha", cfg.alpha, "Level weight on instrument terms");
    sub->add_option("--strategy", cfg.strategy, "flat or specialized");
    sub->add_option("--gating-threshold", cfg.gating_threshold,
                    "Group gate for specialized inference (negative = off)");
    sub->add_option("--decision-threshold", cfg.decision_threshold,
                    "Binarization threshold");
    return sub;
  };

  auto* synth = add_common(app.add_subcommand(
      "synth", "Generate a synthetic corpus from a spec file"));
  synth->add_option("--spec", cfg.spec, "Synthetic corpus spec (JSON)");
  auto* ingest = add_common(app.add_subcommand(
      "ingest", "Ingest MedleyDB metadata and activation annotations"));
  ingest->add_option("--metadata", cfg.metadata, "Metadata directory");
  ingest->add_option("--annotations", cfg.annotations,
                     "Activation annotation directory");
  add_common(app.add_subcommand(
      "split", "Distribution-balanced train/test split over tracks"));
  add_common(app.add_subcommand(
      "features", "Extract MFCC tensors for every manifest frame"));
  add_common(app.add_subcommand("train", "Train the flat model or the ensemble"));
  add_common(app.add_subcommand(
      "evaluate", "Score a trained model and emit all report tables"));
  add_common(app.add_subcommand(
      "cooc", "Instrument co-occurrence matrix from a manifest"));
  auto* sweep = add_common(app.add_subcommand(
      "alpha-sweep", "Grid search over the level-weighted loss alpha"));
  sweep->add_option("--alphas", cfg.alphas, "Alpha grid values")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      return app.exit(e);
    }
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (app.got_subcommand("synth")) return cmd_synth(cfg);
    if (app.got_subcommand("ingest")) return cmd_ingest(cfg);
    if (app.got_subcommand("split")) return cmd_split(cfg);
    if (app.got_subcommand("features")) return cmd_features(cfg);
    if (app.got_subcommand("train")) return cmd_train(cfg);
    if (app.got_subcommand("evaluate")) return cmd_evaluate(cfg);
    if (app.got_subcommand("cooc")) return cmd_cooc(cfg);
    if (app.got_subcommand("alpha-sweep")) return cmd_alpha_sweep(cfg);
    std::cerr << "error: usage: unknown subcommand\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.category()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace instrec::cli

int main(int argc, char** argv) { return instrec::cli::run(argc, argv); }
