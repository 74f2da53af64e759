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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <sstream>

#include "instrec/common.hpp"
#include "instrec/dataset.hpp"
#include "instrec/evaluation.hpp"
#include "instrec/features.hpp"
#include "instrec/losses.hpp"
#include "instrec/network.hpp"
#include "instrec/taxonomy.hpp"
#include "instrec/training.hpp"

namespace py = pybind11;
using namespace instrec;

namespace {

template <class T>
std::span<const T> as_span(const py::array_t<T, py::array::c_style>& a) {
  return {a.data(), static_cast<std::size_t>(a.size())};
}

std::pair<std::size_t, std::size_t> matrix_dims(const py::buffer_info& info) {
  if (info.ndim != 2) {
    throw py::value_error("expected a 2-d array (rows, labels)");
  }
  return {static_cast<std::size_t>(info.shape[0]),
          static_cast<std::size_t>(info.shape[1])};
}

py::array_t<float> make_batch_array(std::vector<float> data, std::size_t rows,
                                    std::size_t dim) {
  py::array_t<float> out({rows, dim});
  std::copy(data.begin(), data.end(), out.mutable_data());
  return out;
}

py::dict metrics_to_dict(const MetricsReport& report) {
  py::dict d;
  auto micro = [](const MicroScore& m) {
    py::dict s;
    s["tp"] = m.tp;
    s["fp"] = m.fp;
    s["fn"] = m.fn;
    s["precision"] = m.precision;
    s["recall"] = m.recall;
    s["f1"] = m.f1;
    return s;
  };
  d["micro_instruments"] = micro(report.micro_instruments);
  d["micro_groups"] = micro(report.micro_groups);
  d["micro_all"] = micro(report.micro_all);
  py::dict per_label;
  for (std::size_t i = 0; i < report.per_label.size(); ++i) {
    const auto& s = report.per_label[i];
    py::dict e;
    e["support"] = s.support;
    e["tp"] = s.tp;
    e["fp"] = s.fp;
    e["fn"] = s.fn;
    e["precision"] = s.precision;
    e["recall"] = s.recall;
    e["f1"] = s.f1;
    per_label[py::str(report.labels[i])] = e;
  }
  d["per_label"] = per_label;
  return d;
}

py::dict cooc_to_dict(const CooccurrenceMatrix& m) {
  py::dict d;
  d["labels"] = m.labels;
  py::array_t<std::int64_t> raw({m.dim, m.dim});
  std::copy(m.raw.begin(), m.raw.end(), raw.mutable_data());
  py::array_t<double> normalized({m.dim, m.dim});
  std::copy(m.normalized.begin(), m.normalized.end(), normalized.mutable_data());
  d["raw"] = raw;
  d["normalized"] = normalized;
  return d;
}

TrainData train_data_from(const py::array_t<float, py::array::c_style>& features,
                          const py::array_t<std::uint8_t, py::array::c_style>& labels) {
  auto [rows, feature_size] = matrix_dims(features.request());
  auto [lrows, dim] = matrix_dims(labels.request());
  if (rows != lrows) {
    throw py::value_error("features and labels disagree on the row count");
  }
  TrainData data;
  data.rows = rows;
  data.feature_size = feature_size;
  data.dim = dim;
  data.features.assign(features.data(), features.data() + features.size());
  data.labels.assign(labels.data(), labels.data() + labels.size());
  return data;
}

TrainingConfig config_from_kwargs(int epochs, int batch_size, double learning_rate,
                                  std::uint64_t seed, const std::string& loss,
                                  double gamma, double alpha) {
  TrainingConfig config;
  config.epochs = epochs;
  config.batch_size = batch_size;
  config.learning_rate = learning_rate;
  config.seed = seed;
  config.loss.kind = loss_kind_from_string(loss);
  config.loss.gamma = gamma;
  config.loss.alpha = alpha;
  return config;
}

}  // namespace

PYBIND11_MODULE(_instrec, m) {
  m.doc() = "Hierarchical multi-label instrument recognition toolkit";

  py::register_exception<Error>(m, "InstrecError");

  // --- taxonomy ------------------------------------------------------------
  py::class_<TaxonomyNode>(m, "TaxonomyNode")
      .def_readonly("code", &TaxonomyNode::code)
      .def_readonly("name", &TaxonomyNode::name)
      .def_property_readonly("parent_code", &TaxonomyNode::parent_code)
      .def_property_readonly("depth", &TaxonomyNode::depth);

  py::class_<Taxonomy>(m, "Taxonomy")
      .def_property_readonly("nodes", &Taxonomy::nodes)
      .def_property_readonly("assignments", &Taxonomy::assignments)
      .def_property_readonly("max_depth", &Taxonomy::max_depth);

  m.def("load_taxonomy", [](const std::string& text) {
    std::istringstream in(text);
    return load_taxonomy(in);
  }, py::arg("text"), "Parse a taxonomy document from a string");
  m.def("load_taxonomy_file", &load_taxonomy_file, py::arg("path"));
  m.def("truncate",
      [](const Taxonomy& taxonomy, int depth) {
        return instrec::truncate(taxonomy, depth);
      },
      py::arg("taxonomy"), py::arg("depth"));

  py::class_<GroupLabel>(m, "GroupLabel")
      .def_readonly("code", &GroupLabel::code)
      .def_readonly("name", &GroupLabel::name);

  py::class_<LabelSpace>(m, "LabelSpace")
      .def_property_readonly("instruments", &LabelSpace::instruments)
      .def_property_readonly("groups", &LabelSpace::groups)
      .def("__len__", &LabelSpace::size)
      .def_property_readonly("instrument_count", &LabelSpace::instrument_count)
      .def_property_readonly("group_count", &LabelSpace::group_count)
      .def("label_names", &LabelSpace::label_names)
      .def("instrument_index",
           [](const LabelSpace& s, const std::string& name) {
             return s.instrument_index(name);
           })
      .def("group_of",
           [](const LabelSpace& s, const std::string& name) {
             return s.group_of(name);
           })
      .def("fingerprint", &LabelSpace::fingerprint);

  m.def("build_label_space", &build_label_space, py::arg("taxonomy"),
        py::arg("depth"));
  m.def("expand_labels",
        [](const LabelSpace& space, const std::vector<std::string>& active) {
          auto v = expand_labels(space, active);
          py::array_t<std::uint8_t> out(v.size());
          std::copy(v.begin(), v.end(), out.mutable_data());
          return out;
        },
        py::arg("space"), py::arg("active_instruments"));

  // --- dataset ---------------------------------------------------------------
  py::class_<Interval>(m, "Interval")
      .def(py::init<double, double>(), py::arg("start"), py::arg("end"))
      .def_readonly("start", &Interval::start)
      .def_readonly("end", &Interval::end);

  py::class_<ActivationTrack>(m, "ActivationTrack")
      .def_readonly("track_id", &ActivationTrack::track_id)
      .def_readonly("duration", &ActivationTrack::duration)
      .def_readonly("activations", &ActivationTrack::activations)
      .def_readonly("has_bleed", &ActivationTrack::has_bleed);

  m.def("make_track",
        [](const std::string& id, double duration,
           const std::map<std::string, std::vector<std::pair<double, double>>>&
               activations,
           bool has_bleed) {
          std::map<std::string, std::vector<Interval>> acts;
          for (const auto& [name, spans] : activations) {
            for (const auto& [start, end] : spans) {
              acts[name].push_back({start, end});
            }
          }
          return make_track(id, duration, std::move(acts), has_bleed);
        },
        py::arg("track_id"), py::arg("duration"), py::arg("activations"),
        py::arg("has_bleed") = false);

  m.def("frame_labels",
        [](const ActivationTrack& track, const LabelSpace& space) {
          auto frames = frame_labels(track, space);
          py::array_t<std::uint8_t> labels({frames.size(), space.size()});
          std::vector<int> indices;
          for (std::size_t r = 0; r < frames.size(); ++r) {
            indices.push_back(frames[r].frame_index);
            std::copy(frames[r].labels.begin(), frames[r].labels.end(),
                      labels.mutable_data() + r * space.size());
          }
          return py::make_tuple(indices, labels);
        },
        py::arg("track"), py::arg("space"),
        "Returns (frame_indices, multi-hot label matrix)");

  m.def("short_activation_fraction",
        [](const std::vector<ActivationTrack>& tracks, double min_duration) {
          return short_activation_fraction(tracks, min_duration);
        },
        py::arg("tracks"), py::arg("min_duration"));

  py::class_<DatasetSplit>(m, "DatasetSplit")
      .def_readonly("train_tracks", &DatasetSplit::train_tracks)
      .def_readonly("test_tracks", &DatasetSplit::test_tracks)
      .def_readonly("divergence", &DatasetSplit::divergence)
      .def_readonly("test_fraction", &DatasetSplit::test_fraction)
      .def_readonly("test_only_instruments", &DatasetSplit::test_only_instruments)
      .def_readonly("within_bound", &DatasetSplit::within_bound);

  m.def("split_tracks",
        [](const std::vector<ActivationTrack>& tracks, const LabelSpace& space,
           double test_fraction, std::uint64_t seed, double max_divergence,
           int iterations) {
          return split_tracks(tracks, space, test_fraction, seed, max_divergence,
                              iterations);
        },
        py::arg("tracks"), py::arg("space"), py::arg("test_fraction") = 0.2,
        py::arg("seed") = 0, py::arg("max_divergence") = 0.2,
        py::arg("iterations") = 2000);

  py::class_<SynthCorpus>(m, "SynthCorpus")
      .def_readonly("tracks", &SynthCorpus::tracks)
      .def_readonly("sample_rate", &SynthCorpus::sample_rate)
      .def("audio",
           [](const SynthCorpus& c, std::size_t index) {
             const auto& samples = c.audio.at(index);
             py::array_t<float> out(samples.size());
             std::copy(samples.begin(), samples.end(), out.mutable_data());
             return out;
           },
           py::arg("track_index"));

  m.def("load_synth_spec", &load_synth_spec, py::arg("path"));
  m.def("generate_synthetic_corpus",
        [](const std::string& spec_json, std::uint64_t seed) {
          const auto tmp =
              std::filesystem::temp_directory_path() /
              ("instrec_spec_" + std::to_string(fnv1a64(spec_json)) + ".json");
          {
            std::ofstream out(tmp);
            out << spec_json;
          }
          SynthSpec spec = load_synth_spec(tmp);
          std::filesystem::remove(tmp);
          return generate_synthetic_corpus(spec, seed);
        },
        py::arg("spec_json"), py::arg("seed") = 0,
        "Generate a synthetic corpus from a JSON spec string");

  // --- features --------------------------------------------------------------
  py::class_<MfccExtractor>(m, "MfccExtractor")
      .def(py::init([](int sample_rate) {
             return MfccExtractor({.sample_rate = sample_rate});
           }),
           py::arg("sample_rate") = 22050)
      .def("extract",
           [](const MfccExtractor& e,
              const py::array_t<float, py::array::c_style>& audio) {
             FeatureTensor t = e.extract(as_span(audio));
             py::array_t<float> out(
                 {std::size_t{1}, static_cast<std::size_t>(t.coefficients),
                  static_cast<std::size_t>(t.time_steps)});
             std::copy(t.data.begin(), t.data.end(), out.mutable_data());
             return out;
           },
           py::arg("audio"), "One second of audio -> (1, 80, 22) block");

  // --- network ---------------------------------------------------------------
  py::class_<NetworkSpec>(m, "NetworkSpec")
      .def(py::init([](int output_dim, double dropout_rate, double leaky_slope,
                       std::array<int, 3> conv_widths,
                       std::array<int, 2> head_widths) {
             NetworkSpec spec;
             spec.output_dim = output_dim;
             spec.dropout_rate = dropout_rate;
             spec.leaky_slope = leaky_slope;
             spec.conv_widths = conv_widths;
             spec.head_widths = head_widths;
             spec.validate();
             return spec;
           }),
           py::arg("output_dim") = 85, py::arg("dropout_rate") = 0.5,
           py::arg("leaky_slope") = 0.01,
           py::arg("conv_widths") = std::array<int, 3>{64, 128, 256},
           py::arg("head_widths") = std::array<int, 2>{256, 128})
      .def_readwrite("output_dim", &NetworkSpec::output_dim)
      .def_readwrite("dropout_rate", &NetworkSpec::dropout_rate)
      .def_readwrite("leaky_slope", &NetworkSpec::leaky_slope);

  py::class_<LayerInfo>(m, "LayerInfo")
      .def_readonly("kind", &LayerInfo::kind)
      .def_readonly("out_shape", &LayerInfo::out_shape)
      .def_readonly("parameters", &LayerInfo::parameters);

  py::class_<VggNetF>(m, "Network")
      .def(py::init([](const NetworkSpec& spec, std::uint64_t seed) {
             auto net = std::make_unique<VggNetF>(spec);
             Rng rng(seed);
             net->init(rng);
             return net;
           }),
           py::arg("spec"), py::arg("seed") = 0)
      .def_property_readonly("spec", &VggNetF::spec)
      .def("parameter_count", &VggNetF::parameter_count)
      .def("layer_summary", &VggNetF::layer_summary)
      .def("forward",
           [](VggNetF& net, const py::array_t<float, py::array::c_style>& batch) {
             const auto info = batch.request();
             std::size_t rows = 1;
             if (info.ndim >= 1) rows = static_cast<std::size_t>(info.shape[0]);
             if (info.ndim == 3) rows = 1;  // single (1, 80, 22) block
             auto out = infer(net, as_span(batch),
                              info.ndim == 4 || info.ndim == 2 ? rows : 1);
             return make_batch_array(std::move(out),
                                     info.ndim == 4 || info.ndim == 2 ? rows : 1,
                                     static_cast<std::size_t>(net.spec().output_dim));
           },
           py::arg("batch"),
           "Eval-mode forward over a (n, 1, 80, 22) or flattened batch");

  m.def("save_checkpoint",
        [](const std::filesystem::path& path, VggNetF& net, int epoch,
           std::uint64_t seed, const std::string& loss,
           std::uint64_t label_fingerprint, std::vector<std::string> labels) {
          CheckpointMeta meta;
          meta.epoch = epoch;
          meta.seed = seed;
          meta.loss_name = loss;
          meta.label_fingerprint = label_fingerprint;
          meta.labels = std::move(labels);
          save_checkpoint(path, net, meta);
        },
        py::arg("path"), py::arg("network"), py::arg("epoch") = 0,
        py::arg("seed") = 0, py::arg("loss") = "", py::arg("label_fingerprint") = 0,
        py::arg("labels") = std::vector<std::string>{});
  m.def("load_checkpoint",
        [](const std::filesystem::path& path,
           std::optional<std::uint64_t> expect_fingerprint) {
          auto loaded = load_checkpoint<float>(path, expect_fingerprint);
          py::dict meta;
          meta["epoch"] = loaded.meta.epoch;
          meta["seed"] = loaded.meta.seed;
          meta["loss"] = loaded.meta.loss_name;
          meta["label_fingerprint"] = loaded.meta.label_fingerprint;
          meta["labels"] = loaded.meta.labels;
          return py::make_tuple(std::move(loaded.net), meta);
        },
        py::arg("path"), py::arg("expect_fingerprint") = std::nullopt);

  // --- losses ----------------------------------------------------------------
  const auto loss_pair = [](double value, std::vector<double> grad) {
    py::array_t<double> g(grad.size());
    std::copy(grad.begin(), grad.end(), g.mutable_data());
    return py::make_tuple(value, g);
  };
  m.def("bce",
        [loss_pair](const py::array_t<double, py::array::c_style>& pred,
                    const py::array_t<std::uint8_t, py::array::c_style>& targ,
                    bool with_grad) {
          auto [rows, dim] = matrix_dims(pred.request());
          std::vector<double> grad(with_grad ? pred.size() : 0);
          double v = bce<double>(as_span(pred), as_span(targ), dim,
                                 std::span<double>(grad));
          return loss_pair(v, std::move(grad));
        },
        py::arg("predictions"), py::arg("targets"), py::arg("with_grad") = false);
  m.def("focal",
        [loss_pair](const py::array_t<double, py::array::c_style>& pred,
                    const py::array_t<std::uint8_t, py::array::c_style>& targ,
                    double gamma, bool with_grad) {
          auto [rows, dim] = matrix_dims(pred.request());
          std::vector<double> grad(with_grad ? pred.size() : 0);
          double v = focal<double>(as_span(pred), as_span(targ), gamma, dim,
                                   std::span<double>(grad));
          return loss_pair(v, std::move(grad));
        },
        py::arg("predictions"), py::arg("targets"), py::arg("gamma") = 2.0,
        py::arg("with_grad") = false);
  m.def("balanced_ce",
        [loss_pair](const py::array_t<double, py::array::c_style>& pred,
                    const py::array_t<std::uint8_t, py::array::c_style>& targ,
                    const std::vector<double>& weights, bool with_grad) {
          auto [rows, dim] = matrix_dims(pred.request());
          std::vector<double> grad(with_grad ? pred.size() : 0);
          double v = balanced_ce<double>(as_span(pred), as_span(targ), weights,
                                         dim, std::span<double>(grad));
          return loss_pair(v, std::move(grad));
        },
        py::arg("predictions"), py::arg("targets"), py::arg("class_weights"),
        py::arg("with_grad") = false);
  m.def("level_weighted",
        [loss_pair](const py::array_t<double, py::array::c_style>& pred,
                    const py::array_t<std::uint8_t, py::array::c_style>& targ,
                    double alpha, std::size_t instrument_count, bool with_grad) {
          auto [rows, dim] = matrix_dims(pred.request());
          std::vector<double> grad(with_grad ? pred.size() : 0);
          double v = level_weighted<double>(as_span(pred), as_span(targ), alpha,
                                            instrument_count, dim,
                                            std::span<double>(grad));
          return loss_pair(v, std::move(grad));
        },
        py::arg("predictions"), py::arg("targets"), py::arg("alpha"),
        py::arg("instrument_count"), py::arg("with_grad") = false);
  m.def("compute_class_weights",
        [](const py::array_t<std::uint8_t, py::array::c_style>& labels) {
          auto [rows, dim] = matrix_dims(labels.request());
          ClassWeights cw = compute_class_weights(as_span(labels), rows, dim);
          return py::make_tuple(cw.weights, cw.zero_support);
        },
        py::arg("labels"));

  // --- training ----------------------------------------------------------------
  py::class_<EpochLog>(m, "EpochLog")
      .def_readonly("epoch", &EpochLog::epoch)
      .def_readonly("mean_loss", &EpochLog::mean_loss)
      .def_readonly("seconds", &EpochLog::seconds);

  m.def("train_flat",
        [](const py::array_t<float, py::array::c_style>& features,
           const py::array_t<std::uint8_t, py::array::c_style>& labels,
           const LabelSpace& space, int epochs, int batch_size,
           double learning_rate, std::uint64_t seed, const std::string& loss,
           double gamma, double alpha, const NetworkSpec& base_spec) {
          TrainData data = train_data_from(features, labels);
          TrainedModel model =
              train_flat(data, space,
                         config_from_kwargs(epochs, batch_size, learning_rate,
                                            seed, loss, gamma, alpha),
                         base_spec);
          return py::make_tuple(std::move(model.net), model.log);
        },
        py::arg("features"), py::arg("labels"), py::arg("space"),
        py::arg("epochs") = 30, py::arg("batch_size") = 32,
        py::arg("learning_rate") = 0.001, py::arg("seed") = 0,
        py::arg("loss") = "focal", py::arg("gamma") = 2.0, py::arg("alpha") = 0.1,
        py::arg("base_spec") = NetworkSpec{});

  py::class_<SpecializedEnsemble>(m, "SpecializedEnsemble")
      .def_property_readonly("group_codes", [](const SpecializedEnsemble& e) {
        std::vector<std::string> codes;
        for (const auto& entry : e.entries) codes.push_back(entry.group_code);
        return codes;
      });

  m.def("train_specialized",
        [](const py::array_t<float, py::array::c_style>& features,
           const py::array_t<std::uint8_t, py::array::c_style>& labels,
           const LabelSpace& space, int epochs, int batch_size,
           double learning_rate, std::uint64_t seed, const std::string& loss,
           double gamma, double alpha, const NetworkSpec& base_spec) {
          TrainData data = train_data_from(features, labels);
          SpecializedTrainResult result = train_specialized(
              data, space,
              config_from_kwargs(epochs, batch_size, learning_rate, seed, loss,
                                 gamma, alpha),
              base_spec);
          auto ensemble =
              std::make_unique<SpecializedEnsemble>(std::move(result.ensemble));
          return py::make_tuple(std::move(ensemble), result.logs);
        },
        py::arg("features"), py::arg("labels"), py::arg("space"),
        py::arg("epochs") = 30, py::arg("batch_size") = 32,
        py::arg("learning_rate") = 0.001, py::arg("seed") = 0,
        py::arg("loss") = "focal", py::arg("gamma") = 2.0, py::arg("alpha") = 0.1,
        py::arg("base_spec") = NetworkSpec{});

  m.def("infer",
        [](VggNetF& net, const py::array_t<float, py::array::c_style>& features) {
          auto [rows, dim] = matrix_dims(features.request());
          auto out = infer(net, as_span(features), rows);
          return make_batch_array(std::move(out), rows,
                                  static_cast<std::size_t>(net.spec().output_dim));
        },
        py::arg("network"), py::arg("features"));
  m.def("infer_ensemble",
        [](const SpecializedEnsemble& ensemble,
           const py::array_t<float, py::array::c_style>& features,
           const LabelSpace& space, std::optional<double> gating_threshold) {
          auto [rows, dim] = matrix_dims(features.request());
          auto out = infer(ensemble, as_span(features), rows, space,
                           gating_threshold);
          return make_batch_array(std::move(out), rows, space.size());
        },
        py::arg("ensemble"), py::arg("features"), py::arg("space"),
        py::arg("gating_threshold") = std::nullopt);
  m.def("decide",
        [](const py::array_t<float, py::array::c_style>& activations,
           double threshold) {
          auto out = decide(as_span(activations), threshold);
          py::array_t<std::uint8_t> result(out.size());
          std::copy(out.begin(), out.end(), result.mutable_data());
          return result;
        },
        py::arg("activations"), py::arg("threshold") = 0.5);
  m.def("save_ensemble",
        [](const std::filesystem::path& dir, SpecializedEnsemble& ensemble,
           const LabelSpace& space) {
          TrainingConfig config;
          save_ensemble(dir, ensemble, space, config);
        },
        py::arg("dir"), py::arg("ensemble"), py::arg("space"));
  m.def("load_ensemble",
        [](const std::filesystem::path& dir, const LabelSpace& space) {
          return std::make_unique<SpecializedEnsemble>(load_ensemble(dir, space));
        },
        py::arg("dir"), py::arg("space"));

  // --- evaluation ----------------------------------------------------------
  m.def("f1_score", &f1_score, py::arg("precision"), py::arg("recall"));
  m.def("score",
        [](const py::array_t<std::uint8_t, py::array::c_style>& pred,
           const py::array_t<std::uint8_t, py::array::c_style>& targ,
           const LabelSpace& space) {
          auto [rows, dim] = matrix_dims(pred.request());
          return metrics_to_dict(score(as_span(pred), as_span(targ), rows, space));
        },
        py::arg("predictions"), py::arg("targets"), py::arg("space"));
  m.def("cooccurrence",
        [](const py::array_t<std::uint8_t, py::array::c_style>& targ,
           const LabelSpace& space) {
          auto [rows, dim] = matrix_dims(targ.request());
          return cooc_to_dict(cooccurrence(as_span(targ), rows, space));
        },
        py::arg("targets"), py::arg("space"));
  m.def("fp_cooccurrence",
        [](const py::array_t<std::uint8_t, py::array::c_style>& pred,
           const py::array_t<std::uint8_t, py::array::c_style>& targ,
           const LabelSpace& space) {
          auto [rows, dim] = matrix_dims(pred.request());
          return cooc_to_dict(
              fp_cooccurrence(as_span(pred), as_span(targ), rows, space));
        },
        py::arg("predictions"), py::arg("targets"), py::arg("space"));
  m.def("fn_cooccurrence",
        [](const py::array_t<std::uint8_t, py::array::c_style>& pred,
           const py::array_t<std::uint8_t, py::array::c_style>& targ,
           const LabelSpace& space) {
          auto [rows, dim] = matrix_dims(pred.request());
          return cooc_to_dict(
              fn_cooccurrence(as_span(pred), as_span(targ), rows, space));
        },
        py::arg("predictions"), py::arg("targets"), py::arg("space"));
  m.def("consistency_audit",
        [](const py::array_t<std::uint8_t, py::array::c_style>& pred,
           const LabelSpace& space) {
          auto [rows, dim] = matrix_dims(pred.request());
          auto violations = consistency_audit(as_span(pred), rows, space);
          py::list out;
          for (const auto& v : violations) {
            out.append(py::make_tuple(v.frame, v.instrument, v.group));
          }
          return out;
        },
        py::arg("predictions"), py::arg("space"));

  m.attr("__version__") = "0.1.0";
}
