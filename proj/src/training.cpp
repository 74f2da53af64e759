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

#include "instrec/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace instrec {

const char* to_string(Strategy strategy) {
  return strategy == Strategy::flat ? "flat" : "specialized";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "flat") return Strategy::flat;
  if (name == "specialized") return Strategy::specialized;
  fail(ErrorCategory::config,
       "unknown strategy '" + name + "' (expected flat or specialized)");
}

void TrainingConfig::validate() const {
  if (epochs < 1) fail(ErrorCategory::config, "epochs must be >= 1");
  if (batch_size < 1) fail(ErrorCategory::config, "batch_size must be >= 1");
  if (!(learning_rate > 0)) {
    fail(ErrorCategory::config, "learning_rate must be positive");
  }
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) {
    fail(ErrorCategory::config, "adam betas must be in [0, 1)");
  }
  if (!(adam_epsilon > 0)) {
    fail(ErrorCategory::config, "adam epsilon must be positive");
  }
}

void Adam::step(std::vector<TensorRef<float>> params) {
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i].value->size(), 0.0f);
      v_[i].assign(params[i].value->size(), 0.0f);
    }
  }
  if (m_.size() != params.size()) {
    fail(ErrorCategory::state, "optimizer bound to a different parameter set");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& value = *params[i].value;
    auto& grad = *params[i].grad;
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k];
      m[k] = static_cast<float>(beta1_ * m[k] + (1.0 - beta1_) * g);
      v[k] = static_cast<float>(beta2_ * v[k] + (1.0 - beta2_) * g * g);
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      value[k] -= static_cast<float>(lr_ * mhat / (std::sqrt(vhat) + eps_));
    }
  }
}

TrainData assemble_train_data(const FrameSet& frames, const FeatureStore& store) {
  TrainData data;
  data.rows = frames.rows();
  data.feature_size = store.frame_size();
  data.dim = frames.dim();
  data.features = store.load_rows(frames);
  data.labels = frames.labels;
  return data;
}

TrainData project_labels(const TrainData& data,
                         std::span<const std::size_t> columns) {
  TrainData out;
  out.rows = data.rows;
  out.feature_size = data.feature_size;
  out.dim = columns.size();
  out.features = data.features;
  out.labels.resize(out.rows * out.dim);
  for (std::size_t r = 0; r < out.rows; ++r) {
    const std::uint8_t* src = data.labels.data() + r * data.dim;
    std::uint8_t* dst = out.labels.data() + r * out.dim;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (columns[c] >= data.dim) {
        fail(ErrorCategory::shape, "label projection column out of range");
      }
      dst[c] = src[columns[c]];
    }
  }
  return out;
}

TrainedModel train_network(const TrainData& data, NetworkSpec spec,
                           const TrainingConfig& config,
                           std::size_t instrument_count) {
  config.validate();
  if (data.rows == 0) {
    fail(ErrorCategory::config, "training set is empty");
  }
  spec.output_dim = static_cast<int>(data.dim);
  spec.validate();
  const std::size_t expect_features = static_cast<std::size_t>(spec.input_channels) *
                                      spec.input_height * spec.input_width;
  if (data.feature_size != expect_features) {
    fail(ErrorCategory::shape,
         "feature size " + std::to_string(data.feature_size) +
             " does not match the network input " +
             std::to_string(expect_features));
  }

  LossConfig loss = config.loss;
  if (loss.kind == LossKind::balanced_ce && loss.class_weights.empty()) {
    loss.class_weights =
        compute_class_weights(data.labels, data.rows, data.dim).weights;
  }

  TrainedModel out;
  out.net = std::make_unique<VggNetF>(spec);
  Rng rng(config.seed);
  out.net->init(rng);
  Adam optimizer(config.learning_rate, config.beta1, config.beta2,
                 config.adam_epsilon);

  std::vector<std::size_t> order(data.rows);
  std::iota(order.begin(), order.end(), 0);
  std::vector<float> batch_features;
  std::vector<std::uint8_t> batch_labels;
  std::vector<float> grad;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    rng.shuffle(order);
    double loss_sum = 0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < data.rows;
         begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t n =
          std::min<std::size_t>(config.batch_size, data.rows - begin);
      batch_features.resize(n * data.feature_size);
      batch_labels.resize(n * data.dim);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = order[begin + i];
        std::copy_n(data.features.data() + r * data.feature_size,
                    data.feature_size,
                    batch_features.data() + i * data.feature_size);
        std::copy_n(data.labels.data() + r * data.dim, data.dim,
                    batch_labels.data() + i * data.dim);
      }
      const auto& pred = out.net->forward(batch_features, static_cast<int>(n),
                                          /*train=*/true, &rng);
      grad.resize(pred.size());
      const double value = evaluate_loss<float>(loss, pred, batch_labels,
                                                data.dim, instrument_count,
                                                std::span<float>(grad));
      if (!std::isfinite(value)) {
        fail(ErrorCategory::state, "training loss became non-finite at epoch " +
                                       std::to_string(epoch + 1));
      }
      out.net->backward(grad);
      optimizer.step(out.net->parameters());
      out.net->zero_grad();
      loss_sum += value;
      ++batches;
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.log.push_back({epoch + 1, loss_sum / static_cast<double>(batches), seconds});
  }
  return out;
}

TrainedModel train_flat(const TrainData& data, const LabelSpace& space,
                        const TrainingConfig& config, const NetworkSpec& base_spec) {
  if (data.dim != space.size()) {
    fail(ErrorCategory::shape, "training labels do not cover the label space");
  }
  return train_network(data, base_spec, config, space.instrument_count());
}

SpecializedTrainResult train_specialized(const TrainData& data,
                                         const LabelSpace& space,
                                         const TrainingConfig& config,
                                         const NetworkSpec& base_spec) {
  if (data.dim != space.size()) {
    fail(ErrorCategory::shape, "training labels do not cover the label space");
  }
  SpecializedTrainResult result;
  result.ensemble.label_fingerprint = space.fingerprint();

  // Group model: targets restricted to the group columns.
  std::vector<std::size_t> group_columns(space.group_count());
  std::iota(group_columns.begin(), group_columns.end(), space.instrument_count());
  {
    TrainData group_data = project_labels(data, group_columns);
    TrainedModel trained = train_network(group_data, base_spec, config, 0);
    result.ensemble.group_model = std::move(trained.net);
    result.logs["group"] = std::move(trained.log);
  }

  // One instrument model per non-empty group, over all frames.
  for (std::size_t g = 0; g < space.group_count(); ++g) {
    const auto& group = space.groups()[g];
    std::vector<std::size_t> columns;
    for (std::size_t i = 0; i < space.instrument_count(); ++i) {
      if (space.group_of(space.instruments()[i]).code == group.code) {
        columns.push_back(i);
      }
    }
    if (columns.empty()) continue;  // group without instruments: skipped
    TrainData group_data = project_labels(data, columns);
    TrainedModel trained =
        train_network(group_data, base_spec, config, columns.size());
    result.ensemble.entries.push_back(
        {group.code, std::move(columns), std::move(trained.net)});
    result.logs["group_" + group.code] = std::move(trained.log);
  }
  return result;
}

namespace {
constexpr std::size_t kInferBatch = 32;
}

std::vector<float> infer(VggNetF& net, std::span<const float> features,
                         std::size_t rows) {
  const std::size_t feature_size = features.size() / std::max<std::size_t>(rows, 1);
  if (rows == 0 || features.size() != rows * feature_size) {
    fail(ErrorCategory::shape, "feature batch shape mismatch");
  }
  const std::size_t dim = static_cast<std::size_t>(net.spec().output_dim);
  std::vector<float> out(rows * dim);
  for (std::size_t begin = 0; begin < rows; begin += kInferBatch) {
    const std::size_t n = std::min(kInferBatch, rows - begin);
    const auto& pred = net.forward(
        std::span<const float>(features.data() + begin * feature_size,
                               n * feature_size),
        static_cast<int>(n), /*train=*/false);
    std::copy(pred.begin(), pred.end(), out.begin() + begin * dim);
  }
  return out;
}

std::vector<float> infer(const SpecializedEnsemble& ensemble,
                         std::span<const float> features, std::size_t rows,
                         const LabelSpace& space,
                         std::optional<double> gating_threshold) {
  if (!ensemble.group_model) {
    fail(ErrorCategory::missing_checkpoint, "ensemble has no group model");
  }
  if (ensemble.label_fingerprint != space.fingerprint()) {
    fail(ErrorCategory::state,
         "ensemble was trained against a different label space");
  }
  const std::size_t dim = space.size();
  const std::size_t icount = space.instrument_count();
  const std::size_t gcount = space.group_count();
  if (static_cast<std::size_t>(ensemble.group_model->spec().output_dim) != gcount) {
    fail(ErrorCategory::shape, "group model output does not match the label space");
  }

  std::vector<float> out(rows * dim, 0.0f);
  const std::vector<float> group_act = infer(*ensemble.group_model, features, rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t g = 0; g < gcount; ++g) {
      out[r * dim + icount + g] = group_act[r * gcount + g];
    }
  }
  for (const auto& entry : ensemble.entries) {
    const std::size_t group_pos = space.group_index(entry.group_code) - icount;
    const std::vector<float> inst_act = infer(*entry.model, features, rows);
    const std::size_t sub_dim = entry.instrument_columns.size();
    for (std::size_t r = 0; r < rows; ++r) {
      const bool gated = gating_threshold &&
                         group_act[r * gcount + group_pos] <
                             static_cast<float>(*gating_threshold);
      for (std::size_t c = 0; c < sub_dim; ++c) {
        out[r * dim + entry.instrument_columns[c]] =
            gated ? 0.0f : inst_act[r * sub_dim + c];
      }
    }
  }
  return out;
}

std::vector<std::uint8_t> decide(std::span<const float> activations,
                                 double threshold) {
  if (!(threshold > 0 && threshold < 1)) {
    fail(ErrorCategory::config, "decision threshold must be in (0, 1)");
  }
  std::vector<std::uint8_t> out(activations.size());
  for (std::size_t i = 0; i < activations.size(); ++i) {
    out[i] = activations[i] >= static_cast<float>(threshold) ? 1 : 0;
  }
  return out;
}

void save_ensemble(const std::filesystem::path& dir, SpecializedEnsemble& ensemble,
                   const LabelSpace& space, const TrainingConfig& config) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "instrec-ensemble-v1";
  manifest["label_fingerprint"] = ensemble.label_fingerprint;
  manifest["group_checkpoint"] = "group.ckpt";

  CheckpointMeta meta;
  meta.epoch = config.epochs;
  meta.seed = config.seed;
  meta.loss_name = to_string(config.loss.kind);
  meta.label_fingerprint = ensemble.label_fingerprint;
  meta.labels = space.label_names();
  save_checkpoint(dir / "group.ckpt", *ensemble.group_model, meta);

  auto& entries = manifest["entries"] = nlohmann::json::array();
  for (auto& entry : ensemble.entries) {
    const std::string file = "group_" + entry.group_code + ".ckpt";
    save_checkpoint(dir / file, *entry.model, meta);
    entries.push_back({{"group_code", entry.group_code},
                       {"instrument_columns", entry.instrument_columns},
                       {"checkpoint", file}});
  }
  std::ofstream out(dir / "ensemble.json");
  if (!out) fail(ErrorCategory::io, "cannot write ensemble manifest");
  out << manifest.dump(2) << '\n';
}

SpecializedEnsemble load_ensemble(const std::filesystem::path& dir,
                                  const LabelSpace& space) {
  std::ifstream in(dir / "ensemble.json");
  if (!in) {
    fail(ErrorCategory::missing_checkpoint,
         "no ensemble manifest at " + (dir / "ensemble.json").string());
  }
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::parse, "ensemble.json: " + std::string(e.what()));
  }
  SpecializedEnsemble ensemble;
  ensemble.label_fingerprint = manifest.at("label_fingerprint").get<std::uint64_t>();
  if (ensemble.label_fingerprint != space.fingerprint()) {
    fail(ErrorCategory::state,
         "ensemble was trained against a different label space "
         "(fingerprint mismatch)");
  }
  ensemble.group_model =
      std::move(load_checkpoint<float>(
                    dir / manifest.at("group_checkpoint").get<std::string>(),
                    space.fingerprint())
                    .net);
  for (const auto& entry : manifest.at("entries")) {
    SpecializedEnsemble::Entry e;
    e.group_code = entry.at("group_code").get<std::string>();
    entry.at("instrument_columns").get_to(e.instrument_columns);
    e.model = std::move(
        load_checkpoint<float>(dir / entry.at("checkpoint").get<std::string>(),
                               space.fingerprint())
            .net);
    ensemble.entries.push_back(std::move(e));
  }
  return ensemble;
}

}  // namespace instrec
