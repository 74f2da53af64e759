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

#include <memory>
#include <optional>

#include "instrec/dataset.hpp"
#include "instrec/features.hpp"
#include "instrec/losses.hpp"
#include "instrec/network.hpp"

namespace instrec {

enum class Strategy { flat, specialized };

const char* to_string(Strategy strategy);
Strategy strategy_from_string(const std::string& name);

struct TrainingConfig {
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  LossConfig loss;

  void validate() const;
};

// First-order adaptive-moment gradient descent with bias correction.
class Adam {
 public:
  Adam(double learning_rate, double beta1, double beta2, double epsilon)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  void step(std::vector<TensorRef<float>> params);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

// Feature rows aligned with label rows.
struct TrainData {
  std::vector<float> features;        // rows x feature_size
  std::vector<std::uint8_t> labels;   // rows x dim
  std::size_t rows = 0;
  std::size_t feature_size = 0;
  std::size_t dim = 0;
};

TrainData assemble_train_data(const FrameSet& frames, const FeatureStore& store);

// Copies the listed label columns; features are shared by copy.
TrainData project_labels(const TrainData& data,
                         std::span<const std::size_t> columns);

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0;
  double seconds = 0;
};

struct TrainedModel {
  std::unique_ptr<VggNetF> net;
  std::vector<EpochLog> log;
};

// Runs the seeded training loop on one network: per-epoch shuffling, batched
// forward/backward, one optimizer step per batch. `instrument_count` tells
// the level-weighted loss where the instrument columns end.
TrainedModel train_network(const TrainData& data, NetworkSpec spec,
                           const TrainingConfig& config,
                           std::size_t instrument_count);

// Single model over the joint label set.
TrainedModel train_flat(const TrainData& data, const LabelSpace& space,
                        const TrainingConfig& config,
                        const NetworkSpec& base_spec = {});

struct SpecializedEnsemble {
  struct Entry {
    std::string group_code;
    std::vector<std::size_t> instrument_columns;  // indices into the label space
    std::unique_ptr<VggNetF> model;
  };
  std::unique_ptr<VggNetF> group_model;
  std::vector<Entry> entries;
  std::uint64_t label_fingerprint = 0;
};

struct SpecializedTrainResult {
  SpecializedEnsemble ensemble;
  std::map<std::string, std::vector<EpochLog>> logs;  // model name -> log
};

// One group-level model plus one instrument model per non-empty group, each
// trained on every frame with targets restricted to its own columns.
SpecializedTrainResult train_specialized(const TrainData& data,
                                         const LabelSpace& space,
                                         const TrainingConfig& config,
                                         const NetworkSpec& base_spec = {});

void save_ensemble(const std::filesystem::path& dir, SpecializedEnsemble& ensemble,
                   const LabelSpace& space, const TrainingConfig& config);
SpecializedEnsemble load_ensemble(const std::filesystem::path& dir,
                                  const LabelSpace& space);

// Eval-mode activations (rows x output_dim), batched internally.
std::vector<float> infer(VggNetF& net, std::span<const float> features,
                         std::size_t rows);

// Two-pass inference into the flat label layout. With a gating threshold,
// instrument activations of a group are forced to 0 whenever the group
// activation falls below it.
std::vector<float> infer(const SpecializedEnsemble& ensemble,
                         std::span<const float> features, std::size_t rows,
                         const LabelSpace& space,
                         std::optional<double> gating_threshold = std::nullopt);

// Elementwise activation >= threshold.
std::vector<std::uint8_t> decide(std::span<const float> activations,
                                 double threshold = 0.5);

}  // namespace instrec
