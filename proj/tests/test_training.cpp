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

#include <doctest.h>

#include <cmath>

#include "instrec/common.hpp"
#include "instrec/evaluation.hpp"
#include "instrec/training.hpp"
#include "test_util.hpp"

using namespace instrec;

namespace {

NetworkSpec toy_spec() {
  NetworkSpec spec;
  spec.conv_widths = {4, 8, 8};
  spec.head_widths = {24, 16};
  spec.dropout_rate = 0.1;
  return spec;
}

// A tiny separable dataset: each class gets a distinct constant feature
// pattern, labels expand through the demo taxonomy.
TrainData separable_data(const LabelSpace& space, std::size_t rows, Rng& rng) {
  TrainData data;
  data.rows = rows;
  data.feature_size = 80 * 22;
  data.dim = space.size();
  data.features.resize(rows * data.feature_size);
  data.labels.resize(rows * data.dim);
  const auto& names = space.instruments();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t cls = rng.index(names.size());
    std::vector<std::string> active{names[cls]};
    auto labels = expand_labels(space, active);
    std::copy(labels.begin(), labels.end(), data.labels.begin() + r * data.dim);
    float* row = data.features.data() + r * data.feature_size;
    for (std::size_t i = 0; i < data.feature_size; ++i) {
      // Per-class stripe pattern plus mild noise.
      const double base = ((i / 22 + cls) % names.size() == 0) ? 1.0 : -0.5;
      row[i] = static_cast<float>(base + 0.05 * rng.normal());
    }
  }
  return data;
}

}  // namespace

TEST_SUITE_BEGIN("training");

TEST_CASE("config validation rejects bad values") {
  TrainingConfig config;
  config.epochs = 0;
  CHECK_THROWS_AS(config.validate(), Error);
  config.epochs = 1;
  config.batch_size = 0;
  CHECK_THROWS_AS(config.validate(), Error);
  config.batch_size = 8;
  config.learning_rate = 0.0;
  CHECK_THROWS_AS(config.validate(), Error);
}

TEST_CASE("decide binarizes with >= semantics") {
  std::vector<float> act{0.5f, 0.49f, 0.51f, 0.0f};
  auto out = decide(act, 0.5);
  CHECK(out == std::vector<std::uint8_t>{1, 0, 1, 0});

  SUBCASE("all sub-threshold activations give the zero vector") {
    std::vector<float> low(6, 0.49f);
    auto zeros = decide(low, 0.5);
    for (auto v : zeros) CHECK(v == 0);
  }
  SUBCASE("lowering the threshold never decreases recall") {
    Rng rng(3);
    std::vector<float> scores(200);
    std::vector<std::uint8_t> targets(200);
    for (auto& s : scores) s = static_cast<float>(rng.uniform());
    for (auto& t : targets) t = rng.uniform() < 0.5 ? 1 : 0;
    double last_recall = -1;
    for (double thr : {0.9, 0.7, 0.5, 0.3, 0.1}) {
      auto pred = decide(scores, thr);
      std::int64_t tp = 0, fn = 0;
      for (std::size_t i = 0; i < pred.size(); ++i) {
        if (targets[i] && pred[i]) ++tp;
        if (targets[i] && !pred[i]) ++fn;
      }
      const double recall = static_cast<double>(tp) / (tp + fn);
      CHECK(recall >= last_recall);
      last_recall = recall;
    }
  }
  SUBCASE("threshold bounds are enforced") {
    std::vector<float> act2{0.5f};
    CHECK_THROWS_AS(decide(act2, 0.0), Error);
    CHECK_THROWS_AS(decide(act2, 1.0), Error);
  }
}

TEST_CASE("training fits a separable toy corpus") {
  LabelSpace space = test::demo_space();
  Rng rng(21);
  TrainData data = separable_data(space, 300, rng);

  TrainingConfig config;
  config.epochs = 30;
  config.batch_size = 32;
  config.seed = 7;
  config.loss.kind = LossKind::focal;

  TrainedModel model = train_flat(data, space, config, toy_spec());
  REQUIRE(model.log.size() == 30);
  CHECK(model.log.front().mean_loss > model.log.back().mean_loss);
  for (const auto& entry : model.log) CHECK(std::isfinite(entry.mean_loss));

  // Training-set micro F1 over all nodes.
  auto activations = infer(*model.net, data.features, data.rows);
  auto pred = decide(activations, 0.5);
  MetricsReport report = score(pred, data.labels, data.rows, space);
  CHECK(report.micro_all.f1 >= 0.95);
}

TEST_CASE("identical seeds reproduce the loss trajectory") {
  LabelSpace space = test::demo_space();
  Rng rng(22);
  TrainData data = separable_data(space, 96, rng);
  TrainingConfig config;
  config.epochs = 3;
  config.batch_size = 16;
  config.seed = 5;
  config.loss.kind = LossKind::focal;

  TrainedModel a = train_flat(data, space, config, toy_spec());
  TrainedModel b = train_flat(data, space, config, toy_spec());
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(std::abs(a.log[i].mean_loss - b.log[i].mean_loss) <= 1e-6);
  }
  auto xa = infer(*a.net, data.features, data.rows);
  auto xb = infer(*b.net, data.features, data.rows);
  for (std::size_t i = 0; i < xa.size(); ++i) {
    CHECK(std::abs(xa[i] - xb[i]) <= 1e-6f);
  }

  SUBCASE("a different seed moves the trajectory") {
    TrainingConfig other = config;
    other.seed = 6;
    TrainedModel c = train_flat(data, space, other, toy_spec());
    CHECK(c.log.back().mean_loss != a.log.back().mean_loss);
  }
}

TEST_CASE("balanced_ce auto-computes class weights from the batch labels") {
  LabelSpace space = test::demo_space();
  Rng rng(23);
  TrainData data = separable_data(space, 64, rng);
  TrainingConfig config;
  config.epochs = 2;
  config.batch_size = 16;
  config.seed = 1;
  config.loss.kind = LossKind::balanced_ce;
  TrainedModel model = train_flat(data, space, config, toy_spec());
  for (const auto& entry : model.log) CHECK(std::isfinite(entry.mean_loss));
}

TEST_CASE("specialized training covers every non-empty group") {
  LabelSpace space = test::demo_space();
  Rng rng(24);
  TrainData data = separable_data(space, 96, rng);
  TrainingConfig config;
  config.epochs = 2;
  config.batch_size = 16;
  config.seed = 9;
  config.loss.kind = LossKind::focal;

  SpecializedTrainResult result =
      train_specialized(data, space, config, toy_spec());
  CHECK(result.ensemble.entries.size() == space.group_count());
  CHECK(result.ensemble.group_model->spec().output_dim ==
        static_cast<int>(space.group_count()));
  for (const auto& entry : result.ensemble.entries) {
    CHECK(entry.model->spec().output_dim ==
          static_cast<int>(entry.instrument_columns.size()));
  }

  SUBCASE("ensemble inference fills the flat label layout") {
    auto act = infer(result.ensemble, data.features, data.rows, space);
    CHECK(act.size() == data.rows * space.size());
    for (float v : act) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
    // Group positions carry the group model's own outputs.
    auto group_act = infer(*result.ensemble.group_model, data.features, data.rows);
    for (std::size_t r = 0; r < data.rows; ++r) {
      for (std::size_t g = 0; g < space.group_count(); ++g) {
        CHECK(act[r * space.size() + space.instrument_count() + g] ==
              group_act[r * space.group_count() + g]);
      }
    }
  }
  SUBCASE("gating threshold zero equals ungated inference") {
    auto ungated = infer(result.ensemble, data.features, data.rows, space);
    auto gated = infer(result.ensemble, data.features, data.rows, space, 0.0);
    CHECK(ungated == gated);
  }
  SUBCASE("an impossible gate silences every instrument") {
    auto act = infer(result.ensemble, data.features, data.rows, space, 1.0 + 1e-6);
    for (std::size_t r = 0; r < data.rows; ++r) {
      for (std::size_t i = 0; i < space.instrument_count(); ++i) {
        CHECK(act[r * space.size() + i] == 0.0f);
      }
      float group_sum = 0;
      for (std::size_t g = 0; g < space.group_count(); ++g) {
        group_sum += act[r * space.size() + space.instrument_count() + g];
      }
      CHECK(group_sum > 0.0f);  // groups unaffected by the gate
    }
  }
  SUBCASE("gated predictions are hierarchy-consistent") {
    auto act = infer(result.ensemble, data.features, data.rows, space, 0.5);
    auto pred = decide(act, 0.5);
    CHECK(consistency_audit(pred, data.rows, space).empty());
  }
  SUBCASE("ensembles round-trip through a directory") {
    test::TempDir tmp("ensemble");
    save_ensemble(tmp.path(), result.ensemble, space, config);
    SpecializedEnsemble loaded = load_ensemble(tmp.path(), space);
    auto a = infer(result.ensemble, data.features, data.rows, space);
    auto b = infer(loaded, data.features, data.rows, space);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(std::abs(a[i] - b[i]) <= 1e-6f);
    }
  }
}

TEST_CASE("empty training sets and bad dims are rejected") {
  LabelSpace space = test::demo_space();
  TrainData empty;
  empty.dim = space.size();
  empty.feature_size = 80 * 22;
  TrainingConfig config;
  CHECK_THROWS_AS(train_flat(empty, space, config, toy_spec()), Error);

  Rng rng(1);
  TrainData bad = separable_data(space, 8, rng);
  bad.feature_size = 100;
  bad.features.resize(bad.rows * 100);
  CHECK_THROWS_AS(train_flat(bad, space, config, toy_spec()), Error);
}

TEST_SUITE_END();
