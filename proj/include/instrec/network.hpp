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

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "instrec/nn/layers.hpp"

namespace instrec {

// Architecture description: three conv-conv-pool blocks, a full-extent
// collapse convolution, then a three-layer affine head with sigmoid outputs.
// Width/height parameters are configurable so tests can run scaled-down
// instances of the same topology.
struct NetworkSpec {
  int input_channels = 1;
  int input_height = 80;
  int input_width = 22;
  std::array<int, 3> conv_widths{64, 128, 256};
  std::array<std::array<int, 2>, 3> pools{{{2, 2}, {2, 2}, {3, 5}}};
  std::array<int, 2> head_widths{256, 128};
  int output_dim = 85;
  double dropout_rate = 0.5;
  double leaky_slope = 0.01;

  void validate() const;
  bool operator==(const NetworkSpec&) const = default;

  std::string to_json() const;
  static NetworkSpec from_json(const std::string& text);
};

struct LayerInfo {
  std::string kind;            // Conv2d, BatchNorm2d, MaxPool2d, Squeeze, ...
  std::vector<int> out_shape;  // (c, h, w) in the trunk, (f) in the head
  std::size_t parameters = 0;
};

template <class T>
struct TensorRef {
  std::string name;
  std::vector<T>* value;
  std::vector<T>* grad;  // null for non-trainable buffers
};

// The convolutional classifier. Single-writer while training; eval-mode
// forward is a pure function of (parameters, input).
template <class T>
class VggNet {
 public:
  explicit VggNet(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }

  void init(Rng& rng);

  // x: batch of (input_channels, input_height, input_width) blocks,
  // length n * channels * height * width. Returns (n, output_dim) in (0,1).
  const std::vector<T>& forward(std::span<const T> x, int n, bool train,
                                Rng* rng = nullptr);

  // dout: gradient of the loss w.r.t. the forward output. Accumulates
  // parameter gradients; must directly follow its forward call.
  void backward(std::span<const T> dout);

  void zero_grad();

  std::vector<TensorRef<T>> parameters();       // trainable
  std::vector<TensorRef<T>> state();            // trainable + running stats
  std::size_t parameter_count() const;

  // Table-style audit of the architecture: one row per layer with output
  // shape and parameter count.
  std::vector<LayerInfo> layer_summary() const;

 private:
  NetworkSpec spec_;
  int h1_, w1_, h2_, w2_, h3_, w3_;  // spatial dims after each pool

  nn::Conv2d<T> conv1_, conv2_, conv3_, conv4_, conv5_, conv6_, conv7_;
  nn::BatchNorm2d<T> bn1_, bn2_, bn3_, bn4_, bn5_, bn6_, bn7_;
  nn::MaxPool2d<T> pool1_, pool2_, pool3_;
  nn::Dense<T> dense1_, dense2_, dense3_;
  nn::Dropout<T> drop1_, drop2_, drop3_;

  int n_ = 0;
  // Forward activations, kept for backward.
  std::vector<T> a1_, a2_, b1_, a3_, a4_, b2_, a5_, a6_, b3_, a7_;
  std::vector<T> h0_, h1b_, h2b_, out_;
  // Gradient scratch.
  std::vector<T> g_trunk_, g_pool_, g_head_, g_head2_;
};

using VggNetF = VggNet<float>;
using VggNetD = VggNet<double>;

// Training provenance stored with the weights.
struct CheckpointMeta {
  int epoch = 0;
  std::uint64_t seed = 0;
  std::string loss_name;
  std::uint64_t label_fingerprint = 0;
  std::vector<std::string> labels;  // label names in index order
};

// Self-describing container: versioned JSON header plus named float32
// arrays. Loading validates shapes against the spec and, when
// `expect_fingerprint` is given, the label-space fingerprint.
template <class T>
void save_checkpoint(const std::filesystem::path& path, VggNet<T>& net,
                     const CheckpointMeta& meta);

template <class T>
struct LoadedCheckpoint {
  std::unique_ptr<VggNet<T>> net;
  CheckpointMeta meta;
};

template <class T>
LoadedCheckpoint<T> load_checkpoint(
    const std::filesystem::path& path,
    std::optional<std::uint64_t> expect_fingerprint = std::nullopt);

}  // namespace instrec
