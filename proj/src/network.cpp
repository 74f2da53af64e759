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

#include "instrec/network.hpp"

#include <fstream>
#include <map>

#include <json.hpp>

namespace instrec {

using nlohmann::json;

void NetworkSpec::validate() const {
  if (input_channels < 1 || input_height < 1 || input_width < 1) {
    fail(ErrorCategory::config, "network input dimensions must be positive");
  }
  for (int w : conv_widths) {
    if (w < 1) fail(ErrorCategory::config, "conv widths must be positive");
  }
  for (int w : head_widths) {
    if (w < 1) fail(ErrorCategory::config, "head widths must be positive");
  }
  if (output_dim < 1) fail(ErrorCategory::config, "output_dim must be >= 1");
  if (!(dropout_rate >= 0 && dropout_rate < 1)) {
    fail(ErrorCategory::config, "dropout_rate must be in [0, 1)");
  }
  if (!(leaky_slope > 0)) {
    fail(ErrorCategory::config, "leaky_slope must be positive");
  }
  int h = input_height, w = input_width;
  for (const auto& p : pools) {
    if (p[0] < 1 || p[1] < 1) fail(ErrorCategory::config, "pool sizes must be >= 1");
    h /= p[0];
    w /= p[1];
    if (h < 1 || w < 1) {
      fail(ErrorCategory::config, "pooling collapses the input below 1x1");
    }
  }
}

std::string NetworkSpec::to_json() const {
  json j;
  j["input_channels"] = input_channels;
  j["input_height"] = input_height;
  j["input_width"] = input_width;
  j["conv_widths"] = conv_widths;
  j["pools"] = pools;
  j["head_widths"] = head_widths;
  j["output_dim"] = output_dim;
  j["dropout_rate"] = dropout_rate;
  j["leaky_slope"] = leaky_slope;
  return j.dump();
}

NetworkSpec NetworkSpec::from_json(const std::string& text) {
  NetworkSpec spec;
  try {
    json j = json::parse(text);
    spec.input_channels = j.value("input_channels", spec.input_channels);
    spec.input_height = j.value("input_height", spec.input_height);
    spec.input_width = j.value("input_width", spec.input_width);
    if (j.contains("conv_widths")) j.at("conv_widths").get_to(spec.conv_widths);
    if (j.contains("pools")) j.at("pools").get_to(spec.pools);
    if (j.contains("head_widths")) j.at("head_widths").get_to(spec.head_widths);
    spec.output_dim = j.value("output_dim", spec.output_dim);
    spec.dropout_rate = j.value("dropout_rate", spec.dropout_rate);
    spec.leaky_slope = j.value("leaky_slope", spec.leaky_slope);
  } catch (const json::exception& e) {
    fail(ErrorCategory::parse, "network spec: " + std::string(e.what()));
  }
  spec.validate();
  return spec;
}

namespace {

struct Dims {
  int h1, w1, h2, w2, h3, w3;
};

Dims pooled_dims(const NetworkSpec& s) {
  Dims d{};
  d.h1 = s.input_height / s.pools[0][0];
  d.w1 = s.input_width / s.pools[0][1];
  d.h2 = d.h1 / s.pools[1][0];
  d.w2 = d.w1 / s.pools[1][1];
  d.h3 = d.h2 / s.pools[2][0];
  d.w3 = d.w2 / s.pools[2][1];
  return d;
}

}  // namespace

template <class T>
VggNet<T>::VggNet(NetworkSpec spec)
    : spec_((spec.validate(), std::move(spec))),
      h1_(pooled_dims(spec_).h1),
      w1_(pooled_dims(spec_).w1),
      h2_(pooled_dims(spec_).h2),
      w2_(pooled_dims(spec_).w2),
      h3_(pooled_dims(spec_).h3),
      w3_(pooled_dims(spec_).w3),
      conv1_(spec_.input_channels, spec_.conv_widths[0], 3, 3, 1),
      conv2_(spec_.conv_widths[0], spec_.conv_widths[0], 3, 3, 1),
      conv3_(spec_.conv_widths[0], spec_.conv_widths[1], 3, 3, 1),
      conv4_(spec_.conv_widths[1], spec_.conv_widths[1], 3, 3, 1),
      conv5_(spec_.conv_widths[1], spec_.conv_widths[2], 3, 3, 1),
      conv6_(spec_.conv_widths[2], spec_.conv_widths[2], 3, 3, 1),
      conv7_(spec_.conv_widths[2], spec_.conv_widths[2], h3_, w3_, 0),
      bn1_(spec_.conv_widths[0]),
      bn2_(spec_.conv_widths[0]),
      bn3_(spec_.conv_widths[1]),
      bn4_(spec_.conv_widths[1]),
      bn5_(spec_.conv_widths[2]),
      bn6_(spec_.conv_widths[2]),
      bn7_(spec_.conv_widths[2]),
      pool1_(spec_.pools[0][0], spec_.pools[0][1]),
      pool2_(spec_.pools[1][0], spec_.pools[1][1]),
      pool3_(spec_.pools[2][0], spec_.pools[2][1]),
      dense1_(spec_.conv_widths[2], spec_.head_widths[0]),
      dense2_(spec_.head_widths[0], spec_.head_widths[1]),
      dense3_(spec_.head_widths[1], spec_.output_dim),
      drop1_(static_cast<T>(spec_.dropout_rate)),
      drop2_(static_cast<T>(spec_.dropout_rate)),
      drop3_(static_cast<T>(spec_.dropout_rate)) {}

template <class T>
void VggNet<T>::init(Rng& rng) {
  conv1_.init(rng);
  conv2_.init(rng);
  conv3_.init(rng);
  conv4_.init(rng);
  conv5_.init(rng);
  conv6_.init(rng);
  conv7_.init(rng);
  dense1_.init(rng);
  dense2_.init(rng);
  dense3_.init(rng);
}

template <class T>
const std::vector<T>& VggNet<T>::forward(std::span<const T> x, int n, bool train,
                                         Rng* rng) {
  const int H = spec_.input_height, W = spec_.input_width;
  if (n < 1 || x.size() != static_cast<std::size_t>(n) * spec_.input_channels * H * W) {
    fail(ErrorCategory::shape,
         "network input must be a batch of (" +
             std::to_string(spec_.input_channels) + ", " + std::to_string(H) +
             ", " + std::to_string(W) + ") blocks");
  }
  n_ = n;
  const T slope = static_cast<T>(spec_.leaky_slope);
  const auto relu = [&](std::vector<T>& v) {
    nn::leaky_relu_forward(std::span<T>(v), slope);
  };

  conv1_.forward(x, n, H, W, a1_);
  bn1_.forward(std::span<T>(a1_), static_cast<std::size_t>(n) * H * W, train);
  relu(a1_);
  conv2_.forward(a1_, n, H, W, a2_);
  bn2_.forward(std::span<T>(a2_), static_cast<std::size_t>(n) * H * W, train);
  relu(a2_);
  pool1_.forward(a2_, spec_.conv_widths[0], n, H, W, b1_);

  conv3_.forward(b1_, n, h1_, w1_, a3_);
  bn3_.forward(std::span<T>(a3_), static_cast<std::size_t>(n) * h1_ * w1_, train);
  relu(a3_);
  conv4_.forward(a3_, n, h1_, w1_, a4_);
  bn4_.forward(std::span<T>(a4_), static_cast<std::size_t>(n) * h1_ * w1_, train);
  relu(a4_);
  pool2_.forward(a4_, spec_.conv_widths[1], n, h1_, w1_, b2_);

  conv5_.forward(b2_, n, h2_, w2_, a5_);
  bn5_.forward(std::span<T>(a5_), static_cast<std::size_t>(n) * h2_ * w2_, train);
  relu(a5_);
  conv6_.forward(a5_, n, h2_, w2_, a6_);
  bn6_.forward(std::span<T>(a6_), static_cast<std::size_t>(n) * h2_ * w2_, train);
  relu(a6_);
  pool3_.forward(a6_, spec_.conv_widths[2], n, h2_, w2_, b3_);

  conv7_.forward(b3_, n, h3_, w3_, a7_);
  bn7_.forward(std::span<T>(a7_), static_cast<std::size_t>(n), train);
  relu(a7_);

  // Squeeze: (channels, n) -> (n, channels).
  const int f = spec_.conv_widths[2];
  h0_.resize(static_cast<std::size_t>(n) * f);
  for (int c = 0; c < f; ++c) {
    for (int i = 0; i < n; ++i) {
      h0_[static_cast<std::size_t>(i) * f + c] = a7_[static_cast<std::size_t>(c) * n + i];
    }
  }

  drop1_.forward(std::span<T>(h0_), train, rng);
  dense1_.forward(h0_, n, h1b_);
  relu(h1b_);
  drop2_.forward(std::span<T>(h1b_), train, rng);
  dense2_.forward(h1b_, n, h2b_);
  relu(h2b_);
  drop3_.forward(std::span<T>(h2b_), train, rng);
  dense3_.forward(h2b_, n, out_);
  nn::sigmoid_forward(std::span<T>(out_));
  return out_;
}

template <class T>
void VggNet<T>::backward(std::span<const T> dout) {
  if (dout.size() != out_.size()) {
    fail(ErrorCategory::shape, "output gradient has the wrong size");
  }
  const T slope = static_cast<T>(spec_.leaky_slope);
  g_head_.assign(dout.begin(), dout.end());
  nn::sigmoid_backward<T>(out_, std::span<T>(g_head_));
  dense3_.backward(g_head_, &g_head2_);
  drop3_.backward(std::span<T>(g_head2_));
  nn::leaky_relu_backward<T>(h2b_, std::span<T>(g_head2_), slope);
  dense2_.backward(g_head2_, &g_head_);
  drop2_.backward(std::span<T>(g_head_));
  nn::leaky_relu_backward<T>(h1b_, std::span<T>(g_head_), slope);
  dense1_.backward(g_head_, &g_head2_);
  drop1_.backward(std::span<T>(g_head2_));

  // Un-squeeze: (n, channels) -> (channels, n).
  const int f = spec_.conv_widths[2];
  g_trunk_.resize(static_cast<std::size_t>(f) * n_);
  for (int c = 0; c < f; ++c) {
    for (int i = 0; i < n_; ++i) {
      g_trunk_[static_cast<std::size_t>(c) * n_ + i] =
          g_head2_[static_cast<std::size_t>(i) * f + c];
    }
  }

  nn::leaky_relu_backward<T>(a7_, std::span<T>(g_trunk_), slope);
  bn7_.backward(std::span<T>(g_trunk_));
  conv7_.backward(g_trunk_, &g_pool_);
  pool3_.backward(g_pool_, g_trunk_);

  nn::leaky_relu_backward<T>(a6_, std::span<T>(g_trunk_), slope);
  bn6_.backward(std::span<T>(g_trunk_));
  conv6_.backward(g_trunk_, &g_pool_);
  nn::leaky_relu_backward<T>(a5_, std::span<T>(g_pool_), slope);
  bn5_.backward(std::span<T>(g_pool_));
  conv5_.backward(g_pool_, &g_trunk_);
  pool2_.backward(g_trunk_, g_pool_);

  nn::leaky_relu_backward<T>(a4_, std::span<T>(g_pool_), slope);
  bn4_.backward(std::span<T>(g_pool_));
  conv4_.backward(g_pool_, &g_trunk_);
  nn::leaky_relu_backward<T>(a3_, std::span<T>(g_trunk_), slope);
  bn3_.backward(std::span<T>(g_trunk_));
  conv3_.backward(g_trunk_, &g_pool_);
  pool1_.backward(g_pool_, g_trunk_);

  nn::leaky_relu_backward<T>(a2_, std::span<T>(g_trunk_), slope);
  bn2_.backward(std::span<T>(g_trunk_));
  conv2_.backward(g_trunk_, &g_pool_);
  nn::leaky_relu_backward<T>(a1_, std::span<T>(g_pool_), slope);
  bn1_.backward(std::span<T>(g_pool_));
  conv1_.backward(g_pool_, nullptr);
}

template <class T>
void VggNet<T>::zero_grad() {
  for (auto& p : parameters()) {
    std::fill(p.grad->begin(), p.grad->end(), T(0));
  }
}

template <class T>
std::vector<TensorRef<T>> VggNet<T>::parameters() {
  std::vector<TensorRef<T>> refs;
  auto add_conv = [&](const std::string& name, nn::Conv2d<T>& c) {
    refs.push_back({name + ".weight", &c.weight_.value, &c.weight_.grad});
    refs.push_back({name + ".bias", &c.bias_.value, &c.bias_.grad});
  };
  auto add_bn = [&](const std::string& name, nn::BatchNorm2d<T>& b) {
    refs.push_back({name + ".gamma", &b.gamma_.value, &b.gamma_.grad});
    refs.push_back({name + ".beta", &b.beta_.value, &b.beta_.grad});
  };
  auto add_dense = [&](const std::string& name, nn::Dense<T>& d) {
    refs.push_back({name + ".weight", &d.weight_.value, &d.weight_.grad});
    refs.push_back({name + ".bias", &d.bias_.value, &d.bias_.grad});
  };
  add_conv("conv1", conv1_); add_bn("bn1", bn1_);
  add_conv("conv2", conv2_); add_bn("bn2", bn2_);
  add_conv("conv3", conv3_); add_bn("bn3", bn3_);
  add_conv("conv4", conv4_); add_bn("bn4", bn4_);
  add_conv("conv5", conv5_); add_bn("bn5", bn5_);
  add_conv("conv6", conv6_); add_bn("bn6", bn6_);
  add_conv("conv7", conv7_); add_bn("bn7", bn7_);
  add_dense("dense1", dense1_);
  add_dense("dense2", dense2_);
  add_dense("dense3", dense3_);
  return refs;
}

template <class T>
std::vector<TensorRef<T>> VggNet<T>::state() {
  auto refs = parameters();
  auto add_stats = [&](const std::string& name, nn::BatchNorm2d<T>& b) {
    refs.push_back({name + ".running_mean", &b.running_mean_, nullptr});
    refs.push_back({name + ".running_var", &b.running_var_, nullptr});
  };
  add_stats("bn1", bn1_);
  add_stats("bn2", bn2_);
  add_stats("bn3", bn3_);
  add_stats("bn4", bn4_);
  add_stats("bn5", bn5_);
  add_stats("bn6", bn6_);
  add_stats("bn7", bn7_);
  return refs;
}

template <class T>
std::size_t VggNet<T>::parameter_count() const {
  std::size_t total = 0;
  total += conv1_.parameter_count() + conv2_.parameter_count() +
           conv3_.parameter_count() + conv4_.parameter_count() +
           conv5_.parameter_count() + conv6_.parameter_count() +
           conv7_.parameter_count();
  total += bn1_.parameter_count() + bn2_.parameter_count() +
           bn3_.parameter_count() + bn4_.parameter_count() +
           bn5_.parameter_count() + bn6_.parameter_count() + bn7_.parameter_count();
  total += dense1_.parameter_count() + dense2_.parameter_count() +
           dense3_.parameter_count();
  return total;
}

template <class T>
std::vector<LayerInfo> VggNet<T>::layer_summary() const {
  std::vector<LayerInfo> rows;
  const auto& s = spec_;
  const int H = s.input_height, W = s.input_width;
  rows.push_back({"Input", {s.input_channels, H, W}, 0});
  auto conv_bn = [&](const nn::Conv2d<T>& c, const nn::BatchNorm2d<T>& b, int ch,
                     int h, int w) {
    rows.push_back({"Conv2d", {ch, h, w}, c.parameter_count()});
    rows.push_back({"BatchNormalization", {ch, h, w}, b.parameter_count()});
  };
  conv_bn(conv1_, bn1_, s.conv_widths[0], H, W);
  conv_bn(conv2_, bn2_, s.conv_widths[0], H, W);
  rows.push_back({"MaxPool2d", {s.conv_widths[0], h1_, w1_}, 0});
  conv_bn(conv3_, bn3_, s.conv_widths[1], h1_, w1_);
  conv_bn(conv4_, bn4_, s.conv_widths[1], h1_, w1_);
  rows.push_back({"MaxPool2d", {s.conv_widths[1], h2_, w2_}, 0});
  conv_bn(conv5_, bn5_, s.conv_widths[2], h2_, w2_);
  conv_bn(conv6_, bn6_, s.conv_widths[2], h2_, w2_);
  rows.push_back({"MaxPool2d", {s.conv_widths[2], h3_, w3_}, 0});
  conv_bn(conv7_, bn7_, s.conv_widths[2], 1, 1);
  rows.push_back({"Squeeze", {s.conv_widths[2]}, 0});
  rows.push_back({"Dropout", {s.conv_widths[2]}, 0});
  rows.push_back({"Dense", {s.head_widths[0]}, dense1_.parameter_count()});
  rows.push_back({"Dropout", {s.head_widths[0]}, 0});
  rows.push_back({"Dense", {s.head_widths[1]}, dense2_.parameter_count()});
  rows.push_back({"Dropout", {s.head_widths[1]}, 0});
  rows.push_back({"Dense", {s.output_dim}, dense3_.parameter_count()});
  rows.push_back({"Sigmoid", {s.output_dim}, 0});
  return rows;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {
constexpr char kMagic[4] = {'I', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

template <class T>
void save_checkpoint(const std::filesystem::path& path, VggNet<T>& net,
                     const CheckpointMeta& meta) {
  auto state = net.state();
  json header;
  header["format_version"] = kVersion;
  header["spec"] = json::parse(net.spec().to_json());
  header["meta"] = {{"epoch", meta.epoch},
                    {"seed", meta.seed},
                    {"loss", meta.loss_name},
                    {"label_fingerprint", meta.label_fingerprint},
                    {"labels", meta.labels}};
  auto& tensors = header["tensors"] = json::array();
  for (const auto& ref : state) {
    tensors.push_back({{"name", ref.name}, {"size", ref.value->size()}});
  }
  const std::string head = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCategory::io, "cannot write checkpoint " + path.string());
  out.write(kMagic, 4);
  const auto version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint64_t head_len = head.size();
  out.write(reinterpret_cast<const char*>(&head_len), sizeof(head_len));
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  std::vector<float> scratch;
  for (const auto& ref : state) {
    scratch.resize(ref.value->size());
    for (std::size_t i = 0; i < scratch.size(); ++i) {
      scratch[i] = static_cast<float>((*ref.value)[i]);
    }
    out.write(reinterpret_cast<const char*>(scratch.data()),
              static_cast<std::streamsize>(scratch.size() * sizeof(float)));
  }
  if (!out) fail(ErrorCategory::io, "failed writing checkpoint " + path.string());
}

template <class T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& path,
                                    std::optional<std::uint64_t> expect_fingerprint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorCategory::missing_checkpoint,
         "cannot open checkpoint " + path.string());
  }
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t head_len = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&head_len), sizeof(head_len));
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    fail(ErrorCategory::parse, path.string() + ": not a checkpoint file");
  }
  if (version != kVersion) {
    fail(ErrorCategory::parse, path.string() + ": unsupported checkpoint version " +
                                   std::to_string(version));
  }
  std::string head(head_len, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head_len));
  if (!in) fail(ErrorCategory::parse, path.string() + ": truncated header");

  json header;
  try {
    header = json::parse(head);
  } catch (const json::exception& e) {
    fail(ErrorCategory::parse, path.string() + ": bad header: " + e.what());
  }

  LoadedCheckpoint<T> loaded;
  loaded.net = std::make_unique<VggNet<T>>(
      NetworkSpec::from_json(header.at("spec").dump()));
  const auto& meta = header.at("meta");
  loaded.meta.epoch = meta.value("epoch", 0);
  loaded.meta.seed = meta.value("seed", std::uint64_t{0});
  loaded.meta.loss_name = meta.value("loss", std::string());
  loaded.meta.label_fingerprint = meta.value("label_fingerprint", std::uint64_t{0});
  if (meta.contains("labels")) {
    meta.at("labels").get_to(loaded.meta.labels);
  }
  if (expect_fingerprint &&
      loaded.meta.label_fingerprint != *expect_fingerprint) {
    fail(ErrorCategory::state,
         "checkpoint was trained against a different label space "
         "(fingerprint mismatch); refusing to load " + path.string());
  }

  auto state = loaded.net->state();
  std::map<std::string, TensorRef<T>*> by_name;
  for (auto& ref : state) by_name[ref.name] = &ref;
  std::vector<float> scratch;
  for (const auto& tensor : header.at("tensors")) {
    const std::string name = tensor.at("name").get<std::string>();
    const std::size_t size = tensor.at("size").get<std::size_t>();
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      fail(ErrorCategory::parse, path.string() + ": unknown tensor '" + name + "'");
    }
    if (it->second->value->size() != size) {
      fail(ErrorCategory::shape, path.string() + ": tensor '" + name +
                                     "' has size " + std::to_string(size) +
                                     ", spec expects " +
                                     std::to_string(it->second->value->size()));
    }
    scratch.resize(size);
    in.read(reinterpret_cast<char*>(scratch.data()),
            static_cast<std::streamsize>(size * sizeof(float)));
    if (!in) fail(ErrorCategory::parse, path.string() + ": truncated tensor data");
    for (std::size_t i = 0; i < size; ++i) {
      (*it->second->value)[i] = static_cast<T>(scratch[i]);
    }
  }
  return loaded;
}

template class VggNet<float>;
template class VggNet<double>;
template void save_checkpoint<float>(const std::filesystem::path&, VggNet<float>&,
                                     const CheckpointMeta&);
template void save_checkpoint<double>(const std::filesystem::path&, VggNet<double>&,
                                      const CheckpointMeta&);
template LoadedCheckpoint<float> load_checkpoint<float>(
    const std::filesystem::path&, std::optional<std::uint64_t>);
template LoadedCheckpoint<double> load_checkpoint<double>(
    const std::filesystem::path&, std::optional<std::uint64_t>);

}  // namespace instrec
