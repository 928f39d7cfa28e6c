// Copyright 2026 The CanonSLR Authors
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

#include "canonslr/backbone.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "canonslr/error.h"
#include "canonslr/ops.h"

namespace canonslr {

bool TmeOptions::enabled(int stage) const {
  return std::find(stages.begin(), stages.end(), stage) != stages.end();
}

void validate(const TmeOptions& options) {
  for (std::size_t i = 0; i < options.stages.size(); ++i) {
    const int s = options.stages[i];
    if (s != 3 && s != 4) {
      throw InvalidArgument("tme stage " + std::to_string(s) + " is not one of {3, 4}");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (options.stages[j] == s) throw InvalidArgument("duplicate tme stage");
    }
  }
  if (options.k < 1) throw InvalidArgument("tme k must be >= 1");
}

template <typename T>
Var<T>& ParameterStore<T>::add(const std::string& name, Tensor<T> value) {
  if (contains(name)) throw InvalidArgument("duplicate parameter " + name);
  entries_.emplace_back(name, Var<T>(std::move(value), true));
  return entries_.back().second;
}

template <typename T>
const Var<T>& ParameterStore<T>::get(const std::string& name) const {
  for (const auto& [n, v] : entries_) {
    if (n == name) return v;
  }
  throw InvalidArgument("unknown parameter " + name);
}

template <typename T>
Var<T>& ParameterStore<T>::get(const std::string& name) {
  for (auto& [n, v] : entries_) {
    if (n == name) return v;
  }
  throw InvalidArgument("unknown parameter " + name);
}

template <typename T>
bool ParameterStore<T>::contains(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return true;
  }
  return false;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& e : entries_) e.second.node()->zero_grad();
}

template <typename T>
std::string ParameterStore<T>::manifest() const {
  std::ostringstream os;
  for (const auto& [name, v] : entries_) {
    os << name << '\t';
    for (std::size_t i = 0; i < v.shape().size(); ++i) {
      if (i) os << 'x';
      os << v.shape()[i];
    }
    os << '\n';
  }
  return os.str();
}

namespace {

template <typename T>
Tensor<T> uniform(Shape shape, double bound, std::mt19937_64& rng) {
  Tensor<T> t(std::move(shape));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.values()) v = static_cast<T>(dist(rng));
  return t;
}

// He-uniform for layers followed by ReLU.
template <typename T>
Tensor<T> he(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  return uniform<T>(std::move(shape), std::sqrt(6.0 / static_cast<double>(fan_in)), rng);
}

}  // namespace

template <typename T>
Recognizer<T>::Recognizer(std::size_t vocab_size, std::uint64_t seed)
    : vocab_size_(vocab_size) {
  if (vocab_size < 1) throw InvalidArgument("Recognizer: vocab_size must be >= 1");
  std::mt19937_64 rng(seed);
  auto conv = [&](const std::string& name, std::size_t out, std::size_t in, std::size_t k) {
    params_.add(name + ".weight", he<T>({out, in, k, k}, in * k * k, rng));
    params_.add(name + ".bias", Tensor<T>({out}));
  };
  conv("stem", kStemWidth, 3, 3);
  std::size_t in = kStemWidth;
  for (int s = 1; s <= 4; ++s) {
    const std::size_t c = kStageWidths[s - 1];
    const std::string p = "stage" + std::to_string(s);
    conv(p + ".conv1", c, in, 3);
    conv(p + ".conv2", c, c, 3);
    if (s > 1) conv(p + ".shortcut", c, in, 1);
    in = c;
  }
  for (int s = 3; s <= 4; ++s) {
    const std::size_t c = kStageWidths[s - 1];
    const std::size_t d = std::min<std::size_t>(64, c);
    const std::string p = "tme" + std::to_string(s);
    const double b = 1.0 / std::sqrt(static_cast<double>(c));
    params_.add(p + ".query", uniform<T>({c, d}, b, rng));
    params_.add(p + ".key", uniform<T>({c, d}, b, rng));
    params_.add(p + ".gcn", he<T>({c, c}, c, rng));
    params_.add(p + ".alpha", Tensor<T>({1}));
  }
  const std::size_t c4 = kStageWidths[3];
  for (int b = 1; b <= 2; ++b) {
    const std::string p = "temporal.conv" + std::to_string(b);
    params_.add(p + ".weight", he<T>({c4, c4, kTemporalKernel}, c4 * kTemporalKernel, rng));
    params_.add(p + ".bias", Tensor<T>({c4}));
  }
  const std::size_t classes = vocab_size + 1;
  const double cb = 1.0 / std::sqrt(static_cast<double>(c4));
  params_.add("conv_classifier.weight", uniform<T>({classes, c4}, cb, rng));
  params_.add("conv_classifier.bias", uniform<T>({classes}, cb, rng));
  const double lb = 1.0 / std::sqrt(static_cast<double>(kLstmHidden));
  for (const char* dir : {"fwd", "bwd"}) {
    const std::string p = std::string("lstm.") + dir;
    params_.add(p + ".input", uniform<T>({4 * kLstmHidden, c4}, lb, rng));
    params_.add(p + ".recurrent", uniform<T>({4 * kLstmHidden, kLstmHidden}, lb, rng));
    params_.add(p + ".bias", uniform<T>({4 * kLstmHidden}, lb, rng));
  }
  const double sb = 1.0 / std::sqrt(static_cast<double>(2 * kLstmHidden));
  params_.add("classifier.weight", uniform<T>({classes, 2 * kLstmHidden}, sb, rng));
  params_.add("classifier.bias", uniform<T>({classes}, sb, rng));
}

template <typename T>
Var<T> Recognizer<T>::residual_stage(Tape<T>* tape, int index, const Var<T>& x) const {
  const std::string p = "stage" + std::to_string(index);
  const int stride = index == 1 ? 1 : 2;
  Var<T> h = ops::conv2d(tape, x, params_.get(p + ".conv1.weight"),
                         params_.get(p + ".conv1.bias"), stride, 1);
  h = ops::relu(tape, h);
  h = ops::conv2d(tape, h, params_.get(p + ".conv2.weight"), params_.get(p + ".conv2.bias"), 1, 1);
  Var<T> skip = x;
  if (index > 1) {
    skip = ops::conv2d(tape, x, params_.get(p + ".shortcut.weight"),
                       params_.get(p + ".shortcut.bias"), 2, 0);
  }
  return ops::relu(tape, ops::add(tape, h, skip));
}

template <typename T>
tme::Params<T> Recognizer<T>::tme_params(int stage) const {
  const std::string p = "tme" + std::to_string(stage);
  return {params_.get(p + ".query"), params_.get(p + ".key"), params_.get(p + ".gcn"),
          params_.get(p + ".alpha")};
}

template <typename T>
VisualEncoding<T> Recognizer<T>::encode_visual(Tape<T>* tape, const Tensor<T>& frames,
                                               const TmeOptions& tme) const {
  validate(tme);
  const auto& s = frames.shape();
  if (s.size() != 4 || s[1] != 3) {
    throw InvalidArgument("encode_visual: expected [T,3,H,W], got " + shape_string(s));
  }
  if (s[0] < 1 || s[2] == 0 || s[3] == 0 || s[2] % kSpatialStride || s[3] % kSpatialStride) {
    throw InvalidArgument("encode_visual: H and W must be positive multiples of 16, got " +
                          shape_string(s));
  }
  if (!all_finite(frames)) throw InvalidArgument("encode_visual: non-finite frames");
  const std::size_t t = s[0], plane = s[2] * s[3];
  Tensor<T> stacked({3, t, s[2], s[3]});
  for (std::size_t f = 0; f < t; ++f) {
    for (std::size_t c = 0; c < 3; ++c) {
      std::copy_n(frames.data() + (f * 3 + c) * plane, plane,
                  stacked.data() + (c * t + f) * plane);
    }
  }
  VisualEncoding<T> out;
  Var<T> x = ops::conv2d(tape, Var<T>(std::move(stacked)), params_.get("stem.weight"),
                         params_.get("stem.bias"), 2, 1);
  x = ops::relu(tape, x);
  for (int l = 1; l <= 4; ++l) {
    x = residual_stage(tape, l, x);
    if (tme.enabled(l)) x = tme::enhance(tape, x, tme_params(l), tme.k);
    out.stages.push_back(x);
  }
  out.pooled = ops::spatial_mean(tape, x);
  return out;
}

template <typename T>
RecognizerOutput<T> Recognizer<T>::temporal_head(Tape<T>* tape, const Var<T>& pooled) const {
  const auto& s = pooled.shape();
  if (s.size() != 2 || s[1] != kStageWidths[3]) {
    throw InvalidArgument("temporal_head: expected [T,128], got " + shape_string(s));
  }
  if (s[0] < kTemporalStride) {
    throw InvalidArgument("temporal_head: T=" + std::to_string(s[0]) +
                          " collapses below one frame (need T >= 4)");
  }
  const int pad = static_cast<int>(kTemporalKernel / 2);
  Var<T> h = pooled;
  for (int b = 1; b <= 2; ++b) {
    const std::string p = "temporal.conv" + std::to_string(b);
    h = ops::conv1d(tape, h, params_.get(p + ".weight"), params_.get(p + ".bias"), pad);
    h = ops::relu(tape, h);
    h = ops::max_pool1d(tape, h, 2);
  }
  RecognizerOutput<T> out;
  out.conv_logits = ops::linear(tape, h, params_.get("conv_classifier.weight"),
                                params_.get("conv_classifier.bias"));
  const ops::LstmWeights<T> fwd{params_.get("lstm.fwd.input"), params_.get("lstm.fwd.recurrent"),
                                params_.get("lstm.fwd.bias")};
  const ops::LstmWeights<T> bwd{params_.get("lstm.bwd.input"), params_.get("lstm.bwd.recurrent"),
                                params_.get("lstm.bwd.bias")};
  out.hidden = ops::bilstm(tape, h, fwd, bwd);
  out.seq_logits = ops::linear(tape, out.hidden, params_.get("classifier.weight"),
                               params_.get("classifier.bias"));
  return out;
}

template <typename T>
RecognizerOutput<T> Recognizer<T>::forward(Tape<T>* tape, const Tensor<T>& frames,
                                           const TmeOptions& tme) const {
  return temporal_head(tape, encode_visual(tape, frames, tme).pooled);
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template class Recognizer<float>;
template class Recognizer<double>;

}  // namespace canonslr
