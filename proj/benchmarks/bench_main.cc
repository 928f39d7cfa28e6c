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

#include <benchmark/benchmark.h>

#include <random>

#include "canonslr/backbone.h"
#include "canonslr/ctc.h"
#include "canonslr/ops.h"
#include "canonslr/tme.h"
#include "canonslr/trainer.h"

namespace canonslr {
namespace {

template <typename T>
Tensor<T> uniform(Shape shape, std::uint64_t seed, double lo = -1, double hi = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(u(rng));
  return t;
}

// Scalar sum, so backward() has a root.
Var<float> total(Tape<float>* tape, const Var<float>& y) {
  float acc = 0;
  for (float v : y.value().values()) acc += v;
  Node<float>* yn = y.node();
  return Tape<float>::record(tape, Tensor<float>({1}, {acc}), {y},
                             [yn](const Tensor<float>& g) {
                               auto& dy = yn->grad_ref();
                               for (auto& v : dy.values()) v += g[0];
                             });
}

// Stage-2 sized 3x3 convolution over a clip: [C, T, H, W].
void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto side = static_cast<std::size_t>(state.range(1));
  Var<float> x(uniform<float>({c, 16, side, side}, 1), true);
  Var<float> w(uniform<float>({2 * c, c, 3, 3}, 2), true);
  Var<float> b(Tensor<float>({2 * c}), true);
  for (auto _ : state) {
    Tape<float> tape;
    const auto y = ops::conv2d(&tape, x, w, b, 2, 1);
    const auto loss = total(&tape, y);
    tape.backward(loss);
    benchmark::DoNotOptimize(w.grad().data());
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Args({16, 16})->Args({32, 8});

void BM_CtcLossAndGrad(benchmark::State& state) {
  const auto frames = static_cast<std::size_t>(state.range(0));
  const auto logits = uniform<double>({frames, 21}, 3, -3, 3);
  const std::vector<int> target = {3, 7, 7, 12};
  for (auto _ : state) {
    benchmark::DoNotOptimize(ctc::loss_and_grad(logits, target, 20).loss);
  }
}
BENCHMARK(BM_CtcLossAndGrad)->Arg(10)->Arg(40);

void BM_BeamDecode(benchmark::State& state) {
  const auto logits = uniform<float>({10, 21}, 4, -3, 3);
  const int width = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ctc::beam_decode(logits, width, 20).size());
  }
}
BENCHMARK(BM_BeamDecode)->Arg(1)->Arg(10);

void BM_TmeEnhance(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const std::size_t d = std::min<std::size_t>(64, c);
  Var<float> stage(uniform<float>({c, 16, 4, 4}, 5), true);
  tme::Params<float> p{Var<float>(uniform<float>({c, d}, 6), true),
                       Var<float>(uniform<float>({c, d}, 7), true),
                       Var<float>(uniform<float>({c, c}, 8), true),
                       Var<float>(Tensor<float>({1}, {0.5f}), true)};
  for (auto _ : state) {
    Tape<float> tape;
    const auto y = tme::enhance(&tape, stage, p, 4);
    tape.backward(total(&tape, y));
    benchmark::DoNotOptimize(p.gcn.grad().data());
  }
}
BENCHMARK(BM_TmeEnhance)->Arg(64)->Arg(128);

// One full training-step graph at the default 32x32 frame size.
void BM_RecognizerStep(benchmark::State& state) {
  Recognizer<float> model(20, 0);
  const auto frames = uniform<float>({30, 3, 32, 32}, 9, 0, 1);
  const std::vector<int> glosses = {1, 5, 9};
  const TmeOptions tme{{3, 4}, 4};
  for (auto _ : state) {
    model.params().zero_grad();
    Tape<float> tape;
    const auto terms = sample_loss<float>(&tape, model, frames, glosses, View::kFront, nullptr,
                                          tme, ssd::DistillConfig{});
    tape.backward(terms.total);
    benchmark::DoNotOptimize(terms.total.value()[0]);
  }
}
BENCHMARK(BM_RecognizerStep)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace canonslr

BENCHMARK_MAIN();
