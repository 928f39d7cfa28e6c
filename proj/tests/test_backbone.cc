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
#include "canonslr/error.h"
#include "canonslr/trainer.h"
#include "doctest.h"
#include "support.h"

namespace canonslr {
namespace {

Tensor<double> frames_d(std::size_t t, std::size_t hw, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return testing::random_tensor<double>({t, 3, hw, hw}, rng, 0, 1);
}

TEST_CASE("recognizer shapes and temporal downsampling") {
  const Recognizer<float> model(5, 1);
  CHECK(model.num_classes() == 6);
  CHECK(model.blank() == 5);
  for (auto [t, expect] : {std::pair{16ul, 4ul}, std::pair{4ul, 1ul}, std::pair{9ul, 2ul}}) {
    const auto f = frames_d(t, 16, t).cast<float>();
    const auto enc = model.encode_visual(nullptr, f, {});
    REQUIRE(enc.stages.size() == 4);
    for (std::size_t l = 0; l < 4; ++l) {
      const std::size_t side = l == 0 ? 8 : 8 >> l;
      CHECK(enc.stages[l].shape() == Shape{kStageWidths[l], t, side, side});
    }
    CHECK(enc.pooled.shape() == Shape{t, 128});
    const auto out = model.forward(nullptr, f, {{3, 4}, 4});
    CHECK(out.conv_logits.shape() == Shape{expect, 6});
    CHECK(out.seq_logits.shape() == Shape{expect, 6});
    CHECK(out.hidden.shape() == Shape{expect, 256});
  }
  CHECK_THROWS_AS(model.forward(nullptr, frames_d(3, 16, 0).cast<float>(), {}), InvalidArgument);
  CHECK_THROWS_AS(model.forward(nullptr, frames_d(8, 24, 0).cast<float>(), {}), InvalidArgument);
  CHECK_THROWS_AS(model.forward(nullptr, Tensor<float>({8, 1, 16, 16}), {}), InvalidArgument);
  CHECK_THROWS_AS(Recognizer<float>(0, 0), InvalidArgument);
}

TEST_CASE("tme options") {
  CHECK_NOTHROW(validate(TmeOptions{{3, 4}, 4}));
  CHECK_NOTHROW(validate(TmeOptions{{}, 4}));
  CHECK_THROWS_AS(validate(TmeOptions{{1}, 4}), InvalidArgument);
  CHECK_THROWS_AS(validate(TmeOptions{{3, 3}, 4}), InvalidArgument);
  CHECK_THROWS_AS(validate(TmeOptions{{3}, 0}), InvalidArgument);
  CHECK(TmeOptions{{4}, 4}.enabled(4));
  CHECK_FALSE(TmeOptions{{4}, 4}.enabled(3));
}

TEST_CASE("zero fusion weight reproduces the plain forward pass bit for bit") {
  const Recognizer<float> model(4, 7);
  const auto f = frames_d(12, 16, 3).cast<float>();
  const auto plain = model.forward(nullptr, f, {});
  for (const auto& stages : {std::vector<int>{3}, std::vector<int>{4}, std::vector<int>{3, 4}}) {
    const auto with = model.forward(nullptr, f, {stages, 4});
    CHECK(with.conv_logits.value().storage() == plain.conv_logits.value().storage());
    CHECK(with.seq_logits.value().storage() == plain.seq_logits.value().storage());
  }
  // A nonzero weight changes the output.
  Recognizer<float> tuned(4, 7);
  tuned.params().get("tme4.alpha").mutable_value()[0] = 0.5f;
  const auto moved = tuned.forward(nullptr, f, {{4}, 4});
  CHECK(moved.seq_logits.value().storage() != plain.seq_logits.value().storage());
}

TEST_CASE("initialization is deterministic and manifests are stable") {
  const Recognizer<float> a(6, 42), b(6, 42), c(6, 43);
  CHECK(a.params().manifest() == b.params().manifest());
  CHECK(a.params().manifest() == c.params().manifest());
  bool differs = false;
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    CHECK(a.params().entries()[i].second.value().storage() ==
          b.params().entries()[i].second.value().storage());
    differs = differs || a.params().entries()[i].second.value().storage() !=
                             c.params().entries()[i].second.value().storage();
  }
  CHECK(differs);
  for (const char* name : {"stem.weight", "stage1.conv1.weight", "stage2.shortcut.weight",
                           "tme3.query", "tme4.gcn", "tme4.alpha", "temporal.conv2.bias",
                           "conv_classifier.weight", "lstm.bwd.recurrent", "classifier.bias"}) {
    CHECK_MESSAGE(a.params().contains(name), name);
  }
  CHECK_FALSE(a.params().contains("stage1.shortcut.weight"));
  CHECK(a.params().get("tme3.alpha").value()[0] == 0.0f);
  CHECK(a.params().get("classifier.weight").shape() == Shape{7, 256});
  CHECK_THROWS_AS(a.params().get("nope"), InvalidArgument);

  const auto f = frames_d(8, 16, 1).cast<float>();
  CHECK(a.forward(nullptr, f, {{3, 4}, 4}).seq_logits.value().storage() ==
        b.forward(nullptr, f, {{3, 4}, 4}).seq_logits.value().storage());

  Recognizer<double> d(6, 0);
  d.load_from(a);
  CHECK(d.params().get("stem.weight").value()[3] ==
        static_cast<double>(a.params().get("stem.weight").value()[3]));
  const Recognizer<float> other_vocab(5, 42);
  CHECK_THROWS_AS(d.load_from(other_vocab), InvalidArgument);
}

TEST_CASE("full-model loss gradients match central differences") {
  const std::size_t vocab = 3;
  Recognizer<double> model(vocab, 11);
  // Nonzero fusion weights so the enhancement path carries gradient.
  model.params().get("tme3.alpha").mutable_value()[0] = 0.3;
  model.params().get("tme4.alpha").mutable_value()[0] = -0.2;
  const TmeOptions tme{{3, 4}, 2};
  const auto frames = frames_d(8, 16, 5);
  const std::vector<int> glosses = {0, 2};
  std::mt19937_64 rng(9);
  const auto teacher = testing::random_tensor<double>({3, vocab + 1}, rng, -2, 2);
  const ssd::DistillConfig distill{2.0, 5.0, View::kFront};

  std::vector<Var<double>> inputs;
  for (auto& [name, p] : model.params().entries()) inputs.push_back(p);
  const auto check = testing::check_gradients(
      inputs,
      [&](Tape<double>* tape) {
        return sample_loss<double>(tape, model, frames, glosses, View::kR45, &teacher, tme,
                                   distill)
            .total;
      },
      1e-5, 3);
  MESSAGE("full model: " << check.checked << " entries, max rel err " << check.max_rel_error);
  CHECK(check.checked >= 3 * inputs.size());
  CHECK(check.max_rel_error < 1e-4);
}

}  // namespace
}  // namespace canonslr
