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

#include <cmath>
#include <random>

#include "canonslr/error.h"
#include "canonslr/ssd.h"
#include "doctest.h"
#include "support.h"

namespace canonslr {
namespace {

using testing::random_tensor;

ssd::DistillConfig config(double temperature) {
  ssd::DistillConfig c;
  c.temperature = temperature;
  return c;
}

TEST_CASE("temporal alignment") {
  std::mt19937_64 rng(31);
  const auto t4 = random_tensor<double>({4, 3}, rng);
  CHECK(ssd::align_temporal(t4, 4) == t4);
  const auto one = random_tensor<double>({1, 3}, rng);
  const auto three = ssd::align_temporal(one, 3);
  REQUIRE(three.shape() == Shape{3, 3});
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t k = 0; k < 3; ++k) CHECK(three(t, k) == one(0, k));
  const auto ramp = ssd::align_temporal(Tensor<double>({2, 1}, {0, 2}), 3);
  CHECK(ramp == Tensor<double>({3, 1}, {0, 1, 2}));
  CHECK_THROWS_AS(ssd::align_temporal(t4, 0), InvalidArgument);
  // Endpoints map onto endpoints.
  const auto down = ssd::align_temporal(t4, 2);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(down(0, k) == t4(0, k));
    CHECK(down(1, k) == doctest::Approx(t4(3, k)));
  }
}

TEST_CASE("distillation loss hand cases") {
  std::mt19937_64 rng(32);
  const auto z = random_tensor<double>({5, 4}, rng, -3, 3);
  CHECK(ssd::loss_value(z, z, View::kR90, config(8)) == doctest::Approx(0.0).epsilon(1e-15));
  const auto other = random_tensor<double>({5, 4}, rng, -3, 3);
  CHECK(ssd::loss_value(z, other, View::kFront, config(8)) == 0.0);
  // Teacher softmax (0.8, 0.2) against a uniform student at T_d = 1.
  Tensor<double> teacher({1, 2}, {std::log(0.8), std::log(0.2)});
  Tensor<double> student({1, 2}, {0.0, 0.0});
  const double kl = 0.8 * std::log(0.8 / 0.5) + 0.2 * std::log(0.2 / 0.5);
  CHECK(kl == doctest::Approx(0.19274).epsilon(1e-5));
  CHECK(ssd::loss_value(teacher, student, View::kL30, config(1)) == doctest::Approx(kl).epsilon(1e-12));
  // T_d^2 scaling is included.
  Tensor<double> t2({1, 2}, {2 * std::log(0.8), 2 * std::log(0.2)});
  CHECK(ssd::loss_value(t2, student, View::kL30, config(2)) == doctest::Approx(4 * kl).epsilon(1e-12));
  CHECK_THROWS_AS(ssd::loss_value(z, random_tensor<double>({4, 4}, rng), View::kR45, config(8)),
                  InvalidArgument);
  ssd::DistillConfig bad;
  bad.temperature = 0;
  CHECK_THROWS_AS(ssd::validate(bad), InvalidArgument);
  bad.temperature = 1;
  bad.weight = -1;
  CHECK_THROWS_AS(ssd::validate(bad), InvalidArgument);
}

TEST_CASE("distillation loss properties") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t frames = 1 + trial % 6, classes = 2 + trial % 4;
    const auto a = random_tensor<double>({frames, classes}, rng, -4, 4);
    const auto b = random_tensor<double>({frames, classes}, rng, -4, 4);
    const auto cfg = config(0.5 + trial % 9);
    const double l = ssd::loss_value(a, b, View::kU30, cfg);
    CHECK(l >= 0);
    CHECK(ssd::loss_value(a, b, View::kFront, cfg) == 0.0);
    // Per-frame shifts of either stream leave the loss unchanged.
    auto shifted_a = a, shifted_b = b;
    for (std::size_t t = 0; t < frames; ++t) {
      const double sa = (double(t) + 1) * 1.7, sb = -(double(t) + 2) * 0.9;
      for (std::size_t k = 0; k < classes; ++k) {
        shifted_a(t, k) += sa;
        shifted_b(t, k) += sb;
      }
    }
    CHECK(ssd::loss_value(shifted_a, shifted_b, View::kU30, cfg) == doctest::Approx(l).epsilon(1e-9));
  }
  // Large temperatures stay finite.
  const auto a = random_tensor<double>({3, 4}, rng, -4, 4);
  const auto b = random_tensor<double>({3, 4}, rng, -4, 4);
  for (double t : {10.0, 100.0, 1e4, 1e6}) CHECK(std::isfinite(ssd::loss_value(a, b, View::kR90, config(t))));
}

TEST_CASE("anchor choice gates the loss") {
  std::mt19937_64 rng(34);
  const auto a = random_tensor<double>({3, 4}, rng);
  const auto b = random_tensor<double>({3, 4}, rng);
  auto cfg = config(8);
  cfg.frontal_view = View::kL60;
  CHECK(ssd::loss_value(a, b, View::kL60, cfg) == 0.0);
  CHECK(ssd::loss_value(a, b, View::kFront, cfg) > 0.0);
}

TEST_CASE("distillation gradient matches finite differences and spares the teacher") {
  std::mt19937_64 rng(35);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t frames = 1 + trial % 5, classes = 2 + trial % 3;
    const auto teacher = random_tensor<double>({frames, classes}, rng, -3, 3);
    const Tensor<double> teacher_copy = teacher;
    Var<double> student(random_tensor<double>({frames, classes}, rng, -3, 3), true);
    const auto cfg = config(1.0 + trial % 8);
    const auto gc = testing::check_gradients(
        {student}, [&](Tape<double>* t) { return ssd::loss(t, teacher, student, View::kR45, cfg); });
    worst = std::max(worst, gc.max_rel_error);
    CHECK(teacher == teacher_copy);
  }
  CHECK(worst < 1e-5);
  Var<double> s(random_tensor<double>({2, 3}, rng), true);
  Tape<double> tape;
  const auto l = ssd::loss(&tape, random_tensor<double>({2, 3}, rng), s, View::kFront, config(8));
  tape.backward(l);
  CHECK(l.value()[0] == 0.0);
  for (double g : s.grad().values()) CHECK(g == 0.0);
}

}  // namespace
}  // namespace canonslr
