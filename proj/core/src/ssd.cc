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

#include "canonslr/ssd.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "canonslr/error.h"

namespace canonslr::ssd {
namespace {

// Row-wise softmax of logits / temperature, in double.
template <typename T>
std::vector<double> soft(const Tensor<T>& logits, double temperature) {
  const std::size_t frames = logits.dim(0), classes = logits.dim(1);
  std::vector<double> p(frames * classes);
  for (std::size_t t = 0; t < frames; ++t) {
    double hi = -INFINITY;
    for (std::size_t k = 0; k < classes; ++k) {
      hi = std::max(hi, static_cast<double>(logits(t, k)) / temperature);
    }
    double z = 0;
    for (std::size_t k = 0; k < classes; ++k) {
      z += p[t * classes + k] = std::exp(static_cast<double>(logits(t, k)) / temperature - hi);
    }
    for (std::size_t k = 0; k < classes; ++k) p[t * classes + k] /= z;
  }
  return p;
}

template <typename T>
void check_pair(const Tensor<T>& teacher, const Tensor<T>& student) {
  if (teacher.rank() != 2 || teacher.shape() != student.shape() || teacher.dim(0) == 0) {
    throw InvalidArgument("ssd: teacher " + shape_string(teacher.shape()) +
                          " and student " + shape_string(student.shape()) +
                          " logits must share a non-empty [T,K] shape");
  }
}

double kl_mean(const std::vector<double>& p, const std::vector<double>& q,
               std::size_t frames, std::size_t classes) {
  double total = 0;
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t k = 0; k < classes; ++k) {
      const double pk = p[t * classes + k];
      if (pk > 0) total += pk * (std::log(pk) - std::log(q[t * classes + k]));
    }
  }
  return total / static_cast<double>(frames);
}

}  // namespace

void validate(const DistillConfig& cfg) {
  if (!(cfg.temperature > 0)) throw InvalidArgument("ssd: temperature must be > 0");
  if (!(cfg.weight >= 0)) throw InvalidArgument("ssd: weight must be >= 0");
}

template <typename T>
Tensor<T> align_temporal(const Tensor<T>& teacher, std::size_t target_len) {
  if (target_len < 1) throw InvalidArgument("align_temporal: target_len must be >= 1");
  if (teacher.rank() != 2 || teacher.dim(0) < 1) {
    throw InvalidArgument("align_temporal: teacher logits must be [T>=1, K]");
  }
  const std::size_t src = teacher.dim(0), classes = teacher.dim(1);
  if (src == target_len) return teacher;
  Tensor<T> out({target_len, classes});
  for (std::size_t i = 0; i < target_len; ++i) {
    const double pos = target_len == 1 ? 0.0
                                       : static_cast<double>(i) * static_cast<double>(src - 1) /
                                             static_cast<double>(target_len - 1);
    const std::size_t lo = std::min(static_cast<std::size_t>(pos), src - 1);
    const std::size_t hi = std::min(lo + 1, src - 1);
    const double frac = pos - static_cast<double>(lo);
    for (std::size_t k = 0; k < classes; ++k) {
      const double a = teacher(lo, k), b = teacher(hi, k);
      out(i, k) = static_cast<T>(a + (b - a) * frac);
    }
  }
  return out;
}

template <typename T>
double loss_value(const Tensor<T>& teacher_aligned, const Tensor<T>& student,
                  View view, const DistillConfig& cfg) {
  validate(cfg);
  check_pair(teacher_aligned, student);
  if (view == cfg.frontal_view) return 0.0;
  const std::size_t frames = student.dim(0), classes = student.dim(1);
  const auto p = soft(teacher_aligned, cfg.temperature);
  const auto q = soft(student, cfg.temperature);
  return cfg.temperature * cfg.temperature * kl_mean(p, q, frames, classes);
}

template <typename T>
Var<T> loss(Tape<T>* tape, const Tensor<T>& teacher_aligned,
            const Var<T>& student, View view, const DistillConfig& cfg) {
  validate(cfg);
  check_pair(teacher_aligned, student.value());
  const std::size_t frames = student.shape()[0], classes = student.shape()[1];
  if (view == cfg.frontal_view) {
    // Recorded anyway so the term appears (as an exact zero) in every graph.
    return Tape<T>::record(tape, Tensor<T>({1}), {student}, [](const Tensor<T>&) {});
  }
  const auto p = soft(teacher_aligned, cfg.temperature);
  const auto q = soft(student.value(), cfg.temperature);
  const double value = cfg.temperature * cfg.temperature * kl_mean(p, q, frames, classes);
  // d/dz [T^2 KL(p || softmax(z/T))] = T (q - p), averaged over frames.
  std::vector<double> grad(frames * classes);
  const double factor = cfg.temperature / static_cast<double>(frames);
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = factor * (q[i] - p[i]);
  Node<T>* sn = student.node();
  return Tape<T>::record(tape, Tensor<T>({1}, {static_cast<T>(value)}), {student},
                         [sn, grad = std::move(grad)](const Tensor<T>& g) {
                           if (!sn->requires_grad) return;
                           auto& dx = sn->grad_ref();
                           for (std::size_t i = 0; i < dx.size(); ++i) {
                             dx[i] += static_cast<T>(grad[i]) * g[0];
                           }
                         });
}

#define CANONSLR_INSTANTIATE_SSD(T)                                             \
  template Tensor<T> align_temporal(const Tensor<T>&, std::size_t);             \
  template double loss_value(const Tensor<T>&, const Tensor<T>&, View,          \
                             const DistillConfig&);                             \
  template Var<T> loss(Tape<T>*, const Tensor<T>&, const Var<T>&, View,         \
                       const DistillConfig&);

CANONSLR_INSTANTIATE_SSD(float)
CANONSLR_INSTANTIATE_SSD(double)

#undef CANONSLR_INSTANTIATE_SSD

}  // namespace canonslr::ssd
