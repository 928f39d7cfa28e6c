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

#include "canonslr/ctc.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "canonslr/error.h"

namespace canonslr::ctc {
namespace {

constexpr double kLogZero = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

template <typename T>
Tensor<double> log_softmax_rows(const Tensor<T>& logits) {
  const std::size_t frames = logits.dim(0), classes = logits.dim(1);
  Tensor<double> out({frames, classes});
  for (std::size_t t = 0; t < frames; ++t) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < classes; ++k) {
      hi = std::max(hi, static_cast<double>(logits(t, k)));
    }
    double z = 0;
    for (std::size_t k = 0; k < classes; ++k) {
      z += std::exp(static_cast<double>(logits(t, k)) - hi);
    }
    const double lz = hi + std::log(z);
    for (std::size_t k = 0; k < classes; ++k) {
      out(t, k) = static_cast<double>(logits(t, k)) - lz;
    }
  }
  return out;
}

template <typename T>
void check_logits(const Tensor<T>& logits, int blank) {
  if (logits.rank() != 2 || logits.dim(0) == 0 || logits.dim(1) < 2) {
    throw InvalidArgument("ctc: logits must be [frames >= 1, classes >= 2], got " +
                          shape_string(logits.shape()));
  }
  if (blank < 0 || static_cast<std::size_t>(blank) >= logits.dim(1)) {
    throw InvalidArgument("ctc: blank index out of range");
  }
  for (T v : logits.values()) {
    if (std::isnan(v)) throw InvalidArgument("ctc: NaN in logits");
  }
}

}  // namespace

Labels collapse(std::span<const int> path, int blank) {
  Labels out;
  int prev = -1;
  bool first = true;
  for (int s : path) {
    if (first || s != prev) {
      if (s != blank) out.push_back(s);
    }
    prev = s;
    first = false;
  }
  return out;
}

std::size_t min_frames(std::span<const int> target) {
  std::size_t n = target.size();
  for (std::size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++n;
  }
  return n;
}

template <typename T>
LossAndGrad loss_and_grad(const Tensor<T>& logits, std::span<const int> target,
                          int blank) {
  check_logits(logits, blank);
  const std::size_t frames = logits.dim(0), classes = logits.dim(1);
  for (int y : target) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes || y == blank) {
      throw InvalidArgument("ctc: target label " + std::to_string(y) +
                            " is out of range or blank");
    }
  }
  if (min_frames(target) > frames) {
    throw FeasibilityError("ctc: target of length " +
                           std::to_string(target.size()) + " needs " +
                           std::to_string(min_frames(target)) +
                           " frames, only " + std::to_string(frames) +
                           " available");
  }

  const Tensor<double> lp = log_softmax_rows(logits);
  const std::size_t states = 2 * target.size() + 1;
  std::vector<int> ext(states, blank);
  for (std::size_t m = 0; m < target.size(); ++m) ext[2 * m + 1] = target[m];
  auto can_skip = [&](std::size_t s) {
    return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2];
  };

  Tensor<double> alpha({frames, states}, kLogZero);
  Tensor<double> beta({frames, states}, kLogZero);
  alpha(0, 0) = lp(0, ext[0]);
  if (states > 1) alpha(0, 1) = lp(0, ext[1]);
  for (std::size_t t = 1; t < frames; ++t) {
    for (std::size_t s = 0; s < states; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = log_add(a, alpha(t - 1, s - 1));
      if (can_skip(s)) a = log_add(a, alpha(t - 1, s - 2));
      alpha(t, s) = a == kLogZero ? kLogZero : a + lp(t, ext[s]);
    }
  }
  const std::size_t last = frames - 1;
  beta(last, states - 1) = lp(last, ext[states - 1]);
  if (states > 1) beta(last, states - 2) = lp(last, ext[states - 2]);
  for (std::size_t t = last; t-- > 0;) {
    for (std::size_t s = 0; s < states; ++s) {
      double b = beta(t + 1, s);
      if (s + 1 < states) b = log_add(b, beta(t + 1, s + 1));
      if (s + 2 < states && can_skip(s + 2)) b = log_add(b, beta(t + 1, s + 2));
      beta(t, s) = b == kLogZero ? kLogZero : b + lp(t, ext[s]);
    }
  }
  double log_p = alpha(last, states - 1);
  if (states > 1) log_p = log_add(log_p, alpha(last, states - 2));

  LossAndGrad out;
  out.loss = -log_p;
  out.grad = Tensor<double>({frames, classes});
  for (std::size_t t = 0; t < frames; ++t) {
    std::vector<double> occupancy(classes, kLogZero);
    for (std::size_t s = 0; s < states; ++s) {
      const double g = alpha(t, s) + beta(t, s) - lp(t, ext[s]);
      occupancy[ext[s]] = log_add(occupancy[ext[s]], g);
    }
    for (std::size_t k = 0; k < classes; ++k) {
      const double post =
          occupancy[k] == kLogZero ? 0.0 : std::exp(occupancy[k] - log_p);
      out.grad(t, k) = std::exp(lp(t, k)) - post;
    }
  }
  return out;
}

template <typename T>
Var<T> loss(Tape<T>* tape, const Var<T>& logits, std::span<const int> target,
            int blank) {
  LossAndGrad lg = loss_and_grad(logits.value(), target, blank);
  Node<T>* ln = logits.node();
  return Tape<T>::record(
      tape, Tensor<T>({1}, {static_cast<T>(lg.loss)}), {logits},
      [ln, grad = std::move(lg.grad)](const Tensor<T>& g) {
        if (!ln->requires_grad) return;
        auto& dx = ln->grad_ref();
        for (std::size_t i = 0; i < dx.size(); ++i) {
          dx[i] += static_cast<T>(grad[i]) * g[0];
        }
      });
}

template <typename T>
Labels greedy_decode(const Tensor<T>& logits, int blank) {
  check_logits(logits, blank);
  std::vector<int> path(logits.dim(0));
  for (std::size_t t = 0; t < logits.dim(0); ++t) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < logits.dim(1); ++k) {
      if (logits(t, k) > logits(t, best)) best = k;
    }
    path[t] = static_cast<int>(best);
  }
  return collapse(path, blank);
}

template <typename T>
Labels beam_decode(const Tensor<T>& logits, int beam_width, int blank) {
  check_logits(logits, blank);
  if (beam_width < 1) throw InvalidArgument("beam_decode: beam_width must be >= 1");
  const Tensor<double> lp = log_softmax_rows(logits);
  const std::size_t classes = logits.dim(1);

  struct Score {
    double blank_end = kLogZero;
    double label_end = kLogZero;
    double total() const { return log_add(blank_end, label_end); }
  };
  using Beam = std::vector<std::pair<Labels, Score>>;
  auto rank = [](Beam& beam) {
    std::sort(beam.begin(), beam.end(), [](const auto& a, const auto& b) {
      const double ta = a.second.total(), tb = b.second.total();
      if (ta != tb) return ta > tb;
      return a.first < b.first;
    });
  };

  Beam beam{{Labels{}, Score{0.0, kLogZero}}};
  for (std::size_t t = 0; t < logits.dim(0); ++t) {
    std::map<Labels, Score> next;
    for (const auto& [prefix, score] : beam) {
      const double total = score.total();
      auto& stay = next[prefix];
      stay.blank_end = log_add(stay.blank_end, total + lp(t, blank));
      for (std::size_t k = 0; k < classes; ++k) {
        const int c = static_cast<int>(k);
        if (c == blank) continue;
        const double p = lp(t, k);
        Labels extended = prefix;
        extended.push_back(c);
        auto& ext = next[extended];
        if (!prefix.empty() && prefix.back() == c) {
          // A repeat only extends the prefix across a blank.
          ext.label_end = log_add(ext.label_end, score.blank_end + p);
          auto& same = next[prefix];
          same.label_end = log_add(same.label_end, score.label_end + p);
        } else {
          ext.label_end = log_add(ext.label_end, total + p);
        }
      }
    }
    beam.assign(next.begin(), next.end());
    rank(beam);
    if (beam.size() > static_cast<std::size_t>(beam_width)) {
      beam.resize(static_cast<std::size_t>(beam_width));
    }
  }
  return beam.front().first;
}

#define CANONSLR_INSTANTIATE_CTC(T)                                           \
  template LossAndGrad loss_and_grad(const Tensor<T>&, std::span<const int>, \
                                     int);                                    \
  template Var<T> loss(Tape<T>*, const Var<T>&, std::span<const int>, int);  \
  template Labels greedy_decode(const Tensor<T>&, int);                       \
  template Labels beam_decode(const Tensor<T>&, int, int);

CANONSLR_INSTANTIATE_CTC(float)
CANONSLR_INSTANTIATE_CTC(double)

#undef CANONSLR_INSTANTIATE_CTC

}  // namespace canonslr::ctc
