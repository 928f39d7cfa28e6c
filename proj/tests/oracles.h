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

#ifndef CANONSLR_TESTS_ORACLES_H_
#define CANONSLR_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "canonslr/tensor.h"

// Reference implementations that share no code with the library.
namespace canonslr::testing {

inline std::vector<std::vector<double>> softmax_rows(const Tensor<double>& logits) {
  std::vector<std::vector<double>> p(logits.dim(0), std::vector<double>(logits.dim(1)));
  for (std::size_t t = 0; t < logits.dim(0); ++t) {
    double z = 0;
    for (std::size_t k = 0; k < logits.dim(1); ++k) z += std::exp(logits(t, k));
    for (std::size_t k = 0; k < logits.dim(1); ++k) p[t][k] = std::exp(logits(t, k)) / z;
  }
  return p;
}

inline std::vector<int> collapse_path(const std::vector<int>& path, int blank) {
  std::vector<int> out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (path[i] == blank) continue;
    if (i > 0 && path[i] == path[i - 1]) continue;
    out.push_back(path[i]);
  }
  return out;
}

// Probability mass of every collapsed label sequence, by enumerating all
// classes^frames alignment paths.
inline std::map<std::vector<int>, double> path_marginals(const Tensor<double>& logits, int blank) {
  const auto p = softmax_rows(logits);
  const std::size_t frames = logits.dim(0), classes = logits.dim(1);
  std::map<std::vector<int>, double> out;
  std::vector<int> path(frames, 0);
  while (true) {
    double prob = 1;
    for (std::size_t t = 0; t < frames; ++t) prob *= p[t][static_cast<std::size_t>(path[t])];
    out[collapse_path(path, blank)] += prob;
    std::size_t t = 0;
    while (t < frames && ++path[t] == static_cast<int>(classes)) path[t++] = 0;
    if (t == frames) break;
  }
  return out;
}

// Plain Levenshtein distance (two-row DP).
inline std::size_t levenshtein(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace canonslr::testing

#endif  // CANONSLR_TESTS_ORACLES_H_
