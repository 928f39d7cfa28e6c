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

#ifndef CANONSLR_TESTS_SUPPORT_H_
#define CANONSLR_TESTS_SUPPORT_H_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "canonslr/autograd.h"
#include "canonslr/tensor.h"

namespace canonslr::testing {

template <typename T>
Tensor<T> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : t.values()) v = static_cast<T>(dist(rng));
  return t;
}

// Scalar <x, r> with r constant; turns any tensor-valued op into a loss.
inline Var<double> project(Tape<double>* tape, const Var<double>& x, const Tensor<double>& r) {
  double s = 0;
  for (std::size_t i = 0; i < r.size(); ++i) s += x.value()[i] * r[i];
  Node<double>* xn = x.node();
  return Tape<double>::record(tape, Tensor<double>({1}, {s}), {x},
                              [xn, r](const Tensor<double>& g) {
                                if (!xn->requires_grad) return;
                                auto& dx = xn->grad_ref();
                                for (std::size_t i = 0; i < r.size(); ++i) dx[i] += r[i] * g[0];
                              });
}

// |a - n| / max(|a|, |n|, floor).
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheck {
  double max_rel_error = 0;
  std::size_t checked = 0;
};

// Compares analytic gradients of loss() w.r.t. each input against central
// differences with step h. loss builds a fresh graph on the given tape from
// the current input values. At most max_entries entries per input are
// probed (evenly spaced); 0 probes all.
inline GradCheck check_gradients(
    const std::vector<Var<double>>& inputs,
    const std::function<Var<double>(Tape<double>*)>& loss, double h = 1e-5,
    std::size_t max_entries = 0) {
  for (const auto& in : inputs) in.node()->zero_grad();
  {
    Tape<double> tape;
    const Var<double> l = loss(&tape);
    tape.backward(l);
  }
  std::vector<Tensor<double>> analytic;
  for (const auto& in : inputs) {
    analytic.push_back(in.grad().empty() ? Tensor<double>(in.shape()) : in.grad());
  }
  GradCheck out;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Var<double> in = inputs[k];
    const std::size_t n = in.value().size();
    const std::size_t stride = (max_entries == 0 || n <= max_entries) ? 1 : n / max_entries;
    for (std::size_t i = 0; i < n; i += stride) {
      double& x = in.mutable_value()[i];
      const double saved = x;
      x = saved + h;
      const double up = loss(nullptr).value()[0];
      x = saved - h;
      const double down = loss(nullptr).value()[0];
      x = saved;
      const double numeric = (up - down) / (2 * h);
      out.max_rel_error = std::max(out.max_rel_error, relative_error(analytic[k][i], numeric));
      ++out.checked;
    }
  }
  for (const auto& in : inputs) in.node()->zero_grad();
  return out;
}

// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("canonslr_test_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace canonslr::testing

#endif  // CANONSLR_TESTS_SUPPORT_H_
