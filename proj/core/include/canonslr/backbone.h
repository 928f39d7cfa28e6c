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

#ifndef CANONSLR_BACKBONE_H_
#define CANONSLR_BACKBONE_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "canonslr/autograd.h"
#include "canonslr/error.h"
#include "canonslr/tme.h"

namespace canonslr {

inline constexpr std::size_t kStageWidths[4] = {16, 32, 64, 128};
inline constexpr std::size_t kStemWidth = 16;
inline constexpr std::size_t kLstmHidden = 128;
inline constexpr std::size_t kTemporalKernel = 5;
inline constexpr std::size_t kSpatialStride = 16;  // H and W must be multiples
inline constexpr std::size_t kTemporalStride = 4;  // T' = floor(T / 4)

// Which TME insertion points run during a forward pass. Only stages 3 and 4
// carry TME parameters.
struct TmeOptions {
  std::vector<int> stages;
  std::size_t k = 4;

  bool enabled(int stage) const;
};

// Throws InvalidArgument for stages outside {3, 4} or duplicates.
void validate(const TmeOptions& options);

template <typename T>
struct VisualEncoding {
  std::vector<Var<T>> stages;  // F^(1..4), each [C_l, T, H_l, W_l]
  Var<T> pooled;               // [T, 128]
};

template <typename T>
struct RecognizerOutput {
  Var<T> conv_logits;  // [T', V+1]
  Var<T> seq_logits;   // [T', V+1]
  Var<T> hidden;       // [T', 256]
};

// Named parameters kept in creation order; the order is the serialization
// order.
template <typename T>
class ParameterStore {
 public:
  Var<T>& add(const std::string& name, Tensor<T> value);
  const Var<T>& get(const std::string& name) const;
  Var<T>& get(const std::string& name);
  bool contains(const std::string& name) const;

  std::size_t size() const { return entries_.size(); }
  const std::vector<std::pair<std::string, Var<T>>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, Var<T>>>& entries() { return entries_; }

  void zero_grad();

  // One "name<TAB>d0xd1x..." line per parameter.
  std::string manifest() const;

 private:
  std::vector<std::pair<std::string, Var<T>>> entries_;
};

// Residual conv encoder, 1D temporal convs with an auxiliary classifier, and
// a BiLSTM with the sequence classifier. Blank is class vocab_size.
template <typename T>
class Recognizer {
 public:
  Recognizer(std::size_t vocab_size, std::uint64_t seed);

  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t num_classes() const { return vocab_size_ + 1; }
  int blank() const { return static_cast<int>(vocab_size_); }

  ParameterStore<T>& params() { return params_; }
  const ParameterStore<T>& params() const { return params_; }

  // frames: [T, 3, H, W]. A null tape evaluates without recording.
  VisualEncoding<T> encode_visual(Tape<T>* tape, const Tensor<T>& frames,
                                  const TmeOptions& tme) const;
  // pooled: [T, 128]; throws InvalidArgument when T < 4.
  RecognizerOutput<T> temporal_head(Tape<T>* tape, const Var<T>& pooled) const;
  RecognizerOutput<T> forward(Tape<T>* tape, const Tensor<T>& frames,
                              const TmeOptions& tme) const;

  // Copies parameter values from another precision; manifests must match.
  template <typename U>
  void load_from(const Recognizer<U>& other);

 private:
  Var<T> residual_stage(Tape<T>* tape, int index, const Var<T>& x) const;
  tme::Params<T> tme_params(int stage) const;

  std::size_t vocab_size_;
  ParameterStore<T> params_;
};

template <typename T>
template <typename U>
void Recognizer<T>::load_from(const Recognizer<U>& other) {
  if (params_.manifest() != other.params().manifest()) {
    throw InvalidArgument("load_from: parameter manifests differ");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    params_.entries()[i].second.mutable_value() =
        other.params().entries()[i].second.value().template cast<T>();
  }
}

extern template class ParameterStore<float>;
extern template class ParameterStore<double>;
extern template class Recognizer<float>;
extern template class Recognizer<double>;

}  // namespace canonslr

#endif  // CANONSLR_BACKBONE_H_
