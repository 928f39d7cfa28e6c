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

#ifndef CANONSLR_CHECKPOINT_H_
#define CANONSLR_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "canonslr/backbone.h"
#include "canonslr/tensor.h"

namespace canonslr {

enum class Role : std::uint32_t { kTeacher = 0, kStudent = 1 };
std::string_view role_name(Role role);

// Adam moments in parameter order.
struct AdamState {
  std::uint64_t step = 0;
  std::vector<Tensor<float>> m;
  std::vector<Tensor<float>> v;
};

struct Checkpoint {
  Role role = Role::kTeacher;
  std::uint32_t epoch = 0;
  std::uint64_t config_hash = 0;
  std::uint32_t vocab_size = 0;
  TmeOptions tme;  // stages applied when the network was trained
  std::vector<std::pair<std::string, Tensor<float>>> params;
  AdamState adam;
};

Checkpoint snapshot(const Recognizer<float>& model, Role role, std::uint32_t epoch,
                    std::uint64_t config_hash, const TmeOptions& tme,
                    const AdamState& adam);

// Throws InvalidArgument unless the parameter-shape manifests are equal.
void restore(const Checkpoint& checkpoint, Recognizer<float>& model);
Recognizer<float> instantiate(const Checkpoint& checkpoint);

// "name<TAB>shape" per parameter, identical to ParameterStore::manifest().
std::string parameter_manifest(const Checkpoint& checkpoint);

// Binary layout, little-endian:
//   "CSLRCKPT" u32 version u32 role u32 epoch u64 config_hash u32 vocab_size
//   u32 tme_stage_mask u32 tme_k u32 n_params
//   per param: u32 name_len, name bytes, u32 ndim, u32 dims[ndim], f32 payload
//   u64 adam_step u32 n_moments, then m and v payloads in parameter order
std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::string& bytes);

// Also writes "<path>.params.txt" with the parameter manifest.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace canonslr

#endif  // CANONSLR_CHECKPOINT_H_
