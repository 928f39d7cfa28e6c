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

#ifndef CANONSLR_DATASET_H_
#define CANONSLR_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "canonslr/synthviews.h"
#include "canonslr/tensor.h"
#include "canonslr/views.h"

namespace canonslr {

enum class Split { kTrain, kDev, kTest };
std::string_view split_name(Split split);
Split parse_split(std::string_view name);

struct GenerationConfig {
  int vocab_size = 20;
  int train_sources = 80;
  int dev_sources = 10;
  int test_sources = 10;
  int min_glosses = 2;
  int max_glosses = 4;
  int frames_per_gloss = 8;
  int transition_frames = 2;
  int height = 64;
  int width = 64;
  std::uint64_t seed = 0;

  // Canonical "key=value" lines; feeds the manifest's config hash.
  std::string canonical() const;
  std::uint64_t hash() const;
};

struct ManifestEntry {
  std::string source_id;
  View view = View::kFront;
  Split split = Split::kTrain;
  std::size_t frames = 0;
  std::vector<int> glosses;
  std::string frame_path;  // relative to the manifest directory
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  int vocab_size = 0;
  std::uint64_t vocab_seed = 0;
  std::uint64_t config_hash = 0;
  std::filesystem::path root;  // directory holding manifest.txt

  std::filesystem::path frame_file(const ManifestEntry& e) const {
    return root / e.frame_path;
  }
  std::vector<const ManifestEntry*> select(Split split) const;
  std::vector<const ManifestEntry*> select(Split split, View view) const;
  // Throws DataIntegrityError when missing.
  const ManifestEntry& find(const std::string& source_id, View view) const;
};

// Unique (source, view) pairs, one split per source, all seven views per
// source with shared glosses and frame count. Throws DataIntegrityError.
void validate_manifest(const DatasetManifest& manifest);

// Text form: '#'-prefixed header lines, then one tab-separated record per
// sample: source_id, view, split, T, comma-separated gloss ids, frame path.
std::string format_manifest(const DatasetManifest& manifest);
DatasetManifest parse_manifest(const std::string& text,
                               const std::filesystem::path& root);
void write_manifest(const DatasetManifest& manifest,
                    const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

// Frame file: u32 T, u32 C, u32 H, u32 W (little-endian), then row-major
// little-endian float32 payload.
void write_frames(const std::filesystem::path& path, const Tensor<float>& frames);
Tensor<float> read_frames(const std::filesystem::path& path);

// Draws every source sequence, renders all seven views and writes
// manifest.txt, vocab.txt and frames/ under out_dir.
DatasetManifest generate_dataset(const GenerationConfig& config,
                                 const std::filesystem::path& out_dir);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace canonslr

#endif  // CANONSLR_DATASET_H_
