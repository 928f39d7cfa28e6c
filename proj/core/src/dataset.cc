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

#include "canonslr/dataset.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "canonslr/ctc.h"
#include "canonslr/error.h"

namespace canonslr {
namespace {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian hosts are not supported");

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(U)];
    std::memcpy(b, &v, sizeof(U));
    std::reverse(b, b + sizeof(U));
    std::memcpy(&v, b, sizeof(U));
  }
  return v;
}

void write_u32(std::ostream& os, std::uint32_t v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return to_little(v);
}

std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string source_name(int index) {
  std::ostringstream os;
  os << 's' << std::setw(4) << std::setfill('0') << index;
  return os.str();
}

}  // namespace

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  throw InvalidArgument("unknown split");
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw InvalidArgument("unknown split '" + std::string(name) + "'");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string GenerationConfig::canonical() const {
  std::ostringstream os;
  os << "vocab_size=" << vocab_size << '\n'
     << "train_sources=" << train_sources << '\n'
     << "dev_sources=" << dev_sources << '\n'
     << "test_sources=" << test_sources << '\n'
     << "min_glosses=" << min_glosses << '\n'
     << "max_glosses=" << max_glosses << '\n'
     << "frames_per_gloss=" << frames_per_gloss << '\n'
     << "transition_frames=" << transition_frames << '\n'
     << "height=" << height << '\n'
     << "width=" << width << '\n'
     << "seed=" << seed << '\n';
  return os.str();
}

std::uint64_t GenerationConfig::hash() const { return fnv1a64(canonical()); }

std::vector<const ManifestEntry*> DatasetManifest::select(Split split) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries) {
    if (e.split == split) out.push_back(&e);
  }
  return out;
}

std::vector<const ManifestEntry*> DatasetManifest::select(Split split,
                                                          View view) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries) {
    if (e.split == split && e.view == view) out.push_back(&e);
  }
  return out;
}

const ManifestEntry& DatasetManifest::find(const std::string& source_id,
                                           View view) const {
  for (const auto& e : entries) {
    if (e.source_id == source_id && e.view == view) return e;
  }
  throw DataIntegrityError("source " + source_id + " has no " +
                           std::string(view_name(view)) + " view");
}

void validate_manifest(const DatasetManifest& manifest) {
  std::set<std::pair<std::string, View>> seen;
  std::map<std::string, const ManifestEntry*> first;
  std::map<std::string, int> view_count;
  for (const auto& e : manifest.entries) {
    if (!seen.insert({e.source_id, e.view}).second) {
      throw DataIntegrityError("duplicate record for " + e.source_id + "/" +
                               std::string(view_name(e.view)));
    }
    if (e.glosses.empty()) {
      throw DataIntegrityError("empty gloss sequence for " + e.source_id);
    }
    auto [it, inserted] = first.emplace(e.source_id, &e);
    if (!inserted) {
      const ManifestEntry& ref = *it->second;
      if (ref.split != e.split) {
        throw DataIntegrityError("source " + e.source_id + " appears in two splits");
      }
      if (ref.glosses != e.glosses || ref.frames != e.frames) {
        throw DataIntegrityError("views of source " + e.source_id +
                                 " disagree on glosses or frame count");
      }
    }
    ++view_count[e.source_id];
  }
  for (const auto& [id, n] : view_count) {
    if (n != static_cast<int>(kAllViews.size())) {
      throw DataIntegrityError("source " + id + " has " + std::to_string(n) +
                               " views, expected 7");
    }
  }
}

std::string format_manifest(const DatasetManifest& manifest) {
  std::ostringstream os;
  os << "# canonslr manifest v1\n"
     << "# vocab_size=" << manifest.vocab_size << '\n'
     << "# vocab_seed=" << manifest.vocab_seed << '\n'
     << "# config_hash=" << hex64(manifest.config_hash) << '\n';
  for (const auto& e : manifest.entries) {
    os << e.source_id << '\t' << view_name(e.view) << '\t' << split_name(e.split)
       << '\t' << e.frames << '\t';
    for (std::size_t i = 0; i < e.glosses.size(); ++i) {
      if (i) os << ',';
      os << e.glosses[i];
    }
    os << '\t' << e.frame_path << '\n';
  }
  return os.str();
}

DatasetManifest parse_manifest(const std::string& text,
                               const std::filesystem::path& root) {
  DatasetManifest m;
  m.root = root;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      const std::string value = line.substr(eq + 1);
      if (key == "vocab_size") m.vocab_size = std::stoi(value);
      if (key == "vocab_seed") m.vocab_seed = std::stoull(value);
      if (key == "config_hash") m.config_hash = std::stoull(value, nullptr, 16);
      continue;
    }
    const auto f = split_fields(line, '\t');
    if (f.size() != 6) {
      throw InvalidArgument("manifest line " + std::to_string(lineno) +
                            ": expected 6 tab-separated fields, got " +
                            std::to_string(f.size()));
    }
    ManifestEntry e;
    e.source_id = f[0];
    e.view = parse_view(f[1]);
    e.split = parse_split(f[2]);
    e.frames = std::stoul(f[3]);
    for (const auto& g : split_fields(f[4], ',')) {
      if (!g.empty()) e.glosses.push_back(std::stoi(g));
    }
    e.frame_path = f[5];
    m.entries.push_back(std::move(e));
  }
  return m;
}

void write_manifest(const DatasetManifest& manifest,
                    const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(path.string(), "cannot open for writing");
  os << format_manifest(manifest);
  if (!os) throw IoError(path.string(), "write failed");
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path.string(), "cannot open manifest");
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_manifest(buf.str(), path.parent_path());
}

void write_frames(const std::filesystem::path& path, const Tensor<float>& frames) {
  if (frames.rank() != 4) {
    throw InvalidArgument("write_frames: expected [T,C,H,W], got " +
                          shape_string(frames.shape()));
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(path.string(), "cannot open for writing");
  for (std::size_t d : frames.shape()) write_u32(os, static_cast<std::uint32_t>(d));
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(frames.data()),
             static_cast<std::streamsize>(frames.size() * sizeof(float)));
  } else {
    for (float v : frames.values()) {
      auto bits = to_little(std::bit_cast<std::uint32_t>(v));
      os.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
    }
  }
  if (!os) throw IoError(path.string(), "write failed");
}

Tensor<float> read_frames(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path.string(), "cannot open frame file");
  Shape shape(4);
  for (auto& d : shape) d = read_u32(is);
  if (!is) throw IoError(path.string(), "truncated header");
  Tensor<float> frames(shape);
  is.read(reinterpret_cast<char*>(frames.data()),
          static_cast<std::streamsize>(frames.size() * sizeof(float)));
  if (!is) throw IoError(path.string(), "truncated payload");
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& v : frames.values()) {
      v = std::bit_cast<float>(to_little(std::bit_cast<std::uint32_t>(v)));
    }
  }
  return frames;
}

DatasetManifest generate_dataset(const GenerationConfig& config,
                                 const std::filesystem::path& out_dir) {
  if (config.train_sources < 1 || config.dev_sources < 1 || config.test_sources < 1) {
    throw InvalidArgument("generate_dataset: every split needs at least one source");
  }
  if (config.min_glosses < 1 || config.max_glosses < config.min_glosses) {
    throw InvalidArgument("generate_dataset: bad gloss length range");
  }
  // The recognizer downsamples time by 4; every sequence must still admit a
  // CTC alignment of its worst-case (all-repeat) target.
  for (int m = config.min_glosses; m <= config.max_glosses; ++m) {
    const int frames = m * config.frames_per_gloss + (m - 1) * config.transition_frames;
    if (frames / 4 < 2 * m - 1) {
      throw InvalidArgument("generate_dataset: " + std::to_string(m) +
                            "-gloss sequences are too short for 4x temporal "
                            "downsampling");
    }
  }
  const auto vocab = synth::build_vocabulary(config.vocab_size, config.seed);
  const synth::MotionOptions motion{config.frames_per_gloss, config.transition_frames};

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "frames", ec);
  if (ec) throw IoError((out_dir / "frames").string(), ec.message());

  DatasetManifest manifest;
  manifest.vocab_size = config.vocab_size;
  manifest.vocab_seed = config.seed;
  manifest.config_hash = config.hash();
  manifest.root = out_dir;

  std::mt19937_64 rng(config.seed ^ 0x5bd1e995ull);
  std::uniform_int_distribution<int> length(config.min_glosses, config.max_glosses);
  std::uniform_int_distribution<int> gloss(0, config.vocab_size - 1);
  const std::array<std::pair<Split, int>, 3> splits = {
      std::pair{Split::kTrain, config.train_sources},
      std::pair{Split::kDev, config.dev_sources},
      std::pair{Split::kTest, config.test_sources}};
  int index = 0;
  for (const auto& [split, count] : splits) {
    for (int s = 0; s < count; ++s, ++index) {
      std::vector<int> glosses(static_cast<std::size_t>(length(rng)));
      for (auto& g : glosses) g = gloss(rng);
      const std::uint64_t signer_seed = rng();
      const auto skel = synth::synthesize_motion(glosses, vocab, motion, signer_seed);
      const std::string id = source_name(index);
      for (View v : kAllViews) {
        const auto angle = view_angle(v);
        const auto rotated = synth::rotate_view(skel, angle.yaw_deg, angle.pitch_deg);
        const auto frames = synth::render_frames(rotated, config.height, config.width);
        ManifestEntry e;
        e.source_id = id;
        e.view = v;
        e.split = split;
        e.frames = skel.frames();
        e.glosses = glosses;
        e.frame_path = "frames/" + id + "_" + std::string(view_name(v)) + ".bin";
        write_frames(out_dir / e.frame_path, frames);
        manifest.entries.push_back(std::move(e));
      }
    }
  }

  std::ofstream vocab_out(out_dir / "vocab.txt", std::ios::binary);
  if (!vocab_out) throw IoError((out_dir / "vocab.txt").string(), "cannot open for writing");
  for (int i = 0; i < vocab.size(); ++i) {
    vocab_out << i << '\t' << vocab.glosses[static_cast<std::size_t>(i)] << '\t'
              << vocab.primitive_seeds[static_cast<std::size_t>(i)] << '\n';
  }
  vocab_out << vocab.blank_index << "\t<blank>\t0\n";
  write_manifest(manifest, out_dir / "manifest.txt");
  return manifest;
}

}  // namespace canonslr
