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

#include "canonslr/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "canonslr/error.h"

namespace canonslr {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'C', 'S', 'L', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  template <typename U>
  void put(U v) {
    out_.append(reinterpret_cast<const char*>(&v), sizeof(U));
  }
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  template <typename U>
  U get() {
    U v;
    bytes(&v, sizeof(U));
    return v;
  }
  void bytes(void* p, std::size_t n) {
    if (pos_ + n > in_.size()) throw InvalidArgument("checkpoint: truncated");
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::string& in_;
  std::size_t pos_ = 0;
};

void put_tensor(Writer& w, const Tensor<float>& t) {
  w.bytes(t.data(), t.size() * sizeof(float));
}

Tensor<float> get_tensor(Reader& r, const Shape& shape) {
  Tensor<float> t(shape);
  r.bytes(t.data(), t.size() * sizeof(float));
  return t;
}

std::string manifest_of(const std::vector<std::pair<std::string, Tensor<float>>>& params) {
  std::ostringstream os;
  for (const auto& [name, t] : params) {
    os << name << '\t';
    for (std::size_t i = 0; i < t.rank(); ++i) {
      if (i) os << 'x';
      os << t.dim(i);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace

std::string_view role_name(Role role) {
  return role == Role::kTeacher ? "teacher" : "student";
}

Checkpoint snapshot(const Recognizer<float>& model, Role role, std::uint32_t epoch,
                    std::uint64_t config_hash, const TmeOptions& tme,
                    const AdamState& adam) {
  Checkpoint c;
  c.role = role;
  c.epoch = epoch;
  c.config_hash = config_hash;
  c.vocab_size = static_cast<std::uint32_t>(model.vocab_size());
  c.tme = tme;
  for (const auto& [name, v] : model.params().entries()) c.params.emplace_back(name, v.value());
  c.adam = adam;
  return c;
}

void restore(const Checkpoint& checkpoint, Recognizer<float>& model) {
  if (parameter_manifest(checkpoint) != model.params().manifest()) {
    throw InvalidArgument("restore: checkpoint parameter manifest does not match the model");
  }
  auto& entries = model.params().entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    entries[i].second.mutable_value() = checkpoint.params[i].second;
  }
}

Recognizer<float> instantiate(const Checkpoint& checkpoint) {
  Recognizer<float> model(checkpoint.vocab_size, 0);
  restore(checkpoint, model);
  return model;
}

std::string parameter_manifest(const Checkpoint& checkpoint) {
  return manifest_of(checkpoint.params);
}

std::string encode_checkpoint(const Checkpoint& c) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.put<std::uint32_t>(kVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.role));
  w.put<std::uint32_t>(c.epoch);
  w.put<std::uint64_t>(c.config_hash);
  w.put<std::uint32_t>(c.vocab_size);
  std::uint32_t mask = 0;
  for (int s : c.tme.stages) mask |= 1u << s;
  w.put<std::uint32_t>(mask);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.tme.k));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.params.size()));
  for (const auto& [name, t] : c.params) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t i = 0; i < t.rank(); ++i) w.put<std::uint32_t>(static_cast<std::uint32_t>(t.dim(i)));
    put_tensor(w, t);
  }
  w.put<std::uint64_t>(c.adam.step);
  const std::size_t moments = c.adam.m.size();
  if (c.adam.v.size() != moments || (moments != 0 && moments != c.params.size())) {
    throw InvalidArgument("checkpoint: optimizer state does not match parameters");
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(moments));
  for (std::size_t i = 0; i < moments; ++i) {
    if (c.adam.m[i].shape() != c.params[i].second.shape() ||
        c.adam.v[i].shape() != c.params[i].second.shape()) {
      throw InvalidArgument("checkpoint: optimizer moment shape mismatch for " + c.params[i].first);
    }
    put_tensor(w, c.adam.m[i]);
  }
  for (std::size_t i = 0; i < moments; ++i) put_tensor(w, c.adam.v[i]);
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw InvalidArgument("checkpoint: bad magic");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) {
    throw InvalidArgument("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint c;
  const auto role = r.get<std::uint32_t>();
  if (role > 1) throw InvalidArgument("checkpoint: bad role");
  c.role = static_cast<Role>(role);
  c.epoch = r.get<std::uint32_t>();
  c.config_hash = r.get<std::uint64_t>();
  c.vocab_size = r.get<std::uint32_t>();
  const auto mask = r.get<std::uint32_t>();
  for (int s = 0; s < 32; ++s) {
    if (mask & (1u << s)) c.tme.stages.push_back(s);
  }
  c.tme.k = r.get<std::uint32_t>();
  const auto n = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name(r.get<std::uint32_t>(), '\0');
    r.bytes(name.data(), name.size());
    const auto ndim = r.get<std::uint32_t>();
    if (ndim > 8) throw InvalidArgument("checkpoint: implausible rank for " + name);
    Shape shape(ndim);
    for (auto& d : shape) d = r.get<std::uint32_t>();
    if (shape_numel(shape) * sizeof(float) > bytes.size()) {
      throw InvalidArgument("checkpoint: truncated payload for " + name);
    }
    c.params.emplace_back(std::move(name), get_tensor(r, shape));
  }
  c.adam.step = r.get<std::uint64_t>();
  const auto moments = r.get<std::uint32_t>();
  if (moments != 0 && moments != n) throw InvalidArgument("checkpoint: bad optimizer state");
  for (std::uint32_t i = 0; i < moments; ++i) c.adam.m.push_back(get_tensor(r, c.params[i].second.shape()));
  for (std::uint32_t i = 0; i < moments; ++i) c.adam.v.push_back(get_tensor(r, c.params[i].second.shape()));
  if (!r.done()) throw InvalidArgument("checkpoint: trailing bytes");
  validate(c.tme);
  return c;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::string bytes = encode_checkpoint(checkpoint);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(path.string(), "write failed");
  }
  const std::filesystem::path manifest = path.string() + ".params.txt";
  std::ofstream out(manifest, std::ios::trunc);
  if (!out) throw IoError(manifest.string(), "cannot open for writing");
  out << parameter_manifest(checkpoint);
  if (!out) throw IoError(manifest.string(), "write failed");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return decode_checkpoint(ss.str());
  } catch (const InvalidArgument& e) {
    throw IoError(path.string(), e.what());
  }
}

}  // namespace canonslr
