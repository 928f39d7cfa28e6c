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

#ifndef CANONSLR_CONFIG_H_
#define CANONSLR_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "canonslr/dataset.h"
#include "canonslr/trainer.h"

namespace canonslr::config {

// Flat "key = value" settings. '#' starts a comment; blank lines are
// ignored. Every key must be consumed by a reader before finish().
class KeyValues {
 public:
  static KeyValues parse(const std::string& text, const std::string& origin = "<config>");
  static KeyValues load(const std::filesystem::path& path);

  // "key=value"; replaces any earlier value.
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  // Typed readers mark the key consumed and return the fallback when absent.
  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  std::int64_t get_int(const std::string& key, std::int64_t fallback);
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback);
  std::vector<std::size_t> get_list(const std::string& key,
                                    const std::vector<std::size_t>& fallback);

  // Throws InvalidArgument naming every key nobody read.
  void finish() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

GenerationConfig read_generation_config(KeyValues& kv);
TrainConfig read_train_config(KeyValues& kv);

}  // namespace canonslr::config

#endif  // CANONSLR_CONFIG_H_
