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

#include "canonslr/config.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "canonslr/error.h"

namespace canonslr::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename N>
N parse_number(const std::string& key, const std::string& text) {
  N value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw InvalidArgument("config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

}  // namespace

KeyValues KeyValues::parse(const std::string& text, const std::string& origin) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument(origin + ":" + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw InvalidArgument(origin + ":" + std::to_string(number) + ": empty key");
    if (kv.has(key)) {
      throw InvalidArgument(origin + ":" + std::to_string(number) + ": duplicate key '" + key + "'");
    }
    kv.values_[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open config");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void KeyValues::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw InvalidArgument("override '" + assignment + "' is not key=value");
  }
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw InvalidArgument("override '" + assignment + "' has an empty key");
  values_[key] = trim(assignment.substr(eq + 1));
}

void KeyValues::set(const std::string& key, const std::string& value) { values_[key] = value; }

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValues::get_double(const std::string& key, double fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_number<double>(key, it->second);
}

std::int64_t KeyValues::get_int(const std::string& key, std::int64_t fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_number<std::int64_t>(key, it->second);
}

std::uint64_t KeyValues::get_uint(const std::string& key, std::uint64_t fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_number<std::uint64_t>(key, it->second);
}

std::vector<std::size_t> KeyValues::get_list(const std::string& key,
                                             const std::vector<std::size_t>& fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<std::size_t> out;
  if (it->second.empty() || it->second == "none") return out;
  std::istringstream in(it->second);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number<std::size_t>(key, trim(item)));
  return out;
}

void KeyValues::finish() const {
  std::string unknown;
  for (const auto& [key, value] : values_) {
    if (!consumed_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  }
  if (!unknown.empty()) throw InvalidArgument("unknown config keys: " + unknown);
}

GenerationConfig read_generation_config(KeyValues& kv) {
  GenerationConfig g;
  auto i = [&](const char* key, int fallback) {
    return static_cast<int>(kv.get_int(key, fallback));
  };
  g.vocab_size = i("vocab_size", g.vocab_size);
  g.train_sources = i("train_sources", g.train_sources);
  g.dev_sources = i("dev_sources", g.dev_sources);
  g.test_sources = i("test_sources", g.test_sources);
  g.min_glosses = i("min_glosses", g.min_glosses);
  g.max_glosses = i("max_glosses", g.max_glosses);
  g.frames_per_gloss = i("frames_per_gloss", g.frames_per_gloss);
  g.transition_frames = i("transition_frames", g.transition_frames);
  g.height = i("height", g.height);
  g.width = i("width", g.width);
  g.seed = kv.get_uint("seed", g.seed);
  return g;
}

TrainConfig read_train_config(KeyValues& kv) {
  TrainConfig c;
  const auto non_negative = [](const char* key, std::int64_t v) {
    if (v < 0) throw InvalidArgument(std::string(key) + " must be non-negative");
    return static_cast<std::size_t>(v);
  };
  c.epochs = non_negative("epochs", kv.get_int("epochs", static_cast<std::int64_t>(c.epochs)));
  c.learning_rate = kv.get_double("learning_rate", c.learning_rate);
  c.lr_milestones = kv.get_list("lr_milestones", c.lr_milestones);
  c.lr_decay = kv.get_double("lr_decay", c.lr_decay);
  c.batch_size =
      non_negative("batch_size", kv.get_int("batch_size", static_cast<std::int64_t>(c.batch_size)));
  c.seed = kv.get_uint("seed", c.seed);
  c.distill.temperature = kv.get_double("distill.temperature", c.distill.temperature);
  c.distill.weight = kv.get_double("distill.weight", c.distill.weight);
  c.distill.frontal_view = parse_view(kv.get_string("distill.frontal_view", "Front"));
  const std::string input = kv.get_string("distill.teacher_input", "paired");
  if (input == "paired") {
    c.teacher_input = TeacherInput::kPairedAnchor;
  } else if (input == "own") {
    c.teacher_input = TeacherInput::kOwnView;
  } else {
    throw InvalidArgument("distill.teacher_input must be 'paired' or 'own'");
  }
  const std::string init = kv.get_string("student_init", "scratch");
  if (init == "scratch") {
    c.student_init = StudentInit::kScratch;
  } else if (init == "teacher") {
    c.student_init = StudentInit::kTeacher;
  } else {
    throw InvalidArgument("student_init must be 'scratch' or 'teacher'");
  }
  std::vector<std::size_t> stages(c.tme.stages.begin(), c.tme.stages.end());
  c.tme.stages.clear();
  for (std::size_t s : kv.get_list("tme_stages", stages)) c.tme.stages.push_back(static_cast<int>(s));
  c.tme.k = non_negative("tme.k", kv.get_int("tme.k", static_cast<std::int64_t>(c.tme.k)));
  c.beam_width = static_cast<int>(kv.get_int("beam_width", c.beam_width));
  c.grad_clip = kv.get_double("grad_clip", c.grad_clip);
  c.checkpoint_dir = kv.get_string("checkpoint_dir", c.checkpoint_dir);
  validate(c);
  return c;
}

}  // namespace canonslr::config
