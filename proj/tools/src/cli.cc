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

#include "canonslr_tools/cli.h"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "canonslr/config.h"
#include "canonslr/error.h"
#include "canonslr_tools/ablation.h"
#include "canonslr_tools/plot.h"

namespace canonslr::tools {

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  std::optional<std::uint64_t> seed;
};

// Everything a command may read. Every command accepts the same key set so a
// single experiment file can drive the whole pipeline.
struct Settings {
  fs::path root;
  GenerationConfig generation;
  TrainConfig train;
  fs::path manifest;
  fs::path teacher;
  fs::path checkpoint;
  Split split = Split::kTest;
  std::vector<std::string> axes;
  fs::path plot_input;
};

fs::path output_root(const Flags& flags) {
  if (!flags.out.empty()) return flags.out;
  if (const char* env = std::getenv("CANONSLR_OUT"); env != nullptr && *env != '\0') return env;
  return "canonslr_out";
}

Settings read_settings(const Flags& flags) {
  auto kv = config::KeyValues::load(flags.config);
  for (const auto& s : flags.sets) kv.apply_override(s);
  if (flags.seed) kv.set("seed", std::to_string(*flags.seed));
  Settings s;
  s.root = output_root(flags);
  s.generation = config::read_generation_config(kv);
  s.train = config::read_train_config(kv);
  s.manifest = kv.get_string("manifest", (s.root / "data" / "manifest.txt").string());
  s.teacher = kv.get_string("teacher", (s.root / "teacher" / "teacher.ckpt").string());
  s.checkpoint = kv.get_string("checkpoint", (s.root / "student" / "student.ckpt").string());
  s.split = parse_split(kv.get_string("split", "test"));
  std::istringstream axes(kv.get_string("ablate.axes", "grid"));
  for (std::string a; std::getline(axes, a, ',');) {
    if (a != "grid" && a != "tme" && a != "lambda" && a != "anchor") {
      throw InvalidArgument("ablate.axes: unknown axis '" + a + "'");
    }
    s.axes.push_back(a);
  }
  s.plot_input = kv.get_string("plot.input", (s.root / "ablate").string());
  kv.finish();
  return s;
}

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Progress progress_to(std::ostream& err) {
  auto clock = std::make_shared<Clock>();
  return [&err, clock](const std::string& line) {
    char stamp[32];
    std::snprintf(stamp, sizeof stamp, "[%8.1fs] ", clock->seconds());
    err << stamp << line << '\n' << std::flush;
  };
}

int gen_data(const Settings& s, std::ostream& out) {
  const auto manifest = generate_dataset(s.generation, s.root / "data");
  out << "wrote " << manifest.entries.size() << " samples to " << (s.root / "data").string()
      << '\n';
  return kExitOk;
}

int train_teacher_cmd(const Settings& s, std::ostream& out, std::ostream& err) {
  const auto manifest = read_manifest(s.manifest);
  const auto progress = progress_to(err);
  const auto result = train_teacher(manifest, s.train, [&](const EpochRecord& r) {
    progress("[teacher] " + format_log_line(r));
  });
  const fs::path dir = s.root / "teacher";
  write_checkpoint(dir / "teacher.ckpt", result.checkpoint);
  write_text(dir / "train_log.tsv", format_log(result.log));
  out << "teacher dev WER " << result.log.back().dev_wer << "% -> "
      << (dir / "teacher.ckpt").string() << '\n';
  return kExitOk;
}

int train_student_cmd(const Settings& s, std::ostream& out, std::ostream& err) {
  const auto manifest = read_manifest(s.manifest);
  const auto teacher = read_checkpoint(s.teacher);
  const auto progress = progress_to(err);
  const auto result = train_student(manifest, teacher, s.train, [&](const EpochRecord& r) {
    progress("[student] " + format_log_line(r));
  });
  const fs::path dir = s.root / "student";
  write_checkpoint(dir / "student.ckpt", result.checkpoint);
  write_text(dir / "train_log.tsv", format_log(result.log));
  out << "student dev WER " << result.log.back().dev_wer << "% -> "
      << (dir / "student.ckpt").string() << '\n';
  return kExitOk;
}

int evaluate_cmd(const Settings& s, std::ostream& out, std::ostream& err) {
  const auto manifest = read_manifest(s.manifest);
  const auto checkpoint = read_checkpoint(s.checkpoint);
  const auto ev = evaluate(checkpoint, manifest, s.split, s.train.beam_width);
  const std::string text = metrics::format_report(ev.report);
  const fs::path path = s.root / "eval" / (std::string(split_name(s.split)) + "_report.tsv");
  write_text(path, text);
  const auto& all = ev.report.row(metrics::kAllRow);
  // Insertions are the only way past 100%.
  err << "WER " << all.wer << "% (bound 100% + ins " << all.ins << "% = " << 100.0 + all.ins
      << "%)\n";
  out << text;
  return kExitOk;
}

int ablate_cmd(const Settings& s, std::ostream& out, std::ostream& err) {
  const auto manifest = read_manifest(s.manifest);
  const auto progress = progress_to(err);
  const fs::path dir = s.root / "ablate";
  auto shared_teacher = [&]() {
    if (fs::exists(s.teacher)) return read_checkpoint(s.teacher);
    progress("no teacher at " + s.teacher.string() + "; training one");
    const auto result = train_teacher(manifest, s.train, [&](const EpochRecord& r) {
      progress("[teacher] " + format_log_line(r));
    });
    write_checkpoint(dir / "teacher" / "teacher.ckpt", result.checkpoint);
    write_text(dir / "teacher" / "train_log.tsv", format_log(result.log));
    return result.checkpoint;
  };
  std::optional<Checkpoint> teacher;
  for (const auto& axis : s.axes) {
    AblationTable table;
    if (axis == "anchor") {
      table = run_anchor_axis(manifest, s.train, dir / axis, s.split, progress);
    } else {
      if (!teacher) teacher = shared_teacher();
      if (axis == "grid") table = run_grid(manifest, *teacher, s.train, dir / axis, s.split, progress);
      if (axis == "tme") table = run_tme_axis(manifest, *teacher, s.train, dir / axis, s.split, progress);
      if (axis == "lambda") table = run_lambda_axis(manifest, *teacher, s.train, dir / axis, s.split, progress);
    }
    const std::string text = format_table(table);
    write_text(dir / (axis + ".tsv"), text);
    out << text << '\n';
  }
  return kExitOk;
}

int plot_cmd(const Settings& s, std::ostream& out) {
  int written = 0;
  for (const char* axis : {"grid", "tme", "lambda", "anchor"}) {
    const fs::path in = s.plot_input / (std::string(axis) + ".tsv");
    if (!fs::exists(in)) continue;
    const auto table = parse_table(read_text(in));
    const fs::path stem = s.root / "plots" / axis;
    write_text(stem.string() + ".csv", table_csv(table));
    write_text(stem.string() + ".svg", table_svg(table, axis, std::string("WER by ") + axis));
    out << "wrote " << stem.string() << ".{csv,svg}\n";
    ++written;
  }
  if (written == 0) {
    throw IoError(s.plot_input.string(), "no ablation tables (grid/tme/lambda/anchor .tsv)");
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Canonical-view guided multi-view sign recognition pipeline", "canonslr"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen-data", "Generate the synthetic multi-view dataset"},
      {"train-teacher", "Stage I: train the anchor-view teacher"},
      {"train-student", "Stage II: train the multi-view student"},
      {"evaluate", "Decode a split and write the WER report"},
      {"ablate", "Run ablation axes (grid, tme, lambda, anchor)"},
      {"plot", "Render CSV/SVG from ablation tables"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "Config file (key = value lines)");
    sub->add_option("--set", flags.sets, "Override key=value (repeatable)")->take_all();
    sub->add_option("--out", flags.out, "Output root (default $CANONSLR_OUT)");
    sub->add_option("--seed", flags.seed, "Seed override");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }
  const CLI::App* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  if (flags.config.empty()) {
    err << "usage error: " << command << " requires --config PATH\n";
    return kExitUsage;
  }
  Settings settings;
  try {
    settings = read_settings(flags);
  } catch (const std::exception& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    if (command == "gen-data") return gen_data(settings, out);
    if (command == "train-teacher") return train_teacher_cmd(settings, out, err);
    if (command == "train-student") return train_student_cmd(settings, out, err);
    if (command == "evaluate") return evaluate_cmd(settings, out, err);
    if (command == "ablate") return ablate_cmd(settings, out, err);
    return plot_cmd(settings, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace canonslr::tools
