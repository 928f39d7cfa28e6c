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

#include "canonslr_tools/ablation.h"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "canonslr/error.h"

namespace canonslr::tools {

const std::vector<std::string> kTableMetrics = {
    metrics::kAllRow, metrics::kSideRow, "Large angle", "Small angle", "Pitch", "Front"};

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << text;
  if (!out) throw IoError(path.string(), "write failed");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_log(const std::vector<EpochRecord>& log) {
  std::string out = log_header() + "\n";
  for (const auto& r : log) out += format_log_line(r) + "\n";
  return out;
}

std::string format_table(const AblationTable& table) {
  if (table.rows.empty()) throw InvalidArgument("format_table: no rows");
  std::ostringstream os;
  os << table.axis;
  for (const auto& m : kTableMetrics) os << '\t' << m << "\tdelta " << m;
  os << '\n';
  const auto& ref = table.rows.front().report;
  for (const auto& row : table.rows) {
    os << row.label;
    for (const auto& m : kTableMetrics) {
      const double v = row.report.row(m).wer;
      char buf[64];
      std::snprintf(buf, sizeof buf, "\t%.4f\t%+.4f", v, v - ref.row(m).wer);
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

ParsedTable parse_table(const std::string& text) {
  ParsedTable t;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, '\t')) f.push_back(field);
    if (f.size() < 3 || f.size() % 2 == 0) {
      throw InvalidArgument("ablation table: malformed line '" + line + "'");
    }
    if (header) {
      for (std::size_t i = 1; i < f.size(); i += 2) t.columns.push_back(f[i]);
      header = false;
      continue;
    }
    if (f.size() != 1 + 2 * t.columns.size()) {
      throw InvalidArgument("ablation table: row width differs from header");
    }
    t.labels.push_back(f[0]);
    std::vector<double> v, d;
    for (std::size_t i = 1; i < f.size(); i += 2) {
      v.push_back(std::stod(f[i]));
      d.push_back(std::stod(f[i + 1]));
    }
    t.values.push_back(std::move(v));
    t.deltas.push_back(std::move(d));
  }
  if (header) throw InvalidArgument("ablation table: empty");
  return t;
}

namespace {

std::string safe_label(const std::string& label) {
  std::string out;
  for (char c : label) out += (c == '+' ? 'p' : (std::isalnum(static_cast<unsigned char>(c)) ? c : '_'));
  return out;
}

AblationRow run_cell(const DatasetManifest& manifest, const Checkpoint& teacher,
                     const TrainConfig& cfg, const std::string& label,
                     const std::filesystem::path& out_dir, Split split,
                     const Progress& progress) {
  const auto dir = out_dir / safe_label(label);
  if (progress) progress("[" + label + "] training student");
  const auto result = train_student(manifest, teacher, cfg, [&](const EpochRecord& r) {
    if (progress) progress("[" + label + "] " + format_log_line(r));
  });
  write_checkpoint(dir / "student.ckpt", result.checkpoint);
  write_text(dir / "train_log.tsv", format_log(result.log));
  const auto ev = evaluate(result.checkpoint, manifest, split, cfg.beam_width);
  write_text(dir / (std::string(split_name(split)) + "_report.tsv"), metrics::format_report(ev.report));
  return {label, ev.report};
}

TrainConfig with(const TrainConfig& base, double weight, std::vector<int> stages) {
  TrainConfig c = base;
  c.distill.weight = weight;
  c.tme.stages = std::move(stages);
  return c;
}

double default_weight(const TrainConfig& base) {
  return base.distill.weight > 0 ? base.distill.weight : ssd::DistillConfig{}.weight;
}

std::vector<int> default_stages(const TrainConfig& base) {
  return base.tme.stages.empty() ? std::vector<int>{3, 4} : base.tme.stages;
}

}  // namespace

AblationTable run_grid(const DatasetManifest& manifest, const Checkpoint& teacher,
                       const TrainConfig& base, const std::filesystem::path& out_dir,
                       Split split, const Progress& progress) {
  const double w = default_weight(base);
  const auto stages = default_stages(base);
  AblationTable t{"model", {}};
  t.rows.push_back(run_cell(manifest, teacher, with(base, 0, {}), "baseline", out_dir, split, progress));
  t.rows.push_back(run_cell(manifest, teacher, with(base, w, {}), "+SSD", out_dir, split, progress));
  t.rows.push_back(run_cell(manifest, teacher, with(base, 0, stages), "+TME", out_dir, split, progress));
  t.rows.push_back(run_cell(manifest, teacher, with(base, w, stages), "+SSD+TME", out_dir, split, progress));
  return t;
}

AblationTable run_tme_axis(const DatasetManifest& manifest, const Checkpoint& teacher,
                           const TrainConfig& base, const std::filesystem::path& out_dir,
                           Split split, const Progress& progress) {
  AblationTable t{"tme_stages", {}};
  const double w = base.distill.weight;
  t.rows.push_back(run_cell(manifest, teacher, with(base, w, {}), "none", out_dir, split, progress));
  t.rows.push_back(run_cell(manifest, teacher, with(base, w, {3}), "layer3", out_dir, split, progress));
  t.rows.push_back(run_cell(manifest, teacher, with(base, w, {4}), "layer4", out_dir, split, progress));
  t.rows.push_back(run_cell(manifest, teacher, with(base, w, {3, 4}), "layer3+4", out_dir, split, progress));
  return t;
}

AblationTable run_lambda_axis(const DatasetManifest& manifest, const Checkpoint& teacher,
                              const TrainConfig& base, const std::filesystem::path& out_dir,
                              Split split, const Progress& progress) {
  AblationTable t{"lambda", {}};
  for (double w : {5.0, 10.0, 20.0, 40.0, 80.0}) {
    char label[32];
    std::snprintf(label, sizeof label, "%g", w);
    t.rows.push_back(run_cell(manifest, teacher, with(base, w, base.tme.stages), label, out_dir,
                              split, progress));
  }
  return t;
}

AblationTable run_anchor_axis(const DatasetManifest& manifest, const TrainConfig& base,
                              const std::filesystem::path& out_dir, Split split,
                              const Progress& progress) {
  AblationTable t{"anchor", {}};
  for (View anchor : {View::kFront, View::kL60, View::kR45, View::kD30}) {
    const std::string label(view_name(anchor));
    TrainConfig cfg = base;
    cfg.distill.frontal_view = anchor;
    if (progress) progress("[anchor " + label + "] training teacher");
    const auto teacher = train_teacher(manifest, cfg, [&](const EpochRecord& r) {
      if (progress) progress("[anchor " + label + " teacher] " + format_log_line(r));
    });
    const auto dir = out_dir / safe_label(label);
    write_checkpoint(dir / "teacher.ckpt", teacher.checkpoint);
    write_text(dir / "teacher_log.tsv", format_log(teacher.log));
    t.rows.push_back(run_cell(manifest, teacher.checkpoint, cfg, label, out_dir, split, progress));
  }
  return t;
}

}  // namespace canonslr::tools
