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

#ifndef CANONSLR_TOOLS_ABLATION_H_
#define CANONSLR_TOOLS_ABLATION_H_

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "canonslr/checkpoint.h"
#include "canonslr/dataset.h"
#include "canonslr/metrics.h"
#include "canonslr/trainer.h"

namespace canonslr::tools {

using Progress = std::function<void(const std::string&)>;

// Report rows carried into ablation tables, in column order.
extern const std::vector<std::string> kTableMetrics;

struct AblationRow {
  std::string label;
  metrics::Report report;
};

// Rows of one ablation axis; the first row is the reference for deltas.
struct AblationTable {
  std::string axis;
  std::vector<AblationRow> rows;
};

// TSV: label, then per metric the value and its difference from row one.
std::string format_table(const AblationTable& table);

struct ParsedTable {
  std::vector<std::string> columns;  // metric names, deltas excluded
  std::vector<std::string> labels;
  std::vector<std::vector<double>> values;  // [row][metric]
  std::vector<std::vector<double>> deltas;
};
ParsedTable parse_table(const std::string& text);

// Student variants over the shared frozen teacher. Each cell writes its
// checkpoint, training log and evaluation report under out_dir/<label>/.
//   grid:   baseline, +SSD, +TME, +SSD+TME
//   tme:    none, layer3, layer4, layer3+4 (distillation as configured)
//   lambda: distillation weight over {5, 10, 20, 40, 80} (TME as configured)
AblationTable run_grid(const DatasetManifest& manifest, const Checkpoint& teacher,
                       const TrainConfig& base, const std::filesystem::path& out_dir,
                       Split split, const Progress& progress = {});
AblationTable run_tme_axis(const DatasetManifest& manifest, const Checkpoint& teacher,
                           const TrainConfig& base, const std::filesystem::path& out_dir,
                           Split split, const Progress& progress = {});
AblationTable run_lambda_axis(const DatasetManifest& manifest, const Checkpoint& teacher,
                              const TrainConfig& base, const std::filesystem::path& out_dir,
                              Split split, const Progress& progress = {});

// Anchor views {Front, L60, R45, D30}; a teacher is trained per anchor.
AblationTable run_anchor_axis(const DatasetManifest& manifest, const TrainConfig& base,
                              const std::filesystem::path& out_dir, Split split,
                              const Progress& progress = {});

// Shared artifact writers.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
std::string format_log(const std::vector<EpochRecord>& log);

}  // namespace canonslr::tools

#endif  // CANONSLR_TOOLS_ABLATION_H_
