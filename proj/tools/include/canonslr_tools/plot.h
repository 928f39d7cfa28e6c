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

#ifndef CANONSLR_TOOLS_PLOT_H_
#define CANONSLR_TOOLS_PLOT_H_

#include <string>

#include "canonslr_tools/ablation.h"

namespace canonslr::tools {

// label, then one column per metric (values only).
std::string table_csv(const ParsedTable& table);

// Grouped bars, one group per row label. A "lambda" axis is drawn as lines
// over the weight instead.
std::string table_svg(const ParsedTable& table, const std::string& axis,
                      const std::string& title);

}  // namespace canonslr::tools

#endif  // CANONSLR_TOOLS_PLOT_H_
