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

#ifndef CANONSLR_TOOLS_CLI_H_
#define CANONSLR_TOOLS_CLI_H_

#include <ostream>

namespace canonslr::tools {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the canonslr command line. Usage problems (bad flags,
// missing or malformed config, unknown keys) return 2; failures while
// running a command return 1.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace canonslr::tools

#endif  // CANONSLR_TOOLS_CLI_H_
