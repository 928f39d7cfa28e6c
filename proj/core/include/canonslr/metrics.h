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

#ifndef CANONSLR_METRICS_H_
#define CANONSLR_METRICS_H_

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "canonslr/views.h"

namespace canonslr::metrics {

using Labels = std::vector<int>;

struct EditBreakdown {
  std::size_t sub = 0;
  std::size_t ins = 0;
  std::size_t del = 0;
  std::size_t ref_len = 0;

  std::size_t errors() const { return sub + ins + del; }
  double wer() const {
    return ref_len == 0 ? 0.0 : static_cast<double>(errors()) / static_cast<double>(ref_len);
  }
  EditBreakdown& operator+=(const EditBreakdown& o) {
    sub += o.sub;
    ins += o.ins;
    del += o.del;
    ref_len += o.ref_len;
    return *this;
  }
};

// Unit-cost Levenshtein alignment of hypothesis against reference. The
// backtrace prefers substitution (or match), then insertion, then deletion.
// Throws InvalidArgument for an empty reference.
EditBreakdown edit_breakdown(std::span<const int> reference,
                             std::span<const int> hypothesis);

// Sums counts over all pairs before dividing.
EditBreakdown corpus_wer(const std::vector<std::pair<Labels, Labels>>& pairs);

struct ScoredSample {
  View view = View::kFront;
  Labels reference;
  Labels hypothesis;
};

// One line of the results table; rates are percentages of reference length.
struct ReportRow {
  std::string name;
  double wer = 0;
  double del = 0;
  double ins = 0;
  double sub = 0;
  std::size_t n_samples = 0;
};

struct Report {
  std::vector<ReportRow> rows;

  // Throws InvalidArgument when absent.
  const ReportRow& row(const std::string& name) const;
  bool has(const std::string& name) const;
};

inline constexpr const char* kAllRow = "All";
inline constexpr const char* kSideRow = "All side-view";

// Rows: "All" (corpus level), one per present view (corpus level within the
// view), the three angle categories and "All side-view" as arithmetic means
// of their member views.
Report assemble_report(const std::vector<ScoredSample>& samples);

// Tab-separated: name, WER, del, ins, sub, n_samples (header line first).
std::string format_report(const Report& report);
Report parse_report(const std::string& text);

}  // namespace canonslr::metrics

#endif  // CANONSLR_METRICS_H_
