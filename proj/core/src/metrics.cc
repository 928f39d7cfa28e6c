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

#include "canonslr/metrics.h"

#include <iomanip>
#include <map>
#include <sstream>

#include "canonslr/error.h"

namespace canonslr::metrics {

EditBreakdown edit_breakdown(std::span<const int> reference,
                             std::span<const int> hypothesis) {
  if (reference.empty()) throw InvalidArgument("edit_breakdown: empty reference");
  const std::size_t n = reference.size(), m = hypothesis.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i, j - 1) + 1, at(i - 1, j) + 1});
    }
  }
  EditBreakdown out;
  out.ref_len = n;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = reference[i - 1] == hypothesis[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        if (!same) ++out.sub;
        --i;
        --j;
        continue;
      }
    }
    if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      ++out.ins;
      --j;
      continue;
    }
    ++out.del;
    --i;
  }
  return out;
}

EditBreakdown corpus_wer(const std::vector<std::pair<Labels, Labels>>& pairs) {
  if (pairs.empty()) throw InvalidArgument("corpus_wer: no pairs");
  EditBreakdown total;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (pairs[k].first.empty()) {
      throw InvalidArgument("corpus_wer: empty reference at index " + std::to_string(k));
    }
    total += edit_breakdown(pairs[k].first, pairs[k].second);
  }
  return total;
}

const ReportRow& Report::row(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.name == name) return r;
  }
  throw InvalidArgument("report has no row '" + name + "'");
}

bool Report::has(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.name == name) return true;
  }
  return false;
}

namespace {

ReportRow rate_row(const std::string& name, const EditBreakdown& e, std::size_t n) {
  const double ref = static_cast<double>(e.ref_len);
  return {name,
          100.0 * static_cast<double>(e.errors()) / ref,
          100.0 * static_cast<double>(e.del) / ref,
          100.0 * static_cast<double>(e.ins) / ref,
          100.0 * static_cast<double>(e.sub) / ref,
          n};
}

ReportRow mean_row(const std::string& name, const std::vector<const ReportRow*>& members) {
  ReportRow r{name, 0, 0, 0, 0, 0};
  for (const auto* m : members) {
    r.wer += m->wer;
    r.del += m->del;
    r.ins += m->ins;
    r.sub += m->sub;
    r.n_samples += m->n_samples;
  }
  const double k = static_cast<double>(members.size());
  r.wer /= k;
  r.del /= k;
  r.ins /= k;
  r.sub /= k;
  return r;
}

}  // namespace

Report assemble_report(const std::vector<ScoredSample>& samples) {
  if (samples.empty()) throw InvalidArgument("assemble_report: no samples");
  EditBreakdown all;
  std::map<View, std::pair<EditBreakdown, std::size_t>> per_view;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    if (s.reference.empty()) {
      throw InvalidArgument("assemble_report: empty reference at index " + std::to_string(k));
    }
    const auto e = edit_breakdown(s.reference, s.hypothesis);
    all += e;
    per_view[s.view].first += e;
    per_view[s.view].second += 1;
  }
  Report report;
  report.rows.push_back(rate_row(kAllRow, all, samples.size()));
  std::map<View, std::size_t> index;
  for (View v : kAllViews) {
    auto it = per_view.find(v);
    if (it == per_view.end()) continue;
    index[v] = report.rows.size();
    report.rows.push_back(rate_row(std::string(view_name(v)), it->second.first, it->second.second));
  }
  auto members_of = [&](const std::vector<View>& views) {
    std::vector<const ReportRow*> members;
    for (View v : views) {
      auto it = index.find(v);
      if (it == index.end()) return std::vector<const ReportRow*>{};
      members.push_back(&report.rows[it->second]);
    }
    return members;
  };
  std::vector<ReportRow> derived;
  for (ViewCategory c : kAllCategories) {
    if (c == ViewCategory::kFront) continue;  // identical to the Front view row
    const auto members = members_of(category_views(c));
    if (!members.empty()) derived.push_back(mean_row(std::string(category_name(c)), members));
  }
  std::vector<View> side;
  for (View v : kAllViews) {
    if (v != View::kFront) side.push_back(v);
  }
  const auto side_members = members_of(side);
  if (!side_members.empty()) derived.push_back(mean_row(kSideRow, side_members));
  for (auto& r : derived) report.rows.push_back(std::move(r));
  return report;
}

std::string format_report(const Report& report) {
  std::ostringstream os;
  os << "name\tWER\tdel\tins\tsub\tn_samples\n" << std::fixed << std::setprecision(4);
  for (const auto& r : report.rows) {
    os << r.name << '\t' << r.wer << '\t' << r.del << '\t' << r.ins << '\t' << r.sub
       << '\t' << r.n_samples << '\n';
  }
  return os.str();
}

Report parse_report(const std::string& text) {
  Report report;
  std::istringstream is(text);
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::istringstream ls(line);
    ReportRow r;
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ls, field, '\t')) f.push_back(field);
    if (f.size() != 6) throw InvalidArgument("report line has " + std::to_string(f.size()) + " fields");
    r.name = f[0];
    r.wer = std::stod(f[1]);
    r.del = std::stod(f[2]);
    r.ins = std::stod(f[3]);
    r.sub = std::stod(f[4]);
    r.n_samples = std::stoul(f[5]);
    report.rows.push_back(std::move(r));
  }
  return report;
}

}  // namespace canonslr::metrics
