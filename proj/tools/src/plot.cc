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

#include "canonslr_tools/plot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace canonslr::tools {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
constexpr double kWidth = 720, kHeight = 420;
constexpr double kLeft = 60, kRight = 160, kTop = 40, kBottom = 50;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

double axis_top(const ParsedTable& t) {
  double hi = 0;
  for (const auto& row : t.values) {
    for (double v : row) hi = std::max(hi, v);
  }
  if (hi <= 0) return 1;
  const double step = std::pow(10.0, std::floor(std::log10(hi)));
  return std::ceil(hi / step) * step;
}

}  // namespace

std::string table_csv(const ParsedTable& t) {
  std::ostringstream os;
  os << "label";
  for (const auto& c : t.columns) os << ',' << c;
  os << '\n';
  for (std::size_t r = 0; r < t.labels.size(); ++r) {
    os << t.labels[r];
    for (double v : t.values[r]) os << ',' << num(v);
    os << '\n';
  }
  return os.str();
}

std::string table_svg(const ParsedTable& t, const std::string& axis, const std::string& title) {
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  const double top = axis_top(t);
  auto y_of = [&](double v) { return kTop + plot_h * (1.0 - v / top); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
     << escape(title) << "</text>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = top * i / 5.0, y = y_of(v);
    os << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + plot_w << "\" y1=\"" << num(y)
       << "\" y2=\"" << num(y) << "\" stroke=\"#ddd\"/>\n"
       << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
       << num(v) << "</text>\n";
  }
  os << "<text x=\"16\" y=\"" << kTop + plot_h / 2 << "\" transform=\"rotate(-90 16 "
     << kTop + plot_h / 2 << ")\" text-anchor=\"middle\">WER (%)</text>\n";
  const std::size_t rows = t.labels.size(), metrics = t.columns.size();
  const double group_w = plot_w / static_cast<double>(std::max<std::size_t>(rows, 1));
  if (axis == "lambda") {
    for (std::size_t m = 0; m < metrics; ++m) {
      os << "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"" << kPalette[m % 8]
         << "\" points=\"";
      for (std::size_t r = 0; r < rows; ++r) {
        os << num(kLeft + group_w * (r + 0.5)) << ',' << num(y_of(t.values[r][m])) << ' ';
      }
      os << "\"/>\n";
    }
  } else {
    const double bar_w = group_w * 0.8 / static_cast<double>(std::max<std::size_t>(metrics, 1));
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t m = 0; m < metrics; ++m) {
        const double x = kLeft + group_w * r + group_w * 0.1 + bar_w * m;
        const double y = y_of(t.values[r][m]);
        os << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(bar_w)
           << "\" height=\"" << num(kTop + plot_h - y) << "\" fill=\"" << kPalette[m % 8]
           << "\"/>\n";
      }
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    os << "<text x=\"" << num(kLeft + group_w * (r + 0.5)) << "\" y=\""
       << num(kTop + plot_h + 18) << "\" text-anchor=\"middle\">" << escape(t.labels[r])
       << "</text>\n";
  }
  os << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
     << "\" text-anchor=\"middle\">" << escape(axis) << "</text>\n";
  for (std::size_t m = 0; m < metrics; ++m) {
    const double y = kTop + 10 + 18.0 * m;
    os << "<rect x=\"" << kLeft + plot_w + 16 << "\" y=\"" << num(y - 9) << "\" width=\"12\" "
       << "height=\"12\" fill=\"" << kPalette[m % 8] << "\"/>\n"
       << "<text x=\"" << kLeft + plot_w + 34 << "\" y=\"" << num(y + 1) << "\">"
       << escape(t.columns[m]) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace canonslr::tools
