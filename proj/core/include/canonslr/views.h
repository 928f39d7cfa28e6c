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

#ifndef CANONSLR_VIEWS_H_
#define CANONSLR_VIEWS_H_

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace canonslr {

// The seven synthesized camera viewpoints.
enum class View { kFront, kR45, kR90, kL30, kL60, kU30, kD30 };

inline constexpr std::array<View, 7> kAllViews = {
    View::kFront, View::kR45, View::kR90, View::kL30,
    View::kL60,   View::kU30, View::kD30};

struct ViewAngle {
  View name;
  double yaw_deg;    // positive = rotate toward R
  double pitch_deg;  // positive = U
};

ViewAngle view_angle(View view);
std::string_view view_name(View view);
// Accepts the canonical names ("Front", "R45", ...). Throws InvalidArgument.
View parse_view(std::string_view name);

// Reporting groups for per-view results.
enum class ViewCategory { kLargeAngle, kSmallAngle, kPitch, kFront };

inline constexpr std::array<ViewCategory, 4> kAllCategories = {
    ViewCategory::kLargeAngle, ViewCategory::kSmallAngle, ViewCategory::kPitch,
    ViewCategory::kFront};

std::string_view category_name(ViewCategory category);
std::vector<View> category_views(ViewCategory category);

}  // namespace canonslr

#endif  // CANONSLR_VIEWS_H_
