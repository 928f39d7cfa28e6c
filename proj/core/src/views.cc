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

#include "canonslr/views.h"

#include "canonslr/error.h"

namespace canonslr {

ViewAngle view_angle(View view) {
  switch (view) {
    case View::kFront: return {view, 0.0, 0.0};
    case View::kR45: return {view, 45.0, 0.0};
    case View::kR90: return {view, 90.0, 0.0};
    case View::kL30: return {view, -30.0, 0.0};
    case View::kL60: return {view, -60.0, 0.0};
    case View::kU30: return {view, 0.0, 30.0};
    case View::kD30: return {view, 0.0, -30.0};
  }
  throw InvalidArgument("unknown view");
}

std::string_view view_name(View view) {
  switch (view) {
    case View::kFront: return "Front";
    case View::kR45: return "R45";
    case View::kR90: return "R90";
    case View::kL30: return "L30";
    case View::kL60: return "L60";
    case View::kU30: return "U30";
    case View::kD30: return "D30";
  }
  throw InvalidArgument("unknown view");
}

View parse_view(std::string_view name) {
  for (View v : kAllViews) {
    if (view_name(v) == name) return v;
  }
  throw InvalidArgument("unknown view name '" + std::string(name) + "'");
}

std::string_view category_name(ViewCategory category) {
  switch (category) {
    case ViewCategory::kLargeAngle: return "Large angle";
    case ViewCategory::kSmallAngle: return "Small angle";
    case ViewCategory::kPitch: return "Pitch";
    case ViewCategory::kFront: return "Front";
  }
  throw InvalidArgument("unknown category");
}

std::vector<View> category_views(ViewCategory category) {
  switch (category) {
    case ViewCategory::kLargeAngle: return {View::kR90, View::kL60};
    case ViewCategory::kSmallAngle: return {View::kR45, View::kL30};
    case ViewCategory::kPitch: return {View::kD30, View::kU30};
    case ViewCategory::kFront: return {View::kFront};
  }
  throw InvalidArgument("unknown category");
}

}  // namespace canonslr
