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

#include "canonslr/synthviews.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "canonslr/error.h"

namespace canonslr::synth {
namespace {

using Vec3 = std::array<double, 3>;

Vec3 lerp(const Vec3& a, const Vec3& b, double u) {
  return {a[0] + (b[0] - a[0]) * u, a[1] + (b[1] - a[1]) * u,
          a[2] + (b[2] - a[2]) * u};
}

struct Bezier {
  std::array<Vec3, 4> p;

  Vec3 at(double u) const {
    const double v = 1.0 - u;
    const double w0 = v * v * v, w1 = 3 * v * v * u, w2 = 3 * v * u * u,
                 w3 = u * u * u;
    Vec3 out;
    for (int k = 0; k < 3; ++k) {
      out[k] = w0 * p[0][k] + w1 * p[1][k] + w2 * p[2][k] + w3 * p[3][k];
    }
    return out;
  }
};

// Hand-tip workspace in front of the torso. The left hand lives on -x.
struct Primitive {
  Bezier left, right;
};

Primitive make_primitive(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, 0.45);
  std::uniform_real_distribution<double> uy(0.05, 0.8);
  std::uniform_real_distribution<double> uz(0.05, 0.55);
  Primitive prim;
  for (auto& pt : prim.left.p) pt = {-ux(rng), uy(rng), uz(rng)};
  for (auto& pt : prim.right.p) pt = {ux(rng), uy(rng), uz(rng)};
  return prim;
}

struct Body {
  double scale;
  Vec3 spine, head, left_shoulder, right_shoulder;
};

void pose_arm(const Vec3& shoulder, const Vec3& hand, double outward, Vec3& elbow,
              Vec3& wrist) {
  wrist = lerp(shoulder, hand, 0.85);
  elbow = lerp(shoulder, hand, 0.45);
  elbow[0] += outward;
  elbow[1] -= 0.1;
}

void write_frame(Tensor<double>& joints, std::size_t t, const Body& body,
                 const Vec3& left_hand, const Vec3& right_hand) {
  auto put = [&](int j, const Vec3& p) {
    for (int k = 0; k < 3; ++k) joints(t, j, k) = body.scale * p[k];
  };
  put(kPelvis, {0, 0, 0});
  put(kSpine, body.spine);
  put(kHead, body.head);
  put(kLeftShoulder, body.left_shoulder);
  put(kRightShoulder, body.right_shoulder);
  Vec3 elbow, wrist;
  pose_arm(body.left_shoulder, left_hand, -0.08, elbow, wrist);
  put(kLeftElbow, elbow);
  put(kLeftWrist, wrist);
  put(kLeftHand, left_hand);
  pose_arm(body.right_shoulder, right_hand, 0.08, elbow, wrist);
  put(kRightElbow, elbow);
  put(kRightWrist, wrist);
  put(kRightHand, right_hand);
}

}  // namespace

GlossVocabulary build_vocabulary(int size, std::uint64_t seed) {
  if (size < 2) {
    throw InvalidArgument("vocabulary size must be >= 2, got " +
                          std::to_string(size));
  }
  GlossVocabulary vocab;
  std::mt19937_64 rng(seed);
  const int width = size >= 100 ? 3 : 2;
  for (int i = 0; i < size; ++i) {
    std::string idx = std::to_string(i);
    if (static_cast<int>(idx.size()) < width) {
      idx.insert(0, static_cast<std::size_t>(width) - idx.size(), '0');
    }
    vocab.glosses.push_back("G" + idx);
    vocab.primitive_seeds.push_back(rng());
  }
  vocab.blank_index = size;
  return vocab;
}

JointGroup joint_group(int joint) {
  switch (joint) {
    case kPelvis:
    case kSpine:
    case kLeftShoulder:
    case kRightShoulder:
      return JointGroup::kTorso;
    case kHead:
      return JointGroup::kHead;
    case kLeftElbow:
    case kLeftWrist:
    case kLeftHand:
      return JointGroup::kLeftHand;
    case kRightElbow:
    case kRightWrist:
    case kRightHand:
      return JointGroup::kRightHand;
    default:
      throw InvalidArgument("joint index out of range");
  }
}

std::array<float, 3> group_color(JointGroup group) {
  switch (group) {
    case JointGroup::kTorso: return {0.55f, 0.55f, 0.55f};
    case JointGroup::kHead: return {0.95f, 0.8f, 0.6f};
    case JointGroup::kLeftHand: return {0.95f, 0.2f, 0.15f};
    case JointGroup::kRightHand: return {0.15f, 0.4f, 0.95f};
  }
  return {0, 0, 0};
}

SkeletonSequence synthesize_motion(std::span<const int> glosses,
                                   const GlossVocabulary& vocab,
                                   const MotionOptions& options,
                                   std::uint64_t rng_seed) {
  if (glosses.empty()) throw InvalidArgument("synthesize_motion: empty gloss sequence");
  if (options.frames_per_gloss < 1 || options.transition_frames < 0) {
    throw InvalidArgument("synthesize_motion: bad frame counts");
  }
  for (int g : glosses) {
    if (g == vocab.blank_index) {
      throw InvalidArgument("synthesize_motion: blank index in gloss sequence");
    }
    if (g < 0 || g >= vocab.size()) {
      throw InvalidArgument("synthesize_motion: gloss index " + std::to_string(g) +
                            " out of range");
    }
  }

  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  Body body;
  body.scale = 1.0 + 0.08 * jitter(rng);
  const double shoulder_half = 0.22 + 0.02 * jitter(rng);
  body.spine = {0, 0.42, 0};
  body.head = {0, 0.85 + 0.03 * jitter(rng), 0};
  body.left_shoulder = {-shoulder_half, 0.62, 0};
  body.right_shoulder = {shoulder_half, 0.62, 0};

  const std::size_t per = static_cast<std::size_t>(options.frames_per_gloss);
  const std::size_t gap = static_cast<std::size_t>(options.transition_frames);
  const std::size_t m = glosses.size();
  const std::size_t frames = m * per + (m - 1) * gap;
  SkeletonSequence out{Tensor<double>({frames, kNumJoints, 3})};

  std::size_t t = 0;
  Vec3 prev_left{}, prev_right{};
  for (std::size_t s = 0; s < m; ++s) {
    const Primitive prim =
        make_primitive(vocab.primitive_seeds[static_cast<std::size_t>(glosses[s])]);
    const Vec3 start_left = prim.left.at(0.0), start_right = prim.right.at(0.0);
    if (s > 0) {
      for (std::size_t k = 1; k <= gap; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(gap + 1);
        write_frame(out.joints, t++, body, lerp(prev_left, start_left, u),
                    lerp(prev_right, start_right, u));
      }
    }
    for (std::size_t k = 0; k < per; ++k) {
      const double u =
          per == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(per - 1);
      prev_left = prim.left.at(u);
      prev_right = prim.right.at(u);
      write_frame(out.joints, t++, body, prev_left, prev_right);
    }
  }
  return out;
}

std::array<double, 9> rotation_matrix(double yaw_deg, double pitch_deg) {
  const double a = std::fmod(yaw_deg, 360.0) * std::numbers::pi / 180.0;
  const double b = std::fmod(pitch_deg, 360.0) * std::numbers::pi / 180.0;
  const double ca = std::cos(a), sa = std::sin(a);
  const double cb = std::cos(b), sb = std::sin(b);
  // R_y(a) = [[ca,0,sa],[0,1,0],[-sa,0,ca]], R_x(b) = [[1,0,0],[0,cb,-sb],[0,sb,cb]]
  return {ca, sa * sb,  sa * cb,   //
          0,  cb,       -sb,       //
          -sa, ca * sb, ca * cb};
}

SkeletonSequence rotate_view(const SkeletonSequence& skel, double yaw_deg,
                             double pitch_deg) {
  SkeletonSequence out = skel;
  if (yaw_deg == 0.0 && pitch_deg == 0.0) return out;
  const auto r = rotation_matrix(yaw_deg, pitch_deg);
  const std::size_t points = skel.frames() * skel.num_joints();
  const double* src = skel.joints.data();
  double* dst = out.joints.data();
  for (std::size_t p = 0; p < points; ++p) {
    const double x = src[3 * p], y = src[3 * p + 1], z = src[3 * p + 2];
    dst[3 * p] = r[0] * x + r[1] * y + r[2] * z;
    dst[3 * p + 1] = r[3] * x + r[4] * y + r[5] * z;
    dst[3 * p + 2] = r[6] * x + r[7] * y + r[8] * z;
  }
  return out;
}

Tensor<float> render_frames(const SkeletonSequence& skel, int height,
                            int width) {
  if (height < 16 || width < 16) {
    throw InvalidArgument("render_frames: frame size must be at least 16x16");
  }
  if (!all_finite(skel.joints)) {
    throw InvalidArgument("render_frames: non-finite joint coordinates");
  }
  const std::size_t frames = skel.frames(), joints = skel.num_joints();
  const std::size_t h = static_cast<std::size_t>(height);
  const std::size_t w = static_cast<std::size_t>(width);
  Tensor<float> out({frames, 3, h, w});

  // One unit maps to 45% of the shorter side.
  const double px_per_unit = 0.45 * static_cast<double>(std::min(h, w));
  const double sigma_base = 0.035 * static_cast<double>(std::min(h, w));
  const double cx = static_cast<double>(w) / 2.0;
  const double cy = static_cast<double>(h) / 2.0;

  std::vector<std::size_t> order(joints);
  for (std::size_t t = 0; t < frames; ++t) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return skel.joints(t, a, 2) < skel.joints(t, b, 2);
    });
    for (std::size_t j : order) {
      const int ji = static_cast<int>(j);
      const bool tip = ji == kLeftHand || ji == kRightHand;
      const double sigma = tip ? 1.4 * sigma_base : sigma_base;
      const double u = cx + px_per_unit * skel.joints(t, j, 0);
      const double v = cy - px_per_unit * skel.joints(t, j, 1);
      const auto color = group_color(joint_group(ji < kNumJoints ? ji : kPelvis));
      const double reach = 3.0 * sigma;
      const long y0 = std::max(0L, static_cast<long>(std::floor(v - reach)));
      const long y1 = std::min(static_cast<long>(h) - 1, static_cast<long>(std::ceil(v + reach)));
      const long x0 = std::max(0L, static_cast<long>(std::floor(u - reach)));
      const long x1 = std::min(static_cast<long>(w) - 1, static_cast<long>(std::ceil(u + reach)));
      for (long y = y0; y <= y1; ++y) {
        for (long x = x0; x <= x1; ++x) {
          const double d2 = (x - u) * (x - u) + (y - v) * (y - v);
          if (d2 > reach * reach) continue;
          const float a = static_cast<float>(std::exp(-d2 / (2 * sigma * sigma)));
          for (std::size_t c = 0; c < 3; ++c) {
            float& px = out(t, c, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
            px = (1.0f - a) * px + a * color[c];
          }
        }
      }
    }
  }
  return out;
}

}  // namespace canonslr::synth
