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

#ifndef CANONSLR_SYNTHVIEWS_H_
#define CANONSLR_SYNTHVIEWS_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "canonslr/tensor.h"

// Procedural multi-view sign sequences: per-gloss hand trajectories on a
// stick skeleton, rigid root rotation to a target viewpoint, and a blob
// rasterizer with depth-ordered occlusion.
namespace canonslr::synth {

struct GlossVocabulary {
  std::vector<std::string> glosses;
  std::vector<std::uint64_t> primitive_seeds;  // one per gloss
  int blank_index = 0;                         // == glosses.size()

  int size() const { return static_cast<int>(glosses.size()); }
  int num_classes() const { return size() + 1; }
};

// Deterministic in (size, seed). Throws InvalidArgument when size < 2.
GlossVocabulary build_vocabulary(int size, std::uint64_t seed);

enum Joint : int {
  kPelvis = 0,
  kSpine,
  kHead,
  kLeftShoulder,
  kRightShoulder,
  kLeftElbow,
  kRightElbow,
  kLeftWrist,
  kRightWrist,
  kLeftHand,
  kRightHand,
  kNumJoints
};

enum class JointGroup { kTorso, kHead, kLeftHand, kRightHand };
JointGroup joint_group(int joint);

// joints: [T, J, 3], pelvis-centered (x right, y up, z toward the camera).
struct SkeletonSequence {
  Tensor<double> joints;

  std::size_t frames() const { return joints.dim(0); }
  std::size_t num_joints() const { return joints.dim(1); }
};

struct MotionOptions {
  int frames_per_gloss = 8;
  int transition_frames = 2;
};

// One cubic Bezier segment per gloss for each hand tip, linear blends
// between segments. rng_seed only varies per-sequence signer proportions,
// so repeated glosses within a sequence trace identical trajectories.
SkeletonSequence synthesize_motion(std::span<const int> glosses,
                                   const GlossVocabulary& vocab,
                                   const MotionOptions& options,
                                   std::uint64_t rng_seed);

// Row-major R_y(yaw) * R_x(pitch).
std::array<double, 9> rotation_matrix(double yaw_deg, double pitch_deg);

SkeletonSequence rotate_view(const SkeletonSequence& skel, double yaw_deg,
                             double pitch_deg);

// Weak-perspective blob rendering, returns [T, 3, H, W] with values in [0,1].
// The pelvis origin projects onto pixel (H/2, W/2).
Tensor<float> render_frames(const SkeletonSequence& skel, int height,
                            int width);

// Color of a joint group's blobs.
std::array<float, 3> group_color(JointGroup group);

}  // namespace canonslr::synth

#endif  // CANONSLR_SYNTHVIEWS_H_
