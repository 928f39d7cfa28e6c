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

#ifndef CANONSLR_TRAINER_H_
#define CANONSLR_TRAINER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "canonslr/backbone.h"
#include "canonslr/checkpoint.h"
#include "canonslr/dataset.h"
#include "canonslr/metrics.h"
#include "canonslr/ssd.h"

namespace canonslr {

// Which teacher input is distilled against a student sample.
enum class TeacherInput { kPairedAnchor, kOwnView };
// Starting point of the student's parameters.
enum class StudentInit { kScratch, kTeacher };

struct TrainConfig {
  std::size_t epochs = 40;
  double learning_rate = 1e-4;
  std::vector<std::size_t> lr_milestones = {25, 35};
  double lr_decay = 0.2;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  ssd::DistillConfig distill;
  TeacherInput teacher_input = TeacherInput::kPairedAnchor;
  StudentInit student_init = StudentInit::kScratch;
  TmeOptions tme{{3, 4}, 4};
  int beam_width = 10;
  double grad_clip = 0;  // global L2 norm cap; 0 disables
  std::string checkpoint_dir;  // empty: no per-epoch checkpoints

  std::string canonical() const;
  std::uint64_t hash() const;
};

void validate(const TrainConfig& cfg);

// Learning rate used during the 1-based epoch: decayed once per milestone
// already passed (a milestone m affects epochs m+1 onwards).
double learning_rate_at(const TrainConfig& cfg, std::size_t epoch);

class Adam {
 public:
  Adam(ParameterStore<float>& params, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  // Applies one update from the accumulated gradients; parameters without a
  // gradient keep their values and moments.
  void step(double lr);

  const AdamState& state() const { return state_; }
  void load(const AdamState& state);

 private:
  ParameterStore<float>& params_;
  double beta1_, beta2_, eps_;
  AdamState state_;
};

// Scales all gradients so their joint L2 norm is at most max_norm. Returns
// the norm before scaling.
double clip_gradients(ParameterStore<float>& params, double max_norm);

template <typename T>
struct LossTerms {
  Var<T> ctc_conv;
  Var<T> ctc_seq;
  Var<T> ssd;    // unweighted distillation term
  Var<T> total;  // ctc_conv + ctc_seq + weight * ssd
};

// Per-sample objective. teacher_logits: teacher sequence logits for the
// distillation target, or null to drop the term.
template <typename T>
LossTerms<T> sample_loss(Tape<T>* tape, const Recognizer<T>& model,
                         const Tensor<T>& frames, const std::vector<int>& glosses,
                         View view, const Tensor<T>* teacher_logits,
                         const TmeOptions& tme, const ssd::DistillConfig& distill);

struct EpochRecord {
  std::size_t epoch = 0;
  double learning_rate = 0;
  double ctc_conv = 0;      // mean over samples
  double ctc_seq = 0;
  double ssd_weighted = 0;  // weight * distillation term
  double total = 0;         // sum of the three terms above
  double dev_wer = 0;       // percent
};

std::string log_header();
std::string format_log_line(const EpochRecord& record);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochRecord> log;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Stage I: trains on the anchor-view training samples only, without TME.
// Throws InvalidArgument when that subset is empty.
TrainResult train_teacher(const DatasetManifest& manifest, const TrainConfig& cfg,
                          const EpochCallback& on_epoch = {});

// Stage II: all views, frozen teacher. Throws DataIntegrityError when a
// training source lacks its anchor-view sample.
TrainResult train_student(const DatasetManifest& manifest, const Checkpoint& teacher,
                          const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct Evaluation {
  metrics::Report report;
  std::vector<metrics::ScoredSample> samples;
};

// Beam-decodes the sequence logits of every sample in the split, optionally
// restricted to one view. Throws InvalidArgument when nothing is selected.
Evaluation evaluate(const Recognizer<float>& model, const TmeOptions& tme,
                    const DatasetManifest& manifest, Split split, int beam_width,
                    std::optional<View> only_view = std::nullopt);
Evaluation evaluate(const Checkpoint& checkpoint, const DatasetManifest& manifest,
                    Split split, int beam_width);

}  // namespace canonslr

#endif  // CANONSLR_TRAINER_H_
