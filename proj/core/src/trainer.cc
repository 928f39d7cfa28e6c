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

#include "canonslr/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

#include "canonslr/ctc.h"
#include "canonslr/error.h"
#include "canonslr/ops.h"

namespace canonslr {

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

const char* teacher_input_name(TeacherInput t) {
  return t == TeacherInput::kPairedAnchor ? "paired" : "own";
}

const char* student_init_name(StudentInit s) {
  return s == StudentInit::kScratch ? "scratch" : "teacher";
}

}  // namespace

std::string TrainConfig::canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "epochs=" << epochs << "\nlearning_rate=" << learning_rate << "\nlr_milestones=";
  for (std::size_t i = 0; i < lr_milestones.size(); ++i) os << (i ? "," : "") << lr_milestones[i];
  os << "\nlr_decay=" << lr_decay << "\nbatch_size=" << batch_size << "\nseed=" << seed
     << "\ndistill.temperature=" << distill.temperature << "\ndistill.weight=" << distill.weight
     << "\ndistill.frontal_view=" << view_name(distill.frontal_view)
     << "\ndistill.teacher_input=" << teacher_input_name(teacher_input)
     << "\nstudent_init=" << student_init_name(student_init) << "\ntme_stages=";
  for (std::size_t i = 0; i < tme.stages.size(); ++i) os << (i ? "," : "") << tme.stages[i];
  os << "\ntme.k=" << tme.k << "\nbeam_width=" << beam_width << "\ngrad_clip=" << grad_clip
     << '\n';
  return os.str();
}

std::uint64_t TrainConfig::hash() const { return fnv1a64(canonical()); }

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (!(cfg.learning_rate > 0) || !std::isfinite(cfg.learning_rate)) {
    throw InvalidArgument("learning_rate must be positive");
  }
  for (std::size_t i = 1; i < cfg.lr_milestones.size(); ++i) {
    if (cfg.lr_milestones[i] <= cfg.lr_milestones[i - 1]) {
      throw InvalidArgument("lr_milestones must be strictly increasing");
    }
  }
  if (!(cfg.lr_decay > 0)) throw InvalidArgument("lr_decay must be positive");
  if (cfg.batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (cfg.beam_width < 1) throw InvalidArgument("beam_width must be >= 1");
  if (!(cfg.grad_clip >= 0)) throw InvalidArgument("grad_clip must be >= 0");
  ssd::validate(cfg.distill);
  validate(cfg.tme);
}

double learning_rate_at(const TrainConfig& cfg, std::size_t epoch) {
  double lr = cfg.learning_rate;
  for (std::size_t m : cfg.lr_milestones) {
    if (epoch > m) lr *= cfg.lr_decay;
  }
  return lr;
}

Adam::Adam(ParameterStore<float>& params, double beta1, double beta2, double eps)
    : params_(params), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& e : params_.entries()) {
    state_.m.emplace_back(e.second.shape());
    state_.v.emplace_back(e.second.shape());
  }
}

void Adam::load(const AdamState& state) {
  if (state.m.size() != state_.m.size() || state.v.size() != state_.v.size()) {
    throw InvalidArgument("Adam::load: state size mismatch");
  }
  for (std::size_t i = 0; i < state.m.size(); ++i) {
    if (state.m[i].shape() != state_.m[i].shape() || state.v[i].shape() != state_.v[i].shape()) {
      throw InvalidArgument("Adam::load: moment shape mismatch");
    }
  }
  state_ = state;
}

void Adam::step(double lr) {
  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const double c1 = 1.0 - std::pow(beta1_, t);
  const double c2 = 1.0 - std::pow(beta2_, t);
  auto& entries = params_.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Node<float>* node = entries[i].second.node();
    if (node->grad.empty()) continue;
    float* p = node->value.data();
    const float* g = node->grad.data();
    float* m = state_.m[i].data();
    float* v = state_.v[i].data();
    for (std::size_t j = 0; j < node->value.size(); ++j) {
      const double gj = g[j];
      const double mj = beta1_ * m[j] + (1.0 - beta1_) * gj;
      const double vj = beta2_ * v[j] + (1.0 - beta2_) * gj * gj;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      p[j] = static_cast<float>(p[j] - lr * (mj / c1) / (std::sqrt(vj / c2) + eps_));
    }
  }
}

double clip_gradients(ParameterStore<float>& params, double max_norm) {
  double sq = 0;
  for (const auto& e : params.entries()) {
    for (float g : e.second.grad().values()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const float s = static_cast<float>(max_norm / norm);
    for (auto& e : params.entries()) {
      for (float& g : e.second.node()->grad.values()) g *= s;
    }
  }
  return norm;
}

template <typename T>
LossTerms<T> sample_loss(Tape<T>* tape, const Recognizer<T>& model,
                         const Tensor<T>& frames, const std::vector<int>& glosses,
                         View view, const Tensor<T>* teacher_logits,
                         const TmeOptions& tme, const ssd::DistillConfig& distill) {
  const auto out = model.forward(tape, frames, tme);
  LossTerms<T> terms;
  terms.ctc_conv = ctc::loss(tape, out.conv_logits, glosses, model.blank());
  terms.ctc_seq = ctc::loss(tape, out.seq_logits, glosses, model.blank());
  if (teacher_logits != nullptr) {
    const Tensor<T> aligned =
        ssd::align_temporal(*teacher_logits, out.seq_logits.shape()[0]);
    terms.ssd = ssd::loss(tape, aligned, out.seq_logits, view, distill);
  } else {
    terms.ssd = Var<T>(Tensor<T>({1}));
  }
  terms.total = ops::weighted_sum(tape, {terms.ctc_conv, terms.ctc_seq, terms.ssd},
                                  {T(1), T(1), static_cast<T>(distill.weight)});
  return terms;
}

template LossTerms<float> sample_loss(Tape<float>*, const Recognizer<float>&,
                                      const Tensor<float>&, const std::vector<int>&, View,
                                      const Tensor<float>*, const TmeOptions&,
                                      const ssd::DistillConfig&);
template LossTerms<double> sample_loss(Tape<double>*, const Recognizer<double>&,
                                       const Tensor<double>&, const std::vector<int>&, View,
                                       const Tensor<double>*, const TmeOptions&,
                                       const ssd::DistillConfig&);

std::string log_header() {
  return "epoch\tlr\tctc_conv\tctc_seq\tssd_weighted\ttotal\tdev_wer";
}

std::string format_log_line(const EpochRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu\t%.6g\t%.8f\t%.8f\t%.8f\t%.8f\t%.4f", r.epoch,
                r.learning_rate, r.ctc_conv, r.ctc_seq, r.ssd_weighted, r.total, r.dev_wer);
  return buf;
}

namespace {

struct TrainSample {
  const ManifestEntry* entry;
  const Tensor<float>* teacher;  // null: no distillation target
};

struct Session {
  const DatasetManifest& manifest;
  const TrainConfig& cfg;
  Role role;
  TmeOptions tme;  // applied during this stage
  std::optional<View> dev_view;
};

TrainResult run_training(const Session& s, Recognizer<float>& model,
                         const std::vector<TrainSample>& samples,
                         const EpochCallback& on_epoch) {
  Adam adam(model.params());
  std::mt19937_64 order_rng(mix(s.cfg.seed, 2));
  std::vector<std::size_t> order(samples.size());
  TrainResult result;
  for (std::size_t epoch = 1; epoch <= s.cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), order_rng);
    const double lr = learning_rate_at(s.cfg, epoch);
    double conv_sum = 0, seq_sum = 0, ssd_sum = 0;
    model.params().zero_grad();
    for (std::size_t start = 0; start < order.size(); start += s.cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + s.cfg.batch_size);
      const float seed = 1.0f / static_cast<float>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const TrainSample& sample = samples[order[k]];
        const Tensor<float> frames = read_frames(s.manifest.frame_file(*sample.entry));
        Tape<float> tape;
        const auto terms = sample_loss(&tape, model, frames, sample.entry->glosses,
                                       sample.entry->view, sample.teacher, s.tme,
                                       s.cfg.distill);
        tape.backward(terms.total, seed);
        conv_sum += terms.ctc_conv.value()[0];
        seq_sum += terms.ctc_seq.value()[0];
        ssd_sum += s.cfg.distill.weight * terms.ssd.value()[0];
      }
      if (s.cfg.grad_clip > 0) clip_gradients(model.params(), s.cfg.grad_clip);
      adam.step(lr);
      model.params().zero_grad();
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = lr;
    const double n = static_cast<double>(samples.size());
    rec.ctc_conv = conv_sum / n;
    rec.ctc_seq = seq_sum / n;
    rec.ssd_weighted = ssd_sum / n;
    rec.total = rec.ctc_conv + rec.ctc_seq + rec.ssd_weighted;
    if (!std::isfinite(rec.total)) {
      throw InvalidArgument("training diverged at epoch " + std::to_string(epoch));
    }
    rec.dev_wer = evaluate(model, s.tme, s.manifest, Split::kDev, s.cfg.beam_width, s.dev_view)
                      .report.row(metrics::kAllRow)
                      .wer;
    result.log.push_back(rec);
    if (!s.cfg.checkpoint_dir.empty()) {
      char name[64];
      std::snprintf(name, sizeof name, "%s_epoch_%03zu.ckpt",
                    std::string(role_name(s.role)).c_str(), epoch);
      write_checkpoint(std::filesystem::path(s.cfg.checkpoint_dir) / name,
                       snapshot(model, s.role, static_cast<std::uint32_t>(epoch),
                                s.cfg.hash() ^ s.manifest.config_hash, s.tme, adam.state()));
    }
    if (on_epoch) on_epoch(rec);
  }
  result.checkpoint = snapshot(model, s.role, static_cast<std::uint32_t>(s.cfg.epochs),
                               s.cfg.hash() ^ s.manifest.config_hash, s.tme, adam.state());
  return result;
}

void check_vocab(const DatasetManifest& manifest) {
  if (manifest.vocab_size < 1) throw InvalidArgument("manifest has no vocabulary");
}

}  // namespace

TrainResult train_teacher(const DatasetManifest& manifest, const TrainConfig& cfg,
                          const EpochCallback& on_epoch) {
  validate(cfg);
  check_vocab(manifest);
  const View anchor = cfg.distill.frontal_view;
  std::vector<TrainSample> samples;
  for (const auto* e : manifest.select(Split::kTrain, anchor)) samples.push_back({e, nullptr});
  if (samples.empty()) {
    throw InvalidArgument("no " + std::string(view_name(anchor)) + "-view training samples");
  }
  if (manifest.select(Split::kDev, anchor).empty()) {
    throw InvalidArgument("no " + std::string(view_name(anchor)) + "-view dev samples");
  }
  Recognizer<float> model(static_cast<std::size_t>(manifest.vocab_size), mix(cfg.seed, 0));
  const Session session{manifest, cfg, Role::kTeacher, TmeOptions{{}, cfg.tme.k}, anchor};
  return run_training(session, model, samples, on_epoch);
}

TrainResult train_student(const DatasetManifest& manifest, const Checkpoint& teacher,
                          const TrainConfig& cfg, const EpochCallback& on_epoch) {
  validate(cfg);
  check_vocab(manifest);
  if (teacher.role != Role::kTeacher) throw InvalidArgument("train_student: checkpoint is not a teacher");
  if (teacher.vocab_size != static_cast<std::uint32_t>(manifest.vocab_size)) {
    throw InvalidArgument("train_student: teacher vocabulary does not match the manifest");
  }
  const Recognizer<float> frozen = instantiate(teacher);
  const View anchor = cfg.distill.frontal_view;
  const auto train = manifest.select(Split::kTrain);
  if (train.empty()) throw InvalidArgument("no training samples");
  if (manifest.select(Split::kDev).empty()) throw InvalidArgument("no dev samples");

  // Distillation targets from the frozen teacher, one per distinct input.
  const bool distill = cfg.distill.weight > 0;
  std::map<const ManifestEntry*, Tensor<float>> targets;
  std::vector<TrainSample> samples;
  for (const auto* e : train) {
    const ManifestEntry& paired = manifest.find(e->source_id, anchor);
    const ManifestEntry& input = cfg.teacher_input == TeacherInput::kPairedAnchor ? paired : *e;
    const Tensor<float>* target = nullptr;
    if (distill) {
      auto it = targets.find(&input);
      if (it == targets.end()) {
        const auto out = frozen.forward(nullptr, read_frames(manifest.frame_file(input)),
                                        teacher.tme);
        it = targets.emplace(&input, out.seq_logits.value()).first;
      }
      target = &it->second;
    }
    samples.push_back({e, target});
  }

  Recognizer<float> model(static_cast<std::size_t>(manifest.vocab_size), mix(cfg.seed, 1));
  if (cfg.student_init == StudentInit::kTeacher) restore(teacher, model);
  const Session session{manifest, cfg, Role::kStudent, cfg.tme, std::nullopt};
  return run_training(session, model, samples, on_epoch);
}

Evaluation evaluate(const Recognizer<float>& model, const TmeOptions& tme,
                    const DatasetManifest& manifest, Split split, int beam_width,
                    std::optional<View> only_view) {
  const auto entries = only_view ? manifest.select(split, *only_view) : manifest.select(split);
  if (entries.empty()) {
    throw InvalidArgument("evaluate: no samples in split " + std::string(split_name(split)));
  }
  Evaluation ev;
  for (const auto* e : entries) {
    const auto out = model.forward(nullptr, read_frames(manifest.frame_file(*e)), tme);
    ev.samples.push_back(
        {e->view, e->glosses, ctc::beam_decode(out.seq_logits.value(), beam_width, model.blank())});
  }
  ev.report = metrics::assemble_report(ev.samples);
  return ev;
}

Evaluation evaluate(const Checkpoint& checkpoint, const DatasetManifest& manifest, Split split,
                    int beam_width) {
  const Recognizer<float> model = instantiate(checkpoint);
  return evaluate(model, checkpoint.tme, manifest, split, beam_width);
}

}  // namespace canonslr
