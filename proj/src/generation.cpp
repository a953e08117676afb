#include "rmx/generation.hpp"

#include <cmath>

#include "rmx/error.hpp"

namespace rmx {

void validate_preprocessed(const PoseFrame& frame, const SkeletonTopology& topo,
                           double tolerance) {
  frame.validate();
  const auto lengths = bone_lengths(frame, topo);
  const auto ref = topo.reference_bone_lengths();
  for (std::size_t b = 0; b < kNumBones; ++b) {
    const double rel = std::abs(lengths[b] - ref[b]) / ref[b];
    if (!(rel <= tolerance)) {
      throw ValidationError("frame " + std::to_string(frame.frame_index) + ": bone to joint " +
                            std::string(topo.joint_set().joint_names[topo.bone_child(b)]) +
                            " is off its reference length by " +
                            std::to_string(rel * 100.0) + "%");
    }
  }
}

GenerationSession::GenerationSession(const MotionModel<float>& model,
                                     std::span<const PoseFrame> subject_warmup,
                                     std::optional<std::span<const PoseFrame>> counterpart_warmup,
                                     const SkeletonTopology& topo)
    : model_(&model),
      topo_(&topo),
      mode_(counterpart_warmup ? GenerationMode::kOffline : GenerationMode::kStream) {
  const std::size_t ctx = model.config().ctx_len;
  if (subject_warmup.size() != ctx) {
    throw ValidationError("warm-up needs exactly " + std::to_string(ctx) +
                          " subject frames, got " + std::to_string(subject_warmup.size()));
  }
  if (counterpart_warmup && counterpart_warmup->size() != ctx) {
    throw ValidationError("warm-up needs exactly " + std::to_string(ctx) +
                          " counterpart frames, got " +
                          std::to_string(counterpart_warmup->size()));
  }
  for (std::size_t k = 0; k < ctx; ++k) {
    validate_preprocessed(subject_warmup[k], topo);
    subject_.push_back(subject_warmup[k]);
    if (counterpart_warmup) {
      validate_preprocessed((*counterpart_warmup)[k], topo);
      counterpart_.push_back((*counterpart_warmup)[k]);
    } else {
      counterpart_.push_back(mirror_frame(subject_warmup[k]));
    }
    generated_flags_.push_back(false);
  }
}

ModelInput<float> GenerationSession::current_input() const {
  const auto& cfg = model_->config();
  const std::size_t F = kFeaturesPerPerson;
  const std::size_t ctx = cfg.ctx_len;
  ModelInput<float> in;
  in.batch = 1;
  in.x_ctx = nn::Tensor<float>({1, ctx, F});
  in.y_ctx = nn::Tensor<float>({1, ctx, F});
  in.past = nn::Tensor<float>({1, cfg.past_len, 2 * F});
  for (std::size_t t = 0; t < ctx; ++t) {
    const auto x = subject_[t].features();
    const auto y = counterpart_[t].features();
    std::copy(x.begin(), x.end(), in.x_ctx.data() + t * F);
    std::copy(y.begin(), y.end(), in.y_ctx.data() + t * F);
  }
  // The past window is the tail of the two context windows.
  for (std::size_t t = 0; t < cfg.past_len; ++t) {
    const std::size_t src = ctx - cfg.past_len + t;
    std::copy_n(in.x_ctx.data() + src * F, F, in.past.data() + t * 2 * F);
    std::copy_n(in.y_ctx.data() + src * F, F, in.past.data() + t * 2 * F + F);
  }
  return in;
}

PoseFrame GenerationSession::step(const PoseFrame& subject) {
  if (frozen_) throw ValidationError("session is frozen after divergence");
  validate_preprocessed(subject, *topo_);

  // The subject frame for time t is not part of the input that predicts
  // the counterpart at t; it enters the window afterwards.
  auto diverge = [&](const std::string& why) {
    frozen_ = true;
    return DivergenceError("divergence at frame " + std::to_string(subject.frame_index) +
                               " (step " + std::to_string(generated_) + "): " + why,
                           subject.frame_index);
  };
  nn::Var<float> out;
  {
    nn::NoGradGuard no_grad;
    try {
      out = model_->forward(current_input(), {});
    } catch (const DivergenceError&) {
      throw diverge("non-finite model output");
    }
  }
  for (float v : out->value.storage()) {
    if (!std::isfinite(v) || std::abs(v) > kDivergenceLimit) {
      throw diverge("coordinate out of range");
    }
  }
  PoseFrame generated = PoseFrame::from_features(out->value.storage(), 1, subject.frame_index);

  subject_.pop_front();
  subject_.push_back(subject);
  counterpart_.pop_front();
  counterpart_.push_back(generated);
  generated_flags_.pop_front();
  generated_flags_.push_back(true);
  ++generated_;
  return generated;
}

OfflineResult run_offline(const MotionModel<float>& model, const PairedClip& pair,
                          std::size_t horizon, const SkeletonTopology& topo, bool mirror_init) {
  const std::size_t ctx = model.config().ctx_len;
  if (pair.size() < ctx + horizon) {
    throw ValidationError("pair has " + std::to_string(pair.size()) + " frames, need " +
                          std::to_string(ctx + horizon));
  }
  const auto& subj = pair.subject.frames();
  const auto& cp = pair.counterpart.frames();
  std::span<const PoseFrame> subject_warm(subj.data(), ctx);
  std::optional<std::span<const PoseFrame>> counter_warm;
  if (!mirror_init) counter_warm = std::span<const PoseFrame>(cp.data(), ctx);
  GenerationSession session(model, subject_warm, counter_warm, topo);

  OfflineResult result;
  std::vector<PoseFrame> generated, consumed;
  for (std::size_t k = 0; k < horizon; ++k) {
    const PoseFrame& s = subj[ctx + k];
    try {
      generated.push_back(session.step(s));
      consumed.push_back(s);
    } catch (const DivergenceError& e) {
      result.divergence = DivergenceInfo{e.index(), k, e.what()};
      break;
    }
  }
  result.generated = MotionClip(std::move(generated), pair.subject.fps());
  result.subject = MotionClip(std::move(consumed), pair.subject.fps());
  return result;
}

}  // namespace rmx
