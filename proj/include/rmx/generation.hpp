#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rmx/models/model.hpp"
#include "rmx/skeleton.hpp"

namespace rmx {

enum class GenerationMode { kOffline, kStream };

/// Coordinates beyond this magnitude (meters) count as divergence.
inline constexpr double kDivergenceLimit = 100.0;
/// Allowed relative bone-length deviation for incoming frames.
inline constexpr double kInputBoneTolerance = 0.01;

/// Throws ValidationError unless every bone is within `tolerance` of the
/// reference length (relative).
void validate_preprocessed(const PoseFrame& frame, const SkeletonTopology& topo,
                           double tolerance = kInputBoneTolerance);

/// Closed-loop generator. The subject window is fed from outside; the
/// counterpart window, after warm-up, only ever receives model output.
/// Copying a session copies its windows and shares the (frozen) model.
class GenerationSession {
 public:
  /// Offline mode when `counterpart_warmup` is given (used verbatim),
  /// otherwise stream mode with a mirrored counterpart.
  GenerationSession(const MotionModel<float>& model, std::span<const PoseFrame> subject_warmup,
                    std::optional<std::span<const PoseFrame>> counterpart_warmup,
                    const SkeletonTopology& topo);

  /// Predicts the counterpart frame for the time of `subject` and advances
  /// both windows. Throws ValidationError on a bad frame and DivergenceError
  /// (index = subject frame index) when the output is non-finite or out of
  /// range; a diverged session is frozen and refuses further steps.
  PoseFrame step(const PoseFrame& subject);

  GenerationMode mode() const { return mode_; }
  std::size_t frames_generated() const { return generated_; }
  bool frozen() const { return frozen_; }
  std::vector<PoseFrame> subject_window() const { return {subject_.begin(), subject_.end()}; }
  std::vector<PoseFrame> counterpart_window() const {
    return {counterpart_.begin(), counterpart_.end()};
  }
  /// True for counterpart window entries that came from the model.
  std::vector<bool> counterpart_generated() const {
    return {generated_flags_.begin(), generated_flags_.end()};
  }
  /// The model input built from the current windows.
  ModelInput<float> current_input() const;

 private:
  const MotionModel<float>* model_;
  const SkeletonTopology* topo_;
  GenerationMode mode_;
  std::deque<PoseFrame> subject_;
  std::deque<PoseFrame> counterpart_;
  std::deque<bool> generated_flags_;
  std::size_t generated_ = 0;
  bool frozen_ = false;
};

struct DivergenceInfo {
  std::int64_t frame_index = 0;
  std::size_t step = 0;
  std::string message;
};

struct OfflineResult {
  MotionClip generated;  // counterpart frames 30 .. 30 + horizon
  MotionClip subject;    // the subject frames consumed, aligned with `generated`
  std::optional<DivergenceInfo> divergence;  // set when generation stopped early
};

/// Warm-up from the pair's first ctx_len frames (both persons, or the subject
/// mirrored when `mirror_init`), then steps through the following `horizon`
/// subject frames. Divergence keeps the frames produced so far.
OfflineResult run_offline(const MotionModel<float>& model, const PairedClip& pair,
                          std::size_t horizon, const SkeletonTopology& topo,
                          bool mirror_init = false);

}  // namespace rmx
