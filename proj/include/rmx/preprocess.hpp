#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "rmx/skeleton.hpp"

namespace rmx {

template <std::size_t Dim>
using Keypoints = std::array<std::array<double, Dim>, kNumJoints>;

/// Sparse per-person keypoint track as produced by a pose estimator: frames
/// may be missing. Dim is 2 for pixel tracks and 3 for lifted tracks.
template <std::size_t Dim>
struct KeypointTrack {
  int person_id = 0;
  std::map<std::int64_t, Keypoints<Dim>> frames;
};

using Keypoint2DTrack = KeypointTrack<2>;
using Keypoint3DTrack = KeypointTrack<3>;

/// Dense run of consecutive frames starting at `first_index`.
template <std::size_t Dim>
struct KeypointRun {
  int person_id = 0;
  std::int64_t first_index = 0;
  std::vector<Keypoints<Dim>> frames;

  std::int64_t end_index() const {
    return first_index + static_cast<std::int64_t>(frames.size());
  }
};

struct GapPolicy {
  int max_gap = 3;
  int min_clip_len = 30;

  void validate() const;
};

/// True when every pixel coordinate lies in [0, width] x [0, height].
bool within_image(const Keypoint2DTrack& track, double width = 1920.0,
                  double height = 1080.0);

/// Fills gaps of at most policy.max_gap missing frames by linear
/// interpolation between the neighbouring present frames, splits the track
/// at longer gaps and drops runs shorter than policy.min_clip_len.
template <std::size_t Dim>
std::vector<KeypointRun<Dim>> interpolate_gaps(const KeypointTrack<Dim>& track,
                                               const GapPolicy& policy);

extern template std::vector<KeypointRun<2>> interpolate_gaps(
    const KeypointTrack<2>&, const GapPolicy&);
extern template std::vector<KeypointRun<3>> interpolate_gaps(
    const KeypointTrack<3>&, const GapPolicy&);

using Vec2 = std::array<double, 2>;

/// COCO-17 -> H36M-17. Throws ShapeError unless exactly 17 joints are given.
std::array<Vec2, kNumJoints> map_coco_to_h36m(std::span<const Vec2> coco);

/// Per-joint unit direction from parent to child, used when a bone has zero
/// length and its direction must be borrowed from an earlier frame.
using BoneDirections = std::array<Vec3, kNumJoints>;

/// Rescales every bone to the reference length, root to leaf, keeping the
/// root fixed and every bone's direction. A zero-length bone takes its
/// direction from `previous` (if given) or +y. Bones that already have the
/// reference length under an unmoved parent are left bit-identical.
PoseFrame retarget_frame(const PoseFrame& frame, const SkeletonTopology& topo,
                         const BoneDirections* previous = nullptr,
                         BoneDirections* used = nullptr);

/// Retargets every frame, carrying bone directions from frame to frame.
MotionClip retarget_clip(const MotionClip& clip, const SkeletonTopology& topo);

/// Translates the frame so the pelvis lands exactly on (0, 1, 0).
PoseFrame normalize_frame(const PoseFrame& frame);
MotionClip normalize_clip(const MotionClip& clip);

/// Rounds to six significant digits.
double round_for_storage(double value);

struct TrainingSample {
  std::size_t ctx_len = 30;
  std::size_t past_len = 10;
  std::vector<float> x_ctx;   // ctx_len x 51, subject
  std::vector<float> y_ctx;   // ctx_len x 51, counterpart
  std::vector<float> past;    // past_len x 102, subject then counterpart
  std::vector<float> target;  // 51, counterpart frame following the context
};

/// One sample per anchor t = ctx_len, ctx_len + stride, ... < pair.size():
/// contexts are frames [t - ctx_len, t), the past window is the final
/// past_len frames of the contexts, the target is counterpart frame t.
std::vector<TrainingSample> build_samples(const PairedClip& pair,
                                          std::size_t ctx_len = 30,
                                          std::size_t past_len = 10,
                                          std::size_t stride = 1);

/// Dense run of a lifted 3D track converted to a clip (no retargeting).
MotionClip to_motion_clip(const KeypointRun<3>& run, Fps fps = {});

/// Lifted 3D tracks of both fighters -> retargeted, pelvis-normalized paired
/// clips covering the frame ranges where both are present after gap filling.
std::vector<PairedClip> preprocess_pair(const Keypoint3DTrack& subject,
                                        const Keypoint3DTrack& counterpart,
                                        const SkeletonTopology& topo,
                                        const GapPolicy& policy, Fps fps = {});

/// COCO pixel track -> gap-filled runs in H36M joint order, ready for
/// lifting.
std::vector<KeypointRun<2>> prepare_for_lifting(const Keypoint2DTrack& coco_track,
                                                const GapPolicy& policy);

}  // namespace rmx
