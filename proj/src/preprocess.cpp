#include "rmx/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "rmx/error.hpp"

namespace rmx {

void GapPolicy::validate() const {
  if (max_gap < 0) throw ConfigError("max_gap must be >= 0");
  if (min_clip_len < 1) throw ConfigError("min_clip_len must be >= 1");
}

bool within_image(const Keypoint2DTrack& track, double width, double height) {
  for (const auto& [index, joints] : track.frames) {
    for (const auto& p : joints) {
      if (!(p[0] >= 0.0 && p[0] <= width && p[1] >= 0.0 && p[1] <= height)) {
        return false;
      }
    }
  }
  return true;
}

template <std::size_t Dim>
std::vector<KeypointRun<Dim>> interpolate_gaps(const KeypointTrack<Dim>& track,
                                               const GapPolicy& policy) {
  policy.validate();
  std::vector<KeypointRun<Dim>> runs;
  if (track.frames.empty()) return runs;

  auto flush = [&](KeypointRun<Dim>& run) {
    if (static_cast<int>(run.frames.size()) >= policy.min_clip_len) {
      runs.push_back(std::move(run));
    }
    run = KeypointRun<Dim>{};
    run.person_id = track.person_id;
  };

  KeypointRun<Dim> run;
  run.person_id = track.person_id;
  auto it = track.frames.begin();
  run.first_index = it->first;
  run.frames.push_back(it->second);
  std::int64_t prev_index = it->first;
  const Keypoints<Dim>* prev = &it->second;

  for (++it; it != track.frames.end(); ++it) {
    const std::int64_t t1 = it->first;
    const std::int64_t missing = t1 - prev_index - 1;
    if (missing > policy.max_gap) {
      flush(run);
      run.first_index = t1;
    } else {
      const std::int64_t t0 = prev_index;
      for (std::int64_t t = t0 + 1; t < t1; ++t) {
        const double alpha = static_cast<double>(t - t0) / static_cast<double>(t1 - t0);
        Keypoints<Dim> filled{};
        for (std::size_t j = 0; j < kNumJoints; ++j) {
          for (std::size_t c = 0; c < Dim; ++c) {
            filled[j][c] = (1.0 - alpha) * (*prev)[j][c] + alpha * it->second[j][c];
          }
        }
        run.frames.push_back(filled);
      }
    }
    run.frames.push_back(it->second);
    prev_index = t1;
    prev = &it->second;
  }
  flush(run);
  return runs;
}

template std::vector<KeypointRun<2>> interpolate_gaps(const KeypointTrack<2>&,
                                                      const GapPolicy&);
template std::vector<KeypointRun<3>> interpolate_gaps(const KeypointTrack<3>&,
                                                      const GapPolicy&);

namespace {

Vec2 midpoint(const Vec2& a, const Vec2& b) {
  return {(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0};
}

}  // namespace

std::array<Vec2, kNumJoints> map_coco_to_h36m(std::span<const Vec2> c) {
  if (c.size() != kNumJoints) {
    throw ShapeError("COCO-17 frame must have 17 joints, got " +
                     std::to_string(c.size()));
  }
  const Vec2 pelvis = midpoint(c[coco::kLeftHip], c[coco::kRightHip]);
  const Vec2 neck = midpoint(c[coco::kLeftShoulder], c[coco::kRightShoulder]);
  const Vec2& nose = c[coco::kNose];

  std::array<Vec2, kNumJoints> h{};
  h[h36m::kPelvis] = pelvis;
  h[h36m::kRightHip] = c[coco::kRightHip];
  h[h36m::kRightKnee] = c[coco::kRightKnee];
  h[h36m::kRightAnkle] = c[coco::kRightAnkle];
  h[h36m::kLeftHip] = c[coco::kLeftHip];
  h[h36m::kLeftKnee] = c[coco::kLeftKnee];
  h[h36m::kLeftAnkle] = c[coco::kLeftAnkle];
  h[h36m::kTrunkCenter] = midpoint(pelvis, neck);
  h[h36m::kNeck] = neck;
  h[h36m::kNose] = nose;
  // Neck reflected through the nose: the nose->neck offset extended the same
  // length on the other side of the nose.
  h[h36m::kHeadTop] = {2.0 * nose[0] - neck[0], 2.0 * nose[1] - neck[1]};
  h[h36m::kLeftShoulder] = c[coco::kLeftShoulder];
  h[h36m::kLeftElbow] = c[coco::kLeftElbow];
  h[h36m::kLeftWrist] = c[coco::kLeftWrist];
  h[h36m::kRightShoulder] = c[coco::kRightShoulder];
  h[h36m::kRightElbow] = c[coco::kRightElbow];
  h[h36m::kRightWrist] = c[coco::kRightWrist];
  return h;
}

namespace {

// Bones within this relative distance of the reference under an unmoved
// parent are treated as already retargeted.
constexpr double kAlreadyRetargetedTol = 1e-12;

}  // namespace

PoseFrame retarget_frame(const PoseFrame& frame, const SkeletonTopology& topo,
                         const BoneDirections* previous, BoneDirections* used) {
  PoseFrame out = frame;
  std::array<bool, kNumJoints> moved{};
  BoneDirections dirs{};

  for (std::size_t joint : topo.root_to_leaf_order()) {
    const int p = topo.parent(joint);
    if (p == SkeletonTopology::kNoParent) continue;
    const auto parent = static_cast<std::size_t>(p);

    const Vec3& src_child = frame.joints[joint];
    const Vec3& src_parent = frame.joints[parent];
    const Vec3 d{src_child[0] - src_parent[0], src_child[1] - src_parent[1],
                 src_child[2] - src_parent[2]};
    const double len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    const double ref = topo.reference_length(joint);

    if (len > 0.0 && std::isfinite(len)) {
      dirs[joint] = {d[0] / len, d[1] / len, d[2] / len};
    } else if (previous != nullptr) {
      dirs[joint] = (*previous)[joint];
    } else {
      dirs[joint] = {0.0, 1.0, 0.0};
    }

    if (!moved[parent] && std::abs(len - ref) <= kAlreadyRetargetedTol * ref) {
      continue;  // out.joints[joint] already equals src_child
    }
    const Vec3& new_parent = out.joints[parent];
    for (std::size_t c = 0; c < 3; ++c) {
      out.joints[joint][c] = new_parent[c] + ref * dirs[joint][c];
    }
    moved[joint] = true;
  }
  if (used != nullptr) *used = dirs;
  return out;
}

MotionClip retarget_clip(const MotionClip& clip, const SkeletonTopology& topo) {
  std::vector<PoseFrame> frames;
  frames.reserve(clip.size());
  BoneDirections dirs{};
  const BoneDirections* prev = nullptr;
  for (const PoseFrame& f : clip.frames()) {
    frames.push_back(retarget_frame(f, topo, prev, &dirs));
    prev = &dirs;
  }
  return MotionClip(std::move(frames), clip.fps());
}

PoseFrame normalize_frame(const PoseFrame& frame) {
  PoseFrame out = frame;
  const Vec3 pelvis = frame.joints[h36m::kPelvis];
  const Vec3 offset{0.0 - pelvis[0], 1.0 - pelvis[1], 0.0 - pelvis[2]};
  for (auto& j : out.joints) {
    for (std::size_t c = 0; c < 3; ++c) j[c] += offset[c];
  }
  out.joints[h36m::kPelvis] = {0.0, 1.0, 0.0};
  return out;
}

MotionClip normalize_clip(const MotionClip& clip) {
  std::vector<PoseFrame> frames;
  frames.reserve(clip.size());
  for (const PoseFrame& f : clip.frames()) frames.push_back(normalize_frame(f));
  return MotionClip(std::move(frames), clip.fps());
}

double round_for_storage(double value) {
  if (value == 0.0 || !std::isfinite(value)) return value;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.5e", value);
  return std::strtod(buf, nullptr);
}

std::vector<TrainingSample> build_samples(const PairedClip& pair,
                                          std::size_t ctx_len,
                                          std::size_t past_len,
                                          std::size_t stride) {
  if (ctx_len == 0 || past_len == 0 || past_len > ctx_len) {
    throw ConfigError("need 0 < past_len <= ctx_len");
  }
  if (stride == 0) throw ConfigError("stride must be >= 1");
  std::vector<TrainingSample> out;
  const std::size_t n = pair.size();
  if (n < ctx_len + 1) return out;

  // Feature rows once per frame.
  std::vector<std::array<float, kFeaturesPerPerson>> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = pair.subject[i].features();
    ys[i] = pair.counterpart[i].features();
  }

  constexpr std::size_t F = kFeaturesPerPerson;
  for (std::size_t t = ctx_len; t < n; t += stride) {
    TrainingSample s;
    s.ctx_len = ctx_len;
    s.past_len = past_len;
    s.x_ctx.reserve(ctx_len * F);
    s.y_ctx.reserve(ctx_len * F);
    for (std::size_t i = t - ctx_len; i < t; ++i) {
      s.x_ctx.insert(s.x_ctx.end(), xs[i].begin(), xs[i].end());
      s.y_ctx.insert(s.y_ctx.end(), ys[i].begin(), ys[i].end());
    }
    s.past.reserve(past_len * 2 * F);
    for (std::size_t i = t - past_len; i < t; ++i) {
      s.past.insert(s.past.end(), xs[i].begin(), xs[i].end());
      s.past.insert(s.past.end(), ys[i].begin(), ys[i].end());
    }
    s.target.assign(ys[t].begin(), ys[t].end());
    out.push_back(std::move(s));
  }
  return out;
}

MotionClip to_motion_clip(const KeypointRun<3>& run, Fps fps) {
  std::vector<PoseFrame> frames;
  frames.reserve(run.frames.size());
  for (std::size_t i = 0; i < run.frames.size(); ++i) {
    PoseFrame f;
    f.person_id = run.person_id;
    f.frame_index = run.first_index + static_cast<std::int64_t>(i);
    f.joints = run.frames[i];
    frames.push_back(f);
  }
  return MotionClip(std::move(frames), fps);
}

std::vector<PairedClip> preprocess_pair(const Keypoint3DTrack& subject,
                                        const Keypoint3DTrack& counterpart,
                                        const SkeletonTopology& topo,
                                        const GapPolicy& policy, Fps fps) {
  // Filter on the overlap only, so run the per-person filling with no
  // minimum length first.
  GapPolicy fill_only = policy;
  fill_only.min_clip_len = 1;
  auto sub_runs = interpolate_gaps(subject, fill_only);
  auto cp_runs = interpolate_gaps(counterpart, fill_only);

  std::vector<PairedClip> out;
  for (const auto& a : sub_runs) {
    for (const auto& b : cp_runs) {
      const std::int64_t lo = std::max(a.first_index, b.first_index);
      const std::int64_t hi = std::min(a.end_index(), b.end_index());
      if (hi - lo < policy.min_clip_len) continue;

      auto cut = [&](const KeypointRun<3>& r, int person) {
        KeypointRun<3> c;
        c.person_id = person;
        c.first_index = lo;
        c.frames.assign(r.frames.begin() + (lo - r.first_index),
                        r.frames.begin() + (hi - r.first_index));
        return normalize_clip(retarget_clip(to_motion_clip(c, fps), topo));
      };
      out.emplace_back(cut(a, 0), cut(b, 1));
    }
  }
  std::sort(out.begin(), out.end(), [](const PairedClip& x, const PairedClip& y) {
    return x.subject.first_index() < y.subject.first_index();
  });
  return out;
}

std::vector<KeypointRun<2>> prepare_for_lifting(const Keypoint2DTrack& coco_track,
                                                const GapPolicy& policy) {
  auto runs = interpolate_gaps(coco_track, policy);
  for (auto& run : runs) {
    for (auto& frame : run.frames) {
      frame = map_coco_to_h36m(frame);
    }
  }
  return runs;
}

}  // namespace rmx
