#include "rmx/skeleton.hpp"

#include <cmath>

#include "rmx/error.hpp"

namespace rmx {

namespace {

constexpr JointSet kCoco17{
    JointSetId::kCoco17,
    "COCO17",
    {"nose", "left_eye", "right_eye", "left_ear", "right_ear", "left_shoulder",
     "right_shoulder", "left_elbow", "right_elbow", "left_wrist", "right_wrist",
     "left_hip", "right_hip", "left_knee", "right_knee", "left_ankle",
     "right_ankle"}};

constexpr JointSet kH36m17{
    JointSetId::kH36m17,
    "H36M17",
    {"pelvis", "right_hip", "right_knee", "right_ankle", "left_hip",
     "left_knee", "left_ankle", "trunk_center", "neck", "nose", "head_top",
     "left_shoulder", "left_elbow", "left_wrist", "right_shoulder",
     "right_elbow", "right_wrist"}};

constexpr std::array<int, kNumJoints> kH36mParents = {
    -1,  // pelvis
    0,  1,  2,   // right leg
    0,  4,  5,   // left leg
    0,  7,       // trunk center, neck
    8,  9,       // nose, head top
    8,  11, 12,  // left arm
    8,  14, 15,  // right arm
};

// Humanoid reference skeleton, meters. Must match
// config/humanoid_ref_bones.json.
constexpr std::array<double, kNumJoints> kHumanoidLengths = {
    0.0,                 // pelvis
    0.13, 0.44, 0.44,    // right hip, knee, ankle
    0.13, 0.44, 0.44,    // left hip, knee, ankle
    0.24, 0.25,          // trunk center, neck
    0.11, 0.12,          // nose, head top
    0.15, 0.28, 0.25,    // left shoulder, elbow, wrist
    0.15, 0.28, 0.25,    // right shoulder, elbow, wrist
};

}  // namespace

std::optional<std::size_t> JointSet::index_of(std::string_view joint) const {
  for (std::size_t i = 0; i < joint_names.size(); ++i) {
    if (joint_names[i] == joint) return i;
  }
  return std::nullopt;
}

const JointSet& JointSet::coco17() { return kCoco17; }
const JointSet& JointSet::h36m17() { return kH36m17; }

const JointSet& JointSet::from_name(std::string_view name) {
  if (name == kCoco17.name) return kCoco17;
  if (name == kH36m17.name) return kH36m17;
  throw ValidationError("unknown joint set '" + std::string(name) + "'");
}

SkeletonTopology::SkeletonTopology(std::array<int, kNumJoints> parents,
                                   std::array<double, kNumJoints> reference_lengths)
    : parents_(parents), lengths_(reference_lengths) {
  int roots = 0;
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    const int p = parents_[j];
    if (p == kNoParent) {
      ++roots;
      root_ = j;
      continue;
    }
    if (p < 0 || p >= static_cast<int>(kNumJoints) || p == static_cast<int>(j)) {
      throw TopologyMismatch("joint " + std::to_string(j) +
                             " has invalid parent " + std::to_string(p));
    }
  }
  if (roots != 1) {
    throw TopologyMismatch("expected exactly one root, found " +
                           std::to_string(roots));
  }

  // Breadth-first from the root; every joint must be reached exactly once.
  std::array<bool, kNumJoints> seen{};
  std::size_t head = 0, tail = 0;
  order_[tail++] = root_;
  seen[root_] = true;
  while (head < tail) {
    const std::size_t cur = order_[head++];
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      if (parents_[j] == static_cast<int>(cur) && !seen[j]) {
        seen[j] = true;
        order_[tail++] = j;
      }
    }
  }
  if (tail != kNumJoints) {
    throw TopologyMismatch("bone tree does not reach every joint (cycle or "
                           "disconnected joint)");
  }

  std::size_t bone = 0;
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    if (j == root_) continue;
    const double len = lengths_[j];
    if (!std::isfinite(len) || len <= 0.0) {
      throw ConfigError("reference length of joint " +
                        std::string(kH36m17.joint_names[j]) +
                        " must be positive and finite");
    }
    bone_children_[bone++] = j;
  }
  lengths_[root_] = 0.0;
}

SkeletonTopology SkeletonTopology::h36m(
    std::array<double, kNumJoints> reference_lengths) {
  return SkeletonTopology(kH36mParents, reference_lengths);
}

SkeletonTopology SkeletonTopology::humanoid_default() {
  return h36m(kHumanoidLengths);
}

const std::array<int, kNumJoints>& SkeletonTopology::h36m_parents() {
  return kH36mParents;
}

std::array<double, kNumBones> SkeletonTopology::reference_bone_lengths() const {
  std::array<double, kNumBones> out{};
  for (std::size_t b = 0; b < kNumBones; ++b) out[b] = lengths_[bone_children_[b]];
  return out;
}

bool PoseFrame::is_finite() const {
  for (const auto& j : joints) {
    for (double c : j) {
      if (!std::isfinite(c)) return false;
    }
  }
  return true;
}

void PoseFrame::validate() const {
  if (!is_finite()) {
    throw ValidationError("frame " + std::to_string(frame_index) +
                          " has non-finite coordinates");
  }
  if (person_id != 0 && person_id != 1) {
    throw ValidationError("person id must be 0 or 1, got " +
                          std::to_string(person_id));
  }
  if (frame_index < 0) throw ValidationError("negative frame index");
}

std::array<float, kFeaturesPerPerson> PoseFrame::features() const {
  std::array<float, kFeaturesPerPerson> out{};
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    for (std::size_t c = 0; c < 3; ++c) {
      out[j * 3 + c] = static_cast<float>(joints[j][c]);
    }
  }
  return out;
}

PoseFrame PoseFrame::from_features(std::span<const float> values, int person_id,
                                   std::int64_t frame_index) {
  if (values.size() != kFeaturesPerPerson) {
    throw ShapeError("expected 51 pose features, got " +
                     std::to_string(values.size()));
  }
  PoseFrame f;
  f.person_id = person_id;
  f.frame_index = frame_index;
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    for (std::size_t c = 0; c < 3; ++c) f.joints[j][c] = values[j * 3 + c];
  }
  return f;
}

MotionClip::MotionClip(std::vector<PoseFrame> frames, Fps fps)
    : frames_(std::move(frames)), fps_(fps) {
  if (fps_.num <= 0 || fps_.den <= 0) throw ValidationError("fps must be positive");
  if (frames_.empty()) return;
  const int pid = frames_.front().person_id;
  for (std::size_t i = 0; i < frames_.size(); ++i) {
    const PoseFrame& f = frames_[i];
    f.validate();
    if (f.person_id != pid) throw ValidationError("clip mixes person ids");
    if (i > 0 && f.frame_index != frames_[i - 1].frame_index + 1) {
      throw ValidationError("clip has a frame index gap at " +
                            std::to_string(f.frame_index));
    }
  }
}

MotionClip MotionClip::slice(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > frames_.size()) {
    throw ValidationError("invalid clip slice");
  }
  return MotionClip({frames_.begin() + static_cast<std::ptrdiff_t>(begin),
                     frames_.begin() + static_cast<std::ptrdiff_t>(end)},
                    fps_);
}

PairedClip::PairedClip(MotionClip subject_clip, MotionClip counterpart_clip)
    : subject(std::move(subject_clip)), counterpart(std::move(counterpart_clip)) {
  if (subject.size() != counterpart.size()) {
    throw ValidationError("paired clips differ in length");
  }
  if (subject.empty()) throw ValidationError("paired clip must not be empty");
  if (subject.person_id() != 0 || counterpart.person_id() != 1) {
    throw ValidationError("paired clip expects subject person 0, counterpart 1");
  }
  if (subject.first_index() != counterpart.first_index()) {
    throw ValidationError("paired clips are not frame aligned");
  }
}

PairedClip PairedClip::slice(std::size_t begin, std::size_t end) const {
  return PairedClip(subject.slice(begin, end), counterpart.slice(begin, end));
}

PoseFrame mirror_frame(const PoseFrame& frame) {
  PoseFrame out = frame;
  for (auto& j : out.joints) {
    j[0] = -j[0];
    j[2] = -j[2];
  }
  out.person_id = frame.person_id == 0 ? 1 : 0;
  return out;
}

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

std::array<double, kNumBones> bone_lengths(const PoseFrame& frame,
                                           const SkeletonTopology& topo) {
  std::array<double, kNumBones> out{};
  for (std::size_t b = 0; b < kNumBones; ++b) {
    const std::size_t child = topo.bone_child(b);
    out[b] = distance(frame.joints[child],
                      frame.joints[static_cast<std::size_t>(topo.parent(child))]);
  }
  return out;
}

std::vector<double> bone_lengths(std::span<const Vec3> joints,
                                 const SkeletonTopology& topo) {
  if (joints.size() != topo.joint_count()) {
    throw TopologyMismatch("frame has " + std::to_string(joints.size()) +
                           " joints, topology has " +
                           std::to_string(topo.joint_count()));
  }
  std::vector<double> out(kNumBones);
  for (std::size_t b = 0; b < kNumBones; ++b) {
    const std::size_t child = topo.bone_child(b);
    out[b] = distance(joints[child],
                      joints[static_cast<std::size_t>(topo.parent(child))]);
  }
  return out;
}

}  // namespace rmx
