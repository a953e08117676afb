#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rmx {

inline constexpr std::size_t kNumJoints = 17;
inline constexpr std::size_t kNumBones = kNumJoints - 1;
inline constexpr std::size_t kFeaturesPerPerson = kNumJoints * 3;  // 51
inline constexpr std::size_t kNumPersons = 2;

using Vec3 = std::array<double, 3>;
using Joints = std::array<Vec3, kNumJoints>;

enum class JointSetId : std::uint8_t { kCoco17, kH36m17 };

struct JointSet {
  JointSetId id;
  std::string_view name;
  std::array<std::string_view, kNumJoints> joint_names;

  std::optional<std::size_t> index_of(std::string_view joint) const;

  static const JointSet& coco17();
  static const JointSet& h36m17();
  static const JointSet& from_name(std::string_view name);
};

// H36M-17 indices, pelvis first.
namespace h36m {
inline constexpr std::size_t kPelvis = 0;
inline constexpr std::size_t kRightHip = 1;
inline constexpr std::size_t kRightKnee = 2;
inline constexpr std::size_t kRightAnkle = 3;
inline constexpr std::size_t kLeftHip = 4;
inline constexpr std::size_t kLeftKnee = 5;
inline constexpr std::size_t kLeftAnkle = 6;
inline constexpr std::size_t kTrunkCenter = 7;
inline constexpr std::size_t kNeck = 8;
inline constexpr std::size_t kNose = 9;
inline constexpr std::size_t kHeadTop = 10;
inline constexpr std::size_t kLeftShoulder = 11;
inline constexpr std::size_t kLeftElbow = 12;
inline constexpr std::size_t kLeftWrist = 13;
inline constexpr std::size_t kRightShoulder = 14;
inline constexpr std::size_t kRightElbow = 15;
inline constexpr std::size_t kRightWrist = 16;
}  // namespace h36m

// COCO-17 indices.
namespace coco {
inline constexpr std::size_t kNose = 0;
inline constexpr std::size_t kLeftShoulder = 5;
inline constexpr std::size_t kRightShoulder = 6;
inline constexpr std::size_t kLeftElbow = 7;
inline constexpr std::size_t kRightElbow = 8;
inline constexpr std::size_t kLeftWrist = 9;
inline constexpr std::size_t kRightWrist = 10;
inline constexpr std::size_t kLeftHip = 11;
inline constexpr std::size_t kRightHip = 12;
inline constexpr std::size_t kLeftKnee = 13;
inline constexpr std::size_t kRightKnee = 14;
inline constexpr std::size_t kLeftAnkle = 15;
inline constexpr std::size_t kRightAnkle = 16;
}  // namespace coco

/// Bone tree over the H36M joint set plus the reference (target humanoid)
/// length of every bone. A bone is identified by its child joint; the root
/// has no bone. Bone k in any per-bone list is the k-th non-root joint in
/// ascending index order.
class SkeletonTopology {
 public:
  static constexpr int kNoParent = -1;

  // Throws TopologyMismatch when `parents` is not a single tree covering all
  // joints, ConfigError when a reference length is not positive and finite.
  SkeletonTopology(std::array<int, kNumJoints> parents,
                   std::array<double, kNumJoints> reference_lengths);

  /// Fixed H36M kinematic tree with the given per-joint reference lengths
  /// (entry for the pelvis is ignored).
  static SkeletonTopology h36m(std::array<double, kNumJoints> reference_lengths);
  /// H36M tree with the lengths of the shipped humanoid reference.
  static SkeletonTopology humanoid_default();
  static const std::array<int, kNumJoints>& h36m_parents();

  const JointSet& joint_set() const { return JointSet::h36m17(); }
  std::size_t joint_count() const { return kNumJoints; }
  std::size_t root() const { return root_; }
  int parent(std::size_t joint) const { return parents_[joint]; }
  const std::array<int, kNumJoints>& parents() const { return parents_; }

  double reference_length(std::size_t joint) const { return lengths_[joint]; }
  /// Reference lengths per bone (16 entries, bone order).
  std::array<double, kNumBones> reference_bone_lengths() const;
  /// Child joint of bone k.
  std::size_t bone_child(std::size_t bone) const { return bone_children_[bone]; }

  /// Joints ordered so that every parent precedes its children.
  const std::array<std::size_t, kNumJoints>& root_to_leaf_order() const {
    return order_;
  }

 private:
  std::array<int, kNumJoints> parents_;
  std::array<double, kNumJoints> lengths_;
  std::array<std::size_t, kNumJoints> order_{};
  std::array<std::size_t, kNumBones> bone_children_{};
  std::size_t root_ = 0;
};

struct PoseFrame {
  Joints joints{};
  int person_id = 0;
  std::int64_t frame_index = 0;

  bool is_finite() const;
  /// Throws ValidationError on non-finite coordinates or a bad person id.
  void validate() const;

  /// 51 values, x,y,z per joint in H36M order.
  std::array<float, kFeaturesPerPerson> features() const;
  static PoseFrame from_features(std::span<const float> values, int person_id,
                                 std::int64_t frame_index);

  friend bool operator==(const PoseFrame&, const PoseFrame&) = default;
};

struct Fps {
  std::int32_t num = 50;
  std::int32_t den = 1;
  double value() const { return static_cast<double>(num) / den; }
  friend bool operator==(const Fps&, const Fps&) = default;
};

/// Gap-free run of frames of one person.
class MotionClip {
 public:
  MotionClip() = default;
  // Throws ValidationError when frames mix persons, skip indices
  // or the fps is not positive.
  MotionClip(std::vector<PoseFrame> frames, Fps fps = {});

  const std::vector<PoseFrame>& frames() const { return frames_; }
  std::size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  const PoseFrame& operator[](std::size_t i) const { return frames_[i]; }
  int person_id() const { return frames_.empty() ? 0 : frames_.front().person_id; }
  std::int64_t first_index() const {
    return frames_.empty() ? 0 : frames_.front().frame_index;
  }
  Fps fps() const { return fps_; }

  /// Frames [begin, end) as a new clip.
  MotionClip slice(std::size_t begin, std::size_t end) const;

  friend bool operator==(const MotionClip&, const MotionClip&) = default;

 private:
  std::vector<PoseFrame> frames_;
  Fps fps_{};
};

/// Subject (person 0) and counterpart (person 1) of one match segment.
struct PairedClip {
  MotionClip subject;
  MotionClip counterpart;

  PairedClip() = default;
  // Throws ValidationError on mismatched lengths, persons or frame indices.
  PairedClip(MotionClip subject_clip, MotionClip counterpart_clip);

  std::size_t size() const { return subject.size(); }
  PairedClip slice(std::size_t begin, std::size_t end) const;
};

/// Negates x and z of every joint and swaps the person id. Left/right labels
/// are kept as they are.
PoseFrame mirror_frame(const PoseFrame& frame);

std::array<double, kNumBones> bone_lengths(const PoseFrame& frame,
                                           const SkeletonTopology& topo);
/// Throws TopologyMismatch unless `joints` has topo.joint_count() entries.
std::vector<double> bone_lengths(std::span<const Vec3> joints,
                                 const SkeletonTopology& topo);

double distance(const Vec3& a, const Vec3& b);

}  // namespace rmx
