#include "rmx/io/ref_bones.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rmx/error.hpp"

namespace rmx::io {

std::filesystem::path default_ref_bones_path() { return RMX_DEFAULT_REF_BONES; }

SkeletonTopology parse_ref_bones(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("reference bones: ") + e.what());
  }
  if (j.value("joint_set", std::string("H36M17")) != "H36M17") {
    throw TopologyMismatch("reference bones must use the H36M17 joint set");
  }
  if (!j.contains("bone_lengths") || !j["bone_lengths"].is_object()) {
    throw ValidationError("reference bones: missing 'bone_lengths' object");
  }
  const JointSet& set = JointSet::h36m17();
  std::array<double, kNumJoints> lengths{};
  std::array<bool, kNumJoints> seen{};
  for (const auto& [name, value] : j["bone_lengths"].items()) {
    const auto idx = set.index_of(name);
    if (!idx) throw TopologyMismatch("unknown joint '" + name + "'");
    if (!value.is_number()) throw ValidationError("length of '" + name + "' is not a number");
    lengths[*idx] = value.get<double>();
    seen[*idx] = true;
  }
  const auto& parents = SkeletonTopology::h36m_parents();
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    if (parents[i] == SkeletonTopology::kNoParent) continue;
    if (!seen[i]) {
      throw TopologyMismatch("missing bone length for '" + std::string(set.joint_names[i]) + "'");
    }
  }
  return SkeletonTopology::h36m(lengths);
}

SkeletonTopology load_ref_bones(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_ref_bones(ss.str());
}

SkeletonTopology load_default_topology() {
  const auto path = default_ref_bones_path();
  if (std::filesystem::exists(path)) return load_ref_bones(path);
  return SkeletonTopology::humanoid_default();
}

}  // namespace rmx::io
