#pragma once

#include <filesystem>
#include <string>

#include "rmx/skeleton.hpp"

namespace rmx::io {

/// Path of the bundled humanoid reference file.
std::filesystem::path default_ref_bones_path();

/// Reads {"joint_set": "H36M17", "bone_lengths": {child joint name: meters}}
/// into an H36M topology. Every non-root joint must be listed with a
/// positive length. Throws IoError or ValidationError.
SkeletonTopology parse_ref_bones(const std::string& json_text);
SkeletonTopology load_ref_bones(const std::filesystem::path& path);

/// Bundled file when it exists, compiled-in defaults otherwise.
SkeletonTopology load_default_topology();

}  // namespace rmx::io
