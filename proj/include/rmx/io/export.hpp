#pragma once

#include <filesystem>

#include "rmx/skeleton.hpp"

namespace rmx::io {

struct ExportOptions {
  int width = 480;
  int height = 480;
  double meters_across = 3.0;  // horizontal extent of the view
};

/// Writes frame_%06d.svg per aligned frame (x-y orthographic view, subject
/// in blue, counterpart in red) plus frames.csv with every joint of both
/// clips. Returns the number of images written. Throws ValidationError for
/// clips of different length and IoError for an unwritable directory.
std::size_t export_frames(const MotionClip& subject, const MotionClip& generated,
                          const std::filesystem::path& out_dir, const ExportOptions& opts = {});

}  // namespace rmx::io
