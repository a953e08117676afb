#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rmx/preprocess.hpp"
#include "rmx/skeleton.hpp"

namespace rmx::io {

/// Text clip format:
///   # RMXCLIP v1 joints=H36M17 fps=50/1
///   frame_index,person_id,x0,y0,z0,...,x16,y16,z16
/// Coordinates are written with 6 significant digits. One file may hold
/// clips of both persons.
std::string serialize_clips(std::span<const MotionClip> clips);
std::vector<MotionClip> parse_clips(const std::string& text);

void write_clips(const std::filesystem::path& path, std::span<const MotionClip> clips);
std::vector<MotionClip> read_clips(const std::filesystem::path& path);

void write_pair(const std::filesystem::path& path, const PairedClip& pair);
/// Throws ValidationError unless the file holds exactly one subject and
/// one counterpart clip.
PairedClip read_pair(const std::filesystem::path& path);

/// Sparse per-person keypoint tracks, gaps allowed. Header
///   # RMXKP3D v1 joints=H36M17 fps=50/1   (51 values per record) or
///   # RMXKP2D v1 joints=COCO17 fps=50/1   (34 values per record).
std::map<int, Keypoint3DTrack> read_tracks_3d(const std::filesystem::path& path);
std::map<int, Keypoint2DTrack> read_tracks_2d(const std::filesystem::path& path);
void write_tracks_3d(const std::filesystem::path& path, std::span<const Keypoint3DTrack> tracks);
void write_runs_2d(const std::filesystem::path& path, std::span<const KeypointRun<2>> runs);

/// Every *.clip file of a directory (sorted by name) read as a pair.
std::vector<PairedClip> read_pair_dir(const std::filesystem::path& dir);

}  // namespace rmx::io
