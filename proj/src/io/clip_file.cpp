#include "rmx/io/clip_file.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rmx/error.hpp"

namespace rmx::io {
namespace {

struct Header {
  std::string kind;  // RMXCLIP, RMXKP3D, RMXKP2D
  std::string joints;
  Fps fps;
};

std::string format_header(const std::string& kind, const std::string& joints, Fps fps) {
  return "# " + kind + " v1 joints=" + joints + " fps=" + std::to_string(fps.num) + "/" +
         std::to_string(fps.den) + "\n";
}

Header parse_header(const std::string& line) {
  std::istringstream in(line);
  std::string hash, kind, version, joints, fps;
  in >> hash >> kind >> version >> joints >> fps;
  if (hash != "#" || (kind != "RMXCLIP" && kind != "RMXKP3D" && kind != "RMXKP2D")) {
    throw ValidationError("not a clip/keypoint file: bad header line");
  }
  if (version != "v1") throw ValidationError("unsupported clip file version '" + version + "'");
  if (joints.rfind("joints=", 0) != 0 || fps.rfind("fps=", 0) != 0) {
    throw ValidationError("malformed clip file header");
  }
  Header h;
  h.kind = kind;
  h.joints = joints.substr(7);
  JointSet::from_name(h.joints);
  int num = 0, den = 0;
  if (std::sscanf(fps.c_str() + 4, "%d/%d", &num, &den) != 2 || num <= 0 || den <= 0) {
    throw ValidationError("malformed fps '" + fps + "'");
  }
  h.fps = {num, den};
  return h;
}

void append_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", round_for_storage(v));
  out += buf;
}

struct Record {
  std::int64_t frame_index;
  int person_id;
  std::vector<double> values;
};

std::vector<Record> parse_records(std::istream& in, std::size_t n_values, std::size_t first_line) {
  std::vector<Record> out;
  std::string line;
  std::size_t line_no = first_line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fail = [&](const std::string& why) {
      return ValidationError("line " + std::to_string(line_no) + ": " + why);
    };
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != n_values + 2) {
      throw fail("expected " + std::to_string(n_values + 2) + " fields, got " +
                 std::to_string(fields.size()));
    }
    Record r;
    char* end = nullptr;
    const long long idx = std::strtoll(fields[0].c_str(), &end, 10);
    if (end == fields[0].c_str() || *end != '\0' || idx < 0) throw fail("bad frame index");
    const long pid = std::strtol(fields[1].c_str(), &end, 10);
    if (end == fields[1].c_str() || *end != '\0' || (pid != 0 && pid != 1)) {
      throw fail("bad person id");
    }
    r.frame_index = idx;
    r.person_id = static_cast<int>(pid);
    for (std::size_t i = 2; i < fields.size(); ++i) {
      const double v = std::strtod(fields[i].c_str(), &end);
      if (end == fields[i].c_str() || *end != '\0' || !std::isfinite(v)) {
        throw fail("bad coordinate '" + fields[i] + "'");
      }
      r.values.push_back(v);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

template <std::size_t Dim>
std::map<int, KeypointTrack<Dim>> read_tracks(const std::filesystem::path& path,
                                              const char* kind, const char* joints) {
  std::istringstream in(read_text(path));
  std::string first;
  std::getline(in, first);
  const Header h = parse_header(first);
  if (h.kind != kind || h.joints != joints) {
    throw ValidationError(path.string() + ": expected a " + kind + " file with joints=" + joints);
  }
  std::map<int, KeypointTrack<Dim>> tracks;
  for (const auto& r : parse_records(in, kNumJoints * Dim, 1)) {
    auto& track = tracks[r.person_id];
    track.person_id = r.person_id;
    Keypoints<Dim> kp{};
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      for (std::size_t c = 0; c < Dim; ++c) kp[j][c] = r.values[j * Dim + c];
    }
    if (!track.frames.emplace(r.frame_index, kp).second) {
      throw ValidationError("duplicate frame " + std::to_string(r.frame_index) + " for person " +
                            std::to_string(r.person_id));
    }
  }
  return tracks;
}

}  // namespace

std::string serialize_clips(std::span<const MotionClip> clips) {
  const Fps fps = clips.empty() ? Fps{} : clips.front().fps();
  std::string out = format_header("RMXCLIP", "H36M17", fps);
  for (const auto& clip : clips) {
    if (!(clip.fps() == fps)) throw ValidationError("clips in one file must share an fps");
    for (const auto& f : clip.frames()) {
      out += std::to_string(f.frame_index);
      out += ',';
      out += std::to_string(f.person_id);
      for (const auto& joint : f.joints) {
        for (double v : joint) {
          out += ',';
          append_number(out, v);
        }
      }
      out += '\n';
    }
  }
  return out;
}

std::vector<MotionClip> parse_clips(const std::string& text) {
  std::istringstream in(text);
  std::string first;
  if (!std::getline(in, first)) throw ValidationError("empty clip file");
  const Header h = parse_header(first);
  if (h.kind != "RMXCLIP" || h.joints != "H36M17") {
    throw ValidationError("expected an RMXCLIP file with joints=H36M17");
  }
  // Consecutive records of one person with consecutive indices form a clip.
  std::vector<MotionClip> clips;
  std::vector<PoseFrame> current;
  auto flush = [&] {
    if (!current.empty()) clips.emplace_back(std::move(current), h.fps);
    current.clear();
  };
  for (const auto& r : parse_records(in, kFeaturesPerPerson, 1)) {
    PoseFrame f;
    f.frame_index = r.frame_index;
    f.person_id = r.person_id;
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      for (std::size_t c = 0; c < 3; ++c) f.joints[j][c] = r.values[j * 3 + c];
    }
    if (!current.empty() && (current.back().person_id != f.person_id ||
                             current.back().frame_index + 1 != f.frame_index)) {
      flush();
    }
    current.push_back(f);
  }
  flush();
  return clips;
}

void write_clips(const std::filesystem::path& path, std::span<const MotionClip> clips) {
  write_text(path, serialize_clips(clips));
}

std::vector<MotionClip> read_clips(const std::filesystem::path& path) {
  return parse_clips(read_text(path));
}

void write_pair(const std::filesystem::path& path, const PairedClip& pair) {
  const MotionClip clips[] = {pair.subject, pair.counterpart};
  write_clips(path, clips);
}

PairedClip read_pair(const std::filesystem::path& path) {
  auto clips = read_clips(path);
  if (clips.size() != 2 || clips[0].person_id() != 0 || clips[1].person_id() != 1) {
    throw ValidationError(path.string() +
                          ": expected one subject clip followed by one counterpart clip");
  }
  return PairedClip(std::move(clips[0]), std::move(clips[1]));
}

std::map<int, Keypoint3DTrack> read_tracks_3d(const std::filesystem::path& path) {
  return read_tracks<3>(path, "RMXKP3D", "H36M17");
}

std::map<int, Keypoint2DTrack> read_tracks_2d(const std::filesystem::path& path) {
  return read_tracks<2>(path, "RMXKP2D", "COCO17");
}

void write_tracks_3d(const std::filesystem::path& path, std::span<const Keypoint3DTrack> tracks) {
  std::string out = format_header("RMXKP3D", "H36M17", Fps{});
  for (const auto& t : tracks) {
    for (const auto& [idx, kp] : t.frames) {
      out += std::to_string(idx) + "," + std::to_string(t.person_id);
      for (const auto& joint : kp) {
        for (double v : joint) {
          out += ',';
          append_number(out, v);
        }
      }
      out += '\n';
    }
  }
  write_text(path, out);
}

void write_runs_2d(const std::filesystem::path& path, std::span<const KeypointRun<2>> runs) {
  // Lifting input keeps the H36M joint order.
  std::string out = format_header("RMXKP2D", "H36M17", Fps{});
  for (const auto& run : runs) {
    for (std::size_t k = 0; k < run.frames.size(); ++k) {
      out += std::to_string(run.first_index + static_cast<std::int64_t>(k)) + "," +
             std::to_string(run.person_id);
      for (const auto& joint : run.frames[k]) {
        for (double v : joint) {
          out += ',';
          append_number(out, v);
        }
      }
      out += '\n';
    }
  }
  write_text(path, out);
}

std::vector<PairedClip> read_pair_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".clip") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<PairedClip> out;
  for (const auto& f : files) out.push_back(read_pair(f));
  return out;
}

}  // namespace rmx::io
