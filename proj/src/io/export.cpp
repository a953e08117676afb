#include "rmx/io/export.hpp"

#include <cstdio>
#include <fstream>
#include <string>

#include "rmx/error.hpp"

namespace rmx::io {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void draw_skeleton(std::string& svg, const PoseFrame& f, const char* color,
                   const ExportOptions& o) {
  const double scale = o.width / o.meters_across;
  auto px = [&](const Vec3& p) { return o.width / 2.0 + p[0] * scale; };
  auto py = [&](const Vec3& p) { return o.height * 0.9 - p[1] * scale; };
  const auto& parents = SkeletonTopology::h36m_parents();
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    if (parents[j] < 0) continue;
    const Vec3& a = f.joints[static_cast<std::size_t>(parents[j])];
    const Vec3& b = f.joints[j];
    svg += "<line x1=\"" + num(px(a)) + "\" y1=\"" + num(py(a)) + "\" x2=\"" + num(px(b)) +
           "\" y2=\"" + num(py(b)) + "\" stroke=\"" + color + "\" stroke-width=\"3\"/>\n";
  }
}

}  // namespace

std::size_t export_frames(const MotionClip& subject, const MotionClip& generated,
                          const std::filesystem::path& out_dir, const ExportOptions& opts) {
  if (subject.size() != generated.size()) {
    throw ValidationError("export needs aligned clips of equal length");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw IoError("cannot create " + out_dir.string());
  }

  std::ofstream csv(out_dir / "frames.csv", std::ios::binary | std::ios::trunc);
  if (!csv) throw IoError("cannot write " + (out_dir / "frames.csv").string());
  csv << "frame,role,frame_index,person_id";
  for (const auto& name : JointSet::h36m17().joint_names) {
    csv << ',' << name << "_x," << name << "_y," << name << "_z";
  }
  csv << '\n';

  for (std::size_t t = 0; t < subject.size(); ++t) {
    for (int role = 0; role < 2; ++role) {
      const PoseFrame& f = role == 0 ? subject[t] : generated[t];
      csv << t << ',' << (role == 0 ? "subject" : "generated") << ',' << f.frame_index << ','
          << f.person_id;
      for (const auto& j : f.joints) csv << ',' << num(j[0]) << ',' << num(j[1]) << ',' << num(j[2]);
      csv << '\n';
    }

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                      std::to_string(opts.width) + "\" height=\"" + std::to_string(opts.height) +
                      "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    draw_skeleton(svg, subject[t], "#1f5fbf", opts);
    draw_skeleton(svg, generated[t], "#c0392b", opts);
    svg += "</svg>\n";
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06zu.svg", t);
    std::ofstream out(out_dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (out_dir / name).string());
    out << svg;
    if (!out) throw IoError("write failed: " + (out_dir / name).string());
  }
  if (!csv) throw IoError("write failed: " + (out_dir / "frames.csv").string());
  return subject.size();
}

}  // namespace rmx::io
