#include "rmx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "rmx/error.hpp"

namespace rmx {

DriftReport bone_drift(const MotionClip& clip, const SkeletonTopology& topo, double threshold) {
  if (clip.empty()) throw ValidationError("drift of an empty clip");
  const auto ref = topo.reference_bone_lengths();
  DriftReport r;
  r.threshold = threshold;
  r.horizon = clip.size();
  for (std::size_t t = 0; t < clip.size(); ++t) {
    const auto lens = bone_lengths(clip[t], topo);
    double sum = 0.0, worst = 0.0;
    for (std::size_t b = 0; b < kNumBones; ++b) {
      const double e = std::abs(lens[b] - ref[b]) / ref[b];
      sum += e;
      worst = std::max(worst, e);
    }
    const double mean = sum / static_cast<double>(kNumBones);
    r.mean_rel_err.push_back(mean);
    r.max_rel_err.push_back(worst);
    r.mean += mean;
    r.max = std::max(r.max, worst);
    if (!r.first_exceedance && mean > threshold) r.first_exceedance = t;
  }
  r.mean /= static_cast<double>(clip.size());
  return r;
}

namespace {

void summarize(const std::vector<double>& v, double& mean, double& max) {
  mean = max = 0.0;
  for (double x : v) {
    mean += x;
    max = std::max(max, x);
  }
  if (!v.empty()) mean /= static_cast<double>(v.size());
}

}  // namespace

SmoothnessReport smoothness(const MotionClip& clip) {
  SmoothnessReport r;
  const std::size_t n = clip.size();
  r.partial = n < 3;
  for (std::size_t t = 1; t < n; ++t) {
    double sum = 0.0;
    for (std::size_t j = 0; j < kNumJoints; ++j) sum += distance(clip[t].joints[j], clip[t - 1].joints[j]);
    r.displacement.push_back(sum / kNumJoints);
  }
  for (std::size_t t = 2; t < n; ++t) {
    double sum = 0.0;
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      double sq = 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        const double d = clip[t].joints[j][c] - 2.0 * clip[t - 1].joints[j][c] +
                         clip[t - 2].joints[j][c];
        sq += d * d;
      }
      sum += std::sqrt(sq);
    }
    r.jerk.push_back(sum / kNumJoints);
  }
  summarize(r.displacement, r.mean_displacement, r.max_displacement);
  summarize(r.jerk, r.mean_jerk, r.max_jerk);
  return r;
}

std::vector<double> displacement_magnitudes(const MotionClip& clip) {
  std::vector<double> out;
  if (clip.empty()) return out;
  out.push_back(0.0);
  const auto s = smoothness(clip);
  out.insert(out.end(), s.displacement.begin(), s.displacement.end());
  return out;
}

std::vector<double> cross_correlation(const std::vector<double>& a, const std::vector<double>& b,
                                      std::size_t max_lag) {
  std::vector<double> out;
  const auto n = static_cast<std::ptrdiff_t>(std::min(a.size(), b.size()));
  const auto L = static_cast<std::ptrdiff_t>(max_lag);
  for (std::ptrdiff_t lag = -L; lag <= L; ++lag) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -lag);
    const std::ptrdiff_t hi = std::min(n, n - lag);
    const std::ptrdiff_t m = hi - lo;
    if (m < 3) {
      out.push_back(0.0);
      continue;
    }
    double ma = 0.0, mb = 0.0;
    for (auto t = lo; t < hi; ++t) {
      ma += a[t];
      mb += b[t + lag];
    }
    ma /= static_cast<double>(m);
    mb /= static_cast<double>(m);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (auto t = lo; t < hi; ++t) {
      const double da = a[t] - ma, db = b[t + lag] - mb;
      sab += da * db;
      saa += da * da;
      sbb += db * db;
    }
    out.push_back(saa > 0.0 && sbb > 0.0 ? sab / std::sqrt(saa * sbb) : 0.0);
  }
  return out;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

void write_drift_csv(const DriftReport& report, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "frame,mean_rel_err,max_rel_err\n";
  for (std::size_t t = 0; t < report.mean_rel_err.size(); ++t) {
    out << t << ',' << num(report.mean_rel_err[t]) << ',' << num(report.max_rel_err[t]) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void write_smoothness_csv(const SmoothnessReport& report, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "frame,disp,jerk\n";
  for (std::size_t i = 0; i < report.displacement.size(); ++i) {
    const std::size_t frame = i + 1;
    out << frame << ',' << num(report.displacement[i]) << ',';
    if (frame >= 2) out << num(report.jerk[frame - 2]);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace rmx
