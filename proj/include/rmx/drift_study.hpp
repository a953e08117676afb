#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rmx/generation.hpp"
#include "rmx/metrics.hpp"
#include "rmx/synthetic.hpp"
#include "rmx/training.hpp"

namespace rmx {

/// Every architecture is trained with and without person-ID vectors under
/// the same step budget, then run closed-loop on held-out pairs from both
/// warm-up kinds (test-data counterpart, mirrored subject).
struct DriftStudyConfig {
  SyntheticConfig corpus{.n_pairs = 6, .n_frames = 200, .seed = 11};
  ModelConfig model = tiny_model();
  nn::OptimizerConfig optimizer = default_optimizer();
  std::size_t steps = 300;
  std::size_t horizon = 100;
  std::uint64_t seed = 7;
  double split_fraction = 0.2;

  static ModelConfig tiny_model();
  static nn::OptimizerConfig default_optimizer();
};

struct DriftCurve {
  std::string name;  // e.g. "inverted_id_mirror"
  Architecture arch = Architecture::kSimple;
  bool person_id = false;
  bool mirror_init = false;
  double final_train_loss = 0.0;
  DriftReport drift;  // averaged over the held-out pairs
  SmoothnessReport smooth;
  std::optional<DivergenceInfo> divergence;
  std::filesystem::path csv;
};

/// True when the report covers frames 0..horizon-1 in order with finite,
/// non-negative entries.
bool is_complete_horizon(const DriftReport& report, std::size_t horizon);

/// Runs the 12 curves, writing drift_<name>.csv per curve and summary.csv
/// into out_dir.
std::vector<DriftCurve> run_drift_study(const DriftStudyConfig& cfg,
                                        const std::filesystem::path& out_dir,
                                        const SkeletonTopology& topo,
                                        std::ostream* progress = nullptr);

}  // namespace rmx
