#include "rmx/drift_study.hpp"

#include <cmath>
#include <fstream>

#include "rmx/error.hpp"

namespace rmx {

ModelConfig DriftStudyConfig::tiny_model() {
  ModelConfig m;
  m.d_model = 32;
  m.n_heads = 4;
  m.d_ffn = 64;
  m.dropout = 0.0;
  m.n_routers = 8;
  return m;
}

nn::OptimizerConfig DriftStudyConfig::default_optimizer() {
  nn::OptimizerConfig o;
  o.learning_rate = 1e-3;
  return o;
}

bool is_complete_horizon(const DriftReport& report, std::size_t horizon) {
  if (report.horizon != horizon || report.mean_rel_err.size() != horizon ||
      report.max_rel_err.size() != horizon) {
    return false;
  }
  for (std::size_t t = 0; t < horizon; ++t) {
    const double a = report.mean_rel_err[t], b = report.max_rel_err[t];
    if (!std::isfinite(a) || !std::isfinite(b) || a < 0.0 || b < a) return false;
  }
  return true;
}

namespace {

// Frame-wise mean of several drift reports of equal length.
DriftReport average(const std::vector<DriftReport>& reports) {
  DriftReport avg;
  if (reports.empty()) return avg;
  const std::size_t n = reports.front().mean_rel_err.size();
  avg.threshold = reports.front().threshold;
  avg.horizon = n;
  avg.mean_rel_err.assign(n, 0.0);
  avg.max_rel_err.assign(n, 0.0);
  for (const auto& r : reports) {
    for (std::size_t t = 0; t < n; ++t) {
      avg.mean_rel_err[t] += r.mean_rel_err[t] / static_cast<double>(reports.size());
      avg.max_rel_err[t] = std::max(avg.max_rel_err[t], r.max_rel_err[t]);
    }
  }
  for (std::size_t t = 0; t < n; ++t) {
    avg.mean += avg.mean_rel_err[t] / static_cast<double>(n);
    avg.max = std::max(avg.max, avg.max_rel_err[t]);
    if (!avg.first_exceedance && avg.mean_rel_err[t] > avg.threshold) avg.first_exceedance = t;
  }
  return avg;
}

}  // namespace

std::vector<DriftCurve> run_drift_study(const DriftStudyConfig& cfg,
                                        const std::filesystem::path& out_dir,
                                        const SkeletonTopology& topo, std::ostream* progress) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string());

  const auto corpus = synthetic_corpus(topo, cfg.corpus);
  const auto split = split_dataset(corpus, cfg.split_fraction, cfg.seed);
  const auto samples = make_samples(split.train, cfg.model);

  std::vector<DriftCurve> curves;
  for (Architecture arch :
       {Architecture::kSimple, Architecture::kInverted, Architecture::kCrossSegment}) {
    for (bool id : {false, true}) {
      TrainRunConfig run;
      run.model = cfg.model;
      run.model.arch = arch;
      run.model.use_person_id = id;
      run.optimizer = cfg.optimizer;
      run.seed = cfg.seed;
      run.epochs = static_cast<std::size_t>(-1);
      run.max_steps = cfg.steps;
      auto trained = train(run, samples);
      const double final_loss = trained.history.empty() ? 0.0 : trained.history.back().loss;

      for (bool mirror : {false, true}) {
        DriftCurve c;
        c.arch = arch;
        c.person_id = id;
        c.mirror_init = mirror;
        c.final_train_loss = final_loss;
        c.name = to_string(arch) + (id ? "_id" : "_noid") + (mirror ? "_mirror" : "_offline");
        std::vector<DriftReport> drifts;
        for (const auto& pair : split.test) {
          const auto res = run_offline(*trained.model, pair, cfg.horizon, topo, mirror);
          if (res.divergence) {
            c.divergence = res.divergence;
            break;
          }
          drifts.push_back(bone_drift(res.generated, topo));
          if (drifts.size() == 1) c.smooth = smoothness(res.generated);
        }
        if (!c.divergence) c.drift = average(drifts);
        c.csv = out_dir / ("drift_" + c.name + ".csv");
        write_drift_csv(c.drift, c.csv);
        if (progress) {
          *progress << c.name << ": train loss " << final_loss << ", mean drift " << c.drift.mean
                    << (c.divergence ? " (diverged)" : "") << '\n';
        }
        curves.push_back(std::move(c));
      }
    }
  }

  std::ofstream summary(out_dir / "summary.csv");
  if (!summary) throw IoError("cannot write summary.csv");
  summary << "name,arch,person_id,init,final_train_loss,mean_drift,max_drift,"
             "first_exceedance,frames,diverged\n";
  for (const auto& c : curves) {
    summary << c.name << ',' << to_string(c.arch) << ',' << (c.person_id ? "on" : "off") << ','
            << (c.mirror_init ? "mirror" : "offline") << ',' << c.final_train_loss << ','
            << c.drift.mean << ',' << c.drift.max << ','
            << (c.drift.first_exceedance ? std::to_string(*c.drift.first_exceedance) : "") << ','
            << c.drift.horizon << ',' << (c.divergence ? "yes" : "no") << '\n';
  }
  return curves;
}

}  // namespace rmx
