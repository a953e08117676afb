// Command-line front end. Exit codes: 0 ok, 2 validation, 3 divergence,
// 4 I/O or protocol.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <json.hpp>

#include "rmx/checkpoint.hpp"
#include "rmx/drift_study.hpp"
#include "rmx/error.hpp"
#include "rmx/generation.hpp"
#include "rmx/io/clip_file.hpp"
#include "rmx/io/export.hpp"
#include "rmx/io/ref_bones.hpp"
#include "rmx/io/server.hpp"
#include "rmx/metrics.hpp"
#include "rmx/preprocess.hpp"
#include "rmx/synthetic.hpp"
#include "rmx/training.hpp"

namespace fs = std::filesystem;
using namespace rmx;

namespace {

SkeletonTopology topology_from(const std::string& path) {
  return path.empty() ? io::load_default_topology() : io::load_ref_bones(path);
}

bool parse_on_off(const std::string& v) {
  if (v == "on") return true;
  if (v == "off") return false;
  throw ConfigError("expected on|off, got '" + v + "'");
}

// Splits a file holding one subject and one generated/counterpart clip.
std::pair<MotionClip, MotionClip> read_two_person_file(const fs::path& path) {
  auto clips = io::read_clips(path);
  MotionClip subject, other;
  bool have_s = false, have_o = false;
  for (auto& c : clips) {
    if (c.person_id() == 0 && !have_s) {
      subject = std::move(c);
      have_s = true;
    } else if (c.person_id() == 1 && !have_o) {
      other = std::move(c);
      have_o = true;
    } else {
      throw ValidationError(path.string() + ": more than one clip per person");
    }
  }
  if (!have_s || !have_o) throw ValidationError(path.string() + ": needs both persons");
  return {std::move(subject), std::move(other)};
}

int cmd_preprocess(const std::string& input, const std::string& coco, const std::string& out,
                   const std::string& ref, int max_gap, int min_len) {
  GapPolicy policy{max_gap, min_len};
  policy.validate();
  fs::create_directories(out);
  if (!coco.empty()) {
    const auto tracks = io::read_tracks_2d(coco);
    std::vector<KeypointRun<2>> runs;
    for (const auto& [pid, track] : tracks) {
      auto r = prepare_for_lifting(track, policy);
      runs.insert(runs.end(), r.begin(), r.end());
    }
    io::write_runs_2d(fs::path(out) / "lifting_input.kp2d", runs);
    std::cout << "wrote " << runs.size() << " 2D runs for lifting\n";
  }
  if (!input.empty()) {
    const auto topo = topology_from(ref);
    const auto tracks = io::read_tracks_3d(input);
    if (!tracks.count(0) || !tracks.count(1)) {
      throw ValidationError(input + ": needs tracks for person 0 and person 1");
    }
    const auto pairs = preprocess_pair(tracks.at(0), tracks.at(1), topo, policy);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "pair_%04zu.clip", i);
      io::write_pair(fs::path(out) / name, pairs[i]);
    }
    std::cout << "wrote " << pairs.size() << " paired clips to " << out << '\n';
  }
  return 0;
}

int cmd_train(TrainRunConfig cfg, const std::string& data, const std::string& out,
              const std::string& loss_csv) {
  cfg.validate();
  const auto pairs = io::read_pair_dir(data);
  if (pairs.size() < 2) throw ValidationError("training data needs at least 2 paired clips");
  const auto split = split_dataset(pairs, cfg.split_fraction, cfg.seed);
  const auto samples = make_samples(split.train, cfg.model, cfg.sample_stride);
  std::cout << "train clips " << split.train.size() << ", test clips " << split.test.size()
            << ", samples " << samples.size() << ", parameters "
            << make_model<float>(cfg.model, cfg.seed)->parameter_count() << '\n';
  std::size_t last_epoch = static_cast<std::size_t>(-1);
  auto result = train(cfg, samples, [&](const LossRecord& r) {
    if (r.epoch != last_epoch) {
      last_epoch = r.epoch;
      std::cout << "epoch " << r.epoch << " step " << r.step << " loss " << r.loss << '\n';
    }
    return true;
  });
  save_checkpoint(*result.model, cfg.seed, out);
  if (!loss_csv.empty()) write_loss_csv(result.history, loss_csv);
  const fs::path run_json = fs::path(out).string() + ".run.json";
  nlohmann::json record = cfg;
  record["test_clips"] = split.test_ids;
  record["steps"] = result.history.size();
  std::ofstream(run_json) << record.dump(2) << '\n';
  std::cout << "checkpoint written to " << out << '\n';
  return 0;
}

int cmd_generate(const std::string& ckpt, const std::string& pair_path, std::size_t horizon,
                 bool mirror, const std::string& out, const std::string& ref) {
  const auto topo = topology_from(ref);
  const auto ck = load_checkpoint(ckpt);
  const auto pair = io::read_pair(pair_path);
  const auto res = run_offline(*ck.model, pair, horizon, topo, mirror);
  const MotionClip clips[] = {res.subject, res.generated};
  io::write_clips(out, clips);
  std::cout << "generated " << res.generated.size() << " frames -> " << out << '\n';
  if (res.divergence) {
    std::cerr << res.divergence->message << '\n';
    return exit_code_for(ErrorKind::kDivergence);
  }
  return 0;
}

int cmd_serve(const std::string& ckpt, std::uint16_t port, const std::string& bind,
              const std::string& ref) {
  // Block the stop signals before any thread starts so only sigwait sees them.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  auto ck = load_checkpoint(ckpt);
  std::shared_ptr<const MotionModel<float>> model(std::move(ck.model));
  io::StreamServer server(model, topology_from(ref), {bind, port, &std::cout});
  server.start();
  int sig = 0;
  sigwait(&stop_signals, &sig);
  server.stop();
  std::cout << "served " << server.connections_served() << " connections\n";
  return 0;
}

int cmd_eval(const std::string& generated, const std::string& ref, const std::string& out) {
  const auto topo = topology_from(ref);
  fs::create_directories(out);
  const auto clips = io::read_clips(generated);
  const MotionClip* gen = nullptr;
  const MotionClip* subj = nullptr;
  for (const auto& c : clips) (c.person_id() == 1 ? gen : subj) = &c;
  if (!gen) gen = &clips.front();
  const auto drift = bone_drift(*gen, topo);
  const auto smooth = smoothness(*gen);
  write_drift_csv(drift, fs::path(out) / "drift.csv");
  write_smoothness_csv(smooth, fs::path(out) / "smoothness.csv");
  nlohmann::json summary = {{"frames", drift.horizon},
                            {"mean_rel_err", drift.mean},
                            {"max_rel_err", drift.max},
                            {"collapse_threshold", drift.threshold},
                            {"mean_displacement", smooth.mean_displacement},
                            {"mean_jerk", smooth.mean_jerk},
                            {"smoothness_partial", smooth.partial}};
  summary["first_exceedance"] = drift.first_exceedance
                                    ? nlohmann::json(*drift.first_exceedance)
                                    : nlohmann::json(nullptr);
  if (subj && subj->size() == gen->size()) {
    summary["displacement_xcorr"] = cross_correlation(displacement_magnitudes(*subj),
                                                      displacement_magnitudes(*gen), 10);
  }
  std::ofstream(fs::path(out) / "summary.json") << summary.dump(2) << '\n';
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int cmd_export(const std::string& clip, const std::string& out) {
  const auto [subject, generated] = read_two_person_file(clip);
  const auto n = io::export_frames(subject, generated, out);
  std::cout << "exported " << n << " frames to " << out << '\n';
  return 0;
}

int cmd_synth(const SyntheticConfig& cfg, const std::string& out, const std::string& ref) {
  const auto topo = topology_from(ref);
  fs::create_directories(out);
  const auto corpus = synthetic_corpus(topo, cfg);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "pair_%04zu.clip", i);
    io::write_pair(fs::path(out) / name, corpus[i]);
  }
  std::cout << "wrote " << corpus.size() << " synthetic pairs to " << out << '\n';
  return 0;
}

int cmd_drift_study(const DriftStudyConfig& cfg, const std::string& out, const std::string& ref) {
  const auto curves = run_drift_study(cfg, out, topology_from(ref), &std::cout);
  std::cout << curves.size() << " curves written to " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-person reactive motion generation toolkit"};
  app.require_subcommand(1);
  std::string ref;
  app.add_option("--ref-bones", ref, "reference bone-length JSON (default: bundled humanoid)");

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "gap-fill, retarget and normalize keypoint tracks");
  std::string pre_in, pre_coco, pre_out;
  int max_gap = 3, min_len = 30;
  pre->add_option("--input", pre_in, "RMXKP3D track file holding both persons");
  pre->add_option("--coco", pre_coco, "RMXKP2D COCO-17 track file to prepare for lifting");
  pre->add_option("--out", pre_out, "output directory")->required();
  pre->add_option("--max-gap", max_gap, "longest interpolated gap in frames");
  pre->add_option("--min-len", min_len, "shortest kept clip in frames");

  // train
  auto* tr = app.add_subcommand("train", "train a model on a directory of paired clips");
  TrainRunConfig tcfg;
  std::string tr_model = "simple", tr_id = "off", tr_data, tr_out, tr_loss, tr_opt = "adam";
  std::size_t max_steps = 0;
  double clip_norm = 0.0;
  tr->add_option("--model", tr_model, "simple|inverted|crossseg");
  tr->add_option("--id-embed", tr_id, "person-ID embedding on|off");
  tr->add_option("--epochs", tcfg.epochs);
  tr->add_option("--max-steps", max_steps, "stop after this many batches (0 = no limit)");
  tr->add_option("--seed", tcfg.seed);
  tr->add_option("--data", tr_data, "directory of .clip pairs")->required();
  tr->add_option("--out", tr_out, "checkpoint path")->required();
  tr->add_option("--loss-csv", tr_loss, "write the loss history here");
  tr->add_option("--lr", tcfg.optimizer.learning_rate);
  tr->add_option("--batch", tcfg.optimizer.batch_size);
  tr->add_option("--optimizer", tr_opt, "adam|sgd");
  tr->add_option("--clip-norm", clip_norm, "global gradient-norm clip (0 = off)");
  tr->add_option("--split", tcfg.split_fraction, "test fraction, by clip");
  tr->add_option("--stride", tcfg.sample_stride, "window stride");
  tr->add_flag("!--no-shuffle", tcfg.shuffle);
  tr->add_option("--d-model", tcfg.model.d_model);
  tr->add_option("--heads", tcfg.model.n_heads);
  tr->add_option("--ffn", tcfg.model.d_ffn);
  tr->add_option("--enc-layers", tcfg.model.n_encoder_layers);
  tr->add_option("--dec-layers", tcfg.model.n_decoder_layers);
  tr->add_option("--dropout", tcfg.model.dropout);
  tr->add_option("--seg-len", tcfg.model.seg_len);
  tr->add_option("--routers", tcfg.model.n_routers);

  // generate
  auto* gen = app.add_subcommand("generate", "offline closed-loop generation");
  std::string gen_ckpt, gen_pair, gen_out;
  std::size_t horizon = 100;
  bool mirror = false;
  gen->add_option("--ckpt", gen_ckpt)->required();
  gen->add_option("--pair", gen_pair, "test pair .clip file")->required();
  gen->add_option("--horizon", horizon);
  gen->add_flag("--mirror-init", mirror, "warm up from the mirrored subject");
  gen->add_option("--out", gen_out, "output clip file (subject + generated)")->required();
  std::uint64_t unused_seed = 0;
  gen->add_option("--seed", unused_seed, "accepted for uniformity; generation is deterministic");

  // serve
  auto* srv = app.add_subcommand("serve", "stream generated frames over TCP");
  std::string srv_ckpt, bind = "127.0.0.1";
  std::uint16_t port = 7878;
  srv->add_option("--ckpt", srv_ckpt)->required();
  srv->add_option("--port", port);
  srv->add_option("--bind", bind);

  // eval
  auto* ev = app.add_subcommand("eval", "drift and smoothness reports of a generated clip");
  std::string ev_gen, ev_out;
  ev->add_option("--generated", ev_gen)->required();
  ev->add_option("--topo", ref, "reference bone-length JSON");
  ev->add_option("--out", ev_out)->required();

  // export-frames
  auto* ex = app.add_subcommand("export-frames", "SVG frames and CSV of subject + generated");
  std::string ex_clip, ex_out;
  ex->add_option("--clip", ex_clip, "clip file with both persons")->required();
  ex->add_option("--out", ex_out)->required();

  // synth
  auto* sy = app.add_subcommand("synth", "write a synthetic paired corpus");
  SyntheticConfig scfg;
  std::string sy_out;
  sy->add_option("--out", sy_out)->required();
  sy->add_option("--pairs", scfg.n_pairs);
  sy->add_option("--frames", scfg.n_frames);
  sy->add_option("--seed", scfg.seed);

  // drift-study
  auto* ds = app.add_subcommand("drift-study", "train all variants and report drift curves");
  DriftStudyConfig dcfg;
  std::string ds_out;
  ds->add_option("--out", ds_out)->required();
  ds->add_option("--steps", dcfg.steps);
  ds->add_option("--horizon", dcfg.horizon);
  ds->add_option("--pairs", dcfg.corpus.n_pairs);
  ds->add_option("--seed", dcfg.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*pre) {
      if (pre_in.empty() && pre_coco.empty()) throw ConfigError("give --input and/or --coco");
      return cmd_preprocess(pre_in, pre_coco, pre_out, ref, max_gap, min_len);
    }
    if (*tr) {
      tcfg.model.arch = architecture_from_string(tr_model);
      tcfg.model.use_person_id = parse_on_off(tr_id);
      tcfg.optimizer.algorithm = nn::optimizer_from_string(tr_opt);
      if (max_steps > 0) tcfg.max_steps = max_steps;
      if (clip_norm > 0.0) tcfg.optimizer.clip_norm = clip_norm;
      return cmd_train(tcfg, tr_data, tr_out, tr_loss);
    }
    if (*gen) return cmd_generate(gen_ckpt, gen_pair, horizon, mirror, gen_out, ref);
    if (*srv) return cmd_serve(srv_ckpt, port, bind, ref);
    if (*ev) return cmd_eval(ev_gen, ref, ev_out);
    if (*ex) return cmd_export(ex_clip, ex_out);
    if (*sy) return cmd_synth(scfg, sy_out, ref);
    if (*ds) return cmd_drift_study(dcfg, ds_out, ref);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(ErrorKind::kIo);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
