#include "rmx/training.hpp"

#include <cmath>
#include <algorithm>
#include <fstream>
#include <numeric>

#include "rmx/error.hpp"

namespace rmx {

void TrainRunConfig::validate() const {
  model.validate();
  optimizer.validate();
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
    throw ConfigError("split_fraction must be in (0, 1)");
  }
  if (sample_stride == 0) throw ConfigError("sample_stride must be >= 1");
}

void to_json(nlohmann::json& j, const TrainRunConfig& c) {
  j = {{"model", c.model},
       {"learning_rate", c.optimizer.learning_rate},
       {"optimizer", nn::to_string(c.optimizer.algorithm)},
       {"batch_size", c.optimizer.batch_size},
       {"epochs", c.epochs},
       {"seed", c.seed},
       {"split_fraction", c.split_fraction},
       {"shuffle", c.shuffle},
       {"sample_stride", c.sample_stride}};
  if (c.optimizer.clip_norm) j["clip_norm"] = *c.optimizer.clip_norm;
  if (c.max_steps) j["max_steps"] = *c.max_steps;
}

void from_json(const nlohmann::json& j, TrainRunConfig& c) {
  c = TrainRunConfig{};
  if (j.contains("model")) c.model = j.at("model").get<ModelConfig>();
  c.optimizer.learning_rate = j.value("learning_rate", c.optimizer.learning_rate);
  if (j.contains("optimizer")) {
    c.optimizer.algorithm = nn::optimizer_from_string(j.at("optimizer").get<std::string>());
  }
  c.optimizer.batch_size = j.value("batch_size", c.optimizer.batch_size);
  if (j.contains("clip_norm")) c.optimizer.clip_norm = j.at("clip_norm").get<double>();
  c.epochs = j.value("epochs", c.epochs);
  if (j.contains("max_steps")) c.max_steps = j.at("max_steps").get<std::size_t>();
  c.seed = j.value("seed", c.seed);
  c.split_fraction = j.value("split_fraction", c.split_fraction);
  c.shuffle = j.value("shuffle", c.shuffle);
  c.sample_stride = j.value("sample_stride", c.sample_stride);
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  // std::shuffle's draw pattern is library-specific; this one is not.
  nn::Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(nn::uniform01(rng) * static_cast<double>(i));
    std::swap(p[i - 1], p[std::min(j, i - 1)]);
  }
  return p;
}

DatasetSplit split_dataset(const std::vector<PairedClip>& pairs, double fraction,
                           std::uint64_t seed) {
  if (pairs.size() < 2) throw ValidationError("split needs at least 2 clips");
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must be in (0, 1)");
  const std::size_t n = pairs.size();
  auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
  const auto perm = seeded_permutation(n, seed);
  DatasetSplit split;
  split.test_ids.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train_ids.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  std::sort(split.train_ids.begin(), split.train_ids.end());
  for (std::size_t i : split.train_ids) split.train.push_back(pairs[i]);
  for (std::size_t i : split.test_ids) split.test.push_back(pairs[i]);
  return split;
}

std::vector<TrainingSample> make_samples(const std::vector<PairedClip>& pairs,
                                         const ModelConfig& cfg, std::size_t stride) {
  std::vector<TrainingSample> out;
  for (const auto& p : pairs) {
    if (p.size() <= cfg.ctx_len) continue;
    auto s = build_samples(p, cfg.ctx_len, cfg.past_len, stride);
    std::move(s.begin(), s.end(), std::back_inserter(out));
  }
  return out;
}

namespace {

double mse_double(const nn::Tensor<float>& pred, const nn::Tensor<float>& target) {
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred.data()[i]) - target.data()[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

}  // namespace

std::vector<LossRecord> train_model(MotionModel<float>& model, const TrainRunConfig& cfg,
                                    const std::vector<TrainingSample>& samples,
                                    const StepCallback& on_step) {
  cfg.optimizer.validate();
  if (samples.empty()) throw ValidationError("training set is empty");
  nn::Optimizer<float> opt(model.parameters(), cfg.optimizer);
  nn::Rng dropout_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const nn::ForwardContext ctx{true, &dropout_rng};
  const std::size_t bs = cfg.optimizer.batch_size;

  std::vector<LossRecord> history;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (cfg.shuffle) {
      order = seeded_permutation(samples.size(), cfg.seed + 0x51ed270b27ULL * (epoch + 1));
    }
    for (std::size_t begin = 0; begin < order.size(); begin += bs) {
      if (cfg.max_steps && step >= *cfg.max_steps) return history;
      const std::size_t end = std::min(order.size(), begin + bs);
      std::vector<const TrainingSample*> batch;
      for (std::size_t i = begin; i < end; ++i) batch.push_back(&samples[order[i]]);

      model.parameters().zero_grad();
      const auto input = ModelInput<float>::from_samples(batch);
      const auto target = stack_targets<float>(batch);
      nn::Var<float> pred;
      try {
        pred = model.forward(input, ctx);
      } catch (const DivergenceError&) {
        throw DivergenceError("non-finite output at batch " + std::to_string(step),
                              static_cast<std::int64_t>(step));
      }
      const double loss = mse_double(pred->value, target);
      if (!std::isfinite(loss)) {
        throw DivergenceError("non-finite loss at batch " + std::to_string(step),
                              static_cast<std::int64_t>(step));
      }
      nn::backward(nn::mse_loss(pred, target));
      opt.step();

      history.push_back({step, epoch, loss});
      ++step;
      if (on_step && !on_step(history.back())) return history;
    }
  }
  return history;
}

TrainResult train(const TrainRunConfig& cfg, const std::vector<TrainingSample>& samples,
                  const StepCallback& on_step) {
  cfg.validate();
  TrainResult result;
  result.model = make_model<float>(cfg.model, cfg.seed);
  result.history = train_model(*result.model, cfg, samples, on_step);
  return result;
}

double evaluate_loss(const MotionModel<float>& model,
                     const std::vector<TrainingSample>& samples, std::size_t batch_size) {
  if (samples.empty()) throw ValidationError("evaluation set is empty");
  nn::NoGradGuard no_grad;
  double acc = 0.0;
  for (std::size_t begin = 0; begin < samples.size(); begin += batch_size) {
    const std::size_t end = std::min(samples.size(), begin + batch_size);
    std::vector<const TrainingSample*> batch;
    for (std::size_t i = begin; i < end; ++i) batch.push_back(&samples[i]);
    const auto pred = model.forward(ModelInput<float>::from_samples(batch), {});
    acc += mse_double(pred->value, stack_targets<float>(batch)) *
           static_cast<double>(batch.size());
  }
  return acc / static_cast<double>(samples.size());
}

void write_loss_csv(const std::vector<LossRecord>& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "step,epoch,loss\n";
  char buf[64];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof(buf), "%.17g", r.loss);
    out << r.step << ',' << r.epoch << ',' << buf << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace rmx
