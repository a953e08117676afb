#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "rmx/models/model.hpp"
#include "rmx/nn/optim.hpp"

namespace rmx {

struct TrainRunConfig {
  ModelConfig model;
  nn::OptimizerConfig optimizer;
  std::size_t epochs = 50;
  /// Stops after this many optimizer steps even mid-epoch.
  std::optional<std::size_t> max_steps;
  std::uint64_t seed = 0;
  double split_fraction = 0.1;
  bool shuffle = true;
  std::size_t sample_stride = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainRunConfig& c);
void from_json(const nlohmann::json& j, TrainRunConfig& c);

struct DatasetSplit {
  std::vector<PairedClip> train;
  std::vector<PairedClip> test;
  std::vector<std::size_t> train_ids;  // positions in the input list
  std::vector<std::size_t> test_ids;
};

/// Whole-clip holdout: round(n * fraction) clips, at least one and at most
/// n - 1, go to the test side. Throws ValidationError for fewer than 2 clips.
DatasetSplit split_dataset(const std::vector<PairedClip>& pairs, double fraction,
                           std::uint64_t seed);

/// Deterministic Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

/// Every training window of every pair, in order.
std::vector<TrainingSample> make_samples(const std::vector<PairedClip>& pairs,
                                         const ModelConfig& cfg, std::size_t stride = 1);

struct LossRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
};

/// Return false to stop training after the current step.
using StepCallback = std::function<bool(const LossRecord&)>;

/// Trains `model` in place. Each optimizer step takes one batch; the last
/// short batch of an epoch is kept. Throws DivergenceError naming the global
/// batch index when the loss or a gradient stops being finite.
std::vector<LossRecord> train_model(MotionModel<float>& model, const TrainRunConfig& cfg,
                                    const std::vector<TrainingSample>& samples,
                                    const StepCallback& on_step = {});

struct TrainResult {
  std::unique_ptr<MotionModel<float>> model;
  std::vector<LossRecord> history;
};

/// Builds a model from cfg.model seeded by cfg.seed and trains it.
TrainResult train(const TrainRunConfig& cfg, const std::vector<TrainingSample>& samples,
                  const StepCallback& on_step = {});

/// MSE of the model on samples, accumulated in double, no dropout.
double evaluate_loss(const MotionModel<float>& model,
                     const std::vector<TrainingSample>& samples, std::size_t batch_size = 32);

void write_loss_csv(const std::vector<LossRecord>& history, const std::filesystem::path& path);

}  // namespace rmx
