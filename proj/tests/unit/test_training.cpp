#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "helpers.hpp"
#include "rmx/checkpoint.hpp"
#include "rmx/error.hpp"
#include "rmx/synthetic.hpp"
#include "rmx/training.hpp"

using namespace rmx;

namespace {

std::vector<PairedClip> small_corpus(std::size_t n, std::size_t frames = 45) {
  SyntheticConfig sc;
  sc.n_pairs = n;
  sc.n_frames = frames;
  sc.seed = 5;
  return synthetic_corpus(SkeletonTopology::humanoid_default(), sc);
}

TrainRunConfig tiny_run(Architecture a, std::size_t steps) {
  TrainRunConfig c;
  c.model = test::tiny_config(a);
  c.optimizer.learning_rate = 1e-3;
  c.optimizer.batch_size = 4;
  c.epochs = 1000;
  c.max_steps = steps;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("split by whole clip") {
  const auto pairs = small_corpus(10, 35);
  const auto split = split_dataset(pairs, 0.1, 7);
  CHECK(split.train.size() == 9);
  CHECK(split.test.size() == 1);
  std::set<std::size_t> ids(split.train_ids.begin(), split.train_ids.end());
  for (std::size_t t : split.test_ids) CHECK(ids.insert(t).second);
  CHECK(ids.size() == 10);
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    CHECK(split.test[i].subject.frames() == pairs[split.test_ids[i]].subject.frames());
  }
  const auto again = split_dataset(pairs, 0.1, 7);
  CHECK(again.test_ids == split.test_ids);
  CHECK(again.train_ids == split.train_ids);
  CHECK(split_dataset(pairs, 0.01, 7).test.size() == 1);
  CHECK(split_dataset(pairs, 0.99, 7).train.size() == 1);
  CHECK_THROWS_AS(split_dataset({pairs[0]}, 0.5, 1), ValidationError);
}

TEST_CASE("test windows never come from training clips") {
  const auto pairs = small_corpus(6, 40);
  const auto split = split_dataset(pairs, 0.34, 2);
  const auto cfg = test::tiny_config(Architecture::kSimple);
  const auto train_samples = make_samples(split.train, cfg);
  const auto test_samples = make_samples(split.test, cfg);
  CHECK(train_samples.size() == split.train.size() * 10);
  // Audit every subject frame of every test window against all training frames.
  std::set<std::vector<float>> train_frames;
  for (const auto& p : split.train) {
    for (const auto& f : p.subject.frames()) {
      const auto v = f.features();
      train_frames.emplace(v.begin(), v.end());
    }
  }
  for (const auto& s : test_samples) {
    for (std::size_t t = 0; t < 30; ++t) {
      std::vector<float> row(s.x_ctx.begin() + t * 51, s.x_ctx.begin() + (t + 1) * 51);
      CHECK(train_frames.count(row) == 0);
    }
  }
}

TEST_CASE("permutation is a seeded shuffle of 0..n-1") {
  const auto p = seeded_permutation(50, 9);
  auto sorted = p;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 50; ++i) CHECK(sorted[i] == i);
  CHECK(p == seeded_permutation(50, 9));
  CHECK(p != seeded_permutation(50, 10));
}

TEST_CASE("run config validation and json") {
  TrainRunConfig c;
  c.split_fraction = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.split_fraction = 0.2;
  c.max_steps = 12;
  c.model.arch = Architecture::kInverted;
  const nlohmann::json j = c;
  const auto back = j.get<TrainRunConfig>();
  CHECK(back.model == c.model);
  CHECK(back.max_steps == c.max_steps);
  CHECK(back.split_fraction == 0.2);
  CHECK(TrainRunConfig{}.epochs == 50);
}

TEST_CASE("step-0 loss with a zeroed head is the mean squared target") {
  const auto samples = make_samples(small_corpus(1), test::tiny_config(Architecture::kSimple));
  for (Architecture a : {Architecture::kSimple, Architecture::kInverted,
                         Architecture::kCrossSegment}) {
    auto cfg = tiny_run(a, 1);
    cfg.optimizer.batch_size = samples.size();
    auto m = make_model<float>(cfg.model, cfg.seed);
    m->parameters().get(kHeadWeight)->value.fill(0.0f);
    m->parameters().get(kHeadBias)->value.fill(0.0f);
    double want = 0.0;
    for (const auto& s : samples) {
      for (float t : s.target) want += static_cast<double>(t) * t;
    }
    want /= static_cast<double>(samples.size() * 51);
    CHECK(evaluate_loss(*m, samples) == doctest::Approx(want).epsilon(1e-12));
    const auto hist = train_model(*m, cfg, samples);
    REQUIRE(hist.size() == 1);
    CHECK(hist[0].loss == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("learning rate zero leaves parameters and outputs alone") {
  const auto samples = make_samples(small_corpus(1), test::tiny_config(Architecture::kSimple));
  auto cfg = tiny_run(Architecture::kInverted, 6);
  cfg.optimizer.learning_rate = 0.0;
  cfg.optimizer.batch_size = samples.size();
  auto m = make_model<float>(cfg.model, cfg.seed);
  const auto before = serialize_checkpoint(*m, 0);
  const double loss0 = evaluate_loss(*m, samples);
  const auto hist = train_model(*m, cfg, samples);
  CHECK(serialize_checkpoint(*m, 0) == before);
  CHECK(evaluate_loss(*m, samples) == loss0);
  for (const auto& r : hist) CHECK(r.loss == doctest::Approx(hist[0].loss).epsilon(1e-12));
}

TEST_CASE("training is reproducible and stops on request") {
  const auto samples = make_samples(small_corpus(2), test::tiny_config(Architecture::kSimple));
  auto cfg = tiny_run(Architecture::kSimple, 8);
  cfg.model.dropout = 0.1;
  const auto a = train(cfg, samples);
  const auto b = train(cfg, samples);
  REQUIRE(a.history.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(a.history[i].loss == b.history[i].loss);
    CHECK(a.history[i].step == i);
  }
  CHECK(serialize_checkpoint(*a.model, 3) == serialize_checkpoint(*b.model, 3));
  std::size_t seen = 0;
  train(cfg, samples, [&](const LossRecord&) { return ++seen < 3; });
  CHECK(seen == 3);
}

TEST_CASE("epochs keep the short last batch") {
  const auto samples = make_samples(small_corpus(1), test::tiny_config(Architecture::kSimple));
  REQUIRE(samples.size() == 15);
  auto cfg = tiny_run(Architecture::kInverted, 100);
  cfg.max_steps.reset();
  cfg.epochs = 2;
  const auto hist = train(cfg, samples).history;
  CHECK(hist.size() == 8);  // ceil(15 / 4) per epoch
  CHECK(hist[3].epoch == 0);
  CHECK(hist[4].epoch == 1);
}

TEST_CASE("memorizing one sample") {
  const auto samples = make_samples(small_corpus(1, 31), test::tiny_config(Architecture::kSimple));
  REQUIRE(samples.size() == 1);
  auto cfg = tiny_run(Architecture::kSimple, 400);
  cfg.optimizer.learning_rate = 3e-3;
  const auto res = train(cfg, samples);
  CHECK(res.history.back().loss < 1e-3);
  for (const auto& r : res.history) CHECK(r.loss >= 0.0);
}

TEST_CASE("non-finite loss aborts naming the batch") {
  auto samples = make_samples(small_corpus(1), test::tiny_config(Architecture::kSimple));
  samples[9].target[3] = std::numeric_limits<float>::quiet_NaN();
  auto cfg = tiny_run(Architecture::kSimple, 10);
  cfg.shuffle = false;
  try {
    train(cfg, samples);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.index() == 2);
    CHECK(std::string(e.what()).find("batch 2") != std::string::npos);
  }
}

TEST_CASE("loss csv") {
  const auto path = std::filesystem::temp_directory_path() / "rmx_test_loss.csv";
  write_loss_csv({{0, 0, 0.5}, {1, 0, 0.25}}, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "step,epoch,loss");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2);
  std::filesystem::remove(path);
}

}  // TEST_SUITE
