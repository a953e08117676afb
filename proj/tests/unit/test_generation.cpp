#include <doctest.h>

#include "helpers.hpp"
#include "rmx/error.hpp"
#include "rmx/generation.hpp"
#include "rmx/nn/optim.hpp"
#include "rmx/synthetic.hpp"

using namespace rmx;

namespace {

const SkeletonTopology& topo() {
  static const SkeletonTopology t = SkeletonTopology::humanoid_default();
  return t;
}

PairedClip pair_of(std::size_t frames, std::uint64_t seed = 4) {
  return synthetic_pair(topo(), frames, seed);
}

std::span<const PoseFrame> head(const MotionClip& c, std::size_t n) {
  return {c.frames().data(), n};
}

}  // namespace

TEST_SUITE("generation") {

TEST_CASE("stream warm-up mirrors the subject, offline uses the counterpart verbatim") {
  const auto pair = pair_of(40);
  auto m = make_model<float>(test::tiny_config(Architecture::kSimple), 1);
  GenerationSession stream(*m, head(pair.subject, 30), std::nullopt, topo());
  CHECK(stream.mode() == GenerationMode::kStream);
  const auto sw = stream.subject_window();
  const auto cw = stream.counterpart_window();
  REQUIRE(cw.size() == 30);
  for (std::size_t k = 0; k < 30; ++k) {
    CHECK(cw[k] == mirror_frame(sw[k]));
    CHECK(mirror_frame(cw[k]) == sw[k]);
  }
  GenerationSession offline(*m, head(pair.subject, 30), head(pair.counterpart, 30), topo());
  CHECK(offline.mode() == GenerationMode::kOffline);
  const auto ow = offline.counterpart_window();
  for (std::size_t k = 0; k < 30; ++k) CHECK(ow[k] == pair.counterpart[k]);
}

TEST_CASE("warm-up validation") {
  const auto pair = pair_of(40);
  auto m = make_model<float>(test::tiny_config(Architecture::kSimple), 1);
  CHECK_THROWS_AS(GenerationSession(*m, head(pair.subject, 29), std::nullopt, topo()),
                  ValidationError);
  CHECK_THROWS_AS(
      GenerationSession(*m, head(pair.subject, 30), head(pair.counterpart, 10), topo()),
      ValidationError);
  auto frames = pair.subject.frames();
  frames[5].joints[h36m::kLeftWrist][0] += 0.05;  // 20% off its 0.25 m bone
  CHECK_THROWS_AS(GenerationSession(*m, {frames.data(), 30}, std::nullopt, topo()),
                  ValidationError);
  PoseFrame slightly = pair.subject[0];
  // Within the 1% tolerance.
  const Vec3& elbow = slightly.joints[h36m::kLeftElbow];
  Vec3& wrist = slightly.joints[h36m::kLeftWrist];
  for (int c = 0; c < 3; ++c) wrist[c] = elbow[c] + (wrist[c] - elbow[c]) * 1.005;
  CHECK_NOTHROW(validate_preprocessed(slightly, topo()));
}

TEST_CASE("window discipline, counting and closed-loop purity") {
  const auto pair = pair_of(80);
  auto m = make_model<float>(test::tiny_config(Architecture::kSimple), 2);
  GenerationSession s(*m, head(pair.subject, 30), head(pair.counterpart, 30), topo());
  std::vector<PoseFrame> outputs;
  for (std::size_t k = 0; k < 40; ++k) {
    const auto in = s.current_input();
    for (std::size_t t = 0; t < 10; ++t) {
      for (std::size_t f = 0; f < 51; ++f) {
        REQUIRE(in.past[t * 102 + f] == in.x_ctx[(20 + t) * 51 + f]);
        REQUIRE(in.past[t * 102 + 51 + f] == in.y_ctx[(20 + t) * 51 + f]);
      }
    }
    const PoseFrame& subject = pair.subject[30 + k];
    const PoseFrame g = s.step(subject);
    CHECK(g.person_id == 1);
    CHECK(g.frame_index == subject.frame_index);
    outputs.push_back(g);
    CHECK(s.frames_generated() == k + 1);
    CHECK(s.subject_window().back() == subject);
    const auto flags = s.counterpart_generated();
    const auto window = s.counterpart_window();
    for (std::size_t i = 0; i < 30; ++i) {
      CHECK(flags[i] == (i + k + 1 >= 30));
      if (flags[i]) CHECK(window[i] == outputs[outputs.size() - 30 + i]);
    }
  }
}

TEST_CASE("copied sessions produce identical frames") {
  const auto pair = pair_of(45);
  for (Architecture a : {Architecture::kSimple, Architecture::kInverted,
                         Architecture::kCrossSegment}) {
    auto m = make_model<float>(test::tiny_config(a), 3);
    GenerationSession s(*m, head(pair.subject, 30), std::nullopt, topo());
    s.step(pair.subject[30]);
    GenerationSession copy = s;
    const PoseFrame a1 = s.step(pair.subject[31]);
    const PoseFrame a2 = copy.step(pair.subject[31]);
    CHECK(a1 == a2);
  }
}

TEST_CASE("run_offline counting, horizon 0 and short pairs") {
  const auto pair = pair_of(60);
  auto m = make_model<float>(test::tiny_config(Architecture::kInverted), 5);
  const auto none = run_offline(*m, pair, 0, topo());
  CHECK(none.generated.empty());
  CHECK(none.subject.empty());
  const auto some = run_offline(*m, pair, 30, topo());
  REQUIRE(some.generated.size() == 30);
  CHECK(some.generated.first_index() == 30);
  CHECK(some.subject.frames() ==
        std::vector<PoseFrame>(pair.subject.frames().begin() + 30, pair.subject.frames().end()));
  CHECK_FALSE(some.divergence.has_value());
  CHECK_THROWS_AS(run_offline(*m, pair, 31, topo()), ValidationError);
  const auto again = run_offline(*m, pair, 30, topo());
  CHECK(again.generated.frames() == some.generated.frames());
  const auto mirrored = run_offline(*m, pair, 30, topo(), true);
  CHECK(mirrored.generated.frames() != some.generated.frames());
}

TEST_CASE("a bias-only model emits its bias whatever the input") {
  const auto pair = pair_of(50);
  auto m = make_model<float>(test::tiny_config(Architecture::kSimple), 6);
  auto w = m->parameters().get(kHeadWeight);
  auto b = m->parameters().get(kHeadBias);
  w->value.fill(0.0f);
  std::mt19937_64 rng(7);
  for (float& v : b->value.storage()) v = std::uniform_real_distribution<float>(-1, 1)(rng);
  // Fit the bias alone to the zero pose.
  nn::OptimizerConfig cfg;
  cfg.algorithm = nn::OptimizerAlgorithm::kSgd;
  cfg.learning_rate = 10.0;
  const auto zero_target = nn::Tensor<float>({1, 51});
  for (int it = 0; it < 200; ++it) {
    const auto s = test::random_sample(rng);
    m->parameters().zero_grad();
    nn::backward(nn::mse_loss(m->forward(ModelInput<float>::from_sample(s), {}), zero_target));
    nn::sgd_update<float>(b->value.values(), b->grad.values(), cfg);
  }
  for (float v : b->value.storage()) CHECK(std::abs(v) < 1e-6);
  GenerationSession s(*m, head(pair.subject, 30), std::nullopt, topo());
  for (std::size_t k = 30; k < 50; ++k) {
    const PoseFrame g = s.step(pair.subject[k]);
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      for (std::size_t c = 0; c < 3; ++c) CHECK(g.joints[j][c] == b->value[j * 3 + c]);
    }
  }
}

TEST_CASE("divergence names the frame and freezes the session") {
  const auto pair = pair_of(60);
  auto m = make_model<float>(test::tiny_config(Architecture::kSimple), 8);
  GenerationSession s(*m, head(pair.subject, 30), std::nullopt, topo());
  for (std::size_t k = 30; k < 35; ++k) s.step(pair.subject[k]);
  m->parameters().get(kHeadBias)->value[4] = 250.0f;
  try {
    s.step(pair.subject[35]);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.index() == 35);
    CHECK(std::string(e.what()).rfind("divergence at frame 35", 0) == 0);
  }
  CHECK(s.frozen());
  CHECK(s.frames_generated() == 5);
  CHECK_THROWS_AS(s.step(pair.subject[36]), ValidationError);

  m->parameters().get(kHeadBias)->value[4] = std::numeric_limits<float>::quiet_NaN();
  const auto r = run_offline(*m, pair, 20, topo());
  REQUIRE(r.divergence.has_value());
  CHECK(r.divergence->frame_index == 30);
  CHECK(r.divergence->step == 0);
  CHECK(r.generated.empty());
}

TEST_CASE("unpreprocessed subject frames are rejected mid-stream") {
  const auto pair = pair_of(40);
  auto m = make_model<float>(test::tiny_config(Architecture::kSimple), 9);
  GenerationSession s(*m, head(pair.subject, 30), std::nullopt, topo());
  PoseFrame bad = pair.subject[30];
  for (auto& j : bad.joints) {
    for (double& c : j) c *= 1.5;
  }
  CHECK_THROWS_AS(s.step(bad), ValidationError);
  CHECK_FALSE(s.frozen());
  CHECK(s.frames_generated() == 0);
}

}  // TEST_SUITE
