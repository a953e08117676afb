#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "helpers.hpp"
#include "rmx/error.hpp"
#include "rmx/models/cross_segment.hpp"
#include "rmx/models/inverted_transformer.hpp"
#include "rmx/models/simple_transformer.hpp"

using namespace rmx;

namespace {

constexpr Architecture kAll[] = {Architecture::kSimple, Architecture::kInverted,
                                 Architecture::kCrossSegment};

nn::Tensor<float> run(const MotionModel<float>& m, const TrainingSample& s) {
  return m.forward(ModelInput<float>::from_sample(s), {})->value;
}

void zero_head(MotionModel<float>& m, float bias) {
  auto& store = m.parameters();
  store.get(kHeadWeight)->value.fill(0.0f);
  store.get(kHeadBias)->value.fill(bias);
}

std::size_t mha_params(std::size_t d) { return 4 * (d * d + d); }
std::size_t ffn_params(std::size_t d, std::size_t f) { return d * f + f + f * d + d; }

}  // namespace

TEST_SUITE("models") {

TEST_CASE("every architecture maps one sample to 51 finite values") {
  std::mt19937_64 rng(1);
  const auto s = test::random_sample(rng);
  for (Architecture a : kAll) {
    for (bool id : {false, true}) {
      auto m = make_model<float>(test::tiny_config(a, id), 3);
      const auto out = run(*m, s);
      CHECK(out.shape() == nn::Shape{1, 51});
      CHECK(out.all_finite());
    }
  }
}

TEST_CASE("batch dimension is preserved and identical rows agree") {
  std::mt19937_64 rng(2);
  const auto s = test::random_sample(rng);
  const auto s2 = test::random_sample(rng);
  for (Architecture a : kAll) {
    auto m = make_model<float>(test::tiny_config(a), 4);
    const TrainingSample* batch[] = {&s, &s2, &s};
    const auto out = m->forward(ModelInput<float>::from_samples(batch), {})->value;
    REQUIRE(out.shape() == nn::Shape{3, 51});
    for (std::size_t f = 0; f < 51; ++f) CHECK(out[f] == out[2 * 51 + f]);
    CHECK(run(*m, s) == run(*m, s));
  }
}

TEST_CASE("zeroed head predicts its bias") {
  std::mt19937_64 rng(3);
  const auto s = test::random_sample(rng);
  for (Architecture a : kAll) {
    auto m = make_model<float>(test::tiny_config(a), 5);
    zero_head(*m, 0.0f);
    const auto zero = run(*m, s);
    for (float v : zero.storage()) CHECK(v == 0.0f);
    zero_head(*m, 0.25f);
    const auto biased = run(*m, s);
    for (float v : biased.storage()) CHECK(v == 0.25f);
  }
}

TEST_CASE("inputs of the wrong shape are rejected") {
  std::mt19937_64 rng(4);
  const auto s = test::random_sample(rng, 20, 10);
  for (Architecture a : kAll) {
    auto m = make_model<float>(test::tiny_config(a), 6);
    CHECK_THROWS_AS(run(*m, s), ShapeError);
  }
}

TEST_CASE("config validation") {
  ModelConfig c = test::tiny_config(Architecture::kCrossSegment);
  c.seg_len = 7;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(make_model<float>(c, 1), ConfigError);
  c = test::tiny_config(Architecture::kSimple);
  c.n_heads = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = test::tiny_config(Architecture::kSimple);
  c.past_len = 31;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(architecture_from_string("crossseg") == Architecture::kCrossSegment);
  CHECK_THROWS_AS(architecture_from_string("lstm"), ConfigError);
  ModelConfig defaults;
  CHECK(defaults.n_segments() == 6);
  CHECK(defaults.out_seg() == 1);
  CHECK(defaults.n_variates() == 102);
  const nlohmann::json j = c;
  CHECK(j.get<ModelConfig>() == c);
}

TEST_CASE("parameter counts follow the structure") {
  const std::size_t d = 16, f = 32, dd = 102;
  ModelConfig si = test::tiny_config(Architecture::kSimple, true);
  ModelConfig inv = test::tiny_config(Architecture::kInverted, true);
  const std::size_t enc_layer = 4 * d + mha_params(d) + ffn_params(d, f);
  const std::size_t dec_layer = 6 * d + 2 * mha_params(d) + ffn_params(d, f);
  const std::size_t simple_want = 2 * (dd * d + d) + 2 * enc_layer + 2 * d + dec_layer +
                                  2 * d + (d * 51 + 51) + 2 * 51;
  const std::size_t inv_want = (30 * d + d) + 2 * d + 2 * enc_layer + 2 * d + (d + 1);
  CHECK(make_model<float>(si, 1)->parameter_count() == simple_want);
  CHECK(make_model<float>(inv, 1)->parameter_count() == inv_want);
  si.use_person_id = false;
  CHECK(make_model<float>(si, 1)->parameter_count() == simple_want - 102);
  CHECK(simple_want != inv_want);
}

TEST_CASE("same seed gives the same parameters, another seed does not") {
  for (Architecture a : kAll) {
    auto m1 = make_model<float>(test::tiny_config(a), 9);
    auto m2 = make_model<float>(test::tiny_config(a), 9);
    auto m3 = make_model<float>(test::tiny_config(a), 10);
    const auto& e1 = m1->parameters().entries();
    const auto& e2 = m2->parameters().entries();
    bool all_equal = true, any_diff = false;
    for (std::size_t i = 0; i < e1.size(); ++i) {
      all_equal = all_equal && e1[i].second->value == e2[i].second->value;
      any_diff = any_diff || e1[i].second->value != m3->parameters().entries()[i].second->value;
    }
    CHECK(all_equal);
    CHECK(any_diff);
    copy_parameters(*m3, *m2);
    std::mt19937_64 rng(1);
    const auto s = test::random_sample(rng);
    CHECK(run(*m2, s) == run(*m3, s));
  }
}

TEST_CASE("simple: output depends on every past frame and both contexts") {
  std::mt19937_64 rng(11);
  const auto s = test::random_sample(rng);
  auto m = make_model<float>(test::tiny_config(Architecture::kSimple), 12);
  const auto base = run(*m, s);
  for (std::size_t k = 0; k < 10; ++k) {
    auto p = s;
    p.past[k * 102 + 7] += 0.5f;
    CHECK(run(*m, p) != base);
  }
  auto px = s;
  px.x_ctx[3] += 0.5f;
  CHECK(run(*m, px) != base);
  auto py = s;
  py.y_ctx[29 * 51 + 50] += 0.5f;
  CHECK(run(*m, py) != base);
}

TEST_CASE("simple: decoder self-attention is causal") {
  std::mt19937_64 rng(13);
  const auto s = test::random_sample(rng);
  SimpleTransformer<float> m(test::tiny_config(Architecture::kSimple), 14);
  const auto in = ModelInput<float>::from_sample(s);
  const auto mem = m.encode(in, {});
  CHECK(mem->value.shape() == nn::Shape{1, 30, 16});
  const auto base = m.decode(in, mem, {})->value;
  CHECK(base.shape() == nn::Shape{1, 10, 16});
  for (std::size_t k = 1; k < 10; ++k) {
    auto p = s;
    for (std::size_t i = k * 102; i < p.past.size(); ++i) p.past[i] += 1.0f;
    const auto in2 = ModelInput<float>::from_sample(p);
    const auto out = m.decode(in2, m.encode(in2, {}), {})->value;
    for (std::size_t i = 0; i < k * 16; ++i) CHECK(out[i] == base[i]);
    CHECK(!std::equal(out.storage().begin() + k * 16, out.storage().end(),
                      base.storage().begin() + k * 16));
  }
}

TEST_CASE("inverted: variate permutation equivariance without person ids") {
  std::mt19937_64 rng(15);
  const auto s = test::random_sample(rng);
  const auto tokens = InvertedTransformer<float>::variate_tokens(ModelInput<float>::from_sample(s));
  REQUIRE(tokens.shape() == nn::Shape{1, 102, 30});
  std::vector<std::size_t> perm(102);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  nn::Tensor<float> permuted(tokens.shape());
  for (std::size_t r = 0; r < 102; ++r) {
    std::copy_n(tokens.data() + perm[r] * 30, 30, permuted.data() + r * 30);
  }
  const auto owners = variate_owners(test::tiny_config(Architecture::kInverted));
  for (bool id : {false, true}) {
    InvertedTransformer<float> m(test::tiny_config(Architecture::kInverted, id), 16);
    const auto base = m.forward_tokens(tokens, owners, {})->value;
    const auto out = m.forward_tokens(permuted, owners, {})->value;
    bool equivariant = true;
    for (std::size_t r = 0; r < 102; ++r) equivariant = equivariant && out[r] == base[perm[r]];
    CHECK(equivariant == !id);
  }
}

TEST_CASE("inverted: counterpart variate j reacts to its own history") {
  std::mt19937_64 rng(17);
  const auto s = test::random_sample(rng);
  auto m = make_model<float>(test::tiny_config(Architecture::kInverted), 18);
  const auto base = run(*m, s);
  for (std::size_t j : {0u, 20u, 50u}) {
    auto p = s;
    p.y_ctx[12 * 51 + j] += 0.5f;
    CHECK(run(*m, p)[j] != base[j]);
  }
  // The past window is not an input of this architecture.
  auto p = s;
  p.past[0] += 1.0f;
  CHECK(run(*m, p) == base);
}

TEST_CASE("crossseg: token counts and attention shapes") {
  std::mt19937_64 rng(19);
  const auto s = test::random_sample(rng);
  const auto cfg = test::tiny_config(Architecture::kCrossSegment);
  CrossSegmentTransformer<float> m(cfg, 20);
  const auto in = ModelInput<float>::from_sample(s);
  const auto seg = CrossSegmentTransformer<float>::segment_tokens(in, 5);
  CHECK(seg.shape() == nn::Shape{1, 102, 6, 5});
  // Segment values come straight from the contexts.
  CHECK(seg[(0 * 6 + 1) * 5 + 2] == s.x_ctx[7 * 51 + 0]);
  CHECK(seg[((51 + 4) * 6 + 5) * 5 + 4] == s.y_ctx[29 * 51 + 4]);
  std::vector<TsaTrace<float>> traces;
  const auto enc = m.encode(in, {}, &traces);
  CHECK(enc->value.shape() == nn::Shape{1, 102, 6, 16});
  CHECK(enc->value.size() / 16 == 612);
  REQUIRE(traces.size() == cfg.n_encoder_layers);
  CHECK(traces[0].time_weights.shape() == nn::Shape{102, 2, 6, 6});
  CHECK(traces[0].sender_weights.shape() == nn::Shape{6, 2, 4, 102});
  CHECK(traces[0].receiver_weights.shape() == nn::Shape{6, 2, 102, 4});
  const auto dec = m.decode(enc, 1, {});
  CHECK(dec->value.shape() == nn::Shape{1, 102, 1, 16});
  CHECK(m.decoder_query_shape() == nn::Shape{102, 1, 16});
}

TEST_CASE("tsa layer degenerate widths") {
  nn::Rng rng(21);
  nn::ParameterStore<double> store;
  ModelConfig cfg = test::tiny_config(Architecture::kCrossSegment);
  TsaLayer<double> one_seg(store, "a", cfg, 1, rng);
  std::mt19937_64 r2(22);
  auto x = nn::constant(test::random_tensor<double>({2, 1, 1, 16}, r2));
  TsaTrace<double> trace;
  const auto y = one_seg(x, {}, &trace);
  CHECK(y->value.shape() == nn::Shape{2, 1, 1, 16});
  CHECK(y->value.all_finite());
  for (double w : trace.time_weights.storage()) CHECK(w == 1.0);
  for (double w : trace.sender_weights.storage()) CHECK(w == 1.0);  // one variate
}

TEST_CASE("person ids: gradients and ownership swap") {
  std::mt19937_64 rng(23);
  const auto s = test::random_sample(rng);
  for (Architecture a : kAll) {
    for (bool id : {false, true}) {
      auto m = make_model<float>(test::tiny_config(a, id), 24);
      CHECK(m->parameters().contains(kPersonIdParam) == id);
      if (!id) continue;
      const auto table = m->parameters().get(kPersonIdParam);
      auto out = m->forward(ModelInput<float>::from_sample(s), {});
      nn::backward(nn::mse_loss(out, nn::Tensor<float>({1, 51}, s.target)));
      REQUIRE(table->has_grad());
      for (std::size_t p = 0; p < 2; ++p) {
        const std::size_t w = table->value.dim(1);
        bool nonzero = false;
        for (std::size_t i = 0; i < w; ++i) nonzero = nonzero || table->grad[p * w + i] != 0.0f;
        CHECK(nonzero);
      }
      // Swapping which person owns which variates = swapping the rows.
      const auto before = run(*m, s);
      auto& v = table->value.storage();
      std::swap_ranges(v.begin(), v.begin() + v.size() / 2, v.begin() + v.size() / 2);
      CHECK(run(*m, s) != before);
    }
  }
}

TEST_CASE("person-id table rows of zero leave the output unchanged") {
  std::mt19937_64 rng(25);
  const auto s = test::random_sample(rng);
  for (Architecture a : kAll) {
    auto with = make_model<float>(test::tiny_config(a, true), 26);
    auto without = make_model<float>(test::tiny_config(a, false), 26);
    // Copy the shared parameters by name; zero the person table.
    for (const auto& [name, p] : with->parameters().entries()) {
      if (name == kPersonIdParam) {
        p->value.fill(0.0f);
      } else {
        p->value = without->parameters().get(name)->value;
      }
    }
    CHECK(run(*with, s) == run(*without, s));
  }
}

TEST_CASE("apply_person_id rejects unknown owners") {
  auto tokens = nn::constant(nn::Tensor<float>({1, 2, 1, 4}));
  auto table = nn::constant(nn::Tensor<float>({2, 4}));
  CHECK_THROWS_AS(apply_person_id(tokens, table, {0, 2}, 1), ConfigError);
}

}  // TEST_SUITE
