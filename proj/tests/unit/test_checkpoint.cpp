#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "rmx/checkpoint.hpp"
#include "rmx/error.hpp"

using namespace rmx;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("rmx_test_" + name);
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("round trip preserves parameters, config, seed and outputs") {
  std::mt19937_64 rng(1);
  const auto s = test::random_sample(rng);
  for (Architecture a : {Architecture::kSimple, Architecture::kInverted,
                         Architecture::kCrossSegment}) {
    auto m = make_model<float>(test::tiny_config(a, true), 77);
    const auto bytes = serialize_checkpoint(*m, 77);
    const Checkpoint ck = deserialize_checkpoint(bytes, a);
    CHECK(ck.seed == 77);
    CHECK(ck.config == m->config());
    const auto& e1 = m->parameters().entries();
    const auto& e2 = ck.model->parameters().entries();
    REQUIRE(e1.size() == e2.size());
    for (std::size_t i = 0; i < e1.size(); ++i) {
      CHECK(e1[i].first == e2[i].first);
      CHECK(e1[i].second->value == e2[i].second->value);
    }
    const auto in = ModelInput<float>::from_sample(s);
    CHECK(m->forward(in, {})->value == ck.model->forward(in, {})->value);
    CHECK(serialize_checkpoint(*ck.model, ck.seed) == bytes);
  }
}

TEST_CASE("header layout") {
  auto m = make_model<float>(test::tiny_config(Architecture::kInverted), 1);
  const auto bytes = serialize_checkpoint(*m, 1);
  REQUIRE(bytes.size() > 12);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "RMXC");
  CHECK(bytes[4] == kCheckpointVersion);
  CHECK((bytes[5] | bytes[6] | bytes[7]) == 0);
  // Payload is at least the raw float parameters.
  CHECK(bytes.size() > m->parameter_count() * 4);
}

TEST_CASE("any corrupted byte is detected") {
  auto m = make_model<float>(test::tiny_config(Architecture::kSimple), 2);
  const auto bytes = serialize_checkpoint(*m, 2);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pos(0, bytes.size() - 1);
  for (int i = 0; i < 50; ++i) {
    auto bad = bytes;
    bad[pos(rng)] ^= static_cast<std::uint8_t>(1u << (i % 8));
    CHECK_THROWS_AS(deserialize_checkpoint(bad), IoError);
  }
  // A payload byte specifically (well past the header).
  auto bad = bytes;
  bad[bytes.size() - 100] ^= 0x40;
  CHECK_THROWS_AS(deserialize_checkpoint(bad), CheckpointError);
}

TEST_CASE("truncation, bad magic and wrong version") {
  auto m = make_model<float>(test::tiny_config(Architecture::kSimple), 2);
  const auto bytes = serialize_checkpoint(*m, 2);
  for (std::size_t n : {std::size_t{0}, std::size_t{3}, std::size_t{11}, bytes.size() / 2,
                        bytes.size() - 1}) {
    CHECK_THROWS_AS(deserialize_checkpoint({bytes.begin(), bytes.begin() + n}), CheckpointError);
  }
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_checkpoint(magic), CheckpointError);
}

TEST_CASE("architecture mismatch is a config error") {
  auto m = make_model<float>(test::tiny_config(Architecture::kInverted), 4);
  const auto bytes = serialize_checkpoint(*m, 4);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes, Architecture::kSimple), ConfigError);
  CHECK_NOTHROW(deserialize_checkpoint(bytes, Architecture::kInverted));
}

TEST_CASE("files on disk") {
  auto m = make_model<float>(test::tiny_config(Architecture::kCrossSegment), 5);
  const auto path = temp_path("ck.rmxc");
  save_checkpoint(*m, 5, path);
  const auto ck = load_checkpoint(path);
  CHECK(serialize_checkpoint(*ck.model, ck.seed) == serialize_checkpoint(*m, 5));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), IoError);
}

}  // TEST_SUITE
