#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "rmx/error.hpp"
#include "rmx/io/clip_file.hpp"
#include "rmx/io/export.hpp"
#include "rmx/io/protocol.hpp"
#include "rmx/io/ref_bones.hpp"
#include "rmx/io/server.hpp"
#include "rmx/synthetic.hpp"

using namespace rmx;
using namespace rmx::io;

namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("rmx_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const SkeletonTopology& topo() {
  static const SkeletonTopology t = SkeletonTopology::humanoid_default();
  return t;
}

std::vector<MotionClip> corpus_clips() {
  SyntheticConfig sc;
  sc.n_pairs = 3;
  sc.n_frames = 60;
  std::vector<MotionClip> clips;
  for (const auto& p : synthetic_corpus(topo(), sc)) {
    clips.push_back(p.subject);
    clips.push_back(p.counterpart);
  }
  return clips;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("clip text is a fixed point after one rounding") {
  const auto clips = corpus_clips();
  const std::string first = serialize_clips(clips);
  CHECK(first.rfind("# RMXCLIP v1 joints=H36M17 fps=50/1\n", 0) == 0);
  const auto parsed = parse_clips(first);
  REQUIRE(parsed.size() == clips.size());
  for (std::size_t c = 0; c < clips.size(); ++c) {
    REQUIRE(parsed[c].size() == clips[c].size());
    CHECK(parsed[c].person_id() == clips[c].person_id());
    CHECK(parsed[c].first_index() == clips[c].first_index());
    for (std::size_t t = 0; t < clips[c].size(); ++t) {
      for (std::size_t j = 0; j < kNumJoints; ++j) {
        for (std::size_t k = 0; k < 3; ++k) {
          const double orig = clips[c][t].joints[j][k];
          CHECK(parsed[c][t].joints[j][k] == round_for_storage(orig));
          CHECK(std::abs(parsed[c][t].joints[j][k] - orig) <= 5e-6 * std::abs(orig) + 1e-300);
        }
      }
    }
  }
  CHECK(serialize_clips(parsed) == first);
}

TEST_CASE("clip parsing rejects malformed text") {
  const auto good = serialize_clips(corpus_clips());
  CHECK_THROWS_AS(parse_clips("# RMXCLIP v2 joints=H36M17 fps=50/1\n"), ValidationError);
  CHECK_THROWS_AS(parse_clips("# RMXCLIP v1 joints=COCO17 fps=50/1\n"), ValidationError);
  std::string short_row = good.substr(0, good.find('\n') + 1) + "0,0,1.0,2.0\n";
  CHECK_THROWS_AS(parse_clips(short_row), ValidationError);
  std::string bad_num = good;
  bad_num.replace(bad_num.rfind(',') + 1, 3, "abc");
  CHECK_THROWS_AS(parse_clips(bad_num), ValidationError);
  CHECK(parse_clips(good.substr(0, good.find('\n') + 1)).empty());
}

TEST_CASE("pair files") {
  const auto dir = fresh_dir("pairs");
  const auto pair = synthetic_pair(topo(), 40, 9);
  write_pair(dir / "b.clip", pair);
  write_pair(dir / "a.clip", synthetic_pair(topo(), 35, 10));
  const auto back = read_pair(dir / "b.clip");
  CHECK(back.size() == 40);
  CHECK(back.counterpart.person_id() == 1);
  const auto all = read_pair_dir(dir);
  REQUIRE(all.size() == 2);
  CHECK(all[0].size() == 35);
  write_clips(dir / "one.clip", std::vector<MotionClip>{pair.subject});
  CHECK_THROWS_AS(read_pair(dir / "one.clip"), ValidationError);
  CHECK_THROWS_AS(read_clips(dir / "missing.clip"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("keypoint track files") {
  const auto dir = fresh_dir("tracks");
  std::mt19937_64 rng(3);
  Keypoint3DTrack a, b;
  a.person_id = 0;
  b.person_id = 1;
  for (std::int64_t t : {0, 1, 2, 7, 8}) a.frames[t] = test::random_frame(rng, topo()).joints;
  for (std::int64_t t : {3, 4}) b.frames[t] = test::random_frame(rng, topo()).joints;
  const std::vector<Keypoint3DTrack> tracks{a, b};
  write_tracks_3d(dir / "k.kp3d", tracks);
  const auto back = read_tracks_3d(dir / "k.kp3d");
  REQUIRE(back.size() == 2);
  CHECK(back.at(0).frames.size() == 5);
  CHECK(back.at(1).frames.count(4) == 1);
  CHECK(back.at(0).frames.at(7)[3][1] == round_for_storage(a.frames.at(7)[3][1]));
  CHECK_THROWS_AS(read_tracks_2d(dir / "k.kp3d"), ValidationError);

  KeypointRun<2> run;
  run.person_id = 0;
  run.first_index = 5;
  Keypoints<2> k{};
  k.fill({10.0, 20.0});
  run.frames = {k, k};
  const std::vector<KeypointRun<2>> runs{run};
  // Mapped runs are written in the H36M order for the external lifter.
  write_runs_2d(dir / "k.kp2d", runs);
  const auto text = slurp(dir / "k.kp2d");
  CHECK(text.rfind("# RMXKP2D v1 joints=H36M17", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  CHECK(text.find("\n6,0,10,20,") != std::string::npos);
  CHECK_THROWS_AS(read_tracks_2d(dir / "k.kp2d"), ValidationError);
  fs::remove_all(dir);
}

TEST_CASE("bundled reference bones equal the compiled-in defaults") {
  const auto loaded = load_ref_bones(default_ref_bones_path());
  const auto builtin = SkeletonTopology::humanoid_default();
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    CHECK(loaded.reference_length(j) == builtin.reference_length(j));
    CHECK(loaded.parent(j) == builtin.parent(j));
  }
  CHECK_THROWS_AS(parse_ref_bones("{"), ValidationError);
  CHECK_THROWS_AS(parse_ref_bones(R"({"joint_set":"COCO17","bone_lengths":{}})"),
                  TopologyMismatch);
  CHECK_THROWS_AS(parse_ref_bones(R"({"bone_lengths":{"neck":0.2}})"), TopologyMismatch);
  std::string text = slurp(default_ref_bones_path());
  text.replace(text.find("0.24"), 4, "-0.1");
  CHECK_THROWS_AS(parse_ref_bones(text), ValidationError);
  CHECK_THROWS_AS(load_ref_bones("/nonexistent/ref.json"), IoError);
}

TEST_CASE("frame message encoding") {
  std::mt19937_64 rng(4);
  const PoseFrame f = test::random_frame(rng, topo(), 0, 1234);
  const auto msg = FrameMessage::subject(f);
  const auto bytes = encode_frame(msg);
  REQUIRE(bytes.size() == kFrameMessageBytes);
  CHECK(kFrameMessageBytes == 214);
  CHECK(std::memcmp(bytes.data(), "RMX1", 4) == 0);
  CHECK(bytes[4] == 0x01);
  CHECK(bytes[5] == 0);
  CHECK(bytes[6] == (1234 & 0xff));
  CHECK(bytes[7] == (1234 >> 8));
  float x0;
  std::memcpy(&x0, bytes.data() + 10, 4);  // host is little-endian here
  CHECK(x0 == static_cast<float>(f.joints[0][0]));
  const auto back = std::get<FrameMessage>(decode_frame(bytes));
  CHECK(back == msg);
  CHECK(encode_frame(back) == bytes);
  const PoseFrame pose = back.to_pose();
  CHECK(pose.frame_index == 1234);
  CHECK(pose.joints[16][2] == static_cast<float>(f.joints[16][2]));

  FrameMessage zero;
  zero.type = MessageType::kGeneratedFrame;
  const auto zb = encode_frame(zero);
  CHECK(zb.size() == 214);
  for (std::size_t i = 10; i < 214; ++i) CHECK(zb[i] == 0);

  const auto eos = encode_frame(FrameMessage::end_of_stream(7));
  CHECK(eos.size() == kHeaderBytes);
  CHECK(std::get<FrameMessage>(decode_frame(eos)).type == MessageType::kEndOfStream);
  const auto err = FrameMessage::error("divergence at frame 31", 31);
  const auto eb = encode_frame(err);
  CHECK(eb.size() == kHeaderBytes + 2 + 22);
  CHECK(std::get<FrameMessage>(decode_frame(eb)) == err);
  const auto longer = encode_frame(FrameMessage::error(std::string(70000, 'x')));
  CHECK(longer.size() == kHeaderBytes + 2 + 65535);
}

TEST_CASE("decode rejections are distinct") {
  const auto bytes = encode_frame(FrameMessage{});
  CHECK(std::get<ProtocolError>(decode_frame({bytes.data(), 213})) ==
        ProtocolError::kLengthMismatch);
  CHECK(std::get<ProtocolError>(decode_frame({bytes.data(), 5})) == ProtocolError::kTooShort);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK(std::get<ProtocolError>(decode_frame(bad)) == ProtocolError::kBadMagic);
  bad = bytes;
  bad[4] = 0x09;
  CHECK(std::get<ProtocolError>(decode_frame(bad)) == ProtocolError::kUnknownType);
  auto extra = bytes;
  extra.push_back(0);
  CHECK(std::get<ProtocolError>(decode_frame(extra)) == ProtocolError::kLengthMismatch);
  CHECK(std::get<std::size_t>(expected_length({bytes.data(), 10})) == 214);
  CHECK(std::get<std::size_t>(expected_length({bytes.data(), 3})) == 0);
  CHECK(to_string(ProtocolError::kBadMagic) != to_string(ProtocolError::kUnknownType));
}

TEST_CASE("fuzzed buffers never crash the decoder") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<std::size_t> len(0, 300);
  const auto valid = encode_frame(FrameMessage{});
  std::size_t decoded = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<std::uint8_t> buf;
    if (i % 2 == 0) {
      buf.resize(len(rng));
      for (auto& b : buf) b = static_cast<std::uint8_t>(byte(rng));
      if (i % 4 == 0 && buf.size() >= 5) std::memcpy(buf.data(), "RMX1", 4);
    } else {
      buf = valid;  // mutate a valid message
      buf[std::uniform_int_distribution<std::size_t>(0, buf.size() - 1)(rng)] ^=
          static_cast<std::uint8_t>(byte(rng));
      if (i % 3 == 0) buf.resize(len(rng));
    }
    const auto r = decode_frame(buf);
    if (std::holds_alternative<FrameMessage>(r)) {
      ++decoded;
      CHECK(encode_frame(std::get<FrameMessage>(r)) == buf);
    }
    (void)expected_length(buf);
  }
  CHECK(decoded > 0);
}

TEST_CASE("stream session cadence") {
  const auto pair = synthetic_pair(topo(), 50, 6);
  auto m = make_model<float>(test::tiny_config(Architecture::kSimple), 1);
  StreamProtocolSession s(*m, topo());
  for (std::size_t t = 0; t < 45; ++t) {
    const auto replies = s.on_message(FrameMessage::subject(pair.subject[t]));
    CHECK(replies.size() == (t < 30 ? 0u : 1u));
    CHECK(s.replies() == (s.received() > 30 ? s.received() - 30 : 0));
    if (!replies.empty()) {
      CHECK(replies[0].type == MessageType::kGeneratedFrame);
      CHECK(replies[0].person_id == 1);
      CHECK(replies[0].frame_index == t);
    }
  }
  CHECK(s.step_latencies_ms().size() == 15);
  const auto end = s.on_message(FrameMessage::end_of_stream());
  REQUIRE(end.size() == 1);
  CHECK(end[0].type == MessageType::kEndOfStream);
  CHECK(s.closed());
}

TEST_CASE("stream session errors") {
  const auto pair = synthetic_pair(topo(), 40, 6);
  auto m = make_model<float>(test::tiny_config(Architecture::kSimple), 1);
  {
    StreamProtocolSession s(*m, topo());
    PoseFrame bad = pair.subject[0];
    const Vec3 p = bad.joints[h36m::kLeftElbow];
    for (int c = 0; c < 3; ++c) {
      bad.joints[h36m::kLeftWrist][c] = p[c] + 3.0 * (bad.joints[h36m::kLeftWrist][c] - p[c]);
    }
    const auto r = s.on_message(FrameMessage::subject(bad));
    REQUIRE(r.size() == 1);
    CHECK(r[0].type == MessageType::kError);
    CHECK(s.closed());
  }
  {
    StreamProtocolSession s(*m, topo());
    const auto r = s.on_message(FrameMessage::generated(pair.counterpart[0]));
    REQUIRE(r.size() == 1);
    CHECK(r[0].type == MessageType::kError);
  }
  {
    StreamProtocolSession s(*m, topo());
    const auto r = s.on_protocol_error(ProtocolError::kBadMagic);
    CHECK(r.type == MessageType::kError);
    CHECK(s.closed());
  }
}

TEST_CASE("tcp server: counting, isolation, validation and divergence") {
  const auto pair = synthetic_pair(topo(), 45, 7);
  std::shared_ptr<MotionModel<float>> model =
      make_model<float>(test::tiny_config(Architecture::kSimple), 2);
  std::ostringstream log;
  StreamServer server(model, topo(), {"127.0.0.1", 0, &log});
  server.start();
  REQUIRE(server.port() != 0);

  auto stream = [&](std::size_t n) {
    StreamClient c("127.0.0.1", server.port());
    for (std::size_t t = 0; t < n; ++t) c.send(FrameMessage::subject(pair.subject[t]));
    c.send(FrameMessage::end_of_stream());
    std::vector<FrameMessage> got;
    while (auto m = c.receive()) got.push_back(*m);
    return got;
  };
  const auto first = stream(40);
  REQUIRE(first.size() == 11);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(first[i].type == MessageType::kGeneratedFrame);
    CHECK(first[i].frame_index == 30 + i);
  }
  CHECK(first[10].type == MessageType::kEndOfStream);
  CHECK(stream(40) == first);

  {
    StreamClient c("127.0.0.1", server.port());
    std::vector<std::uint8_t> junk(214, 0x55);
    c.send_raw(junk);
    const auto r = c.receive();
    REQUIRE(r.has_value());
    CHECK(r->type == MessageType::kError);
    CHECK_FALSE(c.receive().has_value());
  }

  model->parameters().get(kHeadBias)->value[0] = 500.0f;
  const auto diverged = stream(35);
  REQUIRE(diverged.size() == 1);
  CHECK(diverged[0].type == MessageType::kError);
  CHECK(diverged[0].frame_index == 30);
  CHECK(diverged[0].reason.rfind("divergence at frame 30", 0) == 0);
  server.stop();
  CHECK(server.connections_served() == 4);
  CHECK(log.str().find("latency") != std::string::npos);
}

TEST_CASE("frame export") {
  const auto dir = fresh_dir("export");
  const auto pair = synthetic_pair(topo(), 100, 8);
  CHECK(export_frames(pair.subject, pair.counterpart, dir / "a") == 100);
  std::size_t svgs = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) svgs += e.path().extension() == ".svg";
  CHECK(svgs == 100);
  CHECK(fs::exists(dir / "a" / "frame_000000.svg"));
  CHECK(fs::exists(dir / "a" / "frame_000099.svg"));
  CHECK(export_frames(pair.subject, pair.counterpart, dir / "b") == 100);
  CHECK(slurp(dir / "a" / "frames.csv") == slurp(dir / "b" / "frames.csv"));
  CHECK(slurp(dir / "a" / "frame_000042.svg") == slurp(dir / "b" / "frame_000042.svg"));

  const MotionClip empty{std::vector<PoseFrame>{}};
  CHECK(export_frames(empty, empty, dir / "c") == 0);
  const auto csv = slurp(dir / "c" / "frames.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);
  CHECK_THROWS_AS(export_frames(pair.subject, pair.counterpart.slice(0, 50), dir / "d"),
                  ValidationError);
  std::ofstream(dir / "file") << "x";
  CHECK_THROWS_AS(export_frames(empty, empty, dir / "file" / "sub"), IoError);
  fs::remove_all(dir);
}

}  // TEST_SUITE
