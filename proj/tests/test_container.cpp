#include <catch_amalgamated.hpp>

#include <cstring>
#include <sstream>
#include <string>

#include "gspot/container.hpp"
#include "gspot/error.hpp"
#include "gspot/log.hpp"
#include "random_session.hpp"

using namespace gspot;

namespace {

std::string to_bytes(const CaptureSession& s) {
  std::ostringstream out(std::ios::binary);
  write_session(s, out);
  return out.str();
}

CaptureSession from_bytes(const std::string& bytes, ReaderOptions opt = {}) {
  std::istringstream in(bytes, std::ios::binary);
  return read_session(in, opt);
}

std::uint32_t le32(const std::string& b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[at + i]);
  return v;
}

void put_le32(std::string& b, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[at + i] = static_cast<char>((v >> (8 * i)) & 0xff);
}

CaptureSession small_session() {
  CaptureSession s;
  s.header.sensor_id = "kinect-A";
  s.header.start_epoch_ms = 1234567;
  s.header.stream_flags = stream_flags::kDepth | stream_flags::kSkeleton;
  DepthFrame d;
  d.timestamp_ms = 10;
  d.width = 3;
  d.height = 2;
  d.pixels = {pack_depth_pixel(1000, 0), pack_depth_pixel(1000, 1), pack_depth_pixel(8191, 7),
              pack_depth_pixel(0, 0), pack_depth_pixel(1, 2), pack_depth_pixel(4000, 3)};
  s.frames.emplace_back(d);
  SkeletonFrameRecord r;
  r.timestamp_ms = 12;
  Skeleton sk;
  sk.player_id = 2;
  sk[JointId::HandRight] = {0.25f, -0.5f, 2.0f, JointState::Tracked};
  r.skeletons.push_back(sk);
  s.frames.emplace_back(r);
  d.timestamp_ms = 43;
  s.frames.emplace_back(d);
  return s;
}

}  // namespace

TEST_CASE("depth pixel packing is a bijection on 16 bits") {
  for (std::uint32_t v = 0; v <= 0xFFFF; ++v) {
    const auto px = unpack_depth_pixel(static_cast<std::uint16_t>(v));
    REQUIRE(px.depth_mm <= kMaxDepthMm);
    REQUIRE(px.player_id <= kMaxPlayerId);
    REQUIRE(pack_depth_pixel(px.depth_mm, px.player_id) == v);
  }
  CHECK(pack_depth_pixel(1000, 1) == ((1000 << 3) | 1));
  CHECK_THROWS_AS(pack_depth_pixel(8192, 0), RangeError);
  CHECK_THROWS_AS(pack_depth_pixel(-1, 0), RangeError);
  CHECK_THROWS_AS(pack_depth_pixel(10, 8), RangeError);
}

TEST_CASE("byte layout of a small session") {
  const std::string b = to_bytes(small_session());
  CHECK(b.substr(0, 4) == "RIFF");
  CHECK(b.substr(8, 4) == "BGAC");
  CHECK(le32(b, 4) == b.size() - 8);
  CHECK(b.substr(12, 4) == "HDRS");
  // version, epoch ms, flags, length-prefixed sensor id
  CHECK(le32(b, 16) == 4 + 8 + 4 + 4 + 8);
  CHECK(le32(b, 20) == 1);
  CHECK(le32(b, 32) == (stream_flags::kDepth | stream_flags::kSkeleton));
  CHECK(b.find("DPTH") != std::string::npos);
  CHECK(b.find("SKEL") != std::string::npos);
  CHECK(b.size() % 2 == 0);
}

TEST_CASE("read after write is the identity") {
  const auto s = small_session();
  const std::string b = to_bytes(s);
  CHECK(from_bytes(b) == s);
  CHECK(to_bytes(from_bytes(b)) == b);
}

TEST_CASE("fuzzed sessions round trip bit-exactly") {
  gspot::Rng rng(7);
  for (int i = 0; i < 60; ++i) {
    const auto s = testing::random_session(rng);
    const std::string b = to_bytes(s);
    const auto back = from_bytes(b);
    REQUIRE(back == s);
    REQUIRE(to_bytes(back) == b);
  }
}

TEST_CASE("stream filter skips other chunks") {
  const auto s = small_session();
  const auto only = from_bytes(to_bytes(s), ReaderOptions{stream_flags::kSkeleton});
  REQUIRE(only.frames.size() == 1);
  CHECK(stream_of(only.frames[0]) == StreamKind::Skeleton);
  CHECK(only.header == s.header);
}

TEST_CASE("open-ended RIFF size reads to end of file") {
  std::string b = to_bytes(small_session());
  put_le32(b, 4, 0xFFFFFFFFu);
  CHECK(from_bytes(b) == small_session());
}

TEST_CASE("unknown chunks are skipped with a warning") {
  std::string b = to_bytes(small_session());
  const std::size_t after_header = 12 + 8 + le32(b, 16) + (le32(b, 16) % 2);
  std::string junk = "JUNK";
  junk += std::string("\x03\x00\x00\x00", 4);
  junk += "abc";
  junk += '\0';
  b.insert(after_header, junk);
  put_le32(b, 4, static_cast<std::uint32_t>(b.size() - 8));
  std::istringstream in(b, std::ios::binary);
  SessionReader reader(in);
  std::size_t n = 0;
  while (reader.next()) ++n;
  CHECK(n == 3);
  REQUIRE(reader.warnings().size() == 1);
  CHECK(reader.warnings()[0].find("JUNK") != std::string::npos);
}

TEST_CASE("bad magic and version are format errors") {
  std::string b = to_bytes(small_session());
  std::string bad = b;
  bad[8] = 'X';
  CHECK_THROWS_AS(from_bytes(bad), FormatError);
  bad = b;
  put_le32(bad, 20, 2);
  CHECK_THROWS_AS(from_bytes(bad), FormatError);
  CHECK_THROWS_AS(from_bytes("RIF"), FormatError);
}

TEST_CASE("truncation anywhere after the header is a corrupt stream") {
  const std::string b = to_bytes(small_session());
  const std::size_t header_end = 12 + 8 + le32(b, 16);
  for (std::size_t cut = header_end + 1; cut < b.size(); ++cut) {
    INFO("cut at " << cut);
    CHECK_THROWS_AS(from_bytes(b.substr(0, cut)), CorruptStreamError);
  }
}

TEST_CASE("corrupt stream errors carry the chunk offset") {
  std::string b = to_bytes(small_session());
  const std::size_t at = b.find("DPTH");
  put_le32(b, at + 4, 1u << 30);
  try {
    from_bytes(b);
    FAIL("expected CorruptStreamError");
  } catch (const CorruptStreamError& e) {
    CHECK(e.offset() == at);
  }
}

TEST_CASE("byte flips never escape as foreign exceptions") {
  gspot::Rng rng(21);
  const auto level = gspot::log::threshold();
  gspot::log::set_threshold(gspot::log::Level::Error);
  for (int i = 0; i < 300; ++i) {
    std::string b = to_bytes(testing::random_session(rng, 8));
    const int flips = 1 + static_cast<int>(rng.below(4));
    for (int k = 0; k < flips; ++k) b[rng.below(b.size())] ^= static_cast<char>(1 + rng.below(255));
    try {
      from_bytes(b);
    } catch (const gspot::Error&) {
    }
  }
  gspot::log::set_threshold(level);
  SUCCEED();
}

TEST_CASE("writer rejects invalid frames") {
  std::ostringstream out(std::ios::binary);
  SessionWriter w(out, SessionHeader{});
  DepthFrame d;
  d.timestamp_ms = 100;
  d.width = 2;
  d.height = 2;
  d.pixels = {0, 0, 0};
  CHECK_THROWS_AS(w.write(d), InputError);
  d.pixels.push_back(0);
  w.write(d);
  d.timestamp_ms = 99;
  CHECK_THROWS_AS(w.write(d), OrderingError);

  RgbFrame rgb;
  rgb.jpeg = {1, 2, 3, 4};
  CHECK_THROWS_AS(w.write(rgb), InputError);

  SkeletonFrameRecord r;
  r.skeletons.resize(3);
  CHECK_THROWS_AS(w.write(r), InputError);
  r.skeletons.resize(1);
  r.skeletons[0].player_id = 0;
  CHECK_THROWS_AS(w.write(r), RangeError);
}

TEST_CASE("gap statistics") {
  const std::vector<std::uint64_t> ts = {0, 33, 66, 100, 200};
  const auto g = gap_stats(ts);
  CHECK(g.min_ms == 33.0);
  CHECK(g.max_ms == 100.0);
  CHECK(g.median_ms == Catch::Approx(33.5));
  CHECK(g.frames == 5);
  CHECK_THROWS_AS(gap_stats(std::vector<std::uint64_t>{5}), InsufficientDataError);

  const auto per_stream = frame_rate_stats(small_session());
  REQUIRE(per_stream.count(StreamKind::Depth) == 1);
  CHECK(per_stream.at(StreamKind::Depth).median_ms == 33.0);
  CHECK(per_stream.count(StreamKind::Skeleton) == 0);
}

TEST_CASE("skeleton tracks group frames by player id") {
  CaptureSession s;
  for (std::uint64_t t = 0; t < 5; ++t) {
    SkeletonFrameRecord r;
    r.timestamp_ms = t * 33;
    Skeleton a;
    a.player_id = 1;
    r.skeletons.push_back(a);
    if (t % 2 == 0) {
      Skeleton b;
      b.player_id = 4;
      r.skeletons.push_back(b);
    }
    s.frames.emplace_back(r);
  }
  const auto tracks = skeleton_tracks(s.frames);
  REQUIRE(tracks.size() == 2);
  CHECK(tracks.at(1).size() == 5);
  CHECK(tracks.at(4).size() == 3);
  CHECK(tracks.at(4)[1].t_ms == 66.0);
}
