#include <catch_amalgamated.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "gspot/error.hpp"
#include "gspot/lzf.hpp"
#include "gspot/rng.hpp"

using gspot::CorruptStreamError;
namespace lzf = gspot::lzf;

namespace {

using Bytes = std::vector<std::uint8_t>;

Bytes bytes_of(const std::string& s) { return Bytes(s.begin(), s.end()); }

// Plain decoder written from the token format: ctrl < 32 is a literal run of
// ctrl+1 bytes; otherwise len = ctrl>>5 (7 means "add next byte"), offset =
// ((ctrl & 31) << 8 | next) + 1, copy len+2 bytes.
Bytes reference_decode(const Bytes& in) {
  Bytes out;
  std::size_t i = 0;
  while (i < in.size()) {
    const unsigned ctrl = in.at(i++);
    if (ctrl < 32) {
      for (unsigned k = 0; k <= ctrl; ++k) out.push_back(in.at(i++));
      continue;
    }
    std::size_t len = ctrl >> 5;
    if (len == 7) len += in.at(i++);
    const std::size_t off = (((ctrl & 31u) << 8) | in.at(i++)) + 1;
    REQUIRE(off <= out.size());
    for (std::size_t k = 0; k < len + 2; ++k) out.push_back(out[out.size() - off]);
  }
  return out;
}

Bytes random_buffer(gspot::Rng& rng, std::size_t n) {
  Bytes b(n);
  // Mix of noise and repeats so both token kinds show up.
  const int mode = static_cast<int>(rng.below(3));
  for (std::size_t i = 0; i < n; ++i) {
    if (mode == 0) {
      b[i] = static_cast<std::uint8_t>(rng.bits());
    } else if (mode == 1) {
      b[i] = static_cast<std::uint8_t>(rng.below(4));
    } else {
      b[i] = (i >= 100 && rng.chance(0.7)) ? b[i - 1 - rng.below(100)] : static_cast<std::uint8_t>(rng.bits());
    }
  }
  return b;
}

}  // namespace

TEST_CASE("hand-built token streams decode") {
  // literal "abc", then 6 bytes copied from 3 back
  const Bytes a = {0x02, 'a', 'b', 'c', 0x80, 0x02};
  CHECK(lzf::decompress(a, 9) == bytes_of("abcabcabc"));

  // run of one byte via overlapping reference: 'x' then len 7+3 => 12 bytes at offset 1
  const Bytes b = {0x00, 'x', 0xE0, 0x03, 0x00};
  CHECK(lzf::decompress(b, 13) == Bytes(13, 'x'));

  CHECK(lzf::decompress(Bytes{}, 0).empty());
}

TEST_CASE("malformed blocks throw with offsets") {
  SECTION("literal past input end") {
    const Bytes in = {0x05, 'a', 'b'};
    CHECK_THROWS_AS(lzf::decompress(in, 6), CorruptStreamError);
  }
  SECTION("back reference before start") {
    const Bytes in = {0x00, 'a', 0x20, 0x05};
    try {
      lzf::decompress(in, 4);
      FAIL("expected CorruptStreamError");
    } catch (const CorruptStreamError& e) {
      CHECK(e.offset() == 2);
    }
  }
  SECTION("output size mismatch") {
    const Bytes in = {0x02, 'a', 'b', 'c'};
    CHECK_THROWS_AS(lzf::decompress(in, 4), CorruptStreamError);
    CHECK_THROWS_AS(lzf::decompress(in, 2), CorruptStreamError);
  }
  SECTION("truncated reference") {
    const Bytes in = {0x00, 'a', 0xE0};
    CHECK_THROWS_AS(lzf::decompress(in, 20), CorruptStreamError);
  }
}

TEST_CASE("compressor output decodes with the reference decoder") {
  gspot::Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Bytes raw = random_buffer(rng, rng.below(20000));
    const Bytes packed = lzf::compress(raw);
    CHECK(reference_decode(packed) == raw);
    CHECK(packed.size() <= raw.size() + raw.size() / 32 + 1);
  }
}

TEST_CASE("repetitive data compresses") {
  const Bytes zeros(1 << 20, 0);
  const Bytes packed = lzf::compress(zeros);
  // three-byte tokens of at most 264 bytes each
  CHECK(packed.size() < zeros.size() / 80);
  CHECK(lzf::decompress(packed, zeros.size()) == zeros);
}

TEST_CASE("round trip on random buffers") {
  gspot::Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    const std::size_t n = (i % 50 == 0) ? rng.below(1 << 20) : rng.below(4096);
    const Bytes raw = random_buffer(rng, n);
    REQUIRE(lzf::decompress(lzf::compress(raw), raw.size()) == raw);
  }
}
