#include "gspot/lzf.hpp"

#include <cstring>

#include "gspot/error.hpp"

namespace gspot::lzf {
namespace {

constexpr unsigned kHashLog = 16;
constexpr std::size_t kHashSize = std::size_t{1} << kHashLog;
constexpr unsigned kMaxLiteral = 1u << 5;
constexpr std::size_t kMaxOffset = std::size_t{1} << 13;
constexpr std::size_t kMaxRef = (std::size_t{1} << 8) + (1u << 3);

// Hash chain identical to liblzf's VERY_FAST configuration; the token stream
// only matches the reference encoder if collisions match too.
inline std::uint32_t first(const std::uint8_t* p) { return (std::uint32_t{p[0]} << 8) | p[1]; }
inline std::uint32_t next(std::uint32_t v, const std::uint8_t* p) { return (v << 8) | p[2]; }
inline std::size_t slot(std::uint32_t h) {
  return ((h >> (3 * 8 - kHashLog)) - h * 5) & (kHashSize - 1);
}

}  // namespace

std::vector<std::uint8_t> compress(std::span<const std::uint8_t> raw) {
  std::vector<std::uint8_t> out;
  const std::size_t n = raw.size();
  if (n == 0) return out;
  out.reserve(n + n / kMaxLiteral + 4);

  // Table holds position + 1; 0 means empty. Position 0 is never a valid
  // reference in liblzf (`ref > in_data`), which the +1 bias reproduces.
  std::vector<std::uint32_t> table(kHashSize, 0);
  const std::uint8_t* in = raw.data();

  std::size_t ip = 0;
  unsigned lit = 0;
  out.push_back(0);  // run header placeholder
  std::size_t run_header = 0;

  auto close_run = [&] {
    if (lit > 0) {
      out[run_header] = static_cast<std::uint8_t>(lit - 1);
    } else {
      out.pop_back();
    }
  };
  auto start_run = [&] {
    lit = 0;
    run_header = out.size();
    out.push_back(0);
  };

  if (n >= 3) {
    std::uint32_t hval = first(in);
    while (ip < n - 2) {
      hval = next(hval, in + ip);
      const std::size_t s = slot(hval);
      const std::uint32_t stored = table[s];
      table[s] = static_cast<std::uint32_t>(ip + 1);

      bool matched = false;
      if (stored > 1) {
        const std::size_t ref = stored - 1;
        const std::size_t off = ip - ref - 1;
        if (ref < ip && off < kMaxOffset && in[ref + 2] == in[ip + 2] && in[ref] == in[ip] &&
            in[ref + 1] == in[ip + 1]) {
          matched = true;
          std::size_t len = 2;
          std::size_t maxlen = n - ip - len;
          if (maxlen > kMaxRef) maxlen = kMaxRef;

          // Mirrors the reference encoder's 16-way unrolled probe, which can
          // run past maxlen by one on short tails.
          bool done = false;
          if (maxlen > 16) {
            for (int k = 0; k < 16; ++k) {
              ++len;
              if (in[ref + len] != in[ip + len]) {
                done = true;
                break;
              }
            }
          }
          if (!done) {
            do {
              ++len;
            } while (len < maxlen && in[ref + len] == in[ip + len]);
          }

          close_run();
          len -= 2;
          ++ip;
          if (len < 7) {
            out.push_back(static_cast<std::uint8_t>((off >> 8) + (len << 5)));
          } else {
            out.push_back(static_cast<std::uint8_t>((off >> 8) + (7u << 5)));
            out.push_back(static_cast<std::uint8_t>(len - 7));
          }
          out.push_back(static_cast<std::uint8_t>(off));
          start_run();

          ip += len + 1;
          if (ip >= n - 2) break;

          ip -= 2;
          hval = first(in + ip);
          hval = next(hval, in + ip);
          table[slot(hval)] = static_cast<std::uint32_t>(ip + 1);
          ++ip;
          hval = next(hval, in + ip);
          table[slot(hval)] = static_cast<std::uint32_t>(ip + 1);
          ++ip;
        }
      }

      if (!matched) {
        ++lit;
        out.push_back(in[ip++]);
        if (lit == kMaxLiteral) {
          out[run_header] = static_cast<std::uint8_t>(lit - 1);
          start_run();
        }
      }
    }
  }

  while (ip < n) {
    ++lit;
    out.push_back(in[ip++]);
    if (lit == kMaxLiteral) {
      out[run_header] = static_cast<std::uint8_t>(lit - 1);
      start_run();
    }
  }
  close_run();
  return out;
}

std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> compressed,
                                     std::size_t expected_size) {
  std::vector<std::uint8_t> out(expected_size);
  std::size_t ip = 0;
  std::size_t op = 0;
  const std::size_t in_end = compressed.size();

  while (ip < in_end) {
    const std::size_t token_at = ip;
    unsigned ctrl = compressed[ip++];
    if (ctrl < kMaxLiteral) {
      const std::size_t len = ctrl + 1;
      if (ip + len > in_end) throw CorruptStreamError("lzf literal run past end of input", token_at);
      if (op + len > expected_size)
        throw CorruptStreamError("lzf literal run past end of output", token_at);
      std::memcpy(out.data() + op, compressed.data() + ip, len);
      ip += len;
      op += len;
    } else {
      std::size_t len = ctrl >> 5;
      if (len == 7) {
        if (ip >= in_end) throw CorruptStreamError("lzf truncated length byte", token_at);
        len += compressed[ip++];
      }
      len += 2;
      if (ip >= in_end) throw CorruptStreamError("lzf truncated offset byte", token_at);
      const std::size_t back = ((std::size_t{ctrl} & 0x1f) << 8) + compressed[ip++] + 1;
      if (back > op) throw CorruptStreamError("lzf back-reference before start", token_at);
      if (op + len > expected_size)
        throw CorruptStreamError("lzf back-reference past end of output", token_at);
      std::size_t ref = op - back;
      for (std::size_t k = 0; k < len; ++k) out[op++] = out[ref++];
    }
  }
  if (op != expected_size) throw CorruptStreamError("lzf block shorter than expected", ip);
  return out;
}

}  // namespace gspot::lzf
