#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gspot::lzf {

// Compresses with the liblzf block token format (literal runs of up to 32
// bytes, back-references of 3..264 bytes within an 8 KiB window). Output is
// byte-identical to liblzf 3.x built with its default options. Never fails;
// incompressible input grows by at most one byte per 32.
std::vector<std::uint8_t> compress(std::span<const std::uint8_t> raw);

// Decodes a block that must expand to exactly `expected_size` bytes.
// Throws CorruptStreamError with the offset into `compressed` on malformed
// tokens, references before the start of output, or a size mismatch.
std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> compressed,
                                     std::size_t expected_size);

}  // namespace gspot::lzf
