#pragma once

#include <cstdint>
#include <vector>

namespace gspot::detail {

// Uniform gray JPEG of the given size; cached per size.
std::vector<std::uint8_t> flat_jpeg(std::uint16_t width, std::uint16_t height, std::uint8_t gray);

}  // namespace gspot::detail
