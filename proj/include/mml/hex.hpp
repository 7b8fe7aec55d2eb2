#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mml {

std::string hex_encode(std::span<const std::uint8_t> bytes);
std::optional<std::vector<std::uint8_t>> hex_decode(const std::string& text);

// RFC 4648 base32, lowercase, no padding.
std::string base32_encode_lower(std::span<const std::uint8_t> bytes);

}  // namespace mml
