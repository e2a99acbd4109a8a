#include "spot/digest.hpp"

#include <array>
#include <cstdio>

namespace spot {

namespace {
constexpr std::uint64_t kPrime = 0x100000001b3ULL;
}

void Fnv1a::update(std::span<const std::uint8_t> bytes) noexcept {
  for (std::uint8_t b : bytes) {
    state_ ^= b;
    state_ *= kPrime;
  }
}

void Fnv1a::update(std::string_view text) noexcept {
  for (char c : text) {
    state_ ^= static_cast<std::uint8_t>(c);
    state_ *= kPrime;
  }
}

void Fnv1a::update_u32(std::uint32_t value) noexcept {
  std::array<std::uint8_t, 4> le{};
  for (int i = 0; i < 4; ++i) le[i] = static_cast<std::uint8_t>(value >> (8 * i));
  update(le);
}

void Fnv1a::update_u64(std::uint64_t value) noexcept {
  std::array<std::uint8_t, 8> le{};
  for (int i = 0; i < 8; ++i) le[i] = static_cast<std::uint8_t>(value >> (8 * i));
  update(le);
}

std::string Fnv1a::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
  return buf;
}

std::string digest_hex(std::string_view text) {
  Fnv1a h;
  h.update(text);
  return h.hex();
}

}  // namespace spot
