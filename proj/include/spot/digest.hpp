#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace spot {

/// Incremental 64-bit FNV-1a. Used for audit digests and content
/// deduplication, never for anything security related.
class Fnv1a {
 public:
  void update(std::span<const std::uint8_t> bytes) noexcept;
  void update(std::string_view text) noexcept;
  void update_u32(std::uint32_t value) noexcept;
  void update_u64(std::uint64_t value) noexcept;

  std::uint64_t value() const noexcept { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string digest_hex(std::string_view text);

}  // namespace spot
