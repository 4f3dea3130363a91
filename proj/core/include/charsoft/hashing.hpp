#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace charsoft {

/// 64-bit FNV-1a. Stable across platforms; used for vocab and config stamps.
class Fnv1a {
 public:
  Fnv1a& update(std::string_view bytes) noexcept;
  Fnv1a& update_u64(std::uint64_t v) noexcept;
  std::uint64_t digest() const noexcept { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t fnv1a(std::string_view bytes) noexcept;

/// Fixed-width lowercase hex, 16 digits.
std::string to_hex64(std::uint64_t v);

/// Hash of a file's full contents. Throws PreconditionError if unreadable.
std::uint64_t hash_file(const std::string& path);

}  // namespace charsoft
