#include "charsoft/hashing.hpp"

#include <array>
#include <fstream>
#include <iterator>

#include "charsoft/error.hpp"

namespace charsoft {

namespace {
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
}

Fnv1a& Fnv1a::update(std::string_view bytes) noexcept {
  for (unsigned char c : bytes) {
    state_ ^= c;
    state_ *= kFnvPrime;
  }
  return *this;
}

Fnv1a& Fnv1a::update_u64(std::uint64_t v) noexcept {
  for (int i = 0; i < 8; ++i) {
    state_ ^= (v >> (8 * i)) & 0xffU;
    state_ *= kFnvPrime;
  }
  return *this;
}

std::string Fnv1a::hex() const { return to_hex64(state_); }

std::uint64_t fnv1a(std::string_view bytes) noexcept { return Fnv1a{}.update(bytes).digest(); }

std::string to_hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot read " + path);
  Fnv1a h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
  }
  return h.digest();
}

}  // namespace charsoft
