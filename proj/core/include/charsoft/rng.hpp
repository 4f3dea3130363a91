#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace charsoft {

/// Identifier written into output metadata so samples can be reproduced
/// in other implementations.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64+splitmix64-derive+box-muller";

/// Seeded generator with fully specified output.
///
/// The raw stream is std::mt19937_64, whose sequence is fixed by the C++
/// standard. The standard distributions are implementation-defined, so the
/// uniform, bounded-integer and normal transforms are written out here:
///   uniform01   (x >> 11) * 2^-53
///   below(n)    rejection sampling on the top of the 64-bit range
///   normal      Box-Muller, both outputs used in order (cos first)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform01();

  /// Uniform integer on [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal variate.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent stream seed from a base seed, a tag, and an index.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) noexcept;

}  // namespace charsoft
