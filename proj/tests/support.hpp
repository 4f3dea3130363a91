#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "charsoft/embed.hpp"
#include "charsoft/rng.hpp"
#include "charsoft/vocab.hpp"

namespace charsoft::testing {

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng rng(fnv_seed(tag));
    path_ = std::filesystem::temp_directory_path() /
            ("charsoft-" + tag + "-" + std::to_string(rng.next_u64() % 1000000007ULL));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static std::uint64_t fnv_seed(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
    return h;
  }
  std::filesystem::path path_;
};

// Hand-rolled generators; every property test draws from these with a fixed seed.

inline std::string random_word(Rng& rng, std::string_view alphabet, std::size_t min_len, std::size_t max_len) {
  const std::size_t len = min_len + rng.below(max_len - min_len + 1);
  std::string w;
  for (std::size_t i = 0; i < len; ++i) w.push_back(alphabet[rng.below(alphabet.size())]);
  return w;
}

inline WordList random_wordlist(Rng& rng, std::string_view alphabet, std::size_t count, std::size_t min_len,
                                std::size_t max_len) {
  WordList out;
  while (out.size() < count) out.add(random_word(rng, alphabet, min_len, max_len));
  return out;
}

inline Eigen::VectorXd random_vector(Rng& rng, std::size_t n, double scale = 1.0) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = scale * rng.normal();
  return v;
}

inline Eigen::MatrixXd random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = scale * rng.normal();
  }
  return m;
}

/// Probability vector with a random amount of mass on a few entries and
/// exact zeros elsewhere.
inline Eigen::VectorXd random_distribution(Rng& rng, std::size_t k, bool with_zeros) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    d[i] = (with_zeros && rng.uniform01() < 0.5) ? 0.0 : rng.uniform01() + 1e-3;
  }
  if (d.sum() == 0.0) d[static_cast<Eigen::Index>(rng.below(k))] = 1.0;
  return d / d.sum();
}

/// Embedding set over `words` with i.i.d. Gaussian vectors.
inline EmbeddingSet random_embeddings(Rng& rng, const WordList& words, std::size_t dim, double scale = 1.0) {
  EmbeddingSet set;
  set.dim = dim;
  for (const auto& e : words.entries()) {
    set.records.push_back({e.word, random_matrix(rng, dim, e.word.size(), scale)});
  }
  return set;
}

/// Relative error between an analytic and a central-difference derivative.
/// Central differences at h = 1e-5 carry roundoff near eps * |loss| / h,
/// about 1e-9 for losses of a few tens, so magnitudes under 1e-5 are
/// compared on that absolute scale instead.
inline constexpr double kFdFloor = 1e-5;
inline double fd_relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kFdFloor});
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline bool bit_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a.data()[i]) != std::bit_cast<std::uint64_t>(b.data()[i])) return false;
  }
  return true;
}

}  // namespace charsoft::testing
