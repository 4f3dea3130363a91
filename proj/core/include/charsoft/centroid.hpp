#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "charsoft/embed.hpp"
#include "charsoft/vocab.hpp"

namespace charsoft {

/// Prototype matrix: column i is the mean contextual vector of class i.
struct CentroidMatrix {
  CharVocab vocab;
  Eigen::MatrixXd prototypes;       // dim x k
  std::vector<std::size_t> counts;  // per class
  std::map<std::string, std::string> metadata;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(prototypes.rows()); }
  std::size_t k() const noexcept { return counts.size(); }
  bool supported(int cls) const { return counts.at(static_cast<std::size_t>(cls)) > 0; }
  /// Regular character classes (specials excluded) that received no samples.
  std::vector<int> unsupported_chars() const;
  std::size_t total_count() const noexcept;
};

/// Zero prototypes and counts for the given vocabulary and dimension.
CentroidMatrix empty_centroids(const CharVocab& vocab, std::size_t dim);

/// Class means with Kahan-compensated accumulation. Classes without
/// occurrences keep a zero prototype and count 0. Throws PreconditionError
/// for an empty set or out-of-vocabulary words.
CentroidMatrix estimate_centroids(const EmbeddingSet& set, const CharVocab& vocab);
CentroidMatrix estimate_centroids(std::span<const EmbeddingRecord> records, std::size_t dim,
                                  const CharVocab& vocab);

/// Count-weighted combination; equal to estimating over the union.
CentroidMatrix merge_centroids(const CentroidMatrix& a, const CentroidMatrix& b);

std::string format_centroids(const CentroidMatrix& w);
void save_centroids(const CentroidMatrix& w, const std::filesystem::path& path);
CentroidMatrix parse_centroids(std::string_view text);
CentroidMatrix load_centroids(const std::filesystem::path& path);

}  // namespace charsoft
