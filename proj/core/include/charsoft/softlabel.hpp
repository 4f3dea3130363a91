#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "charsoft/centroid.hpp"
#include "charsoft/embed.hpp"
#include "charsoft/vocab.hpp"

namespace charsoft {

enum class ColumnOrigin { kRetained, kFallback };

/// Target distribution for one output position.
struct SoftColumn {
  Eigen::VectorXd probs;  // k entries
  int label = 0;
  ColumnOrigin origin = ColumnOrigin::kRetained;
};

inline constexpr double kDefaultThreshold = 0.85;

struct SoftLabelParams {
  double threshold = kDefaultThreshold;
  double temperature = 1.0;
  bool normalize = true;
};

struct SoftLabelStats {
  std::size_t char_columns = 0;  // EOS columns excluded
  std::size_t mislabels = 0;     // raw argmax != label
  std::size_t fallbacks = 0;     // char columns replaced by the fallback

  double mislabel_rate() const noexcept;
  double fallback_rate() const noexcept;
};

struct WordLabels {
  std::string word;
  std::vector<SoftColumn> columns;  // one per character, then EOS
};

class SoftLabelSet {
 public:
  SoftLabelSet(CharVocab vocab, SoftLabelParams params);

  const CharVocab& vocab() const noexcept { return vocab_; }
  const SoftLabelParams& params() const noexcept { return params_; }
  const std::vector<WordLabels>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t l_max() const noexcept { return l_max_; }

  SoftLabelStats stats;
  std::map<std::string, std::string> metadata;

  /// nullptr when the word has no labels.
  const WordLabels* find(std::string_view word) const;

  /// Throws PreconditionError on a duplicate word or a column count that
  /// is not |word| + 1.
  void add(WordLabels labels);

 private:
  CharVocab vocab_;
  SoftLabelParams params_;
  std::vector<WordLabels> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t l_max_ = 0;
};

/// Scores contextual vectors against a prototype matrix. With `normalize`,
/// the vector and every prototype are L2-normalized first; zero prototypes
/// (unsupported classes) stay zero and score a logit of 0.
class PrototypeScorer {
 public:
  PrototypeScorer(const CentroidMatrix& w, double temperature, bool normalize);

  /// softmax(W^T x / temperature). Throws PreconditionError on a dimension
  /// mismatch or a zero vector under normalization.
  Eigen::VectorXd distribution(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  Eigen::MatrixXd prototypes_;
  double temperature_;
  bool normalize_;
};

Eigen::VectorXd raw_distribution(const Eigen::Ref<const Eigen::VectorXd>& x,
                                 const CentroidMatrix& w, double temperature, bool normalize);

/// T at the label and (1-T)/(k-1) elsewhere. Requires 0.5 < T < 1.
SoftColumn fallback_distribution(int label, std::size_t k, double threshold);

/// Keeps `column` when its label probability reaches the threshold and
/// substitutes the fallback otherwise. Already-processed columns pass
/// through unchanged.
SoftColumn apply_threshold(SoftColumn column, double threshold);
SoftLabelSet apply_threshold(const SoftLabelSet& set);

/// Raw distributions for every character occurrence, thresholded, with a
/// fallback EOS column appended to each word. Throws PreconditionError
/// listing words that touch a class with no centroid samples.
SoftLabelSet generate_softlabels(const EmbeddingSet& set, const CentroidMatrix& w,
                                 const SoftLabelParams& params);

/// One-hot targets for every character and EOS. Training against this set
/// reduces to ordinary cross-entropy.
SoftLabelSet onehot_softlabels(const WordList& words, const CharVocab& vocab,
                               double threshold = kDefaultThreshold);

std::string format_softlabels(const SoftLabelSet& set);
void save_softlabels(const SoftLabelSet& set, const std::filesystem::path& path);
SoftLabelSet parse_softlabels(std::string_view text, const CharVocab& vocab);
/// Throws PreconditionError when the file was produced for another vocabulary.
SoftLabelSet load_softlabels(const std::filesystem::path& path, const CharVocab& vocab);

/// key=value summary of the thresholding statistics.
std::string format_stats(const SoftLabelSet& set);

}  // namespace charsoft
