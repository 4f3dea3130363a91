#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "charsoft/textio.hpp"
#include "charsoft/vocab.hpp"

namespace charsoft {

/// Contextual vectors for one word; column j belongs to character j.
struct EmbeddingRecord {
  std::string word;
  Eigen::MatrixXd vectors;  // dim x length
};

enum class Provenance { kPretrainedLm, kSynthetic };

std::string_view to_string(Provenance p) noexcept;

struct EmbeddingSet {
  std::size_t dim = 0;
  std::vector<EmbeddingRecord> records;
  Provenance provenance = Provenance::kSynthetic;
  /// Extra header fields (generator parameters, config stamp). Values must
  /// not contain whitespace.
  std::map<std::string, std::string> metadata;

  std::size_t total_occurrences() const noexcept;
};

/// Number of Unicode code points in a UTF-8 string; invalid bytes count
/// as one each.
std::size_t utf8_length(std::string_view s) noexcept;

/// Checks the EmbeddingSet invariants, throwing SchemaError with the
/// offending record index.
void validate(const EmbeddingSet& set);

std::string format_embeddings(const EmbeddingSet& set, FloatFormat format = FloatFormat::kHex);
void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path,
                     FloatFormat format = FloatFormat::kHex);

EmbeddingSet parse_embeddings(std::string_view text, std::vector<std::string>* warnings = nullptr);

/// Loads and validates an `EMB v1` file. Non-canonical but accepted input
/// (decimal floats, CRLF) is reported through `warnings`.
EmbeddingSet load_embeddings(const std::filesystem::path& path,
                             std::vector<std::string>* warnings = nullptr);

struct SynthParams {
  std::size_t dim = 64;
  std::size_t context_radius = 1;
  double noise_scale = 0.05;
  std::uint64_t seed = 0;
};

/// Geometric decay of neighbour contributions.
inline constexpr double kContextDecay = 0.3;

/// Deterministic stand-in for a pretrained character encoder.
///
/// The vector of character c at offset j of a word is
///   base(c) + sum_{0<|delta|<=radius} decay^|delta| * mix(w[j+delta], delta) + noise,
/// where neighbours falling outside the word are skipped. base and mix are
/// unit vectors drawn from seeded streams; noise is isotropic Gaussian with
/// standard deviation noise_scale drawn from a stream keyed by the word, so a
/// word's vectors do not depend on the rest of the list.
class SyntheticEmbedder {
 public:
  SyntheticEmbedder(CharVocab vocab, SynthParams params);

  const Eigen::VectorXd& base(int cls) const { return bases_.at(static_cast<std::size_t>(cls)); }
  Eigen::VectorXd mix(int cls, int offset) const;

  /// Throws PreconditionError for out-of-vocabulary characters.
  EmbeddingRecord embed_word(std::string_view word) const;
  EmbeddingSet embed(const WordList& words) const;

  const SynthParams& params() const noexcept { return params_; }

 private:
  CharVocab vocab_;
  SynthParams params_;
  std::vector<Eigen::VectorXd> bases_;
};

EmbeddingSet synth_embed(const WordList& words, const CharVocab& vocab, const SynthParams& params);

}  // namespace charsoft
