#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "charsoft/embed.hpp"
#include "charsoft/recognizer.hpp"
#include "charsoft/softlabel.hpp"
#include "charsoft/vocab.hpp"

namespace charsoft {

/// Every tunable of the pipeline. Serialized as flat `section.key = value`
/// lines. `#` at line start or after whitespace begins a comment.
struct RunConfig {
  // vocab.*
  std::string chars{kDefaultCharSet};
  CasePolicy case_policy = CasePolicy::kFoldLower;

  // corpus.* -- empty paths select the built-in demo corpus
  std::filesystem::path train_words;
  std::filesystem::path generic_words;
  std::filesystem::path exclude_words;
  std::size_t n_generic = 1000;
  std::uint64_t corpus_seed = 1;
  std::size_t demo_words = 500;
  std::size_t demo_generic = 5000;

  // embed.*
  SynthParams embed{64, 1, 0.05, 2};

  // softlabel.*
  SoftLabelParams softlabel{kDefaultThreshold, 0.1, true};

  // glyph.*
  std::size_t glyph_dim = 32;
  double glyph_noise = 0.1;
  double glyph_delta = 0.05;
  std::vector<std::pair<char, char>> ambiguity_pairs{{'o', '0'}, {'l', '1'}, {'s', '5'}, {'z', '2'}};
  std::uint64_t glyph_seed = 3;

  // data.*
  std::size_t samples_per_word = 4;
  std::uint64_t data_seed = 4;

  // train.*
  TrainConfig train{};

  /// Throws PreconditionError when a module precondition cannot hold.
  void validate() const;

  CharVocab vocab() const;
  GlyphBankParams glyph_params() const;

  /// Copy with every seed shifted by `offset`, for multi-seed runs.
  RunConfig with_seed_offset(std::uint64_t offset) const;
};

/// Rejects unknown keys and malformed values with SchemaError. Relative
/// paths are resolved against `base_dir`.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical text: every key, fixed order.
std::string format_run_config(const RunConfig& config);

/// Digest of the canonical text, with referenced files replaced by the
/// digest of their contents so relocating a run does not change it.
std::uint64_t config_hash(const RunConfig& config);

}  // namespace charsoft
