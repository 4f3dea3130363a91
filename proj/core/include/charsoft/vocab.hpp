#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace charsoft {

enum class CasePolicy { kFoldLower, kKeep };

std::string_view to_string(CasePolicy policy) noexcept;
CasePolicy parse_case_policy(std::string_view text);

/// Default inventory: 26 lowercase letters followed by 10 digits.
inline constexpr std::string_view kDefaultCharSet = "abcdefghijklmnopqrstuvwxyz0123456789";

/// Byte used inside words to stand for a character outside the vocabulary.
/// It is a control character, so it can never be a vocabulary member.
inline constexpr char kUnkMarker = '\x1a';

/// Ordered character inventory. Regular characters occupy [0, n); the EOS,
/// PAD and UNK specials follow at n, n+1, n+2.
class CharVocab {
 public:
  CharVocab() = default;

  std::size_t k() const noexcept { return chars_.size() + 3; }
  std::size_t num_chars() const noexcept { return chars_.size(); }
  int eos() const noexcept { return static_cast<int>(chars_.size()); }
  int pad() const noexcept { return static_cast<int>(chars_.size()) + 1; }
  int unk() const noexcept { return static_cast<int>(chars_.size()) + 2; }

  const std::string& chars() const noexcept { return chars_; }
  CasePolicy case_policy() const noexcept { return case_policy_; }

  /// Class index of a (case-folded) character, UNK for kUnkMarker.
  std::optional<int> index_of(char c) const noexcept;

  /// Printable name of a class: the character itself or `<eos>`/`<pad>`/`<unk>`.
  std::string symbol(int index) const;

  /// Inverse of symbol(). Returns nullopt for unknown names.
  std::optional<int> parse_symbol(std::string_view name) const;

  char fold(char c) const noexcept;
  std::string fold(std::string_view word) const;

  /// Class indices of a word's characters. Throws PreconditionError naming
  /// the first out-of-vocabulary character.
  std::vector<int> encode(std::string_view word) const;

  bool contains_all(std::string_view word) const noexcept;

  /// Stable digest of the index layout.
  std::uint64_t hash() const;
  std::string hash_hex() const;

  friend bool operator==(const CharVocab& a, const CharVocab& b) noexcept {
    return a.chars_ == b.chars_ && a.case_policy_ == b.case_policy_;
  }

 private:
  friend CharVocab build_vocab(std::string_view, CasePolicy);

  std::string chars_;
  CasePolicy case_policy_ = CasePolicy::kFoldLower;
  std::array<std::int16_t, 256> lookup_{};
};

/// Throws PreconditionError on an empty set, non-printable characters, or a
/// duplicate after case folding (the duplicate is named in the message).
CharVocab build_vocab(std::string_view char_set, CasePolicy policy = CasePolicy::kFoldLower);

CharVocab default_vocab();

enum class WordSource { kInDomain, kGeneric };

/// Ordered, duplicate-free list of words with a source tag per word.
class WordList {
 public:
  struct Entry {
    std::string word;
    WordSource source;
  };

  WordList() = default;
  WordList(std::initializer_list<std::string_view> words,
           WordSource source = WordSource::kInDomain);

  /// Appends unless already present. Returns true when appended.
  bool add(std::string word, WordSource source = WordSource::kInDomain);
  bool contains(std::string_view word) const;

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  const std::string& operator[](std::size_t i) const { return entries_[i].word; }
  std::vector<std::string> words() const;

 private:
  std::vector<Entry> entries_;
  std::unordered_set<std::string> index_;
};

/// One word per line, UTF-8; blank lines ignored, trailing whitespace
/// stripped, duplicates collapsed to the first occurrence.
WordList read_wordlist(const std::filesystem::path& path,
                       WordSource source = WordSource::kInDomain,
                       std::optional<CasePolicy> fold = std::nullopt);

std::string format_wordlist(const WordList& words);

/// All in-domain words, then n_generic words drawn uniformly without
/// replacement from generic minus test_words. A word present in both
/// in_domain and test_words is kept.
WordList sample_dictionary(const WordList& generic, const WordList& in_domain,
                           const WordList& test_words, std::size_t n_generic,
                           std::uint64_t seed);

enum class OovPolicy { kDropWord, kMapUnk };

struct FilterReport {
  std::size_t kept = 0;
  std::size_t dropped_words = 0;
  std::size_t mapped_words = 0;
  std::size_t mapped_chars = 0;
};

struct FilterResult {
  WordList words;
  FilterReport report;
};

/// Case-folds per the vocabulary policy, then drops words with
/// out-of-vocabulary characters or replaces each such character (one UTF-8
/// code point) with kUnkMarker.
FilterResult filter_to_vocab(const WordList& words, const CharVocab& vocab, OovPolicy policy);

}  // namespace charsoft
