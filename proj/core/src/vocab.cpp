#include "charsoft/vocab.hpp"

#include <algorithm>

#include "charsoft/error.hpp"
#include "charsoft/hashing.hpp"
#include "charsoft/rng.hpp"
#include "charsoft/textio.hpp"

namespace charsoft {

namespace {

bool printable(unsigned char c) { return c > 0x20 && c < 0x7f; }

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

/// Length in bytes of the UTF-8 sequence starting at s[i]; 1 for invalid bytes.
std::size_t code_point_width(std::string_view s, std::size_t i) {
  const auto lead = static_cast<unsigned char>(s[i]);
  std::size_t width = 1;
  if ((lead & 0xe0) == 0xc0) width = 2;
  else if ((lead & 0xf0) == 0xe0) width = 3;
  else if ((lead & 0xf8) == 0xf0) width = 4;
  if (width == 1 || i + width > s.size()) return 1;
  for (std::size_t j = 1; j < width; ++j) {
    if ((static_cast<unsigned char>(s[i + j]) & 0xc0) != 0x80) return 1;
  }
  return width;
}

}  // namespace

std::string_view to_string(CasePolicy policy) noexcept {
  return policy == CasePolicy::kFoldLower ? "fold_lower" : "keep";
}

CasePolicy parse_case_policy(std::string_view text) {
  if (text == "fold_lower") return CasePolicy::kFoldLower;
  if (text == "keep") return CasePolicy::kKeep;
  throw SchemaError("unknown case policy '" + std::string(text) + "' (fold_lower|keep)");
}

std::optional<int> CharVocab::index_of(char c) const noexcept {
  if (c == kUnkMarker) return unk();
  const auto idx = lookup_[static_cast<unsigned char>(fold(c))];
  if (idx < 0) return std::nullopt;
  return idx;
}

std::string CharVocab::symbol(int index) const {
  if (index >= 0 && static_cast<std::size_t>(index) < chars_.size()) {
    return std::string(1, chars_[static_cast<std::size_t>(index)]);
  }
  if (index == eos()) return "<eos>";
  if (index == pad()) return "<pad>";
  if (index == unk()) return "<unk>";
  throw PreconditionError("class index " + std::to_string(index) + " outside vocabulary of size " +
                          std::to_string(k()));
}

std::optional<int> CharVocab::parse_symbol(std::string_view name) const {
  if (name == "<eos>") return eos();
  if (name == "<pad>") return pad();
  if (name == "<unk>") return unk();
  if (name.size() != 1) return std::nullopt;
  const auto idx = lookup_[static_cast<unsigned char>(name[0])];
  if (idx < 0) return std::nullopt;
  return idx;
}

char CharVocab::fold(char c) const noexcept {
  return case_policy_ == CasePolicy::kFoldLower ? ascii_lower(c) : c;
}

std::string CharVocab::fold(std::string_view word) const {
  std::string out(word);
  if (case_policy_ == CasePolicy::kFoldLower) {
    std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
  }
  return out;
}

std::vector<int> CharVocab::encode(std::string_view word) const {
  std::vector<int> out;
  out.reserve(word.size());
  for (char c : word) {
    auto idx = index_of(c);
    if (!idx) {
      throw PreconditionError("character '" + std::string(1, c) + "' in word '" +
                              std::string(word) + "' is outside the vocabulary");
    }
    out.push_back(*idx);
  }
  return out;
}

bool CharVocab::contains_all(std::string_view word) const noexcept {
  return std::all_of(word.begin(), word.end(), [this](char c) { return index_of(c).has_value(); });
}

std::uint64_t CharVocab::hash() const {
  return Fnv1a{}.update("charvocab/v1:").update(chars_).update(":eos,pad,unk").digest();
}

std::string CharVocab::hash_hex() const { return to_hex64(hash()); }

CharVocab build_vocab(std::string_view char_set, CasePolicy policy) {
  if (char_set.empty()) throw PreconditionError("character set is empty");
  CharVocab v;
  v.case_policy_ = policy;
  v.lookup_.fill(-1);
  for (char raw : char_set) {
    if (!printable(static_cast<unsigned char>(raw))) {
      throw PreconditionError("character set contains a non-printable or non-ASCII byte (0x" +
                              to_hex64(static_cast<unsigned char>(raw)).substr(14) + ")");
    }
    const char c = v.fold(raw);
    auto& slot = v.lookup_[static_cast<unsigned char>(c)];
    if (slot >= 0) {
      throw PreconditionError("duplicate character '" + std::string(1, c) + "' in character set");
    }
    slot = static_cast<std::int16_t>(v.chars_.size());
    v.chars_.push_back(c);
  }
  return v;
}

CharVocab default_vocab() { return build_vocab(kDefaultCharSet, CasePolicy::kFoldLower); }

WordList::WordList(std::initializer_list<std::string_view> words, WordSource source) {
  for (auto w : words) add(std::string(w), source);
}

bool WordList::add(std::string word, WordSource source) {
  if (!index_.insert(word).second) return false;
  entries_.push_back({std::move(word), source});
  return true;
}

bool WordList::contains(std::string_view word) const { return index_.count(std::string(word)) != 0; }

std::vector<std::string> WordList::words() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.word);
  return out;
}

WordList read_wordlist(const std::filesystem::path& path, WordSource source,
                       std::optional<CasePolicy> fold) {
  WordList out;
  for (const auto& line : read_lines(path)) {
    // "# " lines carry provenance metadata written by this toolkit.
    if (line.rfind("# ", 0) == 0) continue;
    std::string word(trim_right(line));
    if (word.empty()) continue;
    if (fold == CasePolicy::kFoldLower) {
      std::transform(word.begin(), word.end(), word.begin(), ascii_lower);
    }
    out.add(std::move(word), source);
  }
  return out;
}

std::string format_wordlist(const WordList& words) {
  std::string out;
  for (const auto& e : words.entries()) {
    out += e.word;
    out += '\n';
  }
  return out;
}

WordList sample_dictionary(const WordList& generic, const WordList& in_domain,
                           const WordList& test_words, std::size_t n_generic,
                           std::uint64_t seed) {
  std::vector<const std::string*> pool;
  pool.reserve(generic.size());
  for (const auto& e : generic.entries()) {
    if (!test_words.contains(e.word)) pool.push_back(&e.word);
  }
  if (n_generic > pool.size()) {
    throw PreconditionError("requested " + std::to_string(n_generic) +
                            " generic words but only " + std::to_string(pool.size()) +
                            " remain after test-word exclusion");
  }

  WordList out;
  for (const auto& e : in_domain.entries()) out.add(e.word, WordSource::kInDomain);

  // Partial Fisher-Yates: the first n_generic slots become the draw.
  Rng rng(derive_seed(seed, "sample_dictionary"));
  for (std::size_t i = 0; i < n_generic; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
    out.add(*pool[i], WordSource::kGeneric);
  }
  return out;
}

FilterResult filter_to_vocab(const WordList& words, const CharVocab& vocab, OovPolicy policy) {
  FilterResult result;
  for (const auto& e : words.entries()) {
    const std::string folded = vocab.fold(e.word);
    std::string mapped;
    std::size_t oov = 0;
    for (std::size_t i = 0; i < folded.size();) {
      const std::size_t width = code_point_width(folded, i);
      if (width == 1 && vocab.index_of(folded[i])) {
        mapped.push_back(folded[i]);
      } else {
        mapped.push_back(kUnkMarker);
        ++oov;
      }
      i += width;
    }
    if (oov == 0) {
      if (result.words.add(folded, e.source)) ++result.report.kept;
    } else if (policy == OovPolicy::kDropWord) {
      ++result.report.dropped_words;
    } else {
      if (result.words.add(std::move(mapped), e.source)) {
        ++result.report.kept;
        ++result.report.mapped_words;
        result.report.mapped_chars += oov;
      }
    }
  }
  return result;
}

}  // namespace charsoft
