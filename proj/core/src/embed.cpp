#include "charsoft/embed.hpp"

#include <cmath>
#include <unordered_set>

#include "charsoft/error.hpp"
#include "charsoft/hashing.hpp"
#include "charsoft/rng.hpp"

namespace charsoft {

namespace {

std::string record_context(std::size_t index, const std::string& word) {
  return "record " + std::to_string(index) + " ('" + word + "')";
}

Eigen::VectorXd random_unit(std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
  do {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  } while (v.norm() == 0.0);
  return v / v.norm();
}

bool reserved_key(const std::string& key) {
  return key == "dim" || key == "count" || key == "provenance";
}

}  // namespace

std::string_view to_string(Provenance p) noexcept {
  return p == Provenance::kPretrainedLm ? "pretrained_lm" : "synthetic";
}

std::size_t EmbeddingSet::total_occurrences() const noexcept {
  std::size_t n = 0;
  for (const auto& r : records) n += static_cast<std::size_t>(r.vectors.cols());
  return n;
}

std::size_t utf8_length(std::string_view s) noexcept {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size();) {
    const auto lead = static_cast<unsigned char>(s[i]);
    std::size_t width = 1;
    if ((lead & 0xe0) == 0xc0) width = 2;
    else if ((lead & 0xf0) == 0xe0) width = 3;
    else if ((lead & 0xf8) == 0xf0) width = 4;
    bool ok = width > 1 && i + width <= s.size();
    for (std::size_t j = 1; ok && j < width; ++j) {
      ok = (static_cast<unsigned char>(s[i + j]) & 0xc0) == 0x80;
    }
    i += ok ? width : 1;
    ++n;
  }
  return n;
}

void validate(const EmbeddingSet& set) {
  if (set.dim == 0) throw SchemaError("embedding dimension must be at least 1");
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < set.records.size(); ++i) {
    const auto& r = set.records[i];
    if (r.word.empty()) throw SchemaError(record_context(i, r.word) + ": empty word");
    if (!seen.insert(r.word).second) {
      throw SchemaError(record_context(i, r.word) + ": duplicate word");
    }
    if (static_cast<std::size_t>(r.vectors.rows()) != set.dim) {
      throw SchemaError(record_context(i, r.word) + ": dimension " +
                        std::to_string(r.vectors.rows()) + " != " + std::to_string(set.dim));
    }
    const std::size_t len = utf8_length(r.word);
    if (static_cast<std::size_t>(r.vectors.cols()) != len) {
      throw SchemaError(record_context(i, r.word) + ": " + std::to_string(r.vectors.cols()) +
                        " vectors for a word of length " + std::to_string(len));
    }
    for (Eigen::Index c = 0; c < r.vectors.cols(); ++c) {
      for (Eigen::Index d = 0; d < r.vectors.rows(); ++d) {
        if (!std::isfinite(r.vectors(d, c))) {
          throw SchemaError(record_context(i, r.word) + ": non-finite value at position " +
                            std::to_string(c) + " component " + std::to_string(d));
        }
      }
    }
  }
}

std::string format_embeddings(const EmbeddingSet& set, FloatFormat format) {
  validate(set);
  std::string out = "EMB v1 dim=" + std::to_string(set.dim) +
                    " count=" + std::to_string(set.records.size()) +
                    " provenance=" + std::string(to_string(set.provenance));
  for (const auto& [key, value] : set.metadata) {
    if (reserved_key(key)) continue;
    out += ' ' + key + '=' + value;
  }
  out += '\n';
  for (const auto& r : set.records) {
    out += r.word;
    out += '\t';
    for (Eigen::Index c = 0; c < r.vectors.cols(); ++c) {
      if (c > 0) out += '|';
      for (Eigen::Index d = 0; d < r.vectors.rows(); ++d) {
        if (d > 0) out += ',';
        out += format_double(r.vectors(d, c), format);
      }
    }
    out += '\n';
  }
  return out;
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path,
                     FloatFormat format) {
  write_file_atomic(path, format_embeddings(set, format));
}

EmbeddingSet parse_embeddings(std::string_view text, std::vector<std::string>* warnings) {
  bool saw_crlf = false;
  bool saw_decimal = false;
  auto next_line = [&](std::size_t& pos, std::string_view& line) {
    if (pos >= text.size()) return false;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
      saw_crlf = true;
    }
    pos = end + 1;
    return true;
  };

  std::size_t pos = 0;
  std::string_view line;
  if (!next_line(pos, line)) throw SchemaError("embedding file is empty");
  const Header header = parse_header(line, "EMB", "v1");

  EmbeddingSet set;
  std::size_t count = 0;
  try {
    set.dim = std::stoul(header.require("dim"));
    count = std::stoul(header.require("count"));
  } catch (const std::logic_error&) {
    throw SchemaError("EMB header: dim and count must be non-negative integers");
  }
  const auto& prov = header.require("provenance");
  if (prov == "pretrained_lm") {
    set.provenance = Provenance::kPretrainedLm;
  } else if (prov == "synthetic") {
    set.provenance = Provenance::kSynthetic;
  } else {
    throw SchemaError("EMB header: unknown provenance '" + prov + "'");
  }
  for (const auto& [key, value] : header.fields) {
    if (!reserved_key(key)) set.metadata.emplace(key, value);
  }
  if (set.dim == 0) throw SchemaError("EMB header: dim must be at least 1");

  std::size_t line_no = 1;
  while (next_line(pos, line)) {
    ++line_no;
    const std::size_t index = set.records.size();
    if (line.empty()) {
      if (pos >= text.size()) break;
      throw SchemaError("line " + std::to_string(line_no) + ": blank line inside records");
    }
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw SchemaError("line " + std::to_string(line_no) + " (record " + std::to_string(index) +
                        "): missing tab between word and vectors");
    }
    EmbeddingRecord rec;
    rec.word = std::string(line.substr(0, tab));
    const auto vecs = split(line.substr(tab + 1), '|');
    const std::size_t len = utf8_length(rec.word);
    if (vecs.size() != len) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + record_context(index, rec.word) +
                        " has " + std::to_string(vecs.size()) + " vectors for a word of length " +
                        std::to_string(len));
    }
    rec.vectors.resize(static_cast<Eigen::Index>(set.dim), static_cast<Eigen::Index>(len));
    for (std::size_t c = 0; c < vecs.size(); ++c) {
      const auto comps = split(vecs[c], ',');
      if (comps.size() != set.dim) {
        throw SchemaError("line " + std::to_string(line_no) + ": " +
                          record_context(index, rec.word) + " vector " + std::to_string(c) +
                          " has dimension " + std::to_string(comps.size()) + ", header says " +
                          std::to_string(set.dim));
      }
      for (std::size_t d = 0; d < comps.size(); ++d) {
        double v = 0.0;
        if (!parse_double(comps[d], v)) {
          throw SchemaError("line " + std::to_string(line_no) + ": " +
                            record_context(index, rec.word) + " vector " + std::to_string(c) +
                            " component " + std::to_string(d) + ": malformed number '" +
                            std::string(comps[d]) + "'");
        }
        if (!std::isfinite(v)) {
          throw SchemaError("line " + std::to_string(line_no) + ": " +
                            record_context(index, rec.word) + ": non-finite value at position " +
                            std::to_string(c) + " component " + std::to_string(d));
        }
        if (comps[d].find("0x") == std::string_view::npos) saw_decimal = true;
        rec.vectors(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(c)) = v;
      }
    }
    set.records.push_back(std::move(rec));
  }
  if (set.records.size() != count) {
    throw SchemaError("truncated or overlong embedding file: header count=" + std::to_string(count) +
                      ", found " + std::to_string(set.records.size()) + " records (line " +
                      std::to_string(line_no) + ")");
  }
  validate(set);
  if (warnings) {
    if (saw_decimal) warnings->push_back("decimal floats present; canonical files use hex");
    if (saw_crlf) warnings->push_back("CRLF line endings; canonical files use LF");
  }
  return set;
}

EmbeddingSet load_embeddings(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  return parse_embeddings(read_file(path), warnings);
}

SyntheticEmbedder::SyntheticEmbedder(CharVocab vocab, SynthParams params)
    : vocab_(std::move(vocab)), params_(params) {
  if (params_.dim < 2) throw PreconditionError("synthetic embedding dimension must be >= 2");
  if (!(params_.noise_scale >= 0.0) || !std::isfinite(params_.noise_scale)) {
    throw PreconditionError("noise scale must be finite and >= 0");
  }
  bases_.reserve(vocab_.k());
  for (std::size_t c = 0; c < vocab_.k(); ++c) {
    bases_.push_back(random_unit(params_.dim, derive_seed(params_.seed, "synth/base", c)));
  }
}

Eigen::VectorXd SyntheticEmbedder::mix(int cls, int offset) const {
  const auto key = static_cast<std::uint64_t>(cls) * 4096 + static_cast<std::uint64_t>(offset + 2048);
  return random_unit(params_.dim, derive_seed(params_.seed, "synth/mix", key));
}

EmbeddingRecord SyntheticEmbedder::embed_word(std::string_view word) const {
  const std::vector<int> cls = vocab_.encode(word);
  const auto n = static_cast<Eigen::Index>(cls.size());
  const auto radius = static_cast<Eigen::Index>(params_.context_radius);
  EmbeddingRecord rec{std::string(word), Eigen::MatrixXd(static_cast<Eigen::Index>(params_.dim), n)};
  Rng noise(derive_seed(params_.seed, "synth/noise", fnv1a(word)));
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd v = base(cls[static_cast<std::size_t>(j)]);
    for (Eigen::Index delta = -radius; delta <= radius; ++delta) {
      if (delta == 0 || j + delta < 0 || j + delta >= n) continue;
      const double weight = std::pow(kContextDecay, static_cast<double>(std::abs(delta)));
      v += weight * mix(cls[static_cast<std::size_t>(j + delta)], static_cast<int>(delta));
    }
    if (params_.noise_scale > 0.0) {
      for (Eigen::Index d = 0; d < v.size(); ++d) v[d] += params_.noise_scale * noise.normal();
    }
    rec.vectors.col(j) = v;
  }
  return rec;
}

EmbeddingSet SyntheticEmbedder::embed(const WordList& words) const {
  EmbeddingSet set;
  set.dim = params_.dim;
  set.provenance = Provenance::kSynthetic;
  set.metadata = {
      {"gen", "additive-context-v1"},
      {"radius", std::to_string(params_.context_radius)},
      {"noise", format_scalar(params_.noise_scale)},
      {"decay", format_scalar(kContextDecay)},
      {"seed", std::to_string(params_.seed)},
      {"rng", std::string(kRngAlgorithm)},
  };
  set.records.reserve(words.size());
  for (const auto& e : words.entries()) set.records.push_back(embed_word(e.word));
  return set;
}

EmbeddingSet synth_embed(const WordList& words, const CharVocab& vocab, const SynthParams& params) {
  return SyntheticEmbedder(vocab, params).embed(words);
}

}  // namespace charsoft
