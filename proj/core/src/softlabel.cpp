#include "charsoft/softlabel.hpp"

#include <algorithm>
#include <cmath>

#include "charsoft/error.hpp"
#include "charsoft/numeric.hpp"
#include "charsoft/textio.hpp"

namespace charsoft {

namespace {

void check_threshold(double threshold) {
  if (!(threshold > 0.5 && threshold < 1.0)) {
    throw PreconditionError("threshold T must lie in (0.5, 1), got " + format_scalar(threshold));
  }
}

}  // namespace

double SoftLabelStats::mislabel_rate() const noexcept {
  return char_columns == 0 ? 0.0 : static_cast<double>(mislabels) / static_cast<double>(char_columns);
}

double SoftLabelStats::fallback_rate() const noexcept {
  return char_columns == 0 ? 0.0 : static_cast<double>(fallbacks) / static_cast<double>(char_columns);
}

SoftLabelSet::SoftLabelSet(CharVocab vocab, SoftLabelParams params)
    : vocab_(std::move(vocab)), params_(params) {
  check_threshold(params_.threshold);
  if (!(params_.temperature > 0.0) || !std::isfinite(params_.temperature)) {
    throw PreconditionError("temperature must be positive and finite");
  }
}

const WordLabels* SoftLabelSet::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

void SoftLabelSet::add(WordLabels labels) {
  const std::size_t len = labels.word.size();
  if (labels.columns.size() != len + 1) {
    throw PreconditionError("word '" + labels.word + "' needs " + std::to_string(len + 1) +
                            " columns, got " + std::to_string(labels.columns.size()));
  }
  for (const auto& col : labels.columns) {
    if (static_cast<std::size_t>(col.probs.size()) != vocab_.k()) {
      throw PreconditionError("column width does not match vocabulary size for '" + labels.word + "'");
    }
  }
  if (!index_.emplace(labels.word, entries_.size()).second) {
    throw PreconditionError("duplicate soft-label entry for '" + labels.word + "'");
  }
  l_max_ = std::max(l_max_, len);
  entries_.push_back(std::move(labels));
}

PrototypeScorer::PrototypeScorer(const CentroidMatrix& w, double temperature, bool normalize)
    : prototypes_(w.prototypes), temperature_(temperature), normalize_(normalize) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw PreconditionError("temperature must be positive and finite");
  }
  if (normalize_) {
    for (Eigen::Index c = 0; c < prototypes_.cols(); ++c) {
      const double n = prototypes_.col(c).norm();
      if (n > 0.0) prototypes_.col(c) /= n;
    }
  }
}

Eigen::VectorXd PrototypeScorer::distribution(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != prototypes_.rows()) {
    throw PreconditionError("vector dimension " + std::to_string(x.size()) +
                            " does not match prototype dimension " + std::to_string(prototypes_.rows()));
  }
  Eigen::VectorXd logits;
  if (normalize_) {
    const double n = x.norm();
    if (n == 0.0) throw PreconditionError("cannot normalize a zero vector");
    logits = prototypes_.transpose() * (x / n);
  } else {
    logits = prototypes_.transpose() * x;
  }
  logits /= temperature_;
  return softmax(logits);
}

Eigen::VectorXd raw_distribution(const Eigen::Ref<const Eigen::VectorXd>& x, const CentroidMatrix& w,
                                 double temperature, bool normalize) {
  return PrototypeScorer(w, temperature, normalize).distribution(x);
}

SoftColumn fallback_distribution(int label, std::size_t k, double threshold) {
  check_threshold(threshold);
  if (k < 2) throw PreconditionError("fallback distribution needs at least two classes");
  if (label < 0 || static_cast<std::size_t>(label) >= k) {
    throw PreconditionError("label " + std::to_string(label) + " outside [0, " + std::to_string(k) + ")");
  }
  SoftColumn col;
  col.probs = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(k),
                                        (1.0 - threshold) / static_cast<double>(k - 1));
  col.probs[label] = threshold;
  col.label = label;
  col.origin = ColumnOrigin::kFallback;
  return col;
}

SoftColumn apply_threshold(SoftColumn column, double threshold) {
  if (column.probs[column.label] >= threshold) return column;
  return fallback_distribution(column.label, static_cast<std::size_t>(column.probs.size()), threshold);
}

SoftLabelSet apply_threshold(const SoftLabelSet& set) {
  SoftLabelSet out(set.vocab(), set.params());
  out.stats = set.stats;
  out.metadata = set.metadata;
  std::size_t fallbacks = 0;
  for (const auto& e : set.entries()) {
    WordLabels w{e.word, {}};
    w.columns.reserve(e.columns.size());
    for (std::size_t j = 0; j < e.columns.size(); ++j) {
      w.columns.push_back(apply_threshold(e.columns[j], set.params().threshold));
      if (j + 1 < e.columns.size() && w.columns.back().origin == ColumnOrigin::kFallback) ++fallbacks;
    }
    out.add(std::move(w));
  }
  out.stats.fallbacks = fallbacks;
  return out;
}

SoftLabelSet generate_softlabels(const EmbeddingSet& set, const CentroidMatrix& w,
                                 const SoftLabelParams& params) {
  const CharVocab& vocab = w.vocab;
  if (set.dim != w.dim()) {
    throw PreconditionError("embedding dimension " + std::to_string(set.dim) +
                            " does not match centroid dimension " + std::to_string(w.dim()));
  }
  SoftLabelSet out(vocab, params);
  out.metadata["centroid_samples"] = std::to_string(w.total_count());

  std::string offenders;
  std::size_t offender_count = 0;
  std::vector<std::vector<int>> encoded;
  encoded.reserve(set.records.size());
  for (const auto& rec : set.records) {
    encoded.push_back(vocab.encode(rec.word));
    for (int c : encoded.back()) {
      if (!w.supported(c)) {
        if (offender_count++ < 20) offenders += (offenders.empty() ? "" : ", ") + rec.word;
        break;
      }
    }
  }
  if (offender_count > 0) {
    throw PreconditionError(std::to_string(offender_count) +
                            " word(s) use a class with no centroid samples: " + offenders +
                            (offender_count > 20 ? ", ..." : ""));
  }

  const PrototypeScorer scorer(w, params.temperature, params.normalize);
  for (std::size_t r = 0; r < set.records.size(); ++r) {
    const auto& rec = set.records[r];
    const auto& labels = encoded[r];
    WordLabels wl{rec.word, {}};
    wl.columns.reserve(labels.size() + 1);
    for (std::size_t j = 0; j < labels.size(); ++j) {
      SoftColumn raw;
      raw.probs = scorer.distribution(rec.vectors.col(static_cast<Eigen::Index>(j)));
      raw.label = labels[j];
      raw.origin = ColumnOrigin::kRetained;
      ++out.stats.char_columns;
      if (argmax(raw.probs) != raw.label) ++out.stats.mislabels;
      SoftColumn kept = apply_threshold(std::move(raw), params.threshold);
      if (kept.origin == ColumnOrigin::kFallback) ++out.stats.fallbacks;
      wl.columns.push_back(std::move(kept));
    }
    wl.columns.push_back(fallback_distribution(vocab.eos(), vocab.k(), params.threshold));
    out.add(std::move(wl));
  }
  return out;
}

SoftLabelSet onehot_softlabels(const WordList& words, const CharVocab& vocab, double threshold) {
  SoftLabelSet out(vocab, SoftLabelParams{threshold, 1.0, false});
  out.metadata["gen"] = "onehot";
  for (const auto& e : words.entries()) {
    std::vector<int> labels = vocab.encode(e.word);
    labels.push_back(vocab.eos());
    WordLabels wl{e.word, {}};
    for (int c : labels) {
      SoftColumn col;
      col.probs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab.k()));
      col.probs[c] = 1.0;
      col.label = c;
      wl.columns.push_back(std::move(col));
    }
    out.stats.char_columns += labels.size() - 1;
    out.add(std::move(wl));
  }
  return out;
}

std::string format_softlabels(const SoftLabelSet& set) {
  const auto& p = set.params();
  std::string out = "SL v1 dim-free k=" + std::to_string(set.vocab().k()) +
                    " T=" + format_scalar(p.threshold) + " temp=" + format_scalar(p.temperature) +
                    " norm=" + (p.normalize ? "1" : "0") + " vocab=" + set.vocab().hash_hex() +
                    " chars=" + std::to_string(set.stats.char_columns) +
                    " mislabels=" + std::to_string(set.stats.mislabels);
  for (const auto& [key, value] : set.metadata) out += ' ' + key + '=' + value;
  out += '\n';
  for (const auto& e : set.entries()) {
    out += e.word;
    out += '\t';
    for (std::size_t j = 0; j < e.columns.size(); ++j) {
      if (j > 0) out += ';';
      const auto& probs = e.columns[j].probs;
      for (Eigen::Index i = 0; i < probs.size(); ++i) {
        if (i > 0) out += ',';
        out += format_double(probs[i]);
      }
      out += e.columns[j].origin == ColumnOrigin::kRetained ? "|R" : "|F";
    }
    out += '\n';
  }
  return out;
}

void save_softlabels(const SoftLabelSet& set, const std::filesystem::path& path) {
  write_file_atomic(path, format_softlabels(set));
}

SoftLabelSet parse_softlabels(std::string_view text, const CharVocab& vocab) {
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw SchemaError("soft-label file is empty");
  const Header header = parse_header(lines[0], "SL", "v1");
  if (header.require("vocab") != vocab.hash_hex()) {
    throw PreconditionError("soft-label file was generated for vocabulary " + header.require("vocab") +
                            ", expected " + vocab.hash_hex());
  }
  SoftLabelParams params;
  double norm = 0.0;
  if (!parse_double(header.require("T"), params.threshold) ||
      !parse_double(header.require("temp"), params.temperature) ||
      !parse_double(header.require("norm"), norm)) {
    throw SchemaError("SL header: malformed T, temp or norm");
  }
  params.normalize = norm != 0.0;
  if (header.require("k") != std::to_string(vocab.k())) throw SchemaError("SL header: k does not match vocabulary");

  SoftLabelSet set(vocab, params);
  try {
    set.stats.char_columns = std::stoull(header.require("chars"));
    set.stats.mislabels = std::stoull(header.require("mislabels"));
  } catch (const std::logic_error&) {
    throw SchemaError("SL header: malformed statistics");
  }
  static constexpr std::string_view kReserved[] = {"k", "T", "temp", "norm", "vocab", "chars", "mislabels"};
  for (const auto& [key, value] : header.fields) {
    if (std::find(std::begin(kReserved), std::end(kReserved), key) == std::end(kReserved)) {
      set.metadata.emplace(key, value);
    }
  }

  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::string where = "soft-label line " + std::to_string(li + 1);
    const auto tab = lines[li].find('\t');
    if (tab == std::string_view::npos) throw SchemaError(where + ": missing tab");
    WordLabels wl{std::string(lines[li].substr(0, tab)), {}};
    std::vector<int> labels;
    try {
      labels = vocab.encode(wl.word);
    } catch (const PreconditionError& e) {
      throw SchemaError(where + ": " + e.what());
    }
    labels.push_back(vocab.eos());
    const auto cols = split(lines[li].substr(tab + 1), ';');
    if (cols.size() != labels.size()) {
      throw SchemaError(where + ": expected " + std::to_string(labels.size()) + " columns");
    }
    for (std::size_t j = 0; j < cols.size(); ++j) {
      std::string_view body = cols[j];
      if (body.size() < 2 || body[body.size() - 2] != '|' ||
          (body.back() != 'R' && body.back() != 'F')) {
        throw SchemaError(where + ": column " + std::to_string(j) + " lacks an |R or |F tag");
      }
      SoftColumn col;
      col.origin = body.back() == 'R' ? ColumnOrigin::kRetained : ColumnOrigin::kFallback;
      col.label = labels[j];
      body.remove_suffix(2);
      const auto comps = split(body, ',');
      if (comps.size() != vocab.k()) throw SchemaError(where + ": column " + std::to_string(j) + " width");
      col.probs.resize(static_cast<Eigen::Index>(vocab.k()));
      for (std::size_t i = 0; i < comps.size(); ++i) {
        double v = 0.0;
        if (!parse_double(comps[i], v) || !std::isfinite(v)) {
          throw SchemaError(where + ": bad probability in column " + std::to_string(j));
        }
        col.probs[static_cast<Eigen::Index>(i)] = v;
      }
      if (col.origin == ColumnOrigin::kFallback && j + 1 < cols.size()) ++set.stats.fallbacks;
      wl.columns.push_back(std::move(col));
    }
    try {
      set.add(std::move(wl));
    } catch (const PreconditionError& e) {
      throw SchemaError(where + ": " + e.what());
    }
  }
  return set;
}

SoftLabelSet load_softlabels(const std::filesystem::path& path, const CharVocab& vocab) {
  return parse_softlabels(read_file(path), vocab);
}

std::string format_stats(const SoftLabelSet& set) {
  const auto& s = set.stats;
  std::string out;
  out += "words=" + std::to_string(set.size()) + '\n';
  out += "char_columns=" + std::to_string(s.char_columns) + '\n';
  out += "mislabels=" + std::to_string(s.mislabels) + '\n';
  out += "mislabel_rate=" + format_scalar(s.mislabel_rate()) + '\n';
  out += "fallbacks=" + std::to_string(s.fallbacks) + '\n';
  out += "fallback_rate=" + format_scalar(s.fallback_rate()) + '\n';
  out += "l_max=" + std::to_string(set.l_max()) + '\n';
  out += "T=" + format_scalar(set.params().threshold) + '\n';
  out += "temperature=" + format_scalar(set.params().temperature) + '\n';
  out += "normalize=" + std::string(set.params().normalize ? "1" : "0") + '\n';
  for (const auto& [key, value] : set.metadata) out += key + '=' + value + '\n';
  return out;
}

}  // namespace charsoft
