#include "charsoft/centroid.hpp"

#include <cmath>

#include "charsoft/error.hpp"
#include "charsoft/textio.hpp"

namespace charsoft {

std::vector<int> CentroidMatrix::unsupported_chars() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < vocab.num_chars(); ++i) {
    if (counts[i] == 0) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::size_t CentroidMatrix::total_count() const noexcept {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

CentroidMatrix empty_centroids(const CharVocab& vocab, std::size_t dim) {
  CentroidMatrix w;
  w.vocab = vocab;
  w.prototypes = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                       static_cast<Eigen::Index>(vocab.k()));
  w.counts.assign(vocab.k(), 0);
  return w;
}

CentroidMatrix estimate_centroids(std::span<const EmbeddingRecord> records, std::size_t dim,
                                  const CharVocab& vocab) {
  if (records.empty()) throw PreconditionError("cannot estimate centroids from an empty set");
  CentroidMatrix w = empty_centroids(vocab, dim);
  Eigen::MatrixXd& sum = w.prototypes;
  Eigen::MatrixXd carry = Eigen::MatrixXd::Zero(sum.rows(), sum.cols());
  for (const auto& rec : records) {
    const std::vector<int> cls = vocab.encode(rec.word);
    if (static_cast<std::size_t>(rec.vectors.rows()) != dim ||
        static_cast<std::size_t>(rec.vectors.cols()) != cls.size()) {
      throw PreconditionError("record '" + rec.word + "' does not match dimension " +
                              std::to_string(dim) + " and word length");
    }
    for (std::size_t j = 0; j < cls.size(); ++j) {
      const Eigen::Index c = cls[j];
      ++w.counts[static_cast<std::size_t>(c)];
      for (Eigen::Index d = 0; d < sum.rows(); ++d) {
        // Kahan step
        const double y = rec.vectors(d, static_cast<Eigen::Index>(j)) - carry(d, c);
        const double t = sum(d, c) + y;
        carry(d, c) = (t - sum(d, c)) - y;
        sum(d, c) = t;
      }
    }
  }
  for (Eigen::Index c = 0; c < sum.cols(); ++c) {
    const auto n = w.counts[static_cast<std::size_t>(c)];
    if (n > 0) sum.col(c) /= static_cast<double>(n);
  }
  return w;
}

CentroidMatrix estimate_centroids(const EmbeddingSet& set, const CharVocab& vocab) {
  return estimate_centroids(std::span<const EmbeddingRecord>(set.records), set.dim, vocab);
}

CentroidMatrix merge_centroids(const CentroidMatrix& a, const CentroidMatrix& b) {
  if (!(a.vocab == b.vocab)) throw PreconditionError("cannot merge centroids over different vocabularies");
  if (a.dim() != b.dim()) {
    throw PreconditionError("cannot merge centroids of dimension " + std::to_string(a.dim()) +
                            " and " + std::to_string(b.dim()));
  }
  CentroidMatrix out = a;
  out.metadata.clear();
  for (std::size_t c = 0; c < a.k(); ++c) {
    const auto na = a.counts[c];
    const auto nb = b.counts[c];
    const auto col = static_cast<Eigen::Index>(c);
    out.counts[c] = na + nb;
    if (nb == 0) continue;
    if (na == 0) {
      out.prototypes.col(col) = b.prototypes.col(col);
      continue;
    }
    out.prototypes.col(col) = (static_cast<double>(na) * a.prototypes.col(col) +
                               static_cast<double>(nb) * b.prototypes.col(col)) /
                              static_cast<double>(na + nb);
  }
  return out;
}

std::string format_centroids(const CentroidMatrix& w) {
  std::string out = "CEN v1 dim=" + std::to_string(w.dim()) + " k=" + std::to_string(w.k()) +
                    " case=" + std::string(to_string(w.vocab.case_policy()));
  for (const auto& [key, value] : w.metadata) {
    if (key == "dim" || key == "k" || key == "case") continue;
    out += ' ' + key + '=' + value;
  }
  out += '\n';
  for (std::size_t c = 0; c < w.k(); ++c) {
    out += w.vocab.symbol(static_cast<int>(c));
    out += '\t';
    out += std::to_string(w.counts[c]);
    out += '\t';
    for (Eigen::Index d = 0; d < w.prototypes.rows(); ++d) {
      if (d > 0) out += ',';
      out += format_double(w.prototypes(d, static_cast<Eigen::Index>(c)));
    }
    out += '\n';
  }
  return out;
}

void save_centroids(const CentroidMatrix& w, const std::filesystem::path& path) {
  write_file_atomic(path, format_centroids(w));
}

CentroidMatrix parse_centroids(std::string_view text) {
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw SchemaError("centroid file is empty");
  const Header header = parse_header(lines[0], "CEN", "v1");
  std::size_t dim = 0;
  std::size_t k = 0;
  try {
    dim = std::stoul(header.require("dim"));
    k = std::stoul(header.require("k"));
  } catch (const std::logic_error&) {
    throw SchemaError("CEN header: dim and k must be non-negative integers");
  }
  if (k < 4) throw SchemaError("CEN header: k must be at least 4");
  if (lines.size() != k + 1) {
    throw SchemaError("centroid file has " + std::to_string(lines.size() - 1) +
                      " class lines, header says k=" + std::to_string(k));
  }
  const CasePolicy policy =
      header.find("case") ? parse_case_policy(*header.find("case")) : CasePolicy::kFoldLower;

  std::vector<std::vector<std::string_view>> rows;
  std::string chars;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto fields = split(lines[i], '\t');
    if (fields.size() != 3) {
      throw SchemaError("centroid line " + std::to_string(i + 1) + ": expected 3 tab-separated fields");
    }
    if (i <= k - 3) {
      if (fields[0].size() != 1) {
        throw SchemaError("centroid line " + std::to_string(i + 1) + ": expected a single character");
      }
      chars += fields[0];
    }
    rows.push_back(std::move(fields));
  }
  CentroidMatrix w;
  try {
    w = empty_centroids(build_vocab(chars, policy), dim);
  } catch (const PreconditionError& e) {
    throw SchemaError(std::string("centroid file vocabulary: ") + e.what());
  }
  for (const auto& [key, value] : header.fields) {
    if (key != "dim" && key != "k" && key != "case") w.metadata.emplace(key, value);
  }
  for (std::size_t c = 0; c < k; ++c) {
    const auto& f = rows[c];
    const std::string line_ref = "centroid line " + std::to_string(c + 2);
    if (w.vocab.symbol(static_cast<int>(c)) != f[0]) {
      throw SchemaError(line_ref + ": expected class '" + w.vocab.symbol(static_cast<int>(c)) +
                        "', found '" + std::string(f[0]) + "'");
    }
    try {
      w.counts[c] = std::stoull(std::string(f[1]));
    } catch (const std::logic_error&) {
      throw SchemaError(line_ref + ": malformed count");
    }
    const auto comps = split(f[2], ',');
    if (comps.size() != dim) throw SchemaError(line_ref + ": dimension mismatch");
    for (std::size_t d = 0; d < dim; ++d) {
      double v = 0.0;
      if (!parse_double(comps[d], v) || !std::isfinite(v)) {
        throw SchemaError(line_ref + ": bad component " + std::to_string(d));
      }
      w.prototypes(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return w;
}

CentroidMatrix load_centroids(const std::filesystem::path& path) {
  return parse_centroids(read_file(path));
}

}  // namespace charsoft
