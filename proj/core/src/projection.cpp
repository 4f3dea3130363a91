#include "charsoft/projection.hpp"

#include <algorithm>
#include <cmath>

#include "charsoft/error.hpp"
#include "charsoft/textio.hpp"

namespace charsoft {

namespace {

void orient(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index idx = 0;
  v.cwiseAbs().maxCoeff(&idx);
  if (v[idx] < 0) v = -v;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

PrincipalComponents principal_components(const Eigen::MatrixXd& samples, int count,
                                         const PowerIterationOptions& options) {
  const Eigen::Index dim = samples.rows();
  const Eigen::Index n = samples.cols();
  if (n < 1 || dim < 1) throw PreconditionError("no samples to project");
  PrincipalComponents pc;
  pc.mean = samples.rowwise().mean();
  const Eigen::MatrixXd centered = samples.colwise() - pc.mean;
  Eigen::MatrixXd cov = centered * centered.transpose() / static_cast<double>(std::max<Eigen::Index>(n - 1, 1));

  pc.directions = Eigen::MatrixXd::Zero(dim, count);
  pc.variances = Eigen::VectorXd::Zero(count);
  for (int c = 0; c < count; ++c) {
    Eigen::VectorXd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = 1.0 + 0.1 * static_cast<double>((i * 7 + c * 3) % 11);
    auto deflate = [&](Eigen::VectorXd& x) {
      for (int p = 0; p < c; ++p) x -= pc.directions.col(p).dot(x) * pc.directions.col(p);
    };
    deflate(v);
    if (v.norm() == 0.0) v = Eigen::VectorXd::Unit(dim, c % dim);
    v.normalize();
    for (int it = 0; it < options.max_iterations; ++it) {
      Eigen::VectorXd w = cov * v;
      deflate(w);
      const double norm = w.norm();
      if (norm == 0.0) break;
      w /= norm;
      const double change = (w - v).norm();
      v = std::move(w);
      if (change < options.tolerance) break;
    }
    orient(v);
    pc.directions.col(c) = v;
    pc.variances[c] = std::max(0.0, v.dot(cov * v));
    cov -= pc.variances[c] * v * v.transpose();
  }
  return pc;
}

Projection project_embeddings(const EmbeddingSet& set, const CentroidMatrix* centroids) {
  const std::size_t total = set.total_occurrences();
  Eigen::MatrixXd all(static_cast<Eigen::Index>(set.dim), static_cast<Eigen::Index>(total));
  Eigen::Index col = 0;
  for (const auto& r : set.records) {
    all.middleCols(col, r.vectors.cols()) = r.vectors;
    col += r.vectors.cols();
  }
  bool distinct = false;
  for (Eigen::Index i = 1; i < all.cols() && !distinct; ++i) distinct = all.col(i) != all.col(0);
  if (!distinct) {
    throw PreconditionError("projection needs at least two distinct vectors (covariance is rank-deficient)");
  }
  if (centroids && centroids->dim() != set.dim) {
    throw PreconditionError("centroid dimension does not match the embeddings");
  }

  Projection proj;
  proj.components = principal_components(all, 2);
  const auto& dirs = proj.components.directions;
  const auto& mean = proj.components.mean;
  col = 0;
  for (const auto& r : set.records) {
    for (Eigen::Index j = 0; j < r.vectors.cols(); ++j, ++col) {
      const Eigen::VectorXd v = all.col(col) - mean;
      ProjectionRow row;
      row.label = std::string(1, r.word[static_cast<std::size_t>(j)]);
      if (utf8_length(r.word) != r.word.size()) row.label = "?";
      row.word = r.word;
      row.x = dirs.col(0).dot(v);
      row.y = dirs.col(1).dot(v);
      proj.rows.push_back(std::move(row));
    }
  }
  if (centroids) {
    for (std::size_t c = 0; c < centroids->k(); ++c) {
      const Eigen::VectorXd v = centroids->prototypes.col(static_cast<Eigen::Index>(c)) - mean;
      ProjectionRow row;
      row.label = centroids->vocab.symbol(static_cast<int>(c));
      row.x = dirs.col(0).dot(v);
      row.y = dirs.col(1).dot(v);
      row.is_centroid = true;
      proj.rows.push_back(std::move(row));
    }
  }
  return proj;
}

std::string format_projection_csv(const Projection& projection) {
  std::string out = "char,word,x,y,is_centroid\n";
  for (const auto& r : projection.rows) {
    out += csv_field(r.label) + ',' + csv_field(r.word) + ',' + format_scalar(r.x) + ',' +
           format_scalar(r.y) + ',' + (r.is_centroid ? "1" : "0") + '\n';
  }
  return out;
}

}  // namespace charsoft
