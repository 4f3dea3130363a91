#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "charsoft/centroid.hpp"
#include "charsoft/embed.hpp"

namespace charsoft {

struct PowerIterationOptions {
  double tolerance = 1e-9;
  int max_iterations = 1000;
};

struct PrincipalComponents {
  Eigen::MatrixXd directions;  // dim x count, unit columns
  Eigen::VectorXd variances;   // descending
  Eigen::VectorXd mean;
};

/// Leading principal components of the columns of `samples` by power
/// iteration with deflation on the sample covariance.
PrincipalComponents principal_components(const Eigen::MatrixXd& samples, int count,
                                         const PowerIterationOptions& options = {});

struct ProjectionRow {
  std::string label;  // character or special name
  std::string word;   // empty for centroid rows
  double x = 0.0;
  double y = 0.0;
  bool is_centroid = false;
};

struct Projection {
  std::vector<ProjectionRow> rows;
  PrincipalComponents components;
};

/// 2-D view of every character vector (plus every centroid when given) on
/// the top two principal components of the character vectors. Throws
/// PreconditionError when there are fewer than two distinct vectors.
Projection project_embeddings(const EmbeddingSet& set, const CentroidMatrix* centroids = nullptr);

/// Columns: char,word,x,y,is_centroid.
std::string format_projection_csv(const Projection& projection);

}  // namespace charsoft
