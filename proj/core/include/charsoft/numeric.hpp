#pragma once

#include <Eigen/Core>

namespace charsoft {

/// Softmax with max subtraction.
Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits);

/// Index of the largest entry; the first one on ties.
int argmax(const Eigen::Ref<const Eigen::VectorXd>& v);

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m);

}  // namespace charsoft
