#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "charsoft/softlabel.hpp"

namespace charsoft {

/// Floor applied before taking log P.
inline constexpr double kMinProbability = 1e-300;

struct LossReport {
  double total = 0.0;               // sum over unmasked positions
  std::vector<double> per_position;  // 0 at masked positions
  std::size_t positions_counted = 0;
  /// Sum of target entropies over unmasked positions. total - target_entropy
  /// is the true KL divergence.
  double target_entropy = 0.0;

  double kl_divergence() const noexcept { return total - target_entropy; }
};

/// Per position p (a column of `targets` and `logits`, both k x n):
///   loss_p = -sum_i D_i log max(softmax(z_p)_i, 1e-300),
/// skipping entries with D_i == 0. `mask[p] == false` excludes p.
LossReport kl_loss(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& logits,
                   const std::vector<bool>& mask);

/// d loss / d logits = softmax(z) - D at unmasked positions, 0 elsewhere.
Eigen::MatrixXd kl_loss_grad(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& logits,
                             const std::vector<bool>& mask);

/// Traditional objective with integer targets.
LossReport cross_entropy(std::span<const int> labels, const Eigen::MatrixXd& logits,
                         const std::vector<bool>& mask);
Eigen::MatrixXd cross_entropy_grad(std::span<const int> labels, const Eigen::MatrixXd& logits,
                                   const std::vector<bool>& mask);

/// Stacks column distributions into a k x n matrix.
Eigen::MatrixXd targets_matrix(std::span<const SoftColumn> columns);

}  // namespace charsoft
