#include "charsoft/loss.hpp"

#include <algorithm>
#include <cmath>

#include "charsoft/error.hpp"
#include "charsoft/numeric.hpp"

namespace charsoft {

namespace {

void check_shapes(Eigen::Index rows, Eigen::Index cols, const Eigen::MatrixXd& logits,
                  const std::vector<bool>& mask) {
  if (logits.rows() != rows || logits.cols() != cols ||
      mask.size() != static_cast<std::size_t>(cols)) {
    throw PreconditionError("targets, logits and mask must describe the same positions");
  }
  if (!logits.allFinite()) throw NumericError("non-finite logits");
}

}  // namespace

LossReport kl_loss(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& logits,
                   const std::vector<bool>& mask) {
  check_shapes(targets.rows(), targets.cols(), logits, mask);
  LossReport report;
  report.per_position.assign(static_cast<std::size_t>(logits.cols()), 0.0);
  for (Eigen::Index p = 0; p < logits.cols(); ++p) {
    if (!mask[static_cast<std::size_t>(p)]) continue;
    const Eigen::VectorXd probs = softmax(logits.col(p));
    double cross = 0.0;
    double entropy = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      const double d = targets(i, p);
      if (d == 0.0) continue;
      cross += d * std::log(std::max(probs[i], kMinProbability));
      entropy += d * std::log(d);
    }
    report.per_position[static_cast<std::size_t>(p)] = -cross;
    report.total += -cross;
    report.target_entropy += -entropy;
    ++report.positions_counted;
  }
  return report;
}

Eigen::MatrixXd kl_loss_grad(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& logits,
                             const std::vector<bool>& mask) {
  check_shapes(targets.rows(), targets.cols(), logits, mask);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
  for (Eigen::Index p = 0; p < logits.cols(); ++p) {
    if (!mask[static_cast<std::size_t>(p)]) continue;
    grad.col(p) = softmax(logits.col(p)) - targets.col(p);
  }
  return grad;
}

LossReport cross_entropy(std::span<const int> labels, const Eigen::MatrixXd& logits,
                         const std::vector<bool>& mask) {
  check_shapes(logits.rows(), static_cast<Eigen::Index>(labels.size()), logits, mask);
  LossReport report;
  report.per_position.assign(labels.size(), 0.0);
  for (std::size_t p = 0; p < labels.size(); ++p) {
    if (!mask[p]) continue;
    const Eigen::VectorXd probs = softmax(logits.col(static_cast<Eigen::Index>(p)));
    double cross = 0.0;
    cross += 1.0 * std::log(std::max(probs[labels[p]], kMinProbability));
    report.per_position[p] = -cross;
    report.total += -cross;
    ++report.positions_counted;
  }
  return report;
}

Eigen::MatrixXd cross_entropy_grad(std::span<const int> labels, const Eigen::MatrixXd& logits,
                                   const std::vector<bool>& mask) {
  check_shapes(logits.rows(), static_cast<Eigen::Index>(labels.size()), logits, mask);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
  for (std::size_t p = 0; p < labels.size(); ++p) {
    if (!mask[p]) continue;
    const auto col = static_cast<Eigen::Index>(p);
    grad.col(col) = softmax(logits.col(col));
    grad(labels[p], col) -= 1.0;
  }
  return grad;
}

Eigen::MatrixXd targets_matrix(std::span<const SoftColumn> columns) {
  if (columns.empty()) return {};
  Eigen::MatrixXd m(columns.front().probs.size(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = columns[j].probs;
  return m;
}

}  // namespace charsoft
