#pragma once

#include <Eigen/Dense>

#include "robohead/error.hpp"

namespace robohead::learn {

/// Per-column root-mean-square error.
inline Eigen::VectorXd rmse(const Eigen::Ref<const Eigen::MatrixXd>& pred, const Eigen::Ref<const Eigen::MatrixXd>& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw InvalidArgument("rmse: prediction and truth shapes differ");
  if (pred.rows() == 0) throw InvalidArgument("rmse: no rows");
  return ((pred - truth).array().square().colwise().sum() / double(pred.rows())).sqrt().matrix().transpose();
}

inline double mean_rmse(const Eigen::Ref<const Eigen::MatrixXd>& pred, const Eigen::Ref<const Eigen::MatrixXd>& truth) {
  return rmse(pred, truth).mean();
}

}  // namespace robohead::learn
