#pragma once

#include <Eigen/Dense>

#include "robohead/error.hpp"

namespace robohead::learn {

struct LinearModel {
  Eigen::MatrixXd weights;    // outputs x inputs
  Eigen::VectorXd intercept;  // outputs
  double ridge_lambda = 0.0;

  Eigen::MatrixXd predict(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
    if (x.cols() != weights.cols()) throw InvalidArgument("linear model: input dimension mismatch");
    return (x * weights.transpose()).rowwise() + intercept.transpose();
  }
};

namespace detail {

inline void check_shapes(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& y) {
  if (x.rows() != y.rows()) throw InvalidArgument("regression: X and Y row counts differ");
  if (x.rows() < 2) throw InvalidArgument("regression: need at least 2 rows");
  if (!x.allFinite() || !y.allFinite()) throw InvalidArgument("regression: non-finite input");
}

}  // namespace detail

/// Multi-output least squares with intercept, via column-pivoted QR of the
/// centered design matrix.
inline LinearModel ols_fit(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& y) {
  detail::check_shapes(x, y);
  const Eigen::RowVectorXd xm = x.colwise().mean(), ym = y.colwise().mean();
  const Eigen::MatrixXd xc = x.rowwise() - xm;
  const Eigen::MatrixXd yc = y.rowwise() - ym;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xc);
  if (qr.rank() < x.cols())
    throw SingularFit("ols_fit: design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                      std::to_string(x.cols()) + "); use ridge_fit");
  LinearModel m;
  m.weights = qr.solve(yc).transpose();
  m.intercept = (ym - xm * m.weights.transpose()).transpose();
  return m;
}

/// Minimizes ||Y - XW^T - b||^2 + lambda ||W||^2 with an unpenalized
/// intercept, solved as an augmented least-squares problem.
inline LinearModel ridge_fit(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& y,
                             double lambda) {
  if (!(lambda >= 0.0)) throw InvalidArgument("ridge_fit: lambda must be >= 0");
  if (lambda == 0.0) {
    auto m = ols_fit(x, y);
    m.ridge_lambda = 0.0;
    return m;
  }
  detail::check_shapes(x, y);
  const Eigen::Index n = x.rows(), d = x.cols();
  const Eigen::RowVectorXd xm = x.colwise().mean(), ym = y.colwise().mean();
  Eigen::MatrixXd a(n + d, d);
  a.topRows(n) = x.rowwise() - xm;
  a.bottomRows(d) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n + d, y.cols());
  b.topRows(n) = y.rowwise() - ym;
  LinearModel m;
  m.weights = a.colPivHouseholderQr().solve(b).transpose();
  m.intercept = (ym - xm * m.weights.transpose()).transpose();
  m.ridge_lambda = lambda;
  return m;
}

}  // namespace robohead::learn
