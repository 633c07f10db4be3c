#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "robohead/error.hpp"

namespace robohead::learn {

struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // k x d, orthonormal rows
  Eigen::VectorXd explained_variance_ratio;

  Eigen::Index dim() const { return mean.size(); }
  Eigen::Index k() const { return components.rows(); }
};

// Above this many columns the covariance matrix is not formed when the data
// has fewer rows than columns; the n x n Gram matrix is decomposed instead.
inline constexpr Eigen::Index kCovarianceMaxDim = 512;

/// Principal axes by descending variance. Each component is signed so that
/// its largest-magnitude entry is positive.
inline PcaModel pca_fit(const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Index k) {
  const Eigen::Index n = x.rows(), d = x.cols();
  if (n < 2) throw InvalidArgument("pca_fit: need at least 2 rows");
  if (k < 1 || k > std::min(n - 1, d))
    throw InvalidArgument("pca_fit: k = " + std::to_string(k) + " outside [1, " + std::to_string(std::min(n - 1, d)) + "]");
  if (!x.allFinite()) throw InvalidArgument("pca_fit: non-finite input");

  PcaModel m;
  m.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd xc = x.rowwise() - m.mean.transpose();
  const double total = xc.squaredNorm() / double(n - 1);

  Eigen::VectorXd values(k);
  m.components.resize(k, d);
  if (d <= kCovarianceMaxDim || n >= d) {
    const Eigen::MatrixXd cov = (xc.transpose() * xc) / double(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    for (Eigen::Index i = 0; i < k; ++i) {
      values[i] = es.eigenvalues()[d - 1 - i];
      m.components.row(i) = es.eigenvectors().col(d - 1 - i).transpose();
    }
  } else {
    const Eigen::MatrixXd gram = (xc * xc.transpose()) / double(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const double top = es.eigenvalues()[n - 1];
    for (Eigen::Index i = 0; i < k; ++i) {
      values[i] = es.eigenvalues()[n - 1 - i];
      if (!(values[i] > 1e-12 * top)) throw InvalidArgument("pca_fit: k exceeds the rank of the data");
      Eigen::VectorXd v = xc.transpose() * es.eigenvectors().col(n - 1 - i);
      m.components.row(i) = (v / v.norm()).transpose();
    }
  }

  for (Eigen::Index i = 0; i < k; ++i) {
    Eigen::Index arg;
    m.components.row(i).cwiseAbs().maxCoeff(&arg);
    if (m.components(i, arg) < 0) m.components.row(i) *= -1.0;
  }
  m.explained_variance_ratio = total > 0 ? Eigen::VectorXd(values.cwiseMax(0.0) / total) : Eigen::VectorXd::Zero(k);
  return m;
}

/// (X - mean) * components^T
inline Eigen::MatrixXd pca_transform(const PcaModel& m, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  if (x.cols() != m.dim())
    throw InvalidArgument("pca_transform: expected " + std::to_string(m.dim()) + " columns, got " + std::to_string(x.cols()));
  return (x.rowwise() - m.mean.transpose()) * m.components.transpose();
}

inline Eigen::MatrixXd pca_inverse(const PcaModel& m, const Eigen::Ref<const Eigen::MatrixXd>& z) {
  if (z.cols() != m.k()) throw InvalidArgument("pca_inverse: column count must equal k");
  return (z * m.components).rowwise() + m.mean.transpose();
}

/// First k components of a fitted model.
inline PcaModel pca_truncate(const PcaModel& m, Eigen::Index k) {
  if (k < 1 || k > m.k()) throw InvalidArgument("pca_truncate: k out of range");
  return {m.mean, m.components.topRows(k), m.explained_variance_ratio.head(k)};
}

/// Number of leading components whose variance is not negligible next to the first.
inline Eigen::Index pca_numerical_rank(const PcaModel& m, double rel_tol = 1e-10) {
  if (m.k() == 0) return 0;
  const double top = m.explained_variance_ratio[0];
  Eigen::Index r = 0;
  while (r < m.k() && m.explained_variance_ratio[r] > rel_tol * top) ++r;
  return r;
}

/// Every second dimension from 3 to 40.
inline std::vector<Eigen::Index> default_pca_candidates() {
  std::vector<Eigen::Index> c;
  for (Eigen::Index k = 3; k < 40; k += 2) c.push_back(k);
  return c;
}

struct PcaCandidate {
  Eigen::Index k = 0;
  double rmse = 0.0;
  double cumulative_evr = 0.0;
};

struct PcaChoice {
  Eigen::Index k = 0;
  std::vector<PcaCandidate> report;
};

/// Scores each candidate dimension with `eval` (mean downstream RMSE) and
/// returns the smallest k whose score is within `rel_tol` of the best.
inline PcaChoice choose_pca_dim(const Eigen::Ref<const Eigen::MatrixXd>& x, std::vector<Eigen::Index> candidates,
                                const std::function<double(Eigen::Index)>& eval, double rel_tol = 0.01) {
  if (candidates.empty()) throw InvalidArgument("choose_pca_dim: no candidates");
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  Eigen::VectorXd cum;
  const Eigen::Index kmax = std::min({candidates.back(), x.rows() - 1, x.cols()});
  if (kmax >= 1) {
    const auto full = pca_fit(x, kmax);
    cum.resize(kmax);
    double acc = 0;
    for (Eigen::Index i = 0; i < kmax; ++i) cum[i] = (acc += full.explained_variance_ratio[i]);
  }

  PcaChoice out;
  for (auto k : candidates) {
    PcaCandidate c;
    c.k = k;
    try {
      c.rmse = eval(k);
    } catch (const std::exception& e) {
      throw Error("PCA candidate k = " + std::to_string(k) + " failed: " + e.what());
    }
    c.cumulative_evr = (k >= 1 && k <= cum.size()) ? cum[k - 1] : std::nan("");
    out.report.push_back(c);
  }
  double best = out.report.front().rmse;
  for (const auto& c : out.report) best = std::min(best, c.rmse);
  for (const auto& c : out.report) {
    if (c.rmse <= best * (1.0 + rel_tol)) {
      out.k = c.k;
      break;
    }
  }
  return out;
}

}  // namespace robohead::learn
