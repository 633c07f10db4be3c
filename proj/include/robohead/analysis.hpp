#pragma once

// Diagnostics: actuator x feature correlation, feature pruning, RMSE
// rescaling and the four-way representation comparison.

#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "robohead/dataset.hpp"
#include "robohead/learn/metrics.hpp"
#include "robohead/retarget.hpp"

namespace robohead {

/// Pearson r per (actuator row, feature column). Entries are nullopt where
/// either column has zero variance.
struct CorrMatrix {
  std::vector<int> row_ids;
  std::vector<int> col_ids;
  std::vector<std::optional<double>> entries;  // row-major

  const std::optional<double>& at(std::size_t r, std::size_t c) const { return entries[r * col_ids.size() + c]; }
};

inline CorrMatrix pearson_matrix(const Eigen::Ref<const Eigen::MatrixXd>& commands,
                                 const Eigen::Ref<const Eigen::MatrixXd>& features, std::vector<int> row_ids = {},
                                 std::vector<int> col_ids = {}) {
  if (commands.rows() != features.rows()) throw InvalidArgument("pearson_matrix: row counts differ");
  if (commands.rows() < 2) throw InvalidArgument("pearson_matrix: need at least 2 rows");
  if (row_ids.empty()) row_ids.assign(kChannelIds.begin(), kChannelIds.begin() + std::min<Eigen::Index>(commands.cols(), kNumChannels));
  if (col_ids.empty())
    for (Eigen::Index c = 0; c < features.cols(); ++c) col_ids.push_back(int(c));
  if (row_ids.size() != std::size_t(commands.cols()) || col_ids.size() != std::size_t(features.cols()))
    throw InvalidArgument("pearson_matrix: id lists do not match column counts");

  const Eigen::MatrixXd a = commands.rowwise() - commands.colwise().mean();
  const Eigen::MatrixXd b = features.rowwise() - features.colwise().mean();
  const Eigen::VectorXd na = a.colwise().norm().transpose(), nb = b.colwise().norm().transpose();
  const Eigen::MatrixXd cross = a.transpose() * b;

  CorrMatrix m{std::move(row_ids), std::move(col_ids), {}};
  m.entries.reserve(m.row_ids.size() * m.col_ids.size());
  for (Eigen::Index r = 0; r < a.cols(); ++r)
    for (Eigen::Index c = 0; c < b.cols(); ++c) {
      if (na[r] == 0.0 || nb[c] == 0.0)
        m.entries.emplace_back(std::nullopt);
      else
        m.entries.emplace_back(std::clamp(cross(r, c) / (na[r] * nb[c]), -1.0, 1.0));
    }
  return m;
}

/// Columns whose strongest |r| over all rows is below `threshold`. A column
/// with only missing entries counts as |r| = 0.
inline std::vector<int> low_correlation_features(const CorrMatrix& m, double threshold = 0.2) {
  if (!(threshold >= 0.0)) throw InvalidArgument("threshold must be >= 0");
  std::vector<int> out;
  for (std::size_t c = 0; c < m.col_ids.size(); ++c) {
    double best = 0.0;
    for (std::size_t r = 0; r < m.row_ids.size(); ++r)
      if (const auto& v = m.at(r, c)) best = std::max(best, std::abs(*v));
    if (best < threshold) out.push_back(m.col_ids[c]);
  }
  return out;
}

inline double rescale_rmse(double rmse, double from_range, double to_range) {
  if (!(from_range > 0.0) || !(to_range > 0.0)) throw InvalidArgument("rescale_rmse: ranges must be positive");
  return rmse * to_range / from_range;
}

/// Actuator rows x AU columns, as in the hardware correlation plot.
inline CorrMatrix au_correlation(const Dataset& d) {
  return pearson_matrix(d.commands(), d.features(FeatureKind::au), {kChannelIds.begin(), kChannelIds.end()},
                        {kAuIds.begin(), kAuIds.end()});
}

inline std::string corr_csv(const CorrMatrix& m, const std::string& col_prefix = "AU") {
  std::ostringstream s;
  s << "actuator";
  for (int c : m.col_ids) s << "," << (col_prefix == "AU" ? au_name(c) : col_prefix + std::to_string(c));
  s << "\n";
  for (std::size_t r = 0; r < m.row_ids.size(); ++r) {
    s << "a" << m.row_ids[r];
    for (std::size_t c = 0; c < m.col_ids.size(); ++c) {
      s << ",";
      if (const auto& v = m.at(r, c)) s << detail::fmt_real(*v);
    }
    s << "\n";
  }
  return s.str();
}

// ---------------------------------------------------------------------------
// Representation comparison

struct CompareOptions {
  double test_fraction = 0.2;
  double prune_threshold = 0.2;
  int landmark_pca_k = 17;
  std::vector<Eigen::Index> distance_candidates = learn::default_pca_candidates();
  double distance_rel_tol = 0.01;
  learn::HyperGrid grid;
  unsigned jobs = 1;
};

struct ComparisonReport {
  std::vector<std::string> columns{"AUs+LR", "AUs+MLP", "Landm.+LR", "Dist.+LR"};
  Eigen::MatrixXd rmse;       // 9 actuators x 4 columns
  Eigen::VectorXd mean_rmse;  // per column
  std::vector<int> pruned_aus;
  learn::PcaChoice distance_pca;
  std::vector<learn::LeaderboardEntry> mlp_leaderboard;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
};

inline Eigen::MatrixXd clipped_predictions(const PipelineModel& m, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  return predict_real(m, x).cwiseMax(m.clip_min).cwiseMin(m.clip_max);
}

/// Trains the four input/learner combinations on one shared split and reports
/// per-actuator test RMSE on the 0-255 scale.
inline ComparisonReport compare_representations(const Dataset& d, std::uint64_t split_seed,
                                                const CompareOptions& opt = {}) {
  if (d.size() < 10) throw ConfigError("compare_representations: dataset too small");
  const Split s = split(d, opt.test_fraction, split_seed);
  ComparisonReport rep;
  rep.train_rows = s.train.size();
  rep.test_rows = s.test.size();
  rep.rmse.resize(kNumChannels, 4);
  const Eigen::MatrixXd y_test = s.test.commands();

  // AU pruning is decided on the training rows only.
  rep.pruned_aus = low_correlation_features(au_correlation(s.train), opt.prune_threshold);
  std::vector<int> au_mask;
  for (std::size_t a = 0; a < kNumAus; ++a)
    if (std::find(rep.pruned_aus.begin(), rep.pruned_aus.end(), kAuIds[a]) == rep.pruned_aus.end())
      au_mask.push_back(int(a));
  if (au_mask.empty()) throw ConfigError("every AU was pruned; lower the correlation threshold");

  const Eigen::MatrixXd au_test = s.test.features(FeatureKind::au);
  FitOptions au_lr;
  au_lr.feature_mask = au_mask;
  rep.rmse.col(0) = learn::rmse(clipped_predictions(fit_pipeline(s.train, au_lr).model, au_test), y_test);

  FitOptions au_mlp = au_lr;
  au_mlp.regressor = RegressorKind::mlp;
  au_mlp.grid = opt.grid;
  au_mlp.seed = split_seed;
  au_mlp.jobs = opt.jobs;
  auto mlp = fit_pipeline(s.train, au_mlp);
  rep.mlp_leaderboard = std::move(mlp.leaderboard);
  rep.rmse.col(1) = learn::rmse(clipped_predictions(mlp.model, au_test), y_test);

  FitOptions lm;
  lm.kind = FeatureKind::landmarks;
  lm.pca_k = opt.landmark_pca_k;
  rep.rmse.col(2) =
      learn::rmse(clipped_predictions(fit_pipeline(s.train, lm).model, s.test.features(FeatureKind::landmarks)), y_test);

  // Distances: one PCA at the largest candidate, truncated per candidate.
  const Eigen::MatrixXd dist_train = s.train.features(FeatureKind::distances);
  const Eigen::MatrixXd dist_test = s.test.features(FeatureKind::distances);
  const Eigen::MatrixXd y_train = s.train.commands();
  const Eigen::Index kmax = *std::max_element(opt.distance_candidates.begin(), opt.distance_candidates.end());
  const learn::PcaModel full = learn::pca_fit(dist_train, kmax);
  auto truncated = [&](Eigen::Index k) { return learn::pca_truncate(full, k); };
  auto dist_model = [&](Eigen::Index k) {
    PipelineModel m;
    m.kind = FeatureKind::distances;
    m.neutral_reference = s.train.neutral_reference;
    m.robot_stats = fit_minmax(FeatureKind::distances, dist_train);
    m.pca = truncated(k);
    m.regressor = learn::ols_fit(learn::pca_transform(*m.pca, dist_train), y_train);
    return m;
  };
  rep.distance_pca = learn::choose_pca_dim(
      dist_train, opt.distance_candidates,
      [&](Eigen::Index k) { return learn::mean_rmse(clipped_predictions(dist_model(k), dist_test), y_test); },
      opt.distance_rel_tol);
  rep.rmse.col(3) = learn::rmse(clipped_predictions(dist_model(rep.distance_pca.k), dist_test), y_test);

  rep.mean_rmse = rep.rmse.colwise().mean().transpose();
  return rep;
}

inline std::string report_csv(const ComparisonReport& r) {
  std::ostringstream s;
  s << "actuator";
  for (const auto& c : r.columns) s << "," << c;
  s << "\n" << std::fixed << std::setprecision(4);
  for (std::size_t a = 0; a < kNumChannels; ++a) {
    s << kChannelIds[a];
    for (Eigen::Index c = 0; c < r.rmse.cols(); ++c) s << "," << r.rmse(Eigen::Index(a), c);
    s << "\n";
  }
  s << "mean";
  for (Eigen::Index c = 0; c < r.mean_rmse.size(); ++c) s << "," << r.mean_rmse[c];
  s << "\n";
  return s.str();
}

inline std::string report_table(const ComparisonReport& r) {
  std::ostringstream s;
  s << std::setw(6) << "Act.";
  for (const auto& c : r.columns) s << std::setw(12) << c;
  s << "\n" << std::fixed << std::setprecision(2);
  for (std::size_t a = 0; a < kNumChannels; ++a) {
    s << std::setw(6) << kChannelIds[a];
    for (Eigen::Index c = 0; c < r.rmse.cols(); ++c) s << std::setw(12) << r.rmse(Eigen::Index(a), c);
    s << "\n";
  }
  s << std::setw(6) << "mean";
  for (Eigen::Index c = 0; c < r.mean_rmse.size(); ++c) s << std::setw(12) << r.mean_rmse[c];
  s << "\n\ntrain rows " << r.train_rows << ", test rows " << r.test_rows << "; pruned AUs:";
  if (r.pruned_aus.empty()) s << " none";
  for (int au : r.pruned_aus) s << " " << au_name(au);
  s << "\ndistance PCA k = " << r.distance_pca.k << " (cumulative EVR ";
  for (const auto& c : r.distance_pca.report)
    if (c.k == r.distance_pca.k) s << std::setprecision(4) << c.cumulative_evr * 100 << "%";
  s << ")\n";
  if (!r.mlp_leaderboard.empty()) s << "best MLP: " << r.mlp_leaderboard.front().hyper.describe() << "\n";
  return s.str();
}

}  // namespace robohead
