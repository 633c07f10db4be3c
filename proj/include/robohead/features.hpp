#pragma once

// Facial-expression representations (action units, flat landmarks, pairwise
// distances) and the transforms that align one face onto another.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "robohead/types.hpp"

namespace robohead {

enum class FeatureKind { au, landmarks, distances };

inline std::string to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::au: return "au";
    case FeatureKind::landmarks: return "landmarks";
    case FeatureKind::distances: return "distances";
  }
  return "?";
}

inline FeatureKind feature_kind_from_string(const std::string& s) {
  if (s == "au" || s == "aus") return FeatureKind::au;
  if (s == "landmarks") return FeatureKind::landmarks;
  if (s == "distances") return FeatureKind::distances;
  throw InvalidArgument("unknown feature kind '" + s + "' (expected au, landmarks or distances)");
}

inline std::size_t feature_dim(FeatureKind k) {
  switch (k) {
    case FeatureKind::au: return kNumAus;
    case FeatureKind::landmarks: return 3 * kNumLandmarks;
    case FeatureKind::distances: return kNumPairs;
  }
  return 0;
}

struct FeatureVector {
  FeatureKind kind = FeatureKind::au;
  Eigen::VectorXd values;
};

using AUVector = Eigen::Matrix<double, kNumAus, 1>;
using DistanceVector = Eigen::VectorXd;
using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Pairwise distances

/// Index of the unordered pair (i, j), i < j, in lexicographic order.
constexpr std::size_t pair_index(std::size_t i, std::size_t j) {
  return i * (2 * kNumLandmarks - i - 1) / 2 + (j - i - 1);
}

/// All 2278 Euclidean distances between landmark pairs, ordered by (i, j), i < j.
inline DistanceVector pairwise_distances(const LandmarkSet& l) {
  DistanceVector d(kNumPairs);
  std::size_t k = 0;
  for (std::size_t i = 0; i < kNumLandmarks; ++i)
    for (std::size_t j = i + 1; j < kNumLandmarks; ++j) d[k++] = (l.points.row(i) - l.points.row(j)).norm();
  return d;
}

// ---------------------------------------------------------------------------
// Synthetic action units

struct PairWeight {
  int i = 0;
  int j = 0;
  double weight = 0.0;
};

struct Crosstalk {
  int au = 0;
  double coefficient = 0.0;
};

/// Affine read-out of one AU intensity from landmark-distance changes.
struct AUDef {
  int au = 0;
  std::vector<PairWeight> weights;
  double bias = 0.0;
  double noise_sigma = 0.0;
  std::vector<Crosstalk> crosstalk;
};

inline void validate_au_defs(std::span<const AUDef> defs) {
  std::set<int> seen;
  for (const auto& d : defs) {
    if (au_index(d.au) < 0) throw ConfigError("AU definition for unsupported AU " + std::to_string(d.au));
    if (!seen.insert(d.au).second) throw ConfigError("duplicate AU definition for " + au_name(d.au));
    for (const auto& w : d.weights) {
      if (!std::isfinite(w.weight)) throw ConfigError(au_name(d.au) + " has a non-finite weight");
      if (w.i < 0 || w.j < 0 || w.i >= int(kNumLandmarks) || w.j >= int(kNumLandmarks) || w.i == w.j)
        throw ConfigError(au_name(d.au) + " references an invalid landmark pair");
    }
    if (!std::isfinite(d.bias) || !(d.noise_sigma >= 0.0))
      throw ConfigError(au_name(d.au) + " has an invalid bias or noise sigma");
  }
  for (int au : kAuIds)
    if (!seen.count(au)) throw ConfigError("missing AU definition for " + au_name(au));
  for (const auto& d : defs)
    for (const auto& c : d.crosstalk)
      if (!seen.count(c.au)) throw ConfigError(au_name(d.au) + " crosstalk references unknown AU");
}

/// AU_j = clip(sum w (d - d_neutral) + bias + crosstalk + noise, 0, 5).
/// Crosstalk adds coefficient * (unclipped, noiseless) value of the other AU.
/// One Gaussian draw per AU in kAuIds order, whatever its sigma.
inline AUVector extract_aus(std::span<const AUDef> defs, const LandmarkSet& landmarks,
                            const DistanceVector& neutral_baseline, Rng& rng) {
  validate_au_defs(defs);
  if (neutral_baseline.size() != static_cast<Eigen::Index>(kNumPairs))
    throw InvalidArgument("neutral baseline must have 2278 entries");

  std::array<const AUDef*, kNumAus> by_index{};
  for (const auto& d : defs) by_index[au_index(d.au)] = &d;

  AUVector raw;
  for (std::size_t a = 0; a < kNumAus; ++a) {
    const AUDef& def = *by_index[a];
    double v = def.bias;
    for (const auto& w : def.weights) {
      auto i = std::size_t(std::min(w.i, w.j)), j = std::size_t(std::max(w.i, w.j));
      double d = (landmarks.points.row(i) - landmarks.points.row(j)).norm();
      v += w.weight * (d - neutral_baseline[pair_index(i, j)]);
    }
    raw[a] = v;
  }

  std::normal_distribution<double> unit(0.0, 1.0);
  AUVector out;
  for (std::size_t a = 0; a < kNumAus; ++a) {
    const AUDef& def = *by_index[a];
    double v = raw[a];
    for (const auto& c : def.crosstalk) v += c.coefficient * raw[au_index(c.au)];
    v += def.noise_sigma * unit(rng);
    out[a] = std::clamp(v, 0.0, 5.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Alignment

/// Undoes a head pose: p = R^T (p' - t), then centers on the centroid.
inline LandmarkSet derotate(const LandmarkSet& landmarks, const Pose& pose) {
  LandmarkSet out;
  Matrix3 r = pose.rotation_matrix();
  out.points = (landmarks.points.rowwise() - pose.translation.transpose()) * r;
  out.points.rowwise() -= out.points.colwise().mean();
  return out;
}

inline double alignment_misfit(const LandmarkSet& a, const LandmarkSet& b) {
  return (a.points - b.points).norm();
}

struct Alignment {
  LandmarkSet aligned;
  Matrix3 rotation = Matrix3::Identity();
};

/// Rotation-only orthogonal Procrustes (Kabsch with reflection correction).
/// Both sets are centered internally; the rotated source is placed at the
/// reference centroid.
inline Alignment procrustes_align(const LandmarkSet& source, const LandmarkSet& reference) {
  Points src = source.points.rowwise() - source.points.colwise().mean();
  Eigen::RowVector3d ref_centroid = reference.points.colwise().mean();
  Points ref = reference.points.rowwise() - ref_centroid;

  Matrix3 cross = src.transpose() * ref;
  Eigen::JacobiSVD<Matrix3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();

  Eigen::JacobiSVD<Points> shape(src);
  const auto& ssv = shape.singularValues();
  if (!(ssv[0] > 0.0) || ssv[1] <= 1e-12 * ssv[0] || !(sv[0] > 0.0) || sv[1] <= 1e-12 * sv[0])
    throw AlignmentDegenerate("Procrustes alignment is degenerate (source or cross-covariance rank < 2)");

  Matrix3 u = svd.matrixU();
  Matrix3 v = svd.matrixV();
  Matrix3 fix = Matrix3::Identity();
  fix(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;

  Alignment out;
  out.rotation = v * fix * u.transpose();
  out.aligned.points = (src * out.rotation.transpose()).rowwise() + ref_centroid;
  return out;
}

// ---------------------------------------------------------------------------
// MinMax distribution matching

struct MinMaxStats {
  FeatureKind kind = FeatureKind::au;
  Eigen::VectorXd min;
  Eigen::VectorXd max;

  std::size_t dim() const { return static_cast<std::size_t>(min.size()); }
};

/// Per-dimension extrema over the rows of `samples`. Fewer than two rows is
/// rejected unless `allow_single` is set.
inline MinMaxStats fit_minmax(FeatureKind kind, const Eigen::Ref<const Eigen::MatrixXd>& samples,
                              bool allow_single = false) {
  if (samples.rows() == 0) throw InvalidArgument("fit_minmax: no samples");
  if (samples.rows() < 2 && !allow_single)
    throw InvalidArgument("fit_minmax: need at least 2 samples (pass allow_single for one)");
  if (!samples.allFinite()) throw InvalidArgument("fit_minmax: non-finite sample");
  return {kind, samples.colwise().minCoeff().transpose(), samples.colwise().maxCoeff().transpose()};
}

inline MinMaxStats fit_minmax(std::span<const FeatureVector> samples, bool allow_single = false) {
  if (samples.empty()) throw InvalidArgument("fit_minmax: no samples");
  const auto kind = samples.front().kind;
  const auto dim = samples.front().values.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(samples.size()), dim);
  for (std::size_t r = 0; r < samples.size(); ++r) {
    if (samples[r].kind != kind || samples[r].values.size() != dim)
      throw InvalidArgument("fit_minmax: samples differ in kind or dimension");
    m.row(static_cast<Eigen::Index>(r)) = samples[r].values.transpose();
  }
  return fit_minmax(kind, m, allow_single);
}

/// Maps x from the `from` range onto the `to` range, per dimension. A
/// degenerate source dimension (max == min) maps to the target midpoint.
inline Eigen::VectorXd minmax_map(const Eigen::Ref<const Eigen::VectorXd>& x, const MinMaxStats& from,
                                  const MinMaxStats& to) {
  if (from.kind != to.kind) throw InvalidArgument("minmax_map: feature kinds differ");
  if (x.size() != from.min.size() || from.min.size() != to.min.size())
    throw InvalidArgument("minmax_map: dimension mismatch");
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double span_from = from.max[i] - from.min[i];
    if (span_from == 0.0)
      out[i] = 0.5 * (to.min[i] + to.max[i]);
    else
      out[i] = (x[i] - from.min[i]) / span_from * (to.max[i] - to.min[i]) + to.min[i];
  }
  return out;
}

inline FeatureVector minmax_map(const FeatureVector& x, const MinMaxStats& from, const MinMaxStats& to) {
  if (x.kind != from.kind) throw InvalidArgument("minmax_map: feature kinds differ");
  return {to.kind, minmax_map(x.values, from, to)};
}

// ---------------------------------------------------------------------------
// Temporal averaging

/// Means over non-overlapping blocks of `window` rows; a trailing partial
/// block is dropped.
inline Eigen::MatrixXd window_average(const Eigen::Ref<const Eigen::MatrixXd>& frames, int window) {
  if (window < 1) throw InvalidArgument("window_average: window must be >= 1");
  if (frames.rows() < window) throw InvalidArgument("window_average: fewer frames than the window");
  const Eigen::Index blocks = frames.rows() / window;
  Eigen::MatrixXd out(blocks, frames.cols());
  for (Eigen::Index b = 0; b < blocks; ++b)
    out.row(b) = frames.middleRows(b * window, window).colwise().mean();
  return out;
}

inline std::vector<FeatureVector> window_average(std::span<const FeatureVector> frames, int window) {
  if (window < 1) throw InvalidArgument("window_average: window must be >= 1");
  if (frames.size() < static_cast<std::size_t>(window))
    throw InvalidArgument("window_average: fewer frames than the window");
  const auto dim = frames.front().values.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(frames.size()), dim);
  for (std::size_t r = 0; r < frames.size(); ++r) {
    if (frames[r].values.size() != dim || frames[r].kind != frames.front().kind)
      throw InvalidArgument("window_average: frames differ in kind or dimension");
    m.row(static_cast<Eigen::Index>(r)) = frames[r].values.transpose();
  }
  Eigen::MatrixXd avg = window_average(m, window);
  std::vector<FeatureVector> out;
  out.reserve(static_cast<std::size_t>(avg.rows()));
  for (Eigen::Index r = 0; r < avg.rows(); ++r) out.push_back({frames.front().kind, avg.row(r).transpose()});
  return out;
}

}  // namespace robohead
