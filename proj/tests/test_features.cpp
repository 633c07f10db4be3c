#include <gtest/gtest.h>

#include "support.hpp"

using namespace robohead;
using namespace robohead::testing;

namespace {

std::vector<AUDef> zero_defs() {
  std::vector<AUDef> defs;
  for (int au : kAuIds) defs.push_back({au, {}, 0.0, 0.0, {}});
  return defs;
}

}  // namespace

TEST(Distances, LengthAndOrder) {
  Rng rng(1);
  auto l = random_landmarks(rng);
  auto d = pairwise_distances(l);
  ASSERT_EQ(d.size(), Eigen::Index(kNumPairs));
  EXPECT_EQ(kNumPairs, 2278u);
  std::size_t k = 0;
  for (int i = 0; i < int(kNumLandmarks); ++i)
    for (int j = i + 1; j < int(kNumLandmarks); ++j, ++k) {
      ASSERT_EQ(pair_index(i, j), k);
      ASSERT_DOUBLE_EQ(d[Eigen::Index(k)], (l.points.row(i) - l.points.row(j)).norm());
    }
  EXPECT_GE(d.minCoeff(), 0.0);
}

TEST(Distances, CoincidentPointsGiveZeros) {
  LandmarkSet l;
  l.points.rowwise() = Eigen::RowVector3d(3, -2, 7);
  EXPECT_EQ(pairwise_distances(l).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Distances, RigidInvariance) {
  Rng rng(2);
  auto l = random_landmarks(rng);
  auto base = pairwise_distances(l);
  for (int t = 0; t < 100; ++t) {
    auto moved = rigid(l, random_rotation(rng), random_translation(rng));
    ASSERT_LT((pairwise_distances(moved) - base).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ExtractAus, NeutralIsZero) {
  auto head = noiseless(default_head_config());
  for (auto& d : head.au_defs) d.bias = 0.0;
  auto base = pairwise_distances(head.neutral_landmarks);
  Rng rng(0);
  EXPECT_EQ(extract_aus(head.au_defs, head.neutral_landmarks, base, rng).cwiseAbs().maxCoeff(), 0.0);
}

TEST(ExtractAus, AffineFormulaByHand) {
  auto defs = zero_defs();
  defs[au_index(12)].weights = {{0, 1, 1.0}};
  LandmarkSet neutral;
  neutral.points.setZero();
  neutral.points(1, 0) = 10.0;
  LandmarkSet moved = neutral;
  moved.points(1, 0) = 12.0;
  Rng rng(0);
  auto aus = extract_aus(defs, moved, pairwise_distances(neutral), rng);
  EXPECT_NEAR(aus[au_index(12)], 2.0, 1e-12);
  for (std::size_t a = 0; a < kNumAus; ++a)
    if (int(a) != au_index(12)) EXPECT_EQ(aus[Eigen::Index(a)], 0.0);
}

TEST(ExtractAus, ClipsAndCrosstalk) {
  auto defs = zero_defs();
  defs[au_index(12)].bias = 7.3;
  defs[au_index(6)].bias = 1.0;
  defs[au_index(6)].crosstalk = {{12, 0.5}};
  defs[au_index(4)].bias = -2.0;
  LandmarkSet l;
  l.points.setZero();
  Rng rng(0);
  auto aus = extract_aus(defs, l, pairwise_distances(l), rng);
  EXPECT_EQ(aus[au_index(12)], 5.0);
  // Crosstalk reads the unclipped source value.
  EXPECT_NEAR(aus[au_index(6)], 1.0 + 0.5 * 7.3, 1e-12);
  EXPECT_EQ(aus[au_index(4)], 0.0);
}

TEST(ExtractAus, AlwaysInRange) {
  auto head = default_head_config();
  for (auto& d : head.au_defs) d.noise_sigma = 3.0;
  auto base = pairwise_distances(head.neutral_landmarks);
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    auto aus = extract_aus(head.au_defs, forward(head, random_command(rng)), base, rng);
    ASSERT_GE(aus.minCoeff(), 0.0);
    ASSERT_LE(aus.maxCoeff(), 5.0);
    ASSERT_TRUE(aus.allFinite());
  }
}

TEST(ExtractAus, MissingDefinitionIsConfigError) {
  auto defs = zero_defs();
  defs.pop_back();
  LandmarkSet l;
  l.points.setZero();
  Rng rng(0);
  EXPECT_THROW(extract_aus(defs, l, pairwise_distances(l), rng), ConfigError);
  defs = zero_defs();
  defs[1].au = 1;
  EXPECT_THROW(validate_au_defs(defs), ConfigError);
}

TEST(Derotate, IdentityPoseCenters) {
  Rng rng(3);
  auto l = random_landmarks(rng);
  l.points.rowwise() += Eigen::RowVector3d(10, 20, 30);
  auto d = derotate(l, Pose::identity());
  EXPECT_LT(d.centroid().norm(), 1e-9);
  Points centered = l.points.rowwise() - l.points.colwise().mean();
  EXPECT_LT((d.points - centered).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Derotate, UndoesApplyPose) {
  Rng rng(4);
  std::uniform_real_distribution<double> ang(-3.0, 3.0);
  for (int t = 0; t < 50; ++t) {
    auto l = random_landmarks(rng);
    Pose p;
    p.rotation = Vector3(ang(rng), ang(rng), ang(rng));
    p.translation = random_translation(rng);
    auto d = derotate(apply_pose(l, p), p);
    Points centered = l.points.rowwise() - l.points.colwise().mean();
    ASSERT_LT((d.points - centered).cwiseAbs().maxCoeff(), 1e-9);
    ASSERT_LT(d.centroid().norm(), 1e-9);
  }
}

TEST(Procrustes, SelfAlignment) {
  auto ref = default_neutral_landmarks();
  auto a = procrustes_align(ref, ref);
  EXPECT_LT((a.rotation - Matrix3::Identity()).norm(), 1e-12);
  EXPECT_LT((a.aligned.points - ref.points).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Procrustes, RecoversKnownRotation) {
  Rng rng(5);
  auto ref = default_neutral_landmarks();
  for (int t = 0; t < 100; ++t) {
    Matrix3 r = random_rotation(rng);
    auto src = rigid(ref, r, Vector3::Zero());
    auto a = procrustes_align(src, ref);
    ASSERT_LT((a.rotation - r.transpose()).norm(), 1e-9);
    ASSERT_NEAR(a.rotation.determinant(), 1.0, 1e-10);
    ASSERT_LT((a.rotation.transpose() * a.rotation - Matrix3::Identity()).norm(), 1e-10);
  }
}

TEST(Procrustes, NeverWorsensMisfitAndStaysProper) {
  Rng rng(6);
  for (int t = 0; t < 50; ++t) {
    auto src = random_landmarks(rng);
    auto ref = random_landmarks(rng);
    // A mirrored copy tempts an improper solution.
    if (t % 2) {
      ref = src;
      ref.points.col(0) *= -1.0;
    }
    src.points.rowwise() -= src.points.colwise().mean();
    ref.points.rowwise() -= ref.points.colwise().mean();
    auto a = procrustes_align(src, ref);
    EXPECT_LE(alignment_misfit(a.aligned, ref), alignment_misfit(src, ref) + 1e-9);
    EXPECT_NEAR(a.rotation.determinant(), 1.0, 1e-10);
  }
}

TEST(Procrustes, DegenerateSourceThrows) {
  LandmarkSet line;
  for (Eigen::Index i = 0; i < line.points.rows(); ++i) line.points.row(i) = Eigen::RowVector3d(double(i), 0, 0);
  EXPECT_THROW(procrustes_align(line, default_neutral_landmarks()), AlignmentDegenerate);
  LandmarkSet point;
  point.points.setZero();
  EXPECT_THROW(procrustes_align(point, default_neutral_landmarks()), AlignmentDegenerate);
}

TEST(MinMax, ExtremaByInspection) {
  std::vector<FeatureVector> s{{FeatureKind::au, Eigen::Vector2d(0, 2)}, {FeatureKind::au, Eigen::Vector2d(1, 0)}};
  auto st = fit_minmax(s);
  EXPECT_EQ(st.min, Eigen::Vector2d(0, 0));
  EXPECT_EQ(st.max, Eigen::Vector2d(1, 2));
  std::swap(s[0], s[1]);
  auto st2 = fit_minmax(s);
  EXPECT_EQ(st2.min, st.min);
  EXPECT_EQ(st2.max, st.max);
}

TEST(MinMax, SingleSampleNeedsFlag) {
  std::vector<FeatureVector> s{{FeatureKind::au, Eigen::Vector2d(3, 4)}};
  EXPECT_THROW(fit_minmax(s), InvalidArgument);
  auto st = fit_minmax(s, true);
  EXPECT_EQ(st.min, st.max);
  EXPECT_THROW(fit_minmax(std::vector<FeatureVector>{}, true), InvalidArgument);
}

TEST(MinMax, MixedKindsRejected) {
  std::vector<FeatureVector> s{{FeatureKind::au, Eigen::Vector2d(0, 2)},
                               {FeatureKind::distances, Eigen::Vector2d(1, 0)}};
  EXPECT_THROW(fit_minmax(s), InvalidArgument);
}

TEST(MinMax, MapArithmetic) {
  MinMaxStats from{FeatureKind::au, Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 10.0)};
  MinMaxStats to{FeatureKind::au, Eigen::VectorXd::Constant(1, 50.0), Eigen::VectorXd::Constant(1, 250.0)};
  EXPECT_NEAR(minmax_map(Eigen::VectorXd::Constant(1, 5.0), from, to)[0], 150.0, 1e-12);
  EXPECT_NEAR(minmax_map(from.min, from, to)[0], 50.0, 1e-12);
  EXPECT_NEAR(minmax_map(Eigen::VectorXd::Constant(1, 3.7), from, from)[0], 3.7, 1e-12);
  MinMaxStats flat{FeatureKind::au, Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd::Constant(1, 2.0)};
  EXPECT_NEAR(minmax_map(Eigen::VectorXd::Constant(1, 9.0), flat, to)[0], 150.0, 1e-12);
  EXPECT_THROW(minmax_map(Eigen::VectorXd::Zero(2), from, to), InvalidArgument);
  MinMaxStats other{FeatureKind::distances, to.min, to.max};
  EXPECT_THROW(minmax_map(FeatureVector{FeatureKind::au, Eigen::VectorXd::Zero(1)}, from, other), InvalidArgument);
}

TEST(MinMax, MapRoundTrip) {
  Rng rng(8);
  Eigen::MatrixXd a = random_matrix(rng, 30, 6), b = 3.0 * random_matrix(rng, 30, 6);
  auto sa = fit_minmax(FeatureKind::landmarks, a);
  auto sb = fit_minmax(FeatureKind::landmarks, b);
  for (int i = 0; i < 30; ++i) {
    Eigen::VectorXd x = random_matrix(rng, 6, 1);
    ASSERT_LT((minmax_map(minmax_map(x, sa, sb), sb, sa) - x).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(WindowAverage, Examples) {
  Eigen::MatrixXd f(4, 1);
  f << 1, 2, 3, 4;
  Eigen::MatrixXd w = window_average(f, 2);
  ASSERT_EQ(w.rows(), 2);
  EXPECT_EQ(w(0, 0), 1.5);
  EXPECT_EQ(w(1, 0), 3.5);
  EXPECT_EQ(window_average(f, 1), f);
  Eigen::MatrixXd same = Eigen::MatrixXd::Constant(7, 3, 0.3);
  auto one = window_average(same, 7);
  ASSERT_EQ(one.rows(), 1);
  EXPECT_NEAR((one.row(0) - same.row(0)).cwiseAbs().maxCoeff(), 0.0, 1e-15);
  EXPECT_THROW(window_average(f, 0), InvalidArgument);
  EXPECT_EQ(window_average(f, 3).rows(), 1);  // trailing partial block dropped
}

TEST(WindowAverage, PreservesMeanOverCompleteBlocks) {
  Rng rng(9);
  Eigen::MatrixXd f = random_matrix(rng, 42, 5);
  Eigen::MatrixXd w = window_average(f, 7);
  ASSERT_EQ(w.rows(), 6);
  EXPECT_LT((w.colwise().mean() - f.colwise().mean()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WindowAverage, FeatureVectorOverload) {
  std::vector<FeatureVector> v;
  for (int i = 1; i <= 4; ++i) v.push_back({FeatureKind::au, Eigen::VectorXd::Constant(1, double(i))});
  auto w = window_average(v, 2);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[1].values[0], 3.5);
  EXPECT_EQ(w[1].kind, FeatureKind::au);
}
