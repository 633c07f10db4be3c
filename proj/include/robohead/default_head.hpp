#pragma once

// The shipped default head: a symmetric 68-point neutral face and hand-made
// displacement fields for the nine learned actuators.

#include <utility>

#include "robohead/head_sim.hpp"

namespace robohead {

namespace detail {

// Right half and midline of the neutral face (x <= 0), mm. y up, z toward the camera.
inline const std::vector<std::pair<int, Vector3>>& neutral_half_face() {
  static const std::vector<std::pair<int, Vector3>> pts = [] {
    std::vector<std::pair<int, Vector3>> v;
    for (int k = 0; k <= 8; ++k) {
      double th = std::numbers::pi / 2 * k / 8.0;
      v.push_back({k, Vector3(-68.0 * std::cos(th), 5.0 - 95.0 * std::sin(th), -55.0 + 50.0 * std::sin(th))});
    }
    v.insert(v.end(), {{17, {-55, 30, -28}}, {18, {-44, 37, -16}}, {19, {-32, 40, -8}}, {20, {-21, 38, -3}},
                       {21, {-11, 34, -1}},  {27, {0, 20, 0}},     {28, {0, 8, 8}},     {29, {0, -4, 16}},
                       {30, {0, -16, 24}},   {31, {-14, -26, 6}},  {32, {-7, -28, 10}}, {33, {0, -29, 13}},
                       {36, {-45, 17, -14}}, {37, {-38, 22, -10}}, {38, {-28, 22, -9}}, {39, {-19, 16, -9}},
                       {40, {-28, 12, -10}}, {41, {-38, 12, -11}}, {48, {-25, -52, -2}}, {49, {-16, -46, 5}},
                       {50, {-7, -43, 9}},   {51, {0, -44, 10}},   {57, {0, -63, 8}},   {58, {-8, -62, 7}},
                       {59, {-17, -58, 4}},  {60, {-20, -52, 0}},  {61, {-8, -50, 6}},  {62, {0, -50, 7}},
                       {66, {0, -54, 7}},    {67, {-8, -53, 6}}});
    return v;
  }();
  return pts;
}

// Fills in mirror partners: (x, y, z) -> (-x, y, z).
inline Points mirror_complete(const std::vector<std::pair<int, Vector3>>& half) {
  Points p = Points::Zero();
  for (const auto& [i, d] : half) {
    p.row(i) = d.transpose();
    int m = kMirrorIndex[static_cast<std::size_t>(i)];
    p.row(m) = Vector3(-d.x(), d.y(), d.z()).transpose();
  }
  return p;
}

// Removes the component of a displacement field that is an infinitesimal
// rigid motion of `neutral` (3 translations, 3 rotations). Such components
// are invisible after pose removal and Procrustes alignment.
inline Points remove_rigid_component(const Points& field, const Points& neutral) {
  Eigen::Matrix<double, 3 * kNumLandmarks, 6> rigid = Eigen::Matrix<double, 3 * kNumLandmarks, 6>::Zero();
  for (int a = 0; a < 3; ++a) {
    Points t = Points::Zero();
    t.col(a).setOnes();
    rigid.col(a) = LandmarkSet{t}.flatten();
    Points r;
    Vector3 axis = Vector3::Unit(a);
    for (Eigen::Index i = 0; i < r.rows(); ++i) r.row(i) = axis.cross(Vector3(neutral.row(i).transpose())).transpose();
    rigid.col(3 + a) = LandmarkSet{r}.flatten();
  }
  Eigen::VectorXd f = LandmarkSet{field}.flatten();
  Eigen::VectorXd coef = rigid.colPivHouseholderQr().solve(f);
  return LandmarkSet::unflatten(f - rigid * coef).points;
}

inline std::vector<BasisEntry> to_sparse(const Points& dense) {
  std::vector<BasisEntry> out;
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    Vector3 d = dense.row(i).transpose();
    if (d.cwiseAbs().maxCoeff() > 0.0) out.push_back({int(i), d});
  }
  return out;
}

inline Points symmetrize(const Points& p) {
  Points q = p;
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    auto m = static_cast<std::size_t>(kMirrorIndex[i]);
    q(i, 0) = 0.5 * (p(i, 0) - p(m, 0));
    q(i, 1) = 0.5 * (p(i, 1) + p(m, 1));
    q(i, 2) = 0.5 * (p(i, 2) + p(m, 2));
  }
  return q;
}

}  // namespace detail

/// Canonical neutral face, centered on its centroid.
inline LandmarkSet default_neutral_landmarks() {
  Points p = detail::mirror_complete(detail::neutral_half_face());
  p.rowwise() -= p.colwise().mean();
  return {detail::symmetrize(p)};
}

/// Hand-authored displacement fields (right half given, mirrored), expressed
/// with their rigid-motion component removed.
inline std::vector<ActuatorDef> default_actuators(const LandmarkSet& neutral) {
  using Half = std::vector<std::pair<int, Vector3>>;
  struct Raw {
    int id;
    const char* name;
    Half half;
  };
  const std::vector<Raw> raw{
      {1, "upper eyelid down", {{37, {0, -5, 0.5}}, {38, {0, -5, 0.5}}, {36, {0, -0.5, 0}}, {39, {0, -0.5, 0}}}},
      {4, "lower eyelid up", {{40, {0, 3, 0.3}}, {41, {0, 3, 0.3}}}},
      {5, "eyebrow up",
       {{17, {0, 7, 0}}, {18, {0, 9, 0.5}}, {19, {0, 9, 1}}, {20, {0, 8, 1}}, {21, {0, 7, 1}}}},
      {6, "eyebrow shrink", {{19, {2, -2, 0}}, {20, {4, -3, 1}}, {21, {5, -3, 1.5}}, {18, {1, -1, 0}}}},
      {7, "mouth corner up",
       {{48, {-3, 8, -1}}, {49, {-1, 3, 0}}, {59, {-1, 4, 0}}, {60, {-2, 6, -1}}, {61, {0, 2, 0}},
        {67, {0, 2, 0}}, {40, {0, 1, 0}}, {41, {0, 1.5, 0}}, {31, {0, 1, 0}}}},
      {8, "mouth corner back",
       {{48, {-6, 0, -6}}, {60, {-5, 0, -4}}, {49, {-2, 0, -2}}, {59, {-2, 0, -2}}}},
      {9, "lip shrink",
       {{48, {6, 0, 5}}, {60, {5, 0, 3}}, {49, {3, 0, 4}}, {50, {1, 0, 4}}, {51, {0, 0, 4}}, {59, {3, 0, 4}},
        {58, {1, 0, 4}}, {57, {0, 0, 4}}, {61, {1, 0, 3}}, {62, {0, 0, 3}}, {66, {0, 0, 3}}, {67, {1, 0, 3}}}},
      {10, "lips open",
       {{50, {0, 3, 0}}, {51, {0, 3, 0}}, {61, {0, 5, 0}}, {62, {0, 5, 0}}, {49, {0, 1, 0}}, {58, {0, -3, 0}},
        {57, {0, -3, 0}}, {67, {0, -6, 0}}, {66, {0, -6, 0}}, {59, {0, -1, 0}}}},
      {11, "jaw down",
       {{3, {0, -3, -1}},    {4, {0, -6, -1.5}},  {5, {0, -9, -2}},    {6, {0, -12, -3}},  {7, {0, -14, -3.5}},
        {8, {0, -15, -4}},   {57, {0, -13, -2}},  {58, {0, -13, -2}},  {59, {0, -9, -1}},  {66, {0, -14, -2}},
        {67, {0, -13, -2}},  {60, {0, -4, 0}},    {48, {0, -4, 0}}}},
  };
  std::vector<ActuatorDef> out;
  for (const auto& r : raw) {
    Points field = detail::mirror_complete(r.half);
    // mirror_complete writes midline points twice with x negated; midline
    // entries carry dx = 0 so that is harmless.
    field = detail::symmetrize(detail::remove_rigid_component(field, neutral.points));
    out.push_back({r.id, r.name, detail::to_sparse(field), true});
  }
  return out;
}

/// Synthetic AU read-outs. AU10 watches only the nose bridge, which no
/// actuator moves, so it carries noise and nothing else. A negative bias
/// gives each detector a dead zone below its firing threshold.
inline std::vector<AUDef> default_au_defs(double noise_sigma, double bias = -1.0) {
  auto def = [&](int au, std::vector<PairWeight> w, std::vector<Crosstalk> c = {}) {
    return AUDef{au, std::move(w), bias, noise_sigma, std::move(c)};
  };
  const double eye = 0.15;
  return {
      def(1, {{21, 39, 0.25}, {22, 42, 0.25}}, {{2, 0.3}}),
      def(2, {{17, 36, 0.25}, {26, 45, 0.25}}, {{1, 0.3}}),
      def(4, {{21, 22, -0.3}, {21, 39, -0.15}, {22, 42, -0.15}}),
      def(5, {{37, 41, 0.3}, {38, 40, 0.3}, {43, 47, 0.3}, {44, 46, 0.3}}),
      def(6, {{36, 48, -0.2}, {45, 54, -0.2}, {40, 48, -0.1}, {47, 54, -0.1}}, {{12, 0.4}}),
      def(7, {{37, 41, -0.2}, {38, 40, -0.2}, {43, 47, -0.2}, {44, 46, -0.2}}, {{6, 0.3}}),
      def(9, {{31, 48, -0.1}, {35, 54, -0.1}, {21, 27, -0.1}, {22, 27, -0.1}}, {{6, 0.3}}),
      def(10, {{27, 30, 0.3}, {28, 30, 0.3}}),
      def(12, {{48, 54, 0.2}, {33, 48, -0.15}, {33, 54, -0.15}}),
      def(14, {{48, 54, 0.08}, {48, 60, 0.2}, {54, 64, 0.2}}),
      def(15, {{33, 48, 0.2}, {33, 54, 0.2}}),
      def(17, {{8, 57, -0.2}, {33, 57, -0.1}}),
      def(20, {{48, 54, 0.15}, {51, 57, -0.1}}),
      def(23, {{48, 54, -0.15}, {50, 58, -0.1}, {52, 56, -0.1}}),
      def(25, {{62, 66, 0.5}}, {{26, 0.3}}),
      def(26, {{33, 8, 0.2}}),
      def(45, {{37, 41, -eye}, {38, 40, -eye}, {43, 47, -eye}, {44, 46, -eye}}, {{7, 0.2}}),
  };
}

/// The shipped default head, noise included.
inline HeadConfig default_head_config() {
  HeadConfig c;
  c.neutral_landmarks = default_neutral_landmarks();
  c.actuators = default_actuators(c.neutral_landmarks);
  c.landmark_noise_sigma = 0.5;
  c.shape_noise_gain = 0.5;
  c.pose_jitter = {0.15, 20.0};
  c.sensor_lag_frames = 0;
  c.au_defs = default_au_defs(0.35);
  c.rng_seed = 0;
  return c;
}

}  // namespace robohead
