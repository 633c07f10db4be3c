#include <gtest/gtest.h>

#include <fstream>

#include "support.hpp"

using namespace robohead;
using robohead::testing::TempDir;

namespace {

HeadConfig quiet_head() { return noiseless(default_head_config()); }

ActuatorCommand single(int channel, int value) {
  ActuatorCommand c;
  c.set_channel(channel, value);
  return c;
}

}  // namespace

TEST(ActuatorCommand, RejectsUnknownChannelAndRange) {
  EXPECT_THROW(ActuatorCommand::from_map({{2, 10}}), InvalidCommand);
  EXPECT_THROW(ActuatorCommand::from_map({{1, 256}}), InvalidCommand);
  EXPECT_THROW(ActuatorCommand::from_map({{1, -1}}), InvalidCommand);
  ActuatorCommand c;
  EXPECT_THROW(c.set_channel(12, 0), InvalidCommand);
  EXPECT_THROW(c.channel(3), InvalidCommand);
}

TEST(ActuatorCommand, FromRealRoundsAndClips) {
  std::array<double, kNumChannels> v{-4.0, 0.49, 0.5, 127.5, 254.6, 300.0, 1.0, 2.0, 3.0};
  auto c = ActuatorCommand::from_real(v);
  EXPECT_EQ(c[0], 0);
  EXPECT_EQ(c[1], 0);
  EXPECT_EQ(c[2], 1);
  EXPECT_EQ(c[3], 128);
  EXPECT_EQ(c[4], 255);
  EXPECT_EQ(c[5], 255);
}

TEST(HeadConfig, DefaultIsValid) {
  auto head = default_head_config();
  EXPECT_NO_THROW(validate(head));
  EXPECT_TRUE(is_mirror_symmetric(head.neutral_landmarks.points, 1e-9));
  for (const auto& a : head.actuators) {
    EXPECT_TRUE(a.symmetric);
    EXPECT_TRUE(is_mirror_symmetric(dense_basis(a.basis), 1e-9)) << a.name;
  }
}

TEST(HeadConfig, RejectsDependentBases) {
  auto head = default_head_config();
  head.actuators[1].basis = head.actuators[0].basis;
  EXPECT_THROW(validate(head), ConfigError);
}

TEST(HeadConfig, RejectsAsymmetricNeutral) {
  auto head = default_head_config();
  head.neutral_landmarks.points(0, 0) += 1.0;
  EXPECT_THROW(validate(head), ConfigError);
}

TEST(HeadConfig, ShippedFileMatchesBuiltin) {
  std::ifstream in(ROBOHEAD_DEFAULT_HEAD);
  ASSERT_TRUE(in) << ROBOHEAD_DEFAULT_HEAD;
  auto loaded = head_config_from_json(nlohmann::json::parse(in));
  EXPECT_EQ(to_json(loaded), to_json(default_head_config()));
  EXPECT_EQ(config_hash(loaded), config_hash(default_head_config()));
}

TEST(HeadConfig, JsonRoundTrip) {
  auto head = default_head_config();
  head.cross_terms.push_back({7, 10, {{48, Vector3(1, 2, 3)}, {54, Vector3(-1, 2, 3)}}});
  head.sensor_lag_frames = 2;
  auto back = head_config_from_json(nlohmann::json::parse(to_json(head).dump()));
  EXPECT_EQ(to_json(back), to_json(head));
  EXPECT_EQ(back.neutral_landmarks.points, head.neutral_landmarks.points);
}

TEST(HeadConfig, JsonVersionChecked) {
  auto j = to_json(default_head_config());
  j["version"] = 99;
  EXPECT_THROW(head_config_from_json(j), UnsupportedVersion);
  j = to_json(default_head_config());
  j.erase("actuators");
  EXPECT_THROW(head_config_from_json(j), FormatError);
}

TEST(Forward, ZeroCommandIsNeutral) {
  auto head = quiet_head();
  EXPECT_EQ(forward(head, ActuatorCommand::neutral()).points, head.neutral_landmarks.points);
}

TEST(Forward, JawChannelAddsItsBasisEntryByEntry) {
  auto head = quiet_head();
  auto out = forward(head, single(11, 255));
  Points expected = head.neutral_landmarks.points;
  for (const auto& e : actuator(head, 11).basis) expected.row(e.landmark) += e.displacement.transpose();
  EXPECT_LT((out.points - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Forward, SymmetricActuatorsKeepSymmetry) {
  auto head = quiet_head();
  Rng rng(5);
  for (int i = 0; i < 20; ++i)
    EXPECT_TRUE(is_mirror_symmetric(forward(head, random_command(rng)).points, 1e-12));
}

TEST(Forward, LinearInActivation) {
  auto head = quiet_head();
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    auto a = random_command(rng);
    auto b = random_command(rng);
    std::array<int, kNumChannels> s{};
    for (std::size_t c = 0; c < kNumChannels; ++c) s[c] = std::min(255, a[c] + b[c]);
    std::array<int, kNumChannels> b2{};
    for (std::size_t c = 0; c < kNumChannels; ++c) b2[c] = s[c] - a[c];
    Points sum = forward(head, ActuatorCommand(a.values())).points + forward(head, ActuatorCommand(b2)).points -
                 head.neutral_landmarks.points;
    EXPECT_LT((forward(head, ActuatorCommand(s)).points - sum).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Forward, JawDisplacementGrowsWithChannel11) {
  auto head = quiet_head();
  std::vector<int> jaw;
  for (const auto& e : actuator(head, 11).basis)
    if (e.landmark <= 16) jaw.push_back(e.landmark);
  ASSERT_FALSE(jaw.empty());
  double prev = -1.0;
  for (int v = 0; v <= 255; v += 15) {
    Points d = forward(head, single(11, v)).points - head.neutral_landmarks.points;
    double norm = 0.0;
    for (int i : jaw) norm += d.row(i).squaredNorm();
    EXPECT_GT(norm, prev);
    prev = norm;
  }
}

TEST(Forward, CrossTermIsBilinear) {
  auto head = quiet_head();
  head.cross_terms.push_back({7, 10, {{48, Vector3(2, 0, 0)}, {54, Vector3(-2, 0, 0)}}});
  ActuatorCommand c;
  c.set_channel(7, 255);
  c.set_channel(10, 51);
  Points lin = forward(quiet_head(), c).points;
  Points with = forward(head, c).points;
  EXPECT_NEAR(with(48, 0) - lin(48, 0), 2.0 * 0.2, 1e-12);
  EXPECT_NEAR(with(54, 0) - lin(54, 0), -2.0 * 0.2, 1e-12);
}

TEST(Observe, ZeroNoiseIsForward) {
  auto head = quiet_head();
  SimState st(head);
  Rng rng(3);
  for (long i = 0; i < 10; ++i) {
    auto c = random_command(rng);
    auto f = observe(head, c, i, st);
    EXPECT_EQ(f.landmarks_observed.points, forward(head, c).points);
    EXPECT_EQ(f.landmarks_true.points, forward(head, c).points);
    EXPECT_EQ(f.frame_index, i);
  }
}

TEST(Observe, Deterministic) {
  auto head = default_head_config();
  SimState a(head), b(head);
  Rng rng(9);
  for (long i = 0; i < 5; ++i) {
    auto c = random_command(rng);
    auto fa = observe(head, c, i, a);
    auto fb = observe(head, c, i, b);
    EXPECT_EQ(fa.landmarks_observed.points, fb.landmarks_observed.points);
    EXPECT_EQ(fa.pose.rotation, fb.pose.rotation);
  }
}

TEST(Observe, ObservedIsPosedNoisyTruth) {
  auto head = default_head_config();
  SimState st(head);
  Rng rng(1);
  for (long i = 0; i < 10; ++i) {
    auto f = observe(head, random_command(rng), i, st);
    for (int a = 0; a < 3; ++a) {
      EXPECT_LE(std::abs(f.pose.rotation[a]), head.pose_jitter.max_rotation);
      EXPECT_LE(std::abs(f.pose.translation[a]), head.pose_jitter.max_translation);
    }
    // Undo the pose by hand: residual is pure tracker noise, a few sigma at most.
    Points back = (f.landmarks_observed.points.rowwise() - f.pose.translation.transpose()) * f.pose.rotation_matrix();
    Points noise = back - f.landmarks_true.points;
    EXPECT_GT(noise.norm(), 0.0);
    EXPECT_LT(noise.cwiseAbs().maxCoeff(), 10.0 * head.landmark_noise_sigma * (1.0 + head.shape_noise_gain * 5.0));
  }
}

TEST(Observe, LagReplaysEarlierCommand) {
  auto head = quiet_head();
  head.sensor_lag_frames = 1;
  SimState st(head);
  auto c0 = single(11, 200);
  auto c1 = single(5, 100);
  auto f0 = observe(head, c0, 0, st);
  auto f1 = observe(head, c1, 1, st);
  EXPECT_EQ(f0.landmarks_true.points, head.neutral_landmarks.points);
  EXPECT_EQ(f1.landmarks_true.points, forward(head, c0).points);
  EXPECT_EQ(f1.command, c1);
}

TEST(Observe, NoiseVarianceMatchesSigma) {
  auto head = quiet_head();
  head.landmark_noise_sigma = 0.7;
  head.shape_noise_gain = 0.0;
  SimState st(head);
  double sum = 0.0, sq = 0.0;
  long count = 0;
  for (long i = 0; i < 200; ++i) {
    auto f = observe(head, ActuatorCommand::neutral(), i, st);
    Points d = f.landmarks_observed.points - f.landmarks_true.points;
    sum += d.sum();
    sq += d.squaredNorm();
    count += d.size();
  }
  const double mean = sum / double(count);
  const double sd = std::sqrt(sq / double(count) - mean * mean);
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(sd, 0.7, 0.01);
}

TEST(RandomCommand, ReproducibleAndUniform) {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(random_command(a), random_command(b));
  Rng rng(7);
  std::array<double, kNumChannels> mean{};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto c = random_command(rng);
    for (std::size_t k = 0; k < kNumChannels; ++k) {
      ASSERT_GE(c[k], 0);
      ASSERT_LE(c[k], 255);
      mean[k] += c[k];
    }
  }
  for (double m : mean) EXPECT_NEAR(m / n, 127.5, 5.0);
}

TEST(Interpolate, Arithmetic) {
  ActuatorCommand a, b;
  b.set_channel(1, 255);
  auto mid = interpolate_commands(a, b, 4);
  ASSERT_EQ(mid.size(), 4u);
  std::vector<int> got;
  for (const auto& c : mid) got.push_back(c.channel(1));
  EXPECT_EQ(got, (std::vector<int>{51, 102, 153, 204}));
  EXPECT_TRUE(interpolate_commands(a, b, 0).empty());
  EXPECT_THROW(interpolate_commands(a, b, -1), InvalidArgument);
  for (const auto& c : interpolate_commands(b, b, 4)) EXPECT_EQ(c, b);
}

TEST(Interpolate, RoundsToNearest) {
  ActuatorCommand a, b;
  b.set_channel(4, 10);
  auto mid = interpolate_commands(a, b, 2);
  EXPECT_EQ(mid[0].channel(4), 3);  // 3.33
  EXPECT_EQ(mid[1].channel(4), 7);  // 6.67
}

TEST(Hash, StableAndSensitive) {
  auto a = default_head_config();
  auto b = default_head_config();
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.rng_seed = 1;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(hex64(fnv1a("")), "cbf29ce484222325");
  EXPECT_EQ(hex64(fnv1a("a")), "af63dc4c8601ec8c");
}

TEST(Pose, EulerOrderIsIntrinsicXYZ) {
  Pose p;
  p.rotation = Vector3(0.3, -0.2, 0.9);
  Matrix3 rx, ry, rz;
  const double a = 0.3, b = -0.2, c = 0.9;
  rx << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  ry << std::cos(b), 0, std::sin(b), 0, 1, 0, -std::sin(b), 0, std::cos(b);
  rz << std::cos(c), -std::sin(c), 0, std::sin(c), std::cos(c), 0, 0, 0, 1;
  EXPECT_LT((p.rotation_matrix() - rx * ry * rz).norm(), 1e-12);
}

TEST(Pose, WrapAngle) {
  EXPECT_NEAR(wrap_angle(3 * std::numbers::pi), std::numbers::pi, 1e-12);
  EXPECT_NEAR(wrap_angle(-std::numbers::pi), std::numbers::pi, 1e-12);
  EXPECT_NEAR(wrap_angle(0.5), 0.5, 1e-15);
}
