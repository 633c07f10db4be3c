#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <span>
#include <string>

#include "robohead/error.hpp"

namespace robohead {

inline constexpr std::size_t kNumChannels = 9;
inline constexpr std::size_t kNumLandmarks = 68;
inline constexpr std::size_t kNumAus = 17;
inline constexpr std::size_t kNumPairs = kNumLandmarks * (kNumLandmarks - 1) / 2;
inline constexpr int kCommandMax = 255;

// Actuator ids of the head that are learned. Eyeball (2, 3) and neck (12-14)
// channels are not driven.
inline constexpr std::array<int, kNumChannels> kChannelIds{1, 4, 5, 6, 7, 8, 9, 10, 11};

// OpenFace 2.0 intensity action units, in column order.
inline constexpr std::array<int, kNumAus> kAuIds{1, 2, 4, 5, 6, 7, 9, 10, 12,
                                                 14, 15, 17, 20, 23, 25, 26, 45};

/// Position of `channel` in kChannelIds, or -1.
constexpr int channel_index(int channel) {
  for (std::size_t i = 0; i < kChannelIds.size(); ++i)
    if (kChannelIds[i] == channel) return static_cast<int>(i);
  return -1;
}

constexpr int au_index(int au) {
  for (std::size_t i = 0; i < kAuIds.size(); ++i)
    if (kAuIds[i] == au) return static_cast<int>(i);
  return -1;
}

/// "AU01", "AU45", ...
inline std::string au_name(int au) {
  return (au < 10 ? "AU0" : "AU") + std::to_string(au);
}

/// One integer command per learned actuator channel, each in [0, 255].
class ActuatorCommand {
 public:
  ActuatorCommand() { values_.fill(0); }

  explicit ActuatorCommand(const std::array<int, kNumChannels>& values) : values_(values) {
    for (std::size_t i = 0; i < kNumChannels; ++i) check_value(kChannelIds[i], values_[i]);
  }

  // Every learned channel must be present exactly once.
  static ActuatorCommand from_map(const std::map<int, int>& by_channel) {
    ActuatorCommand c;
    for (const auto& [id, v] : by_channel) {
      int idx = channel_index(id);
      if (idx < 0) throw InvalidCommand("unknown actuator channel " + std::to_string(id));
      check_value(id, v);
      c.values_[idx] = v;
    }
    if (by_channel.size() != kNumChannels)
      throw InvalidCommand("command must set exactly " + std::to_string(kNumChannels) + " channels");
    return c;
  }

  static ActuatorCommand neutral() { return {}; }

  int operator[](std::size_t idx) const { return values_[idx]; }

  int channel(int id) const {
    int idx = channel_index(id);
    if (idx < 0) throw InvalidCommand("unknown actuator channel " + std::to_string(id));
    return values_[idx];
  }

  void set_channel(int id, int value) {
    int idx = channel_index(id);
    if (idx < 0) throw InvalidCommand("unknown actuator channel " + std::to_string(id));
    check_value(id, value);
    values_[idx] = value;
  }

  const std::array<int, kNumChannels>& values() const { return values_; }

  /// Activations value/255 in channel order.
  Eigen::Matrix<double, kNumChannels, 1> activations() const {
    Eigen::Matrix<double, kNumChannels, 1> a;
    for (std::size_t i = 0; i < kNumChannels; ++i) a[i] = values_[i] / double(kCommandMax);
    return a;
  }

  /// Rounds to nearest and clips into [0, 255].
  template <class Vec>
  static ActuatorCommand from_real(const Vec& v) {
    ActuatorCommand c;
    for (std::size_t i = 0; i < kNumChannels; ++i) {
      double x = v[i];
      if (!std::isfinite(x)) x = 0.0;
      c.values_[i] = static_cast<int>(std::clamp<double>(std::lround(std::clamp(x, -1e6, 1e6)), 0, kCommandMax));
    }
    return c;
  }

  friend bool operator==(const ActuatorCommand&, const ActuatorCommand&) = default;

 private:
  static void check_value(int id, int v) {
    if (v < 0 || v > kCommandMax)
      throw InvalidCommand("channel " + std::to_string(id) + " value " + std::to_string(v) +
                           " outside [0,255]");
  }

  std::array<int, kNumChannels> values_;
};

using Points = Eigen::Matrix<double, kNumLandmarks, 3>;
using Matrix3 = Eigen::Matrix3d;
using Vector3 = Eigen::Vector3d;

/// 68 facial landmarks in 3D (mm), standard 68-point layout.
struct LandmarkSet {
  Points points = Points::Zero();

  bool all_finite() const { return points.allFinite(); }
  Vector3 centroid() const { return points.colwise().mean().transpose(); }

  /// X_0..X_67, Y_0..Y_67, Z_0..Z_67.
  Eigen::VectorXd flatten() const {
    Eigen::VectorXd v(3 * kNumLandmarks);
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t i = 0; i < kNumLandmarks; ++i) v[a * kNumLandmarks + i] = points(i, a);
    return v;
  }

  static LandmarkSet unflatten(const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (v.size() != static_cast<Eigen::Index>(3 * kNumLandmarks))
      throw InvalidArgument("flat landmark vector must have 204 entries");
    LandmarkSet l;
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t i = 0; i < kNumLandmarks; ++i) l.points(i, a) = v[a * kNumLandmarks + i];
    return l;
  }
};

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  a = std::fmod(a, 2 * pi);
  if (a <= -pi) a += 2 * pi;
  if (a > pi) a -= 2 * pi;
  return a;
}

/// Head pose. Rotation is intrinsic X-Y-Z Euler angles in radians, so the
/// rotation matrix is Rx(rx) * Ry(ry) * Rz(rz), the convention of OpenFace's
/// pose_Rx/pose_Ry/pose_Rz columns. Translation in mm.
struct Pose {
  Vector3 rotation = Vector3::Zero();
  Vector3 translation = Vector3::Zero();

  Matrix3 rotation_matrix() const {
    using Eigen::AngleAxisd;
    return (AngleAxisd(rotation.x(), Vector3::UnitX()) * AngleAxisd(rotation.y(), Vector3::UnitY()) *
            AngleAxisd(rotation.z(), Vector3::UnitZ()))
        .toRotationMatrix();
  }

  static Pose identity() { return {}; }
};

/// p' = R p + t for every landmark.
inline LandmarkSet apply_pose(const LandmarkSet& l, const Pose& pose) {
  LandmarkSet out;
  out.points = (l.points * pose.rotation_matrix().transpose()).rowwise() + pose.translation.transpose();
  return out;
}

}  // namespace robohead
