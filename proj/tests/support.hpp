#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "robohead/robohead.hpp"

namespace robohead::testing {

inline Matrix3 random_rotation(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline Vector3 random_translation(Rng& rng, double scale = 100.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

inline LandmarkSet random_landmarks(Rng& rng, double scale = 50.0) {
  std::normal_distribution<double> n(0.0, scale);
  LandmarkSet l;
  for (Eigen::Index i = 0; i < l.points.rows(); ++i)
    for (Eigen::Index a = 0; a < 3; ++a) l.points(i, a) = n(rng);
  return l;
}

inline LandmarkSet rigid(const LandmarkSet& l, const Matrix3& r, const Vector3& t) {
  LandmarkSet out;
  out.points = (l.points * r.transpose()).rowwise() + t.transpose();
  return out;
}

inline Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = n(rng);
  return m;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("robohead_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline CollectionProtocol small_protocol(int n = 60, std::uint64_t seed = 0) {
  CollectionProtocol p;
  p.n_target_frames = n;
  p.rng_seed = seed;
  return p;
}

}  // namespace robohead::testing
