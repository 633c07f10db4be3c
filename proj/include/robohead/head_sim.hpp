#pragma once

// Deterministic parametric simulator of the android head: a linear
// blendshape model from actuator commands to 68 3D landmarks, observed
// through Gaussian tracker noise and a random head pose.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "robohead/features.hpp"
#include "robohead/types.hpp"

namespace robohead {

// Mirror partner of each landmark under x -> -x (standard 68-point layout).
inline constexpr std::array<int, kNumLandmarks> kMirrorIndex{
    16, 15, 14, 13, 12, 11, 10, 9,  8,  7,  6,  5,  4,  3,  2,  1,  0,   // jaw
    26, 25, 24, 23, 22, 21, 20, 19, 18, 17,                              // brows
    27, 28, 29, 30,                                                      // nose bridge
    35, 34, 33, 32, 31,                                                  // nostrils
    45, 44, 43, 42, 47, 46, 39, 38, 37, 36, 41, 40,                      // eyes
    54, 53, 52, 51, 50, 49, 48, 59, 58, 57, 56, 55,                      // outer lip
    64, 63, 62, 61, 60, 67, 66, 65};                                     // inner lip

struct BasisEntry {
  int landmark = 0;
  Vector3 displacement = Vector3::Zero();  // mm at full activation
};

struct ActuatorDef {
  int id = 0;
  std::string name;
  std::vector<BasisEntry> basis;
  bool symmetric = false;
};

/// Optional interaction term: activation_a * activation_b * basis.
struct CrossTerm {
  int channel_a = 0;
  int channel_b = 0;
  std::vector<BasisEntry> basis;
};

struct PoseJitter {
  double max_rotation = 0.0;     // rad, per Euler angle
  double max_translation = 0.0;  // mm, per axis
};

struct HeadConfig {
  LandmarkSet neutral_landmarks;
  std::vector<ActuatorDef> actuators;
  std::vector<CrossTerm> cross_terms;
  double landmark_noise_sigma = 0.0;
  // Tracker depth error: per-frame Gaussian gains on smooth, low-order
  // displacement fields, in units of landmark_noise_sigma.
  double shape_noise_gain = 0.0;
  PoseJitter pose_jitter;
  int sensor_lag_frames = 0;
  std::vector<AUDef> au_defs;
  std::uint64_t rng_seed = 0;
};

/// Copy of `config` with every stochastic component switched off.
inline HeadConfig noiseless(HeadConfig config) {
  config.landmark_noise_sigma = 0.0;
  config.pose_jitter = {};
  for (auto& d : config.au_defs) d.noise_sigma = 0.0;
  return config;
}

/// The actuator's displacement field as a dense 68x3 matrix.
inline Points dense_basis(const std::vector<BasisEntry>& basis) {
  Points b = Points::Zero();
  for (const auto& e : basis) b.row(e.landmark) += e.displacement.transpose();
  return b;
}

inline const ActuatorDef& actuator(const HeadConfig& config, int channel) {
  for (const auto& a : config.actuators)
    if (a.id == channel) return a;
  throw ConfigError("head config has no actuator " + std::to_string(channel));
}

inline bool is_mirror_symmetric(const Points& p, double tol) {
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    auto m = static_cast<std::size_t>(kMirrorIndex[i]);
    if (std::abs(p(i, 0) + p(m, 0)) > tol || std::abs(p(i, 1) - p(m, 1)) > tol ||
        std::abs(p(i, 2) - p(m, 2)) > tol)
      return false;
  }
  return true;
}

/// Throws ConfigError on any violated head-config invariant.
inline void validate(const HeadConfig& config) {
  if (!config.neutral_landmarks.all_finite()) throw ConfigError("neutral landmarks must be finite");
  if (!is_mirror_symmetric(config.neutral_landmarks.points, 1e-6))
    throw ConfigError("neutral landmarks must be symmetric about the x = 0 plane");
  if (config.actuators.size() != kNumChannels)
    throw ConfigError("head config must define exactly 9 actuators");
  Eigen::Matrix<double, 3 * kNumLandmarks, kNumChannels> stacked;
  for (std::size_t i = 0; i < kNumChannels; ++i) {
    const auto& a = actuator(config, kChannelIds[i]);
    for (const auto& e : a.basis) {
      if (e.landmark < 0 || e.landmark >= int(kNumLandmarks))
        throw ConfigError("actuator " + std::to_string(a.id) + " basis references landmark " +
                          std::to_string(e.landmark));
      if (!e.displacement.allFinite()) throw ConfigError("non-finite basis entry");
    }
    Points b = dense_basis(a.basis);
    if (a.symmetric && !is_mirror_symmetric(b, 1e-9))
      throw ConfigError("actuator " + std::to_string(a.id) + " is marked symmetric but its basis is not");
    stacked.col(static_cast<Eigen::Index>(i)) = LandmarkSet{b}.flatten();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(stacked);
  qr.setThreshold(1e-10);
  if (qr.rank() != static_cast<Eigen::Index>(kNumChannels))
    throw ConfigError("actuator displacement bases are not linearly independent");
  for (const auto& t : config.cross_terms)
    if (channel_index(t.channel_a) < 0 || channel_index(t.channel_b) < 0)
      throw ConfigError("cross term references an unknown channel");
  if (!(config.landmark_noise_sigma >= 0.0) || !(config.shape_noise_gain >= 0.0) ||
      !(config.pose_jitter.max_rotation >= 0.0) || !(config.pose_jitter.max_translation >= 0.0))
    throw ConfigError("noise and jitter magnitudes must be non-negative");
  if (config.pose_jitter.max_rotation > std::numbers::pi)
    throw ConfigError("pose jitter rotation must not exceed pi");
  if (config.sensor_lag_frames < 0) throw ConfigError("sensor lag must be >= 0");
  validate_au_defs(config.au_defs);
}

/// neutral + sum_k (value_k / 255) * basis_k (+ cross terms). Noiseless, face frame.
inline LandmarkSet forward(const HeadConfig& config, const ActuatorCommand& command) {
  LandmarkSet out = config.neutral_landmarks;
  const auto act = command.activations();
  for (const auto& a : config.actuators) {
    int idx = channel_index(a.id);
    if (idx < 0) throw InvalidCommand("head config actuator " + std::to_string(a.id) + " is not a learned channel");
    for (const auto& e : a.basis) out.points.row(e.landmark) += act[idx] * e.displacement.transpose();
  }
  for (const auto& t : config.cross_terms) {
    double w = act[channel_index(t.channel_a)] * act[channel_index(t.channel_b)];
    for (const auto& e : t.basis) out.points.row(e.landmark) += w * e.displacement.transpose();
  }
  return out;
}

/// Smooth displacement fields used for correlated tracker error: depth and
/// lateral errors varying linearly and quadratically across the face.
inline std::vector<Points> tracker_error_modes(const LandmarkSet& neutral) {
  Points n = neutral.points.rowwise() - neutral.points.colwise().mean();
  const double sx = n.col(0).cwiseAbs().maxCoeff();
  const double sy = n.col(1).cwiseAbs().maxCoeff();
  Eigen::VectorXd x = n.col(0) / (sx > 0 ? sx : 1.0);
  Eigen::VectorXd y = n.col(1) / (sy > 0 ? sy : 1.0);
  std::vector<Eigen::VectorXd> fields{x.cwiseAbs2(), y.cwiseAbs2(), x.cwiseProduct(y),
                                      x.cwiseAbs2().cwiseProduct(y), y.cwiseAbs2().cwiseProduct(y),
                                      (x.array() * 3.0).cos().matrix(), (y.array() * 3.0).cos().matrix(),
                                      (x.array() * 3.0).sin().matrix().cwiseProduct(y)};
  std::vector<Points> modes;
  for (int axis : {2, 1, 0}) {
    for (const auto& f : fields) {
      Points m = Points::Zero();
      m.col(axis) = f.array() - f.mean();
      double norm = m.norm();
      if (norm > 0) modes.push_back(m * (std::sqrt(double(kNumLandmarks)) / norm));
    }
  }
  return modes;
}

struct ObservedFrame {
  ActuatorCommand command;
  LandmarkSet landmarks_observed;
  LandmarkSet landmarks_true;
  Pose pose;
  long frame_index = 0;
};

/// Mutable simulation state: one RNG stream plus the sensor-lag buffer.
struct SimState {
  Rng rng;
  std::deque<ActuatorCommand> history;

  explicit SimState(std::uint64_t seed) : rng(seed) {}
  explicit SimState(const HeadConfig& config) : rng(config.rng_seed) {}
};

/// Records one camera frame. With sensor_lag_frames = d the face shows the
/// command issued d calls earlier (the neutral command before that).
inline ObservedFrame observe(const HeadConfig& config, const ActuatorCommand& command, long frame_index,
                             SimState& state) {
  const auto lag = static_cast<std::size_t>(std::max(0, config.sensor_lag_frames));
  state.history.push_back(command);
  while (state.history.size() > lag + 1) state.history.pop_front();
  const ActuatorCommand shown =
      state.history.size() == lag + 1 ? state.history.front() : ActuatorCommand::neutral();

  ObservedFrame f;
  f.command = command;
  f.frame_index = frame_index;
  f.landmarks_true = forward(config, shown);

  std::normal_distribution<double> unit(0.0, 1.0);
  Points noise;
  for (Eigen::Index i = 0; i < noise.rows(); ++i)
    for (Eigen::Index a = 0; a < 3; ++a) noise(i, a) = config.landmark_noise_sigma * unit(state.rng);
  if (config.shape_noise_gain > 0.0) {
    for (const auto& mode : tracker_error_modes(config.neutral_landmarks))
      noise += (config.shape_noise_gain * config.landmark_noise_sigma * unit(state.rng)) * mode;
  }

  const double r = config.pose_jitter.max_rotation;
  const double t = config.pose_jitter.max_translation;
  std::uniform_real_distribution<double> rot(-r, r), trans(-t, t);
  for (int a = 0; a < 3; ++a) f.pose.rotation[a] = rot(state.rng);
  for (int a = 0; a < 3; ++a) f.pose.translation[a] = trans(state.rng);

  LandmarkSet noisy;
  noisy.points = f.landmarks_true.points + noise;
  f.landmarks_observed = apply_pose(noisy, f.pose);
  return f;
}

inline ActuatorCommand random_command(Rng& rng) {
  std::uniform_int_distribution<int> dist(0, kCommandMax);
  std::array<int, kNumChannels> v{};
  for (auto& x : v) x = dist(rng);
  return ActuatorCommand(v);
}

/// The `steps` commands strictly between a and b at fractions i / (steps + 1).
inline std::vector<ActuatorCommand> interpolate_commands(const ActuatorCommand& a, const ActuatorCommand& b,
                                                         int steps) {
  if (steps < 0) throw InvalidArgument("interpolate_commands: steps must be >= 0");
  std::vector<ActuatorCommand> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (int i = 1; i <= steps; ++i) {
    const double f = double(i) / double(steps + 1);
    std::array<double, kNumChannels> v{};
    for (std::size_t c = 0; c < kNumChannels; ++c) v[c] = a[c] + (b[c] - a[c]) * f;
    out.push_back(ActuatorCommand::from_real(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json basis_to_json(const std::vector<BasisEntry>& basis) {
  auto out = nlohmann::json::array();
  for (const auto& e : basis)
    out.push_back({e.landmark, e.displacement.x(), e.displacement.y(), e.displacement.z()});
  return out;
}

inline std::vector<BasisEntry> basis_from_json(const nlohmann::json& j) {
  std::vector<BasisEntry> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 4) throw FormatError("basis entries must be [landmark, dx, dy, dz]");
    out.push_back({e[0].get<int>(), Vector3(e[1].get<double>(), e[2].get<double>(), e[3].get<double>())});
  }
  return out;
}

inline nlohmann::json landmarks_to_json(const LandmarkSet& l) {
  auto out = nlohmann::json::array();
  for (std::size_t i = 0; i < kNumLandmarks; ++i) out.push_back({l.points(i, 0), l.points(i, 1), l.points(i, 2)});
  return out;
}

inline LandmarkSet landmarks_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != kNumLandmarks) throw FormatError("landmarks must be 68 arrays of 3 numbers");
  LandmarkSet l;
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    if (!j[i].is_array() || j[i].size() != 3) throw FormatError("landmarks must be 68 arrays of 3 numbers");
    for (std::size_t a = 0; a < 3; ++a) l.points(i, a) = j[i][a].get<double>();
  }
  return l;
}

inline nlohmann::json au_defs_to_json(const std::vector<AUDef>& defs) {
  auto out = nlohmann::json::array();
  for (const auto& d : defs) {
    auto w = nlohmann::json::array();
    for (const auto& p : d.weights) w.push_back({p.i, p.j, p.weight});
    auto c = nlohmann::json::array();
    for (const auto& x : d.crosstalk) c.push_back({x.au, x.coefficient});
    out.push_back({{"au", d.au}, {"weights", w}, {"bias", d.bias}, {"noise_sigma", d.noise_sigma}, {"crosstalk", c}});
  }
  return out;
}

inline std::vector<AUDef> au_defs_from_json(const nlohmann::json& j) {
  std::vector<AUDef> out;
  for (const auto& d : j) {
    AUDef def;
    def.au = d.at("au").get<int>();
    for (const auto& w : d.at("weights")) def.weights.push_back({w.at(0).get<int>(), w.at(1).get<int>(), w.at(2).get<double>()});
    def.bias = d.value("bias", 0.0);
    def.noise_sigma = d.value("noise_sigma", 0.0);
    if (d.contains("crosstalk"))
      for (const auto& c : d.at("crosstalk")) def.crosstalk.push_back({c.at(0).get<int>(), c.at(1).get<double>()});
    out.push_back(std::move(def));
  }
  return out;
}

inline constexpr int kHeadConfigVersion = 1;

inline nlohmann::json to_json(const HeadConfig& c) {
  auto acts = nlohmann::json::array();
  for (const auto& a : c.actuators)
    acts.push_back({{"id", a.id}, {"name", a.name}, {"basis", basis_to_json(a.basis)}, {"symmetric", a.symmetric}});
  auto cross = nlohmann::json::array();
  for (const auto& t : c.cross_terms)
    cross.push_back({{"channels", {t.channel_a, t.channel_b}}, {"basis", basis_to_json(t.basis)}});
  return {{"format", "robohead.head_config"},
          {"version", kHeadConfigVersion},
          {"neutral_landmarks", landmarks_to_json(c.neutral_landmarks)},
          {"actuators", acts},
          {"cross_terms", cross},
          {"landmark_noise_sigma", c.landmark_noise_sigma},
          {"shape_noise_gain", c.shape_noise_gain},
          {"pose_jitter", {{"max_rotation", c.pose_jitter.max_rotation}, {"max_translation", c.pose_jitter.max_translation}}},
          {"sensor_lag_frames", c.sensor_lag_frames},
          {"au_defs", au_defs_to_json(c.au_defs)},
          {"rng_seed", c.rng_seed}};
}

inline HeadConfig head_config_from_json(const nlohmann::json& j) {
  try {
    if (j.value("version", kHeadConfigVersion) != kHeadConfigVersion)
      throw UnsupportedVersion("unsupported head config version " + j.at("version").dump());
    HeadConfig c;
    c.neutral_landmarks = landmarks_from_json(j.at("neutral_landmarks"));
    for (const auto& a : j.at("actuators"))
      c.actuators.push_back({a.at("id").get<int>(), a.value("name", std::string{}), basis_from_json(a.at("basis")),
                             a.value("symmetric", false)});
    if (j.contains("cross_terms"))
      for (const auto& t : j.at("cross_terms"))
        c.cross_terms.push_back({t.at("channels").at(0).get<int>(), t.at("channels").at(1).get<int>(),
                                 basis_from_json(t.at("basis"))});
    c.landmark_noise_sigma = j.value("landmark_noise_sigma", 0.0);
    c.shape_noise_gain = j.value("shape_noise_gain", 0.0);
    if (j.contains("pose_jitter")) {
      c.pose_jitter.max_rotation = j.at("pose_jitter").value("max_rotation", 0.0);
      c.pose_jitter.max_translation = j.at("pose_jitter").value("max_translation", 0.0);
    }
    c.sensor_lag_frames = j.value("sensor_lag_frames", 0);
    c.au_defs = au_defs_from_json(j.at("au_defs"));
    c.rng_seed = j.value("rng_seed", std::uint64_t{0});
    validate(c);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed head config: ") + e.what());
  }
}

/// FNV-1a over the canonical JSON serialization.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

inline std::string config_hash(const HeadConfig& c) { return hex64(fnv1a(to_json(c).dump())); }

}  // namespace robohead
