#pragma once

// Dataset collection against the simulator, splitting, persistence and
// ingestion of OpenFace 2.0 CSV logs.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "robohead/features.hpp"
#include "robohead/head_sim.hpp"

namespace robohead {

enum class Role { neutral, target, interp };

inline std::string to_string(Role r) {
  switch (r) {
    case Role::neutral: return "neutral";
    case Role::target: return "target";
    case Role::interp: return "interp";
  }
  return "?";
}

inline Role role_from_string(const std::string& s) {
  if (s == "neutral") return Role::neutral;
  if (s == "target") return Role::target;
  if (s == "interp") return Role::interp;
  throw FormatError("unknown frame role '" + s + "'");
}

struct FrameRecord {
  long frame_index = 0;
  Role role = Role::target;
  ActuatorCommand command;
  LandmarkSet landmarks_aligned;
  AUVector aus = AUVector::Zero();
  Pose pose;
};

struct CollectionProtocol {
  int n_target_frames = 500;
  double neutral_fraction = 0.75;
  int interp_steps = 4;
  int au_window = 7;
  std::uint64_t rng_seed = 0;
};

/// What the recorded stream contained, including frames that never become rows.
struct StreamStats {
  long stream_length = 0;
  long neutral_frames = 0;
  long target_frames = 0;
  long interp_frames = 0;

  friend bool operator==(const StreamStats&, const StreamStats&) = default;
};

struct Dataset {
  std::vector<FrameRecord> records;  // targets only
  CollectionProtocol protocol;
  StreamStats stream;
  std::string head_config_hash;
  LandmarkSet neutral_reference;

  std::size_t size() const { return records.size(); }

  Eigen::MatrixXd features(FeatureKind kind) const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(feature_dim(kind)));
    for (std::size_t r = 0; r < records.size(); ++r) {
      const auto row = static_cast<Eigen::Index>(r);
      switch (kind) {
        case FeatureKind::au: m.row(row) = records[r].aus.transpose(); break;
        case FeatureKind::landmarks: m.row(row) = records[r].landmarks_aligned.flatten().transpose(); break;
        case FeatureKind::distances: m.row(row) = pairwise_distances(records[r].landmarks_aligned).transpose(); break;
      }
    }
    return m;
  }

  /// Commands as reals on the 0-255 scale, channel order kChannelIds.
  Eigen::MatrixXd commands() const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(kNumChannels));
    for (std::size_t r = 0; r < records.size(); ++r)
      for (std::size_t c = 0; c < kNumChannels; ++c)
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = records[r].command[c];
    return m;
  }

  Dataset subset(std::span<const std::size_t> rows) const {
    Dataset d = *this;
    d.records.clear();
    for (auto r : rows) d.records.push_back(records.at(r));
    return d;
  }
};

// ---------------------------------------------------------------------------
// Collection

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t salt) {
  std::seed_seq seq{std::uint32_t(a), std::uint32_t(a >> 32), std::uint32_t(b), std::uint32_t(b >> 32),
                    std::uint32_t(salt)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (std::uint64_t(out[0]) << 32) | out[1];
}

struct StreamFrame {
  ActuatorCommand command;
  Role role;
  int expression = -1;
};

}  // namespace detail

inline long neutral_frame_count(const CollectionProtocol& p) {
  return std::lround(p.n_target_frames * p.neutral_fraction / (1.0 - p.neutral_fraction));
}

/// Runs the recording protocol on the simulator. Per target expression the
/// stream holds a neutral block, the target for `au_window` frames, then
/// `interp_steps` frames toward whatever comes next. AUs are averaged over the
/// hold; landmarks come from its last frame after pose removal and Procrustes
/// alignment to the mean neutral face.
inline Dataset collect(const HeadConfig& head, const CollectionProtocol& protocol) {
  validate(head);
  if (protocol.n_target_frames < 1) throw ProtocolError("protocol needs at least one target frame");
  if (!(protocol.neutral_fraction >= 0.0 && protocol.neutral_fraction < 1.0))
    throw ProtocolError("neutral fraction must be in [0, 1)");
  if (protocol.interp_steps < 0) throw ProtocolError("interpolation steps must be >= 0");
  if (protocol.au_window < 1) throw ProtocolError("AU window must be >= 1");
  if (head.sensor_lag_frames >= protocol.au_window)
    throw ProtocolError("sensor lag must be shorter than the AU window");

  const int n = protocol.n_target_frames;
  const long total_neutral = neutral_frame_count(protocol);

  Rng command_rng(detail::mix_seed(protocol.rng_seed, 0, 1));
  std::vector<ActuatorCommand> targets;
  targets.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) targets.push_back(random_command(command_rng));

  std::vector<detail::StreamFrame> plan;
  auto neutral_block = [&](int i) { return (long(i) + 1) * total_neutral / n - long(i) * total_neutral / n; };
  for (int i = 0; i < n; ++i) {
    for (long k = 0; k < neutral_block(i); ++k) plan.push_back({ActuatorCommand::neutral(), Role::neutral});
    for (int k = 0; k < protocol.au_window; ++k) plan.push_back({targets[std::size_t(i)], Role::target, i});
    if (i + 1 < n) {
      const ActuatorCommand next = neutral_block(i + 1) > 0 ? ActuatorCommand::neutral() : targets[std::size_t(i) + 1];
      for (const auto& c : interpolate_commands(targets[std::size_t(i)], next, protocol.interp_steps))
        plan.push_back({c, Role::interp});
    }
  }

  SimState sim(detail::mix_seed(head.rng_seed, protocol.rng_seed, 2));
  std::vector<ObservedFrame> observed;
  observed.reserve(plan.size());
  Dataset d;
  d.protocol = protocol;
  d.head_config_hash = config_hash(head);
  for (std::size_t t = 0; t < plan.size(); ++t) {
    observed.push_back(observe(head, plan[t].command, long(t), sim));
    auto& s = d.stream;
    ++s.stream_length;
    if (plan[t].role == Role::neutral) ++s.neutral_frames;
    if (plan[t].role == Role::target) ++s.target_frames;
    if (plan[t].role == Role::interp) ++s.interp_frames;
  }

  std::vector<LandmarkSet> derotated(plan.size());
  Points neutral_sum = Points::Zero();
  for (std::size_t t = 0; t < plan.size(); ++t) {
    derotated[t] = derotate(observed[t].landmarks_observed, observed[t].pose);
    if (plan[t].role == Role::neutral) neutral_sum += derotated[t].points;
  }
  if (d.stream.neutral_frames > 0) {
    d.neutral_reference.points = neutral_sum / double(d.stream.neutral_frames);
  } else {
    d.neutral_reference = head.neutral_landmarks;
  }
  d.neutral_reference.points.rowwise() -= d.neutral_reference.points.colwise().mean();

  DistanceVector baseline = DistanceVector::Zero(kNumPairs);
  std::vector<LandmarkSet> aligned(plan.size());
  for (std::size_t t = 0; t < plan.size(); ++t) {
    if (plan[t].role == Role::interp) continue;
    aligned[t] = procrustes_align(derotated[t], d.neutral_reference).aligned;
    if (plan[t].role == Role::neutral) baseline += pairwise_distances(aligned[t]);
  }
  if (d.stream.neutral_frames > 0)
    baseline /= double(d.stream.neutral_frames);
  else
    baseline = pairwise_distances(d.neutral_reference);

  Rng au_rng(detail::mix_seed(head.rng_seed, protocol.rng_seed, 3));
  std::size_t t = 0;
  while (t < plan.size()) {
    if (plan[t].role != Role::target) {
      ++t;
      continue;
    }
    const std::size_t start = t;
    Eigen::MatrixXd hold(protocol.au_window, static_cast<Eigen::Index>(kNumAus));
    for (int k = 0; k < protocol.au_window; ++k, ++t)
      hold.row(k) = extract_aus(head.au_defs, aligned[t], baseline, au_rng).transpose();
    const std::size_t last = t - 1;
    FrameRecord rec;
    rec.frame_index = long(last);
    rec.role = Role::target;
    rec.command = plan[start].command;
    rec.landmarks_aligned = aligned[last];
    rec.aus = window_average(hold, protocol.au_window).row(0).transpose();
    rec.pose = observed[last].pose;
    d.records.push_back(std::move(rec));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Splitting

struct Split {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

/// Seeded shuffle, then the first round(n * test_fraction) shuffled rows form
/// the test set. Each part keeps ascending row order.
inline Split split(const Dataset& d, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidArgument("test fraction must be in (0, 1)");
  if (d.size() < 2) throw InvalidArgument("need at least two rows to split");
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  auto n_test = static_cast<std::size_t>(std::lround(double(d.size()) * test_fraction));
  n_test = std::clamp<std::size_t>(n_test, 1, d.size() - 1);
  Split s;
  s.test_rows.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train_rows.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  std::sort(s.test_rows.begin(), s.test_rows.end());
  std::sort(s.train_rows.begin(), s.train_rows.end());
  s.train = d.subset(s.train_rows);
  s.test = d.subset(s.test_rows);
  return s;
}

// ---------------------------------------------------------------------------
// OpenFace 2.0 CSV

struct HumanFrame {
  LandmarkSet landmarks;
  AUVector aus = AUVector::Zero();
  Pose pose;
  double timestamp = 0.0;
  double confidence = 1.0;
};

namespace detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) cells.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (*b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

}  // namespace detail

inline std::vector<std::string> openface_required_columns() {
  std::vector<std::string> cols;
  for (const char* axis : {"X_", "Y_", "Z_"})
    for (std::size_t i = 0; i < kNumLandmarks; ++i) cols.push_back(axis + std::to_string(i));
  for (int au : kAuIds) cols.push_back(au_name(au) + "_r");
  for (const char* p : {"pose_Tx", "pose_Ty", "pose_Tz", "pose_Rx", "pose_Ry", "pose_Rz"}) cols.emplace_back(p);
  cols.emplace_back("timestamp");
  cols.emplace_back("confidence");
  return cols;
}

/// Incremental reader over an OpenFace CSV stream. Does not filter by
/// confidence; callers apply their own policy.
class OpenFaceCsvReader {
 public:
  explicit OpenFaceCsvReader(std::istream& in) : in_(in) {
    std::string header;
    if (!std::getline(in_, header)) throw FormatError("OpenFace CSV: missing header row");
    line_ = 1;
    const auto names = detail::split_csv_line(header);
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < names.size(); ++i) pos.emplace(names[i], i);
    std::string missing;
    for (const auto& c : openface_required_columns()) {
      auto it = pos.find(c);
      if (it == pos.end()) {
        missing += (missing.empty() ? "" : ", ") + c;
      } else {
        columns_.push_back(it->second);
      }
    }
    if (!missing.empty()) throw FormatError("OpenFace CSV: missing required columns: " + missing);
    width_ = names.size();
  }

  /// Next data row, or nullopt at end of input. Blank lines are skipped.
  std::optional<HumanFrame> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (detail::trim(line).empty()) continue;
      return parse(line);
    }
    return std::nullopt;
  }

  long line() const { return line_; }

 private:
  HumanFrame parse(const std::string& line) const {
    const auto cells = detail::split_csv_line(line);
    if (cells.size() < width_)
      throw FormatError("OpenFace CSV line " + std::to_string(line_) + ": expected " + std::to_string(width_) +
                        " cells, got " + std::to_string(cells.size()));
    std::vector<double> v(columns_.size());
    const auto names = openface_required_columns();
    for (std::size_t k = 0; k < columns_.size(); ++k)
      if (!detail::parse_double(cells[columns_[k]], v[k]))
        throw FormatError("OpenFace CSV line " + std::to_string(line_) + ": cannot parse column " + names[k] +
                          " value '" + cells[columns_[k]] + "'");
    HumanFrame f;
    std::size_t k = 0;
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t i = 0; i < kNumLandmarks; ++i) f.landmarks.points(i, a) = v[k++];
    for (std::size_t a = 0; a < kNumAus; ++a) f.aus[a] = v[k++];
    for (int a = 0; a < 3; ++a) f.pose.translation[a] = v[k++];
    for (int a = 0; a < 3; ++a) f.pose.rotation[a] = v[k++];
    f.timestamp = v[k++];
    f.confidence = v[k++];
    return f;
  }

  std::istream& in_;
  std::vector<std::size_t> columns_;
  std::size_t width_ = 0;
  long line_ = 0;
};

struct IngestResult {
  std::vector<HumanFrame> frames;
  std::size_t dropped = 0;
};

inline constexpr double kDefaultMinConfidence = 0.8;

inline IngestResult ingest_openface_csv(std::istream& in, double min_confidence = kDefaultMinConfidence) {
  OpenFaceCsvReader reader(in);
  IngestResult out;
  while (auto f = reader.next()) {
    if (f->confidence < min_confidence)
      ++out.dropped;
    else
      out.frames.push_back(std::move(*f));
  }
  return out;
}

inline IngestResult ingest_openface_csv(const std::filesystem::path& path,
                                        double min_confidence = kDefaultMinConfidence) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return ingest_openface_csv(in, min_confidence);
}

// ---------------------------------------------------------------------------
// Persistence: <dir>/metadata.json, <dir>/frames.csv, <dir>/poses.csv

inline constexpr int kDatasetVersion = 1;

namespace detail {

inline std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw CorruptionError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) throw FormatError("cannot write " + p.string());
}

inline nlohmann::json protocol_to_json(const CollectionProtocol& p) {
  return {{"n_target_frames", p.n_target_frames},
          {"neutral_fraction", p.neutral_fraction},
          {"interp_steps", p.interp_steps},
          {"au_window", p.au_window},
          {"rng_seed", p.rng_seed}};
}

inline CollectionProtocol protocol_from_json(const nlohmann::json& j) {
  return {j.at("n_target_frames").get<int>(), j.at("neutral_fraction").get<double>(),
          j.at("interp_steps").get<int>(), j.at("au_window").get<int>(), j.at("rng_seed").get<std::uint64_t>()};
}

}  // namespace detail

inline std::string frames_csv_header() {
  std::string h = "frame_id,role";
  for (int c : kChannelIds) h += ",a" + std::to_string(c);
  for (const char* axis : {"X_", "Y_", "Z_"})
    for (std::size_t i = 0; i < kNumLandmarks; ++i) h += std::string(",") + axis + std::to_string(i);
  for (int au : kAuIds) h += "," + au_name(au);
  return h;
}

inline void save_dataset(const Dataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string frames = frames_csv_header() + "\n";
  std::string poses = "frame_id,pose_Rx,pose_Ry,pose_Rz,pose_Tx,pose_Ty,pose_Tz\n";
  for (const auto& r : d.records) {
    std::string line = std::to_string(r.frame_index) + "," + to_string(r.role);
    for (std::size_t c = 0; c < kNumChannels; ++c) line += "," + std::to_string(r.command[c]);
    const auto flat = r.landmarks_aligned.flatten();
    for (Eigen::Index k = 0; k < flat.size(); ++k) line += "," + detail::fmt_real(flat[k]);
    for (std::size_t a = 0; a < kNumAus; ++a) line += "," + detail::fmt_real(r.aus[a]);
    frames += line + "\n";
    std::string p = std::to_string(r.frame_index);
    for (int a = 0; a < 3; ++a) p += "," + detail::fmt_real(r.pose.rotation[a]);
    for (int a = 0; a < 3; ++a) p += "," + detail::fmt_real(r.pose.translation[a]);
    poses += p + "\n";
  }
  nlohmann::json meta = {{"format", "robohead.dataset"},
                         {"version", kDatasetVersion},
                         {"rows", d.records.size()},
                         {"frames_checksum", hex64(fnv1a(frames))},
                         {"poses_checksum", hex64(fnv1a(poses))},
                         {"head_config_hash", d.head_config_hash},
                         {"protocol", detail::protocol_to_json(d.protocol)},
                         {"stream",
                          {{"stream_length", d.stream.stream_length},
                           {"neutral_frames", d.stream.neutral_frames},
                           {"target_frames", d.stream.target_frames},
                           {"interp_frames", d.stream.interp_frames}}},
                         {"neutral_reference", landmarks_to_json(d.neutral_reference)}};
  detail::write_file(dir / "frames.csv", frames);
  detail::write_file(dir / "poses.csv", poses);
  detail::write_file(dir / "metadata.json", meta.dump(2) + "\n");
}

struct LoadedDataset {
  Dataset dataset;
  std::vector<std::string> warnings;
};

/// Loads a dataset directory. Checksums and row counts are verified before
/// anything is returned. If `current_head_hash` is given and differs from the
/// recorded one, a warning is added.
inline LoadedDataset load_dataset(const std::filesystem::path& dir,
                                  const std::optional<std::string>& current_head_hash = std::nullopt) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(detail::read_file(dir / "metadata.json"));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError("dataset metadata is not valid JSON: " + std::string(e.what()));
  }
  try {
    if (meta.value("format", std::string{}) != "robohead.dataset") throw FormatError("not a robohead dataset");
    const int version = meta.at("version").get<int>();
    if (version != kDatasetVersion)
      throw UnsupportedVersion("unsupported dataset version " + std::to_string(version) + " (expected " +
                               std::to_string(kDatasetVersion) + ")");
    const std::string frames = detail::read_file(dir / "frames.csv");
    const std::string poses = detail::read_file(dir / "poses.csv");
    if (hex64(fnv1a(frames)) != meta.at("frames_checksum").get<std::string>() ||
        hex64(fnv1a(poses)) != meta.at("poses_checksum").get<std::string>())
      throw CorruptionError("dataset files do not match their recorded checksums (truncated or modified)");

    LoadedDataset out;
    Dataset& d = out.dataset;
    d.protocol = detail::protocol_from_json(meta.at("protocol"));
    d.head_config_hash = meta.at("head_config_hash").get<std::string>();
    const auto& s = meta.at("stream");
    d.stream = {s.at("stream_length").get<long>(), s.at("neutral_frames").get<long>(),
                s.at("target_frames").get<long>(), s.at("interp_frames").get<long>()};
    d.neutral_reference = landmarks_from_json(meta.at("neutral_reference"));

    std::istringstream fin(frames), pin(poses);
    std::string line, pline;
    std::getline(fin, line);
    if (detail::trim(line) != frames_csv_header()) throw CorruptionError("frames.csv header does not match");
    std::getline(pin, pline);
    long lineno = 1;
    while (std::getline(fin, line)) {
      ++lineno;
      if (!std::getline(pin, pline)) throw CorruptionError("poses.csv has fewer rows than frames.csv");
      const auto cells = detail::split_csv_line(line);
      const auto pcells = detail::split_csv_line(pline);
      const std::size_t expect = 2 + kNumChannels + 3 * kNumLandmarks + kNumAus;
      if (cells.size() != expect || pcells.size() != 7)
        throw CorruptionError("frames.csv line " + std::to_string(lineno) + " has the wrong number of cells");
      auto num = [&](const std::string& cell) {
        double v;
        if (!detail::parse_double(cell, v))
          throw CorruptionError("frames.csv line " + std::to_string(lineno) + ": bad number '" + cell + "'");
        return v;
      };
      FrameRecord r;
      r.frame_index = std::stol(cells[0]);
      r.role = role_from_string(cells[1]);
      std::array<int, kNumChannels> cmd{};
      for (std::size_t c = 0; c < kNumChannels; ++c) cmd[c] = static_cast<int>(num(cells[2 + c]));
      r.command = ActuatorCommand(cmd);
      Eigen::VectorXd flat(3 * kNumLandmarks);
      for (Eigen::Index k = 0; k < flat.size(); ++k) flat[k] = num(cells[2 + kNumChannels + std::size_t(k)]);
      r.landmarks_aligned = LandmarkSet::unflatten(flat);
      for (std::size_t a = 0; a < kNumAus; ++a) r.aus[a] = num(cells[2 + kNumChannels + 3 * kNumLandmarks + a]);
      if (std::stol(pcells[0]) != r.frame_index) throw CorruptionError("poses.csv rows do not match frames.csv");
      for (int a = 0; a < 3; ++a) r.pose.rotation[a] = num(pcells[1 + std::size_t(a)]);
      for (int a = 0; a < 3; ++a) r.pose.translation[a] = num(pcells[4 + std::size_t(a)]);
      if (r.role != Role::target) throw CorruptionError("dataset contains a non-target row");
      d.records.push_back(std::move(r));
    }
    if (d.records.size() != meta.at("rows").get<std::size_t>())
      throw CorruptionError("dataset row count does not match metadata");
    if (current_head_hash && *current_head_hash != d.head_config_hash)
      out.warnings.push_back("dataset was collected with head config " + d.head_config_hash +
                             " but the current config hashes to " + *current_head_hash);
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError("dataset metadata is incomplete: " + std::string(e.what()));
  } catch (const InvalidCommand& e) {
    throw CorruptionError(std::string("dataset contains an invalid command: ") + e.what());
  }
}

}  // namespace robohead
