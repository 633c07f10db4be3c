#pragma once

// Fitted retargeting pipelines and their end uses: FACS-based expression
// synthesis and human-to-robot mapping, one frame at a time or as a stream.

#include <nlohmann/json.hpp>

#include <deque>
#include <filesystem>
#include <fstream>
#include <optional>
#include <variant>

#include "robohead/dataset.hpp"
#include "robohead/features.hpp"
#include "robohead/learn/grid_search.hpp"
#include "robohead/learn/linear.hpp"
#include "robohead/learn/pca.hpp"

namespace robohead {

enum class RegressorKind { ols, ridge, mlp };

inline std::string to_string(RegressorKind r) {
  switch (r) {
    case RegressorKind::ols: return "ols";
    case RegressorKind::ridge: return "ridge";
    case RegressorKind::mlp: return "mlp";
  }
  return "?";
}

inline RegressorKind regressor_from_string(const std::string& s) {
  if (s == "ols" || s == "lr") return RegressorKind::ols;
  if (s == "ridge") return RegressorKind::ridge;
  if (s == "mlp") return RegressorKind::mlp;
  throw InvalidArgument("unknown regressor '" + s + "' (expected ols, ridge or mlp)");
}

struct PipelineModel {
  FeatureKind kind = FeatureKind::au;
  std::vector<int> feature_mask;  // kept feature columns; empty keeps all
  MinMaxStats robot_stats;        // over the training rows, all columns
  std::optional<MinMaxStats> human_stats;
  std::optional<learn::PcaModel> pca;
  std::variant<learn::LinearModel, learn::MlpModel> regressor;
  LandmarkSet neutral_reference;
  double clip_min = 0.0;
  double clip_max = 255.0;
  nlohmann::json provenance = nlohmann::json::object();

  Eigen::Index regressor_inputs() const {
    return std::visit([](const auto& r) -> Eigen::Index {
      if constexpr (std::is_same_v<std::decay_t<decltype(r)>, learn::LinearModel>)
        return r.weights.cols();
      else
        return r.inputs();
    }, regressor);
  }
};

namespace detail {

inline Eigen::MatrixXd select_columns(const Eigen::Ref<const Eigen::MatrixXd>& x, const std::vector<int>& mask) {
  if (mask.empty()) return x;
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(mask.size()));
  for (std::size_t c = 0; c < mask.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = x.col(mask[c]);
  return out;
}

}  // namespace detail

/// Raw regressor output (0-255 scale, unrounded) for rows of full-width
/// robot-space features.
inline Eigen::MatrixXd predict_real(const PipelineModel& m, const Eigen::Ref<const Eigen::MatrixXd>& features) {
  if (features.cols() != static_cast<Eigen::Index>(feature_dim(m.kind)))
    throw InvalidArgument("pipeline expects " + std::to_string(feature_dim(m.kind)) + " feature columns");
  Eigen::MatrixXd x = detail::select_columns(features, m.feature_mask);
  if (m.pca) x = learn::pca_transform(*m.pca, x);
  return std::visit([&](const auto& r) { return Eigen::MatrixXd(r.predict(x)); }, m.regressor);
}

inline ActuatorCommand predict_command(const PipelineModel& m, const Eigen::Ref<const Eigen::VectorXd>& features) {
  Eigen::VectorXd y = predict_real(m, features.transpose()).row(0).transpose();
  return ActuatorCommand::from_real(y.cwiseMax(m.clip_min).cwiseMin(m.clip_max));
}

// ---------------------------------------------------------------------------
// Fitting

struct FitOptions {
  FeatureKind kind = FeatureKind::au;
  RegressorKind regressor = RegressorKind::ols;
  int pca_k = 0;  // 0 = no PCA
  double ridge_lambda = 1.0;
  std::vector<int> feature_mask;
  learn::HyperGrid grid;       // for mlp
  double validation_fraction = 0.2;
  bool refit = true;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

struct FitResult {
  PipelineModel model;
  std::vector<learn::LeaderboardEntry> leaderboard;  // mlp only
};

inline FitResult fit_pipeline(const Dataset& train, const FitOptions& opt) {
  if (train.size() < 3) throw InvalidArgument("fit_pipeline: need at least 3 training rows");
  FitResult out;
  PipelineModel& m = out.model;
  m.kind = opt.kind;
  m.feature_mask = opt.feature_mask;
  m.neutral_reference = train.neutral_reference;
  const Eigen::MatrixXd full = train.features(opt.kind);
  const Eigen::MatrixXd y = train.commands();
  m.robot_stats = fit_minmax(opt.kind, full);

  for (int c : m.feature_mask)
    if (c < 0 || c >= full.cols()) throw InvalidArgument("feature mask index out of range");
  Eigen::MatrixXd x = detail::select_columns(full, m.feature_mask);
  if (opt.pca_k > 0) {
    m.pca = learn::pca_fit(x, opt.pca_k);
    // Components with no variance would only make the regression singular.
    if (auto r = learn::pca_numerical_rank(*m.pca); r >= 1 && r < m.pca->k()) m.pca = learn::pca_truncate(*m.pca, r);
    x = learn::pca_transform(*m.pca, x);
  }

  switch (opt.regressor) {
    case RegressorKind::ols: m.regressor = learn::ols_fit(x, y); break;
    case RegressorKind::ridge: m.regressor = learn::ridge_fit(x, y, opt.ridge_lambda); break;
    case RegressorKind::mlp: {
      std::vector<std::size_t> rows(train.size());
      std::iota(rows.begin(), rows.end(), std::size_t{0});
      Rng rng(opt.seed);
      std::shuffle(rows.begin(), rows.end(), rng);
      auto n_val = std::clamp<std::size_t>(std::size_t(std::lround(double(rows.size()) * opt.validation_fraction)), 1,
                                           rows.size() - 1);
      std::vector<std::size_t> val(rows.begin(), rows.begin() + std::ptrdiff_t(n_val));
      std::vector<std::size_t> fit(rows.begin() + std::ptrdiff_t(n_val), rows.end());
      std::sort(val.begin(), val.end());
      std::sort(fit.begin(), fit.end());
      auto take = [](const Eigen::MatrixXd& a, const std::vector<std::size_t>& r) {
        Eigen::MatrixXd o(static_cast<Eigen::Index>(r.size()), a.cols());
        for (std::size_t i = 0; i < r.size(); ++i) o.row(Eigen::Index(i)) = a.row(Eigen::Index(r[i]));
        return o;
      };
      auto res = learn::grid_search(take(x, fit), take(y, fit), take(x, val), take(y, val), opt.grid, opt.jobs);
      // The winning grid point is retrained on every training row.
      learn::MlpModel best = opt.refit ? learn::mlp_fit(x, y, res.best.hyper) : std::move(res.best);
      best.clip_min = m.clip_min;
      best.clip_max = m.clip_max;
      m.regressor = std::move(best);
      out.leaderboard = std::move(res.leaderboard);
      break;
    }
  }
  m.provenance = {{"head_config_hash", train.head_config_hash},
                  {"dataset_seed", train.protocol.rng_seed},
                  {"training_rows", train.size()},
                  {"fit_seed", opt.seed},
                  {"regressor", to_string(opt.regressor)},
                  {"pca_k", opt.pca_k},
                  {"pca_k_effective", m.pca ? m.pca->k() : 0}};
  return out;
}

// ---------------------------------------------------------------------------
// FACS expressions

struct EmotionSpec {
  std::string name;
  std::vector<int> maximized_aus;
};

/// The six basic emotions with the AU sets maximized for each.
inline const std::vector<EmotionSpec>& builtin_emotions() {
  static const std::vector<EmotionSpec> specs{
      {"anger", {4, 7, 23}},           {"disgust", {9, 15}}, {"fear", {1, 2, 4, 5, 7, 20, 26}},
      {"happy", {6, 12}},              {"sadness", {1, 4, 15}}, {"surprise", {1, 2, 5, 26}}};
  return specs;
}

inline const EmotionSpec& emotion(const std::string& name) {
  for (const auto& e : builtin_emotions())
    if (e.name == name) return e;
  throw InvalidArgument("unknown emotion '" + name + "' (expected anger, disgust, fear, happy, sadness or surprise)");
}

enum class FillMode { min_fill, zero_fill };

/// Maximized AUs at their training maximum; the rest at the training minimum
/// (min_fill) or zero (zero_fill).
inline AUVector facs_target(const EmotionSpec& e, const MinMaxStats& train_stats, FillMode fill = FillMode::min_fill) {
  if (train_stats.kind != FeatureKind::au || train_stats.dim() != kNumAus)
    throw InvalidArgument("facs_target: training stats must cover all 17 AUs");
  AUVector out;
  for (std::size_t a = 0; a < kNumAus; ++a) out[a] = fill == FillMode::min_fill ? train_stats.min[a] : 0.0;
  for (int au : e.maximized_aus) {
    const int idx = au_index(au);
    if (idx < 0) throw InvalidArgument("emotion " + e.name + " maximizes unknown AU " + std::to_string(au));
    out[idx] = train_stats.max[idx];
  }
  return out;
}

inline ActuatorCommand express(const PipelineModel& m, const AUVector& au_target) {
  if (m.kind != FeatureKind::au) throw ConfigError("express needs an AU model, got a " + to_string(m.kind) + " model");
  return predict_command(m, au_target);
}

// ---------------------------------------------------------------------------
// Human retargeting

/// Robot-frame features of a human frame, before distribution matching.
inline Eigen::VectorXd human_features(const PipelineModel& m, const HumanFrame& f) {
  if (m.kind == FeatureKind::au) return f.aus;
  if (!f.landmarks.all_finite()) throw InvalidArgument("human frame has non-finite landmarks");
  const LandmarkSet aligned = procrustes_align(derotate(f.landmarks, f.pose), m.neutral_reference).aligned;
  if (m.kind == FeatureKind::landmarks) return aligned.flatten();
  return pairwise_distances(aligned);
}

/// Fits the human-side MinMax statistics from a calibration recording.
inline PipelineModel calibrate_human(PipelineModel m, std::span<const HumanFrame> frames) {
  if (frames.size() < 2) throw InvalidArgument("calibration needs at least two human frames");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(frames.size()), static_cast<Eigen::Index>(feature_dim(m.kind)));
  for (std::size_t r = 0; r < frames.size(); ++r) x.row(Eigen::Index(r)) = human_features(m, frames[r]).transpose();
  m.human_stats = fit_minmax(m.kind, x);
  return m;
}

inline ActuatorCommand retarget_frame(const PipelineModel& m, const HumanFrame& frame) {
  if (!m.human_stats) throw CalibrationRequired("model has no human MinMax statistics; run calibrate-human first");
  const Eigen::VectorXd robot = minmax_map(human_features(m, frame), *m.human_stats, m.robot_stats);
  return predict_command(m, robot);
}

/// Stateful reenactment: trailing moving average over commands; frames below
/// the confidence threshold repeat the previous command (neutral before the
/// first accepted frame).
class Reenactor {
 public:
  Reenactor(const PipelineModel& model, int smoothing_window, double min_confidence = kDefaultMinConfidence)
      : model_(model), window_(smoothing_window), min_confidence_(min_confidence) {
    if (smoothing_window < 1) throw InvalidArgument("smoothing window must be >= 1");
  }

  ActuatorCommand push(const HumanFrame& f) {
    if (f.confidence < min_confidence_) return last_;
    recent_.push_back(retarget_frame(model_, f));
    while (recent_.size() > static_cast<std::size_t>(window_)) recent_.pop_front();
    std::array<double, kNumChannels> mean{};
    for (const auto& c : recent_)
      for (std::size_t i = 0; i < kNumChannels; ++i) mean[i] += c[i];
    for (auto& v : mean) v /= double(recent_.size());
    last_ = ActuatorCommand::from_real(mean);
    return last_;
  }

 private:
  const PipelineModel& model_;
  int window_;
  double min_confidence_;
  std::deque<ActuatorCommand> recent_;
  ActuatorCommand last_ = ActuatorCommand::neutral();
};

inline std::vector<ActuatorCommand> stream(const PipelineModel& m, std::span<const HumanFrame> frames,
                                           int smoothing_window = 1, double min_confidence = kDefaultMinConfidence) {
  Reenactor r(m, smoothing_window, min_confidence);
  std::vector<ActuatorCommand> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(r.push(f));
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

inline constexpr int kModelVersion = 1;

namespace detail {

inline nlohmann::json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Eigen::VectorXd json_vec(const nlohmann::json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
}

inline nlohmann::json mat_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_json(m.row(r).transpose()));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

inline Eigen::MatrixXd json_mat(const nlohmann::json& j) {
  Eigen::MatrixXd m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const auto& data = j.at("data");
  if (data.size() != std::size_t(m.rows())) throw FormatError("matrix row count mismatch");
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto v = json_vec(data[std::size_t(r)]);
    if (v.size() != m.cols()) throw FormatError("matrix column count mismatch");
    m.row(r) = v.transpose();
  }
  return m;
}

inline nlohmann::json stats_json(const MinMaxStats& s) {
  return {{"kind", to_string(s.kind)}, {"min", vec_json(s.min)}, {"max", vec_json(s.max)}};
}

inline MinMaxStats json_stats(const nlohmann::json& j) {
  return {feature_kind_from_string(j.at("kind").get<std::string>()), json_vec(j.at("min")), json_vec(j.at("max"))};
}

}  // namespace detail

inline nlohmann::json to_json(const PipelineModel& m) {
  using namespace detail;
  nlohmann::json j = {{"format", "robohead.model"},
                      {"version", kModelVersion},
                      {"kind", to_string(m.kind)},
                      {"feature_mask", m.feature_mask},
                      {"robot_stats", stats_json(m.robot_stats)},
                      {"human_stats", m.human_stats ? stats_json(*m.human_stats) : nlohmann::json(nullptr)},
                      {"neutral_reference", landmarks_to_json(m.neutral_reference)},
                      {"clip", {m.clip_min, m.clip_max}},
                      {"provenance", m.provenance}};
  if (m.pca)
    j["pca"] = {{"mean", vec_json(m.pca->mean)},
                {"components", mat_json(m.pca->components)},
                {"explained_variance_ratio", vec_json(m.pca->explained_variance_ratio)}};
  else
    j["pca"] = nullptr;
  if (const auto* lin = std::get_if<learn::LinearModel>(&m.regressor)) {
    j["regressor"] = {{"type", "linear"},
                      {"weights", mat_json(lin->weights)},
                      {"intercept", vec_json(lin->intercept)},
                      {"ridge_lambda", lin->ridge_lambda}};
  } else {
    const auto& mlp = std::get<learn::MlpModel>(m.regressor);
    auto layers = nlohmann::json::array();
    for (std::size_t l = 0; l < mlp.weights.size(); ++l)
      layers.push_back({{"weights", mat_json(mlp.weights[l])}, {"bias", vec_json(mlp.biases[l])}});
    j["regressor"] = {{"type", "mlp"},
                      {"activation", learn::to_string(mlp.activation)},
                      {"layers", layers},
                      {"input_mean", vec_json(mlp.input_mean)},
                      {"input_scale", vec_json(mlp.input_scale)},
                      {"output_scale", mlp.output_scale},
                      {"clip", {mlp.clip_min, mlp.clip_max}},
                      {"final_loss", mlp.final_loss},
                      {"hyper",
                       {{"hidden", mlp.hyper.hidden},
                        {"learning_rate", mlp.hyper.learning_rate},
                        {"l2", mlp.hyper.l2},
                        {"epochs", mlp.hyper.epochs},
                        {"seed", mlp.hyper.seed}}}};
  }
  return j;
}

inline PipelineModel pipeline_from_json(const nlohmann::json& j) {
  using namespace detail;
  try {
    if (j.value("format", std::string{}) != "robohead.model") throw FormatError("not a robohead model");
    if (j.at("version").get<int>() != kModelVersion)
      throw UnsupportedVersion("unsupported model version " + j.at("version").dump());
    PipelineModel m;
    m.kind = feature_kind_from_string(j.at("kind").get<std::string>());
    m.feature_mask = j.at("feature_mask").get<std::vector<int>>();
    m.robot_stats = json_stats(j.at("robot_stats"));
    if (!j.at("human_stats").is_null()) m.human_stats = json_stats(j.at("human_stats"));
    m.neutral_reference = landmarks_from_json(j.at("neutral_reference"));
    m.clip_min = j.at("clip").at(0).get<double>();
    m.clip_max = j.at("clip").at(1).get<double>();
    m.provenance = j.value("provenance", nlohmann::json::object());
    if (!j.at("pca").is_null()) {
      learn::PcaModel p;
      p.mean = json_vec(j.at("pca").at("mean"));
      p.components = json_mat(j.at("pca").at("components"));
      p.explained_variance_ratio = json_vec(j.at("pca").at("explained_variance_ratio"));
      m.pca = std::move(p);
    }
    const auto& r = j.at("regressor");
    const auto type = r.at("type").get<std::string>();
    if (type == "linear") {
      learn::LinearModel lin;
      lin.weights = json_mat(r.at("weights"));
      lin.intercept = json_vec(r.at("intercept"));
      lin.ridge_lambda = r.value("ridge_lambda", 0.0);
      m.regressor = std::move(lin);
    } else if (type == "mlp") {
      learn::MlpModel mlp;
      mlp.activation = learn::activation_from_string(r.at("activation").get<std::string>());
      for (const auto& l : r.at("layers")) {
        mlp.weights.push_back(json_mat(l.at("weights")));
        mlp.biases.push_back(json_vec(l.at("bias")));
      }
      mlp.input_mean = json_vec(r.at("input_mean"));
      mlp.input_scale = json_vec(r.at("input_scale"));
      mlp.output_scale = r.at("output_scale").get<double>();
      mlp.clip_min = r.at("clip").at(0).get<double>();
      mlp.clip_max = r.at("clip").at(1).get<double>();
      mlp.final_loss = r.value("final_loss", 0.0);
      const auto& h = r.at("hyper");
      mlp.hyper = {h.at("hidden").get<std::vector<int>>(), mlp.activation, h.at("learning_rate").get<double>(),
                   h.at("l2").get<double>(), h.at("epochs").get<int>(), h.at("seed").get<std::uint64_t>()};
      m.regressor = std::move(mlp);
    } else {
      throw FormatError("unknown regressor type '" + type + "'");
    }
    const Eigen::Index in = m.feature_mask.empty() ? Eigen::Index(feature_dim(m.kind)) : Eigen::Index(m.feature_mask.size());
    if (m.robot_stats.dim() != feature_dim(m.kind) || (m.pca && m.pca->dim() != in) ||
        m.regressor_inputs() != (m.pca ? m.pca->k() : in))
      throw FormatError("model dimensions are inconsistent");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  }
}

inline void save_model(const PipelineModel& m, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << to_json(m).dump(1) << "\n";
  if (!out) throw FormatError("cannot write " + path.string());
}

inline PipelineModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return pipeline_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("model file is not valid JSON: " + std::string(e.what()));
  }
}

}  // namespace robohead
