// robohead command-line tool: simulate, collect, fit, evaluate and retarget.

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "robohead/robohead.hpp"

namespace fs = std::filesystem;
using namespace robohead;
using nlohmann::json;

#ifndef ROBOHEAD_DEFAULT_HEAD
#define ROBOHEAD_DEFAULT_HEAD ""
#endif

namespace {

constexpr const char* kHeadEnv = "ROBOHEAD_HEAD_CONFIG";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string short_real(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

std::string command_csv(const ActuatorCommand& c) {
  std::string s;
  for (std::size_t i = 0; i < kNumChannels; ++i) s += (i ? "," : "") + std::to_string(c[i]);
  return s;
}

std::string command_header() {
  std::string s;
  for (std::size_t i = 0; i < kNumChannels; ++i) s += (i ? ",a" : "a") + std::to_string(kChannelIds[i]);
  return s;
}

struct HeadSource {
  HeadConfig config;
  std::string origin;  // file path or "builtin"
};

// Explicit flag, then the environment, then the shipped file, then the
// compiled-in default.
HeadSource resolve_head(const std::string& flag) {
  std::string path = flag;
  if (path.empty())
    if (const char* env = std::getenv(kHeadEnv); env && *env) path = env;
  if (path.empty() && fs::exists(ROBOHEAD_DEFAULT_HEAD)) path = ROBOHEAD_DEFAULT_HEAD;
  if (path.empty()) return {default_head_config(), "builtin"};
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open head config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("head config " + path + " is not valid JSON: " + e.what());
  }
  return {head_config_from_json(j), path};
}

std::string file_hash(const fs::path& p) { return hex64(fnv1a(detail::read_file(p))); }

class Run {
 public:
  Run(std::string subcommand, std::vector<std::string> argv) : sub_(std::move(subcommand)), argv_(std::move(argv)) {}

  void config(const std::string& key, json value) { manifest_["config"][key] = std::move(value); }
  void seed(const std::string& key, std::uint64_t value) { manifest_["seeds"][key] = value; }
  void input(const fs::path& p) {
    if (fs::is_directory(p)) {
      for (const char* f : {"metadata.json", "frames.csv", "poses.csv"})
        if (fs::exists(p / f)) manifest_["inputs"][(p / f).string()] = file_hash(p / f);
    } else {
      manifest_["inputs"][p.string()] = file_hash(p);
    }
    inputs_.push_back(fs::weakly_canonical(p));
  }
  void output(const std::string& name) { manifest_["outputs"].push_back(name); }

  /// Prepares --out; refuses to write into an input location.
  void open(const fs::path& out) {
    out_ = fs::weakly_canonical(out);
    for (const auto& in : inputs_)
      if (in == out_ || (fs::is_regular_file(in) && in.parent_path() == out_))
        throw UsageError("--out must not be an input location: " + out.string());
    fs::create_directories(out_);
  }

  fs::path path(const std::string& name) {
    output(name);
    return out_ / name;
  }

  void write(const std::string& name, const std::string& content) { detail::write_file(path(name), content); }

  void finish() {
    if (out_.empty()) return;
    manifest_["tool"] = "robohead";
    manifest_["subcommand"] = sub_;
    manifest_["argv"] = argv_;
    manifest_["versions"] = {{"robohead", kVersion},
                             {"dataset_format", kDatasetVersion},
                             {"model_format", kModelVersion},
                             {"head_config_format", kHeadConfigVersion},
                             {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                           "." + std::to_string(EIGEN_MINOR_VERSION)},
                             {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                   std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                   std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    detail::write_file(out_ / "manifest.json", manifest_.dump(2) + "\n");
  }

  bool has_out() const { return !out_.empty(); }

 private:
  std::string sub_;
  std::vector<std::string> argv_;
  std::vector<fs::path> inputs_;
  fs::path out_;
  json manifest_ = {{"config", json::object()}, {"seeds", json::object()}, {"inputs", json::object()},
                    {"outputs", json::array()}};
};

struct GridFlags {
  std::vector<int> depths{1, 2};
  std::vector<int> widths{16, 32, 64};
  std::vector<std::string> activations{"tanh", "relu"};
  std::vector<double> learning_rates{1e-2, 1e-3};
  std::vector<double> l2s{0.0, 1e-3};
  int epochs = 2000;

  void add(CLI::App* app) {
    app->add_option("--depths", depths, "MLP hidden-layer counts")->delimiter(',')->capture_default_str();
    app->add_option("--widths", widths, "MLP hidden widths")->delimiter(',')->capture_default_str();
    app->add_option("--activations", activations, "tanh and/or relu")
        ->delimiter(',')
        ->check(CLI::IsMember({"tanh", "relu"}))
        ->capture_default_str();
    app->add_option("--learning-rates", learning_rates, "Adam step sizes")->delimiter(',')->capture_default_str();
    app->add_option("--l2", l2s, "weight decay values")->delimiter(',')->capture_default_str();
    app->add_option("--epochs", epochs, "training epochs per grid point")->check(CLI::PositiveNumber)->capture_default_str();
  }

  learn::HyperGrid grid(std::uint64_t seed) const {
    learn::HyperGrid g;
    g.depths = depths;
    g.widths = widths;
    g.activations.clear();
    for (const auto& a : activations) g.activations.push_back(learn::activation_from_string(a));
    g.learning_rates = learning_rates;
    g.l2s = l2s;
    g.epochs = epochs;
    g.seed = seed;
    return g;
  }

  json to_json() const {
    return {{"depths", depths}, {"widths", widths}, {"activations", activations},
            {"learning_rates", learning_rates}, {"l2", l2s}, {"epochs", epochs}};
  }
};

Dataset load(const fs::path& dir, Run& run) {
  run.input(dir);
  auto loaded = load_dataset(dir);
  for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << "\n";
  return std::move(loaded.dataset);
}

Dataset training_rows(const Dataset& d, double test_fraction, std::uint64_t seed, bool test_side) {
  if (test_fraction <= 0.0) return d;
  auto s = split(d, test_fraction, seed);
  return test_side ? s.test : s.train;
}

std::vector<int> au_mask_after_pruning(const Dataset& train, double threshold, std::vector<int>& pruned) {
  pruned = low_correlation_features(au_correlation(train), threshold);
  std::vector<int> mask;
  for (std::size_t a = 0; a < kNumAus; ++a)
    if (std::find(pruned.begin(), pruned.end(), kAuIds[a]) == pruned.end()) mask.push_back(int(a));
  if (mask.empty()) throw ConfigError("every AU was pruned; lower --prune");
  return mask;
}

std::string rmse_csv(const Eigen::VectorXd& r) {
  std::ostringstream s;
  s << "actuator,rmse\n" << std::fixed << std::setprecision(4);
  for (std::size_t a = 0; a < kNumChannels; ++a) s << kChannelIds[a] << "," << r[Eigen::Index(a)] << "\n";
  s << "mean," << r.mean() << "\n";
  return s.str();
}

std::string leaderboard_csv(const std::vector<learn::LeaderboardEntry>& board) {
  std::ostringstream s;
  s << "rank,grid_index,hidden,activation,learning_rate,l2,epochs,parameters,validation_rmse,failure\n";
  for (std::size_t i = 0; i < board.size(); ++i) {
    const auto& e = board[i];
    std::string hidden;
    for (std::size_t k = 0; k < e.hyper.hidden.size(); ++k) hidden += (k ? "x" : "") + std::to_string(e.hyper.hidden[k]);
    s << i + 1 << "," << e.grid_index << "," << (hidden.empty() ? "none" : hidden) << ","
      << learn::to_string(e.hyper.activation) << "," << short_real(e.hyper.learning_rate) << ","
      << short_real(e.hyper.l2) << "," << e.hyper.epochs << "," << e.parameters << ","
      << (e.failure ? "" : detail::fmt_real(e.validation_rmse)) << ",";
    if (e.failure) {
      std::string f = *e.failure;
      std::replace(f.begin(), f.end(), ',', ';');
      std::replace(f.begin(), f.end(), '\n', ' ');
      s << f;
    }
    s << "\n";
  }
  return s.str();
}

std::vector<HumanFrame> read_openface(const fs::path& p, double min_conf, std::size_t& dropped) {
  auto r = ingest_openface_csv(p, min_conf);
  dropped = r.dropped;
  return std::move(r.frames);
}

unsigned effective_jobs(int jobs) {
  if (jobs > 0) return unsigned(jobs);
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated robot-head retargeting: data collection, learning and expression mapping", "robohead"};
  app.require_subcommand(1);
  app.fallthrough();
  app.failure_message(CLI::FailureMessage::help);
  app.set_version_flag("--version", kVersion);
  int jobs = 0;
  app.add_option("--jobs", jobs, "maximum worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
  std::vector<std::string> args(argv, argv + argc);

  // gen-head
  auto* gen = app.add_subcommand("gen-head", "write the default head configuration");
  std::string gen_out;
  bool gen_noiseless = false;
  gen->add_option("--out", gen_out, "output directory (default: print to stdout)");
  gen->add_flag("--noiseless", gen_noiseless, "zero every noise source");

  // collect
  auto* col = app.add_subcommand("collect", "run the collection protocol on the simulated head");
  std::string col_head, col_out;
  CollectionProtocol proto;
  bool col_noiseless = false;
  col->add_option("--head", col_head, std::string("head config JSON (default: $") + kHeadEnv + ")");
  col->add_option("--frames", proto.n_target_frames, "target frames to keep")->check(CLI::PositiveNumber)->capture_default_str();
  col->add_option("--neutral", proto.neutral_fraction, "fraction of neutral frames in the stream")
      ->check(CLI::Range(0.0, 0.999))
      ->capture_default_str();
  col->add_option("--interp", proto.interp_steps, "interpolation frames between targets")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  col->add_option("--window", proto.au_window, "frames averaged per AU read-out")->check(CLI::PositiveNumber)->capture_default_str();
  col->add_option("--seed", proto.rng_seed, "collection seed")->capture_default_str();
  col->add_flag("--noiseless", col_noiseless, "zero every noise source in the head");
  col->add_option("--out", col_out, "dataset directory")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "fit a retargeting model");
  std::string fit_data, fit_out, fit_kind = "au", fit_reg = "ols";
  int fit_pca = 0;
  double fit_lambda = 1.0, fit_prune = 0.2, fit_test = 0.0;
  std::uint64_t fit_seed = 0;
  GridFlags fit_grid;
  fit->add_option("--dataset", fit_data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  fit->add_option("--kind", fit_kind, "input representation")->check(CLI::IsMember({"au", "landmarks", "distances"}))->capture_default_str();
  fit->add_option("--regressor", fit_reg, "learner")->check(CLI::IsMember({"ols", "lr", "ridge", "mlp"}))->capture_default_str();
  fit->add_option("--pca", fit_pca, "PCA dimensions (0 = none)")->check(CLI::NonNegativeNumber)->capture_default_str();
  fit->add_option("--lambda", fit_lambda, "ridge strength")->check(CLI::NonNegativeNumber)->capture_default_str();
  fit->add_option("--prune", fit_prune, "drop AUs whose max |r| is below this (au kind; 0 keeps all)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  fit->add_option("--test-fraction", fit_test, "hold out this fraction before fitting")->check(CLI::Range(0.0, 0.9))->capture_default_str();
  fit->add_option("--seed", fit_seed, "split and training seed")->capture_default_str();
  fit_grid.add(fit);
  fit->add_option("--out", fit_out, "output directory")->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "per-actuator RMSE of a model on a dataset");
  std::string ev_model, ev_data, ev_out;
  double ev_test = 0.0;
  std::uint64_t ev_seed = 0;
  ev->add_option("--model", ev_model, "model JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--dataset", ev_data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--test-fraction", ev_test, "evaluate on this held-out fraction only (match fit)")
      ->check(CLI::Range(0.0, 0.9))
      ->capture_default_str();
  ev->add_option("--seed", ev_seed, "split seed (match fit)")->capture_default_str();
  ev->add_option("--out", ev_out, "output directory");

  // compare
  auto* cmp = app.add_subcommand("compare", "four-way representation comparison");
  std::string cmp_data, cmp_out;
  std::uint64_t cmp_seed = 0;
  CompareOptions cmp_opt;
  GridFlags cmp_grid;
  std::vector<long> cmp_cands;
  cmp->add_option("--dataset", cmp_data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("--seed", cmp_seed, "split and training seed")->capture_default_str();
  cmp->add_option("--test-fraction", cmp_opt.test_fraction, "held-out fraction")->check(CLI::Range(0.05, 0.9))->capture_default_str();
  cmp->add_option("--prune", cmp_opt.prune_threshold, "AU correlation threshold")->check(CLI::NonNegativeNumber)->capture_default_str();
  cmp->add_option("--landmark-pca", cmp_opt.landmark_pca_k, "PCA dimensions for landmarks")->check(CLI::PositiveNumber)->capture_default_str();
  cmp->add_option("--distance-pca", cmp_cands, "candidate PCA dimensions for distances (default 3,5,...,39)")->delimiter(',');
  cmp_grid.add(cmp);
  cmp->add_option("--out", cmp_out, "output directory");

  // correlate
  auto* cor = app.add_subcommand("correlate", "actuator x AU Pearson matrix");
  std::string cor_data, cor_out;
  double cor_threshold = 0.2;
  cor->add_option("--dataset", cor_data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  cor->add_option("--threshold", cor_threshold, "pruning threshold reported")->check(CLI::NonNegativeNumber)->capture_default_str();
  cor->add_option("--out", cor_out, "output directory");

  // facs
  auto* fc = app.add_subcommand("facs", "actuator command for a basic emotion");
  std::string fc_emotion, fc_model, fc_fill = "min", fc_out;
  fc->add_option("emotion", fc_emotion, "anger, disgust, fear, happy, sadness or surprise")
      ->required()
      ->check(CLI::IsMember({"anger", "disgust", "fear", "happy", "sadness", "surprise"}));
  fc->add_option("--model", fc_model, "AU model JSON")->required()->check(CLI::ExistingFile);
  fc->add_option("--fill", fc_fill, "value for inactive AUs")->check(CLI::IsMember({"min", "zero"}))->capture_default_str();
  fc->add_option("--out", fc_out, "also write command.csv here");

  // calibrate-human
  auto* cal = app.add_subcommand("calibrate-human", "fit human MinMax statistics from a recording");
  std::string cal_model, cal_input, cal_out;
  double cal_conf = kDefaultMinConfidence;
  cal->add_option("--model", cal_model, "model JSON")->required()->check(CLI::ExistingFile);
  cal->add_option("--openface", cal_input, "OpenFace CSV recording")->required()->check(CLI::ExistingFile);
  cal->add_option("--min-confidence", cal_conf, "drop frames below this confidence")->capture_default_str();
  cal->add_option("--out", cal_out, "output directory for the calibrated model")->required();

  // retarget
  auto* rt = app.add_subcommand("retarget", "map a human recording to robot commands");
  std::string rt_model, rt_input, rt_out;
  double rt_conf = kDefaultMinConfidence;
  int rt_window = 1;
  rt->add_option("--model", rt_model, "calibrated model JSON")->required()->check(CLI::ExistingFile);
  rt->add_option("--openface", rt_input, "OpenFace CSV recording")->required()->check(CLI::ExistingFile);
  rt->add_option("--min-confidence", rt_conf, "hold the last command below this confidence")->capture_default_str();
  rt->add_option("--window", rt_window, "moving-average window")->check(CLI::PositiveNumber)->capture_default_str();
  rt->add_option("--out", rt_out, "output directory")->required();

  // stream
  auto* st = app.add_subcommand("stream", "retarget OpenFace rows as they arrive");
  std::string st_model, st_input = "-";
  double st_conf = kDefaultMinConfidence;
  int st_window = 1;
  bool st_no_header = false;
  st->add_option("--model", st_model, "calibrated model JSON")->required()->check(CLI::ExistingFile);
  st->add_option("--input", st_input, "OpenFace CSV file, or - for stdin")->capture_default_str();
  st->add_option("--min-confidence", st_conf, "hold the last command below this confidence")->capture_default_str();
  st->add_option("--window", st_window, "moving-average window")->check(CLI::PositiveNumber)->capture_default_str();
  st->add_flag("--no-header", st_no_header, "omit the column header line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  const unsigned n_jobs = effective_jobs(jobs);
  Run run(app.get_subcommands().front()->get_name(), args);
  try {
    if (*gen) {
      HeadConfig h = default_head_config();
      if (gen_noiseless) h = noiseless(h);
      const std::string text = to_json(h).dump(2) + "\n";
      if (gen_out.empty()) {
        std::cout << text;
        return 0;
      }
      run.config("noiseless", gen_noiseless);
      run.seed("head", h.rng_seed);
      run.open(gen_out);
      run.write("head.json", text);
      run.config("head_config_hash", config_hash(h));
    } else if (*col) {
      auto head = resolve_head(col_head);
      if (head.origin != "builtin") run.input(head.origin);
      if (col_noiseless) head.config = noiseless(head.config);
      run.open(col_out);
      run.config("head_source", head.origin);
      run.config("head", to_json(head.config));
      run.config("head_config_hash", config_hash(head.config));
      run.config("protocol", detail::protocol_to_json(proto));
      run.config("noiseless", col_noiseless);
      run.seed("collection", proto.rng_seed);
      run.seed("head", head.config.rng_seed);
      Dataset d = collect(head.config, proto);
      save_dataset(d, fs::weakly_canonical(col_out));
      for (const char* f : {"metadata.json", "frames.csv", "poses.csv"}) run.output(f);
      std::cerr << "collected " << d.size() << " rows from a stream of " << d.stream.stream_length << " frames ("
                << d.stream.neutral_frames << " neutral, " << d.stream.interp_frames << " interpolation)\n";
    } else if (*fit) {
      const Dataset all = load(fit_data, run);
      run.open(fit_out);
      const Dataset train = training_rows(all, fit_test, fit_seed, false);
      FitOptions opt;
      opt.kind = feature_kind_from_string(fit_kind);
      opt.regressor = regressor_from_string(fit_reg);
      opt.pca_k = fit_pca;
      opt.ridge_lambda = fit_lambda;
      opt.seed = fit_seed;
      opt.jobs = n_jobs;
      opt.grid = fit_grid.grid(fit_seed);
      std::vector<int> pruned;
      if (opt.kind == FeatureKind::au && fit_prune > 0.0) opt.feature_mask = au_mask_after_pruning(train, fit_prune, pruned);
      run.config("kind", fit_kind);
      run.config("regressor", to_string(opt.regressor));
      run.config("pca", fit_pca);
      run.config("lambda", fit_lambda);
      run.config("prune", fit_prune);
      run.config("pruned_aus", pruned);
      run.config("test_fraction", fit_test);
      run.config("training_rows", train.size());
      if (opt.regressor == RegressorKind::mlp) run.config("grid", fit_grid.to_json());
      run.config("jobs", n_jobs);
      run.seed("fit", fit_seed);
      run.seed("dataset", all.protocol.rng_seed);
      auto res = fit_pipeline(train, opt);
      save_model(res.model, run.path("model.json"));
      if (!res.leaderboard.empty()) run.write("leaderboard.csv", leaderboard_csv(res.leaderboard));
      const Eigen::VectorXd in_sample =
          learn::rmse(clipped_predictions(res.model, train.features(opt.kind)), train.commands());
      run.write("train_rmse.csv", rmse_csv(in_sample));
      std::cerr << "fitted " << fit_kind << "+" << to_string(opt.regressor) << " on " << train.size()
                << " rows; training RMSE " << in_sample.mean() << "\n";
    } else if (*ev) {
      run.input(ev_model);
      const PipelineModel m = load_model(ev_model);
      const Dataset all = load(ev_data, run);
      if (!ev_out.empty()) run.open(ev_out);
      const Dataset rows = training_rows(all, ev_test, ev_seed, true);
      const Eigen::VectorXd r = learn::rmse(clipped_predictions(m, rows.features(m.kind)), rows.commands());
      run.config("test_fraction", ev_test);
      run.config("rows", rows.size());
      run.seed("split", ev_seed);
      const std::string csv = rmse_csv(r);
      std::cout << csv;
      if (run.has_out()) run.write("metrics.csv", csv);
    } else if (*cmp) {
      const Dataset d = load(cmp_data, run);
      if (!cmp_out.empty()) run.open(cmp_out);
      cmp_opt.grid = cmp_grid.grid(cmp_seed);
      cmp_opt.jobs = n_jobs;
      if (!cmp_cands.empty()) cmp_opt.distance_candidates.assign(cmp_cands.begin(), cmp_cands.end());
      for (auto k : cmp_opt.distance_candidates)
        if (k < 1) throw UsageError("--distance-pca values must be >= 1");
      run.config("test_fraction", cmp_opt.test_fraction);
      run.config("prune", cmp_opt.prune_threshold);
      run.config("landmark_pca", cmp_opt.landmark_pca_k);
      run.config("distance_pca_candidates", std::vector<long>(cmp_opt.distance_candidates.begin(), cmp_opt.distance_candidates.end()));
      run.config("grid", cmp_grid.to_json());
      run.config("jobs", n_jobs);
      run.seed("split", cmp_seed);
      run.seed("dataset", d.protocol.rng_seed);
      const auto rep = compare_representations(d, cmp_seed, cmp_opt);
      std::cout << report_table(rep);
      if (run.has_out()) {
        run.write("report.csv", report_csv(rep));
        run.write("report.txt", report_table(rep));
        run.write("leaderboard.csv", leaderboard_csv(rep.mlp_leaderboard));
        std::ostringstream pca;
        pca << "k,rmse,cumulative_evr\n";
        for (const auto& c : rep.distance_pca.report)
          pca << c.k << "," << detail::fmt_real(c.rmse) << "," << detail::fmt_real(c.cumulative_evr) << "\n";
        run.write("distance_pca.csv", pca.str());
      }
    } else if (*cor) {
      const Dataset d = load(cor_data, run);
      if (!cor_out.empty()) run.open(cor_out);
      const auto m = au_correlation(d);
      const auto pruned = low_correlation_features(m, cor_threshold);
      run.config("threshold", cor_threshold);
      run.config("low_correlation_aus", pruned);
      std::cout << corr_csv(m);
      std::cerr << "AUs below |r| " << cor_threshold << ":";
      for (int au : pruned) std::cerr << " " << au_name(au);
      std::cerr << (pruned.empty() ? " none\n" : "\n");
      if (run.has_out()) run.write("correlation.csv", corr_csv(m));
    } else if (*fc) {
      run.input(fc_model);
      const PipelineModel m = load_model(fc_model);
      if (!fc_out.empty()) run.open(fc_out);
      if (m.kind != FeatureKind::au)
        throw ConfigError("facs needs an AU model, got a " + to_string(m.kind) + " model");
      const auto target = facs_target(emotion(fc_emotion), m.robot_stats,
                                      fc_fill == "min" ? FillMode::min_fill : FillMode::zero_fill);
      const auto c = express(m, target);
      run.config("emotion", fc_emotion);
      run.config("fill", fc_fill);
      std::cout << command_csv(c) << "\n";
      if (run.has_out()) run.write("command.csv", command_header() + "\n" + command_csv(c) + "\n");
    } else if (*cal) {
      run.input(cal_model);
      run.input(cal_input);
      PipelineModel m = load_model(cal_model);
      run.open(cal_out);
      std::size_t dropped = 0;
      auto frames = read_openface(cal_input, cal_conf, dropped);
      m = calibrate_human(std::move(m), frames);
      run.config("min_confidence", cal_conf);
      run.config("frames_used", frames.size());
      run.config("frames_dropped", dropped);
      save_model(m, run.path("model.json"));
      std::cerr << "calibrated on " << frames.size() << " frames (" << dropped << " dropped)\n";
    } else if (*rt) {
      run.input(rt_model);
      run.input(rt_input);
      const PipelineModel m = load_model(rt_model);
      run.open(rt_out);
      run.config("min_confidence", rt_conf);
      run.config("window", rt_window);
      std::ifstream in(rt_input);
      OpenFaceCsvReader reader(in);
      Reenactor r(m, rt_window, rt_conf);
      std::string out = "timestamp," + command_header() + "\n";
      long n = 0;
      while (auto f = reader.next()) {
        out += short_real(f->timestamp) + "," + command_csv(r.push(*f)) + "\n";
        ++n;
      }
      run.config("frames", n);
      run.write("commands.csv", out);
    } else if (*st) {
      const PipelineModel m = load_model(st_model);
      if (!m.human_stats) throw CalibrationRequired("model has no human MinMax statistics; run calibrate-human first");
      std::ifstream file;
      if (st_input != "-") {
        file.open(st_input);
        if (!file) throw FormatError("cannot open " + st_input);
      }
      std::istream& in = st_input == "-" ? std::cin : file;
      OpenFaceCsvReader reader(in);
      Reenactor r(m, st_window, st_conf);
      if (!st_no_header) std::cout << "timestamp," << command_header() << std::endl;
      while (auto f = reader.next()) std::cout << short_real(f->timestamp) << "," << command_csv(r.push(*f)) << std::endl;
    }
    run.finish();
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
