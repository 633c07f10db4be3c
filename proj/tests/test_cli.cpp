#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>

#include "support.hpp"

using namespace robohead;
using robohead::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

// Runs the tool through the shell; `prefix` may set environment variables or
// pipe input.
Result run(const std::string& args, const fs::path& scratch, const std::string& prefix = "") {
  const fs::path err = scratch / "stderr.txt";
  const std::string cmd = prefix + quote(ROBOHEAD_CLI) + " " + args + " 2>" + quote(err.string());
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = detail::read_file(err);
  return r;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(detail::read_file(dir / "manifest.json")); }

const std::string kSmallGrid =
    " --depths 1 --widths 4 --activations tanh --learning-rates 0.01 --l2 0 --epochs 20 --distance-pca 3,5";

// Shared small dataset and AU model, built once through the tool itself.
class CliFlow : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    tmp_ = new TempDir("cli");
    auto c = run("collect --frames 60 --seed 0 --out " + quote((dir() / "data").string()), dir());
    ASSERT_EQ(c.code, 0) << c.err;
    auto f = run("fit --dataset " + quote((dir() / "data").string()) + " --kind au --out " +
                     quote((dir() / "fit").string()),
                 dir());
    ASSERT_EQ(f.code, 0) << f.err;
  }
  static void TearDownTestSuite() {
    delete tmp_;
    tmp_ = nullptr;
  }
  static fs::path dir() { return tmp_->path(); }
  static std::string data() { return quote((dir() / "data").string()); }
  static std::string model() { return quote((dir() / "fit" / "model.json").string()); }
  static std::string fixture() { return quote((fs::path(ROBOHEAD_FIXTURE_DIR) / "openface_sample.csv").string()); }

  static TempDir* tmp_;
};

TempDir* CliFlow::tmp_ = nullptr;

}  // namespace

TEST(Cli, UsageErrorsExitOne) {
  TempDir tmp("cli_usage");
  for (const std::string args : {"", "frobnicate", "collect", "collect --out x --frames notanumber",
                                 "facs joy --model m.json", "fit --dataset . --out y --kind pixels"}) {
    auto r = run(args, tmp.path());
    EXPECT_EQ(r.code, 1) << args;
    EXPECT_NE(r.err.find("Usage"), std::string::npos) << args;
  }
  auto help = run("--help", tmp.path());
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("collect"), std::string::npos);
}

TEST(Cli, GenHeadMatchesBuiltin) {
  TempDir tmp("cli_gen");
  auto r = run("gen-head", tmp.path());
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(config_hash(head_config_from_json(nlohmann::json::parse(r.out))), config_hash(default_head_config()));
  auto w = run("gen-head --noiseless --out " + quote((tmp.path() / "h").string()), tmp.path());
  ASSERT_EQ(w.code, 0) << w.err;
  auto h = head_config_from_json(nlohmann::json::parse(detail::read_file(tmp.path() / "h" / "head.json")));
  EXPECT_EQ(config_hash(h), config_hash(noiseless(default_head_config())));
  EXPECT_EQ(manifest(tmp.path() / "h").at("subcommand"), "gen-head");
}

TEST(Cli, HeadConfigFromEnvironment) {
  TempDir tmp("cli_env");
  ASSERT_EQ(run("gen-head --noiseless --out " + quote((tmp.path() / "h").string()), tmp.path()).code, 0);
  const std::string env = "ROBOHEAD_HEAD_CONFIG=" + quote((tmp.path() / "h" / "head.json").string()) + " ";
  auto r = run("collect --frames 5 --out " + quote((tmp.path() / "d").string()), tmp.path(), env);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_dataset(tmp.path() / "d").dataset.head_config_hash, config_hash(noiseless(default_head_config())));
  auto bad = run("collect --frames 5 --out " + quote((tmp.path() / "e").string()), tmp.path(),
                 "ROBOHEAD_HEAD_CONFIG=/nonexistent/head.json ");
  EXPECT_EQ(bad.code, 2);
}

TEST_F(CliFlow, CollectWritesDatasetAndManifest) {
  auto d = load_dataset(dir() / "data").dataset;
  EXPECT_EQ(d.size(), 60u);
  auto m = manifest(dir() / "data");
  EXPECT_EQ(m.at("seeds").at("collection"), 0);
  EXPECT_EQ(m.at("config").at("protocol").at("n_target_frames"), 60);
  EXPECT_EQ(m.at("config").at("head_config_hash"), d.head_config_hash);
  EXPECT_TRUE(m.at("versions").contains("robohead"));

  // Same flags, same bytes.
  ASSERT_EQ(run("collect --frames 60 --seed 0 --out " + quote((dir() / "again").string()), dir()).code, 0);
  for (const char* f : {"frames.csv", "poses.csv", "metadata.json"})
    EXPECT_EQ(detail::read_file(dir() / "data" / f), detail::read_file(dir() / "again" / f)) << f;
}

TEST_F(CliFlow, FitDoesNotTouchInputs) {
  const std::string before = detail::read_file(dir() / "data" / "frames.csv");
  auto r = run("fit --dataset " + data() + " --kind landmarks --pca 10 --out " + quote((dir() / "fit2").string()), dir());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(detail::read_file(dir() / "data" / "frames.csv"), before);
  EXPECT_FALSE(fs::exists(dir() / "data" / "model.json"));
  auto m = load_model(dir() / "fit2" / "model.json");
  EXPECT_EQ(m.kind, FeatureKind::landmarks);
  EXPECT_EQ(manifest(dir() / "fit2").at("config").at("pca"), 10);
  auto same = run("fit --dataset " + data() + " --out " + data(), dir());
  EXPECT_EQ(same.code, 1);
}

TEST_F(CliFlow, FacsPrintsOneCommandLine) {
  auto r = run("facs happy --model " + model() + " --fill min", dir());
  ASSERT_EQ(r.code, 0) << r.err;
  auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 1u);
  auto cells = detail::split_csv_line(ls[0]);
  ASSERT_EQ(cells.size(), kNumChannels);
  for (const auto& c : cells) {
    const int v = std::stoi(c);
    EXPECT_GE(v, 0);
    EXPECT_LE(v, 255);
  }
  ASSERT_EQ(run("fit --dataset " + data() + " --kind distances --pca 5 --out " + quote((dir() / "fitd").string()), dir()).code, 0);
  auto wrong = run("facs happy --model " + quote((dir() / "fitd" / "model.json").string()), dir());
  EXPECT_EQ(wrong.code, 2);
  EXPECT_NE(wrong.err.find("AU model"), std::string::npos);
}

TEST_F(CliFlow, EvaluateAndCorrelate) {
  auto e = run("evaluate --model " + model() + " --dataset " + data() + " --out " + quote((dir() / "eval").string()),
               dir());
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(lines(e.out).size(), 11u);
  EXPECT_EQ(detail::read_file(dir() / "eval" / "metrics.csv"), e.out);
  EXPECT_TRUE(fs::exists(dir() / "eval" / "manifest.json"));

  auto c = run("correlate --dataset " + data() + " --out " + quote((dir() / "corr").string()), dir());
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_EQ(lines(c.out).size(), 10u);
  EXPECT_NE(c.err.find("AUs below"), std::string::npos);
}

TEST_F(CliFlow, CompareIsByteIdentical) {
  auto a = run("compare --dataset " + data() + " --seed 0" + kSmallGrid + " --out " + quote((dir() / "c1").string()), dir());
  auto b = run("compare --dataset " + data() + " --seed 0" + kSmallGrid + " --out " + quote((dir() / "c2").string()), dir());
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(a.out, b.out);
  for (const char* f : {"report.csv", "report.txt", "leaderboard.csv", "distance_pca.csv"})
    EXPECT_EQ(detail::read_file(dir() / "c1" / f), detail::read_file(dir() / "c2" / f)) << f;
  EXPECT_EQ(lines(detail::read_file(dir() / "c1" / "report.csv")).size(), 11u);
}

TEST_F(CliFlow, CalibrateRetargetStream) {
  auto cal = run("calibrate-human --model " + model() + " --openface " + fixture() + " --out " +
                     quote((dir() / "cal").string()),
                 dir());
  ASSERT_EQ(cal.code, 0) << cal.err;
  const std::string calibrated = quote((dir() / "cal" / "model.json").string());
  EXPECT_TRUE(load_model(dir() / "cal" / "model.json").human_stats.has_value());

  auto rt = run("retarget --model " + calibrated + " --openface " + fixture() + " --out " +
                    quote((dir() / "rt").string()),
                dir());
  ASSERT_EQ(rt.code, 0) << rt.err;
  const auto written = lines(detail::read_file(dir() / "rt" / "commands.csv"));
  ASSERT_EQ(written.size(), 4u);
  EXPECT_EQ(written[0], "timestamp,a1,a4,a5,a6,a7,a8,a9,a10,a11");
  // Third row is below the confidence threshold and repeats the second.
  EXPECT_EQ(written[3].substr(written[3].find(',')), written[2].substr(written[2].find(',')));
  EXPECT_EQ(written[2].substr(0, 6), "0.033,");

  auto st = run("stream --model " + calibrated, dir(), "cat " + fixture() + " | ");
  ASSERT_EQ(st.code, 0) << st.err;
  EXPECT_EQ(lines(st.out), written);
  auto file = run("stream --no-header --model " + calibrated + " --input " + fixture(), dir());
  ASSERT_EQ(file.code, 0);
  EXPECT_EQ(lines(file.out).size(), 3u);

  auto uncal = run("stream --model " + model() + " --input " + fixture(), dir());
  EXPECT_EQ(uncal.code, 2);
  EXPECT_NE(uncal.err.find("calibrate"), std::string::npos);
  auto garbage = run("stream --model " + calibrated, dir(), "printf 'a,b\\n1,2\\n' | ");
  EXPECT_EQ(garbage.code, 2);
}

TEST_F(CliFlow, DataErrorsExitTwo) {
  fs::create_directories(dir() / "broken");
  for (const char* f : {"metadata.json", "frames.csv", "poses.csv"})
    fs::copy_file(dir() / "data" / f, dir() / "broken" / f, fs::copy_options::overwrite_existing);
  const std::string frames = detail::read_file(dir() / "broken" / "frames.csv");
  detail::write_file(dir() / "broken" / "frames.csv", frames.substr(0, frames.size() / 2));
  auto r = run("fit --dataset " + quote((dir() / "broken").string()) + " --out " + quote((dir() / "nofit").string()), dir());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("checksum"), std::string::npos);
  detail::write_file(dir() / "notjson.json", "{");
  EXPECT_EQ(run("facs fear --model " + quote((dir() / "notjson.json").string()), dir()).code, 2);
}
