#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "hrg/errors.hpp"
#include "hrg/experiment.hpp"

using namespace hrg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("hrg_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json small_model() {
  return json::parse(R"({"hopping": {"eps": 1, "c": 0.75}, "density": {"kind": "gaussian", "sigma": 1}, "n": 5})");
}

std::string config_error_path(const json& cfg, const std::string& kind) {
  try {
    run_experiment(cfg, kind, {.out = scratch("err")});
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<none>";
}

}  // namespace

TEST(Config, RejectsNonSummableHopping) {
  json cfg = {{"model", small_model()}};
  cfg["model"]["hopping"]["c"] = 0;
  try {
    run_experiment(cfg, "spectrum", {.out = scratch("c0")});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "/model/hopping/c");
    EXPECT_NE(std::string(e.what()).find("summable"), std::string::npos);
  }
}

TEST(Config, ErrorsNameTheLocation) {
  json cfg = {{"model", small_model()}};
  cfg["model"]["density"]["sigma"] = "wide";
  EXPECT_EQ(config_error_path(cfg, "spectrum"), "/model/density/sigma");
  cfg = {{"model", small_model()}, {"bogus", 1}};
  EXPECT_EQ(config_error_path(cfg, "spectrum"), "/bogus");
  cfg = {{"model", small_model()}, {"experiment", "ec"}};
  EXPECT_EQ(config_error_path(cfg, "spectrum"), "/experiment");
  cfg = {{"model", small_model()}, {"interval", {1, 0}}};
  EXPECT_EQ(config_error_path(cfg, "ec"), "/interval");
  cfg = {{"model", small_model()}};
  cfg["model"]["density"]["components"] = json::array();
  EXPECT_EQ(config_error_path(cfg, "spectrum"), "/model/density/components");
}

TEST(Config, DenseCapEnforced) {
  json cfg = {{"model", small_model()}};
  EXPECT_THROW(run_experiment(cfg, "spectrum", {.out = scratch("cap"), .dense_cap = 16}), ResourceError);
}

TEST(Config, DigestDependsOnSeed) {
  const json cfg = {{"model", small_model()}};
  EXPECT_EQ(config_digest(cfg, 1), config_digest(cfg, 1));
  EXPECT_NE(config_digest(cfg, 1), config_digest(cfg, 2));
  EXPECT_EQ(config_digest(cfg, 1).size(), 64u);
}

TEST(Run, WritesManifestAndArtifacts) {
  const auto out = scratch("spectrum");
  const json cfg = {{"model", small_model()}, {"realizations", 2}, {"master_seed", 11}};
  const auto r = run_experiment(cfg, "spectrum", {.out = out});
  EXPECT_EQ(r.kind, "spectrum");
  const auto manifest = json::parse(slurp(out / "manifest.json"));
  for (const char* key : {"config_digest", "master_seed", "version", "started_at", "duration_s", "warnings"}) {
    EXPECT_TRUE(manifest.contains(key)) << key;
  }
  EXPECT_EQ(manifest["master_seed"], 11);
  const std::string csv = slurp(out / "eigenvalues.csv");
  EXPECT_EQ(csv.rfind("# config_digest " + manifest["config_digest"].get<std::string>(), 0), 0u);
}

TEST(Run, ByteIdenticalAcrossRunsAndThreads) {
  const json cfg = {{"model", small_model()}, {"realizations", 100}, {"interval", {-1, 1}}};
  const auto a = scratch("rep_a"), b = scratch("rep_b");
  run_experiment(cfg, "ec", {.seed = 5, .out = a, .threads = 1});
  run_experiment(cfg, "ec", {.seed = 5, .out = b, .threads = 2});
  for (const char* f : {"shells.csv", "ec.json", "summary.json"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  const auto c = scratch("rep_c");
  run_experiment(cfg, "ec", {.seed = 6, .out = c, .threads = 1});
  EXPECT_NE(slurp(a / "shells.csv"), slurp(c / "shells.csv"));
}

TEST(Run, SweepWritesPointsAndSummary) {
  const auto out = scratch("sweep");
  json base = {{"experiment", "rgflow"}, {"model", small_model()}, {"r_max", 6}, {"grid", {{"bins", 512}}}};
  const json cfg = {{"sweep", {{"parameter", "E"}, {"values", {0.0, 1.0}}}}, {"base", base}};
  const auto r = run_experiment(cfg, "sweep", {.seed = 1, .out = out});
  EXPECT_TRUE(fs::exists(out / "point_000" / "flow.csv"));
  EXPECT_TRUE(fs::exists(out / "point_001" / "flow.csv"));
  const std::string summary = slurp(out / "summary.csv");
  EXPECT_NE(summary.find("point,E,status,rate_hat"), std::string::npos);
  EXPECT_EQ(r.summary.back().second, 2.0);
}

TEST(Run, SweepIsolatesFailures) {
  const auto out = scratch("sweep_fail");
  json base = {{"experiment", "spectrum"}, {"model", small_model()}};
  const json cfg = {{"sweep", {{"parameter", "n"}, {"values", {3, 20}}}}, {"base", base}};
  const auto r = run_experiment(cfg, "sweep", {.out = out, .dense_cap = 64});
  EXPECT_EQ(r.summary.back().second, 1.0);
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_NE(slurp(out / "summary.csv").find("failed"), std::string::npos);
}
