#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ermakov/checks.hpp"

using namespace ermakov;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json base() {
  return json::parse(R"({
    "profile": {"kind": "step", "omega0": 1.0, "omega1": 2.0, "t_step": 2.0},
    "N": 32, "dt": 0.01, "t_end": 4.0, "grid_points": 5,
    "initial_state": {"kind": "coherent", "alpha": 1.0},
    "checks": ["classical_invariants", "ermakov_cross_construction"],
    "seed": 3
  })");
}

std::string config_error(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("ermakov_unit_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST(Config, ParsesAndDefaults) {
  const auto c = parse_config(base());
  EXPECT_EQ(c.N, 32);
  EXPECT_EQ(c.profiles.size(), 1u);
  EXPECT_EQ(c.checks.size(), 2u);
  EXPECT_EQ(c.output_dir, "ermakov-out");
}

TEST(Config, ErrorsNameTheOffendingKey) {
  auto j = base();
  j["t_ends"] = 1.0;
  EXPECT_NE(config_error(j).find("t_ends"), std::string::npos);
  j = base();
  j["N"] = 4;
  EXPECT_NE(config_error(j).find("N"), std::string::npos);
  j = base();
  j["dt"] = 2.0;
  EXPECT_NE(config_error(j).find("dt"), std::string::npos);
  j = base();
  j["checks"] = {"no_such_check"};
  EXPECT_NE(config_error(j).find("no_such_check"), std::string::npos);
  j = base();
  j["profile"]["omega0"] = -1.0;
  EXPECT_NE(config_error(j).find("omega0"), std::string::npos);
  j = base();
  j["initial_state"] = {{"kind", "coherent"}, {"alpha", 5.0}};
  EXPECT_NE(config_error(j).find("alpha"), std::string::npos);
  j = base();
  j["profiles"] = json::array({j["profile"]});
  EXPECT_FALSE(config_error(j).empty());
  j = base();
  j["checks"] = {"turski_phase"};
  EXPECT_NE(config_error(j).find("N"), std::string::npos);
}

TEST(Config, HashIgnoresOutputDir) {
  auto a = base(), b = base();
  b["output_dir"] = "elsewhere";
  EXPECT_EQ(config_hash(parse_config(a).source), config_hash(parse_config(b).source));
  b["seed"] = 4;
  EXPECT_NE(config_hash(parse_config(a).source), config_hash(parse_config(b).source));
}

TEST(Catalog, ElevenKnownChecks) {
  EXPECT_EQ(check_catalog().size(), 11u);
  EXPECT_EQ(check_registry().size(), 11u);
  for (const auto& [name, _] : check_catalog()) EXPECT_TRUE(is_known_check(name));
}

TEST(Run, ExitCodes) {
  std::ostringstream log;
  const auto dir = scratch("run_ok");
  RunOverrides ov;
  ov.output_dir = dir.string();
  EXPECT_EQ(run(base(), ov, log), 0) << log.str();
  const auto report = json::parse(slurp(dir / "report.json"));
  EXPECT_TRUE(report["pass"].get<bool>());
  EXPECT_EQ(report["provenance"]["config_hash"].get<std::string>().size(), 16u);
  EXPECT_TRUE(fs::exists(dir / "expect_I.svg"));
  EXPECT_TRUE(fs::exists(dir / "series_0.csv"));

  auto failing = base();
  failing["checks"] = {"manley_rowe"};
  failing["modes"] = {{"process", "SHG"}, {"omegas", {1.0, 2.0}}, {"photon_numbers", {4.0, 0.0}}, {"deltas", {-2.0, 2.0}}};
  ov.output_dir = scratch("run_fail").string();
  EXPECT_EQ(run(failing, ov, log), 1);
  EXPECT_FALSE(json::parse(slurp(fs::path(*ov.output_dir) / "report.json"))["pass"].get<bool>());

  auto bad = base();
  bad["bogus"] = 1;
  EXPECT_EQ(run(bad, ov, log), 2);
  EXPECT_EQ(run(json::array(), ov, log), 2);
}

TEST(Run, OverridesApply) {
  RunOverrides ov;
  ov.N = 40;
  ov.dt = 0.005;
  const auto c = parse_config(apply_overrides(base(), ov));
  EXPECT_EQ(c.N, 40);
  EXPECT_DOUBLE_EQ(c.dt, 0.005);
}

TEST(Threads, InvalidEnvironmentIsAConfigError) {
  ::setenv("ERMAKOV_LAB_THREADS", "zero", 1);
  EXPECT_THROW(worker_limit(), ConfigError);
  std::ostringstream log;
  RunOverrides ov;
  ov.output_dir = scratch("threads_bad").string();
  EXPECT_EQ(run(base(), ov, log), 2);
  ::setenv("ERMAKOV_LAB_THREADS", "3", 1);
  EXPECT_EQ(worker_limit(), 3u);
  ::unsetenv("ERMAKOV_LAB_THREADS");
}

// Results and their order do not depend on the worker count.
TEST(Threads, ResultsIndependentOfWorkerCount) {
  auto j = base();
  j["checks"] = {"manley_rowe", "classical_invariants", "sg_suite", "ermakov_cross_construction"};
  const auto cfg = parse_config(j);
  const auto one = run_checks(cfg, {}, 1);
  const auto four = run_checks(cfg, {}, 4);
  ASSERT_EQ(one.size(), four.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].name, cfg.checks[i]);
    EXPECT_EQ(to_json(one[i]).dump(), to_json(four[i]).dump());
  }
}

TEST(Checks, ErrorsAreCapturedNotThrown) {
  const auto r = run_check("classical_invariants", parse_config(base()));
  EXPECT_TRUE(r.pass);
  EXPECT_FALSE(r.error.has_value());
  const auto bad = run_check("nope", parse_config(base()));
  EXPECT_FALSE(bad.pass);
  ASSERT_TRUE(bad.error.has_value());
  EXPECT_NE(bad.error->find("nope"), std::string::npos);
}
