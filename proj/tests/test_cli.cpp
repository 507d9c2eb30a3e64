#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fpc/scenario.hpp"

using namespace fpc;
namespace fs = std::filesystem;

namespace {

json base_config() {
  return json{
      {"dimension", 1},
      {"box", 4.0},
      {"cells", 64},
      {"horizon", 0.2},
      {"steps", 8},
      {"model", {{"name", "rational-cubic"}}},
      {"kernel", {{"R", 0.8}}},
      {"admissible", {{"M0", 1.0}, {"R0", 1.5}}},
      {"initial", {{"type", "gaussian"}, {"sigma", 0.6}}},
      {"cost",
       {{"running", {{"type", "mollified-box"}, {"center", {0.0}}, {"halfwidth", {0.4}},
                     {"width", 0.2}}},
        {"terminal", {{"type", "zero"}}}}},
      {"particles", {{"count", 400}, {"steps", 16}, {"seed", 3}, {"allowance", 0.05}}},
      {"stages", {"validate", "forward"}},
      {"seed", 5},
  };
}

std::string fresh_dir(const std::string& tag) {
  const auto dir = fs::temp_directory_path() / ("fpc_test_" + tag);
  fs::remove_all(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("validate and forward stages succeed on the base config") {
  std::ostringstream log;
  const int rc = run_scenario(parse_config(base_config()), fresh_dir("ok"), log);
  CHECK(rc == kExitOk);
}

TEST_CASE("missing required field is a config error") {
  json j = base_config();
  j.erase("steps");
  CHECK_THROWS_WITH_AS(parse_config(j), "missing required field 'steps'", ConfigError);
}

TEST_CASE("malformed values are config errors") {
  {
    json j = base_config();
    j["steps"] = "many";
    CHECK_THROWS_AS(parse_config(j), ConfigError);
  }
  {
    json j = base_config();
    j["admissible"]["R0"] = 10.0;  // support would leave the box
    CHECK_THROWS_AS(parse_config(j), ConfigError);
  }
  {
    json j = base_config();
    j["initial"] = {{"type", "wavelet"}};
    std::ostringstream log;
    CHECK(run_scenario(parse_config(j), fresh_dir("badfield"), log) == kExitConfig);
  }
}

TEST_CASE("unknown stage name exits with the config code") {
  json j = base_config();
  j["stages"] = {"fourier"};
  std::ostringstream log;
  CHECK(run_scenario(parse_config(j), fresh_dir("badstage"), log) == kExitConfig);
}

TEST_CASE("manifest records the stages and artifacts") {
  const std::string dir = fresh_dir("manifest");
  std::ostringstream log;
  json j = base_config();
  j["stages"] = {"forward", "optimize"};
  j["optimizer"] = {{"max_iters", 4}};
  REQUIRE(run_scenario(parse_config(j), dir, log) == kExitOk);
  std::ifstream is(dir + "/manifest.json");
  REQUIRE(is.good());
  const json m = json::parse(is);
  CHECK(m.contains("config_hash"));
  CHECK(m["stages"].contains("forward"));
  CHECK(m["stages"].contains("optimize"));
  CHECK(m.contains("timings"));
  bool has_density = false;
  for (const auto& a : m["artifacts"]) has_density |= a["role"] == "final_density";
  CHECK(has_density);
}

TEST_CASE("identical runs compare to a zero diff") {
  json j = base_config();
  j["stages"] = {"forward", "particle", "crosscheck"};
  const std::string d1 = fresh_dir("cmp1");
  const std::string d2 = fresh_dir("cmp2");
  std::ostringstream log;
  REQUIRE(run_scenario(parse_config(j), d1, log) == kExitOk);
  REQUIRE(run_scenario(parse_config(j), d2, log) == kExitOk);
  const json diff = compare_runs(d1 + "/manifest.json", d2 + "/manifest.json");
  CHECK(diff["final_density"]["l1"] == 0.0);
  for (const auto& [key, val] : diff["deltas"].items()) CHECK(val.get<double>() == 0.0);
}

TEST_CASE("grid mismatch refuses to compare") {
  json j = base_config();
  j["stages"] = {"forward"};
  const std::string d1 = fresh_dir("mm1");
  json j2 = j;
  j2["cells"] = 32;
  const std::string d2 = fresh_dir("mm2");
  std::ostringstream log;
  REQUIRE(run_scenario(parse_config(j), d1, log) == kExitOk);
  REQUIRE(run_scenario(parse_config(j2), d2, log) == kExitOk);
  CHECK_THROWS_AS(compare_runs(d1 + "/manifest.json", d2 + "/manifest.json"), ConfigError);
}
