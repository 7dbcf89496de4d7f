#include <catch_amalgamated.hpp>

#include "kinver/driver.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace kinver;
namespace fs = std::filesystem;

namespace {

std::string env(const char* k) {
  const char* v = std::getenv(k);
  return v ? v : "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  std::string cmd = env("VERIFY_BIN") + " " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("kinver_cli_" + name);
  fs::remove_all(p);
  return p;
}

nlohmann::json skeleton(const nlohmann::json& x) {
  if (x.is_object()) {
    nlohmann::json o = nlohmann::json::object();
    for (auto it = x.begin(); it != x.end(); ++it) o[it.key()] = skeleton(it.value());
    return o;
  }
  if (x.is_array()) return x.empty() ? nlohmann::json::array() : nlohmann::json::array({skeleton(x[0])});
  if (x.is_boolean()) return "boolean";
  if (x.is_number()) return "number";
  if (x.is_null()) return "null";
  return "string";
}

const std::string kSamples = env("SAMPLES_DIR").empty() ? std::string("samples") : env("SAMPLES_DIR");

}  // namespace

TEST_CASE("exit codes of the sample configs") {
  REQUIRE_FALSE(env("VERIFY_BIN").empty());
  auto e = scratch("empty");
  CHECK(run_cli("run " + kSamples + "/empty.json --out " + e.string()) == 0);
  auto rep = nlohmann::json::parse(slurp(e / "report.json"));
  CHECK(rep.at("schema_version") == kSchemaVersion);
  CHECK(rep.at("tasks").empty());
  CHECK(fs::exists(e / "run_info.json"));

  auto m = scratch("maxwellian");
  CHECK(run_cli("run " + kSamples + "/maxwellian_ellipticity.json --out " + m.string()) == 0);
  auto rm = nlohmann::json::parse(slurp(m / "report.json"));
  CHECK(rm.at("tasks")[0].at("metrics").at("lambda_meas").get<double>() > 0.0);
  CHECK(fs::exists(m / rm.at("tasks")[0].at("artifacts")[0].get<std::string>()));

  auto h = scratch("hydro");
  CHECK(run_cli("run " + kSamples + "/squeezed_hydro.json --out " + h.string()) == 2);
  auto rh = nlohmann::json::parse(slurp(h / "report.json"));
  CHECK(rh.at("tasks")[0].at("status") == "fail");
  CHECK(rh.at("tasks")[0].at("metrics").at("failures") == nlohmann::json::array({"pressure_two_directions"}));
  auto golden = nlohmann::json::parse(slurp(fs::path(kSamples).parent_path() / "tests/golden/squeezed_hydro.schema.json"));
  CHECK(skeleton(rh) == golden);

  CHECK(run_cli("validate " + kSamples + "/tour.json") == 0);
  CHECK(run_cli("list-tasks") == 0);
  CHECK(run_cli("") == 1);
  CHECK(run_cli("run /nonexistent/config.json") == 1);
}

TEST_CASE("reports are byte-identical across runs and job counts") {
  auto a = scratch("det_a"), b = scratch("det_b");
  CHECK(run_cli("run " + kSamples + "/tour.json --out " + a.string() + " --jobs 1") == 0);
  CHECK(run_cli("run " + kSamples + "/tour.json --out " + b.string() + " --jobs 3") == 0);
  CHECK(slurp(a / "report.json") == slurp(b / "report.json"));
  for (auto& entry : fs::directory_iterator(a))
    if (entry.path().extension() == ".csv") CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
  auto rep = nlohmann::json::parse(slurp(a / "report.json"));
  std::set<std::string> types;
  for (auto& t : rep.at("tasks")) {
    types.insert(t.at("type").get<std::string>());
    CHECK(t.at("status") == "pass");
  }
  CHECK(types.size() == 9);
}

TEST_CASE("VERIFY_JOBS is the default job count") {
  auto a = scratch("env_jobs");
  std::string cmd = "VERIFY_JOBS=2 " + env("VERIFY_BIN") + " run " + kSamples + "/maxwellian_ellipticity.json --out " +
                    a.string() + " > /dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(nlohmann::json::parse(slurp(a / "run_info.json")).at("jobs") == 2);
}

TEST_CASE("validation diagnostics") {
  std::vector<Diagnostic> d;
  auto cfg = parse_config_text("{\n  \"tasks\": [\n    {\"type\": 3,}\n  ]\n}\n", d);
  REQUIRE(d.size() == 1);
  CHECK(d[0].field.rfind("line 3", 0) == 0);

  nlohmann::json bad = {{"kernel", {{"n", 2}, {"s", 0.2}, {"gamma", -0.5}}},
                        {"distributions", {{"m", {{"generator", "maxwellian"}}}}},
                        {"tasks", {{{"type", "ellipticity"}, {"distribution", "m"}}}}};
  auto db = validate_config(bad);
  REQUIRE(db.size() == 1);
  CHECK(db[0].message.find("admissible") != std::string::npos);

  nlohmann::json unknown = {{"distributions", {{"m", {{"generator", "maxwellian"}}}}},
                            {"tasks", {{{"type", "observables"}, {"distribution", "nope"}}}}};
  auto du = validate_config(unknown);
  REQUIRE(du.size() == 1);
  CHECK(du[0].field == "tasks[0].distribution");

  nlohmann::json pr = {{"kernel", {{"n", 2}, {"s", 0.5}, {"gamma", 0.0}}},
                       {"tasks", {{{"type", "kinetic_norms"}, {"alpha", 0.5}, {"p", 2.0}}}}};
  auto dp = validate_config(pr);
  REQUIRE(dp.size() == 1);
  CHECK(dp[0].field == "tasks[0].p");
  pr["tasks"][0]["p"] = 0.8;
  CHECK(validate_config(pr).empty());
  pr["tasks"][0]["p"] = 3.5;
  CHECK(validate_config(pr).empty());

  nlohmann::json typo = {{"tasks", {{{"type", "elipticity"}}}}};
  CHECK(validate_config(typo).size() == 1);
  CHECK(validate_config(nlohmann::json::parse(slurp(kSamples + "/tour.json"))).empty());
  CHECK_THROWS_AS(run_config(bad, 1), DomainError);
}

TEST_CASE("failures are collected and the run continues") {
  auto cfg = nlohmann::json::parse(slurp(kSamples + "/squeezed_hydro.json"));
  cfg["tasks"].push_back({{"type", "giusti"}, {"profile", {{"kind", "nonsense"}}}});
  cfg["tasks"].push_back({{"type", "giusti"}, {"gamma", 1.0}, {"A", 0.1},
                          {"profile", {{"kind", "power"}, {"B", 10.0}, {"shift", 0.01}}}});
  auto R = run_config(cfg, 1);
  REQUIRE(R.outcomes.size() == 3);
  CHECK(R.outcomes[0].status == "fail");
  CHECK(R.outcomes[1].status == "error");
  CHECK(R.outcomes[2].status == "pass");
  CHECK(R.outcomes[2].metrics.at("hypothesis_ok") == false);
  CHECK(R.exit_code == 1);
  cfg["tasks"].erase(1);
  CHECK(run_config(cfg, 1).exit_code == 2);
}
