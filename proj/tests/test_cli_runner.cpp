#include "doctest.h"

#include "levypot/cli_runner.hpp"

#include <fstream>
#include <sstream>

using namespace levypot;
using namespace levypot::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("levypot_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

// All report and table bytes below `dir`, keyed by relative path.
std::map<std::string, std::string> numeric_outputs(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "summary.csv") continue;
    out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return out;
}

Json small_stable(const std::string& id, std::uint64_t seed = 5) {
  Json j = builtin_scenario("wv_local_is_one");
  j["id"] = id;
  j["operator"] = {{"dim", 2}, {"jump", "isotropic"}, {"s", 0.5}};
  j["budget"] = {{"n", 3000}, {"scheme", "wos"}, {"seed", seed}};
  j["tasks"] = Json::array({{{"kind", "wv"}},
                            {{"kind", "poisson"}, {"params", {{"u", 1.0}, {"expected", 1.0}}}},
                            {{"kind", "resolvent"}, {"params", {{"mu", "lebesgue"}}}}});
  return j;
}

}  // namespace

TEST_CASE("empty task list passes with an empty report") {
  const fs::path out = fresh_dir("empty");
  const ScenarioResult r = run_scenario("empty", out);
  CHECK(r.status == 0);
  CHECK(r.report["tasks"].empty());
  CHECK(r.report["pass"] == true);
  CHECK(fs::exists(out / "empty" / "report.json"));
}

TEST_CASE("built-in local w_V scenario reports exactly one") {
  const fs::path out = fresh_dir("wv");
  const ScenarioResult r = run_scenario("wv_local_is_one", out);
  REQUIRE(r.status == 0);
  const Json& res = r.report["tasks"][0]["results"];
  CHECK(res["direct"]["value"].get<double>() == 1.0);
  CHECK(res["direct"]["censored_fraction"].get<double>() <= 1e-3);
  const std::string csv = slurp(out / "wv_local_is_one" / "tables" / "00_wv.csv");
  CHECK(csv.rfind("estimator_id,params_hash,value,std_error,n,censored_fraction,seed\n", 0) == 0);
  CHECK(csv.find('\r') == std::string::npos);
}

TEST_CASE("schema violations give status 2 with a field diagnostic") {
  const fs::path out = fresh_dir("schema");
  for (const Json& seed : {Json("abc"), Json(-1), Json(1.5)}) {
    Json j = builtin_scenario("wv_local_is_one");
    j["budget"]["seed"] = seed;
    const ScenarioResult r = run_scenario_config(j, out);
    CHECK(r.status == 2);
    CHECK(r.message.find("budget.seed") != std::string::npos);
  }
  Json unknown = builtin_scenario("wv_local_is_one");
  unknown["tasks"][0]["kind"] = "teleport";
  CHECK(run_scenario_config(unknown, out).status == 2);
  Json missing = builtin_scenario("wv_local_is_one");
  missing["geometry"].erase("D");
  const ScenarioResult m = run_scenario_config(missing, out);
  CHECK(m.status == 2);
  CHECK(m.message.find("geometry.D") != std::string::npos);
  // The failing run still leaves a report behind.
  CHECK(slurp(out / "wv_local_is_one" / "report.json").find("geometry.D") != std::string::npos);
  Json bad_id = builtin_scenario("wv_local_is_one");
  bad_id["id"] = "../escape";
  CHECK(run_scenario_config(bad_id, out).status == 2);
}

TEST_CASE("parse errors report the source line") {
  try {
    parse_config_text("id = \"x\"\n\nbudget = {\n", true, "bad.toml");
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(e.field.rfind("bad.toml:", 0) == 0);
  }
  try {
    parse_config_text("{\n \"id\": \"x\",\n \"budget\": }\n", false, "bad.json");
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(e.field == "bad.json:3");
  }
}

TEST_CASE("JSON and TOML configurations canonicalize identically") {
  const Json a = parse_config_text(R"({"id": "t", "operator": {"dim": 2, "jump": "isotropic", "s": 0.5},
    "budget": {"n": 10, "seed": 4}, "tasks": [{"kind": "wv"}]})", false);
  const Json b = parse_config_text("id = \"t\"\ntasks = [{ kind = \"wv\" }]\n[operator]\ndim = 2\njump = \"isotropic\"\n"
                                   "s = 0.5\n[budget]\nn = 10\nseed = 4\n",
                                   true);
  CHECK(params_hash(canonicalize(a)) == params_hash(canonicalize(b)));
  const Json shorthand = parse_config_text(R"({"id": "t", "operator": {"dim": 2, "jump": "isotropic", "s": 0.5},
    "budget": {"n": 10, "seed": 4}, "task": "wv"})", false);
  CHECK(canonicalize(shorthand) == canonicalize(a));
  Overrides ov;
  ov.seed = 9;
  const Json c = canonicalize(a, ov);
  CHECK(c["budget"]["seed"] == 9);
  CHECK(params_hash(c) != params_hash(canonicalize(a)));
}

TEST_CASE("tolerance failures give status 1 with the failing check") {
  const fs::path out = fresh_dir("tolerance");
  Json j = small_stable("tol");
  j["tasks"] = Json::array({{{"kind", "poisson"}, {"params", {{"u", 1.0}, {"expected", 0.5}}}}});
  const ScenarioResult r = run_scenario_config(j, out);
  CHECK(r.status == 1);
  CHECK(r.message.find("poisson.z") != std::string::npos);
  CHECK(r.report["pass"] == false);
}

TEST_CASE("reruns reproduce reports and tables byte for byte") {
  const fs::path a = fresh_dir("rerun_a"), b = fresh_dir("rerun_b");
  REQUIRE(run_scenario_config(small_stable("rerun"), a).status == 0);
  REQUIRE(run_scenario_config(small_stable("rerun"), b).status == 0);
  const auto oa = numeric_outputs(a), ob = numeric_outputs(b);
  CHECK(oa.size() == 4);
  CHECK(oa == ob);
  const fs::path c = fresh_dir("rerun_c");
  Overrides ov;
  ov.seed = 77;
  run_scenario_config(small_stable("rerun"), c, ov);
  CHECK(numeric_outputs(c) != oa);
  CHECK(slurp(c / "rerun" / "tables" / "02_resolvent.csv").find(",77\n") != std::string::npos);
}

TEST_CASE("suite outputs do not depend on the number of jobs") {
  const fs::path cfg = fresh_dir("suite_cfg");
  std::vector<std::string> names;
  for (int i = 0; i < 4; ++i) {
    const std::string id = "s" + std::to_string(i);
    write_file(cfg / (id + ".json"), small_stable(id, 10 + static_cast<std::uint64_t>(i)).dump());
    names.push_back(id + ".json");
  }
  write_file(cfg / "manifest.json", Json{{"scenarios", names}}.dump());
  const fs::path a = fresh_dir("suite_a"), b = fresh_dir("suite_b");
  const SuiteResult ra = run_suite(cfg / "manifest.json", 1, a);
  const SuiteResult rb = run_suite(cfg / "manifest.json", 3, b);
  CHECK(ra.status == 0);
  CHECK(rb.status == 0);
  CHECK(numeric_outputs(a) == numeric_outputs(b));
  const std::string summary = slurp(a / "summary.csv");
  CHECK(summary.rfind("id,task,result,wall_time,n_effective\n", 0) == 0);
  CHECK(summary.find("s3,\"wv,poisson,resolvent\",PASS,") != std::string::npos);
}

TEST_CASE("single-scenario manifest matches run_scenario") {
  const fs::path cfg = fresh_dir("single_cfg");
  write_file(cfg / "one.json", small_stable("one").dump());
  write_file(cfg / "manifest.toml", "scenarios = [\"one.json\"]\n");
  const fs::path a = fresh_dir("single_a"), b = fresh_dir("single_b");
  CHECK(run_suite(cfg / "manifest.toml", 2, a).status == 0);
  CHECK(run_scenario((cfg / "one.json").string(), b).status == 0);
  CHECK(numeric_outputs(a) == numeric_outputs(b));
}

TEST_CASE("suite validation") {
  const fs::path cfg = fresh_dir("dup_cfg");
  write_file(cfg / "a.json", small_stable("same").dump());
  write_file(cfg / "b.json", small_stable("same").dump());
  write_file(cfg / "manifest.json", R"({"scenarios": ["a.json", "b.json"]})");
  const fs::path out = fresh_dir("dup_out");
  const SuiteResult dup = run_suite(cfg / "manifest.json", 2, out);
  CHECK(dup.status == 2);
  CHECK(dup.scenarios.at(0).message.find("duplicate") != std::string::npos);
  CHECK(fs::is_empty(out));

  write_file(cfg / "missing.json", R"({"scenarios": ["a.json", "nope.json"]})");
  CHECK(run_suite(cfg / "missing.json", 1, out).status == 2);

  Json broken = small_stable("broken");
  broken["budget"]["seed"] = "x";
  write_file(cfg / "broken.json", broken.dump());
  write_file(cfg / "mixed.json", R"({"scenarios": ["a.json", "broken.json"]})");
  CHECK(run_suite(cfg / "mixed.json", 1, out).status == 2);

  Json runtime = small_stable("runtime");
  runtime["tasks"] = Json::array({{{"kind", "wv"}, {"params", {{"D", {{"ball", {{"center", {0, 0}}, {"radius", 0.5}}}}}}}}});
  write_file(cfg / "runtime.json", runtime.dump());
  write_file(cfg / "runtime_manifest.json", R"({"scenarios": ["a.json", "runtime.json"]})");
  const SuiteResult rt = run_suite(cfg / "runtime_manifest.json", 1, out);
  CHECK(rt.status == 2);
  CHECK(rt.scenarios.at(0).status == 0);
  CHECK(rt.scenarios.at(1).status == 2);
}

TEST_CASE("command-line entry point") {
  const fs::path out = fresh_dir("main");
  const std::string dir = out.string();
  {
    const char* argv[] = {"levypot", "list-builtins"};
    CHECK(main_cli(2, const_cast<char**>(argv)) == 0);
  }
  {
    const char* argv[] = {"levypot", "run", "wv_local_is_one", "--out-dir", dir.c_str(), "--seed", "3"};
    CHECK(main_cli(7, const_cast<char**>(argv)) == 0);
    const Json report = Json::parse(slurp(out / "wv_local_is_one" / "report.json"));
    CHECK(report["seed"] == 3);
  }
  {
    const char* argv[] = {"levypot", "run", "no_such_scenario", "--out-dir", dir.c_str()};
    CHECK(main_cli(5, const_cast<char**>(argv)) == 2);
  }
  {
    const char* argv[] = {"levypot", "frobnicate"};
    CHECK(main_cli(2, const_cast<char**>(argv)) == 2);
  }
}
