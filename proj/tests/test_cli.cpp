#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

#include <array>
#include <fstream>
#include <set>
#include <cstdio>
#include <filesystem>
#include <sys/wait.h>

#include "confhol/config.hpp"
#include "confhol/error.hpp"
#include "confhol/report.hpp"

using namespace confhol;

namespace {

struct Proc {
  int code = -1;
  std::string out;
};

Proc run_tool(const std::string& args) {
  const std::string cmd = std::string(CONFHOL_BIN) + " " + args + " 2>/dev/null";
  Proc p;
  FILE* f = popen(cmd.c_str(), "r");
  REQUIRE(f != nullptr);
  std::array<char, 4096> buf{};
  while (std::size_t k = std::fread(buf.data(), 1, buf.size(), f)) p.out.append(buf.data(), k);
  const int status = pclose(f);
  p.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return p;
}

std::string config_path(const std::string& name) { return std::string(CONFHOL_CONFIG_DIR) + "/" + name; }

std::string tmp_dir(const std::string& tag) {
  const auto d = std::filesystem::temp_directory_path() / ("confhol_test_" + tag);
  std::filesystem::remove_all(d);
  return d.string();
}

template <class E>
std::string message_of(const std::string& yaml) {
  try {
    parse_config(yaml);
  } catch (const E& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig cfg = parse_config(R"(
spec:
  family: pp_wave
  f: "y1^2 - y2^2"
analyses: [curvature, recognize]
seed: 7
tolerances: {curvature_identity: 1e-9}
lie: {algebra: so, signature: [1, 3]}
)");
  REQUIRE(cfg.spec);
  CHECK(cfg.spec->family == Family::pp_wave);
  CHECK(cfg.analyses == std::vector<Analysis>{Analysis::curvature, Analysis::recognize});
  CHECK(cfg.seed == 7);
  CHECK(cfg.tolerances.at("curvature_identity") == 1e-9);
  CHECK(cfg.tolerances.size() == default_tolerances().size());
  CHECK(cfg.lie.algebra == "so");
  CHECK(cfg.lie.signature == std::vector<int>{1, 3});

  RunConfig scaled = cfg;
  scale_tolerances(scaled, 10.0);
  for (const auto& [k, v] : cfg.tolerances) CHECK(scaled.tolerances.at(k) == doctest::Approx(10 * v));

  // round trip through the JSON echo
  const Json j = config_to_json(cfg);
  CHECK(j["seed"] == 7);
  CHECK(j["spec"]["family"] == "pp_wave");
  CHECK(j["analyses"].size() == 2);

  for (Analysis a : all_analyses()) CHECK(analysis_from_string(to_string(a)) == a);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("spec: [unclosed"), ParseError);
  CHECK_THROWS_AS(parse_config("seed: 1\n"), SpecError);
  CHECK_THROWS_AS(parse_config("analyses: []\n"), SpecError);
  CHECK_THROWS_AS(parse_config("analyses: [teleport]\n"), SpecError);
  CHECK_THROWS_AS(parse_config("analyses: [curvature]\nseed: -1\n"), SpecError);
  CHECK_THROWS_AS(parse_config("analyses: [berger]\nlie: {algebra: e8}\n"), SpecError);
  CHECK_THROWS_AS(parse_config("analyses: [berger]\nlie: {n: 0}\n"), SpecError);
  CHECK_THROWS_AS(parse_config("analyses: [berger]\ntolerances: {flat: 0}\n"), SpecError);
  CHECK_THROWS_AS(parse_spec("family: nope\n"), SpecError);
  CHECK_THROWS_AS(parse_spec("family: plane_wave\na: [[1, 0], [0, 1]]\nn: 3\n"), SpecError);
  CHECK_THROWS_AS(parse_spec("family: flat\ndim: 3\nbox: [[1, 0], [0, 1], [0, 1]]\n"), SpecError);
  // unknown keys are reported with their line
  const std::string unknown = message_of<SpecError>("analyses: [curvature]\n\nsede: 3\n");
  CHECK(unknown.find("sede") != std::string::npos);
  CHECK(unknown.find("line 3") != std::string::npos);
  const std::string tol = message_of<SpecError>("analyses: [curvature]\ntolerances:\n  bianchy: 1e-3\n");
  CHECK(tol.find("line 3") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/config.yaml"), SpecError);
}

TEST_CASE("rationals") {
  CHECK(parse_rational("3") == Rational(3));
  CHECK(parse_rational("-2/6") == Rational(-1, 3));
  CHECK(parse_rational("0.25") == Rational(1, 4));
  CHECK(parse_rational("-1.5") == Rational(-3, 2));
  CHECK_THROWS_AS(parse_rational("1/0"), SpecError);
  CHECK_THROWS_AS(parse_rational("abc"), SpecError);
  CHECK_THROWS_AS(parse_rational(""), SpecError);
  CHECK(rational_string(Rational(-2)) == "-2");
  CHECK(rational_string(Rational(5, 3)) == "5/3");
  const std::string big = "123456789012345678901234567890";
  CHECK(rational_string(parse_rational(big)) == big);
}

TEST_CASE("expectation comparison") {
  const Json result = {{"dim", 5}, {"stable", true}, {"x", 0.1}, {"sub", {{"k", "v"}, {"n", 2}}}};
  CHECK(compare_expect(result, {{"dim", 5}, {"stable", true}}).empty());
  CHECK(compare_expect(result, {{"x", 0.1 * (1 + 1e-12)}}).empty());
  CHECK(compare_expect(result, {{"x", 0.1001}}).size() == 1);
  CHECK(compare_expect(result, {{"sub", {{"k", "v"}}}}).empty());
  CHECK(compare_expect(result, {{"sub.n", 2}}).empty());
  const auto m = compare_expect(result, {{"dim", 4}, {"missing", 1}, {"sub.k", "w"}});
  CHECK(m.size() == 3);
  CHECK(compare_expect(result, {{"stable", 1}}).size() == 1);
}

TEST_CASE("running analyses in process") {
  SUBCASE("recognize on a pp wave") {
    const RunConfig cfg = parse_config(R"(
spec: {family: pp_wave, f: "y1^2*y2 + sin(z)*y1"}
analyses: [recognize]
expect:
  recognize: {pp_wave: true, consistent: true}
)");
    const RunOutcome out = run(cfg);
    CHECK(out.exit_code == 0);
    REQUIRE(out.reports.size() == 1);
    const Json j = report_json(out.reports[0], cfg);
    CHECK(j["schema"] == kReportSchema);
    CHECK(j["tool"] == "confhol");
    CHECK(j["analysis"] == "recognize");
    CHECK(j["status"] == "ok");
    CHECK(j["result"]["all_checks_pass"] == true);
    CHECK(j["checks"].is_array());
    for (const Json& c : j["checks"]) {
      CHECK(c.contains("name"));
      CHECK(c.contains("residual"));
      CHECK(c.contains("threshold"));
      CHECK(c.contains("verdict"));
      CHECK(c.contains("required"));
    }
    CHECK(summary_table(out).find("exit code 0") != std::string::npos);
  }
  SUBCASE("an expectation mismatch sets exit code 1") {
    const RunConfig cfg = parse_config(R"(
spec: {family: flat, dim: 3}
analyses: [curvature]
expect:
  curvature: {flat: false}
)");
    const RunOutcome out = run(cfg);
    CHECK(out.exit_code == 1);
    CHECK_FALSE(out.reports[0].mismatches.empty());
    CHECK(report_json(out.reports[0], cfg)["status"] == "mismatch");
  }
  SUBCASE("a spec that fails to build stops the run") {
    const RunConfig cfg = parse_config(R"(
spec:
  family: custom
  coords: [a, b]
  components: [["1", "0"], ["0", "0"]]
  signature: [0, 2]
analyses: [curvature]
)");
    const RunOutcome out = run(cfg);
    CHECK(out.error);
    CHECK(out.exit_code == 3);
    CHECK((*out.error)["error"]["kind"] == "DegenerateMetric");
  }
  SUBCASE("geometric analyses need a spec") {
    const RunConfig cfg = parse_config("analyses: [curvature]\n");
    const RunOutcome out = run(cfg);
    CHECK(out.exit_code == 2);
    REQUIRE(out.reports.size() == 1);
    CHECK(out.reports[0].error);
  }
  SUBCASE("iso(L) counterexample reports the exact value") {
    const RunConfig cfg = parse_config(R"(
analyses: [counterexample_iso_l]
lie: {algebra: iso_l, n: 2, a1: "3/2", a2: "-2/3", b: ["5", "1/2"]}
)");
    const RunOutcome out = run(cfg);
    const Json& r = out.reports[0].result;
    CHECK(r["value"] == "5");
    CHECK(r["stated_value"] == "5/2");
    CHECK(r["nonzero"] == true);
    CHECK(r["stabilizer"]["fixed"] == false);
    CHECK(r["l_found"] == true);
    CHECK(r["l_invariance_residual"] == "0");
  }
}

TEST_CASE("validate without running") {
  const Json ok = validate_config_text("spec: {family: flat, dim: 4}\nanalyses: [curvature]\n");
  CHECK(ok["valid"] == true);
  const Json bad = validate_config_text("analyses: [tractor_holonomy]\n");
  CHECK(bad["valid"] == false);
  CHECK(bad["diagnostics"][0]["kind"] == "SpecError");
  const Json rat = validate_config_text("analyses: [counterexample_iso_l]\nlie: {a1: \"x/y\"}\n");
  CHECK(rat["valid"] == false);
  const Json yaml = validate_config_text("analyses: [");
  CHECK(yaml["diagnostics"][0]["kind"] == "ParseError");
}

TEST_CASE("family catalog") {
  const Json cat = family_catalog();
  CHECK(cat["schema"] == kReportSchema);
  CHECK(cat["analyses"].size() == all_analyses().size());
  CHECK(cat["default_tolerances"].size() == default_tolerances().size());
  const Json& c = cat["families"];
  REQUIRE(c.is_array());
  std::set<std::string> names;
  for (const Json& f : c) names.insert(f["family"].get<std::string>());
  for (Family f : {Family::flat, Family::pp_wave, Family::pr_wave, Family::plane_wave, Family::cahen_wallach,
                   Family::recurrent_general, Family::einstein_model, Family::riemannian_block_product,
                   Family::ambient_einstein, Family::ambient_ricci_flat, Family::cone, Family::custom})
    CHECK(names.count(to_string(f)));
  for (const char* n : {"flat", "pp_wave", "plane_wave", "custom"})
    CHECK(names.count(n));
}

TEST_CASE("reports are deterministic") {
  const RunConfig cfg = parse_config(R"(
spec: {family: plane_wave, a: [[2, 0.5], [0.5, -1]]}
analyses: [tractor_holonomy]
seed: 11
refine: false
loops: {rect_scales: [0.3], smooth_loops: 4, lassos: 2}
)");
  RunConfig one = cfg, many = cfg;
  one.threads = 1;
  many.threads = 3;
  const Json a = report_json(run(one).reports[0], one)["result"];
  const Json b = report_json(run(many).reports[0], many)["result"];
  const Json c = report_json(run(one).reports[0], one)["result"];
  CHECK(a.dump() == c.dump());
  CHECK(a.dump() == b.dump());
}

TEST_CASE("command line tool") {
  SUBCASE("version and catalog") {
    const Proc v = run_tool("--version");
    CHECK(v.code == 0);
    CHECK(v.out.find(tool_version()) != std::string::npos);
    const Proc l = run_tool("list-families");
    CHECK(l.code == 0);
    CHECK(Json::parse(l.out)["families"].is_array());
  }
  SUBCASE("usage errors exit with 2") {
    CHECK(run_tool("").code == 2);
    CHECK(run_tool("run").code == 2);
    CHECK(run_tool("frobnicate").code == 2);
    CHECK(run_tool("run " + config_path("flat.yaml") + " --tol-scale -1").code == 2);
    CHECK(run_tool("run /nonexistent.yaml").code == 2);
  }
  SUBCASE("validate") {
    const Proc p = run_tool("validate " + config_path("pp_wave.yaml"));
    CHECK(p.code == 0);
    CHECK(Json::parse(p.out)["valid"] == true);
  }
  SUBCASE("shipped configs") {
    for (const char* name : {"flat.yaml", "pp_wave.yaml", "pr_wave.yaml", "ambient_sphere.yaml", "berger.yaml",
                             "plane_wave_conformally_flat.yaml"}) {
      CAPTURE(name);
      const std::string dir = tmp_dir(name);
      const Proc p = run_tool("run " + config_path(name) + " --out " + dir);
      CHECK(p.code == 0);
      CHECK(p.out.find("exit code 0") != std::string::npos);
      CHECK(std::filesystem::exists(dir + "/summary.txt"));
    }
  }
  SUBCASE("json output and seed override") {
    const std::string dir = tmp_dir("json");
    const Proc p = run_tool("run " + config_path("pp_wave.yaml") + " --json-only --seed 5 --out " + dir);
    CHECK(p.code == 0);
    const Json all = Json::parse(p.out);
    REQUIRE(all.is_array());
    CHECK(all[0]["seed"] == 5);
    CHECK(std::filesystem::exists(dir + "/recognize.json"));
    const Json file = Json::parse(std::ifstream(dir + "/recognize.json"));
    CHECK(file["result"] == all[0]["result"]);
  }
  SUBCASE("a mismatching expectation exits with 1") {
    const std::string dir = tmp_dir("mismatch");
    std::filesystem::create_directories(dir);
    const std::string cfg = dir + "/cfg.yaml";
    std::ofstream(cfg) << "spec: {family: flat, dim: 3}\nanalyses: [curvature]\nexpect:\n  curvature: {flat: false}\n";
    const Proc p = run_tool("run " + cfg + " --out " + dir);
    CHECK(p.code == 1);
    CHECK(p.out.find("mismatch") != std::string::npos);
  }
}
