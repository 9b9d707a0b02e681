#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "confhol/report.hpp"

using namespace confhol;

namespace {

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << error_json(kind, message, code).dump(2) << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"confhol: conformal tractor calculus and numerical holonomy"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tool_version()));

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  double tol_scale = 1.0;
  bool json_only = false;
  int threads = -1;
  auto* run_cmd = app.add_subcommand("run", "run the analyses of a config file");
  run_cmd->add_option("config", config_path, "config file")->required();
  run_cmd->add_option("--seed", seed, "override the config seed");
  run_cmd->add_option("--out", out_dir, "report directory (default: the config's output)");
  run_cmd->add_flag("--json-only", json_only, "print the reports as one JSON document instead of the table");
  run_cmd->add_option("--tol-scale", tol_scale, "multiply every tolerance by this factor")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--threads", threads, "worker threads for loop ensembles (0 = all cores)");

  auto* list_cmd = app.add_subcommand("list-families", "print the family catalog as JSON");

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "check a config without running it");
  validate_cmd->add_option("config", validate_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("UsageError", e.what(), 2);
  }

  if (*list_cmd) {
    std::cout << family_catalog().dump(2) << "\n";
    return 0;
  }

  if (*validate_cmd) {
    std::ifstream in(validate_path);
    if (!in) return fail("SpecError", "cannot read config file '" + validate_path + "'", 2);
    std::stringstream ss;
    ss << in.rdbuf();
    const Json v = validate_config_text(ss.str());
    std::cout << v.dump(2) << "\n";
    return v["valid"].get<bool>() ? 0 : 2;
  }

  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    if (seed) {
      cfg.seed = *seed;
      cfg.loops.seed = *seed;
    }
    if (tol_scale != 1.0) scale_tolerances(cfg, tol_scale);
    if (threads >= 0) cfg.threads = threads;
    if (!out_dir.empty()) cfg.output_path = out_dir;
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), exit_code_for(e));
  }

  const RunOutcome out = run(cfg);
  if (out.error) {
    std::cerr << out.error->dump(2) << "\n";
    return out.exit_code;
  }
  try {
    write_reports(out, cfg, cfg.output_path);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), exit_code_for(e));
  }
  if (json_only) {
    Json all = Json::array();
    for (const AnalysisReport& r : out.reports) all.push_back(report_json(r, cfg));
    std::cout << all.dump(2) << "\n";
  } else {
    std::cout << summary_table(out);
  }
  for (const AnalysisReport& r : out.reports)
    if (r.error) std::cerr << r.error->dump() << "\n";
  return out.exit_code;
}
