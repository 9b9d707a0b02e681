#pragma once

#include <optional>
#include <string>
#include <vector>

#include "confhol/config.hpp"
#include "confhol/error.hpp"
#include "confhol/lie.hpp"

namespace confhol {

inline constexpr int kReportSchema = 1;
const char* tool_version();

// A numeric verdict. `verdict` states whether the named condition holds;
// for most checks that is residual <= threshold. Required checks are
// assertions the analysis expects to hold; the others are recognizer verdicts
// that may legitimately come out either way.
struct CheckEntry {
  std::string name;
  double residual = 0.0;
  double threshold = 0.0;
  bool verdict = false;
  bool required = true;
};

struct AnalysisReport {
  Analysis analysis = Analysis::curvature;
  Json result = Json::object();
  std::vector<CheckEntry> checks;
  std::string headline;
  std::optional<Json> error;  // error object when the analysis failed
  int error_code = 0;         // 2 or 3 when failed
  std::vector<std::string> mismatches;
};

// `st` may be null for the purely algebraic analyses; the geometric ones
// throw SpecError without it. Errors propagate.
AnalysisReport run_analysis(Analysis a, const RunConfig& cfg, const Spacetime* st);

// expected is a (possibly nested) object of result fields; keys may be dotted
// paths. Numbers compare with relative tolerance 1e−9, everything else exactly.
std::vector<std::string> compare_expect(const Json& result, const Json& expected);

int exit_code_for(const Error& e);  // 3 for numerical failures, otherwise 2
Json error_json(const std::string& kind, const std::string& message, int exit_code);

Json report_json(const AnalysisReport& r, const RunConfig& cfg);

struct RunOutcome {
  int exit_code = 0;
  std::vector<AnalysisReport> reports;
  std::optional<Json> error;  // set when the run stopped before any analysis
};
// builds the spacetime once and runs every analysis; never throws Error
RunOutcome run(const RunConfig& cfg);
std::string summary_table(const RunOutcome& out);
// <dir>/<analysis>.json and <dir>/summary.txt
void write_reports(const RunOutcome& out, const RunConfig& cfg, const std::string& dir);

Json family_catalog();
// parses and builds without running; {"valid": bool, "diagnostics": [...]}
Json validate_config_text(const std::string& yaml_text);

// exact rationals from "p", "p/q" or decimal "a.b"; SpecError otherwise
Rational parse_rational(const std::string& s);
std::string rational_string(const Rational& r);

}  // namespace confhol
