#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "confhol/holonomy.hpp"
#include "confhol/spacetime.hpp"

namespace confhol {

using Json = nlohmann::ordered_json;

enum class Analysis {
  curvature,
  recognize,
  tractor_holonomy,
  tangent_holonomy,
  screen_holonomy,
  ambient_compare,
  berger,
  plane_wave_sections,
  classify_invariants,
  counterexample_iso_l,
};
const char* to_string(Analysis a);
Analysis analysis_from_string(const std::string& s);  // SpecError when unknown
const std::vector<Analysis>& all_analyses();

// Settings for the linear-algebra analyses.
struct LieSettings {
  std::string algebra = "holonomy";  // holonomy | plane_wave_pattern | iso_l | so
  int n = 2;
  int k = 2;
  std::vector<int> signature{2, 4};  // for "so": (p, q)
  std::string a1 = "1", a2 = "1";    // exact rationals "p/q"
  std::vector<std::string> b;        // defaults to all ones
};

struct SectionSettings {
  std::optional<double> z0, z_lo, z_hi;
  int grid = 101;
  int loops = 8;
};

struct RunConfig {
  std::optional<SpacetimeSpec> spec;
  std::vector<Analysis> analyses;
  std::map<std::string, double> tolerances;  // resolved: defaults plus overrides
  std::uint64_t seed = 1;
  int sample_points = 10;
  std::string output_path = "reports";
  LoopFamilyOptions loops;
  bool refine = true;  // rerun holonomy with doubled loops and halved tolerances
  int threads = 0;
  LieSettings lie;
  SectionSettings sections;
  Json expect = Json::object();
};

// default tolerance table; keys are the only accepted override names
const std::map<std::string, double>& default_tolerances();

// ParseError on malformed YAML, SpecError on invalid content
RunConfig parse_config(const std::string& yaml_text);
RunConfig load_config(const std::string& path);
SpacetimeSpec parse_spec(const std::string& yaml_text);

// multiplies every tolerance by `factor`
void scale_tolerances(RunConfig& cfg, double factor);

Json spec_to_json(const SpacetimeSpec& s);
Json config_to_json(const RunConfig& cfg);

}  // namespace confhol
