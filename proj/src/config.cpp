#include "confhol/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "confhol/error.hpp"

namespace confhol {

namespace {

constexpr std::pair<Analysis, const char*> kAnalyses[] = {
    {Analysis::curvature, "curvature"},
    {Analysis::recognize, "recognize"},
    {Analysis::tractor_holonomy, "tractor_holonomy"},
    {Analysis::tangent_holonomy, "tangent_holonomy"},
    {Analysis::screen_holonomy, "screen_holonomy"},
    {Analysis::ambient_compare, "ambient_compare"},
    {Analysis::berger, "berger"},
    {Analysis::plane_wave_sections, "plane_wave_sections"},
    {Analysis::classify_invariants, "classify_invariants"},
    {Analysis::counterexample_iso_l, "counterexample_iso_l"},
};

std::string where(const YAML::Node& n) {
  const YAML::Mark m = n.Mark();
  if (m.line < 0) return "";
  return " (line " + std::to_string(m.line + 1) + ")";
}

void check_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& ctx) {
  if (!map.IsMap()) throw SpecError(ctx + " must be a mapping" + where(map));
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw SpecError("unknown key '" + key + "' in " + ctx + where(kv.first));
  }
}

template <class T>
T scalar(const YAML::Node& n, const std::string& what) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw SpecError("bad value for " + what + where(n));
  }
}

std::string text(const YAML::Node& n, const std::string& what) {
  if (!n.IsScalar()) throw SpecError(what + " must be a scalar" + where(n));
  return n.Scalar();
}

std::vector<std::string> text_list(const YAML::Node& n, const std::string& what) {
  if (!n.IsSequence()) throw SpecError(what + " must be a list" + where(n));
  std::vector<std::string> out;
  for (const auto& e : n) out.push_back(text(e, what));
  return out;
}

std::vector<std::vector<std::string>> text_matrix(const YAML::Node& n, const std::string& what) {
  if (!n.IsSequence()) throw SpecError(what + " must be a list of rows" + where(n));
  std::vector<std::vector<std::string>> out;
  for (const auto& row : n) out.push_back(text_list(row, what));
  return out;
}

SpacetimeSpec spec_from_node(const YAML::Node& n) {
  check_keys(n,
             {"family", "dim", "n", "riemannian", "f", "a", "u", "screen", "kind", "scalar", "base",
              "coords", "components", "signature", "box"},
             "spec");
  if (!n["family"]) throw SpecError("spec needs a family" + where(n));
  SpacetimeSpec s;
  s.family = family_from_string(text(n["family"], "family"));
  if (n["dim"]) s.dim = scalar<int>(n["dim"], "dim");
  if (n["n"]) s.n = scalar<int>(n["n"], "n");
  if (n["riemannian"]) s.riemannian = scalar<bool>(n["riemannian"], "riemannian");
  if (n["f"]) s.f = text(n["f"], "f");
  if (n["a"]) s.a = text_matrix(n["a"], "a");
  if (n["u"]) s.u = text_list(n["u"], "u");
  if (n["screen"]) s.screen = text_matrix(n["screen"], "screen");
  if (n["kind"]) s.kind = text(n["kind"], "kind");
  if (n["scalar"]) s.scalar = scalar<double>(n["scalar"], "scalar");
  if (n["base"]) s.base = std::make_shared<SpacetimeSpec>(spec_from_node(n["base"]));
  if (n["coords"]) s.coords = text_list(n["coords"], "coords");
  if (n["components"]) s.components = text_matrix(n["components"], "components");
  if (n["signature"]) {
    const auto sig = scalar<std::vector<int>>(n["signature"], "signature");
    if (sig.size() != 2 || sig[0] < 0 || sig[1] < 0)
      throw SpecError("signature must be [negative, positive]" + where(n["signature"]));
    s.signature = {sig[0], sig[1]};
  }
  if (n["box"]) {
    std::vector<Interval> box;
    for (const auto& iv : n["box"]) {
      const auto b = scalar<std::vector<double>>(iv, "box");
      if (b.size() != 2 || !(b[0] < b[1])) throw SpecError("box entries must be [lo, hi] with lo < hi" + where(iv));
      box.push_back({b[0], b[1]});
    }
    s.box = box;
  }
  // the wave screen dimension is implied by a / u / screen; an explicit n must agree
  if (!s.a.empty() && s.n != 0 && s.n != static_cast<int>(s.a.size()))
    throw SpecError("n does not match the size of a");
  return s;
}

YAML::Node load_yaml(const std::string& text_) {
  try {
    return YAML::Load(text_);
  } catch (const YAML::Exception& e) {
    throw ParseError(std::string("config is not valid YAML: ") + e.what());
  }
}

}  // namespace

const char* to_string(Analysis a) {
  for (const auto& [k, name] : kAnalyses)
    if (k == a) return name;
  return "?";
}

Analysis analysis_from_string(const std::string& s) {
  for (const auto& [k, name] : kAnalyses)
    if (s == name) return k;
  throw SpecError("unknown analysis '" + s + "'");
}

const std::vector<Analysis>& all_analyses() {
  static const std::vector<Analysis> all = [] {
    std::vector<Analysis> v;
    for (const auto& [k, name] : kAnalyses) v.push_back(k);
    return v;
  }();
  return all;
}

const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> t{
      {"ode_rtol", 1e-10},       {"ode_atol", 1e-12},
      {"svd_threshold", 1e-6},   {"zero_floor", 1e-9},
      {"recognizer", 1e-8},      {"curvature_identity", 1e-8},
      {"div_weyl", 1e-6},        {"subbundle", 1e-7},
      {"closedness", 1e-7},      {"invariance", 1e-6},
      {"kernel", 1e-7},          {"berger", 1e-7},
      {"section_defect", 1e-6},  {"closed_form", 1e-9},
      {"pattern", 1e-6},         {"christoffel_table", 1e-12},
      {"wronskian", 1e-10},      {"isotropy", 1e-10},
      {"ambient_curvature", 1e-8}, {"flat", 1e-10},
  };
  return t;
}

SpacetimeSpec parse_spec(const std::string& yaml_text) {
  return spec_from_node(load_yaml(yaml_text));
}

RunConfig parse_config(const std::string& yaml_text) {
  const YAML::Node root = load_yaml(yaml_text);
  check_keys(root,
             {"spec", "analyses", "tolerances", "seed", "sample_points", "output", "loops", "refine",
              "threads", "lie", "sections", "expect"},
             "config");
  RunConfig cfg;
  if (root["spec"]) cfg.spec = spec_from_node(root["spec"]);
  if (!root["analyses"] || !root["analyses"].IsSequence() || root["analyses"].size() == 0)
    throw SpecError("config needs a nonempty 'analyses' list");
  for (const auto& a : root["analyses"]) cfg.analyses.push_back(analysis_from_string(text(a, "analysis")));

  cfg.tolerances = default_tolerances();
  if (root["tolerances"]) {
    const YAML::Node t = root["tolerances"];
    if (!t.IsMap()) throw SpecError("tolerances must be a mapping" + where(t));
    for (const auto& kv : t) {
      const std::string key = kv.first.as<std::string>();
      if (!cfg.tolerances.count(key)) throw SpecError("unknown tolerance '" + key + "'" + where(kv.first));
      const double v = scalar<double>(kv.second, "tolerance " + key);
      if (!(v > 0.0)) throw SpecError("tolerance '" + key + "' must be positive");
      cfg.tolerances[key] = v;
    }
  }
  if (root["seed"]) {
    const long long s = scalar<long long>(root["seed"], "seed");
    if (s < 0) throw SpecError("seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (root["sample_points"]) {
    cfg.sample_points = scalar<int>(root["sample_points"], "sample_points");
    if (cfg.sample_points < 1) throw SpecError("sample_points must be positive");
  }
  if (root["output"]) cfg.output_path = text(root["output"], "output");
  if (root["refine"]) cfg.refine = scalar<bool>(root["refine"], "refine");
  if (root["threads"]) cfg.threads = std::max(0, scalar<int>(root["threads"], "threads"));
  if (root["loops"]) {
    const YAML::Node l = root["loops"];
    check_keys(l, {"rect_scales", "smooth_loops", "lassos", "harmonics", "radius"}, "loops");
    if (l["rect_scales"]) cfg.loops.rect_scales = scalar<std::vector<double>>(l["rect_scales"], "rect_scales");
    if (l["smooth_loops"]) cfg.loops.smooth_loops = scalar<int>(l["smooth_loops"], "smooth_loops");
    if (l["lassos"]) cfg.loops.lassos = scalar<int>(l["lassos"], "lassos");
    if (l["harmonics"]) cfg.loops.harmonics = scalar<int>(l["harmonics"], "harmonics");
    if (l["radius"]) cfg.loops.radius = scalar<double>(l["radius"], "radius");
    if (cfg.loops.smooth_loops < 0 || cfg.loops.lassos < 0 || cfg.loops.harmonics < 1 ||
        !(cfg.loops.radius > 0.0))
      throw SpecError("invalid loop family settings");
  }
  cfg.loops.seed = cfg.seed;
  if (root["lie"]) {
    const YAML::Node l = root["lie"];
    check_keys(l, {"algebra", "n", "k", "signature", "a1", "a2", "b"}, "lie");
    if (l["algebra"]) cfg.lie.algebra = text(l["algebra"], "algebra");
    if (l["n"]) cfg.lie.n = scalar<int>(l["n"], "n");
    if (l["k"]) cfg.lie.k = scalar<int>(l["k"], "k");
    if (l["signature"]) cfg.lie.signature = scalar<std::vector<int>>(l["signature"], "signature");
    if (l["a1"]) cfg.lie.a1 = text(l["a1"], "a1");
    if (l["a2"]) cfg.lie.a2 = text(l["a2"], "a2");
    if (l["b"]) cfg.lie.b = text_list(l["b"], "b");
    static const std::set<std::string> algebras{"holonomy", "plane_wave_pattern", "iso_l", "so"};
    if (!algebras.count(cfg.lie.algebra)) throw SpecError("unknown algebra '" + cfg.lie.algebra + "'");
    if (cfg.lie.n < 1) throw SpecError("lie.n must be positive");
    if (cfg.lie.signature.size() != 2) throw SpecError("lie.signature must be [p, q]");
  }
  if (root["sections"]) {
    const YAML::Node s = root["sections"];
    check_keys(s, {"z0", "z_lo", "z_hi", "grid", "loops"}, "sections");
    if (s["z0"]) cfg.sections.z0 = scalar<double>(s["z0"], "z0");
    if (s["z_lo"]) cfg.sections.z_lo = scalar<double>(s["z_lo"], "z_lo");
    if (s["z_hi"]) cfg.sections.z_hi = scalar<double>(s["z_hi"], "z_hi");
    if (s["grid"]) cfg.sections.grid = scalar<int>(s["grid"], "grid");
    if (s["loops"]) cfg.sections.loops = scalar<int>(s["loops"], "loops");
  }
  if (root["expect"]) {
    // YAML → JSON for the expectation block (maps of scalars)
    std::function<Json(const YAML::Node&)> conv = [&](const YAML::Node& n) -> Json {
      if (n.IsMap()) {
        Json o = Json::object();
        for (const auto& kv : n) o[kv.first.as<std::string>()] = conv(kv.second);
        return o;
      }
      if (n.IsSequence()) {
        Json a = Json::array();
        for (const auto& e : n) a.push_back(conv(e));
        return a;
      }
      const std::string& v = n.Scalar();
      if (n.Tag() == "!") return v;  // quoted
      if (v == "true") return true;
      if (v == "false") return false;
      try {
        std::size_t pos = 0;
        const long long i = std::stoll(v, &pos);
        if (pos == v.size()) return i;
      } catch (...) {
      }
      try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos == v.size()) return d;
      } catch (...) {
      }
      return v;
    };
    cfg.expect = conv(root["expect"]);
    if (!cfg.expect.is_object()) throw SpecError("expect must be a mapping");
    for (const auto& [name, block] : cfg.expect.items()) {
      const Analysis a = analysis_from_string(name);
      if (std::find(cfg.analyses.begin(), cfg.analyses.end(), a) == cfg.analyses.end())
        throw SpecError("expect names analysis '" + name + "' which is not run");
      if (!block.is_object()) throw SpecError("expect." + name + " must be a mapping");
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void scale_tolerances(RunConfig& cfg, double factor) {
  if (!(factor > 0.0)) throw SpecError("tolerance scale must be positive");
  for (auto& [k, v] : cfg.tolerances) v *= factor;
}

Json spec_to_json(const SpacetimeSpec& s) {
  Json j;
  j["family"] = to_string(s.family);
  if (s.dim) j["dim"] = s.dim;
  if (s.n) j["n"] = s.n;
  if (s.family == Family::flat || s.family == Family::einstein_model) j["riemannian"] = s.riemannian;
  if (!s.f.empty()) j["f"] = s.f;
  if (!s.a.empty()) j["a"] = s.a;
  if (!s.u.empty()) j["u"] = s.u;
  if (!s.screen.empty()) j["screen"] = s.screen;
  if (s.family == Family::einstein_model) {
    j["kind"] = s.kind;
    j["scalar"] = s.scalar;
  }
  if (s.base) j["base"] = spec_to_json(*s.base);
  if (!s.coords.empty()) {
    j["coords"] = s.coords;
    j["components"] = s.components;
    j["signature"] = {s.signature.negative, s.signature.positive};
  }
  if (s.box) {
    Json b = Json::array();
    for (const Interval& iv : *s.box) b.push_back({iv.lo, iv.hi});
    j["box"] = b;
  }
  return j;
}

Json config_to_json(const RunConfig& cfg) {
  Json j;
  j["spec"] = cfg.spec ? spec_to_json(*cfg.spec) : Json(nullptr);
  Json an = Json::array();
  for (Analysis a : cfg.analyses) an.push_back(to_string(a));
  j["analyses"] = an;
  j["tolerances"] = Json::object();
  for (const auto& [k, v] : cfg.tolerances) j["tolerances"][k] = v;
  j["seed"] = cfg.seed;
  j["sample_points"] = cfg.sample_points;
  j["output"] = cfg.output_path;
  j["loops"] = {{"rect_scales", cfg.loops.rect_scales},
                {"smooth_loops", cfg.loops.smooth_loops},
                {"lassos", cfg.loops.lassos},
                {"harmonics", cfg.loops.harmonics},
                {"radius", cfg.loops.radius}};
  j["refine"] = cfg.refine;
  j["lie"] = {{"algebra", cfg.lie.algebra}, {"n", cfg.lie.n},   {"k", cfg.lie.k},
              {"signature", cfg.lie.signature}, {"a1", cfg.lie.a1}, {"a2", cfg.lie.a2},
              {"b", cfg.lie.b}};
  Json sec;
  sec["z0"] = cfg.sections.z0 ? Json(*cfg.sections.z0) : Json(nullptr);
  sec["z_lo"] = cfg.sections.z_lo ? Json(*cfg.sections.z_lo) : Json(nullptr);
  sec["z_hi"] = cfg.sections.z_hi ? Json(*cfg.sections.z_hi) : Json(nullptr);
  sec["grid"] = cfg.sections.grid;
  sec["loops"] = cfg.sections.loops;
  j["sections"] = sec;
  j["expect"] = cfg.expect;
  return j;
}

}  // namespace confhol
