#include "confhol/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "confhol/curvature.hpp"
#include "confhol/holonomy.hpp"
#include "confhol/spacetime.hpp"
#include "confhol/tractor.hpp"
#include "confhol/transport.hpp"

namespace confhol {

namespace {

double tol(const RunConfig& cfg, const std::string& key) {
  const auto it = cfg.tolerances.find(key);
  return it != cfg.tolerances.end() ? it->second : default_tolerances().at(key);
}

Json vec_json(const Vector& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json mat_json(const Matrix& m) {
  Json a = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(row);
  }
  return a;
}

void add_check(AnalysisReport& r, std::string name, double residual, double threshold) {
  r.checks.push_back({std::move(name), residual, threshold, residual <= threshold, true});
}

void add_verdict(AnalysisReport& r, std::string name, double residual, double threshold,
                 std::optional<bool> verdict = std::nullopt) {
  r.checks.push_back({std::move(name), residual, threshold, verdict.value_or(residual <= threshold), false});
}

const Spacetime& need(const Spacetime* st, Analysis a) {
  if (!st) throw SpecError(std::string("analysis ") + to_string(a) + " needs a spec");
  return *st;
}

std::string statement(int dim, std::optional<int> refined) {
  std::string s = "numerical lower bound dim = " + std::to_string(dim);
  if (!refined) return s + ", refinement not run";
  if (*refined == dim) return s + ", stable under refinement";
  return s + ", not stable under refinement (refined dim = " + std::to_string(*refined) + ")";
}

HolonomyOptions holonomy_options(const RunConfig& cfg, TransportMode mode) {
  HolonomyOptions o;
  o.mode = mode;
  o.loops = cfg.loops;
  o.loops.seed = cfg.seed;
  o.ode.rtol = tol(cfg, "ode_rtol");
  o.ode.atol = tol(cfg, "ode_atol");
  o.span.svd_threshold = tol(cfg, "svd_threshold");
  o.span.zero_floor = tol(cfg, "zero_floor");
  o.threads = cfg.threads;
  return o;
}

HolonomyOptions refined(HolonomyOptions o) {
  o.loops.smooth_loops *= 2;
  o.loops.lassos *= 2;
  o.loops.seed = split_seed(o.loops.seed, 0x5eed);
  o.ode.rtol *= 0.5;
  o.ode.atol *= 0.5;
  return o;
}

// largest distance of a unit vector of span(a) from span(b)
double containment_residual(const Matrix& a, const Matrix& b) {
  if (a.cols() == 0) return 0.0;
  if (b.cols() == 0) return 1.0;
  const Matrix qa = Eigen::HouseholderQR<Matrix>(a).householderQ() * Matrix::Identity(a.rows(), a.cols());
  const Matrix qb = Eigen::HouseholderQR<Matrix>(b).householderQ() * Matrix::Identity(b.rows(), b.cols());
  const Matrix rest = qa - qb * (qb.transpose() * qa);
  double r = 0.0;
  for (int j = 0; j < rest.cols(); ++j) r = std::max(r, rest.col(j).norm());
  return r;
}

Json span_json(const AlgebraSpan& s, int extra_values = 3) {
  Json j;
  j["dim"] = s.dim;
  j["threshold"] = s.threshold;
  Json sv = Json::array();
  for (int i = 0; i < static_cast<int>(s.singular_values.size()) && i < s.dim + extra_values; ++i)
    sv.push_back(s.singular_values[i]);
  j["singular_values"] = sv;
  j["closure_rounds"] = s.closure_rounds;
  j["dropped_samples"] = s.dropped_samples;
  return j;
}

bool is_plane_wave(const Spacetime& st) {
  return st.spec.family == Family::plane_wave || st.spec.family == Family::cahen_wallach;
}

// ---------------------------------------------------------------- curvature

AnalysisReport curvature_analysis(const RunConfig& cfg, const Spacetime& st) {
  AnalysisReport r;
  const int d = st.metric->dim();
  const auto pts = sample_points(st.chart(), cfg.sample_points);
  double riem = 0, ric = 0, scal = 0, weyl = 0, cot = 0, scale = 1.0;
  double bianchi = 0, weyl_trace = 0, div_rel = 0, tractor_bianchi = 0;
  std::mt19937_64 rng(split_seed(cfg.seed, 101));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const Point& p : pts) {
    const CurvatureBundle cb = curvature_bundle(*st.metric, p, CurvatureDepth::full);
    riem = std::max(riem, cb.riemann.max_abs());
    ric = std::max(ric, cb.ricci.cwiseAbs().maxCoeff());
    scal = std::max(scal, std::abs(cb.scalar));
    scale = std::max({scale, cb.riemann.max_abs(), cb.nabla_riemann.max_abs()});
    bianchi = std::max(bianchi, first_bianchi_residual(cb.riemann));
    if (cb.has_schouten()) {
      weyl = std::max(weyl, cb.weyl.max_abs());
      cot = std::max(cot, cb.cotton.max_abs());
      weyl_trace = std::max(weyl_trace, trace_residual(cb.weyl, cb.inverse));
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          for (int c = 0; c < d; ++c)
            div_rel = std::max(div_rel, std::abs((d - 3) * cb.cotton(a, b, c) - cb.div_weyl(a, b, c)));
    }
    if (d >= 4) {
      std::array<double, 3> s{u(rng), u(rng), u(rng)}, rr{u(rng), u(rng), u(rng)};
      std::array<Vector, 3> x;
      for (auto& v : x) v = Vector::NullaryExpr(d, [&] { return u(rng); });
      tractor_bianchi = std::max(tractor_bianchi, tractor_bianchi_defect(cb, s, x, rr).cwiseAbs().maxCoeff());
    }
  }
  Json j;
  j["points"] = static_cast<int>(pts.size());
  j["dim"] = d;
  j["max_abs"] = {{"riemann", riem}, {"ricci", ric}, {"scalar", scal}, {"weyl", weyl}, {"cotton", cot}};
  j["flat"] = riem <= tol(cfg, "flat");
  j["conformally_flat"] = d >= 4 && weyl <= tol(cfg, "curvature_identity") * scale;
  const double ci = tol(cfg, "curvature_identity");
  add_check(r, "first_bianchi", bianchi, ci * scale);
  if (d >= 3) {
    add_check(r, "weyl_trace_free", weyl_trace, ci * scale);
    add_check(r, "cotton_divergence", div_rel, tol(cfg, "div_weyl") * scale);
  }
  if (d >= 4) add_check(r, "tractor_bianchi", tractor_bianchi, ci * scale);
  if (d >= 3) {
    const PredicateReport e = is_einstein(*st.metric, pts);
    const PredicateReport c = is_c_space(*st.metric, pts);
    j["einstein"] = {{"verdict", e.verdict}, {"deviation", e.deviation}, {"threshold", e.threshold}};
    j["c_space"] = {{"verdict", c.verdict}, {"deviation", c.deviation}, {"threshold", c.threshold}};
  }
  j["scale"] = scale;
  r.result = j;
  std::ostringstream h;
  h << (j["flat"].get<bool>() ? "flat" : "curved") << ", max |R| = " << std::setprecision(3) << riem;
  r.headline = h.str();
  return r;
}

// ---------------------------------------------------------------- recognize

AnalysisReport recognize_analysis(const RunConfig& cfg, const Spacetime& st) {
  AnalysisReport r;
  const auto pts = sample_points(st.chart(), cfg.sample_points);
  const double factor = tol(cfg, "recognizer") / 1e-8;
  Json j;
  j["family"] = to_string(st.spec.family);
  j["recurrent"] = st.recurrent;
  j["x_parallel"] = st.x_parallel;
  j["points"] = static_cast<int>(pts.size());
  auto worst = [](Check& acc, const Check& c) {
    if (acc.threshold == 0.0 ||
        c.residual / std::max(c.threshold, 1e-300) > acc.residual / std::max(acc.threshold, 1e-300))
      acc = c;
  };
  if (st.recurrent) {
    Check simple{}, skew{}, trace{}, recon{}, quartic{};
    bool pr = true, pp = st.x_parallel, consistent = true, isotropic = true, scalar_zero = true;
    double ric_thr = 0, ric_res = 0, scal = 0;
    int inconsistent = 0;
    for (const Point& p : pts) {
      const PrConditionReport c = pr_condition(st, p);
      worst(simple, c.simple);
      worst(skew, c.skew);
      pr = pr && c.simple.residual <= c.simple.threshold * factor;
      consistent = consistent && c.consistent;
      inconsistent += !c.consistent;
      const RicciIsotropyReport ri = ricci_isotropy(st, p);
      isotropic = isotropic && ri.isotropic;
      consistent = consistent && ri.consistent;
      inconsistent += !ri.consistent;
      ric_res = std::max({ric_res, ri.ric_screen, std::abs(ri.scalar)});
      ric_thr = std::max(ric_thr, ri.threshold);
      scal = std::max(scal, std::abs(ri.scalar));
      scalar_zero = scalar_zero && std::abs(ri.scalar) <= ri.threshold * factor;
      if (st.x_parallel) {
        const PpEquivalenceReport e = pp_equivalences(st, p);
        worst(trace, e.trace);
        worst(recon, e.reconstruction);
        worst(quartic, e.quartic);
        pp = pp && e.trace.residual <= e.trace.threshold * factor;
        consistent = consistent && e.consistent;
        inconsistent += !e.consistent;
      }
    }
    j["pr_wave"] = pr;
    j["pp_wave"] = pp;
    j["ricci_isotropic"] = isotropic;
    j["scalar_zero"] = scalar_zero;
    j["max_abs_scalar"] = scal;
    j["consistent"] = consistent;
    add_verdict(r, "simple_condition", simple.residual, simple.threshold * factor, pr);
    add_verdict(r, "skew_condition", skew.residual, skew.threshold * factor);
    if (st.x_parallel) {
      add_verdict(r, "trace_condition", trace.residual, trace.threshold * factor);
      add_verdict(r, "reconstruction", recon.residual, recon.threshold * factor);
      add_verdict(r, "quartic_trace", quartic.residual, quartic.threshold * factor);
    }
    add_verdict(r, "ricci_isotropy", ric_res, ric_thr * factor, isotropic);
    add_check(r, "verdicts_consistent", inconsistent, 0.0);
    if (pr && isotropic && !st.x_parallel) {
      const int d = st.metric->dim();
      const Vector a = st.base_point;
      Vector b = a + 0.15 * Vector::Ones(d);
      const CurveSpec curve = CurveSpec::segment(st.chart(), a, b);
      const PrToPpReport pp2 = pr_is_pp_when_isotropic(st, curve);
      j["parallel_rescaling"] = {{"verdict", pp2.verdict},
                                 {"closedness", pp2.closedness},
                                 {"parallel_defect", pp2.parallel_defect}};
      add_verdict(r, "recurrence_form_closed", pp2.closedness, tol(cfg, "closedness"));
    }
    std::string h = pp ? "pp-wave" : pr ? "pr-wave" : "recurrent, not a pr-wave";
    r.headline = h + (isotropic ? ", Ricci-isotropic" : ", Ricci not isotropic");
  } else {
    r.headline = "no recurrent lightlike field in the family";
  }
  if (st.metric->dim() >= 3) {
    const PredicateReport e = is_einstein(*st.metric, pts);
    j["einstein"] = e.verdict;
    j["einstein_deviation"] = e.deviation;
    add_verdict(r, "einstein", e.deviation, e.threshold, e.verdict);
    if (!st.recurrent) r.headline = e.verdict ? "Einstein" : "not Einstein";
  }
  if (st.spec.family == Family::cahen_wallach) {
    double nr = 0, scale = 1;
    for (const Point& p : pts) {
      const CurvatureBundle cb = curvature_bundle(*st.metric, p, CurvatureDepth::full);
      nr = std::max(nr, cb.nabla_riemann.max_abs());
      scale = std::max(scale, cb.riemann.max_abs());
    }
    add_check(r, "locally_symmetric", nr, 1e-7 * scale);
  }
  if (is_plane_wave(st)) {
    // Ric = −tr a dz², every other component zero
    double res = 0, scale = 1;
    const int zi = st.z_index;
    for (const Point& p : pts) {
      Matrix ric = ricci(*st.metric, p);
      const double tr = plane_wave_trace(st, p[zi]);
      scale = std::max(scale, std::abs(tr));
      ric(zi, zi) += tr;
      res = std::max(res, ric.cwiseAbs().maxCoeff());
    }
    add_check(r, "ricci_pattern", res, 1e-8 * scale * factor);
  }
  r.result = j;
  return r;
}

// ---------------------------------------------------------------- holonomy

AnalysisReport holonomy_analysis(const RunConfig& cfg, const Spacetime& st, TransportMode mode) {
  AnalysisReport r;
  const HolonomyOptions opt = holonomy_options(cfg, mode);
  const HolonomyEstimate est = estimate_holonomy(*st.metric, st.base(), opt);
  std::optional<int> refined_dim;
  Json j;
  j["mode"] = to_string(mode);
  j["base"] = vec_json(est.base);
  j["loops"] = static_cast<int>(est.loops.size());
  j["samples"] = static_cast<int>(est.samples.size());
  j["dim"] = est.span.dim;
  j["span"] = span_json(est.span);
  j["max_form_defect"] = est.max_form_defect;
  if (cfg.refine) {
    const HolonomyOptions ro = refined(opt);
    const HolonomyEstimate e2 = estimate_holonomy(*st.metric, st.base(), ro);
    refined_dim = e2.span.dim;
    j["refined"] = {{"loops", static_cast<int>(e2.loops.size())},
                    {"ode_rtol", ro.ode.rtol},
                    {"dim", e2.span.dim},
                    {"span", span_json(e2.span)}};
    j["stable"] = e2.span.dim == est.span.dim;
  }
  j["statement"] = statement(est.span.dim, refined_dim);
  const double gram_scale = std::max(1.0, bundle_gram(*st.metric, st.base(), mode).cwiseAbs().maxCoeff());
  add_check(r, "form_defect", est.max_form_defect, 1e-8 * gram_scale);

  if (mode == TransportMode::tractor && is_plane_wave(st)) {
    const int n = st.metric->dim() - 2;
    const Matrix b = tractor_adapted_frame(st, st.base());
    const Matrix binv = b.inverse();
    double off = 0.0;
    for (const Matrix& m : est.span.basis) off = std::max(off, plane_wave_pattern_residual(binv * m * b, n));
    j["pattern_residual"] = off;
    add_check(r, "block_nilpotent_pattern", off, tol(cfg, "pattern"));
    const Matrix ker = joint_kernel(est.span.basis, n + 4, tol(cfg, "kernel"));
    j["joint_kernel_dim"] = static_cast<int>(ker.cols());
    // the parallel tractors (σ, τX, 0) span the σ-slot and X at the base
    const double angle = containment_residual(b.leftCols(2), ker);
    j["parallel_sections_in_kernel"] = angle;
    add_check(r, "parallel_sections_in_kernel", angle, 1e-4);
  }
  if (cfg.loops.smooth_loops + cfg.loops.lassos <= 64) {
    Json log = Json::array();
    for (const LoopRecord& l : est.loops)
      log.push_back({{"id", l.id}, {"label", l.label}, {"steps", l.steps},
                     {"error_estimate", l.error_estimate}, {"gram_defect", l.gram_defect}});
    j["loop_log"] = log;
  }
  Json basis = Json::array();
  for (const Matrix& m : est.span.basis) basis.push_back(mat_json(m));
  j["basis"] = basis;
  r.headline = j["statement"].get<std::string>();
  r.result = j;
  return r;
}

AnalysisReport screen_analysis(const RunConfig& cfg, const Spacetime& st) {
  AnalysisReport r;
  if (!st.recurrent) throw NoRecurrentField("screen holonomy needs a recurrent lightlike field");
  const HolonomyOptions opt = holonomy_options(cfg, TransportMode::tangent);
  const HolonomyEstimate est = estimate_holonomy(*st.metric, st.base(), opt);
  const Matrix frame = adapted_frame(st, st.base());
  const AlgebraSpan s = screen_holonomy(est.samples, frame, opt.span);
  std::optional<int> refined_dim;
  Json j;
  j["loops"] = static_cast<int>(est.loops.size());
  j["tangent_dim"] = est.span.dim;
  j["dim"] = s.dim;
  j["span"] = span_json(s);
  if (cfg.refine) {
    const HolonomyOptions ro = refined(opt);
    const HolonomyEstimate e2 = estimate_holonomy(*st.metric, st.base(), ro);
    refined_dim = screen_holonomy(e2.samples, frame, ro.span).dim;
    j["refined"] = {{"loops", static_cast<int>(e2.loops.size())}, {"dim", *refined_dim}};
    j["stable"] = *refined_dim == s.dim;
  }
  j["statement"] = statement(s.dim, refined_dim);
  const RecurrenceSample rs = recurrence_form(st, st.base());
  add_check(r, "adapted_frame", rs.frame_residual, 1e-10);
  r.headline = "screen " + j["statement"].get<std::string>();
  r.result = j;
  return r;
}

// ---------------------------------------------------------------- ambient

AnalysisReport ambient_analysis(const RunConfig& cfg, const Spacetime& st) {
  AnalysisReport r;
  Json j;
  const Spacetime amb = build(ambient_ricci_flat(st.spec));
  const auto pts = sample_points(amb.chart(), cfg.sample_points);
  double chr = 0, cur = 0, riem = 0, scale = 1;
  for (const Point& p : pts) {
    chr = std::max(chr, ambient_christoffel_residual(amb, p));
    cur = std::max(cur, ambient_curvature_residual(amb, p));
    const Tensor<4> rm = riemann(*amb.metric, p);
    riem = std::max(riem, rm.max_abs());
    scale = std::max(scale, rm.max_abs());
  }
  add_check(r, "christoffel_table", chr, tol(cfg, "christoffel_table") * std::max(1.0, scale));
  add_check(r, "curvature_blocks", cur, tol(cfg, "ambient_curvature") * scale);
  const auto bpts = sample_points(st.chart(), cfg.sample_points);
  double base_riem = 0, base_ric = 0;
  for (const Point& p : bpts) {
    const CurvatureBundle cb = curvature_bundle(*st.metric, p, CurvatureDepth::curvature);
    base_riem = std::max(base_riem, cb.riemann.max_abs());
    base_ric = std::max(base_ric, cb.ricci.cwiseAbs().maxCoeff());
  }
  const bool base_flat = base_riem <= tol(cfg, "flat");
  const bool ricci_flat = base_ric <= 1e-8 * std::max(1.0, base_riem);
  if (base_flat) add_check(r, "ambient_flat", riem, tol(cfg, "flat"));
  j["points"] = static_cast<int>(pts.size());
  j["base_ricci_flat"] = ricci_flat;
  j["ambient_max_abs_riemann"] = riem;

  HolonomyOptions opt = holonomy_options(cfg, TransportMode::tangent);
  const HolonomyEstimate ae = estimate_holonomy(*amb.metric, amb.base(), opt);
  std::optional<int> refined_dim;
  if (cfg.refine) refined_dim = estimate_holonomy(*amb.metric, amb.base(), refined(opt)).span.dim;
  j["ricci_flat_ambient"] = {{"dim", amb.metric->dim()},
                             {"holonomy_dim", ae.span.dim},
                             {"span", span_json(ae.span)},
                             {"statement", statement(ae.span.dim, refined_dim)}};
  std::optional<int> einstein_dim;
  const int bd = st.metric->dim();
  try {
    const Spacetime ein = build(ambient_einstein(st.spec));
    einstein_dim = estimate_holonomy(*ein.metric, ein.base(), opt).span.dim;
    j["einstein_ambient"] = {{"dim", ein.metric->dim()}, {"holonomy_dim", *einstein_dim}};
  } catch (const NotEinstein&) {
    j["einstein_ambient"] = nullptr;
  } catch (const ZeroScalar&) {
    j["einstein_ambient"] = nullptr;
  }
  if (bd >= 4) {
    const int td = estimate_holonomy(*st.metric, st.base(), holonomy_options(cfg, TransportMode::tractor)).span.dim;
    j["base_tractor_dim"] = td;
    if (ricci_flat) j["match"] = td == ae.span.dim;
    else if (einstein_dim) j["match"] = td == *einstein_dim;
  }
  if (is_plane_wave(st)) {
    const HigherDerivativeReport h = ambient_higher_derivative_samples(amb, amb.base());
    std::vector<Matrix> enriched = ae.samples;
    enriched.insert(enriched.end(), h.samples.begin(), h.samples.end());
    const AlgebraSpan es = span_algebra(enriched, opt.span);
    j["higher_derivatives"] = {{"first", mat_json(h.first)},
                               {"second", mat_json(h.second)},
                               {"zbar", h.zbar},
                               {"residual", h.residual},
                               {"enriched_dim", es.dim}};
    add_check(r, "higher_derivative_values", h.residual, 1e-7);
  }
  r.headline = "ambient " + j["ricci_flat_ambient"]["statement"].get<std::string>();
  r.result = j;
  return r;
}

// ---------------------------------------------------------------- sections

AnalysisReport sections_analysis(const RunConfig& cfg, const Spacetime& st) {
  if (!is_plane_wave(st)) throw HypothesisFailed("plane_wave_sections needs a plane_wave or cahen_wallach spec");
  AnalysisReport r;
  const int d = st.metric->dim(), zi = st.z_index, xi = st.x_index;
  const Interval zb = st.chart()->box()->at(zi);
  const double zbase = st.base_point[zi];
  const double margin = 0.02 * (zb.hi - zb.lo);
  const double z0 = cfg.sections.z0.value_or(zbase);
  const double zlo = cfg.sections.z_lo.value_or(zb.lo + margin);
  const double zhi = cfg.sections.z_hi.value_or(zb.hi - margin);
  OdeOptions ode;
  ode.rtol = tol(cfg, "ode_rtol");
  ode.atol = tol(cfg, "ode_atol");
  const PlaneWaveSections sec = plane_wave_parallel_tractors(st, z0, zlo, zhi, cfg.sections.grid, ode);

  auto tractor_at = [&](const Vector& sol) {
    Vector v = Vector::Zero(d + 2);
    v[0] = sol[0];
    v[1 + xi] = sol[1];
    return v;
  };
  // sections at the base point
  const auto [b1, b2] = plane_wave_section_values(st, z0, zbase, ode);
  const Vector v1 = tractor_at(b1), v2 = tractor_at(b2);

  double wr = 0, iso = 0;
  for (std::size_t k = 0; k < sec.z.size(); ++k) wr = std::max(wr, std::abs(sec.wronskian[k] - sec.wronskian.front()));
  for (const Point& p : sample_points(st.chart(), cfg.sample_points)) {
    const Matrix g = tractor_gram(eval_metric(*st.metric, p));
    const auto [s1, s2] = plane_wave_section_values(st, z0, p[zi], ode);
    const Vector t1 = tractor_at(s1), t2 = tractor_at(s2);
    iso = std::max({iso, std::abs(t1.dot(g * t1)), std::abs(t2.dot(g * t2)), std::abs(t1.dot(g * t2))});
  }
  add_check(r, "wronskian_constant", wr, tol(cfg, "wronskian"));
  add_check(r, "isotropic", iso, tol(cfg, "isotropy"));

  // loop transports fix both sections
  LoopFamilyOptions lo = cfg.loops;
  lo.seed = cfg.seed;
  lo.smooth_loops = cfg.sections.loops;
  lo.lassos = std::max(1, cfg.sections.loops / 4);
  const auto loops = build_loop_family(st.chart(), st.base_point, lo);
  double loop_defect = 0;
  for (const CurveSpec& c : loops) {
    const Matrix P = transport_tractor(*st.metric, c, ode).matrix;
    loop_defect = std::max({loop_defect, (P * v1 - v1).norm(), (P * v2 - v2).norm()});
  }
  add_check(r, "fixed_by_loops", loop_defect, tol(cfg, "section_defect"));

  // transport along z agrees with the ODE solutions
  double seg_defect = 0;
  for (double zt : {zlo + margin, zhi - margin}) {
    Vector end = st.base_point;
    end[zi] = zt;
    const Matrix P = transport_tractor(*st.metric, CurveSpec::segment(st.chart(), st.base_point, end), ode).matrix;
    const auto [e1, e2] = plane_wave_section_values(st, z0, zt, ode);
    seg_defect = std::max({seg_defect, (P * v1 - tractor_at(e1)).norm(), (P * v2 - tractor_at(e2)).norm()});
  }
  add_check(r, "parallel_along_z", seg_defect, tol(cfg, "section_defect"));

  // constant coefficient: closed forms
  bool constant = true;
  const double c0 = plane_wave_trace(st, sec.z.front());
  for (double z : sec.z) constant = constant && std::abs(plane_wave_trace(st, z) - c0) <= 1e-14 * std::max(1.0, std::abs(c0));
  Json j;
  j["z0"] = sec.z0;
  j["interval"] = {zlo, zhi};
  j["grid"] = static_cast<int>(sec.z.size());
  j["coefficient_at_z0"] = sec.coefficient_at_z0;
  j["constant_coefficient"] = constant;
  j["zeros"] = {sec.zeros1, sec.zeros2};
  j["steps"] = sec.steps;
  j["base_values"] = {vec_json(b1), vec_json(b2)};
  j["loops"] = static_cast<int>(loops.size());
  j["loop_defect"] = loop_defect;
  if (constant) {
    const double k = c0 / (d - 2);
    double err = 0;
    for (std::size_t i = 0; i < sec.z.size(); ++i) {
      const double t = sec.z[i] - sec.z0;
      double s1, t1, s2, t2;
      if (k > 0) {
        const double w = std::sqrt(k);
        s1 = std::cosh(w * t), t1 = w * std::sinh(w * t), s2 = std::sinh(w * t) / w, t2 = std::cosh(w * t);
      } else if (k < 0) {
        const double w = std::sqrt(-k);
        s1 = std::cos(w * t), t1 = -w * std::sin(w * t), s2 = std::sin(w * t) / w, t2 = std::cos(w * t);
      } else {
        s1 = 1, t1 = 0, s2 = t, t2 = 1;
      }
      err = std::max({err, std::abs(sec.sol1[i][0] - s1), std::abs(sec.sol1[i][1] - t1),
                      std::abs(sec.sol2[i][0] - s2), std::abs(sec.sol2[i][1] - t2)});
    }
    j["closed_form_error"] = err;
    add_check(r, "closed_form", err, tol(cfg, "closed_form"));
  }
  Json tab = Json::array();
  const std::size_t stride = std::max<std::size_t>(1, sec.z.size() / 10);
  for (std::size_t i = 0; i < sec.z.size(); i += stride)
    tab.push_back({sec.z[i], sec.sol1[i][0], sec.sol1[i][1], sec.sol2[i][0], sec.sol2[i][1]});
  j["table"] = tab;
  r.headline = "two isotropic parallel tractors, loop defect " + [&] {
    std::ostringstream o;
    o << std::setprecision(2) << loop_defect;
    return o.str();
  }();
  r.result = j;
  return r;
}

// ---------------------------------------------------------------- algebra

struct LieInput {
  std::vector<Matrix> gens;
  Matrix gram;
  std::string label;
};

LieInput lie_input(const RunConfig& cfg, const Spacetime* st) {
  LieInput in;
  const LieSettings& l = cfg.lie;
  in.label = l.algebra;
  auto from_exact = [](const std::vector<RMatrix>& v) {
    std::vector<Matrix> out;
    for (const RMatrix& m : v) out.push_back(to_double(m));
    return out;
  };
  if (l.algebra == "plane_wave_pattern") {
    in.gens = from_exact(plane_wave_pattern(l.n));
    in.gram = to_double(plane_wave_pattern_form(l.n));
  } else if (l.algebra == "iso_l") {
    in.gens = from_exact(iso_l_algebra(l.n));
    in.gram = to_double(isotropic_pair_form(l.n));
  } else if (l.algebra == "so") {
    const int p = l.signature[0], q = l.signature[1];
    if (p < 0 || q < 0 || p + q < 2) throw SpecError("lie.signature must describe a form of size >= 2");
    Vector diag(p + q);
    for (int i = 0; i < p + q; ++i) diag[i] = i < p ? -1.0 : 1.0;
    in.gram = diag.asDiagonal();
    in.gens = so_basis(in.gram);
    in.label = "so(" + std::to_string(p) + "," + std::to_string(q) + ")";
  } else {
    if (!st) throw SpecError("lie.algebra 'holonomy' needs a spec");
    const HolonomyEstimate est =
        estimate_holonomy(*st->metric, st->base(), holonomy_options(cfg, TransportMode::tractor));
    in.gens = est.span.basis;
    in.gram = bundle_gram(*st->metric, st->base(), TransportMode::tractor);
    in.label = "tractor holonomy";
  }
  return in;
}

AnalysisReport berger_analysis(const RunConfig& cfg, const Spacetime* st) {
  AnalysisReport r;
  const LieInput in = lie_input(cfg, st);
  const int e = static_cast<int>(in.gram.rows());
  const BergerReport b = berger_check(in.gens, e, tol(cfg, "berger"));
  double form = 0;
  const IndefiniteForm f = make_form(in.gram);
  for (const Matrix& g : in.gens) form = std::max(form, form_defect(g, f));
  Json j;
  j["algebra"] = in.label;
  j["matrix_size"] = e;
  j["algebra_dim"] = b.algebra_dim;
  j["curvature_dim"] = b.curvature_dim;
  j["generated_dim"] = b.generated_dim;
  j["variables"] = b.variables;
  j["equations"] = b.equations;
  j["projection_residual"] = b.projection_residual;
  j["berger"] = b.berger;
  add_check(r, "form_preserved", form, 1e-8);
  add_check(r, "generated_inside_algebra", b.projection_residual, tol(cfg, "berger"));
  r.headline = std::string("Berger: ") + (b.berger ? "true" : "false") + ", generated " +
               std::to_string(b.generated_dim) + " of " + std::to_string(b.algebra_dim);
  r.result = j;
  return r;
}

Json subspace_json(const Subspace& s) {
  Json j;
  j["dim"] = static_cast<int>(s.basis.cols());
  j["classification"] = to_string(s.classification);
  j["causal_tag"] = s.causal_tag ? Json(to_string(*s.causal_tag)) : Json(nullptr);
  j["invariance_residual"] = s.invariance_residual;
  j["basis"] = mat_json(s.basis);
  return j;
}

AnalysisReport invariants_analysis(const RunConfig& cfg, const Spacetime* st) {
  AnalysisReport r;
  const LieInput in = lie_input(cfg, st);
  const IndefiniteForm form = make_form(in.gram);
  InvariantSearchOptions opt;
  opt.seed = split_seed(cfg.seed, 202);
  opt.kernel_tol = tol(cfg, "kernel");
  opt.invariance_tol = tol(cfg, "invariance");
  const InvariantSearchResult res = invariant_subspaces(in.gens, cfg.lie.k, form, opt);
  Json j;
  j["algebra"] = in.label;
  j["algebra_dim"] = static_cast<int>(in.gens.size());
  j["k"] = cfg.lie.k;
  j["signature"] = {form.signature.negative, form.signature.positive};
  const Matrix ker = joint_kernel(in.gens, static_cast<int>(in.gram.rows()), tol(cfg, "kernel"));
  j["joint_kernel_dim"] = static_cast<int>(ker.cols());
  if (ker.cols() > 0) j["joint_kernel"] = subspace_json(make_subspace(ker, form));
  Json subs = Json::array();
  int isotropic = 0;
  double worst = 0;
  for (const Subspace& s : res.subspaces) {
    subs.push_back(subspace_json(s));
    isotropic += s.classification == SubspaceClass::totally_isotropic;
    worst = std::max(worst, s.invariance_residual);
  }
  j["subspaces"] = subs;
  j["found"] = static_cast<int>(res.subspaces.size());
  j["totally_isotropic"] = isotropic;
  Json duals = Json::array();
  for (const Matrix& m : res.duals) duals.push_back(static_cast<int>(m.cols()));
  j["dual_dims"] = duals;
  j["inconclusive"] = res.inconclusive;
  j["note"] = res.note;
  j["candidates"] = res.candidates;
  j["capped"] = res.capped;
  if (!res.subspaces.empty()) add_check(r, "invariance", worst, tol(cfg, "invariance"));
  r.headline = std::to_string(res.subspaces.size()) + " invariant " + std::to_string(cfg.lie.k) +
               "-dim subspaces, " + std::to_string(isotropic) + " totally isotropic";
  r.result = j;
  return r;
}

AnalysisReport counterexample_analysis(const RunConfig& cfg) {
  AnalysisReport r;
  const int n = cfg.lie.n;
  const Rational a1 = parse_rational(cfg.lie.a1), a2 = parse_rational(cfg.lie.a2);
  std::vector<Rational> b;
  if (cfg.lie.b.empty()) b.assign(n, Rational(1));
  else
    for (const std::string& s : cfg.lie.b) b.push_back(parse_rational(s));
  if (static_cast<int>(b.size()) != n) throw SpecError("lie.b needs n entries");
  const Rational value = iso_l_counterexample(n, a1, a2, b);
  Rational stated = -(a1 * a2);
  for (const Rational& x : b) stated *= x;

  const KForm<Rational> alpha = iso_l_form(n, a1, a2, b);
  KForm<double> ad(alpha.m, alpha.k);
  for (std::size_t i = 0; i < alpha.data.size(); ++i) ad.data[i] = to_double(alpha.data[i]);
  std::vector<Matrix> gens;
  for (const RMatrix& m : iso_l_algebra(n)) gens.push_back(to_double(m));
  const StabilizerReport stab = stabilizer_check(gens, ad);

  const IndefiniteForm form = make_form(to_double(isotropic_pair_form(n)));
  InvariantSearchOptions opt;
  opt.seed = split_seed(cfg.seed, 303);
  opt.invariance_tol = tol(cfg, "invariance");
  const InvariantSearchResult res = invariant_subspaces(gens, 2, form, opt);
  const Matrix l = Matrix::Identity(n + 4, 2);
  bool found = false;
  double found_res = 0.0;
  for (const Subspace& s : res.subspaces)
    if (containment_residual(l, s.basis) < 1e-9) {
      found = true;
      found_res = s.invariance_residual;
    }
  // exact: every generator maps span(x1, x2) into itself
  Rational l_exact(0);
  for (const RMatrix& g : iso_l_algebra(n))
    for (int i = 2; i < n + 4; ++i)
      for (int c = 0; c < 2; ++c) l_exact = std::max(l_exact, abs(g(i, c)));
  const Classification cl = classify_subspace(l, form);

  Json j;
  j["n"] = n;
  j["a1"] = rational_string(a1);
  j["a2"] = rational_string(a2);
  Json bj = Json::array();
  for (const Rational& x : b) bj.push_back(rational_string(x));
  j["b"] = bj;
  j["value"] = rational_string(value);
  j["value_double"] = to_double(value);
  j["stated_value"] = rational_string(stated);
  j["matches_stated"] = value == stated;
  j["nonzero"] = value != Rational(0);
  j["stabilizer"] = {{"fixed", stab.fixed}, {"max_action", stab.max_action}, {"threshold", stab.threshold}};
  j["l_found"] = found;
  j["l_invariance_residual"] = rational_string(l_exact);
  j["l_search_residual"] = found_res;
  j["l_classification"] = to_string(cl.classification);
  r.checks.push_back({"form_action_equals_minus_a1a2", std::abs(to_double(value - stated)), 0.0, value == stated});
  r.checks.push_back({"stabilizer_not_fixed", stab.max_action, stab.threshold, !stab.fixed});
  r.checks.push_back({"l_invariant", to_double(l_exact), 0.0, found && l_exact == Rational(0)});
  r.headline = "(A·α)(z1,z2,y) = " + rational_string(value) + " (stated " + rational_string(stated) +
               "), alpha " + (stab.fixed ? "fixed" : "not fixed");
  r.result = j;
  return r;
}

// ---------------------------------------------------------------- expect

bool leaf_equal(const Json& got, const Json& want) {
  if (want.is_number() && got.is_number()) {
    if (want.is_number_integer() && got.is_number_integer()) return want.get<long long>() == got.get<long long>();
    const double a = got.get<double>(), b = want.get<double>();
    return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b));
  }
  if (want.is_string() && got.is_number()) return false;
  return got == want;
}

void compare_into(const Json& result, const Json& expected, const std::string& prefix,
                  std::vector<std::string>& out) {
  for (const auto& [key, want] : expected.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    // dotted keys walk into nested objects
    const Json* node = &result;
    std::string rest = key;
    bool ok = true;
    while (true) {
      const auto dot = rest.find('.');
      const std::string head = rest.substr(0, dot);
      if (!node->is_object() || !node->contains(head)) {
        ok = false;
        break;
      }
      node = &(*node)[head];
      if (dot == std::string::npos) break;
      rest = rest.substr(dot + 1);
    }
    if (!ok) {
      out.push_back(path + ": missing from the result");
      continue;
    }
    if (want.is_object()) {
      compare_into(*node, want, path, out);
    } else if (!leaf_equal(*node, want)) {
      out.push_back(path + ": expected " + want.dump() + ", got " + node->dump());
    }
  }
}

}  // namespace

const char* tool_version() { return CONFHOL_VERSION; }

AnalysisReport run_analysis(Analysis a, const RunConfig& cfg, const Spacetime* st) {
  AnalysisReport r;
  switch (a) {
    case Analysis::curvature: r = curvature_analysis(cfg, need(st, a)); break;
    case Analysis::recognize: r = recognize_analysis(cfg, need(st, a)); break;
    case Analysis::tractor_holonomy: r = holonomy_analysis(cfg, need(st, a), TransportMode::tractor); break;
    case Analysis::tangent_holonomy: r = holonomy_analysis(cfg, need(st, a), TransportMode::tangent); break;
    case Analysis::screen_holonomy: r = screen_analysis(cfg, need(st, a)); break;
    case Analysis::ambient_compare: r = ambient_analysis(cfg, need(st, a)); break;
    case Analysis::berger: r = berger_analysis(cfg, st); break;
    case Analysis::plane_wave_sections: r = sections_analysis(cfg, need(st, a)); break;
    case Analysis::classify_invariants: r = invariants_analysis(cfg, st); break;
    case Analysis::counterexample_iso_l: r = counterexample_analysis(cfg); break;
  }
  r.analysis = a;
  bool all = true;
  for (const CheckEntry& c : r.checks) all = all && (c.verdict || !c.required);
  r.result["all_checks_pass"] = all;
  return r;
}

std::vector<std::string> compare_expect(const Json& result, const Json& expected) {
  std::vector<std::string> out;
  compare_into(result, expected, "", out);
  return out;
}

int exit_code_for(const Error& e) { return e.numerical() ? 3 : 2; }

Json error_json(const std::string& kind, const std::string& message, int exit_code) {
  return {{"error", {{"kind", kind}, {"message", message}, {"exit_code", exit_code}}}};
}

Json report_json(const AnalysisReport& r, const RunConfig& cfg) {
  Json j;
  j["schema"] = kReportSchema;
  j["tool"] = "confhol";
  j["version"] = tool_version();
  j["analysis"] = to_string(r.analysis);
  j["seed"] = cfg.seed;
  j["config"] = config_to_json(cfg);
  if (r.error) {
    j["status"] = "error";
    j["error"] = (*r.error)["error"];
    return j;
  }
  j["status"] = r.mismatches.empty() ? "ok" : "mismatch";
  j["summary"] = r.headline;
  j["result"] = r.result;
  Json checks = Json::array();
  for (const CheckEntry& c : r.checks)
    checks.push_back({{"name", c.name}, {"residual", c.residual}, {"threshold", c.threshold},
                      {"verdict", c.verdict}, {"required", c.required}});
  j["checks"] = checks;
  const std::string name = to_string(r.analysis);
  if (cfg.expect.contains(name)) j["expect"] = {{"expected", cfg.expect[name]}, {"mismatches", r.mismatches}};
  return j;
}

RunOutcome run(const RunConfig& cfg) {
  RunOutcome out;
  std::optional<Spacetime> st;
  if (cfg.spec) {
    try {
      st = build(*cfg.spec);
    } catch (const Error& e) {
      out.exit_code = exit_code_for(e);
      out.error = error_json(e.kind(), e.what(), out.exit_code);
      return out;
    }
  }
  for (Analysis a : cfg.analyses) {
    AnalysisReport r;
    try {
      r = run_analysis(a, cfg, st ? &*st : nullptr);
      const std::string name = to_string(a);
      if (cfg.expect.contains(name)) r.mismatches = compare_expect(r.result, cfg.expect[name]);
      if (!r.mismatches.empty()) out.exit_code = std::max(out.exit_code, 1);
    } catch (const Error& e) {
      r = AnalysisReport{};
      r.error_code = exit_code_for(e);
      r.error = error_json(e.kind(), e.what(), r.error_code);
      out.exit_code = std::max(out.exit_code, r.error_code);
    } catch (const std::exception& e) {
      r = AnalysisReport{};
      r.error_code = 3;
      r.error = error_json("InternalError", e.what(), 3);
      out.exit_code = 3;
    }
    r.analysis = a;
    out.reports.push_back(std::move(r));
  }
  return out;
}

std::string summary_table(const RunOutcome& out) {
  std::ostringstream s;
  if (out.error) {
    s << "error: " << (*out.error)["error"]["kind"].get<std::string>() << ": "
      << (*out.error)["error"]["message"].get<std::string>() << "\n";
    return s.str();
  }
  s << std::left << std::setw(22) << "analysis" << std::setw(10) << "status" << std::setw(8) << "checks"
    << "summary\n";
  for (const AnalysisReport& r : out.reports) {
    std::string status = r.error ? "error" : r.mismatches.empty() ? "ok" : "mismatch";
    int pass = 0, total = 0;
    for (const CheckEntry& c : r.checks)
      if (c.required) total++, pass += c.verdict;
    const std::string checks = std::to_string(pass) + "/" + std::to_string(total);
    const std::string text = r.error ? (*r.error)["error"]["kind"].get<std::string>() + ": " +
                                           (*r.error)["error"]["message"].get<std::string>()
                                     : r.headline;
    s << std::left << std::setw(22) << to_string(r.analysis) << std::setw(10) << status << std::setw(8)
      << checks << text << "\n";
    for (const CheckEntry& c : r.checks)
      if (c.required && !c.verdict)
        s << "    check " << c.name << ": residual " << c.residual << " vs threshold " << c.threshold << "\n";
    for (const std::string& m : r.mismatches) s << "    expect " << m << "\n";
  }
  s << "exit code " << out.exit_code << "\n";
  return s.str();
}

void write_reports(const RunOutcome& out, const RunConfig& cfg, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw SpecError("cannot create output directory '" + dir + "': " + ec.message());
  for (const AnalysisReport& r : out.reports) {
    std::ofstream f(fs::path(dir) / (std::string(to_string(r.analysis)) + ".json"));
    f << report_json(r, cfg).dump(2) << "\n";
  }
  std::ofstream f(fs::path(dir) / "summary.txt");
  f << summary_table(out);
}

Json family_catalog() {
  auto param = [](const char* name, const char* type, const char* doc) {
    return Json{{"name", name}, {"type", type}, {"doc", doc}};
  };
  Json fams = Json::array();
  auto fam = [&](Family f, const char* coords, Json params) {
    fams.push_back({{"family", to_string(f)}, {"coordinates", coords}, {"parameters", params}});
  };
  fam(Family::flat, "x0..x{dim-1}",
      {param("dim", "int", "dimension"), param("riemannian", "bool", "definite instead of Lorentzian")});
  fam(Family::pp_wave, "x, y1..yn, z",
      {param("n", "int", "screen dimension"), param("f", "expression", "profile f(y, z), no x")});
  fam(Family::pr_wave, "x, y1..yn, z",
      {param("n", "int", "screen dimension"), param("f", "expression", "profile f(x, y, z)")});
  fam(Family::plane_wave, "x, y1..yn, z",
      {param("a", "matrix of expressions", "symmetric a_ij(z); f = Σ a_ij y_i y_j")});
  fam(Family::cahen_wallach, "x, y1..yn, z", {param("a", "matrix of numbers", "constant symmetric a_ij")});
  fam(Family::recurrent_general, "x, y1..yn, z",
      {param("n", "int", "screen dimension"), param("f", "expression", "f(x, y, z)"),
       param("u", "list of expressions", "cross terms u_i(y, z)"),
       param("screen", "matrix of expressions", "positive definite g_ij(y, z)")});
  fam(Family::einstein_model, "u1.. (space_form) or th1, ph1, th2, ph2 (sphere_product)",
      {param("kind", "string", "space_form | sphere_product"), param("dim", "int", "dimension"),
       param("scalar", "number", "scalar curvature"), param("riemannian", "bool", "definite signature")});
  fam(Family::riemannian_block_product, "x, y.., w.., z",
      {param("base", "spec", "Riemannian block"), param("a", "matrix", "flat-block coefficients")});
  fam(Family::ambient_einstein, "s, base.., t", {param("base", "spec", "Einstein base with S != 0")});
  fam(Family::ambient_ricci_flat, "xbar, base.., zbar", {param("base", "spec", "any base")});
  fam(Family::cone, "base.., t", {param("base", "spec", "Einstein base")});
  fam(Family::custom, "coords",
      {param("coords", "list of names", "coordinate names"),
       param("components", "matrix of expressions", "symmetric metric components"),
       param("signature", "[negative, positive]", "expected signature"),
       param("box", "list of [lo, hi]", "chart box")});
  Json an = Json::array();
  for (Analysis a : all_analyses()) an.push_back(to_string(a));
  Json t = Json::object();
  for (const auto& [k, v] : default_tolerances()) t[k] = v;
  return {{"schema", kReportSchema}, {"families", fams}, {"analyses", an}, {"default_tolerances", t}};
}

Json validate_config_text(const std::string& yaml_text) {
  Json diags = Json::array();
  try {
    const RunConfig cfg = parse_config(yaml_text);
    if (cfg.spec) {
      const Spacetime st = build(*cfg.spec);
      for (const std::string& n : st.notes) diags.push_back({{"kind", "note"}, {"message", n}});
    }
    for (Analysis a : cfg.analyses) {
      const bool geometric = a != Analysis::berger && a != Analysis::classify_invariants &&
                             a != Analysis::counterexample_iso_l;
      const bool needs = geometric || ((a == Analysis::berger || a == Analysis::classify_invariants) &&
                                       cfg.lie.algebra == "holonomy");
      if (needs && !cfg.spec)
        diags.push_back({{"kind", "SpecError"}, {"message", std::string("analysis ") + to_string(a) + " needs a spec"}});
    }
    parse_rational(cfg.lie.a1);
    parse_rational(cfg.lie.a2);
    for (const std::string& b : cfg.lie.b) parse_rational(b);
  } catch (const Error& e) {
    diags.push_back({{"kind", e.kind()}, {"message", e.what()}});
  }
  bool valid = true;
  for (const Json& d : diags) valid = valid && d["kind"] == "note";
  return {{"valid", valid}, {"diagnostics", diags}};
}

Rational parse_rational(const std::string& text) {
  using boost::multiprecision::cpp_int;
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  auto integer = [&](const std::string& t) -> cpp_int {
    std::size_t i = (!t.empty() && (t[0] == '-' || t[0] == '+')) ? 1 : 0;
    if (i == t.size()) throw SpecError("not a rational number: '" + text + "'");
    for (std::size_t k = i; k < t.size(); ++k)
      if (!std::isdigit(static_cast<unsigned char>(t[k]))) throw SpecError("not a rational number: '" + text + "'");
    cpp_int v(t.substr(i));
    return t[0] == '-' ? cpp_int(-v) : v;
  };
  if (const auto slash = s.find('/'); slash != std::string::npos) {
    const cpp_int den = integer(s.substr(slash + 1));
    if (den == 0) throw SpecError("zero denominator in '" + text + "'");
    return Rational(integer(s.substr(0, slash)), den);
  }
  if (const auto dot = s.find('.'); dot != std::string::npos) {
    const std::string frac = s.substr(dot + 1);
    std::string whole = s.substr(0, dot);
    if (whole.empty() || whole == "-" || whole == "+") whole += "0";
    cpp_int scale = 1;
    for (std::size_t k = 0; k < frac.size(); ++k) scale *= 10;
    const cpp_int f = frac.empty() ? cpp_int(0) : integer(frac);
    const cpp_int w = integer(whole);
    const bool neg = whole[0] == '-';
    return Rational(neg ? cpp_int(w * scale - f) : cpp_int(w * scale + f), scale);
  }
  return Rational(integer(s));
}

std::string rational_string(const Rational& r) {
  if (r.denominator() == 1) return r.numerator().str();
  return r.numerator().str() + "/" + r.denominator().str();
}

}  // namespace confhol
