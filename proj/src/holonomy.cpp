#include "confhol/holonomy.hpp"

#include <atomic>
#include <exception>
#include <optional>
#include <random>
#include <thread>
#include <unsupported/Eigen/MatrixFunctions>

#include "confhol/error.hpp"
#include "confhol/tractor.hpp"

namespace confhol {

namespace {

Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unflatten(const Vector& v, int m) { return Eigen::Map<const Matrix>(v.data(), m, m); }

// Shrinks a candidate loop until it stays inside the chart.
template <class Make>
std::optional<CurveSpec> fit_inside(Make make) {
  double f = 1.0;
  for (int attempt = 0; attempt < 8; ++attempt, f *= 0.5) {
    CurveSpec c = make(f);
    try {
      c.validate(32);
      return c;
    } catch (const DomainError&) {
    }
  }
  return std::nullopt;
}

}  // namespace

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over seed and stream
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

AlgebraSpan span_algebra(const std::vector<Matrix>& samples, const SpanOptions& opt) {
  AlgebraSpan s;
  s.generators = samples;
  s.threshold = opt.svd_threshold;
  if (samples.empty()) return s;
  const int m = static_cast<int>(samples.front().rows());

  std::vector<Vector> rows;
  for (const Matrix& a : samples) {
    const double nrm = a.norm();
    if (nrm <= opt.zero_floor) {
      ++s.dropped_samples;
      continue;
    }
    rows.push_back(flatten(a) / nrm);
  }

  auto decompose = [&](const std::vector<Vector>& rs) {
    s.basis.clear();
    s.singular_values.clear();
    s.residual_spectrum.clear();
    s.dim = 0;
    if (rs.empty()) return;
    Matrix stack(static_cast<int>(rs.size()), m * m);
    for (std::size_t k = 0; k < rs.size(); ++k) stack.row(static_cast<int>(k)) = rs[k].transpose();
    Eigen::JacobiSVD<Matrix> svd(stack, Eigen::ComputeThinV);
    const Vector sv = svd.singularValues();
    const double cut = opt.svd_threshold * sv[0];
    for (int k = 0; k < sv.size(); ++k) {
      s.singular_values.push_back(sv[k]);
      if (sv[k] > cut) {
        ++s.dim;
        Vector b = svd.matrixV().col(k);
        // sign convention: largest-magnitude entry positive, for reproducible output
        int imax = 0;
        b.cwiseAbs().maxCoeff(&imax);
        if (b[imax] < 0) b = -b;
        s.basis.push_back(unflatten(b, m));
      } else {
        s.residual_spectrum.push_back(sv[k]);
      }
    }
  };

  decompose(rows);
  if (!opt.close_commutators) return s;
  for (int round = 0; round < opt.max_rounds; ++round) {
    const int before = s.dim;
    std::vector<Vector> extra;
    for (int a = 0; a < s.dim; ++a)
      for (int b = a + 1; b < s.dim; ++b) {
        const Matrix c = s.basis[a] * s.basis[b] - s.basis[b] * s.basis[a];
        const Matrix out = c - project_onto(s, c);
        const double nrm = out.norm();
        if (nrm > opt.svd_threshold) extra.push_back(flatten(c) / c.norm());
      }
    if (extra.empty()) break;
    // keep the stack size bounded: current basis plus the new commutators
    std::vector<Vector> next;
    for (const Matrix& b : s.basis) next.push_back(flatten(b));
    next.insert(next.end(), extra.begin(), extra.end());
    decompose(next);
    s.closure_rounds = round + 1;
    if (s.dim == before) break;
  }
  return s;
}

Matrix project_onto(const AlgebraSpan& s, const Matrix& m) {
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  for (const Matrix& b : s.basis) out += (b.cwiseProduct(m)).sum() * b;
  return out;
}

double span_residual(const AlgebraSpan& s) {
  double r = 0.0;
  for (const Matrix& g : s.generators) r = std::max(r, (g - project_onto(s, g)).norm());
  return r;
}

std::vector<CurveSpec> build_loop_family(const ChartPtr& chart, const Vector& base,
                                         const LoopFamilyOptions& opt) {
  const int d = chart->dim();
  std::vector<CurveSpec> loops;
  int id = 0;
  auto push = [&](std::optional<CurveSpec> c, const std::string& label) {
    if (c) loops.push_back(c->set_label(label + "#" + std::to_string(id)));
    ++id;
  };

  for (std::size_t si = 0; si < opt.rect_scales.size(); ++si)
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        const double h = opt.rect_scales[si] * opt.radius;
        std::optional<CurveSpec> c;
        for (int sgn = 0; sgn < 4 && !c; ++sgn) {
          const double hi = (sgn & 1) ? -h : h, hj = (sgn & 2) ? -h : h;
          c = fit_inside([&](double f) { return CurveSpec::rectangle(chart, base, i, j, f * hi, f * hj); });
        }
        push(c, "rect(" + std::to_string(i) + "," + std::to_string(j) + ")");
      }

  for (int k = 0; k < opt.smooth_loops; ++k) {
    std::mt19937_64 rng(split_seed(opt.seed, static_cast<std::uint64_t>(id)));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vector> cs, ss;
    double bound = 0.0;
    for (int h = 0; h < opt.harmonics; ++h) {
      Vector c(d), s(d);
      for (int a = 0; a < d; ++a) c[a] = u(rng) / (h + 1);
      for (int a = 0; a < d; ++a) s[a] = u(rng) / (h + 1);
      bound += 2.0 * c.cwiseAbs().maxCoeff() + s.cwiseAbs().maxCoeff();
      cs.push_back(c);
      ss.push_back(s);
    }
    const double scale = opt.radius / bound;
    push(fit_inside([&](double f) {
           std::vector<Vector> c2 = cs, s2 = ss;
           for (auto& v : c2) v *= f * scale;
           for (auto& v : s2) v *= f * scale;
           return CurveSpec::smooth_loop(chart, base, c2, s2);
         }),
         "smooth");
  }

  for (int k = 0; k < opt.lassos; ++k) {
    std::mt19937_64 rng(split_seed(opt.seed, static_cast<std::uint64_t>(id)));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector dir(d);
    for (int a = 0; a < d; ++a) dir[a] = u(rng);
    dir /= dir.cwiseAbs().maxCoeff();
    int i = static_cast<int>(rng() % static_cast<std::uint64_t>(d));
    int j = static_cast<int>(rng() % static_cast<std::uint64_t>(d - 1));
    if (j >= i) ++j;
    if (i > j) std::swap(i, j);
    push(fit_inside([&](double f) {
           const Vector far = base + f * opt.radius * dir;
           const double h = 0.3 * f * opt.radius;
           return CurveSpec::lasso(base, CurveSpec::rectangle(chart, far, i, j, h, h));
         }),
         "lasso(" + std::to_string(i) + "," + std::to_string(j) + ")");
  }
  return loops;
}

std::vector<Matrix> curvature_generators(const MetricField& g, const Point& p, TransportMode mode) {
  const int d = g.dim();
  const CurvatureBundle cb = curvature_bundle(g, p, CurvatureDepth::full);
  std::vector<Matrix> out;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const Vector ei = Vector::Unit(d, i), ej = Vector::Unit(d, j);
      out.push_back(mode == TransportMode::tangent ? curvature_endomorphism(cb, ei, ej)
                                                   : tractor_curvature(cb, ei, ej));
    }
  return out;
}

HolonomyEstimate estimate_holonomy(const MetricField& g, const Point& base,
                                   const std::vector<CurveSpec>& loops, const HolonomyOptions& opt) {
  if (opt.mode == TransportMode::tractor && g.dim() < 4)
    throw DimensionError("tractor holonomy sampling needs dimension >= 4");
  HolonomyEstimate est;
  est.mode = opt.mode;
  est.base = base.vec();

  const std::size_t n = loops.size();
  std::vector<LoopRecord> records(n);
  std::vector<std::vector<Matrix>> per_loop(n);
  std::vector<std::exception_ptr> errors(n);

  auto job = [&](std::size_t k) {
    try {
      const TransportResult tr = transport(g, loops[k], opt.mode, opt.ode, opt.nodes_per_piece);
      LoopRecord& r = records[k];
      r.id = static_cast<int>(k);
      r.label = loops[k].label();
      r.kind = to_string(loops[k].kind());
      r.steps = tr.steps;
      r.error_estimate = tr.error_estimate;
      r.gram_defect = tr.gram_defect;
      r.holonomy = tr.matrix;
      std::vector<Matrix>& out = per_loop[k];
      for (const TransportNode& node : tr.nodes) {
        const Point q(g.chart(), node.point);
        const Eigen::PartialPivLU<Matrix> lu(node.matrix);
        for (const Matrix& F : curvature_generators(g, q, opt.mode))
          out.push_back(lu.solve(F * node.matrix));
      }
      if (opt.include_loop_logs) {
        const int m = static_cast<int>(tr.matrix.rows());
        const Matrix dev = tr.matrix - Matrix::Identity(m, m);
        if (dev.norm() < 0.5) out.push_back(tr.matrix.log());
      }
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };

  int threads = opt.threads > 0 ? opt.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (threads == 1) {
    for (std::size_t k = 0; k < n; ++k) job(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < n; k = next++) job(k);
      });
    for (auto& th : pool) th.join();
  }
  for (std::size_t k = 0; k < n; ++k)
    if (errors[k]) std::rethrow_exception(errors[k]);

  // curvature at the base itself, then loops in id order
  for (const Matrix& F : curvature_generators(g, base, opt.mode)) est.samples.push_back(F);
  for (std::size_t k = 0; k < n; ++k)
    est.samples.insert(est.samples.end(), per_loop[k].begin(), per_loop[k].end());
  est.loops = std::move(records);

  const Matrix G = bundle_gram(g, base, opt.mode);
  for (const Matrix& s : est.samples)
    est.max_form_defect = std::max(est.max_form_defect, form_defect_algebra(s, G));
  est.span = span_algebra(est.samples, opt.span);
  return est;
}

HolonomyEstimate estimate_holonomy(const MetricField& g, const Point& base,
                                   const HolonomyOptions& opt) {
  return estimate_holonomy(g, base, build_loop_family(g.chart(), base.vec(), opt.loops), opt);
}

std::vector<Matrix> ambrose_singer_samples(const MetricField& g, const Point& base,
                                           const std::vector<CurveSpec>& loops,
                                           const HolonomyOptions& opt) {
  HolonomyOptions o = opt;
  o.include_loop_logs = false;
  return estimate_holonomy(g, base, loops, o).samples;
}

AlgebraSpan screen_holonomy(const std::vector<Matrix>& tangent_samples, const Matrix& adapted_frame,
                            const SpanOptions& opt) {
  const int d = static_cast<int>(adapted_frame.rows());
  const int n = d - 2;
  const Eigen::PartialPivLU<Matrix> lu(adapted_frame);
  std::vector<Matrix> blocks;
  for (const Matrix& s : tangent_samples)
    blocks.push_back(lu.solve(s * adapted_frame).block(1, 1, n, n));
  return span_algebra(blocks, opt);
}

}  // namespace confhol
