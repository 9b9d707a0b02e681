#include "confhol/spacetime.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <regex>
#include <set>

#include "confhol/error.hpp"
#include "confhol/tractor.hpp"

namespace confhol {

namespace {

constexpr double kPi = std::numbers::pi;

struct FamilyName {
  Family f;
  const char* name;
};
constexpr FamilyName kFamilies[] = {
    {Family::flat, "flat"},
    {Family::pp_wave, "pp_wave"},
    {Family::pr_wave, "pr_wave"},
    {Family::plane_wave, "plane_wave"},
    {Family::cahen_wallach, "cahen_wallach"},
    {Family::recurrent_general, "recurrent_general"},
    {Family::einstein_model, "einstein_model"},
    {Family::riemannian_block_product, "riemannian_block_product"},
    {Family::ambient_einstein, "ambient_einstein"},
    {Family::ambient_ricci_flat, "ambient_ricci_flat"},
    {Family::cone, "cone"},
    {Family::custom, "custom"},
};

bool is_wave(Family f) {
  return f == Family::pp_wave || f == Family::pr_wave || f == Family::plane_wave ||
         f == Family::cahen_wallach || f == Family::recurrent_general;
}

// Copy a jet in `src.dim()` variables into `dim` variables, variable k -> k + offset.
Jet embed(const Jet& src, int dim, int offset) {
  const int n = src.dim(), order = src.order();
  Jet out(dim, order, src.value());
  if (order >= 1)
    for (int i = 0; i < n; ++i) out.set_d1(i + offset, src.d1(i));
  if (order >= 2)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) out.set_d2(i + offset, j + offset, src.d2(i, j));
  if (order >= 3)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        for (int k = j; k < n; ++k) out.set_d3(i + offset, j + offset, k + offset, src.d3(i, j, k));
  return out;
}

Expression bound_expr(const std::string& text, const std::vector<std::string>& coords) {
  try {
    return Expression::parse(text).bind(coords);
  } catch (const ParseError& e) {
    throw SpecError(std::string("bad expression '") + text + "': " + e.what());
  }
}

ComponentFn as_component(const Expression& e) {
  return [e](std::span<const double> x, int order) { return e.evaluate(x, order); };
}

double constant_value(const std::string& text) {
  const Expression e = bound_expr(text, {"_unused0", "_unused1"});
  if (!e.is_constant()) throw SpecError("expected a constant, got '" + text + "'");
  const double zero[2] = {0.0, 0.0};
  return e.value(zero);
}

std::vector<std::string> wave_coords(int n) {
  std::vector<std::string> c{"x"};
  for (int i = 1; i <= n; ++i) c.push_back("y" + std::to_string(i));
  c.push_back("z");
  return c;
}

std::vector<Interval> wave_box(int n) {
  std::vector<Interval> b{{-2.0, 2.0}};
  for (int i = 0; i < n; ++i) b.push_back({-1.5, 1.5});
  b.push_back({0.5, 2.0});
  return b;
}

Vector generic_point(const std::vector<Interval>& box) {
  Vector p(static_cast<int>(box.size()));
  for (std::size_t k = 0; k < box.size(); ++k) {
    const double frac = 0.5 + 0.08 * std::sin(1.3 * static_cast<double>(k) + 0.7);
    p[static_cast<int>(k)] = box[k].lo + frac * (box[k].hi - box[k].lo);
  }
  return p;
}

Vector wave_point(int n, int extra = 0) {
  Vector p(n + extra + 2);
  p[0] = 0.13;
  static const double ys[] = {0.31, -0.27, 0.23, -0.19, 0.17, -0.15, 0.13, -0.11};
  for (int i = 0; i < n + extra; ++i) p[1 + i] = ys[i % 8];
  p[n + extra + 1] = 1.07;
  return p;
}

int screen_dim(const SpacetimeSpec& s) {
  if (!s.a.empty()) return static_cast<int>(s.a.size());
  if (!s.u.empty()) return static_cast<int>(s.u.size());
  if (!s.screen.empty()) return static_cast<int>(s.screen.size());
  if (s.n == 0 && !s.f.empty()) {
    // highest screen coordinate y<k> named in the profile
    int n = 0;
    static const std::regex y(R"((^|[^A-Za-z0-9_])y([0-9]+)(?![A-Za-z0-9_]))");
    for (auto it = std::sregex_iterator(s.f.begin(), s.f.end(), y); it != std::sregex_iterator(); ++it)
      n = std::max(n, std::stoi((*it)[2].str()));
    return n;
  }
  return s.n;
}

void check_square(const std::vector<std::vector<std::string>>& m, int n, const char* what) {
  if (static_cast<int>(m.size()) != n) throw SpecError(std::string(what) + " must be n x n");
  for (const auto& row : m)
    if (static_cast<int>(row.size()) != n) throw SpecError(std::string(what) + " must be n x n");
}

// Metric data for a family: chart, jets, signature, defaults.
struct Built {
  ChartPtr chart;
  MetricJetFn fn;
  Signature sig;
  Vector base;
  bool recurrent = false;
  bool x_parallel = false;
  int x_index = 0, z_index = -1;
  std::vector<std::string> notes;
};

Built build_flat(const SpacetimeSpec& s) {
  const int d = s.dim;
  if (d < 2) throw SpecError("flat family needs dim >= 2");
  std::vector<std::string> c;
  for (int i = 0; i < d; ++i) c.push_back("x" + std::to_string(i));
  std::vector<Interval> box = s.box.value_or(std::vector<Interval>(d, Interval{-1.0, 1.0}));
  Built b;
  b.chart = make_chart(c, box);
  Matrix g = Matrix::Identity(d, d);
  if (!s.riemannian) g(0, 0) = -1.0;
  b.sig = s.riemannian ? Signature{0, d} : Signature{1, d - 1};
  b.fn = [g, d](std::span<const double>, int order) {
    std::vector<Jet> out;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out.emplace_back(d, order, g(i, j));
    return out;
  };
  b.base = generic_point(box);
  return b;
}

// 2dxdz + Σ u_i dy_i dz + f dz² + Σ g_ij dy_i dy_j in coordinates (x, y, z)
Built build_wave(int n, ComponentFn f, std::vector<ComponentFn> u,
                 std::vector<std::vector<ComponentFn>> screen,
                 const std::optional<std::vector<Interval>>& box) {
  const int d = n + 2;
  Built b;
  b.chart = make_chart(wave_coords(n), box.value_or(wave_box(n)));
  b.sig = {1, d - 1};
  b.x_index = 0;
  b.z_index = d - 1;
  b.recurrent = true;
  b.fn = [n, d, f, u, screen](std::span<const double> x, int order) {
    std::vector<Jet> out(d * d, Jet(d, order));
    auto put = [&](int i, int j, const Jet& v) {
      out[i * d + j] = v;
      out[j * d + i] = v;
    };
    put(0, d - 1, Jet(d, order, 1.0));
    put(d - 1, d - 1, f(x, order));
    for (int i = 0; i < n; ++i) {
      if (!u.empty()) put(1 + i, d - 1, 0.5 * u[i](x, order));
      for (int j = i; j < n; ++j) {
        if (screen.empty()) {
          if (i == j) put(1 + i, 1 + i, Jet(d, order, 1.0));
        } else {
          put(1 + i, 1 + j, screen[i][j](x, order));
        }
      }
    }
    return out;
  };
  b.base = wave_point(n);
  return b;
}

Built build_waves(const SpacetimeSpec& s) {
  const int n = screen_dim(s);
  if (n < 1) throw SpecError("wave families need n >= 1");
  const auto coords = wave_coords(n);
  const int d = n + 2;
  switch (s.family) {
    case Family::pp_wave:
    case Family::pr_wave: {
      if (s.f.empty()) throw SpecError("profile f is required");
      const Expression f = bound_expr(s.f, coords);
      const bool xdep = f.depends_on(0);
      if (s.family == Family::pp_wave && xdep)
        throw SpecError("pp_wave profile f must not depend on x");
      Built b = build_wave(n, as_component(f), {}, {}, s.box);
      b.x_parallel = !xdep;
      if (s.family == Family::pr_wave && xdep) b.notes.push_back("X is recurrent, not parallel");
      return b;
    }
    case Family::plane_wave: {
      check_square(s.a, n, "a");
      std::vector<std::vector<Expression>> a(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          a[i].push_back(bound_expr(s.a[i][j], coords));
          for (int c = 0; c < d - 1; ++c)
            if (a[i][j].depends_on(c)) throw SpecError("plane_wave a_ij may only depend on z");
        }
      ComponentFn f = [a, n, d](std::span<const double> x, int order) {
        Jet acc(d, order);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            acc += a[i][j].evaluate(x, order) * Jet::variable(d, order, 1 + i, x[1 + i]) *
                   Jet::variable(d, order, 1 + j, x[1 + j]);
        return acc;
      };
      Built b = build_wave(n, f, {}, {}, s.box);
      b.x_parallel = true;
      return b;
    }
    case Family::cahen_wallach: {
      check_square(s.a, n, "a");
      Matrix a(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = constant_value(s.a[i][j]);
      const Matrix as = 0.5 * (a + a.transpose());
      // closed form: f = yᵀ a y
      ComponentFn f = [as, n, d](std::span<const double> x, int order) {
        Eigen::Map<const Vector> y(x.data() + 1, n);
        const Vector ay = as * y;
        Jet out(d, order, y.dot(ay));
        if (order >= 1)
          for (int k = 0; k < n; ++k) out.set_d1(1 + k, 2.0 * ay[k]);
        if (order >= 2)
          for (int k = 0; k < n; ++k)
            for (int l = k; l < n; ++l) out.set_d2(1 + k, 1 + l, 2.0 * as(k, l));
        return out;
      };
      Built b = build_wave(n, f, {}, {}, s.box);
      b.x_parallel = true;
      return b;
    }
    case Family::recurrent_general: {
      if (s.f.empty()) throw SpecError("profile f is required");
      const Expression f = bound_expr(s.f, coords);
      std::vector<ComponentFn> u;
      if (!s.u.empty()) {
        if (static_cast<int>(s.u.size()) != n) throw SpecError("u must have n entries");
        for (const auto& t : s.u) {
          const Expression e = bound_expr(t, coords);
          if (e.depends_on(0)) throw SpecError("u_i must not depend on x");
          u.push_back(as_component(e));
        }
      }
      std::vector<std::vector<ComponentFn>> screen;
      if (!s.screen.empty()) {
        check_square(s.screen, n, "screen metric");
        screen.resize(n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            if (s.screen[i][j] != s.screen[j][i])
              throw SpecError("screen metric must be symmetric");
            const Expression e = bound_expr(s.screen[i][j], coords);
            if (e.depends_on(0)) throw SpecError("screen metric must not depend on x");
            screen[i].push_back(as_component(e));
          }
      }
      Built b = build_wave(n, as_component(f), u, screen, s.box);
      b.x_parallel = !f.depends_on(0);
      return b;
    }
    default:
      break;
  }
  throw SpecError("not a wave family");
}

Built build_einstein(const SpacetimeSpec& s) {
  if (s.kind == "sphere_product") {
    if (!(s.scalar > 0)) throw SpecError("sphere_product needs scalar curvature > 0");
    const double r2 = 4.0 / s.scalar;
    Built b;
    std::vector<Interval> box = s.box.value_or(std::vector<Interval>{
        {0.4, kPi - 0.4}, {-3.0, 3.0}, {0.4, kPi - 0.4}, {-3.0, 3.0}});
    b.chart = make_chart({"th1", "ph1", "th2", "ph2"}, box);
    b.sig = {0, 4};
    b.fn = [r2](std::span<const double> x, int order) {
      std::vector<Jet> out(16, Jet(4, order));
      out[0] = Jet(4, order, r2);
      out[10] = Jet(4, order, r2);
      const Jet s1 = sin(Jet::variable(4, order, 0, x[0]));
      const Jet s2 = sin(Jet::variable(4, order, 2, x[2]));
      out[5] = r2 * s1 * s1;
      out[15] = r2 * s2 * s2;
      return out;
    };
    b.base = generic_point(box);
    return b;
  }
  if (s.kind != "space_form") throw SpecError("unknown einstein_model kind '" + s.kind + "'");
  const int d = s.dim;
  if (d < 2) throw SpecError("einstein_model needs dim >= 2");
  const double kappa = s.scalar / (d * (d - 1.0));
  Vector eta = Vector::Ones(d);
  if (!s.riemannian) eta[0] = -1.0;
  const double half = kappa == 0.0 ? 1.0 : std::min(1.0, std::sqrt(2.0 / (std::abs(kappa) * d)));
  std::vector<Interval> box = s.box.value_or(std::vector<Interval>(d, Interval{-half, half}));
  std::vector<std::string> c;
  for (int i = 0; i < d; ++i) c.push_back("u" + std::to_string(i + 1));
  Built b;
  b.chart = make_chart(c, box);
  b.sig = s.riemannian ? Signature{0, d} : Signature{1, d - 1};
  // η / (1 + κ η(u,u)/4)²: constant sectional curvature κ
  b.fn = [eta, kappa, d](std::span<const double> x, int order) {
    Jet q(d, order);
    for (int i = 0; i < d; ++i) {
      const Jet v = Jet::variable(d, order, i, x[i]);
      q += eta[i] * v * v;
    }
    const Jet w = 1.0 + 0.25 * kappa * q;
    const Jet conf = reciprocal(w * w);
    std::vector<Jet> out(d * d, Jet(d, order));
    for (int i = 0; i < d; ++i) out[i * d + i] = eta[i] * conf;
    return out;
  };
  b.base = generic_point(box);
  return b;
}

// Einstein base check shared by the ambient Einstein metric and the cone
double einstein_scalar(const Spacetime& base) {
  const std::vector<Point> pts = sample_points(base.chart(), 12);
  const PredicateReport r = is_einstein(*base.metric, pts);
  double smin = 1e300, smax = -1e300, scale = 0.0;
  for (const Point& p : pts) {
    const CurvatureBundle cb = curvature_bundle(*base.metric, p, CurvatureDepth::curvature);
    smin = std::min(smin, cb.scalar);
    smax = std::max(smax, cb.scalar);
    scale = std::max({scale, cb.riemann.max_abs(), cb.metric.cwiseAbs().maxCoeff()});
  }
  if (!r.verdict || smax - smin > 1e-7 * std::max(1.0, scale))
    throw NotEinstein("base metric is not Einstein with constant scalar curvature");
  const double S = 0.5 * (smin + smax);
  if (std::abs(S) <= 1e-10 * std::max(1.0, scale)) throw ZeroScalar("base scalar curvature is zero");
  return S;
}

std::vector<Interval> base_box(const Spacetime& base) {
  if (base.chart()->box()) return *base.chart()->box();
  return std::vector<Interval>(base.chart()->dim(), Interval{-1.0, 1.0});
}

void require_fresh_names(const Spacetime& base, std::initializer_list<const char*> names) {
  for (const char* n : names)
    if (base.chart()->index_of(n) >= 0)
      throw SpecError(std::string("base coordinate name '") + n + "' clashes with the construction");
}

Built build_over_base(const SpacetimeSpec& s) {
  if (!s.base) throw SpecError(std::string(to_string(s.family)) + " needs a base spec");
  const Spacetime base = build(*s.base);
  const int n = base.metric->dim();
  const MetricPtr bm = base.metric;
  const Signature bs = bm->signature();
  Built b;
  const auto& bnames = base.chart()->names();
  const std::vector<Interval> bbox = base_box(base);

  if (s.family == Family::ambient_ricci_flat) {
    require_fresh_names(base, {"xbar", "zbar"});
    const int d = n + 2;
    std::vector<std::string> c{"xbar"};
    c.insert(c.end(), bnames.begin(), bnames.end());
    c.push_back("zbar");
    std::vector<Interval> box{{-2.0, 2.0}};
    box.insert(box.end(), bbox.begin(), bbox.end());
    box.push_back({0.5, 2.0});
    b.chart = make_chart(c, s.box.value_or(box));
    b.sig = {bs.negative + 1, bs.positive + 1};
    b.fn = [bm, n, d](std::span<const double> x, int order) {
      const std::vector<Jet> bj = bm->jets(x.subspan(1, n), order);
      const Jet zb = Jet::variable(d, order, d - 1, x[d - 1]);
      const Jet z2 = zb * zb;
      std::vector<Jet> out(d * d, Jet(d, order));
      out[0 * d + d - 1] = out[(d - 1) * d + 0] = Jet(d, order, 1.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out[(1 + i) * d + 1 + j] = z2 * embed(bj[i * n + j], d, 1);
      return out;
    };
    b.base = Vector(d);
    b.base[0] = 1.0;
    b.base.segment(1, n) = base.base_point;
    b.base[d - 1] = 1.0;
    b.x_index = 0;
    b.z_index = d - 1;
    b.recurrent = b.x_parallel = bs.negative == 0;
    return b;
  }

  const double S = einstein_scalar(base);
  const double c = n * (n - 1.0) / S;
  if (s.family == Family::ambient_einstein) {
    require_fresh_names(base, {"s", "t"});
    const int d = n + 2;
    std::vector<std::string> names{"s"};
    names.insert(names.end(), bnames.begin(), bnames.end());
    names.push_back("t");
    std::vector<Interval> box{{-2.0, 2.0}};
    box.insert(box.end(), bbox.begin(), bbox.end());
    box.push_back({0.5, 2.0});
    b.chart = make_chart(names, s.box.value_or(box));
    b.sig = {bs.negative + 1, bs.positive + 1};
    b.fn = [bm, n, d, c](std::span<const double> x, int order) {
      const std::vector<Jet> bj = bm->jets(x.subspan(1, n), order);
      const Jet t = Jet::variable(d, order, d - 1, x[d - 1]);
      const Jet t2 = t * t;
      std::vector<Jet> out(d * d, Jet(d, order));
      out[0] = Jet(d, order, -c);
      out[d * d - 1] = Jet(d, order, c);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out[(1 + i) * d + 1 + j] = t2 * embed(bj[i * n + j], d, 1);
      return out;
    };
    b.base = Vector(d);
    b.base[0] = 1.0;
    b.base.segment(1, n) = base.base_point;
    b.base[d - 1] = 1.0;
    b.notes.push_back(std::string("∂_s is parallel and ") + (S > 0 ? "timelike" : "spacelike"));
    return b;
  }

  // cone
  require_fresh_names(base, {"t"});
  const int d = n + 1;
  std::vector<std::string> names(bnames.begin(), bnames.end());
  names.push_back("t");
  std::vector<Interval> box = bbox;
  box.push_back({0.5, 2.0});
  b.chart = make_chart(names, s.box.value_or(box));
  b.sig = c > 0 ? Signature{bs.negative, bs.positive + 1} : Signature{bs.negative + 1, bs.positive};
  b.fn = [bm, n, d, c](std::span<const double> x, int order) {
    const std::vector<Jet> bj = bm->jets(x.subspan(0, n), order);
    const Jet t = Jet::variable(d, order, d - 1, x[d - 1]);
    const Jet t2 = t * t;
    std::vector<Jet> out(d * d, Jet(d, order));
    out[d * d - 1] = Jet(d, order, c);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out[i * d + j] = t2 * embed(bj[i * n + j], d, 0);
    return out;
  };
  b.base = Vector(d);
  b.base.head(n) = base.base_point;
  b.base[d - 1] = 1.0;
  return b;
}

Built build_block_product(const SpacetimeSpec& s) {
  if (!s.base) throw SpecError("riemannian_block_product needs a base (the Riemannian block)");
  const Spacetime block = build(*s.base);
  if (block.metric->signature().negative != 0)
    throw SpecError("riemannian_block_product needs a Riemannian block");
  const int n = static_cast<int>(s.a.size());
  check_square(s.a, n, "a");
  const int m = block.metric->dim();
  const int d = n + m + 2;
  std::vector<std::string> c{"x"};
  for (int i = 1; i <= n; ++i) c.push_back("y" + std::to_string(i));
  for (int i = 1; i <= m; ++i) c.push_back("w" + std::to_string(i));
  c.push_back("z");
  std::vector<std::vector<Expression>> a(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      a[i].push_back(bound_expr(s.a[i][j], c));
      for (int k = 0; k < d - 1; ++k)
        if (a[i][j].depends_on(k)) throw SpecError("a_ij may only depend on z");
    }
  std::vector<Interval> box{{-2.0, 2.0}};
  for (int i = 0; i < n; ++i) box.push_back({-1.5, 1.5});
  const std::vector<Interval> bb = base_box(block);
  box.insert(box.end(), bb.begin(), bb.end());
  box.push_back({0.5, 2.0});
  Built b;
  b.chart = make_chart(c, s.box.value_or(box));
  b.sig = {1, d - 1};
  const MetricPtr bm = block.metric;
  b.fn = [a, bm, n, m, d](std::span<const double> x, int order) {
    std::vector<Jet> out(d * d, Jet(d, order));
    out[d - 1] = out[(d - 1) * d] = Jet(d, order, 1.0);
    Jet f(d, order);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        f += a[i][j].evaluate(x, order) * Jet::variable(d, order, 1 + i, x[1 + i]) *
             Jet::variable(d, order, 1 + j, x[1 + j]);
    out[d * d - 1] = f;
    for (int i = 0; i < n; ++i) out[(1 + i) * d + 1 + i] = Jet(d, order, 1.0);
    const std::vector<Jet> bj = bm->jets(x.subspan(1 + n, m), order);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) out[(1 + n + i) * d + 1 + n + j] = embed(bj[i * m + j], d, 1 + n);
    return out;
  };
  b.base = Vector(d);
  b.base.head(n + 1) = wave_point(n).head(n + 1);
  b.base.segment(1 + n, m) = block.base_point;
  b.base[d - 1] = 1.07;
  b.recurrent = b.x_parallel = true;
  b.x_index = 0;
  b.z_index = d - 1;
  return b;
}

Built build_custom(const SpacetimeSpec& s) {
  const int d = static_cast<int>(s.coords.size());
  if (d < 2) throw SpecError("custom metric needs at least two coordinates");
  check_square(s.components, d, "components");
  if (s.signature.negative + s.signature.positive != d)
    throw SpecError("custom metric signature does not match the dimension");
  std::map<std::pair<int, int>, Expression> comps;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      if (s.components[i][j] != s.components[j][i])
        throw SpecError("custom metric components must be symmetric");
      const Expression e = bound_expr(s.components[i][j], s.coords);
      if (!(e.is_constant() && e.value(std::vector<double>(d, 0.0)) == 0.0)) comps[{i, j}] = e;
    }
  Built b;
  b.chart = make_chart(s.coords, s.box);
  const MetricField g = MetricField::from_expressions(b.chart, comps, s.signature);
  b.fn = [g](std::span<const double> x, int order) { return g.jets(x, order); };
  b.sig = s.signature;
  b.base = generic_point(s.box.value_or(std::vector<Interval>(d, Interval{-1.0, 1.0})));
  return b;
}

// adapted-frame tensors shared by the recognizers
struct FrameData {
  Matrix frame;   // columns X, E_1..E_n, Z
  Matrix eta;     // frame Gram matrix (exactly the model form)
  Matrix eta_inv;
  Tensor<4> R;    // R(F_a, F_b, F_c, F_d)
  Matrix ric;
  double scale = 0.0;
  int d = 0;
};

Tensor<4> to_frame(const Tensor<4>& t, const Matrix& F) {
  const int d = t.dim();
  Tensor<4> a(d), b(d);
  // transform one slot at a time
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          double s = 0.0;
          for (int m = 0; m < d; ++m) s += t(m, j, k, l) * F(m, i);
          a(i, j, k, l) = s;
        }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          double s = 0.0;
          for (int m = 0; m < d; ++m) s += a(i, m, k, l) * F(m, j);
          b(i, j, k, l) = s;
        }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          double s = 0.0;
          for (int m = 0; m < d; ++m) s += b(i, j, m, l) * F(m, k);
          a(i, j, k, l) = s;
        }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          double s = 0.0;
          for (int m = 0; m < d; ++m) s += a(i, j, k, m) * F(m, l);
          b(i, j, k, l) = s;
        }
  return b;
}

Matrix model_gram(int d) {
  Matrix eta = Matrix::Identity(d, d);
  eta(0, 0) = eta(d - 1, d - 1) = 0.0;
  eta(0, d - 1) = eta(d - 1, 0) = 1.0;
  return eta;
}

FrameData frame_data(const Spacetime& st, const Point& p) {
  FrameData fd;
  fd.frame = adapted_frame(st, p);
  fd.d = st.metric->dim();
  fd.eta = model_gram(fd.d);
  fd.eta_inv = fd.eta;  // the model form is its own inverse
  const CurvatureBundle cb = curvature_bundle(*st.metric, p, CurvatureDepth::curvature);
  fd.R = to_frame(cb.riemann, fd.frame);
  fd.ric = fd.frame.transpose() * cb.ricci * fd.frame;
  fd.scale = std::max(fd.R.max_abs(), 1e-300);
  return fd;
}

void require_recurrent(const Spacetime& st) {
  if (!st.recurrent) throw NoRecurrentField(std::string(to_string(st.spec.family)) +
                                            " carries no recurrent lightlike field");
}

double trace_condition_residual(const FrameData& fd) {
  const int d = fd.d;
  double m = 0.0;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < d; ++e) {
          double s = 0.0;
          for (int p = 0; p < d; ++p)
            for (int q = 0; q < d; ++q)
              for (int p2 = 0; p2 < d; ++p2) {
                if (fd.eta_inv(p, p2) == 0.0) continue;
                for (int q2 = 0; q2 < d; ++q2)
                  if (fd.eta_inv(q, q2) != 0.0)
                    s += fd.R(a, b, p, q) * fd.R(c, e, p2, q2) * fd.eta_inv(p, p2) * fd.eta_inv(q, q2);
              }
          m = std::max(m, std::abs(s));
        }
  return m;
}

double simple_condition_residual(const FrameData& fd) {
  const int d = fd.d;
  double m = 0.0;
  for (int a = 0; a < d - 1; ++a)  // X^⊥ = span(X, E)
    for (int b = 0; b < d - 1; ++b)
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < d; ++e) m = std::max(m, std::abs(fd.R(a, b, c, e)));
  return m;
}

double skew_condition_residual(const FrameData& fd) {
  const int d = fd.d;
  auto xi = [d](int a) { return a == d - 1 ? 1.0 : 0.0; };  // ξ = h(X,·) in the frame
  double m = 0.0;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < d; ++e)
          for (int f = 0; f < d; ++f) {
            const double s = xi(a) * fd.R(b, c, e, f) + xi(b) * fd.R(c, a, e, f) +
                             xi(c) * fd.R(a, b, e, f);
            m = std::max(m, std::abs(s));
          }
  return m;
}

Check make_check(double residual, double threshold) {
  return Check{residual, threshold, residual <= threshold};
}

}  // namespace

const char* to_string(Family f) {
  for (const auto& fn : kFamilies)
    if (fn.f == f) return fn.name;
  return "unknown";
}

Family family_from_string(const std::string& s) {
  for (const auto& fn : kFamilies)
    if (s == fn.name) return fn.f;
  throw SpecError("unknown family '" + s + "'");
}

SpacetimeSpec ambient_einstein(const SpacetimeSpec& base) {
  SpacetimeSpec s;
  s.family = Family::ambient_einstein;
  s.base = std::make_shared<SpacetimeSpec>(base);
  return s;
}

SpacetimeSpec ambient_ricci_flat(const SpacetimeSpec& base) {
  SpacetimeSpec s;
  s.family = Family::ambient_ricci_flat;
  s.base = std::make_shared<SpacetimeSpec>(base);
  return s;
}

SpacetimeSpec cone_over(const SpacetimeSpec& base) {
  SpacetimeSpec s;
  s.family = Family::cone;
  s.base = std::make_shared<SpacetimeSpec>(base);
  return s;
}

Spacetime build(const SpacetimeSpec& spec) {
  Built b;
  if (spec.family == Family::flat) b = build_flat(spec);
  else if (is_wave(spec.family)) b = build_waves(spec);
  else if (spec.family == Family::einstein_model) b = build_einstein(spec);
  else if (spec.family == Family::riemannian_block_product) b = build_block_product(spec);
  else if (spec.family == Family::custom) b = build_custom(spec);
  else b = build_over_base(spec);

  Spacetime st;
  st.spec = spec;
  st.spec.dim = b.chart->dim();
  if (is_wave(spec.family)) st.spec.n = b.chart->dim() - 2;
  st.metric = std::make_shared<const MetricField>(b.chart, b.fn, b.sig);
  st.base_point = b.base;
  st.recurrent = b.recurrent;
  st.x_parallel = b.x_parallel;
  st.x_index = b.x_index;
  st.z_index = b.z_index;
  st.notes = b.notes;
  // the base point must be a valid, nondegenerate point of the metric
  eval_metric(*st.metric, st.base());
  return st;
}

std::vector<Point> sample_points(const ChartPtr& chart, int count, double margin, int skip) {
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  const int d = chart->dim();
  const std::vector<Interval> box =
      chart->box().value_or(std::vector<Interval>(d, Interval{-1.0, 1.0}));
  std::vector<Point> out;
  for (int i = 0; i < count; ++i) {
    std::vector<double> x(d);
    for (int k = 0; k < d; ++k) {
      // radical inverse of i + skip in base primes[k]
      double f = 1.0, r = 0.0;
      for (int m = i + skip; m > 0; m /= primes[k % 16]) {
        f /= primes[k % 16];
        r += f * (m % primes[k % 16]);
      }
      const double w = box[k].hi - box[k].lo;
      x[k] = box[k].lo + w * (margin + (1.0 - 2.0 * margin) * r);
    }
    out.emplace_back(chart, std::move(x));
  }
  return out;
}

Matrix adapted_frame(const Spacetime& st, const Point& p) {
  require_recurrent(st);
  const Matrix h = eval_metric(*st.metric, p);
  const int d = st.metric->dim();
  const int xi = st.x_index, zi = st.z_index;
  Matrix F = Matrix::Zero(d, d);
  F(xi, 0) = 1.0;
  int col = 1;
  for (int k = 0; k < d; ++k) {
    if (k == xi || k == zi) continue;
    Vector v = Vector::Unit(d, k);
    for (int c = 1; c < col; ++c) v -= (F.col(c).dot(h * v)) * F.col(c);
    const double nrm2 = v.dot(h * v);
    if (!(nrm2 > 0)) throw NoRecurrentField("screen block is not positive definite");
    F.col(col++) = v / std::sqrt(nrm2);
  }
  Vector z = Vector::Unit(d, zi);
  for (int c = 1; c < d - 1; ++c) z -= (F.col(c).dot(h * z)) * F.col(c);
  const double hxz = F.col(0).dot(h * z);
  z /= hxz;
  z -= 0.5 * z.dot(h * z) * F.col(0);
  F.col(d - 1) = z;
  return F;
}

RecurrenceSample recurrence_form(const Spacetime& st, const Point& p) {
  require_recurrent(st);
  const int d = st.metric->dim();
  const CurvatureBundle cb = curvature_bundle(*st.metric, p, CurvatureDepth::connection);
  RecurrenceSample r;
  r.theta = Vector(d);
  const int x = st.x_index;
  for (int i = 0; i < d; ++i) {
    r.theta[i] = cb.christoffel(x, i, x);
    for (int k = 0; k < d; ++k)
      if (k != x) r.residual = std::max(r.residual, std::abs(cb.christoffel(k, i, x)));
  }
  const Matrix F = adapted_frame(st, p);
  r.frame_residual = (F.transpose() * cb.metric * F - model_gram(d)).cwiseAbs().maxCoeff();
  return r;
}

PpTraceReport pp_trace_condition(const Spacetime& st, const Point& p) {
  const FrameData fd = frame_data(st, p);
  PpTraceReport r;
  r.scale = fd.scale;
  r.trace = make_check(trace_condition_residual(fd), 1e-8 * fd.scale * fd.scale);
  const RecurrenceSample rs = recurrence_form(st, p);
  r.applicable = rs.theta.cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, fd.scale);
  return r;
}

PrConditionReport pr_condition(const Spacetime& st, const Point& p) {
  const FrameData fd = frame_data(st, p);
  PrConditionReport r;
  r.scale = fd.scale;
  r.simple = make_check(simple_condition_residual(fd), 1e-8 * fd.scale);
  r.skew = make_check(skew_condition_residual(fd), 1e-8 * fd.scale);
  r.consistent = r.simple.verdict == r.skew.verdict;
  return r;
}

PpEquivalenceReport pp_equivalences(const Spacetime& st, const Point& p) {
  const FrameData fd = frame_data(st, p);
  const int d = fd.d;
  const double sc = fd.scale;
  PpEquivalenceReport r;
  r.skew = make_check(skew_condition_residual(fd), 1e-8 * sc);
  r.simple = make_check(simple_condition_residual(fd), 1e-8 * sc);
  r.trace = make_check(trace_condition_residual(fd), 1e-8 * sc * sc);

  // condition (2): R = Λ_(1,2)(3,4)(ξ ⊗ r ⊗ ξ) with r symmetric, r(X,·) = 0
  std::vector<std::pair<int, int>> unknowns;
  for (int a = 1; a < d; ++a)
    for (int b = a; b < d; ++b) unknowns.push_back({a, b});
  auto xi = [d](int a) { return a == d - 1 ? 1.0 : 0.0; };
  const int neq = d * d * d * d;
  Matrix M = Matrix::Zero(neq, static_cast<int>(unknowns.size()));
  Vector rhs(neq);
  auto rsym = [](int a, int b, int ua, int ub) {
    return (a == ua && b == ub) || (a == ub && b == ua) ? 1.0 : 0.0;
  };
  int row = 0;
  for (int A = 0; A < d; ++A)
    for (int B = 0; B < d; ++B)
      for (int C = 0; C < d; ++C)
        for (int D = 0; D < d; ++D, ++row) {
          rhs[row] = fd.R(A, B, C, D);
          for (std::size_t u = 0; u < unknowns.size(); ++u) {
            const auto [ua, ub] = unknowns[u];
            M(row, static_cast<int>(u)) =
                xi(A) * rsym(B, C, ua, ub) * xi(D) - xi(B) * rsym(A, C, ua, ub) * xi(D) -
                xi(A) * rsym(B, D, ua, ub) * xi(C) + xi(B) * rsym(A, D, ua, ub) * xi(C);
          }
        }
  const Vector rfit = M.colPivHouseholderQr().solve(rhs);
  r.reconstruction = make_check((M * rfit - rhs).cwiseAbs().maxCoeff(), 1e-8 * sc);

  // condition (3): tr_(1,5)(4,8)(R ⊗ R) = ρ ξ⊗ξ⊗ξ⊗ξ
  Tensor<4> T(d);
  for (int b = 0; b < d; ++b)
    for (int c = 0; c < d; ++c)
      for (int f = 0; f < d; ++f)
        for (int g = 0; g < d; ++g) {
          double s = 0.0;
          for (int p1 = 0; p1 < d; ++p1)
            for (int p2 = 0; p2 < d; ++p2) {
              if (fd.eta_inv(p1, p2) == 0.0) continue;
              for (int q1 = 0; q1 < d; ++q1)
                for (int q2 = 0; q2 < d; ++q2)
                  if (fd.eta_inv(q1, q2) != 0.0)
                    s += fd.eta_inv(p1, p2) * fd.eta_inv(q1, q2) * fd.R(p1, b, c, q1) *
                         fd.R(p2, f, g, q2);
            }
          T(b, c, f, g) = s;
        }
  r.rho = T(d - 1, d - 1, d - 1, d - 1);
  T(d - 1, d - 1, d - 1, d - 1) = 0.0;
  r.quartic = make_check(T.max_abs(), 1e-8 * sc * sc);
  r.consistent = r.skew.verdict == r.simple.verdict && r.skew.verdict == r.reconstruction.verdict &&
                 r.skew.verdict == r.quartic.verdict && r.skew.verdict == r.trace.verdict;
  return r;
}

RicciIsotropyReport ricci_isotropy(const Spacetime& st, const Point& p) {
  const FrameData fd = frame_data(st, p);
  const int d = fd.d;
  RicciIsotropyReport r;
  for (int b = 0; b < d; ++b) {
    r.ric_x = std::max(r.ric_x, std::abs(fd.ric(0, b)));
    for (int i = 1; i < d - 1; ++i) r.ric_screen = std::max(r.ric_screen, std::abs(fd.ric(i, b)));
  }
  r.scalar = (fd.eta_inv.cwiseProduct(fd.ric)).sum();
  const Matrix gram = fd.ric * fd.eta_inv * fd.ric;
  r.gram = gram.cwiseAbs().maxCoeff();
  const double sc = std::max(fd.scale, fd.ric.cwiseAbs().maxCoeff());
  r.threshold = 1e-8 * sc;
  r.gram_threshold = 1e-8 * sc * sc;
  r.kernel_verdict = std::max(r.ric_x, r.ric_screen) <= r.threshold;
  r.gram_verdict = r.gram <= r.gram_threshold;
  r.consistent = r.kernel_verdict == r.gram_verdict &&
                 (!r.kernel_verdict || std::abs(r.scalar) <= r.threshold);
  r.isotropic = r.kernel_verdict && r.gram_verdict;
  return r;
}

PrToPpReport pr_is_pp_when_isotropic(const Spacetime& st, const CurveSpec& curve, int samples) {
  require_recurrent(st);
  const Point p0(st.chart(), curve.start());
  PrToPpReport r;
  for (int k = 0; k < samples; ++k) {
    const Point q(st.chart(), curve.map(static_cast<double>(k) / (samples - 1)));
    if (!pr_condition(st, q).simple.verdict)
      throw NotPrWave("the metric is not a pr-wave along the curve");
  }
  if (!ricci_isotropy(st, p0).isotropic) {
    r.verdict = "not applicable";
    return r;
  }
  const int d = st.metric->dim();
  const int x = st.x_index;
  // closedness of θ_i = Γ^x_{ix}
  for (int k = 0; k < samples; ++k) {
    const Point q(st.chart(), curve.map(static_cast<double>(k) / (samples - 1)));
    const CurvatureBundle cb = curvature_bundle(*st.metric, q, CurvatureDepth::curvature);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        r.closedness = std::max(
            r.closedness, std::abs(cb.dchristoffel(i, x, j, x) - cb.dchristoffel(j, x, i, x)));
  }
  // f' = −θ(γ') f per piece, compared against transporting X
  const auto& pieces = curve.pieces();
  const int np = static_cast<int>(pieces.size());
  const int per = std::max(1, (samples - 1) / np);
  const TransportResult tr = transport_tangent(*st.metric, curve, OdeOptions{}, per);
  Vector f(1);
  f[0] = 1.0;
  OdeStats stats;
  r.params.push_back(0.0);
  r.factor.push_back(1.0);
  std::size_t node = 0;
  const Vector X0 = Vector::Unit(d, x);
  for (int pi = 0; pi < np; ++pi) {
    const CurveSpec::Piece& piece = pieces[pi];
    OdeRhs rhs = [&](double s, const Vector& y, Vector& dy) {
      const Point q(st.chart(), piece.map(s));
      const CurvatureBundle cb = curvature_bundle(*st.metric, q, CurvatureDepth::connection);
      const Vector v = piece.velocity(s);
      double th = 0.0;
      for (int i = 0; i < d; ++i) th += cb.christoffel(x, i, x) * v[i];
      dy.resize(1);
      dy[0] = -th * y[0];
    };
    double h = 0.0;
    for (int q = 1; q <= per; ++q, ++node) {
      h = dopri5(rhs, static_cast<double>(q - 1) / per, static_cast<double>(q) / per, f,
                 OdeOptions{}, stats, h);
      r.params.push_back(tr.nodes[node].t);
      r.factor.push_back(f[0]);
      // parallel transport of X(γ(0)) must equal f · X(γ(t))
      const Vector moved = tr.nodes[node].matrix * X0;
      r.parallel_defect = std::max(r.parallel_defect, (moved - f[0] * X0).cwiseAbs().maxCoeff());
    }
  }
  r.verdict = r.closedness <= r.threshold ? "parallel rescaling exists" : "recurrence form not closed";
  return r;
}

SubbundleReport invariant_tractor_subbundle_check(const Spacetime& st, const Point& p,
                                                  std::uint64_t seed) {
  if (!st.recurrent)
    throw HypothesisFailed("no recurrent lightlike vector field on this family");
  const RicciIsotropyReport iso = ricci_isotropy(st, p);
  if (!iso.isotropic) throw HypothesisFailed("Ricci tensor is not totally isotropic");
  const int d = st.metric->dim();
  const Matrix F = adapted_frame(st, p);
  const Eigen::PartialPivLU<Matrix> lu(F);
  const Vector X = F.col(0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SubbundleReport r;
  for (int trial = 0; trial < 4; ++trial) {
    TractorFieldJet t;
    t.sigma = u(rng);
    const double tau = u(rng);
    t.y = tau * X;
    t.rho = 0.0;
    t.dsigma = Vector(d);
    t.drho = Vector::Zero(d);
    Vector dtau(d);
    for (int i = 0; i < d; ++i) {
      t.dsigma[i] = u(rng);
      dtau[i] = u(rng);
    }
    t.dy = X * dtau.transpose();  // X = ∂_x has constant components
    for (int k = 0; k < d; ++k) {
      const Tractor out = tractor_derivative(st.metric, p, F.col(k), t);
      const Vector c = lu.solve(out.y());
      r.residual = std::max({r.residual, c.segment(1, d - 1).cwiseAbs().maxCoeff(),
                             std::abs(out.rho())});
    }
  }
  r.invariant = r.residual <= r.threshold;
  r.subspace = Matrix::Zero(d + 2, 2);
  r.subspace(0, 0) = 1.0;
  r.subspace.block(1, 1, d, 1) = X;
  return r;
}

double plane_wave_trace(const Spacetime& st, double z) {
  const Family f = st.spec.family;
  if (f != Family::plane_wave && f != Family::cahen_wallach)
    throw SpecError("plane-wave sections need a plane_wave or cahen_wallach spec");
  const int n = static_cast<int>(st.spec.a.size());
  const auto coords = wave_coords(n);
  std::vector<double> x(n + 2, 0.0);
  x[n + 1] = z;
  double tr = 0.0;
  for (int i = 0; i < n; ++i) tr += bound_expr(st.spec.a[i][i], coords).value(x);
  return tr;
}

std::pair<Vector, Vector> plane_wave_section_values(const Spacetime& st, double z0, double z,
                                                    const OdeOptions& opt) {
  const double dm2 = st.metric->dim() - 2.0;
  OdeRhs rhs = [&](double zz, const Vector& y, Vector& dy) {
    const double k = plane_wave_trace(st, zz) / dm2;
    dy.resize(4);
    dy << y[1], k * y[0], y[3], k * y[2];
  };
  Vector y(4);
  y << 1.0, 0.0, 0.0, 1.0;
  OdeStats stats;
  dopri5(rhs, z0, z, y, opt, stats);
  return {y.head(2), y.tail(2)};
}

PlaneWaveSections plane_wave_parallel_tractors(const Spacetime& st, double z0, double z_lo,
                                               double z_hi, int grid, const OdeOptions& opt) {
  if (!(z_lo <= z0 && z0 <= z_hi) || grid < 2) throw DomainError("bad z interval for sections");
  PlaneWaveSections s;
  s.z0 = z0;
  const double dm2 = st.metric->dim() - 2.0;
  s.coefficient_at_z0 = plane_wave_trace(st, z0) / dm2;
  OdeRhs rhs = [&](double zz, const Vector& y, Vector& dy) {
    const double k = plane_wave_trace(st, zz) / dm2;
    dy.resize(4);
    dy << y[1], k * y[0], y[3], k * y[2];
  };
  for (int i = 0; i < grid; ++i) s.z.push_back(z_lo + (z_hi - z_lo) * i / (grid - 1));
  std::vector<Vector> state(grid);
  OdeStats stats;
  Vector init(4);
  init << 1.0, 0.0, 0.0, 1.0;
  // forward from z0 over the grid points >= z0, then backward
  Vector y = init;
  double zc = z0, h = 0.0;
  for (int i = 0; i < grid; ++i)
    if (s.z[i] >= z0) {
      h = dopri5(rhs, zc, s.z[i], y, opt, stats, h);
      zc = s.z[i];
      state[i] = y;
    }
  y = init;
  zc = z0;
  h = 0.0;
  for (int i = grid - 1; i >= 0; --i)
    if (s.z[i] < z0) {
      h = dopri5(rhs, zc, s.z[i], y, opt, stats, h);
      zc = s.z[i];
      state[i] = y;
    }
  for (int i = 0; i < grid; ++i) {
    s.sol1.push_back(state[i].head(2));
    s.sol2.push_back(state[i].tail(2));
    s.wronskian.push_back(state[i][0] * state[i][3] - state[i][2] * state[i][1]);
    if (i > 0) {
      if (state[i - 1][0] * state[i][0] < 0) s.zeros1.push_back(0.5 * (s.z[i - 1] + s.z[i]));
      if (state[i - 1][2] * state[i][2] < 0) s.zeros2.push_back(0.5 * (s.z[i - 1] + s.z[i]));
    }
  }
  s.steps = stats.steps;
  return s;
}

HigherDerivativeReport ambient_higher_derivative_samples(const Spacetime& st, const Point& p) {
  if (st.spec.family != Family::ambient_ricci_flat || !st.spec.base ||
      (st.spec.base->family != Family::plane_wave && st.spec.base->family != Family::cahen_wallach))
    throw SpecError("higher-derivative samples need an ambient_ricci_flat metric over a plane wave");
  const Spacetime base = build(*st.spec.base);
  const int n = static_cast<int>(base.spec.a.size());
  const int D = st.metric->dim();
  const CurvatureBundle cb = curvature_bundle(*st.metric, p, CurvatureDepth::full);
  HigherDerivativeReport r;
  r.zbar = p[D - 1];
  // ambient indices: xbar 0, base x 1, y_i 2..n+1, base z n+2, zbar n+3
  const int Z = n + 2, Zb = D - 1;
  r.first = Matrix(n, n);
  r.second = Matrix(n, n);
  r.a = Matrix(n, n);
  const auto coords = wave_coords(n);
  std::vector<double> bx(p.coords().begin() + 1, p.coords().end() - 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int Yi = 2 + i, Yj = 2 + j;
      r.first(i, j) = cb.nabla_riemann(Yi, Yj, Z, Z, Zb);
      r.second(i, j) = cb.nabla_riemann(Z, Yj, Z, Yi, Zb);
      const Expression aij = bound_expr(base.spec.a[i][j], coords);
      r.a(i, j) = 0.5 * (aij.value(bx) + bound_expr(base.spec.a[j][i], coords).value(bx));
    }
  r.residual = std::max((r.first - r.zbar * r.a).cwiseAbs().maxCoeff(),
                        (r.second + r.zbar * r.a).cwiseAbs().maxCoeff());
  // (∇_c R)(∂_i, ∂_j) as endomorphisms, plus R(∂_i, ∂_j)
  for (int c = 0; c < D; ++c)
    for (int i = 0; i < D; ++i)
      for (int j = i + 1; j < D; ++j) {
        Matrix low(D, D);  // low(m,k) = ∇_c R(i,j,k,m)
        for (int k = 0; k < D; ++k)
          for (int m = 0; m < D; ++m) low(m, k) = cb.nabla_riemann(c, i, j, k, m);
        if (low.cwiseAbs().maxCoeff() > 0) r.samples.push_back(cb.inverse * low);
      }
  for (int i = 0; i < D; ++i)
    for (int j = i + 1; j < D; ++j)
      r.samples.push_back(curvature_endomorphism(cb, Vector::Unit(D, i), Vector::Unit(D, j)));
  return r;
}

}  // namespace confhol

namespace confhol {

namespace {

Spacetime require_ambient_base(const Spacetime& ambient) {
  if (ambient.spec.family != Family::ambient_ricci_flat || !ambient.spec.base)
    throw SpecError("expected an ambient_ricci_flat spacetime");
  return build(*ambient.spec.base);
}

}  // namespace

double ambient_christoffel_residual(const Spacetime& ambient, const Point& p) {
  const Spacetime base = require_ambient_base(ambient);
  const int d = ambient.metric->dim(), n = d - 2;
  const double zb = p[d - 1];
  const Point bp(base.chart(), std::vector<double>(p.coords().begin() + 1, p.coords().end() - 1));
  const CurvatureBundle bb = curvature_bundle(*base.metric, bp, CurvatureDepth::connection);
  const CurvatureBundle ab = curvature_bundle(*ambient.metric, p, CurvatureDepth::connection);
  Tensor<3> table(d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      table(0, 1 + i, 1 + j) = -zb * bb.metric(i, j);
      for (int k = 0; k < n; ++k) table(1 + k, 1 + i, 1 + j) = bb.christoffel(k, i, j);
    }
  for (int i = 0; i < n; ++i) table(1 + i, 1 + i, d - 1) = table(1 + i, d - 1, 1 + i) = 1.0 / zb;
  return max_abs_diff(ab.christoffel, table);
}

double ambient_curvature_residual(const Spacetime& ambient, const Point& p) {
  const Spacetime base = require_ambient_base(ambient);
  const int d = ambient.metric->dim(), n = d - 2;
  const double z2 = p[d - 1] * p[d - 1];
  const Point bp(base.chart(), std::vector<double>(p.coords().begin() + 1, p.coords().end() - 1));
  const Tensor<4> rb = riemann(*base.metric, bp);
  Tensor<4> expected(d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) expected(1 + i, 1 + j, 1 + k, 1 + l) = z2 * rb(i, j, k, l);
  return max_abs_diff(riemann(*ambient.metric, p), expected);
}

Matrix tractor_adapted_frame(const Spacetime& st, const Point& p) {
  const Matrix f = adapted_frame(st, p);
  const int d = f.rows();
  Matrix b = Matrix::Zero(d + 2, d + 2);
  b(0, 0) = 1.0;
  b.block(1, 1, d, d) = f;
  b(d + 1, d + 1) = 1.0;
  return b;
}

}  // namespace confhol
