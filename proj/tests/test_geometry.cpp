#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

#include "confhol/error.hpp"
#include "confhol/expression.hpp"
#include "confhol/jet.hpp"

using namespace confhol;
using namespace testing;

TEST_CASE("jet arithmetic matches hand derivatives") {
  // f = x y² + exp(x) sin(y) at (0.3, -0.7)
  const double x0 = 0.3, y0 = -0.7;
  const Jet x = Jet::variable(2, 3, 0, x0), y = Jet::variable(2, 3, 1, y0);
  const Jet f = x * y * y + exp(x) * sin(y);
  CHECK(f.value() == doctest::Approx(x0 * y0 * y0 + std::exp(x0) * std::sin(y0)).epsilon(1e-15));
  CHECK(f.d1(0) == doctest::Approx(y0 * y0 + std::exp(x0) * std::sin(y0)).epsilon(1e-14));
  CHECK(f.d1(1) == doctest::Approx(2 * x0 * y0 + std::exp(x0) * std::cos(y0)).epsilon(1e-14));
  CHECK(f.d2(0, 1) == doctest::Approx(2 * y0 + std::exp(x0) * std::cos(y0)).epsilon(1e-14));
  CHECK(f.d2(1, 1) == doctest::Approx(2 * x0 - std::exp(x0) * std::sin(y0)).epsilon(1e-14));
  CHECK(f.d3(0, 1, 1) == doctest::Approx(2 - std::exp(x0) * std::sin(y0)).epsilon(1e-14));
  CHECK(f.d3(1, 1, 1) == doctest::Approx(-std::exp(x0) * std::cos(y0)).epsilon(1e-14));
  CHECK(f.d3(0, 0, 0) == doctest::Approx(std::exp(x0) * std::sin(y0)).epsilon(1e-14));
}

TEST_CASE("jet derivative blocks are exactly symmetric") {
  const Jet x = Jet::variable(3, 3, 0, 0.4), y = Jet::variable(3, 3, 1, 1.3), z = Jet::variable(3, 3, 2, -0.2);
  const Jet f = log(1.0 + x * x) * cos(y * z) / (2.0 + sin(x * y * z)) + pow(1.5 + y, 2.5) * sqrt(2.0 + z);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(f.d2(i, j) == f.d2(j, i));
      for (int k = 0; k < 3; ++k) {
        CHECK(f.d3(i, j, k) == f.d3(j, i, k));
        CHECK(f.d3(i, j, k) == f.d3(k, j, i));
        CHECK(f.d3(i, j, k) == f.d3(i, k, j));
      }
    }
}

TEST_CASE("jet third derivatives agree with finite differences of second derivatives") {
  auto eval = [](double a, double b) {
    const Jet x = Jet::variable(2, 3, 0, a), y = Jet::variable(2, 3, 1, b);
    return reciprocal(1.0 + x * x * y) * exp(y * 0.5) - powi(x - y, 3);
  };
  const Jet f = eval(0.2, 0.6);
  const double fd = fd_derivative([&](double h) { return eval(0.2 + h, 0.6).d2(0, 1); });
  CHECK(f.d3(0, 0, 1) == doctest::Approx(fd).epsilon(1e-8));
  const double fd2 = fd_derivative([&](double h) { return eval(0.2, 0.6 + h).d2(1, 1); });
  CHECK(f.d3(1, 1, 1) == doctest::Approx(fd2).epsilon(1e-8));
}

TEST_CASE("expressions parse, bind and evaluate") {
  const Expression e = Expression::parse("2*x^2 - sin(y)/3 + exp(-x*y) + pi").bind({"x", "y"});
  const std::vector<double> p{0.5, 1.2};
  CHECK(e.value(p) == doctest::Approx(2 * 0.25 - std::sin(1.2) / 3 + std::exp(-0.6) + M_PI).epsilon(1e-15));
  const Jet j = e.evaluate(p, 2);
  CHECK(j.d1(0) == doctest::Approx(4 * 0.5 - 1.2 * std::exp(-0.6)).epsilon(1e-14));
  CHECK(e.depends_on(0));
  CHECK(e.depends_on(1));
  CHECK(Expression::parse("3*z").bind({"x", "z"}).depends_on(0) == false);
  CHECK(Expression::parse("-2^2").bind({}).value({}) == doctest::Approx(-4));
  CHECK(Expression::parse("2^3^2").bind({}).value({}) == doctest::Approx(512));
  CHECK(Expression::parse("k*x").bind({"x"}, {{"k", 3.0}}).value(std::vector<double>{2.0}) == 6.0);
}

TEST_CASE("expression errors") {
  CHECK_THROWS_AS(Expression::parse("2*(x+"), ParseError);
  CHECK_THROWS_AS(Expression::parse("x $ y"), ParseError);
  CHECK_THROWS_AS(Expression::parse("q*x").bind({"x"}), ParseError);
  CHECK_THROWS_AS(Expression::parse("tanh(x)").bind({"x"}), ParseError);
}

TEST_CASE("chart and point validation") {
  CHECK_THROWS_AS(make_chart({"x"}), DimensionError);
  CHECK_THROWS_AS(make_chart({"x", "x"}), DomainError);
  const ChartPtr c = make_chart({"x", "y"}, std::vector<Interval>{{0, 1}, {-1, 1}});
  CHECK(c->index_of("y") == 1);
  CHECK(c->index_of("w") == -1);
  CHECK_NOTHROW(Point(c, std::vector<double>{0.5, 0.0}));
  CHECK_THROWS_AS(Point(c, std::vector<double>{1.5, 0.0}), DomainError);
  CHECK_THROWS_AS(Point(c, std::vector<double>{0.5}), DomainError);
  CHECK_THROWS_AS(Point(c, std::vector<double>{0.5, NAN}), DomainError);
}

TEST_CASE("eval_metric examples") {
  const Spacetime flat = build(flat_spec(4));
  const Matrix g = eval_metric(*flat.metric, flat.base());
  CHECK((g - Vector::Map(std::vector<double>{-1, 1, 1, 1}.data(), 4).asDiagonal().toDenseMatrix()).norm() == 0.0);

  // plane wave at (x, 1, 0, z): h_zz = a_11(z)
  const Spacetime pw = build(plane_wave_spec({{"1 + z^2", "0.5"}, {"0.5", "-1"}}));
  const Point p(pw.chart(), std::vector<double>{0.3, 1.0, 0.0, 1.4});
  const Matrix h = eval_metric(*pw.metric, p);
  CHECK(h(3, 3) == doctest::Approx(1 + 1.4 * 1.4));
  CHECK(h(0, 3) == 1.0);
  CHECK(h(1, 1) == 1.0);
  CHECK(h(0, 0) == 0.0);

  // ambient over flat at z̄ = 2: spatial block 4δ
  const Spacetime amb = build(ambient_ricci_flat(flat_spec(3, true)));
  std::vector<double> x(5, 0.1);
  x[4] = 1.999;
  const Matrix ga = eval_metric(*amb.metric, Point(amb.chart(), x));
  CHECK(ga.block(1, 1, 3, 3).isApprox(1.999 * 1.999 * Matrix::Identity(3, 3), 1e-15));
  CHECK(ga(0, 4) == 1.0);
}

TEST_CASE("degenerate metrics are rejected") {
  SpacetimeSpec s;
  s.family = Family::custom;
  s.coords = {"u", "v"};
  s.components = {{"u", "0"}, {"0", "1"}};
  s.signature = {0, 2};
  s.box = std::vector<Interval>{{-1, 1}, {-1, 1}};
  s.family = Family::custom;
  SpacetimeSpec ok = s;
  ok.box = std::vector<Interval>{{0.5, 1}, {-1, 1}};
  const Spacetime st = build(ok);
  const ChartPtr wide = make_chart({"u", "v"}, std::vector<Interval>{{-1, 1}, {-1, 1}});
  MetricField g = MetricField::from_expressions(
      wide, {{{0, 0}, Expression::parse("u").bind({"u", "v"})}, {{1, 1}, Expression::parse("1").bind({"u", "v"})}},
      {0, 2});
  CHECK_THROWS_AS(eval_metric(g, Point(wide, std::vector<double>{0.0, 0.2})), DegenerateMetric);
  // wrong signature is also a degeneracy report
  CHECK_THROWS_AS(eval_metric(g, Point(wide, std::vector<double>{-0.5, 0.2})), DegenerateMetric);
  CHECK_NOTHROW(eval_metric(*st.metric, st.base()));
}

TEST_CASE("metric jets of a constant metric vanish") {
  const Spacetime flat = build(flat_spec(5));
  const MetricJet mj = metric_jet(*flat.metric, flat.base(), 3);
  for (double v : mj.d1) CHECK(v == 0.0);
  for (double v : mj.d2) CHECK(v == 0.0);
  for (double v : mj.d3) CHECK(v == 0.0);
}

TEST_CASE("pp-wave second derivative of h_zz is the Hessian of the profile") {
  const Spacetime pp = build(pp_spec("y1^2*y2 + sin(z)*y1"));
  const Point p = pp.base();
  const MetricJet mj = metric_jet(*pp.metric, p, 3);
  const int d = 4;
  const double y1 = p[1], y2 = p[2];
  auto d2 = [&](int c, int e) { return mj.d2[((c * d + e) * d + 3) * d + 3]; };
  CHECK(d2(1, 1) == doctest::Approx(2 * y2).epsilon(1e-14));
  CHECK(d2(1, 2) == doctest::Approx(2 * y1).epsilon(1e-14));
  CHECK(d2(2, 2) == doctest::Approx(0.0));
}

TEST_CASE("jets of every family agree with finite differences") {
  std::mt19937_64 rng(5);
  for (const NamedSpec& ns : four_dim_zoo()) {
    CAPTURE(ns.name);
    const Spacetime st = build(ns.spec);
    const int d = st.metric->dim();
    for (const Point& p : sample_points(st.chart(), 20, 0.15)) {
      const MetricJet mj = metric_jet(*st.metric, p, 3);
      double scale = 1.0;
      for (double v : mj.d3) scale = std::max(scale, std::abs(v));
      for (int c = 0; c < d; ++c) {
        auto along = [&](double h) { return st.metric->jet_at(shifted(p, c, h).coords(), 3); };
        const MetricJet plus = along(1e-3), minus = along(-1e-3), plus2 = along(5e-4), minus2 = along(-5e-4);
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) {
            auto rich = [&](double fp, double fm, double fp2, double fm2) {
              return (4.0 * (fp2 - fm2) / 1e-3 - (fp - fm) / 2e-3) / 3.0;
            };
            const double fd1 = rich(plus.g(a, b), minus.g(a, b), plus2.g(a, b), minus2.g(a, b));
            CHECK(std::abs(mj.d1[(c * d + a) * d + b] - fd1) <= 1e-6 * scale);
            for (int e = 0; e < d; ++e) {
              const std::size_t k1 = (e * d + a) * d + b;
              const std::size_t k2 = ((c * d + e) * d + a) * d + b;
              const double fd2 = rich(plus.d1[k1], minus.d1[k1], plus2.d1[k1], minus2.d1[k1]);
              CHECK(std::abs(mj.d2[k2] - fd2) <= 1e-6 * scale);
              const int f = (a + b + e) % d;
              const std::size_t k3 = ((e * d + f) * d + a) * d + b;
              const std::size_t k4 = (((c * d + e) * d + f) * d + a) * d + b;
              const double fd3 = rich(plus.d2[k3], minus.d2[k3], plus2.d2[k3], minus2.d2[k3]);
              CHECK(std::abs(mj.d3[k4] - fd3) <= 1e-6 * scale);
            }
          }
      }
    }
  }
}

TEST_CASE("every family is symmetric, nondegenerate and of constant signature") {
  for (const NamedSpec& ns : four_dim_zoo()) {
    CAPTURE(ns.name);
    const Spacetime st = build(ns.spec);
    for (const Point& p : sample_points(st.chart(), 100, 0.02)) {
      const Matrix g = eval_metric(*st.metric, p);
      CHECK((g - g.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK(signature_of(g) == st.metric->signature());
    }
  }
}

TEST_CASE("conformal rescale") {
  const Spacetime st = build(generic_custom_spec());
  const ChartPtr c = st.chart();
  const Point p = st.base();
  SUBCASE("zero log-scale is the identity") {
    const MetricField g2 = conformal_rescale(*st.metric, ScalarField::constant(c, 0.0));
    const MetricJet a = metric_jet(*st.metric, p), b = metric_jet(g2, p);
    CHECK((a.g - b.g).norm() == 0.0);
    for (std::size_t k = 0; k < a.d3.size(); ++k) CHECK(a.d3[k] == b.d3[k]);
  }
  SUBCASE("constant factor scales the components") {
    const double cst = 1.7;
    const MetricField g2 = conformal_rescale(*st.metric, ScalarField::constant(c, -std::log(cst)));
    CHECK((eval_metric(g2, p) - eval_metric(*st.metric, p) / (cst * cst)).norm() < 1e-14);
  }
  SUBCASE("rescaling back reproduces components and jets") {
    const Expression e = Expression::parse("0.2*sin(a) + 0.1*b*c - 0.05*e^2").bind(c->names());
    const ScalarField phi = ScalarField::from_expression(c, e);
    const ScalarField minus(c, [e](std::span<const double> x, int order) { return -e.evaluate(x, order); });
    const MetricField back = conformal_rescale(conformal_rescale(*st.metric, phi), minus);
    for (const Point& q : sample_points(c, 10)) {
      const MetricJet a = metric_jet(*st.metric, q), b = metric_jet(back, q);
      CHECK((a.g - b.g).cwiseAbs().maxCoeff() <= 1e-12 * a.g.cwiseAbs().maxCoeff());
      for (std::size_t k = 0; k < a.d3.size(); ++k) CHECK(std::abs(a.d3[k] - b.d3[k]) <= 1e-12 * (1 + std::abs(a.d3[k])));
    }
  }
  SUBCASE("chart mismatch") {
    const ChartPtr other = make_chart({"p", "q", "r", "s"});
    CHECK_THROWS_AS(conformal_rescale(*st.metric, ScalarField::constant(other, 0.0)), DomainError);
  }
}

TEST_CASE("musical isomorphisms") {
  const Spacetime flat = build(flat_spec(4));
  const Vector low = lower_index(*flat.metric, flat.base(), Vector::Unit(4, 0));
  CHECK(low.isApprox(-Vector::Unit(4, 0)));
  const Spacetime st = build(generic_custom_spec());
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    const Vector v = random_vector(rng, 4);
    CHECK((raise_index(*st.metric, st.base(), lower_index(*st.metric, st.base(), v)) - v).norm() <= 1e-12);
  }
  // pp-wave: h(X,·) = dz for X = ∂_x, and the adapted Z satisfies h(X,Z)=1, h(Z,Z)=0
  const Spacetime pp = build(pp_spec("y1^2 - y2^2*z"));
  const Vector xl = lower_index(*pp.metric, pp.base(), Vector::Unit(4, 0));
  CHECK(xl.isApprox(Vector::Unit(4, 3)));
  const Matrix f = adapted_frame(pp, pp.base());
  const Matrix h = eval_metric(*pp.metric, pp.base());
  CHECK(f.col(0).dot(h * f.col(3)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(f.col(3).dot(h * f.col(3))) < 1e-14);
}

TEST_CASE("curve specifications") {
  const ChartPtr c = make_chart({"a", "b", "e"}, std::vector<Interval>{{-1, 1}, {-1, 1}, {-1, 1}});
  const Vector base = Vector::Constant(3, 0.1);
  SUBCASE("rectangle is exactly closed and piecewise") {
    const CurveSpec r = CurveSpec::rectangle(c, base, 0, 2, 0.3, -0.2);
    CHECK(r.kind() == CurveKind::rectangle_loop);
    CHECK(r.pieces().size() == 4);
    CHECK(r.closed());
    CHECK((r.map(0.25) - (base + 0.3 * Vector::Unit(3, 0))).norm() < 1e-15);
    CHECK_NOTHROW(r.validate());
  }
  SUBCASE("smooth loop closes exactly and its velocity is the derivative") {
    std::vector<Vector> cs{Vector::Constant(3, 0.1), Vector::Constant(3, -0.05)};
    std::vector<Vector> sn{Vector::Constant(3, 0.2), Vector::Constant(3, 0.03)};
    const CurveSpec l = CurveSpec::smooth_loop(c, base, cs, sn);
    CHECK(l.closed());
    CHECK((l.map(0.0).array() == l.map(1.0).array()).all());
    for (double t : {0.1, 0.37, 0.8}) {
      for (int i = 0; i < 3; ++i) {
        const double fd = fd_derivative([&](double h) { return l.map(t + h)[i]; });
        CHECK(l.velocity(t)[i] == doctest::Approx(fd).epsilon(1e-8));
      }
    }
  }
  SUBCASE("leaving the chart is a DomainError") {
    const CurveSpec bad = CurveSpec::rectangle(c, base, 0, 1, 1.5, 0.1);
    CHECK_THROWS_AS(bad.validate(), DomainError);
  }
  SUBCASE("lasso, concat and reversal") {
    const CurveSpec far = CurveSpec::rectangle(c, Vector::Constant(3, 0.5), 0, 1, 0.1, 0.1);
    const CurveSpec las = CurveSpec::lasso(base, far);
    CHECK(las.closed());
    CHECK((las.start() - base).norm() == 0.0);
    CHECK_NOTHROW(las.validate());
    const CurveSpec rev = las.reversed();
    for (double t : {0.0, 0.3, 0.71, 1.0}) CHECK((rev.map(t) - las.map(1.0 - t)).norm() < 1e-14);
    const CurveSpec s1 = CurveSpec::segment(c, base, Vector::Constant(3, 0.4));
    const CurveSpec s2 = CurveSpec::segment(c, Vector::Constant(3, 0.4), base);
    const CurveSpec both = CurveSpec::concat({s1, s2});
    CHECK(both.closed());
    CHECK((both.map(0.5) - Vector::Constant(3, 0.4)).norm() < 1e-15);
  }
}
