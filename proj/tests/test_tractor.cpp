#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

#include "confhol/error.hpp"
#include "confhol/tractor.hpp"

using namespace confhol;
using namespace testing;

namespace {

Matrix connection_at(const MetricField& g, const Point& p, int i) {
  return tractor_connection_matrix(curvature_bundle(g, p, CurvatureDepth::curvature), Vector::Unit(g.dim(), i));
}

// ∂_c of a matrix-valued function of the point, Richardson central difference
template <class F>
Matrix fd_matrix(const Point& p, int c, F f) {
  const double h = 1e-3;
  auto at = [&](double s) { return f(shifted(p, c, s)); };
  return (4.0 * (at(h / 2) - at(-h / 2)) / h - (at(h) - at(-h)) / (2 * h)) / 3.0;
}

MetricPtr shared(const MetricField& g) { return std::make_shared<const MetricField>(g); }

ScalarField logscale(const Spacetime& st) {
  const auto& names = st.chart()->names();
  std::string text = "0.05";
  for (std::size_t i = 0; i < names.size(); ++i)
    text += " + 0.1*sin(" + std::to_string(i + 1) + "*" + names[i] + ")*" + names[(i + 2) % names.size()];
  return ScalarField::from_expression(st.chart(), Expression::parse(text).bind(names));
}

}  // namespace

TEST_CASE("tractor metric") {
  const Matrix g = Vector::Map(std::array<double, 3>{-1, 2, 3}.data(), 3).asDiagonal();
  const Matrix G = tractor_gram(g);
  CHECK(G(0, 4) == 1.0);
  CHECK(G(4, 0) == 1.0);
  CHECK(G(2, 2) == 2.0);
  CHECK(signature_of(G) == Signature{2, 3});
  const Spacetime st = build(flat_spec(4));
  const MetricPtr gp = st.metric;
  const Tractor a(gp, st.base(), 2.0, Vector::Unit(4, 0), 3.0), b(gp, st.base(), -1.0, Vector::Unit(4, 0) + Vector::Unit(4, 1), 0.5);
  // σ η + ρ ξ + g(X, Y) = 2·0.5 + 3·(−1) − 1
  CHECK(tractor_inner(a, b) == doctest::Approx(-3.0));
  const Tractor far(gp, Point(st.chart(), Vector(Vector::Constant(4, 0.2))), 1.0, Vector::Zero(4), 0.0);
  CHECK_THROWS_AS(tractor_inner(a, far), GaugeMismatch);
  CHECK_THROWS_AS(Tractor(gp, st.base(), 1.0, Vector::Zero(3), 0.0), DimensionError);
  CHECK_THROWS_AS(Tractor(gp, st.base(), NAN, Vector::Zero(4), 0.0), DomainError);
}

TEST_CASE("tractor connection is metric") {
  std::mt19937_64 rng(17);
  for (const NamedSpec& ns : four_dim_zoo()) {
    CAPTURE(ns.name);
    const Spacetime st = build(ns.spec);
    const int d = st.metric->dim();
    // fields with constant components: ∂ contributes nothing, only A and the Gram vary
    const Vector u = random_vector(rng, d + 2), v = random_vector(rng, d + 2);
    for (const Point& p : sample_points(st.chart(), 5)) {
      for (int c = 0; c < d; ++c) {
        const Matrix dG = fd_matrix(p, c, [&](const Point& q) { return tractor_gram(eval_metric(*st.metric, q)); });
        const Matrix A = connection_at(*st.metric, p, c);
        const Matrix G = tractor_gram(eval_metric(*st.metric, p));
        const double lhs = u.dot(dG * v);
        const double rhs = (A * u).dot(G * v) + u.dot(G * (A * v));
        CHECK(std::abs(lhs - rhs) <= 1e-7 * std::max(1.0, dG.cwiseAbs().maxCoeff()));
      }
    }
  }
}

TEST_CASE("tractor derivative of an explicit field in flat space") {
  // t = (x0 x1, (x2, 0, 0, 0), 1) in Minkowski space, along ∂_0 and ∂_2
  const Spacetime st = build(flat_spec(4));
  const auto names = st.chart()->names();
  auto ex = [&](const char* s) {
    const Expression e = Expression::parse(s).bind(names);
    return ComponentFn([e](std::span<const double> x, int o) { return e.evaluate(x, o); });
  };
  TractorField t{ex("x0*x1"), {ex("x2"), ex("0"), ex("0"), ex("0")}, ex("1")};
  const Point p = st.base();
  const TractorFieldJet j = t.jet_at(p.coords());
  const Tractor d0 = tractor_derivative(st.metric, p, Vector::Unit(4, 0), j);
  // σ: ∂_0(x0 x1) − g(∂_0, Y) = x1 + x2 ; Y: ρ ∂_0 ; ρ: 0
  CHECK(d0.sigma() == doctest::Approx(p[1] + p[2]));
  CHECK((d0.y() - Vector::Unit(4, 0)).norm() < 1e-15);
  CHECK(d0.rho() == 0.0);
  const Tractor d2 = tractor_derivative(st.metric, p, Vector::Unit(4, 2), j);
  CHECK(d2.sigma() == 0.0);
  CHECK((d2.y() - Vector::Unit(4, 0) - Vector::Unit(4, 2)).norm() < 1e-15);
  CHECK_THROWS_AS(tractor_derivative(st.metric, p, Vector::Unit(3, 0), j), DimensionError);
}

TEST_CASE("tractor curvature equals the commutator of covariant derivatives") {
  for (const NamedSpec& ns : four_dim_zoo()) {
    CAPTURE(ns.name);
    const Spacetime st = build(ns.spec);
    const int d = st.metric->dim();
    for (const Point& p : sample_points(st.chart(), 3, 0.2)) {
      std::vector<Matrix> A(d), dA(d * d);
      for (int i = 0; i < d; ++i) {
        A[i] = connection_at(*st.metric, p, i);
        for (int c = 0; c < d; ++c)
          dA[c * d + i] = fd_matrix(p, c, [&](const Point& q) { return connection_at(*st.metric, q, i); });
      }
      const CurvatureBundle cb = curvature_bundle(*st.metric, p);
      const Matrix G = tractor_gram(cb.metric);
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
          const Matrix oracle = dA[i * d + j] - dA[j * d + i] + A[i] * A[j] - A[j] * A[i];
          const Matrix F = tractor_curvature(cb, Vector::Unit(d, i), Vector::Unit(d, j));
          CHECK((F - oracle).cwiseAbs().maxCoeff() <= 1e-7 * std::max(1.0, oracle.cwiseAbs().maxCoeff()));
          CHECK(form_defect_algebra(F, G) <= 1e-12 * std::max(1.0, F.cwiseAbs().maxCoeff()));
          // the ρ-column and σ-row vanish
          CHECK(F.col(d + 1).cwiseAbs().maxCoeff() == 0.0);
          CHECK(F.row(0).cwiseAbs().maxCoeff() == 0.0);
        }
    }
  }
}

TEST_CASE("conformally flat metrics have flat tractor connection") {
  for (auto spec : {space_form_spec(4, 12.0, false), space_form_spec(5, -20.0, true), flat_spec(4)}) {
    const Spacetime st = build(spec);
    for (const Point& p : sample_points(st.chart(), 10)) {
      const CurvatureBundle cb = curvature_bundle(*st.metric, p);
      for (int i = 0; i < cb.dim; ++i)
        for (int j = i + 1; j < cb.dim; ++j)
          CHECK(tractor_curvature(cb, Vector::Unit(cb.dim, i), Vector::Unit(cb.dim, j)).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("change of splitting preserves the tractor metric and intertwines the connections") {
  std::mt19937_64 rng(23);
  for (const NamedSpec& ns : four_dim_zoo()) {
    CAPTURE(ns.name);
    const Spacetime st = build(ns.spec);
    const int d = st.metric->dim();
    const ScalarField phi = logscale(st);
    const MetricField gt = conformal_rescale(*st.metric, phi);
    for (const Point& p : sample_points(st.chart(), 5)) {
      const Matrix T = theta_matrix(*st.metric, phi, p);
      const Matrix G = tractor_gram(eval_metric(*st.metric, p)), Gt = tractor_gram(eval_metric(gt, p));
      CHECK((T.transpose() * Gt * T - G).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, G.cwiseAbs().maxCoeff()));
      // T (∂_c + A_c) = (∂_c + Ã_c) T on component vectors
      for (int c = 0; c < d; ++c) {
        const Matrix dT = fd_matrix(p, c, [&](const Point& q) { return theta_matrix(*st.metric, phi, q); });
        const Matrix lhs = T * connection_at(*st.metric, p, c);
        const Matrix rhs = dT + connection_at(gt, p, c) * T;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-7 * std::max(1.0, lhs.cwiseAbs().maxCoeff()));
      }
      // curvature is conjugated
      const Vector x = random_vector(rng, d), y = random_vector(rng, d);
      const Matrix F = tractor_curvature(*st.metric, p, x, y), Ft = tractor_curvature(gt, p, x, y);
      CHECK((T * F - Ft * T).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, F.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("theta map composes to the identity and rescales σ") {
  const Spacetime st = build(generic_custom_spec());
  const ScalarField phi = logscale(st);
  const Expression e = Expression::parse("0.05 + 0.1*sin(1*a)*c + 0.1*sin(2*b)*e + 0.1*sin(3*c)*a + 0.1*sin(4*e)*b").bind(st.chart()->names());
  const ScalarField minus(st.chart(), [e](std::span<const double> x, int o) { return -e.evaluate(x, o); });
  std::mt19937_64 rng(4);
  const Point p = st.base();
  const Tractor t = Tractor::from_vector(st.metric, p, random_vector(rng, 6));
  const Tractor there = theta_map(phi, t);
  CHECK(there.sigma() == doctest::Approx(std::exp(phi.value(p)) * t.sigma()).epsilon(1e-14));
  const Tractor back = theta_map(minus, there);
  CHECK((back.vec() - t.vec()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(tractor_inner(there, there) == doctest::Approx(tractor_inner(t, t)).epsilon(1e-12));
}

TEST_CASE("canonical section of an Einstein gauge is parallel") {
  for (auto spec : {space_form_spec(4, 12.0, false), space_form_spec(4, -6.0, true)}) {
    const Spacetime st = build(spec);
    for (const Point& p : sample_points(st.chart(), 5)) {
      const Tractor s = canonical_einstein_section(st.metric, p);
      TractorFieldJet j{s.sigma(), s.y(), s.rho(), Vector::Zero(4), Matrix::Zero(4, 4), Vector::Zero(4)};
      for (int c = 0; c < 4; ++c) CHECK(tractor_derivative(st.metric, p, Vector::Unit(4, c), j).vec().norm() <= 1e-12);
    }
  }
  // a Ricci-flat gauge has ρ = 0
  const Spacetime flat = build(flat_spec(4));
  CHECK(canonical_einstein_section(flat.metric, flat.base()).rho() == 0.0);
}

TEST_CASE("tractor Bianchi identity") {
  std::mt19937_64 rng(31);
  for (const NamedSpec& ns : four_dim_zoo()) {
    CAPTURE(ns.name);
    const Spacetime st = build(ns.spec);
    const int d = st.metric->dim();
    for (const Point& p : sample_points(st.chart(), 10)) {
      const CurvatureBundle cb = curvature_bundle(*st.metric, p);
      const std::array<Vector, 3> x{random_vector(rng, d), random_vector(rng, d), random_vector(rng, d)};
      const std::array<double, 3> s{random_vector(rng, 1)[0], random_vector(rng, 1)[0], random_vector(rng, 1)[0]};
      const std::array<double, 3> r{random_vector(rng, 1)[0], random_vector(rng, 1)[0], random_vector(rng, 1)[0]};
      CHECK(tractor_bianchi_defect(cb, s, x, r).cwiseAbs().maxCoeff() <= 1e-7 * std::max(1.0, cb.weyl.max_abs()));
    }
  }
  const Spacetime s2 = build(sphere_spec());
  const Spacetime three = build(flat_spec(3));
  const std::array<Vector, 3> x{Vector::Unit(3, 0), Vector::Unit(3, 1), Vector::Unit(3, 2)};
  CHECK_THROWS_AS(tractor_bianchi_defect(*three.metric, three.base(), {1, 1, 1}, x, {0, 0, 0}), DimensionError);
  CHECK_THROWS_AS(tractor_curvature(*three.metric, three.base(), x[0], x[1]), DimensionError);
  CHECK_THROWS_AS(connection_at(*s2.metric, s2.base(), 0), DimensionError);
}

TEST_CASE("recurrent tractor field rescales to a parallel one") {
  // t = (exp(x1 − 0.5 x3), 0, 0) in Minkowski space is recurrent with θ = d(x1 − 0.5 x3)
  const Spacetime st = build(flat_spec(4));
  const Vector a = Vector::Constant(4, -0.2), b = Vector::Constant(4, 0.3);
  const CurveSpec seg = CurveSpec::segment(st.chart(), a, b);
  Vector theta = Vector::Zero(4);
  theta[1] = 1.0;
  theta[3] = -0.5;
  std::vector<RecurrentSample> samples;
  for (int k = 0; k <= 40; ++k) {
    const double t = k / 40.0;
    const Vector x = seg.map(t);
    const double s = std::exp(theta.dot(x));
    TractorFieldJet j{s, Vector::Zero(4), 0.0, s * theta, Matrix::Zero(4, 4), Vector::Zero(4)};
    samples.push_back({t, Point(st.chart(), x), seg.velocity(t), j, theta});
  }
  const RecurrentRescaleResult r = recurrent_rescale(*st.metric, samples);
  CHECK(r.recurrence_residual < 1e-14);
  CHECK(r.closedness_residual < 1e-14);
  CHECK(r.parallel_defect < 1e-14);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    CHECK(r.factor[k] == doctest::Approx(std::exp(-theta.dot(seg.map(samples[k].t) - a))).epsilon(1e-12));
    CHECK((r.parallel[k] - r.parallel[0]).cwiseAbs().maxCoeff() <= 1e-12);
  }
  samples[17].field.sigma = 0.0;
  CHECK_THROWS_AS(recurrent_rescale(*st.metric, samples), SigmaVanishes);
}
