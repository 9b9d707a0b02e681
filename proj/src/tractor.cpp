#include "confhol/tractor.hpp"

#include <cmath>

#include "confhol/error.hpp"

namespace confhol {

namespace {

void require_same(const Tractor& a, const Tractor& b) {
  if (a.gauge() != b.gauge() || a.at().chart() != b.at().chart() ||
      a.at().coords() != b.at().coords())
    throw GaugeMismatch("tractors live in different gauges or at different points");
}

const Matrix& require_schouten(const CurvatureBundle& cb) {
  if (!cb.has_schouten()) throw DimensionError("tractor connection needs dimension >= 3");
  return cb.schouten;
}

// integral over [t[k], t[k+1]] of the cubic through the (up to) four nearest samples
double cubic_piece(const std::vector<double>& t, const std::vector<double>& h, std::size_t k) {
  const std::size_t n = t.size();
  std::size_t lo = k == 0 ? 0 : k - 1;
  std::size_t hi = std::min(n - 1, lo + 3);
  if (hi - lo < 3 && n >= 4) lo = hi - 3;
  auto interp = [&](double s) {
    double v = 0.0;
    for (std::size_t a = lo; a <= hi; ++a) {
      double w = h[a];
      for (std::size_t b = lo; b <= hi; ++b)
        if (b != a) w *= (s - t[b]) / (t[a] - t[b]);
      v += w;
    }
    return v;
  };
  const double mid = 0.5 * (t[k] + t[k + 1]);
  const double half = 0.5 * (t[k + 1] - t[k]);
  const double off = half / std::sqrt(3.0);
  return half * (interp(mid - off) + interp(mid + off));
}

}  // namespace

Tractor::Tractor(MetricPtr gauge, Point at, double sigma, Vector y, double rho)
    : gauge_(std::move(gauge)), at_(std::move(at)), sigma_(sigma), y_(std::move(y)), rho_(rho) {
  if (!gauge_) throw GaugeMismatch("tractor without a gauge metric");
  if (y_.size() != gauge_->dim() || at_.dim() != gauge_->dim())
    throw DimensionError("tractor tangent part does not match the gauge dimension");
  if (!std::isfinite(sigma_) || !std::isfinite(rho_) || !y_.allFinite())
    throw DomainError("tractor components must be finite");
}

Tractor Tractor::from_vector(MetricPtr gauge, Point at, const Vector& v) {
  const int d = static_cast<int>(v.size()) - 2;
  return Tractor(std::move(gauge), std::move(at), v[0], v.segment(1, d), v[d + 1]);
}

Vector Tractor::vec() const {
  const int d = dim();
  Vector v(d + 2);
  v[0] = sigma_;
  v.segment(1, d) = y_;
  v[d + 1] = rho_;
  return v;
}

Matrix tractor_gram(const Matrix& g) {
  const int d = static_cast<int>(g.rows());
  Matrix G = Matrix::Zero(d + 2, d + 2);
  G(0, d + 1) = G(d + 1, 0) = 1.0;
  G.block(1, 1, d, d) = g;
  return G;
}

double tractor_inner(const Tractor& a, const Tractor& b) {
  require_same(a, b);
  return a.sigma() * b.rho() + a.rho() * b.sigma() +
         a.y().dot(eval_metric(*a.gauge(), a.at()) * b.y());
}

double form_defect_algebra(const Matrix& m, const Matrix& gram) {
  return (m.transpose() * gram + gram * m).cwiseAbs().maxCoeff();
}

double form_defect_group(const Matrix& m, const Matrix& gram) {
  return (m.transpose() * gram * m - gram).cwiseAbs().maxCoeff();
}

TractorFieldJet TractorField::jet_at(std::span<const double> x) const {
  const int d = static_cast<int>(y.size());
  TractorFieldJet j;
  const Jet s = sigma(x, 1), r = rho(x, 1);
  j.sigma = s.value();
  j.rho = r.value();
  j.y = Vector(d);
  j.dsigma = Vector(d);
  j.drho = Vector(d);
  j.dy = Matrix(d, d);
  for (int i = 0; i < d; ++i) {
    j.dsigma[i] = s.d1(i);
    j.drho[i] = r.d1(i);
  }
  for (int k = 0; k < d; ++k) {
    const Jet yk = y[k](x, 1);
    j.y[k] = yk.value();
    for (int i = 0; i < d; ++i) j.dy(k, i) = yk.d1(i);
  }
  return j;
}

Matrix tractor_connection_matrix(const CurvatureBundle& cb, const Vector& x) {
  const int d = cb.dim;
  const Matrix& P = require_schouten(cb);
  Matrix A = Matrix::Zero(d + 2, d + 2);
  const Vector gx = cb.metric * x;
  const Vector px = P * x;
  const Vector px_up = cb.inverse * px;
  for (int j = 0; j < d; ++j) {
    A(0, 1 + j) = -gx[j];
    A(d + 1, 1 + j) = -px[j];
  }
  for (int k = 0; k < d; ++k) {
    A(1 + k, 0) = px_up[k];
    A(1 + k, d + 1) = x[k];
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += cb.christoffel(k, i, j) * x[i];
      A(1 + k, 1 + j) = s;
    }
  }
  return A;
}

Tractor tractor_derivative(const MetricPtr& g, const Point& p, const Vector& dir,
                           const TractorFieldJet& t) {
  const int d = g->dim();
  if (dir.size() != d || t.y.size() != d || t.dy.rows() != d || t.dy.cols() != d ||
      t.dsigma.size() != d || t.drho.size() != d)
    throw DimensionError("tractor field jet does not match the gauge dimension");
  const CurvatureBundle cb = curvature_bundle(*g, p, CurvatureDepth::curvature);
  Vector v(d + 2);
  v[0] = t.sigma;
  v.segment(1, d) = t.y;
  v[d + 1] = t.rho;
  Vector out = tractor_connection_matrix(cb, dir) * v;
  out[0] += t.dsigma.dot(dir);
  out.segment(1, d) += t.dy * dir;
  out[d + 1] += t.drho.dot(dir);
  return Tractor::from_vector(g, p, out);
}

Matrix tractor_curvature(const CurvatureBundle& cb, const Vector& x, const Vector& y) {
  const int d = cb.dim;
  if (d < 4) throw DimensionError("tractor curvature needs dimension >= 4");
  if (cb.depth != CurvatureDepth::full) throw DimensionError("tractor curvature needs a full bundle");
  Matrix F = Matrix::Zero(d + 2, d + 2);
  const Vector c = cotton_covector(cb, x, y);
  F.block(1, 0, d, 1) = cb.inverse * c;
  F.block(1, 1, d, d) = weyl_endomorphism(cb, x, y);
  F.block(d + 1, 1, 1, d) = -c.transpose();
  return F;
}

Matrix tractor_curvature(const MetricField& g, const Point& p, const Vector& x, const Vector& y) {
  if (g.dim() < 4) throw DimensionError("tractor curvature needs dimension >= 4");
  return tractor_curvature(curvature_bundle(g, p, CurvatureDepth::full), x, y);
}

Matrix theta_matrix(const MetricField& g, const ScalarField& phi, const Point& p) {
  const int d = g.dim();
  const Jet f = phi.jet(p, 1);
  Vector dphi(d);
  for (int i = 0; i < d; ++i) dphi[i] = f.d1(i);
  const Vector grad = eval_metric(g, p).inverse() * dphi;
  const double e = std::exp(f.value());
  Matrix T = Matrix::Zero(d + 2, d + 2);
  T(0, 0) = e;
  T.block(1, 0, d, 1) = grad / e;
  T.block(1, 1, d, d) = Matrix::Identity(d, d) / e;
  T.block(d + 1, 1, 1, d) = -dphi.transpose() / e;
  T(d + 1, 0) = -0.5 * dphi.dot(grad) / e;
  T(d + 1, d + 1) = 1.0 / e;
  return T;
}

Tractor theta_map(const ScalarField& phi, const Tractor& t, MetricPtr target) {
  if (!target) target = std::make_shared<const MetricField>(conformal_rescale(*t.gauge(), phi));
  const Matrix T = theta_matrix(*t.gauge(), phi, t.at());
  return Tractor::from_vector(std::move(target), t.at(), T * t.vec());
}

Tractor canonical_einstein_section(const MetricPtr& g, const Point& p) {
  const int d = g->dim();
  const double S = scalar_curvature(*g, p);
  return Tractor(g, p, 1.0, Vector::Zero(d), -S / (2.0 * d * (d - 1)));
}

RecurrentRescaleResult recurrent_rescale(const MetricField& g,
                                         const std::vector<RecurrentSample>& samples,
                                         double sigma_tol) {
  RecurrentRescaleResult r;
  if (samples.empty()) return r;
  const int d = g.dim();
  const std::size_t n = samples.size();

  std::vector<double> ts(n), h(n);
  for (std::size_t k = 0; k < n; ++k) {
    const RecurrentSample& s = samples[k];
    if (std::abs(s.field.sigma) < sigma_tol)
      throw SigmaVanishes("σ vanishes along the curve; the section cannot be rescaled");
    ts[k] = s.t;
    h[k] = s.theta.dot(s.velocity);
    if (k > 0 && !(ts[k] > ts[k - 1]))
      throw DomainError("recurrent samples must have increasing parameters");
  }

  // f = exp(−∫ θ(γ')) with piecewise-cubic quadrature
  r.factor.assign(n, 1.0);
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    acc += n >= 4 ? cubic_piece(ts, h, k) : 0.5 * (h[k] + h[k + 1]) * (ts[k + 1] - ts[k]);
    r.factor[k + 1] = std::exp(-acc);
  }

  auto gptr = std::shared_ptr<const MetricField>(&g, [](const MetricField*) {});
  for (std::size_t k = 0; k < n; ++k) {
    const RecurrentSample& s = samples[k];
    const TractorFieldJet& j = s.field;
    const CurvatureBundle cb = curvature_bundle(g, s.at, CurvatureDepth::curvature);

    Vector v(d + 2);
    v[0] = j.sigma;
    v.segment(1, d) = j.y;
    v[d + 1] = j.rho;
    r.parallel.push_back(r.factor[k] * v);

    Vector dv = tractor_connection_matrix(cb, s.velocity) * v;
    dv[0] += j.dsigma.dot(s.velocity);
    dv.segment(1, d) += j.dy * s.velocity;
    dv[d + 1] += j.drho.dot(s.velocity);
    const Vector rec = dv - h[k] * v;
    r.recurrence_residual = std::max(r.recurrence_residual, rec.cwiseAbs().maxCoeff());
    r.parallel_defect = std::max(r.parallel_defect, r.factor[k] * rec.cwiseAbs().maxCoeff());

    // d(g(Ŷ,·)) with Ŷ = Y/σ: antisymmetric part of g(∇_i Ŷ, ∂_j)
    const Vector yhat = j.y / j.sigma;
    Matrix nab(d, d);  // nab(k,i) = ∇_i Ŷ^k
    for (int k2 = 0; k2 < d; ++k2)
      for (int i = 0; i < d; ++i) {
        double v2 = (j.dy(k2, i) * j.sigma - j.y[k2] * j.dsigma[i]) / (j.sigma * j.sigma);
        for (int l = 0; l < d; ++l) v2 += cb.christoffel(k2, i, l) * yhat[l];
        nab(k2, i) = v2;
      }
    const Matrix low = cb.metric * nab;  // low(j,i) = g(∇_i Ŷ, ∂_j)
    r.closedness_residual =
        std::max(r.closedness_residual, (low - low.transpose()).cwiseAbs().maxCoeff());
  }
  return r;
}

Vector tractor_bianchi_defect(const CurvatureBundle& cb, const std::array<double, 3>& s,
                              const std::array<Vector, 3>& x, const std::array<double, 3>& r) {
  const int d = cb.dim;
  Vector lhs = Vector::Zero(d + 2), rhs = Vector::Zero(d + 2);
  for (int c = 0; c < 3; ++c) {
    const int i = c, j = (c + 1) % 3, k = (c + 2) % 3;
    Vector t(d + 2);
    t[0] = s[k];
    t.segment(1, d) = x[k];
    t[d + 1] = r[k];
    lhs += tractor_curvature(cb, x[i], x[j]) * t;
    rhs.segment(1, d) += s[k] * (cb.inverse * cotton_covector(cb, x[i], x[j]));
  }
  return lhs - rhs;
}

Vector tractor_bianchi_defect(const MetricField& g, const Point& p, const std::array<double, 3>& s,
                              const std::array<Vector, 3>& x, const std::array<double, 3>& r) {
  if (g.dim() < 4) throw DimensionError("tractor Bianchi identity needs dimension >= 4");
  return tractor_bianchi_defect(curvature_bundle(g, p, CurvatureDepth::full), s, x, r);
}

}  // namespace confhol
