#include "confhol/curvature.hpp"

#include <algorithm>
#include <cmath>

#include "confhol/error.hpp"

namespace confhol {

namespace {

// (A◇B) accumulated into `out` with weight w
void add_kulkarni_nomizu(Tensor<4>& out, const Matrix& a, const Matrix& b, double w) {
  const int d = out.dim();
  for (int u = 0; u < d; ++u)
    for (int v = 0; v < d; ++v)
      for (int x = 0; x < d; ++x)
        for (int y = 0; y < d; ++y)
          out(u, v, x, y) += w * (a(u, x) * b(v, y) + a(v, y) * b(u, x) - a(u, y) * b(v, x) -
                                  a(v, x) * b(u, y));
}

}  // namespace

Tensor<4> kulkarni_nomizu(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.rows() != a.cols() || b.rows() != b.cols())
    throw DimensionError("Kulkarni-Nomizu product needs square matrices of equal size");
  Tensor<4> t(static_cast<int>(a.rows()));
  add_kulkarni_nomizu(t, a, b, 1.0);
  return t;
}

CurvatureBundle curvature_from_jet(const MetricJet& mj, CurvatureDepth depth) {
  const int d = mj.dim;
  const int need = static_cast<int>(depth);
  if (mj.order < need) throw DimensionError("metric jet order too low for requested curvature");

  CurvatureBundle cb;
  cb.dim = d;
  cb.depth = depth;
  cb.metric = mj.g;
  const Matrix& g = cb.metric;
  cb.inverse = g.inverse();
  const Matrix& gi = cb.inverse;

  auto D1 = [&](int c, int a, int b) { return mj.d1[(c * d + a) * d + b]; };

  // ∂_c g^{ab}
  std::vector<Matrix> dg(d), dgi(d);
  for (int c = 0; c < d; ++c) {
    dg[c].resize(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) dg[c](a, b) = D1(c, a, b);
    dgi[c] = -gi * dg[c] * gi;
  }

  // lowered symbols G(l,i,j) = Γ_{l,ij}
  Tensor<3> G(d);
  for (int l = 0; l < d; ++l)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) G(l, i, j) = 0.5 * (D1(i, l, j) + D1(j, l, i) - D1(l, i, j));

  Tensor<3>& Gam = cb.christoffel = Tensor<3>(d);
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        double s = 0.0;
        for (int l = 0; l < d; ++l) s += gi(k, l) * G(l, i, j);
        Gam(k, i, j) = Gam(k, j, i) = s;
      }
  if (depth == CurvatureDepth::connection) return cb;

  auto D2 = [&](int c, int e, int a, int b) { return mj.d2[((c * d + e) * d + a) * d + b]; };
  Tensor<4> dG(d);  // (c,l,i,j)
  for (int c = 0; c < d; ++c)
    for (int l = 0; l < d; ++l)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          dG(c, l, i, j) = 0.5 * (D2(c, i, l, j) + D2(c, j, l, i) - D2(c, l, i, j));

  Tensor<4>& dGam = cb.dchristoffel = Tensor<4>(d);
  for (int c = 0; c < d; ++c)
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
          double s = 0.0;
          for (int l = 0; l < d; ++l) s += dgi[c](k, l) * G(l, i, j) + gi(k, l) * dG(c, l, i, j);
          dGam(c, k, i, j) = dGam(c, k, j, i) = s;
        }

  Tensor<4>& Rop = cb.riemann_op = Tensor<4>(d);
  for (int l = 0; l < d; ++l)
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
          double s = dGam(i, l, j, k) - dGam(j, l, i, k);
          for (int m = 0; m < d; ++m) s += Gam(l, i, m) * Gam(m, j, k) - Gam(l, j, m) * Gam(m, i, k);
          Rop(l, k, i, j) = s;
          Rop(l, k, j, i) = -s;
        }

  Tensor<4>& R4 = cb.riemann = Tensor<4>(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int w = 0; w < d; ++w) {
          double s = 0.0;
          for (int l = 0; l < d; ++l) s += g(w, l) * Rop(l, k, i, j);
          R4(i, j, k, w) = s;
        }

  cb.ricci = Matrix::Zero(d, d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += Rop(i, k, i, j);
      cb.ricci(j, k) = s;
    }
  cb.ricci = 0.5 * (cb.ricci + cb.ricci.transpose());
  cb.scalar = (gi.cwiseProduct(cb.ricci)).sum();

  if (d >= 3) {
    cb.schouten = (cb.ricci - cb.scalar / (2.0 * (d - 1)) * g) / (d - 2.0);
    cb.weyl = R4;
    add_kulkarni_nomizu(cb.weyl, g, cb.schouten, 1.0);
  }
  if (depth == CurvatureDepth::curvature) return cb;

  auto D3 = [&](int c, int e, int f, int a, int b) {
    return mj.d3[(((c * d + e) * d + f) * d + a) * d + b];
  };
  std::vector<Matrix> ddgi(d * d);
  for (int c = 0; c < d; ++c)
    for (int e = 0; e < d; ++e) {
      Matrix d2ce(d, d);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) d2ce(a, b) = D2(c, e, a, b);
      ddgi[c * d + e] = -dgi[e] * dg[c] * gi - gi * d2ce * gi - gi * dg[c] * dgi[e];
    }

  Tensor<5> ddGam(d);  // (c,e,k,i,j)
  {
    std::vector<double> ddG(static_cast<std::size_t>(d) * d * d * d * d);
    auto IX = [d](int c, int e, int l, int i, int j) {
      return (((static_cast<std::size_t>(c) * d + e) * d + l) * d + i) * d + j;
    };
    for (int c = 0; c < d; ++c)
      for (int e = c; e < d; ++e)
        for (int l = 0; l < d; ++l)
          for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
              double v = 0.5 * (D3(c, e, i, l, j) + D3(c, e, j, l, i) - D3(c, e, l, i, j));
              ddG[IX(c, e, l, i, j)] = ddG[IX(e, c, l, i, j)] = v;
            }
    for (int c = 0; c < d; ++c)
      for (int e = c; e < d; ++e)
        for (int k = 0; k < d; ++k)
          for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
              double s = 0.0;
              for (int l = 0; l < d; ++l)
                s += ddgi[c * d + e](k, l) * G(l, i, j) + dgi[c](k, l) * dG(e, l, i, j) +
                     dgi[e](k, l) * dG(c, l, i, j) + gi(k, l) * ddG[IX(c, e, l, i, j)];
              ddGam(c, e, k, i, j) = ddGam(c, e, k, j, i) = ddGam(e, c, k, i, j) =
                  ddGam(e, c, k, j, i) = s;
            }
  }

  Tensor<5> dRop(d);  // (c,l,k,i,j)
  for (int c = 0; c < d; ++c)
    for (int l = 0; l < d; ++l)
      for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
          for (int j = i + 1; j < d; ++j) {
            double s = ddGam(c, i, l, j, k) - ddGam(c, j, l, i, k);
            for (int m = 0; m < d; ++m)
              s += dGam(c, l, i, m) * Gam(m, j, k) + Gam(l, i, m) * dGam(c, m, j, k) -
                   dGam(c, l, j, m) * Gam(m, i, k) - Gam(l, j, m) * dGam(c, m, i, k);
            dRop(c, l, k, i, j) = s;
            dRop(c, l, k, j, i) = -s;
          }

  Tensor<5> dR4(d);  // (c,i,j,k,w) = ∂_c R4
  for (int c = 0; c < d; ++c)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          for (int w = 0; w < d; ++w) {
            double s = 0.0;
            for (int l = 0; l < d; ++l)
              s += dg[c](w, l) * Rop(l, k, i, j) + g(w, l) * dRop(c, l, k, i, j);
            dR4(c, i, j, k, w) = s;
          }

  Tensor<5>& nR = cb.nabla_riemann = Tensor<5>(d);
  for (int c = 0; c < d; ++c)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          for (int w = 0; w < d; ++w) {
            double s = dR4(c, i, j, k, w);
            for (int m = 0; m < d; ++m)
              s -= Gam(m, c, i) * R4(m, j, k, w) + Gam(m, c, j) * R4(i, m, k, w) +
                   Gam(m, c, k) * R4(i, j, m, w) + Gam(m, c, w) * R4(i, j, k, m);
            nR(c, i, j, k, w) = s;
          }

  if (d < 3) return cb;

  std::vector<Matrix> dRic(d, Matrix::Zero(d, d));
  Vector dS(d);
  for (int c = 0; c < d; ++c) {
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += dRop(c, i, k, i, j);
        dRic[c](j, k) = s;
      }
    dRic[c] = 0.5 * (dRic[c] + dRic[c].transpose());
    dS[c] = dgi[c].cwiseProduct(cb.ricci).sum() + gi.cwiseProduct(dRic[c]).sum();
  }

  const Matrix& P = cb.schouten;
  Tensor<3>& nP = cb.nabla_schouten = Tensor<3>(d);
  std::vector<Matrix> nPc(d);
  for (int c = 0; c < d; ++c) {
    Matrix dP = (dRic[c] - dS[c] / (2.0 * (d - 1)) * g - cb.scalar / (2.0 * (d - 1)) * dg[c]) /
                (d - 2.0);
    nPc[c].resize(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        double s = dP(a, b);
        for (int m = 0; m < d; ++m) s -= Gam(m, c, a) * P(m, b) + Gam(m, c, b) * P(a, m);
        nP(c, a, b) = s;
        nPc[c](a, b) = s;
      }
  }

  Tensor<3>& C = cb.cotton = Tensor<3>(d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c) C(a, b, c) = nP(a, b, c) - nP(b, a, c);

  // ∇W = ∇R + g ◇ ∇P since g is parallel
  Tensor<5>& nW = cb.nabla_weyl = nR;
  for (int c = 0; c < d; ++c) {
    Tensor<4> kn = kulkarni_nomizu(g, nPc[c]);
    const std::size_t block = kn.size();
    double* dst = nW.data() + c * block;
    for (std::size_t q = 0; q < block; ++q) dst[q] += kn.data()[q];
  }

  Tensor<3>& dW = cb.div_weyl = Tensor<3>(d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c) {
        double s = 0.0;
        for (int e = 0; e < d; ++e)
          for (int f = 0; f < d; ++f) s += gi(e, f) * nW(e, a, b, c, f);
        dW(a, b, c) = s;
      }
  return cb;
}

CurvatureBundle curvature_bundle(const MetricField& g, const Point& p, CurvatureDepth depth) {
  eval_metric(g, p);  // domain, degeneracy and signature checks
  CurvatureBundle cb = curvature_from_jet(metric_jet(g, p, static_cast<int>(depth)), depth);
  cb.point = p.coords();
  return cb;
}

Tensor<3> christoffel(const MetricField& g, const Point& p) {
  return curvature_bundle(g, p, CurvatureDepth::connection).christoffel;
}

Tensor<4> riemann(const MetricField& g, const Point& p) {
  return curvature_bundle(g, p, CurvatureDepth::curvature).riemann;
}

Matrix ricci(const MetricField& g, const Point& p) {
  return curvature_bundle(g, p, CurvatureDepth::curvature).ricci;
}

double scalar_curvature(const MetricField& g, const Point& p) {
  return curvature_bundle(g, p, CurvatureDepth::curvature).scalar;
}

Matrix schouten(const MetricField& g, const Point& p) {
  if (g.dim() < 3) throw DimensionError("Schouten tensor needs dimension >= 3");
  return curvature_bundle(g, p, CurvatureDepth::curvature).schouten;
}

Tensor<4> weyl(const MetricField& g, const Point& p) {
  if (g.dim() < 4) throw DimensionError("Weyl tensor needs dimension >= 4");
  return curvature_bundle(g, p, CurvatureDepth::curvature).weyl;
}

Tensor<3> cotton(const MetricField& g, const Point& p) {
  if (g.dim() < 3) throw DimensionError("Cotton tensor needs dimension >= 3");
  return curvature_bundle(g, p, CurvatureDepth::full).cotton;
}

Matrix hessian(const MetricField& g, const ScalarField& sigma, const Point& p) {
  const int d = g.dim();
  const Tensor<3> gam = christoffel(g, p);
  const Jet s = sigma.jet(p, 2);
  Matrix h(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double v = s.d2(i, j);
      for (int k = 0; k < d; ++k) v -= gam(k, i, j) * s.d1(k);
      h(i, j) = v;
    }
  return 0.5 * (h + h.transpose());
}

Matrix curvature_endomorphism(const CurvatureBundle& cb, const Vector& x, const Vector& y) {
  const int d = cb.dim;
  Matrix m = Matrix::Zero(d, d);
  for (int l = 0; l < d; ++l)
    for (int k = 0; k < d; ++k) {
      double s = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) s += cb.riemann_op(l, k, i, j) * x[i] * y[j];
      m(l, k) = s;
    }
  return m;
}

Matrix weyl_endomorphism(const CurvatureBundle& cb, const Vector& x, const Vector& y) {
  const int d = cb.dim;
  Matrix low = Matrix::Zero(d, d);  // low(w,k) = W(X,Y,∂_k,∂_w)
  for (int k = 0; k < d; ++k)
    for (int w = 0; w < d; ++w) {
      double s = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) s += cb.weyl(i, j, k, w) * x[i] * y[j];
      low(w, k) = s;
    }
  return cb.inverse * low;
}

Vector cotton_covector(const CurvatureBundle& cb, const Vector& x, const Vector& y) {
  const int d = cb.dim;
  Vector c = Vector::Zero(d);
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) c[k] += cb.cotton(i, j, k) * x[i] * y[j];
  return c;
}

double contract4(const Tensor<4>& t, const Vector& x, const Vector& y, const Vector& z,
                 const Vector& w) {
  const int d = t.dim();
  double s = 0.0;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < d; ++e) s += t(a, b, c, e) * x[a] * y[b] * z[c] * w[e];
  return s;
}

double first_bianchi_residual(const Tensor<4>& t) {
  const int d = t.dim();
  double m = 0.0;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < d; ++e)
          m = std::max(m, std::abs(t(a, b, c, e) + t(b, c, a, e) + t(c, a, b, e)));
  return m;
}

double trace_residual(const Tensor<4>& t, const Matrix& gi) {
  const int d = t.dim();
  double m = 0.0;
  // contract slot pairs (0,3), (1,2), (0,2): the others follow from symmetries
  for (int x = 0; x < d; ++x)
    for (int y = 0; y < d; ++y) {
      double s03 = 0.0, s12 = 0.0, s02 = 0.0;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          s03 += gi(a, b) * t(a, x, y, b);
          s12 += gi(a, b) * t(x, a, b, y);
          s02 += gi(a, b) * t(a, x, b, y);
        }
      m = std::max({m, std::abs(s03), std::abs(s12), std::abs(s02)});
    }
  return m;
}

PredicateReport is_einstein(const MetricField& g, const std::vector<Point>& samples,
                            double rel_tol) {
  PredicateReport r;
  for (const Point& p : samples) {
    CurvatureBundle cb = curvature_bundle(g, p, CurvatureDepth::curvature);
    const Matrix dev = cb.ricci - cb.scalar / g.dim() * cb.metric;
    r.deviation = std::max(r.deviation, dev.cwiseAbs().maxCoeff());
    r.scale = std::max({r.scale, cb.riemann.max_abs(), cb.metric.cwiseAbs().maxCoeff()});
  }
  r.threshold = rel_tol * r.scale;
  r.verdict = r.deviation <= r.threshold;
  return r;
}

PredicateReport is_c_space(const MetricField& g, const std::vector<Point>& samples,
                           double rel_tol) {
  PredicateReport r;
  if (g.dim() < 3) throw DimensionError("C-space test needs dimension >= 3");
  for (const Point& p : samples) {
    CurvatureBundle cb = curvature_bundle(g, p, CurvatureDepth::full);
    r.deviation = std::max(r.deviation, cb.cotton.max_abs());
    r.scale = std::max({r.scale, cb.nabla_riemann.max_abs(), cb.riemann.max_abs(),
                        cb.metric.cwiseAbs().maxCoeff()});
  }
  r.threshold = rel_tol * r.scale;
  r.verdict = r.deviation <= r.threshold;
  return r;
}

}  // namespace confhol
