#include "confhol/transport.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>

#include "confhol/error.hpp"
#include "confhol/tractor.hpp"

namespace confhol {

namespace {

// Dormand–Prince tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

double dopri5(const OdeRhs& f, double t0, double t1, Vector& y, const OdeOptions& opt,
              OdeStats& stats, double h0) {
  const double span = t1 - t0;
  if (span == 0.0) return h0;
  const double dir = span > 0 ? 1.0 : -1.0;
  const double hmin = opt.h_min * std::abs(span);
  const int n = static_cast<int>(y.size());

  Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ys(n), ynew(n), err(n);
  f(t0, y, k1);

  double h = h0 > 0.0 ? std::min(h0, std::abs(span)) : 0.0;
  if (h == 0.0) {
    // standard starting-step heuristic
    double d0 = 0.0, d1 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double sc = opt.atol + opt.rtol * std::abs(y[i]);
      d0 += (y[i] / sc) * (y[i] / sc);
      d1 += (k1[i] / sc) * (k1[i] / sc);
    }
    d0 = std::sqrt(d0 / n);
    d1 = std::sqrt(d1 / n);
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, std::abs(span));
  }

  double t = t0;
  int local_steps = 0;
  while (dir * (t1 - t) > 0.0) {
    if (stats.steps + stats.rejected >= opt.max_steps)
      throw IntegratorFailure("step budget exhausted");
    bool last = false;
    if (h >= std::abs(t1 - t)) {
      h = std::abs(t1 - t);
      last = true;
    }
    const double hs = dir * h;

    ys = y + hs * (a21 * k1);
    f(t + c2 * hs, ys, k2);
    ys = y + hs * (a31 * k1 + a32 * k2);
    f(t + c3 * hs, ys, k3);
    ys = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + c4 * hs, ys, k4);
    ys = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + c5 * hs, ys, k5);
    ys = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(t + hs, ys, k6);
    ynew = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    f(t + hs, ynew, k7);
    err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double en = 0.0;
    for (int i = 0; i < n; ++i) {
      const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      en += (err[i] / sc) * (err[i] / sc);
    }
    en = std::sqrt(en / n);
    if (!std::isfinite(en)) throw IntegratorFailure("non-finite state during integration");

    if (en <= 1.0) {
      t = last ? t1 : t + hs;
      y = ynew;
      k1 = k7;
      ++stats.steps;
      ++local_steps;
      stats.error_estimate +=
          err.cwiseAbs().maxCoeff() + 4.0 * DBL_EPSILON * std::max(1.0, y.cwiseAbs().maxCoeff());
      const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      if (!last) h *= fac;
      else h = std::max(h, h * fac);
    } else {
      ++stats.rejected;
      h *= std::clamp(0.9 * std::pow(en, -0.2), 0.1, 1.0);
      if (h < hmin) throw IntegratorFailure("step size underflow");
    }
  }
  return h;
}

const char* to_string(TransportMode m) {
  return m == TransportMode::tangent ? "tangent" : "tractor";
}

Matrix bundle_gram(const MetricField& g, const Point& p, TransportMode mode) {
  const Matrix gp = eval_metric(g, p);
  return mode == TransportMode::tangent ? gp : tractor_gram(gp);
}

TransportResult transport(const MetricField& g, const CurveSpec& curve, TransportMode mode,
                          const OdeOptions& opt, int nodes_per_piece) {
  const int d = g.dim();
  if (mode == TransportMode::tractor && d < 3)
    throw DimensionError("tractor transport needs dimension >= 3");
  const int m = mode == TransportMode::tangent ? d : d + 2;
  const auto& pieces = curve.pieces();
  const int np = static_cast<int>(pieces.size());
  const ChartPtr& chart = g.chart();

  TransportResult res{Matrix::Identity(m, m), curve, 0, 0.0, 0.0, {}};
  OdeStats stats;
  Vector y = Eigen::Map<const Vector>(res.matrix.data(), m * m);
  const CurvatureDepth depth =
      mode == TransportMode::tangent ? CurvatureDepth::connection : CurvatureDepth::curvature;

  try {
    for (int pi = 0; pi < np; ++pi) {
      const CurveSpec::Piece& piece = pieces[pi];
      OdeRhs rhs = [&](double s, const Vector& state, Vector& ds) {
        const Vector x = piece.map(s);
        const Vector v = piece.velocity(s);
        const Point p(chart, x);
        const CurvatureBundle cb = curvature_bundle(g, p, depth);
        Matrix A(m, m);
        if (mode == TransportMode::tangent) {
          A.setZero();
          for (int k = 0; k < d; ++k)
            for (int j = 0; j < d; ++j) {
              double acc = 0.0;
              for (int i = 0; i < d; ++i) acc += cb.christoffel(k, i, j) * v[i];
              A(k, j) = acc;
            }
        } else {
          A = tractor_connection_matrix(cb, v);
        }
        Eigen::Map<const Matrix> S(state.data(), m, m);
        Eigen::Map<Matrix> dS(ds.data(), m, m);
        dS.noalias() = -A * S;
      };
      double h = 0.0;
      const int nodes = std::max(1, nodes_per_piece);
      for (int q = 1; q <= nodes; ++q) {
        const double s0 = static_cast<double>(q - 1) / nodes;
        const double s1 = static_cast<double>(q) / nodes;
        h = dopri5(rhs, s0, s1, y, opt, stats, h);
        if (nodes_per_piece > 0)
          res.nodes.push_back({(pi + s1) / np, piece.map(s1), Eigen::Map<const Matrix>(y.data(), m, m)});
      }
    }
  } catch (const DomainError& e) {
    throw DomainExit(std::string("curve left the chart during transport: ") + e.what());
  }

  res.matrix = Eigen::Map<const Matrix>(y.data(), m, m);
  res.steps = stats.steps;
  res.error_estimate = stats.error_estimate;
  const Matrix G0 = bundle_gram(g, Point(chart, curve.start()), mode);
  const Matrix G1 = bundle_gram(g, Point(chart, curve.end()), mode);
  res.gram_defect = (res.matrix.transpose() * G1 * res.matrix - G0).cwiseAbs().maxCoeff();
  return res;
}

TransportResult transport_tangent(const MetricField& g, const CurveSpec& curve,
                                  const OdeOptions& opt, int nodes_per_piece) {
  return transport(g, curve, TransportMode::tangent, opt, nodes_per_piece);
}

TransportResult transport_tractor(const MetricField& g, const CurveSpec& curve,
                                  const OdeOptions& opt, int nodes_per_piece) {
  return transport(g, curve, TransportMode::tractor, opt, nodes_per_piece);
}

}  // namespace confhol
