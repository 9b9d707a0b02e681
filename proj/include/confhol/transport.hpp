#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "confhol/curvature.hpp"
#include "confhol/geometry.hpp"

namespace confhol {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_min = 1e-13;  // relative to the integration interval
  int max_steps = 200000;
};

struct OdeStats {
  int steps = 0;
  int rejected = 0;
  // sum of accepted local error estimates (max norm) plus a roundoff floor
  double error_estimate = 0.0;
};

using OdeRhs = std::function<void(double t, const Vector& y, Vector& dy)>;

// Dormand–Prince 5(4) from t0 to t1, advancing y in place. Returns the last
// proposed step size so consecutive calls can continue smoothly.
double dopri5(const OdeRhs& f, double t0, double t1, Vector& y, const OdeOptions& opt,
              OdeStats& stats, double h0 = 0.0);

enum class TransportMode { tangent, tractor };
const char* to_string(TransportMode m);

struct TransportNode {
  double t;
  Vector point;
  Matrix matrix;  // transport from the curve start to γ(t)
};

struct TransportResult {
  Matrix matrix;
  CurveSpec curve;
  int steps = 0;
  double error_estimate = 0.0;
  double gram_defect = 0.0;        // |PᵀG(end)P − G(start)|
  std::vector<TransportNode> nodes;  // filled when nodes_per_piece > 0
};

// Parallel transport along the curve. The matrix maps components at the
// start to components at the end (column k = image of frame vector k).
// nodes_per_piece > 0 additionally records the transport at that many
// equally spaced interior-or-end parameters of every piece.
TransportResult transport_tangent(const MetricField& g, const CurveSpec& curve,
                                  const OdeOptions& opt = {}, int nodes_per_piece = 0);
TransportResult transport_tractor(const MetricField& g, const CurveSpec& curve,
                                  const OdeOptions& opt = {}, int nodes_per_piece = 0);
TransportResult transport(const MetricField& g, const CurveSpec& curve, TransportMode mode,
                          const OdeOptions& opt = {}, int nodes_per_piece = 0);

// Gram matrix of the bundle in the given mode at a point
Matrix bundle_gram(const MetricField& g, const Point& p, TransportMode mode);

}  // namespace confhol
