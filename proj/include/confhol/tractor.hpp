#pragma once

#include <array>
#include <vector>

#include "confhol/curvature.hpp"
#include "confhol/geometry.hpp"

namespace confhol {

// Tractor in the splitting defined by a fixed metric (the gauge). Frame
// ordering: slot 0 = σ, slots 1..d = tangent components, slot d+1 = ρ.
class Tractor {
 public:
  Tractor(MetricPtr gauge, Point at, double sigma, Vector y, double rho);
  static Tractor from_vector(MetricPtr gauge, Point at, const Vector& v);

  double sigma() const noexcept { return sigma_; }
  const Vector& y() const noexcept { return y_; }
  double rho() const noexcept { return rho_; }
  const MetricPtr& gauge() const noexcept { return gauge_; }
  const Point& at() const noexcept { return at_; }
  int dim() const noexcept { return static_cast<int>(y_.size()); }
  Vector vec() const;

 private:
  MetricPtr gauge_;
  Point at_;
  double sigma_;
  Vector y_;
  double rho_;
};

// Gram matrix of ⟨(σ,X,ρ),(ξ,Y,η)⟩ = ση + ρξ + g(X,Y)
Matrix tractor_gram(const Matrix& g);
double tractor_inner(const Tractor& a, const Tractor& b);

// m^T G + G m (algebra) or m^T G m − G (group), max abs entry
double form_defect_algebra(const Matrix& m, const Matrix& gram);
double form_defect_group(const Matrix& m, const Matrix& gram);

// Value and first partial derivatives of a tractor field at a point.
// dy(k,i) = ∂_i Y^k.
struct TractorFieldJet {
  double sigma = 0.0;
  Vector y;
  double rho = 0.0;
  Vector dsigma;
  Matrix dy;
  Vector drho;
};

// A tractor field given by component functions (for tests and examples).
struct TractorField {
  ComponentFn sigma;
  std::vector<ComponentFn> y;
  ComponentFn rho;
  TractorFieldJet jet_at(std::span<const double> x) const;
};

// Connection matrix in the splitting: D_X t = X(t) + A(X) t componentwise.
// Needs christoffel and (for dim >= 3) schouten in `cb`.
Matrix tractor_connection_matrix(const CurvatureBundle& cb, const Vector& x);

Tractor tractor_derivative(const MetricPtr& g, const Point& p, const Vector& dir,
                           const TractorFieldJet& t);

// F(X,Y) as a (d+2)x(d+2) matrix; requires dim >= 4 and a full bundle.
Matrix tractor_curvature(const CurvatureBundle& cb, const Vector& x, const Vector& y);
Matrix tractor_curvature(const MetricField& g, const Point& p, const Vector& x, const Vector& y);

// Change of splitting to the gauge e^{2φ} g (φ is a log-scale). The result
// is expressed in the new gauge; `target` may be supplied to avoid rebuilding
// the rescaled metric.
Tractor theta_map(const ScalarField& phi, const Tractor& t, MetricPtr target = nullptr);
// the same map as a matrix acting on tractor component vectors
Matrix theta_matrix(const MetricField& g, const ScalarField& phi, const Point& p);

// (1, 0, −S/(2d(d−1))), parallel in an Einstein gauge
Tractor canonical_einstein_section(const MetricPtr& g, const Point& p);

struct RecurrentSample {
  double t = 0.0;          // curve parameter
  Point at;                // γ(t)
  Vector velocity;         // γ'(t)
  TractorFieldJet field;   // the recurrent field and its derivatives at γ(t)
  Vector theta;            // recurrence 1-form θ at γ(t)
};

struct RecurrentRescaleResult {
  std::vector<double> factor;      // f(t_k), f(t_0) = 1
  std::vector<Vector> parallel;    // f(t_k) · t(t_k)
  double recurrence_residual = 0;  // max |D_{γ'} t − θ(γ') t|
  double closedness_residual = 0;  // max |d(g(Ŷ,·))| for the σ-normalized field
  double parallel_defect = 0;      // max |D_{γ'}(f t)| from the jets
};

// Rescale a recurrent tractor field along a sampled curve into a parallel
// one. Throws SigmaVanishes when σ is (numerically) zero somewhere.
RecurrentRescaleResult recurrent_rescale(const MetricField& g,
                                         const std::vector<RecurrentSample>& samples,
                                         double sigma_tol = 1e-10);

// cyclic sum of F(X_i,X_j)(s_k,X_k,r_k) minus (0, Σ s_i C(X_j,X_k)^♯, 0)
Vector tractor_bianchi_defect(const CurvatureBundle& cb, const std::array<double, 3>& s,
                              const std::array<Vector, 3>& x, const std::array<double, 3>& r);
Vector tractor_bianchi_defect(const MetricField& g, const Point& p, const std::array<double, 3>& s,
                              const std::array<Vector, 3>& x, const std::array<double, 3>& r);

}  // namespace confhol
