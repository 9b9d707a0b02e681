#pragma once

#include <vector>

#include "confhol/geometry.hpp"
#include "confhol/tensor.hpp"

namespace confhol {

// How much of the curvature tower to compute. Transport only needs the
// connection (tangent) or connection + Schouten (tractor).
enum class CurvatureDepth { connection = 1, curvature = 2, full = 3 };

// Index conventions (all coordinate components):
//   christoffel(k,i,j)   = Γ^k_ij
//   riemann(i,j,k,l)     = g(R(∂_i,∂_j)∂_k, ∂_l), R(X,Y) = [∇_X,∇_Y] − ∇_[X,Y]
//   riemann_op(l,k,i,j)  = dx^l(R(∂_i,∂_j)∂_k)
//   ricci(j,k)           = trace of X ↦ R(X,∂_j)∂_k
//   weyl                 = riemann + g ◇ schouten (same slot convention as riemann)
//   cotton(a,b,c)        = (∇_a P)(b,c) − (∇_b P)(a,c)
//   nabla_*(c, ...)      = covariant derivative along ∂_c in the first slot
//   div_weyl(a,b,c)      = g^{ef} (∇_e W)(a,b,c,f)
struct CurvatureBundle {
  std::vector<double> point;
  int dim = 0;
  CurvatureDepth depth = CurvatureDepth::full;
  Matrix metric, inverse;
  Tensor<3> christoffel;
  Tensor<4> dchristoffel;  // (c,k,i,j) = ∂_c Γ^k_ij
  Tensor<4> riemann;
  Tensor<4> riemann_op;
  Matrix ricci;
  double scalar = 0.0;
  Matrix schouten;  // empty when dim < 3
  Tensor<4> weyl;   // empty when dim < 3
  Tensor<3> nabla_schouten;
  Tensor<3> cotton;
  Tensor<5> nabla_riemann;
  Tensor<5> nabla_weyl;
  Tensor<3> div_weyl;

  bool has_schouten() const { return schouten.size() > 0; }
};

// Checked entry point: validates the point and the metric there.
CurvatureBundle curvature_bundle(const MetricField& g, const Point& p,
                                 CurvatureDepth depth = CurvatureDepth::full);
// Unchecked core working from a metric jet of order >= depth.
CurvatureBundle curvature_from_jet(const MetricJet& mj, CurvatureDepth depth);

Tensor<3> christoffel(const MetricField& g, const Point& p);
Tensor<4> riemann(const MetricField& g, const Point& p);
Matrix ricci(const MetricField& g, const Point& p);
double scalar_curvature(const MetricField& g, const Point& p);
Matrix schouten(const MetricField& g, const Point& p);
Tensor<4> weyl(const MetricField& g, const Point& p);
Tensor<3> cotton(const MetricField& g, const Point& p);

Tensor<4> kulkarni_nomizu(const Matrix& a, const Matrix& b);
// H(X,Y) = (∇_X dσ)(Y)
Matrix hessian(const MetricField& g, const ScalarField& sigma, const Point& p);

// R(X,Y) and W(X,Y) as endomorphisms (column = input vector)
Matrix curvature_endomorphism(const CurvatureBundle& cb, const Vector& x, const Vector& y);
Matrix weyl_endomorphism(const CurvatureBundle& cb, const Vector& x, const Vector& y);
// C(X,Y,·) as a covector
Vector cotton_covector(const CurvatureBundle& cb, const Vector& x, const Vector& y);
// T(X,Y,Z,W) for a (4,0) tensor and vectors
double contract4(const Tensor<4>& t, const Vector& x, const Vector& y, const Vector& z,
                 const Vector& w);

// max |first Bianchi cyclic sum| of a (4,0) tensor
double first_bianchi_residual(const Tensor<4>& t);
// max over the three index pairs of |contraction with g^{-1}|
double trace_residual(const Tensor<4>& t, const Matrix& inverse);

struct PredicateReport {
  bool verdict = false;
  double deviation = 0.0;
  double threshold = 0.0;
  double scale = 0.0;
};

// ‖Ric − (S/d) g‖ resp. ‖C‖ over samples, threshold 1e−7 · scale
PredicateReport is_einstein(const MetricField& g, const std::vector<Point>& samples,
                            double rel_tol = 1e-7);
PredicateReport is_c_space(const MetricField& g, const std::vector<Point>& samples,
                           double rel_tol = 1e-7);

}  // namespace confhol
