#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "confhol/geometry.hpp"

namespace confhol {

using Rational = boost::rational<boost::multiprecision::cpp_int>;

// Small dense row-major matrix over an arbitrary field type; used for the
// exact model algebras.
template <class T>
struct DenseMatrix {
  int rows = 0, cols = 0;
  std::vector<T> a;

  DenseMatrix() = default;
  DenseMatrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, T(0)) {}
  T& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  const T& operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
};
using RMatrix = DenseMatrix<Rational>;

Matrix to_double(const RMatrix& m);
double to_double(const Rational& r);

// ---- forms ----
struct IndefiniteForm {
  Matrix gram;
  Signature signature;
};
// DomainError when singular or not symmetric
IndefiniteForm make_form(const Matrix& gram);
// max |AᵀG + GA|
double form_defect(const Matrix& a, const IndefiniteForm& form);

enum class SubspaceClass { nondegenerate, degenerate, totally_isotropic };
enum class CausalTag { timelike, spacelike, lightlike, mixed };
const char* to_string(SubspaceClass c);
const char* to_string(CausalTag t);

struct Subspace {
  Matrix basis;  // Euclidean-orthonormal columns
  SubspaceClass classification = SubspaceClass::nondegenerate;
  std::optional<CausalTag> causal_tag;
  double invariance_residual = 0.0;
};

// orthonormalizes the columns; DomainError when they are dependent
Subspace make_subspace(const Matrix& columns, const IndefiniteForm& form);

struct Classification {
  SubspaceClass classification;
  std::optional<CausalTag> causal_tag;
  Vector gram_eigenvalues;
};
Classification classify_subspace(const Matrix& basis, const IndefiniteForm& form,
                                 double tol = 1e-8, double causal_tol = 1e-9);

// ---- kernels and invariant subspaces ----
// orthonormal basis (columns) of ∩ ker A_i; the full space for an empty list
Matrix joint_kernel(const std::vector<Matrix>& generators, int dim = -1, double rel_tol = 1e-7);

// max_i ‖A_i V − V (V⁺ A_i V)‖
double invariance_residual(const std::vector<Matrix>& generators, const Matrix& basis);

struct InvariantSearchOptions {
  std::uint64_t seed = 11;
  double eigen_tol = 1e-4;       // eigenvalue clustering, relative to ‖A₀‖
  double kernel_tol = 1e-7;      // rank cut for generalized eigenspaces
  double invariance_tol = 1e-6;
  double dedup_angle = 1e-6;
  int max_candidates = 512;
  bool isotropic_only = false;   // keep only totally isotropic results
};

struct InvariantSearchResult {
  std::vector<Subspace> subspaces;
  std::vector<Matrix> duals;     // G-orthogonal complements of the isotropic results
  bool inconclusive = false;     // the generic-element search degenerated
  std::string note;
  int candidates = 0;
  bool capped = false;
};
InvariantSearchResult invariant_subspaces(const std::vector<Matrix>& generators, int k,
                                          const IndefiniteForm& form,
                                          const InvariantSearchOptions& opt = {});

// ---- action on forms ----
// k-form on ℝ^m as a dense antisymmetric array of m^k entries
template <class T>
struct KForm {
  int m = 0, k = 0;
  std::vector<T> data;

  KForm() = default;
  KForm(int m_, int k_);
  T& at(const std::vector<int>& idx);
  const T& at(const std::vector<int>& idx) const;
};

// α₁ ∧ … ∧ α_k of covectors, normalized so that (α₁∧…∧α_k)(v₁..v_k) = det[α_a(v_b)]
template <class T>
KForm<T> wedge_covectors(const std::vector<std::vector<T>>& covectors);
template <class T>
KForm<T> wedge(const KForm<T>& a, const KForm<T>& b);
// (A·α)(v₁..v_k) = −Σ_j α(v₁,…,Av_j,…,v_k); DimensionError on a size mismatch
template <class T>
KForm<T> form_action(const DenseMatrix<T>& a, const KForm<T>& alpha);
template <class T>
T evaluate_form(const KForm<T>& alpha, const std::vector<std::vector<T>>& vectors);

KForm<double> form_action(const Matrix& a, const KForm<double>& alpha);
DenseMatrix<double> to_dense(const Matrix& m);
double max_abs(const KForm<double>& a);

struct StabilizerReport {
  double max_action = 0.0;  // max over generators of max |A·α|
  double threshold = 0.0;
  bool fixed = false;
  int worst_generator = -1;
};
StabilizerReport stabilizer_check(const std::vector<Matrix>& generators, const KForm<double>& alpha,
                                  double rel_tol = 1e-8);

// ---- model algebras ----
// inner product of index (2, n+2) on (x1, x2, y1..yn, z1, z2) with x1↔z2, x2↔z1
RMatrix isotropic_pair_form(int n);
// basis of iso(L), L = span(x1, x2), inside so(2, n+2)
std::vector<RMatrix> iso_l_algebra(int n);
// the element diag(E₂, 0, −E₂) of iso(L)
RMatrix iso_l_scaling(int n);
// ⟨x1,·⟩∧⟨x2,·⟩∧⟨y1,·⟩∧…∧⟨yn,·⟩ scaled by a1, a2, b_i
KForm<Rational> iso_l_form(int n, const Rational& a1, const Rational& a2,
                           const std::vector<Rational>& b);
// (diag(E₂,0,−E₂)·α)(z1, z2, y1..yn), exact
Rational iso_l_counterexample(int n, const Rational& a1, const Rational& a2,
                              const std::vector<Rational>& b);

// tractor frame (σ, X, E_1..E_n, Z, ρ): pairing σ↔ρ, X↔Z
RMatrix plane_wave_pattern_form(int n);
// generators u_i, v_i, c of the 2n+1 dimensional pattern ([u_i, v_i] = −c)
std::vector<RMatrix> plane_wave_pattern(int n);
// max |m_ab| over entries outside the support of the pattern generators
double plane_wave_pattern_residual(const Matrix& m, int n);

// Hol ⋉ ℝ^{n−k} on (X, T_pM, Z) with metric 2 dX dZ + g: the given holonomy
// generators (n×n) plus one translation per column of `complement`
std::vector<Matrix> semidirect_pattern(const std::vector<Matrix>& hol, const Matrix& complement,
                                       const Matrix& g);
Matrix semidirect_form(const Matrix& g);

// ---- Berger test ----
struct BergerReport {
  int algebra_dim = 0;
  int curvature_dim = 0;    // dim K(g)
  int generated_dim = 0;    // dim span{R(x,y)}
  int variables = 0;
  int equations = 0;
  double projection_residual = 0.0;  // distance of the generated span from g
  bool berger = false;
};
BergerReport berger_check(const std::vector<Matrix>& generators, int e_dim,
                          double rel_tol = 1e-7, int max_variables = 20000);

// full so(p,q) basis for a form gram matrix
std::vector<Matrix> so_basis(const Matrix& gram);

}  // namespace confhol
