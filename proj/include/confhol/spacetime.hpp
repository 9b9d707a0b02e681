#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "confhol/curvature.hpp"
#include "confhol/geometry.hpp"
#include "confhol/transport.hpp"

namespace confhol {

enum class Family {
  flat,
  pp_wave,
  pr_wave,
  plane_wave,
  cahen_wallach,
  recurrent_general,
  einstein_model,
  riemannian_block_product,
  ambient_einstein,
  ambient_ricci_flat,
  cone,
  custom,
};
const char* to_string(Family f);
Family family_from_string(const std::string& s);  // SpecError when unknown

// Family parameters. Wave families use coordinates (x, y1..yn, z); ambient
// Ricci-flat uses (x, base.., z), ambient Einstein (s, base.., t), cone
// (base.., t). Expressions may use the coordinate names and `pi`.
struct SpacetimeSpec {
  Family family = Family::flat;
  int dim = 0;          // flat, einstein_model space forms
  int n = 0;            // screen dimension of wave families (derived from a/u when given)
  bool riemannian = false;  // flat, einstein_model
  std::string f;            // pp/pr/recurrent_general profile
  std::vector<std::vector<std::string>> a;      // plane_wave a_ij(z), cahen_wallach constants
  std::vector<std::string> u;                   // recurrent_general cross terms
  std::vector<std::vector<std::string>> screen; // recurrent_general g_ij(y, z)
  std::string kind = "space_form";  // einstein_model: space_form | sphere_product
  double scalar = 0.0;              // einstein_model scalar curvature
  std::shared_ptr<SpacetimeSpec> base;  // ambient families, cone, block product
  // custom metrics
  std::vector<std::string> coords;
  std::vector<std::vector<std::string>> components;  // full symmetric matrix of expressions
  Signature signature{};
  std::optional<std::vector<Interval>> box;  // overrides the default chart box
};

struct Spacetime {
  SpacetimeSpec spec;
  MetricPtr metric;
  Vector base_point;        // generic default base point inside the box
  bool recurrent = false;   // X = ∂_{x_index} is recurrent lightlike (family metadata)
  bool x_parallel = false;  // ... and parallel
  int x_index = 0;
  int z_index = -1;
  std::vector<std::string> notes;

  ChartPtr chart() const { return metric->chart(); }
  Point base() const { return Point(chart(), base_point); }
};

// Validates the spec (SpecError, NotEinstein, ZeroScalar) and builds the metric.
Spacetime build(const SpacetimeSpec& spec);

// ambient constructions over a base spec
SpacetimeSpec ambient_einstein(const SpacetimeSpec& base);
SpacetimeSpec ambient_ricci_flat(const SpacetimeSpec& base);
SpacetimeSpec cone_over(const SpacetimeSpec& base);

// quasi-random (Halton) points in the chart box, shrunk by `margin` per side
std::vector<Point> sample_points(const ChartPtr& chart, int count, double margin = 0.1,
                                 int skip = 17);

// ---- ambient metrics ----
// ambient_ricci_flat only: max |Γ̄ − table| with Γ̄^x̄_ij = −z̄ g_ij, Γ̄^k_ij = Γ^k_ij,
// Γ̄^j_{i z̄} = δ_ij / z̄ and every other symbol zero
double ambient_christoffel_residual(const Spacetime& ambient, const Point& p);
// ambient_ricci_flat only: max |R̄ − z̄² R| in base slots and |R̄| elsewhere
double ambient_curvature_residual(const Spacetime& ambient, const Point& p);

// ---- recurrent structure ----
// Adapted frame (X, E_1..E_n, Z) as columns; NoRecurrentField without metadata.
Matrix adapted_frame(const Spacetime& st, const Point& p);
// θ with ∇X = θ ⊗ X, and the max non-X component of ∇X
struct RecurrenceSample {
  Vector theta;
  double residual = 0.0;
  double frame_residual = 0.0;  // adapted frame normalization defect
};
RecurrenceSample recurrence_form(const Spacetime& st, const Point& p);
// tractor basis (σ-slot, X, E_1..E_n, Z, ρ-slot) as columns
Matrix tractor_adapted_frame(const Spacetime& st, const Point& p);

// ---- recognizers ----
struct Check {
  double residual = 0.0;
  double threshold = 0.0;
  bool verdict = false;
};

struct PpTraceReport {
  Check trace;            // Def. of pp-waves: tr_(3,5)(4,6)(R⊗R) = 0
  bool applicable = false;  // X parallel at the point
  double scale = 0.0;
};
PpTraceReport pp_trace_condition(const Spacetime& st, const Point& p);

struct PrConditionReport {
  Check simple;   // R(Y1,Y2) = 0 on X^⊥
  Check skew;     // skew-symmetrisation of ξ ⊗ R
  bool consistent = false;
  double scale = 0.0;
};
PrConditionReport pr_condition(const Spacetime& st, const Point& p);

struct PpEquivalenceReport {
  Check skew;            // condition (1)
  Check reconstruction;  // condition (2), r fitted by least squares
  Check quartic;         // condition (3), ρ fitted by least squares
  Check trace;           // defining trace condition
  Check simple;
  double rho = 0.0;
  bool consistent = false;
};
PpEquivalenceReport pp_equivalences(const Spacetime& st, const Point& p);

struct RicciIsotropyReport {
  double ric_screen = 0.0;  // max |Ric(E_i, ·)|
  double ric_x = 0.0;       // max |Ric(X, ·)|
  double scalar = 0.0;
  double gram = 0.0;        // max |h(Ric(U), Ric(V))|
  double threshold = 0.0;
  double gram_threshold = 0.0;
  bool kernel_verdict = false;  // Ric(Y,·) = 0 for Y ∈ X^⊥
  bool gram_verdict = false;    // image totally isotropic
  bool consistent = false;
  bool isotropic = false;
};
RicciIsotropyReport ricci_isotropy(const Spacetime& st, const Point& p);

struct PrToPpReport {
  std::string verdict;  // "parallel rescaling exists" | "not applicable"
  double closedness = 0.0;  // max |dθ| over samples
  double threshold = 1e-7;
  std::vector<double> params;
  std::vector<double> factor;  // rescaling factor along the curve
  double parallel_defect = 0.0;  // max |∇_{γ'}(f X)| at the samples
};
PrToPpReport pr_is_pp_when_isotropic(const Spacetime& st, const CurveSpec& curve, int samples = 65);

struct SubbundleReport {
  double residual = 0.0;
  double threshold = 1e-7;
  bool invariant = false;
  Matrix subspace;  // tractor vectors (1,0,0), (0,X,0) at the point
};
SubbundleReport invariant_tractor_subbundle_check(const Spacetime& st, const Point& p,
                                                  std::uint64_t seed = 7);

// ---- plane waves ----
struct PlaneWaveSections {
  double z0 = 0.0;  // initial point, (σ,τ) = (1,0) and (0,1)
  std::vector<double> z;
  std::vector<Vector> sol1, sol2;  // (σ, τ) at the grid
  std::vector<double> wronskian;
  std::vector<double> zeros1, zeros2;  // sign changes of σ_k on the grid
  double coefficient_at_z0 = 0.0;      // a(z0)/(d−2)
  int steps = 0;
};
// σ' = τ, τ' = (tr a(z)/(d−2)) σ on [z_lo, z_hi] started at z0
PlaneWaveSections plane_wave_parallel_tractors(const Spacetime& st, double z0, double z_lo,
                                               double z_hi, int grid = 101,
                                               const OdeOptions& opt = {});
// values of (σ_k, τ_k) at z by integrating from z0
std::pair<Vector, Vector> plane_wave_section_values(const Spacetime& st, double z0, double z,
                                                    const OdeOptions& opt = {});
// tr a(z)
double plane_wave_trace(const Spacetime& st, double z);

struct HigherDerivativeReport {
  Matrix first;   // (∇̄_{Y_i} R̄)(Y_j, Z, Z, Z̄)
  Matrix second;  // (∇̄_Z R̄)(Y_j, Z, Y_i, Z̄)
  Matrix a;       // a_ij at the point
  double zbar = 1.0;
  double residual = 0.0;  // max |first − z̄a|, |second + z̄a|
  std::vector<Matrix> samples;  // endomorphisms of the derivative components
};
// st must be ambient_ricci_flat over a plane wave or Cahen–Wallach space
HigherDerivativeReport ambient_higher_derivative_samples(const Spacetime& st, const Point& p);

}  // namespace confhol
