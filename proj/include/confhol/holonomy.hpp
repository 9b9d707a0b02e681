#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "confhol/transport.hpp"

namespace confhol {

struct AlgebraSpan {
  std::vector<Matrix> generators;
  std::vector<Matrix> basis;  // Frobenius-orthonormal
  int dim = 0;
  std::vector<double> singular_values;    // of the final stack, descending
  std::vector<double> residual_spectrum;  // the ones at or below the cut
  double threshold = 0.0;                 // relative cut
  int closure_rounds = 0;
  int dropped_samples = 0;  // samples below the absolute floor
};

struct SpanOptions {
  double svd_threshold = 1e-6;  // relative to the largest singular value
  double zero_floor = 1e-9;     // samples with smaller Frobenius norm count as zero
  bool close_commutators = true;
  int max_rounds = 10;
};

AlgebraSpan span_algebra(const std::vector<Matrix>& samples, const SpanOptions& opt = {});
// orthogonal projection of m onto the span
Matrix project_onto(const AlgebraSpan& s, const Matrix& m);
// max distance of the generators from the span
double span_residual(const AlgebraSpan& s);

struct LoopFamilyOptions {
  std::vector<double> rect_scales{0.4, 0.2, 0.1};  // fractions of `radius`
  int smooth_loops = 32;
  int lassos = 8;
  int harmonics = 2;
  double radius = 0.3;  // coordinate size of the loops
  std::uint64_t seed = 1;
};

// coordinate rectangles at every scale for every plane pair, seeded smooth
// loops and lassos, all based at `base`; ordered by loop id
std::vector<CurveSpec> build_loop_family(const ChartPtr& chart, const Vector& base,
                                         const LoopFamilyOptions& opt);

struct HolonomyOptions {
  TransportMode mode = TransportMode::tractor;
  LoopFamilyOptions loops;
  OdeOptions ode;
  SpanOptions span;
  int nodes_per_piece = 2;     // curvature sampling points per curve piece
  bool include_loop_logs = true;
  int threads = 0;             // 0 = hardware concurrency
};

struct LoopRecord {
  int id = 0;
  std::string label;
  std::string kind;
  int steps = 0;
  double error_estimate = 0.0;
  double gram_defect = 0.0;
  Matrix holonomy;
};

struct HolonomyEstimate {
  TransportMode mode = TransportMode::tractor;
  Vector base;
  std::vector<LoopRecord> loops;
  std::vector<Matrix> samples;
  AlgebraSpan span;
  double max_form_defect = 0.0;  // over samples, against the Gram at base
};

// Ambrose–Singer samples P_γ⁻¹ ∘ F(∂_i,∂_j) ∘ P_γ at the recorded nodes of
// every loop (and optionally log of the loop holonomies), loops transported
// concurrently and aggregated in loop-id order.
HolonomyEstimate estimate_holonomy(const MetricField& g, const Point& base,
                                   const std::vector<CurveSpec>& loops,
                                   const HolonomyOptions& opt);
HolonomyEstimate estimate_holonomy(const MetricField& g, const Point& base,
                                   const HolonomyOptions& opt);

std::vector<Matrix> ambrose_singer_samples(const MetricField& g, const Point& base,
                                           const std::vector<CurveSpec>& loops,
                                           const HolonomyOptions& opt);

// curvature endomorphisms F(∂_i,∂_j), i<j, at a point in the given mode
std::vector<Matrix> curvature_generators(const MetricField& g, const Point& p, TransportMode mode);

// n×n screen block of tangent holonomy samples in the adapted frame whose
// columns are (X, E_1..E_n, Z)
AlgebraSpan screen_holonomy(const std::vector<Matrix>& tangent_samples, const Matrix& adapted_frame,
                            const SpanOptions& opt = {});

// per-loop RNG stream derived from the run seed
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace confhol
