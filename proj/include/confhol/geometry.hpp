#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "confhol/expression.hpp"
#include "confhol/jet.hpp"

namespace confhol {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Interval {
  double lo;
  double hi;
};

class Chart {
 public:
  explicit Chart(std::vector<std::string> names,
                 std::optional<std::vector<Interval>> box = std::nullopt);

  int dim() const noexcept { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::optional<std::vector<Interval>>& box() const noexcept { return box_; }
  bool contains(std::span<const double> x) const;
  int index_of(const std::string& name) const;  // -1 when absent

 private:
  std::vector<std::string> names_;
  std::optional<std::vector<Interval>> box_;
};

using ChartPtr = std::shared_ptr<const Chart>;
ChartPtr make_chart(std::vector<std::string> names,
                    std::optional<std::vector<Interval>> box = std::nullopt);

class Point {
 public:
  Point(ChartPtr chart, std::vector<double> coords);  // DomainError when outside
  Point(ChartPtr chart, const Vector& coords);

  const ChartPtr& chart() const noexcept { return chart_; }
  const std::vector<double>& coords() const noexcept { return coords_; }
  Vector vec() const { return Eigen::Map<const Vector>(coords_.data(), coords_.size()); }
  int dim() const noexcept { return static_cast<int>(coords_.size()); }
  double operator[](int i) const { return coords_[i]; }

 private:
  ChartPtr chart_;
  std::vector<double> coords_;
};

struct Signature {
  int negative = 0;
  int positive = 0;
  bool operator==(const Signature&) const = default;
};

// Returns the d*d component jets (row-major, symmetric) at x.
using MetricJetFn = std::function<std::vector<Jet>(std::span<const double>, int order)>;
using ComponentFn = std::function<Jet(std::span<const double>, int order)>;

// Values and partial derivatives of g at one point, flat row-major storage:
// d1[(c*d + a)*d + b] = ∂_c g_ab, d2[((c*d + e)*d + a)*d + b] = ∂_c∂_e g_ab, ...
struct MetricJet {
  int dim = 0;
  int order = 0;
  Matrix g;
  std::vector<double> d1, d2, d3;
};

class MetricField {
 public:
  MetricField(ChartPtr chart, MetricJetFn fn, Signature sig);

  // components keyed by (i,j) with i <= j; absent components are zero
  static MetricField from_components(ChartPtr chart, std::map<std::pair<int, int>, ComponentFn> c,
                                     Signature sig);
  static MetricField from_expressions(ChartPtr chart,
                                      const std::map<std::pair<int, int>, Expression>& c,
                                      Signature sig);
  static MetricField constant(ChartPtr chart, const Matrix& g, Signature sig);

  const ChartPtr& chart() const noexcept { return chart_; }
  int dim() const noexcept { return chart_->dim(); }
  Signature signature() const noexcept { return sig_; }

  // unchecked raw jets; callers validate the point
  std::vector<Jet> jets(std::span<const double> x, int order) const { return fn_(x, order); }
  MetricJet jet_at(std::span<const double> x, int order) const;
  Matrix value_at(std::span<const double> x) const;

 private:
  ChartPtr chart_;
  MetricJetFn fn_;
  Signature sig_;
};

using MetricPtr = std::shared_ptr<const MetricField>;

class ScalarField {
 public:
  ScalarField(ChartPtr chart, ComponentFn fn) : chart_(std::move(chart)), fn_(std::move(fn)) {}
  static ScalarField from_expression(ChartPtr chart, const Expression& e);
  static ScalarField constant(ChartPtr chart, double c);

  const ChartPtr& chart() const noexcept { return chart_; }
  Jet jet(std::span<const double> x, int order) const { return fn_(x, order); }
  Jet jet(const Point& p, int order) const { return fn_(p.coords(), order); }
  double value(const Point& p) const { return fn_(p.coords(), 0).value(); }

 private:
  ChartPtr chart_;
  ComponentFn fn_;
};

// |det g| threshold relative to (max |g_ij|)^d
inline constexpr double kDegeneracyTol = 1e-10;

Signature signature_of(const Matrix& g, double rel_tol = 1e-12);
// throws DegenerateMetric on small determinant or signature mismatch
void check_metric(const Matrix& g, Signature expected);

Matrix eval_metric(const MetricField& g, const Point& p);
MetricJet metric_jet(const MetricField& g, const Point& p, int order = 3);
MetricField conformal_rescale(const MetricField& g, const ScalarField& phi);
Vector raise_index(const MetricField& g, const Point& p, const Vector& covector);
Vector lower_index(const MetricField& g, const Point& p, const Vector& vector);

enum class CurveKind { segment, rectangle_loop, smooth_loop, composite };
const char* to_string(CurveKind k);

// Piecewise smooth curve. Each piece is parametrized on [0,1]; the global
// parameter t in [0,1] visits the pieces in order with equal share.
class CurveSpec {
 public:
  struct Piece {
    std::function<Vector(double)> map;
    std::function<Vector(double)> velocity;
  };

  static CurveSpec segment(ChartPtr chart, const Vector& a, const Vector& b);
  // base -> base + hi e_i -> base + hi e_i + hj e_j -> base + hj e_j -> base
  static CurveSpec rectangle(ChartPtr chart, const Vector& base, int i, int j, double hi,
                             double hj);
  // base + Σ_k cos_k (cos 2πks − 1) + sin_k sin 2πks, exactly closed
  static CurveSpec smooth_loop(ChartPtr chart, const Vector& base, std::vector<Vector> cos_coeffs,
                               std::vector<Vector> sin_coeffs);
  static CurveSpec concat(const std::vector<CurveSpec>& parts);
  // path out along a segment, the loop at the far end, segment back
  static CurveSpec lasso(const Vector& base, const CurveSpec& far_loop);

  CurveSpec reversed() const;
  CurveKind kind() const noexcept { return kind_; }
  const ChartPtr& chart() const noexcept { return chart_; }
  const std::vector<Piece>& pieces() const noexcept { return pieces_; }
  const std::string& label() const noexcept { return label_; }
  CurveSpec& set_label(std::string l) {
    label_ = std::move(l);
    return *this;
  }

  Vector map(double t) const;
  Vector velocity(double t) const;
  Vector start() const { return pieces_.front().map(0.0); }
  Vector end() const { return pieces_.back().map(1.0); }
  bool closed() const;
  // DomainError when a sampled point leaves the chart or a loop is not closed
  void validate(int samples_per_piece = 64) const;

 private:
  CurveSpec(ChartPtr chart, CurveKind kind, std::vector<Piece> pieces)
      : chart_(std::move(chart)), kind_(kind), pieces_(std::move(pieces)) {}

  ChartPtr chart_;
  CurveKind kind_ = CurveKind::segment;
  std::vector<Piece> pieces_;
  std::string label_;
};

}  // namespace confhol
