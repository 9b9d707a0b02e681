#include "confhol/geometry.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "confhol/error.hpp"

namespace confhol {

Chart::Chart(std::vector<std::string> names, std::optional<std::vector<Interval>> box)
    : names_(std::move(names)), box_(std::move(box)) {
  if (names_.size() < 2) throw DimensionError("a chart needs dimension >= 2");
  std::set<std::string> seen(names_.begin(), names_.end());
  if (seen.size() != names_.size()) throw DomainError("coordinate names must be distinct");
  if (box_ && box_->size() != names_.size())
    throw DimensionError("domain box has the wrong number of intervals");
  if (box_)
    for (const auto& iv : *box_)
      if (!(iv.lo < iv.hi)) throw DomainError("empty domain interval");
}

bool Chart::contains(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim()) return false;
  for (double v : x)
    if (!std::isfinite(v)) return false;
  if (!box_) return true;
  for (int i = 0; i < dim(); ++i)
    if (!(x[i] > (*box_)[i].lo && x[i] < (*box_)[i].hi)) return false;
  return true;
}

int Chart::index_of(const std::string& name) const {
  for (int i = 0; i < dim(); ++i)
    if (names_[i] == name) return i;
  return -1;
}

ChartPtr make_chart(std::vector<std::string> names, std::optional<std::vector<Interval>> box) {
  return std::make_shared<const Chart>(std::move(names), std::move(box));
}

Point::Point(ChartPtr chart, std::vector<double> coords)
    : chart_(std::move(chart)), coords_(std::move(coords)) {
  if (static_cast<int>(coords_.size()) != chart_->dim())
    throw DomainError("point has " + std::to_string(coords_.size()) + " coordinates, chart has " +
                      std::to_string(chart_->dim()));
  if (!chart_->contains(coords_)) throw DomainError("point outside the chart domain");
}

Point::Point(ChartPtr chart, const Vector& coords)
    : Point(std::move(chart), std::vector<double>(coords.data(), coords.data() + coords.size())) {}

MetricField::MetricField(ChartPtr chart, MetricJetFn fn, Signature sig)
    : chart_(std::move(chart)), fn_(std::move(fn)), sig_(sig) {
  if (sig_.negative < 0 || sig_.positive < 0 || sig_.negative + sig_.positive != chart_->dim())
    throw DimensionError("signature does not add up to the chart dimension");
}

MetricField MetricField::from_components(ChartPtr chart,
                                         std::map<std::pair<int, int>, ComponentFn> c,
                                         Signature sig) {
  const int d = chart->dim();
  for (const auto& [key, fn] : c)
    if (key.first > key.second || key.first < 0 || key.second >= d)
      throw DimensionError("metric components must be keyed (i,j) with i <= j < dim");
  auto comps = std::make_shared<const std::map<std::pair<int, int>, ComponentFn>>(std::move(c));
  MetricJetFn fn = [comps, d](std::span<const double> x, int order) {
    std::vector<Jet> out(d * d, Jet(d, order));
    for (const auto& [key, f] : *comps) {
      Jet j = f(x, order);
      out[key.first * d + key.second] = j;
      if (key.first != key.second) out[key.second * d + key.first] = std::move(j);
    }
    return out;
  };
  return MetricField(std::move(chart), std::move(fn), sig);
}

MetricField MetricField::from_expressions(ChartPtr chart,
                                          const std::map<std::pair<int, int>, Expression>& c,
                                          Signature sig) {
  std::map<std::pair<int, int>, ComponentFn> comps;
  for (const auto& [key, e] : c) {
    Expression b = e.bound() ? e : e.bind(chart->names());
    comps[key] = [b](std::span<const double> x, int order) { return b.evaluate(x, order); };
  }
  return from_components(std::move(chart), std::move(comps), sig);
}

MetricField MetricField::constant(ChartPtr chart, const Matrix& g, Signature sig) {
  const int d = chart->dim();
  if (g.rows() != d || g.cols() != d) throw DimensionError("constant metric has the wrong size");
  Matrix gs = 0.5 * (g + g.transpose());
  MetricJetFn fn = [gs, d](std::span<const double>, int order) {
    std::vector<Jet> out;
    out.reserve(d * d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) out.emplace_back(d, order, gs(a, b));
    return out;
  };
  return MetricField(std::move(chart), std::move(fn), sig);
}

MetricJet MetricField::jet_at(std::span<const double> x, int order) const {
  const int d = dim();
  std::vector<Jet> js = fn_(x, order);
  if (static_cast<int>(js.size()) != d * d) throw DimensionError("metric callback size");
  MetricJet m;
  m.dim = d;
  m.order = order;
  m.g.resize(d, d);
  if (order >= 1) m.d1.assign(d * d * d, 0.0);
  if (order >= 2) m.d2.assign(d * d * d * d, 0.0);
  if (order >= 3) m.d3.assign(d * d * d * d * d, 0.0);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      const Jet& j = js[a * d + b];
      m.g(a, b) = j.value();
      if (order < 1 || j.order() < 1) continue;
      for (int c = 0; c < d; ++c) {
        m.d1[(c * d + a) * d + b] = j.d1(c);
        if (order < 2 || j.order() < 2) continue;
        for (int e = 0; e < d; ++e) {
          m.d2[((c * d + e) * d + a) * d + b] = j.d2(c, e);
          if (order < 3 || j.order() < 3) continue;
          for (int f = 0; f < d; ++f)
            m.d3[(((c * d + e) * d + f) * d + a) * d + b] = j.d3(c, e, f);
        }
      }
    }
  return m;
}

Matrix MetricField::value_at(std::span<const double> x) const {
  const int d = dim();
  std::vector<Jet> js = fn_(x, 0);
  Matrix g(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) g(a, b) = js[a * d + b].value();
  return g;
}

ScalarField ScalarField::from_expression(ChartPtr chart, const Expression& e) {
  Expression b = e.bound() ? e : e.bind(chart->names());
  return ScalarField(std::move(chart),
                     [b](std::span<const double> x, int order) { return b.evaluate(x, order); });
}

ScalarField ScalarField::constant(ChartPtr chart, double c) {
  const int d = chart->dim();
  return ScalarField(std::move(chart),
                     [c, d](std::span<const double>, int order) { return Jet(d, order, c); });
}

Signature signature_of(const Matrix& g, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (g + g.transpose()), Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  Signature s;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] < -rel_tol * scale) ++s.negative;
    else if (ev[i] > rel_tol * scale) ++s.positive;
  }
  return s;
}

void check_metric(const Matrix& g, Signature expected) {
  const int d = static_cast<int>(g.rows());
  if (!g.allFinite()) throw DegenerateMetric("metric has non-finite components");
  const double mx = g.cwiseAbs().maxCoeff();
  const double det = g.determinant();
  if (!(std::abs(det) > kDegeneracyTol * std::pow(mx, d)))
    throw DegenerateMetric("metric is degenerate (|det g| below tolerance)");
  const Signature s = signature_of(g);
  if (!(s == expected))
    throw DegenerateMetric("metric signature (" + std::to_string(s.negative) + "," +
                           std::to_string(s.positive) + ") does not match the declared (" +
                           std::to_string(expected.negative) + "," +
                           std::to_string(expected.positive) + ")");
}

static void check_on_chart(const MetricField& g, const Point& p) {
  if (p.chart() != g.chart() && p.chart()->names() != g.chart()->names())
    throw DomainError("point belongs to a different chart");
  if (!g.chart()->contains(p.coords())) throw DomainError("point outside the metric's chart domain");
}

Matrix eval_metric(const MetricField& g, const Point& p) {
  check_on_chart(g, p);
  Matrix m = g.value_at(p.coords());
  check_metric(m, g.signature());
  return m;
}

MetricJet metric_jet(const MetricField& g, const Point& p, int order) {
  check_on_chart(g, p);
  return g.jet_at(p.coords(), order);
}

MetricField conformal_rescale(const MetricField& g, const ScalarField& phi) {
  if (g.chart()->names() != phi.chart()->names())
    throw DomainError("conformal factor lives on a different chart");
  MetricField base = g;
  ScalarField f = phi;
  const int d = g.dim();
  MetricJetFn fn = [base, f, d](std::span<const double> x, int order) {
    std::vector<Jet> js = base.jets(x, order);
    const Jet scale = exp(2.0 * f.jet(x, order));
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b) {
        js[a * d + b] = js[a * d + b] * scale;
        if (a != b) js[b * d + a] = js[a * d + b];
      }
    return js;
  };
  return MetricField(g.chart(), std::move(fn), g.signature());
}

Vector raise_index(const MetricField& g, const Point& p, const Vector& covector) {
  return eval_metric(g, p).partialPivLu().solve(covector);
}

Vector lower_index(const MetricField& g, const Point& p, const Vector& vector) {
  return eval_metric(g, p) * vector;
}

const char* to_string(CurveKind k) {
  switch (k) {
    case CurveKind::segment: return "segment";
    case CurveKind::rectangle_loop: return "rectangle_loop";
    case CurveKind::smooth_loop: return "smooth_loop";
    case CurveKind::composite: return "composite";
  }
  return "?";
}

CurveSpec CurveSpec::segment(ChartPtr chart, const Vector& a, const Vector& b) {
  Piece p;
  // (1-s)a + s b hits both endpoints exactly
  p.map = [a, b](double s) -> Vector { return (1.0 - s) * a + s * b; };
  p.velocity = [a, b](double) -> Vector { return b - a; };
  return CurveSpec(std::move(chart), CurveKind::segment, {p});
}

CurveSpec CurveSpec::rectangle(ChartPtr chart, const Vector& base, int i, int j, double hi,
                               double hj) {
  Vector c1 = base, c2 = base, c3 = base;
  c1[i] += hi;
  c2[i] += hi;
  c2[j] += hj;
  c3[j] += hj;
  std::vector<Piece> pieces;
  for (auto [a, b] : {std::pair{base, c1}, {c1, c2}, {c2, c3}, {c3, base}})
    pieces.push_back(segment(chart, a, b).pieces_.front());
  return CurveSpec(std::move(chart), CurveKind::rectangle_loop, std::move(pieces));
}

CurveSpec CurveSpec::smooth_loop(ChartPtr chart, const Vector& base, std::vector<Vector> cos_c,
                                 std::vector<Vector> sin_c) {
  if (cos_c.size() != sin_c.size()) throw DimensionError("smooth loop coefficient count");
  Piece p;
  p.map = [base, cos_c, sin_c](double s) -> Vector {
    if (s == 1.0) s = 0.0;  // exact closure
    Vector x = base;
    for (std::size_t k = 0; k < cos_c.size(); ++k) {
      const double w = 2.0 * std::numbers::pi * static_cast<double>(k + 1) * s;
      x += cos_c[k] * (std::cos(w) - 1.0) + sin_c[k] * std::sin(w);
    }
    return x;
  };
  p.velocity = [base, cos_c, sin_c](double s) -> Vector {
    Vector v = Vector::Zero(base.size());
    for (std::size_t k = 0; k < cos_c.size(); ++k) {
      const double om = 2.0 * std::numbers::pi * static_cast<double>(k + 1);
      v += om * (-cos_c[k] * std::sin(om * s) + sin_c[k] * std::cos(om * s));
    }
    return v;
  };
  return CurveSpec(std::move(chart), CurveKind::smooth_loop, {p});
}

CurveSpec CurveSpec::concat(const std::vector<CurveSpec>& parts) {
  if (parts.empty()) throw DomainError("empty composite curve");
  std::vector<Piece> pieces;
  for (const auto& c : parts) pieces.insert(pieces.end(), c.pieces_.begin(), c.pieces_.end());
  return CurveSpec(parts.front().chart_, CurveKind::composite, std::move(pieces));
}

CurveSpec CurveSpec::lasso(const Vector& base, const CurveSpec& far_loop) {
  const Vector far = far_loop.start();
  return concat({segment(far_loop.chart_, base, far), far_loop, segment(far_loop.chart_, far, base)});
}

CurveSpec CurveSpec::reversed() const {
  std::vector<Piece> pieces;
  for (auto it = pieces_.rbegin(); it != pieces_.rend(); ++it) {
    Piece p;
    auto m = it->map;
    auto v = it->velocity;
    p.map = [m](double s) { return m(1.0 - s); };
    p.velocity = [v](double s) -> Vector { return -v(1.0 - s); };
    pieces.push_back(std::move(p));
  }
  CurveSpec c(chart_, kind_, std::move(pieces));
  c.label_ = label_.empty() ? label_ : label_ + "^-1";
  return c;
}

Vector CurveSpec::map(double t) const {
  const int n = static_cast<int>(pieces_.size());
  int k = std::min(n - 1, static_cast<int>(t * n));
  return pieces_[k].map(t * n - k);
}

Vector CurveSpec::velocity(double t) const {
  const int n = static_cast<int>(pieces_.size());
  int k = std::min(n - 1, static_cast<int>(t * n));
  return n * pieces_[k].velocity(t * n - k);
}

bool CurveSpec::closed() const {
  const Vector a = start(), b = end();
  return a.size() == b.size() && (a.array() == b.array()).all();
}

void CurveSpec::validate(int samples) const {
  for (const auto& p : pieces_)
    for (int i = 0; i <= samples; ++i) {
      Vector x = p.map(static_cast<double>(i) / samples);
      if (!chart_->contains(std::span<const double>(x.data(), x.size())))
        throw DomainError("curve leaves the chart domain");
    }
  for (std::size_t k = 0; k + 1 < pieces_.size(); ++k) {
    Vector a = pieces_[k].map(1.0), b = pieces_[k + 1].map(0.0);
    if ((a - b).cwiseAbs().maxCoeff() > 1e-12) throw DomainError("curve pieces do not join");
  }
  if (kind_ != CurveKind::segment && kind_ != CurveKind::composite && !closed())
    throw DomainError("loop is not closed");
}

}  // namespace confhol
