#include "confhol/jet.hpp"

#include <algorithm>
#include <cmath>

#include "confhol/error.hpp"

namespace confhol {

int Jet::size_for(int dim, int order) {
  int n = 1;
  if (order >= 1) n += dim;
  if (order >= 2) n += dim * dim;
  if (order >= 3) n += dim * dim * dim;
  return n;
}

Jet::Jet(int dim, int order, double value)
    : dim_(dim), order_(order), data_(size_for(dim, order), 0.0) {
  if (order < 0 || order > kMaxOrder) throw DimensionError("jet order out of range");
  data_[0] = value;
}

Jet Jet::variable(int dim, int order, int index, double value) {
  Jet j(dim, order, value);
  if (order >= 1) j.data_[1 + index] = 1.0;
  return j;
}

void Jet::set_d1(int i, double v) {
  if (order_ >= 1) data_[1 + i] = v;
}

void Jet::set_d2(int i, int j, double v) {
  if (order_ < 2) return;
  data_[1 + dim_ + i * dim_ + j] = v;
  data_[1 + dim_ + j * dim_ + i] = v;
}

void Jet::set_d3(int i, int j, int k, double v) {
  if (order_ < 3) return;
  const int o = off3(), d = dim_;
  data_[o + (i * d + j) * d + k] = v;
  data_[o + (i * d + k) * d + j] = v;
  data_[o + (j * d + i) * d + k] = v;
  data_[o + (j * d + k) * d + i] = v;
  data_[o + (k * d + i) * d + j] = v;
  data_[o + (k * d + j) * d + i] = v;
}

Jet Jet::partial(int i) const {
  if (order_ < 1) throw DimensionError("cannot differentiate an order-0 jet");
  Jet r(dim_, order_ - 1, d1(i));
  for (int a = 0; a < dim_ && order_ >= 2; ++a) r.data_[1 + a] = d2(i, a);
  if (order_ >= 3)
    for (int a = 0; a < dim_; ++a)
      for (int b = 0; b < dim_; ++b) r.data_[1 + dim_ + a * dim_ + b] = d3(i, a, b);
  return r;
}

Jet Jet::truncated(int order) const {
  if (order >= order_) return *this;
  Jet r(dim_, order);
  std::copy_n(data_.begin(), r.data_.size(), r.data_.begin());
  return r;
}

static void check_compatible(const Jet& a, const Jet& b) {
  if (a.dim() != b.dim()) throw DimensionError("jet dimension mismatch");
}

Jet& Jet::operator+=(const Jet& o) {
  check_compatible(*this, o);
  if (o.order_ < order_) *this = truncated(o.order_);
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  check_compatible(*this, o);
  if (o.order_ < order_) *this = truncated(o.order_);
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
  return *this;
}

Jet& Jet::operator*=(double c) {
  for (double& v : data_) v *= c;
  return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
  check_compatible(a, b);
  const int d = a.dim_, ord = std::min(a.order_, b.order_);
  Jet r(d, ord);
  const double f = a.value(), g = b.value();
  r.data_[0] = f * g;
  if (ord >= 1)
    for (int i = 0; i < d; ++i) r.data_[1 + i] = a.d1(i) * g + f * b.d1(i);
  if (ord >= 2)
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j)
        r.set_d2(i, j,
                 a.d2(i, j) * g + a.d1(i) * b.d1(j) + a.d1(j) * b.d1(i) + f * b.d2(i, j));
  if (ord >= 3)
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j)
        for (int k = j; k < d; ++k)
          r.set_d3(i, j, k,
                   a.d3(i, j, k) * g + a.d2(i, j) * b.d1(k) + a.d2(i, k) * b.d1(j) +
                       a.d2(j, k) * b.d1(i) + a.d1(i) * b.d2(j, k) + a.d1(j) * b.d2(i, k) +
                       a.d1(k) * b.d2(i, j) + f * b.d3(i, j, k));
  return r;
}

Jet compose(const Jet& f, double f0, double f1, double f2, double f3) {
  const int d = f.dim_, ord = f.order_;
  Jet r(d, ord, f0);
  if (ord >= 1)
    for (int i = 0; i < d; ++i) r.data_[1 + i] = f1 * f.d1(i);
  if (ord >= 2)
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j)
        r.set_d2(i, j, f2 * f.d1(i) * f.d1(j) + f1 * f.d2(i, j));
  if (ord >= 3)
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j)
        for (int k = j; k < d; ++k)
          r.set_d3(i, j, k,
                   f3 * f.d1(i) * f.d1(j) * f.d1(k) +
                       f2 * (f.d2(i, j) * f.d1(k) + f.d2(i, k) * f.d1(j) + f.d2(j, k) * f.d1(i)) +
                       f1 * f.d3(i, j, k));
  return r;
}

Jet reciprocal(const Jet& f) {
  const double v = f.value();
  if (v == 0.0) throw DomainError("division by a jet with zero value");
  const double i1 = 1.0 / v;
  return compose(f, i1, -i1 * i1, 2 * i1 * i1 * i1, -6 * i1 * i1 * i1 * i1);
}

Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
Jet operator/(double c, const Jet& b) { return reciprocal(b) * c; }

Jet exp(const Jet& f) {
  const double e = std::exp(f.value());
  return compose(f, e, e, e, e);
}

Jet log(const Jet& f) {
  const double v = f.value();
  if (!(v > 0.0)) throw DomainError("log of a non-positive value");
  return compose(f, std::log(v), 1 / v, -1 / (v * v), 2 / (v * v * v));
}

Jet sin(const Jet& f) {
  const double s = std::sin(f.value()), c = std::cos(f.value());
  return compose(f, s, c, -s, -c);
}

Jet cos(const Jet& f) {
  const double s = std::sin(f.value()), c = std::cos(f.value());
  return compose(f, c, -s, -c, s);
}

Jet sqrt(const Jet& f) {
  const double v = f.value();
  if (!(v > 0.0)) throw DomainError("sqrt of a non-positive value");
  const double s = std::sqrt(v);
  return compose(f, s, 0.5 / s, -0.25 / (s * v), 0.375 / (s * v * v));
}

Jet powi(const Jet& f, int n) {
  if (n < 0) return reciprocal(powi(f, -n));
  Jet r(f.dim(), f.order(), 1.0);
  Jet base = f;
  while (n > 0) {
    if (n & 1) r = r * base;
    n >>= 1;
    if (n) base = base * base;
  }
  return r;
}

Jet pow(const Jet& f, double p) {
  if (p == std::round(p) && std::abs(p) <= 64) return powi(f, static_cast<int>(p));
  const double v = f.value();
  if (!(v > 0.0)) throw DomainError("non-integer power of a non-positive value");
  return compose(f, std::pow(v, p), p * std::pow(v, p - 1), p * (p - 1) * std::pow(v, p - 2),
                 p * (p - 1) * (p - 2) * std::pow(v, p - 3));
}

}  // namespace confhol
