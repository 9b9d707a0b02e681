#pragma once

#include <span>
#include <vector>

namespace confhol {

// Truncated multivariate Taylor jet: a value together with all partial
// derivatives up to `order` (at most 3) in `dim` variables. Derivative blocks
// are stored densely and kept fully symmetric, so d2(i,j) == d2(j,i) holds
// exactly.
class Jet {
 public:
  static constexpr int kMaxOrder = 3;

  Jet() = default;
  Jet(int dim, int order, double value = 0.0);
  // the coordinate function x_index, evaluated at `value`
  static Jet variable(int dim, int order, int index, double value);

  int dim() const noexcept { return dim_; }
  int order() const noexcept { return order_; }
  bool empty() const noexcept { return data_.empty(); }

  double value() const noexcept { return data_[0]; }
  double d1(int i) const { return order_ >= 1 ? data_[1 + i] : 0.0; }
  double d2(int i, int j) const {
    return order_ >= 2 ? data_[1 + dim_ + i * dim_ + j] : 0.0;
  }
  double d3(int i, int j, int k) const {
    return order_ >= 3 ? data_[off3() + (i * dim_ + j) * dim_ + k] : 0.0;
  }

  void set_value(double v) { data_[0] = v; }
  void set_d1(int i, double v);
  void set_d2(int i, int j, double v);     // writes both orderings
  void set_d3(int i, int j, int k, double v);  // writes all permutations

  // ∂_i of this jet, one order lower
  Jet partial(int i) const;
  Jet truncated(int order) const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator+=(double c) { data_[0] += c; return *this; }
  Jet& operator-=(double c) { data_[0] -= c; return *this; }
  Jet& operator*=(double c);
  Jet& operator/=(double c) { return *this *= (1.0 / c); }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double c) { return a += c; }
  friend Jet operator+(double c, Jet a) { return a += c; }
  friend Jet operator-(Jet a, double c) { return a -= c; }
  friend Jet operator-(double c, const Jet& a) { return (-a) += c; }
  friend Jet operator*(Jet a, double c) { return a *= c; }
  friend Jet operator*(double c, Jet a) { return a *= c; }
  friend Jet operator/(Jet a, double c) { return a /= c; }
  friend Jet operator-(const Jet& a) { return a * -1.0; }
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator/(const Jet& a, const Jet& b);
  friend Jet operator/(double c, const Jet& b);

  std::span<const double> raw() const { return data_; }

 private:
  int off3() const { return 1 + dim_ + dim_ * dim_; }
  static int size_for(int dim, int order);

  int dim_ = 0;
  int order_ = 0;
  std::vector<double> data_;

  friend Jet compose(const Jet& f, double f0, double f1, double f2, double f3);
};

// phi(f) where f0..f3 are phi and its first three derivatives at f.value()
Jet compose(const Jet& f, double f0, double f1, double f2, double f3);

Jet exp(const Jet& f);
Jet log(const Jet& f);
Jet sin(const Jet& f);
Jet cos(const Jet& f);
Jet sqrt(const Jet& f);
Jet pow(const Jet& f, double p);
Jet powi(const Jet& f, int n);
Jet reciprocal(const Jet& f);

}  // namespace confhol
