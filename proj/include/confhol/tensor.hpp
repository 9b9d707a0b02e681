#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace confhol {

// Dense rank-R tensor with every index running over the same range [0, dim).
template <std::size_t R>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(int dim) : dim_(dim), data_(size_for(dim), 0.0) {}

  int dim() const noexcept { return dim_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }

  template <class... I>
  double& operator()(I... idx) {
    static_assert(sizeof...(I) == R);
    return data_[flat(idx...)];
  }
  template <class... I>
  double operator()(I... idx) const {
    static_assert(sizeof...(I) == R);
    return data_[flat(idx...)];
  }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  const std::vector<double>& values() const noexcept { return data_; }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }
  Tensor& operator*=(double c) {
    for (double& v : data_) v *= c;
    return *this;
  }
  Tensor& operator+=(const Tensor& o) {
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  Tensor& operator-=(const Tensor& o) {
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator*(double c, Tensor a) { return a *= c; }

 private:
  static std::size_t size_for(int d) {
    std::size_t n = 1;
    for (std::size_t r = 0; r < R; ++r) n *= static_cast<std::size_t>(d);
    return n;
  }
  template <class... I>
  std::size_t flat(I... idx) const {
    std::size_t k = 0;
    ((k = k * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(idx)), ...);
    return k;
  }

  int dim_ = 0;
  std::vector<double> data_;
};

// max |a - b| over all components
template <std::size_t R>
double max_abs_diff(const Tensor<R>& a, const Tensor<R>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
  return m;
}

}  // namespace confhol
