#pragma once

#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "confhol/curvature.hpp"
#include "confhol/geometry.hpp"
#include "confhol/spacetime.hpp"

namespace testing {

using namespace confhol;

struct NamedSpec {
  std::string name;
  SpacetimeSpec spec;
};

inline SpacetimeSpec flat_spec(int dim, bool riemannian = false) {
  SpacetimeSpec s;
  s.family = Family::flat;
  s.dim = dim;
  s.riemannian = riemannian;
  return s;
}

inline SpacetimeSpec pp_spec(const std::string& f) {
  SpacetimeSpec s;
  s.family = Family::pp_wave;
  s.f = f;
  return s;
}

inline SpacetimeSpec pr_spec(const std::string& f) {
  SpacetimeSpec s;
  s.family = Family::pr_wave;
  s.f = f;
  return s;
}

inline SpacetimeSpec plane_wave_spec(std::vector<std::vector<std::string>> a) {
  SpacetimeSpec s;
  s.family = Family::plane_wave;
  s.a = std::move(a);
  return s;
}

inline SpacetimeSpec cahen_wallach_spec(std::vector<std::vector<std::string>> a) {
  SpacetimeSpec s;
  s.family = Family::cahen_wallach;
  s.a = std::move(a);
  return s;
}

inline SpacetimeSpec sphere_spec() {
  SpacetimeSpec s;
  s.family = Family::einstein_model;
  s.kind = "space_form";
  s.dim = 2;
  s.riemannian = true;
  s.scalar = 2.0;
  return s;
}

inline SpacetimeSpec space_form_spec(int dim, double scalar, bool riemannian) {
  SpacetimeSpec s;
  s.family = Family::einstein_model;
  s.kind = "space_form";
  s.dim = dim;
  s.scalar = scalar;
  s.riemannian = riemannian;
  return s;
}

inline SpacetimeSpec curved_block_spec() {
  SpacetimeSpec s;
  s.family = Family::recurrent_general;
  s.f = "x*z + y1^2";
  s.screen = {{"1 + 0.3*y2^2", "0"}, {"0", "1 + 0.2*y1^2"}};
  return s;
}

inline SpacetimeSpec generic_custom_spec() {
  SpacetimeSpec s;
  s.family = Family::custom;
  s.coords = {"a", "b", "c", "e"};
  s.components = {{"-1 - 0.1*b*c", "0.1*c", "0", "0.2"},
                  {"0.1*c", "2 + e^2", "0.3*a", "0"},
                  {"0", "0.3*a", "1.5 + 0.1*sin(b)", "0.1*a*e"},
                  {"0.2", "0", "0.1*a*e", "1 + a^2"}};
  s.signature = {1, 3};
  return s;
}

// families with d >= 4 used by the identity suites
inline std::vector<NamedSpec> four_dim_zoo() {
  std::vector<NamedSpec> z;
  z.push_back({"flat", flat_spec(4)});
  z.push_back({"pp_wave", pp_spec("y1^2*y2 + sin(z)*y1 - y2^2")});
  z.push_back({"pr_wave", pr_spec("x*z^2 + y1^2 - y2^2 + x*y1")});
  z.push_back({"plane_wave", plane_wave_spec({{"1 + z", "0.3"}, {"0.3", "-z^2"}})});
  z.push_back({"cahen_wallach", cahen_wallach_spec({{"2", "0.5"}, {"0.5", "-1"}})});
  z.push_back({"recurrent_general", curved_block_spec()});
  z.push_back({"space_form", space_form_spec(4, 12.0, false)});
  SpacetimeSpec sp;
  sp.family = Family::einstein_model;
  sp.kind = "sphere_product";
  sp.scalar = 4.0;
  z.push_back({"sphere_product", sp});
  SpacetimeSpec amb = ambient_ricci_flat(sphere_spec());
  z.push_back({"ambient_ricci_flat", amb});
  z.push_back({"custom", generic_custom_spec()});
  return z;
}

// d/dh f(h) at 0 by a Richardson-extrapolated central difference
inline double fd_derivative(const std::function<double(double)>& f, double h = 1e-3) {
  auto central = [&](double s) { return (f(s) - f(-s)) / (2.0 * s); };
  return (4.0 * central(h / 2) - central(h)) / 3.0;
}

inline Vector random_vector(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

inline Matrix random_matrix(std::mt19937_64& rng, int r, int c, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

inline Point shifted(const Point& p, int i, double h) {
  std::vector<double> x = p.coords();
  x[i] += h;
  return Point(p.chart(), x);
}

}  // namespace testing
