#include "confhol/lie.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "confhol/error.hpp"

namespace confhol {

namespace {

// right singular vectors beyond the numerical rank of m, as columns
Matrix nullspace_abs(const Matrix& m, double cut) {
  const int n = static_cast<int>(m.cols());
  if (m.rows() == 0) return Matrix::Identity(n, n);
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  int rank = 0;
  while (rank < sv.size() && sv[rank] > cut) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

Matrix nullspace(const Matrix& m, double rel_tol) {
  if (m.size() == 0) return Matrix::Identity(m.cols(), m.cols());
  const double top = m.size() ? Eigen::BDCSVD<Matrix>(m).singularValues()[0] : 0.0;
  if (top <= 0.0) return Matrix::Identity(m.cols(), m.cols());
  return nullspace_abs(m, rel_tol * top);
}

int numerical_rank(const Matrix& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(m);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] <= 0.0) return 0;
  int r = 0;
  while (r < sv.size() && sv[r] > rel_tol * sv[0]) ++r;
  return r;
}

Matrix orthonormalize(const Matrix& cols) {
  Eigen::HouseholderQR<Matrix> qr(cols);
  Matrix q = qr.householderQ() * Matrix::Identity(cols.rows(), cols.cols());
  return q;
}

// largest principal angle (as a sine) between two orthonormal bases
double subspace_distance(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) return 1.0;
  const Matrix r = b - a * (a.transpose() * b);
  Eigen::JacobiSVD<Matrix> svd(r);
  return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

std::size_t ipow(int b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= static_cast<std::size_t>(b);
  return r;
}

std::size_t flat_index(int m, const std::vector<int>& idx) {
  std::size_t f = 0;
  for (int i : idx) f = f * static_cast<std::size_t>(m) + static_cast<std::size_t>(i);
  return f;
}

std::vector<int> unflatten(int m, int k, std::size_t f) {
  std::vector<int> idx(k);
  for (int j = k - 1; j >= 0; --j) {
    idx[j] = static_cast<int>(f % static_cast<std::size_t>(m));
    f /= static_cast<std::size_t>(m);
  }
  return idx;
}

int permutation_sign(const std::vector<int>& p) {
  int s = 1;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      if (p[i] > p[j]) s = -s;
  return s;
}

// calls f(idx) for every strictly increasing k-tuple in [0, m)
void for_each_combination(int m, int k, const std::function<void(const std::vector<int>&)>& f) {
  if (k > m) return;
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    f(idx);
    int j = k - 1;
    while (j >= 0 && idx[j] == m - k + j) --j;
    if (j < 0) return;
    ++idx[j];
    for (int l = j + 1; l < k; ++l) idx[l] = idx[l - 1] + 1;
  }
}

// writes v·sgn(π) at every permutation π of the increasing tuple
template <class T>
void fill_antisymmetric(KForm<T>& form, const std::vector<int>& sorted, const T& v) {
  std::vector<int> perm(sorted.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> idx(sorted.size());
  do {
    for (std::size_t j = 0; j < perm.size(); ++j) idx[j] = sorted[perm[j]];
    form.at(idx) = permutation_sign(perm) > 0 ? v : T(0) - v;
  } while (std::next_permutation(perm.begin(), perm.end()));
}

Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

}  // namespace

Matrix to_double(const RMatrix& m) {
  Matrix out(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) out(i, j) = to_double(m(i, j));
  return out;
}

double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

DenseMatrix<double> to_dense(const Matrix& m) {
  DenseMatrix<double> out(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int i = 0; i < out.rows; ++i)
    for (int j = 0; j < out.cols; ++j) out(i, j) = m(i, j);
  return out;
}

IndefiniteForm make_form(const Matrix& gram) {
  if (gram.rows() != gram.cols() || gram.rows() == 0) throw DomainError("form must be square");
  if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, gram.cwiseAbs().maxCoeff()))
    throw DomainError("form must be symmetric");
  const Signature sig = signature_of(gram);
  if (sig.negative + sig.positive != gram.rows()) throw DomainError("form is degenerate");
  return IndefiniteForm{gram, sig};
}

double form_defect(const Matrix& a, const IndefiniteForm& form) {
  return (a.transpose() * form.gram + form.gram * a).cwiseAbs().maxCoeff();
}

const char* to_string(SubspaceClass c) {
  switch (c) {
    case SubspaceClass::nondegenerate: return "nondegenerate";
    case SubspaceClass::degenerate: return "degenerate";
    case SubspaceClass::totally_isotropic: return "totally_isotropic";
  }
  return "?";
}

const char* to_string(CausalTag t) {
  switch (t) {
    case CausalTag::timelike: return "timelike";
    case CausalTag::spacelike: return "spacelike";
    case CausalTag::lightlike: return "lightlike";
    case CausalTag::mixed: return "mixed";
  }
  return "?";
}

Classification classify_subspace(const Matrix& basis, const IndefiniteForm& form, double tol,
                                 double causal_tol) {
  const Matrix q = orthonormalize(basis);
  const Matrix gr = q.transpose() * form.gram * q;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gr);
  Classification c;
  c.gram_eigenvalues = es.eigenvalues();
  const double cut = tol * std::max(1.0, form.gram.cwiseAbs().maxCoeff());
  int zeros = 0;
  for (int i = 0; i < c.gram_eigenvalues.size(); ++i)
    if (std::abs(c.gram_eigenvalues[i]) <= cut) ++zeros;
  if (zeros == c.gram_eigenvalues.size()) c.classification = SubspaceClass::totally_isotropic;
  else if (zeros > 0) c.classification = SubspaceClass::degenerate;
  else c.classification = SubspaceClass::nondegenerate;
  if (q.cols() == 1) {
    const double n = gr(0, 0);
    c.causal_tag = n > causal_tol ? CausalTag::spacelike
                   : n < -causal_tol ? CausalTag::timelike
                                     : CausalTag::lightlike;
  }
  return c;
}

Subspace make_subspace(const Matrix& columns, const IndefiniteForm& form) {
  Eigen::JacobiSVD<Matrix> svd(columns);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv[sv.size() - 1] <= 1e-8 * std::max(1.0, sv[0]))
    throw DomainError("subspace columns are linearly dependent");
  Subspace s;
  s.basis = orthonormalize(columns);
  const Classification c = classify_subspace(s.basis, form);
  s.classification = c.classification;
  s.causal_tag = c.causal_tag;
  return s;
}

Matrix joint_kernel(const std::vector<Matrix>& generators, int dim, double rel_tol) {
  if (generators.empty()) {
    if (dim < 0) throw DimensionError("joint kernel of an empty list needs a dimension");
    return Matrix::Identity(dim, dim);
  }
  const int m = static_cast<int>(generators.front().cols());
  Matrix stack(m * static_cast<int>(generators.size()), m);
  for (std::size_t i = 0; i < generators.size(); ++i) {
    if (generators[i].rows() != m || generators[i].cols() != m)
      throw DimensionError("generators must be square of equal size");
    stack.middleRows(static_cast<int>(i) * m, m) = generators[i];
  }
  return nullspace(stack, rel_tol);
}

double invariance_residual(const std::vector<Matrix>& generators, const Matrix& basis) {
  const Matrix pinv = basis.completeOrthogonalDecomposition().pseudoInverse();
  double r = 0.0;
  for (const Matrix& a : generators) {
    const Matrix av = a * basis;
    r = std::max(r, (av - basis * (pinv * av)).norm());
  }
  return r;
}

InvariantSearchResult invariant_subspaces(const std::vector<Matrix>& generators, int k,
                                          const IndefiniteForm& form,
                                          const InvariantSearchOptions& opt) {
  const int m = static_cast<int>(form.gram.rows());
  if (k < 1 || k > 3 || k >= m) throw DomainError("target dimension must be in 1..3 and below m");
  InvariantSearchResult res;

  // unit-norm copies so the residual threshold is scale free
  std::vector<Matrix> gens;
  for (const Matrix& a : generators) {
    if (a.rows() != m || a.cols() != m) throw DimensionError("generator size does not match the form");
    const double n = a.norm();
    if (n > 1e-12) gens.push_back(a / n);
  }
  if (gens.empty()) {
    res.inconclusive = true;
    res.note = "every subspace invariant";
    return res;
  }

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> nd;
  Matrix a0 = Matrix::Zero(m, m);
  for (const Matrix& a : gens) a0 += nd(rng) * a;
  if (a0.norm() <= 1e-12) {
    res.inconclusive = true;
    res.note = "generic element vanishes";
    return res;
  }
  a0 /= a0.norm();
  const double scale = 1.0;
  const Matrix id = Matrix::Identity(m, m);

  // cluster eigenvalues of the generic element
  Eigen::EigenSolver<Matrix> es(a0, false);
  std::vector<std::complex<double>> ev(es.eigenvalues().data(), es.eigenvalues().data() + m);
  std::vector<int> cluster(m, -1);
  std::vector<std::vector<int>> members;
  for (int i = 0; i < m; ++i) {
    if (cluster[i] >= 0) continue;
    cluster[i] = static_cast<int>(members.size());
    members.push_back({i});
    // grow transitively
    for (std::size_t q = 0; q < members.back().size(); ++q)
      for (int j = 0; j < m; ++j)
        if (cluster[j] < 0 && std::abs(ev[members.back()[q]] - ev[j]) <= opt.eigen_tol * scale) {
          cluster[j] = cluster[i];
          members.back().push_back(j);
        }
  }

  // kernel flags of each real generalized eigenspace (conjugate pairs merged)
  struct Block {
    std::vector<Matrix> levels;  // nested bases, increasing dimension
  };
  std::vector<Block> blocks;
  std::vector<bool> used(members.size(), false);
  bool jumpy = false;
  int total = 0;
  for (std::size_t c = 0; c < members.size(); ++c) {
    if (used[c]) continue;
    used[c] = true;
    std::complex<double> mean = 0.0;
    for (int i : members[c]) mean += ev[i];
    mean /= static_cast<double>(members[c].size());
    Matrix step;
    int mult = static_cast<int>(members[c].size());
    if (std::abs(mean.imag()) <= opt.eigen_tol * scale) {
      step = a0 - mean.real() * id;
    } else {
      // find and consume the conjugate cluster
      for (std::size_t c2 = c + 1; c2 < members.size(); ++c2) {
        if (used[c2]) continue;
        std::complex<double> m2 = 0.0;
        for (int i : members[c2]) m2 += ev[i];
        m2 /= static_cast<double>(members[c2].size());
        if (std::abs(m2 - std::conj(mean)) <= opt.eigen_tol * scale) {
          used[c2] = true;
          break;
        }
      }
      const Matrix sh = a0 - mean.real() * id;
      step = sh * sh + mean.imag() * mean.imag() * id;
    }
    Block b;
    Matrix power = id;
    int prev = 0;
    for (int j = 1; j <= mult; ++j) {
      power = power * step;
      const Matrix ker = nullspace_abs(power, opt.kernel_tol);
      const int dk = static_cast<int>(ker.cols());
      if (dk <= prev) break;
      const int inc = dk - prev;
      if (inc > (mean.imag() == 0.0 || std::abs(mean.imag()) <= opt.eigen_tol * scale ? 1 : 2))
        jumpy = true;
      b.levels.push_back(ker);
      prev = dk;
    }
    total += prev;
    blocks.push_back(std::move(b));
  }
  if (total != m) {
    // eigenvalues of a perturbed nilpotent part scatter; treat A₀ as having
    // the single eigenvalue tr(A₀)/m and use its kernel flag
    blocks.clear();
    jumpy = false;
    const Matrix step = a0 - (a0.trace() / m) * id;
    Block b;
    Matrix power = id;
    int prev = 0;
    for (int j = 1; j <= m; ++j) {
      power = power * step;
      const Matrix ker = nullspace_abs(power, opt.kernel_tol);
      const int dk = static_cast<int>(ker.cols());
      if (dk <= prev) break;
      if (dk - prev > 1) jumpy = true;
      b.levels.push_back(ker);
      prev = dk;
    }
    blocks.push_back(std::move(b));
    if (prev != m) {
      res.inconclusive = true;
      res.note = "generalized eigenspaces of the generic element do not fill the space";
    } else {
      res.note = "single-eigenvalue kernel flag used";
    }
  }

  // choose one flag level per block with total dimension k
  std::vector<Matrix> candidates;
  std::vector<Matrix> parts;
  std::function<void(std::size_t, int)> choose = [&](std::size_t bi, int dim) {
    if (static_cast<int>(candidates.size()) >= opt.max_candidates) {
      res.capped = true;
      return;
    }
    if (dim == k) {
      Matrix c(m, k);
      int col = 0;
      for (const Matrix& p : parts) {
        c.middleCols(col, p.cols()) = p;
        col += static_cast<int>(p.cols());
      }
      candidates.push_back(c);
      return;
    }
    if (bi == blocks.size()) return;
    choose(bi + 1, dim);
    for (const Matrix& lvl : blocks[bi].levels) {
      if (dim + lvl.cols() > k) break;
      parts.push_back(lvl);
      choose(bi + 1, dim + static_cast<int>(lvl.cols()));
      parts.pop_back();
    }
  };
  choose(0, 0);
  res.candidates = static_cast<int>(candidates.size());

  for (const Matrix& c : candidates) {
    if (numerical_rank(c, 1e-8) < k) continue;
    const Matrix q = orthonormalize(c);
    const double r = invariance_residual(gens, q);
    if (r >= opt.invariance_tol) continue;
    Subspace s;
    s.basis = q;
    const Classification cl = classify_subspace(q, form);
    s.classification = cl.classification;
    s.causal_tag = cl.causal_tag;
    s.invariance_residual = r;
    if (opt.isotropic_only && s.classification != SubspaceClass::totally_isotropic) continue;
    bool dup = false;
    for (const Subspace& o : res.subspaces)
      if (subspace_distance(o.basis, q) < opt.dedup_angle) dup = true;
    if (!dup) res.subspaces.push_back(std::move(s));
  }

  for (const Subspace& s : res.subspaces)
    if (s.classification == SubspaceClass::totally_isotropic)
      res.duals.push_back(nullspace(s.basis.transpose() * form.gram, 1e-10));

  if (res.subspaces.empty() && !res.inconclusive && jumpy) {
    res.inconclusive = true;
    res.note = "generic element has non-cyclic eigenspaces; subspaces inside them were not searched";
  }
  if (res.capped && res.note.empty()) res.note = "candidate enumeration capped";
  return res;
}

// ---- forms ----

template <class T>
KForm<T>::KForm(int m_, int k_) : m(m_), k(k_), data(ipow(m_, k_), T(0)) {}

template <class T>
T& KForm<T>::at(const std::vector<int>& idx) {
  return data[flat_index(m, idx)];
}

template <class T>
const T& KForm<T>::at(const std::vector<int>& idx) const {
  return data[flat_index(m, idx)];
}

template <class T>
KForm<T> wedge_covectors(const std::vector<std::vector<T>>& covectors) {
  const int k = static_cast<int>(covectors.size());
  if (k == 0) throw DimensionError("need at least one covector");
  const int m = static_cast<int>(covectors.front().size());
  for (const auto& c : covectors)
    if (static_cast<int>(c.size()) != m) throw DimensionError("covectors differ in length");
  KForm<T> out(m, k);
  for_each_combination(m, k, [&](const std::vector<int>& idx) {
    // det[c_a(e_{idx_b})]
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    T det(0);
    do {
      T term(permutation_sign(perm));
      for (int a = 0; a < k; ++a) term *= covectors[a][idx[perm[a]]];
      det += term;
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (det != T(0)) fill_antisymmetric(out, idx, det);
  });
  return out;
}

template <class T>
KForm<T> wedge(const KForm<T>& a, const KForm<T>& b) {
  if (a.m != b.m) throw DimensionError("forms on different spaces");
  const int p = a.k, q = b.k, m = a.m;
  KForm<T> out(m, p + q);
  if (p + q > m) return out;
  for_each_combination(m, p + q, [&](const std::vector<int>& idx) {
    T acc(0);
    // (p,q)-shuffles: positions of the first p arguments
    for_each_combination(p + q, p, [&](const std::vector<int>& pos) {
      std::vector<int> ia, ib;
      std::vector<bool> in(p + q, false);
      int inversions = 0;
      for (int j = 0; j < p; ++j) {
        in[pos[j]] = true;
        inversions += pos[j] - j;
      }
      for (int j = 0; j < p + q; ++j) (in[j] ? ia : ib).push_back(idx[j]);
      const T term = a.at(ia) * b.at(ib);
      if (inversions % 2 == 0) acc += term;
      else acc -= term;
    });
    if (acc != T(0)) fill_antisymmetric(out, idx, acc);
  });
  return out;
}

template <class T>
KForm<T> form_action(const DenseMatrix<T>& a, const KForm<T>& alpha) {
  if (a.rows != alpha.m || a.cols != alpha.m) throw DimensionError("matrix and form sizes differ");
  const int m = alpha.m, k = alpha.k;
  KForm<T> out(m, k);
  for (std::size_t f = 0; f < out.data.size(); ++f) {
    std::vector<int> idx = unflatten(m, k, f);
    T acc(0);
    for (int j = 0; j < k; ++j) {
      const int ij = idx[j];
      for (int l = 0; l < m; ++l) {
        if (a(l, ij) == T(0)) continue;
        idx[j] = l;
        acc += a(l, ij) * alpha.at(idx);
      }
      idx[j] = ij;
    }
    out.data[f] = T(0) - acc;
  }
  return out;
}

template <class T>
T evaluate_form(const KForm<T>& alpha, const std::vector<std::vector<T>>& vectors) {
  if (static_cast<int>(vectors.size()) != alpha.k) throw DimensionError("wrong number of vectors");
  for (const auto& v : vectors)
    if (static_cast<int>(v.size()) != alpha.m) throw DimensionError("vector length mismatch");
  T acc(0);
  for (std::size_t f = 0; f < alpha.data.size(); ++f) {
    if (alpha.data[f] == T(0)) continue;
    const std::vector<int> idx = unflatten(alpha.m, alpha.k, f);
    T term = alpha.data[f];
    for (int j = 0; j < alpha.k && term != T(0); ++j) term *= vectors[j][idx[j]];
    acc += term;
  }
  return acc;
}

template struct KForm<double>;
template struct KForm<Rational>;
template KForm<double> wedge_covectors(const std::vector<std::vector<double>>&);
template KForm<Rational> wedge_covectors(const std::vector<std::vector<Rational>>&);
template KForm<double> wedge(const KForm<double>&, const KForm<double>&);
template KForm<Rational> wedge(const KForm<Rational>&, const KForm<Rational>&);
template KForm<double> form_action(const DenseMatrix<double>&, const KForm<double>&);
template KForm<Rational> form_action(const DenseMatrix<Rational>&, const KForm<Rational>&);
template double evaluate_form(const KForm<double>&, const std::vector<std::vector<double>>&);
template Rational evaluate_form(const KForm<Rational>&, const std::vector<std::vector<Rational>>&);

KForm<double> form_action(const Matrix& a, const KForm<double>& alpha) {
  return form_action(to_dense(a), alpha);
}

double max_abs(const KForm<double>& a) {
  double m = 0.0;
  for (double v : a.data) m = std::max(m, std::abs(v));
  return m;
}

StabilizerReport stabilizer_check(const std::vector<Matrix>& generators, const KForm<double>& alpha,
                                  double rel_tol) {
  StabilizerReport r;
  r.threshold = rel_tol * max_abs(alpha);
  for (std::size_t i = 0; i < generators.size(); ++i) {
    const double v = max_abs(form_action(generators[i], alpha));
    if (v > r.max_action || r.worst_generator < 0) {
      r.max_action = std::max(r.max_action, v);
      r.worst_generator = static_cast<int>(i);
    }
  }
  r.fixed = r.max_action <= r.threshold;
  return r;
}

// ---- model algebras ----

RMatrix isotropic_pair_form(int n) {
  const int m = n + 4;
  RMatrix g(m, m);
  g(0, m - 1) = g(m - 1, 0) = 1;
  g(1, m - 2) = g(m - 2, 1) = 1;
  for (int i = 0; i < n; ++i) g(2 + i, 2 + i) = 1;
  return g;
}

RMatrix plane_wave_pattern_form(int n) { return isotropic_pair_form(n); }

namespace {

// generator of iso(L) with gl(2) part x; the bottom block is −J xᵀ J
RMatrix iso_l_gl2(int n, int a, int b) {
  const int m = n + 4;
  RMatrix g(m, m);
  g(a, b) = 1;
  // J swaps 0↔1 on the z-block (z1 = m−2 pairs with x2, z2 = m−1 with x1)
  const int za = m - 1 - b, zb = m - 1 - a;
  g(za, zb) = Rational(-1);
  return g;
}

std::vector<RMatrix> heisenberg_part(int n) {
  const int m = n + 4;
  std::vector<RMatrix> out;
  for (int i = 0; i < n; ++i) {  // u_i
    RMatrix g(m, m);
    g(0, 2 + i) = 1;
    g(2 + i, m - 1) = -1;
    out.push_back(g);
  }
  for (int i = 0; i < n; ++i) {  // v_i
    RMatrix g(m, m);
    g(1, 2 + i) = 1;
    g(2 + i, m - 2) = -1;
    out.push_back(g);
  }
  RMatrix c(m, m);
  c(0, m - 2) = 1;
  c(1, m - 1) = -1;
  out.push_back(c);
  return out;
}

}  // namespace

std::vector<RMatrix> iso_l_algebra(int n) {
  if (n < 1) throw DimensionError("iso(L) needs n >= 1");
  const int m = n + 4;
  std::vector<RMatrix> out;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) out.push_back(iso_l_gl2(n, a, b));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      RMatrix g(m, m);
      g(2 + i, 2 + j) = 1;
      g(2 + j, 2 + i) = -1;
      out.push_back(g);
    }
  for (RMatrix& g : heisenberg_part(n)) out.push_back(std::move(g));
  return out;
}

RMatrix iso_l_scaling(int n) {
  const int m = n + 4;
  RMatrix g(m, m);
  g(0, 0) = g(1, 1) = 1;
  g(m - 2, m - 2) = g(m - 1, m - 1) = -1;
  return g;
}

KForm<Rational> iso_l_form(int n, const Rational& a1, const Rational& a2,
                           const std::vector<Rational>& b) {
  if (static_cast<int>(b.size()) != n) throw DimensionError("need n coefficients b_i");
  const RMatrix g = isotropic_pair_form(n);
  const int m = n + 4;
  auto dual = [&](int row, const Rational& s) {
    std::vector<Rational> c(m);
    for (int j = 0; j < m; ++j) c[j] = s * g(row, j);
    return c;
  };
  std::vector<std::vector<Rational>> cov{dual(0, a1), dual(1, a2)};
  for (int i = 0; i < n; ++i) cov.push_back(dual(2 + i, b[i]));
  return wedge_covectors(cov);
}

Rational iso_l_counterexample(int n, const Rational& a1, const Rational& a2,
                              const std::vector<Rational>& b) {
  const int m = n + 4;
  const KForm<Rational> acted = form_action(iso_l_scaling(n), iso_l_form(n, a1, a2, b));
  auto unit = [m](int i) {
    std::vector<Rational> v(m);
    v[i] = 1;
    return v;
  };
  std::vector<std::vector<Rational>> args{unit(m - 2), unit(m - 1)};
  for (int i = 0; i < n; ++i) args.push_back(unit(2 + i));
  return evaluate_form(acted, args);
}

std::vector<RMatrix> plane_wave_pattern(int n) {
  if (n < 1) throw DimensionError("pattern needs n >= 1");
  return heisenberg_part(n);
}

Matrix semidirect_form(const Matrix& g) {
  const int n = static_cast<int>(g.rows());
  Matrix f = Matrix::Zero(n + 2, n + 2);
  f(0, n + 1) = f(n + 1, 0) = 1.0;
  f.block(1, 1, n, n) = g;
  return f;
}

std::vector<Matrix> semidirect_pattern(const std::vector<Matrix>& hol, const Matrix& complement,
                                       const Matrix& g) {
  const int n = static_cast<int>(g.rows());
  if (complement.rows() != n) throw DimensionError("complement basis has the wrong length");
  std::vector<Matrix> out;
  for (const Matrix& a : hol) {
    if (a.rows() != n || a.cols() != n) throw DimensionError("holonomy generator size mismatch");
    Matrix e = Matrix::Zero(n + 2, n + 2);
    e.block(1, 1, n, n) = a;
    out.push_back(e);
  }
  for (int c = 0; c < complement.cols(); ++c) {
    const Vector w = complement.col(c);
    Matrix e = Matrix::Zero(n + 2, n + 2);
    e.block(0, 1, 1, n) = (g * w).transpose();
    e.block(1, n + 1, n, 1) = -w;
    out.push_back(e);
  }
  return out;
}

std::vector<Matrix> so_basis(const Matrix& gram) {
  const int m = static_cast<int>(gram.rows());
  const Matrix ginv = gram.inverse();
  std::vector<Matrix> out;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      Matrix s = Matrix::Zero(m, m);
      s(i, j) = 1.0;
      s(j, i) = -1.0;
      out.push_back(ginv * s);
    }
  return out;
}

BergerReport berger_check(const std::vector<Matrix>& generators, int e_dim, double rel_tol,
                          int max_variables) {
  BergerReport r;
  const int m = e_dim;
  for (const Matrix& a : generators)
    if (a.rows() != m || a.cols() != m) throw DimensionError("generators must act on E");

  // Frobenius-orthonormal basis of g
  std::vector<Matrix> basis;
  if (!generators.empty()) {
    Matrix stack(m * m, static_cast<int>(generators.size()));
    for (std::size_t i = 0; i < generators.size(); ++i) stack.col(static_cast<int>(i)) = flatten(generators[i]);
    Eigen::BDCSVD<Matrix> svd(stack, Eigen::ComputeThinU);
    const Vector& sv = svd.singularValues();
    for (int i = 0; i < sv.size(); ++i)
      if (sv[0] > 0.0 && sv[i] > rel_tol * sv[0])
        basis.push_back(Eigen::Map<const Matrix>(svd.matrixU().col(i).data(), m, m));
  }
  const int dg = static_cast<int>(basis.size());
  r.algebra_dim = dg;
  const int pairs = m * (m - 1) / 2;
  const long vars = static_cast<long>(pairs) * dg;
  if (vars > max_variables)
    throw TooLarge("Berger system has " + std::to_string(vars) + " unknowns (cap " +
                   std::to_string(max_variables) + ")");
  r.variables = static_cast<int>(vars);
  if (dg == 0) {
    r.berger = true;
    return r;
  }

  std::vector<std::vector<int>> pair_id(m, std::vector<int>(m, -1));
  int p = 0;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) pair_id[i][j] = p++;
  // coefficient of r_{ij}^a, with r_{ji} = −r_{ij}
  auto var = [&](int i, int j, int a, double& sign) {
    sign = i < j ? 1.0 : -1.0;
    return (i < j ? pair_id[i][j] : pair_id[j][i]) * dg + a;
  };

  const int triples = m * (m - 1) * (m - 2) / 6;
  Matrix sys = Matrix::Zero(static_cast<long>(triples) * m, vars);
  int row = 0;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      for (int k = j + 1; k < m; ++k)
        for (int l = 0; l < m; ++l, ++row)
          for (int a = 0; a < dg; ++a) {
            // R(e_i,e_j)e_k + R(e_j,e_k)e_i + R(e_k,e_i)e_j, component l
            double s;
            int v = var(i, j, a, s);
            sys(row, v) += s * basis[a](l, k);
            v = var(j, k, a, s);
            sys(row, v) += s * basis[a](l, i);
            v = var(k, i, a, s);
            sys(row, v) += s * basis[a](l, j);
          }
  r.equations = row;
  const Matrix null = nullspace(sys, rel_tol);
  r.curvature_dim = static_cast<int>(null.cols());

  // coefficients of R(e_i, e_j) in the g basis, over a basis of K(g)
  Matrix coeffs(static_cast<long>(null.cols()) * pairs, dg);
  for (int c = 0; c < null.cols(); ++c)
    for (int q = 0; q < pairs; ++q)
      coeffs.row(static_cast<long>(c) * pairs + q) = null.col(c).segment(static_cast<long>(q) * dg, dg).transpose();
  r.generated_dim = numerical_rank(coeffs, rel_tol);

  // the generated endomorphisms lie in g by construction; measure it anyway
  Matrix gb(m * m, dg);
  for (int a = 0; a < dg; ++a) gb.col(a) = flatten(basis[a]);
  for (int c = 0; c < std::min<long>(null.cols(), 8); ++c)
    for (int q = 0; q < pairs; ++q) {
      Matrix e = Matrix::Zero(m, m);
      for (int a = 0; a < dg; ++a) e += null(static_cast<long>(q) * dg + a, c) * basis[a];
      const Vector f = flatten(e);
      r.projection_residual = std::max(r.projection_residual, (f - gb * (gb.transpose() * f)).norm());
    }
  r.berger = r.generated_dim == dg;
  return r;
}

}  // namespace confhol

namespace confhol {

double plane_wave_pattern_residual(const Matrix& m, int n) {
  const int d = n + 4;
  if (m.rows() != d || m.cols() != d) throw DimensionError("pattern check needs a (n+4)-square matrix");
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> on =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(d, d, false);
  for (const RMatrix& g : plane_wave_pattern(n))
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (g(i, j) != Rational(0)) on(i, j) = true;
  double r = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (!on(i, j)) r = std::max(r, std::abs(m(i, j)));
  return r;
}

}  // namespace confhol
