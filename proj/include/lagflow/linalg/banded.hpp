#ifndef LAGFLOW_LINALG_BANDED_HPP
#define LAGFLOW_LINALG_BANDED_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "lagflow/core/errors.hpp"

namespace lagflow {

/** \brief Square banded matrix with in-place LU factorisation (partial pivoting).
 *
 * Row i stores columns i-kl .. i+ku+kl; the extra kl super-diagonals hold
 * pivoting fill-in.
 */
class BandedMatrix {
public:
  BandedMatrix(std::size_t n, std::size_t kl, std::size_t ku)
    : n_(n), kl_(kl), ku_(ku), w_(2 * kl + ku + 1), a_(n * w_, 0.0) {}

  std::size_t size() const { return n_; }

  void add(std::size_t i, std::size_t j, double v) { a_[slot(i, j)] += v; }
  double get(std::size_t i, std::size_t j) const {
    if (j + kl_ < i || j > i + ku_ + kl_) return 0.0;
    return a_[slot(i, j)];
  }

  /// Factorise; returns false on an exactly singular pivot.
  bool factor() {
    piv_.assign(n_, 0);
    for (std::size_t k = 0; k < n_; ++k) {
      const std::size_t last = std::min(n_ - 1, k + kl_);
      std::size_t p = k;
      double best = std::abs(a_[slot(k, k)]);
      for (std::size_t i = k + 1; i <= last; ++i)
        if (std::abs(a_[slot(i, k)]) > best) {
          best = std::abs(a_[slot(i, k)]);
          p = i;
        }
      piv_[k] = p;
      if (best == 0.0 || !std::isfinite(best)) return false;
      const std::size_t cend = std::min(n_ - 1, k + ku_ + kl_);
      if (p != k)
        for (std::size_t j = k; j <= cend; ++j) std::swap(a_[slot(k, j)], a_[slot(p, j)]);
      const double inv = 1.0 / a_[slot(k, k)];
      for (std::size_t i = k + 1; i <= last; ++i) {
        double& l = a_[slot(i, k)];
        l *= inv;
        if (l == 0.0) continue;
        for (std::size_t j = k + 1; j <= cend; ++j) a_[slot(i, j)] -= l * a_[slot(k, j)];
      }
    }
    return true;
  }

  /// Solve with the stored factors; \p b is overwritten by the solution.
  void solve(std::vector<double>& b) const {
    if (b.size() != n_) throw LayoutError("BandedMatrix::solve: size mismatch");
    for (std::size_t k = 0; k < n_; ++k) {
      if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
      const std::size_t last = std::min(n_ - 1, k + kl_);
      for (std::size_t i = k + 1; i <= last; ++i) b[i] -= a_[slot(i, k)] * b[k];
    }
    for (std::size_t k = n_; k-- > 0;) {
      const std::size_t cend = std::min(n_ - 1, k + ku_ + kl_);
      double s = b[k];
      for (std::size_t j = k + 1; j <= cend; ++j) s -= a_[slot(k, j)] * b[j];
      b[k] = s / a_[slot(k, k)];
    }
  }

private:
  std::size_t slot(std::size_t i, std::size_t j) const { return i * w_ + (j + kl_ - i); }

  std::size_t n_, kl_, ku_, w_;
  std::vector<double> a_;
  std::vector<std::size_t> piv_;
};

/// Tridiagonal node matrix: lo[j] = H(j, j-1), up[j] = H(j, j+1).
struct Tridiag {
  std::vector<double> lo, di, up;

  explicit Tridiag(std::size_t n = 0) : lo(n, 0.0), di(n, 0.0), up(n, 0.0) {}
  std::size_t size() const { return di.size(); }

  /// Add the symmetric block [[haa, hab], [hab, hbb]] on nodes (a, a+1).
  void add_pair(std::size_t a, double haa, double hab, double hbb) {
    di[a] += haa;
    di[a + 1] += hbb;
    up[a] += hab;
    lo[a + 1] += hab;
  }
};

/** \brief LDL^T of a symmetric tridiagonal system restricted to nodes 1..n-2.
 *
 * Returns false when a pivot is not positive (matrix not positive definite).
 */
inline bool solve_spd_interior(const Tridiag& H, std::vector<double>& rhs) {
  const std::size_t n = H.size();
  if (n < 3) return true;
  const std::size_t m = n - 2;
  std::vector<double> d(m), l(m, 0.0), z(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = k + 1;
    double dk = H.di[i];
    if (k > 0) dk -= l[k] * l[k] * d[k - 1];
    if (!(dk > 0.0) || !std::isfinite(dk)) return false;
    d[k] = dk;
    if (k + 1 < m) l[k + 1] = H.up[i] / dk;
  }
  for (std::size_t k = 0; k < m; ++k) z[k] = rhs[k + 1] - (k > 0 ? l[k] * z[k - 1] : 0.0);
  for (std::size_t k = m; k-- > 0;) {
    double v = z[k] / d[k];
    if (k + 1 < m) v -= l[k + 1] * rhs[k + 2];
    rhs[k + 1] = v;
  }
  rhs.front() = 0.0;
  rhs.back() = 0.0;
  return true;
}

} // namespace lagflow

#endif
