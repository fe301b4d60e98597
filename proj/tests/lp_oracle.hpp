#pragma once

// Test-only feasibility oracles for small linear systems, independent of
// orc::lp. Systems are rows `a . x (<=|>=|==) b`.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace orc::check {

struct Row {
  std::vector<double> a;
  int rel;  // -1: <=, 0: ==, 1: >=
  double b;
};

inline bool satisfies(const std::vector<Row>& rows, const std::vector<double>& x,
                      double tol = 1e-7) {
  for (const auto& r : rows) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += r.a[i] * x[i];
    if (r.rel <= 0 && s > r.b + tol) return false;
    if (r.rel >= 0 && s < r.b - tol) return false;
  }
  return true;
}

// Solves the square system M x = v by Gaussian elimination with partial
// pivoting; returns false when singular.
inline bool solve_square(std::vector<std::vector<double>> m, std::vector<double> v,
                         std::vector<double>& x) {
  const std::size_t n = v.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(m[r][c]) > std::abs(m[p][c])) p = r;
    if (std::abs(m[p][c]) < 1e-10) return false;
    std::swap(m[p], m[c]);
    std::swap(v[p], v[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = m[r][c] / m[c][c];
      for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
      v[r] -= f * v[c];
    }
  }
  x.resize(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = v[i] / m[i][i];
  return true;
}

/// Feasibility by vertex enumeration. The caller must include bounding
/// rows so that a nonempty feasible set has a vertex.
inline bool vertex_feasible(const std::vector<Row>& rows, std::size_t nvars) {
  std::vector<std::pair<std::vector<double>, double>> planes;
  for (const auto& r : rows) planes.emplace_back(r.a, r.b);
  const std::size_t m = planes.size();
  if (nvars == 0) return satisfies(rows, {});
  std::vector<std::size_t> idx(nvars);
  for (std::size_t i = 0; i < nvars; ++i) idx[i] = i;
  for (;;) {
    std::vector<std::vector<double>> mat;
    std::vector<double> rhs;
    for (std::size_t i : idx) {
      mat.push_back(planes[i].first);
      rhs.push_back(planes[i].second);
    }
    std::vector<double> x;
    if (solve_square(mat, rhs, x) && satisfies(rows, x, 1e-6)) return true;
    // next combination
    std::size_t k = nvars;
    while (k > 0 && idx[k - 1] == m - nvars + k - 1) --k;
    if (k == 0) return false;
    ++idx[k - 1];
    for (std::size_t j = k; j < nvars; ++j) idx[j] = idx[j - 1] + 1;
  }
}

/// Dense two-phase simplex (max c.x, Ax <= b, x >= 0) in the classic
/// textbook layout. Used as a feasibility oracle with free variables split
/// into positive and negative parts.
class TextbookSimplex {
 public:
  TextbookSimplex(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                  const std::vector<double>& c)
      : m_(static_cast<int>(b.size())),
        n_(static_cast<int>(c.size())),
        N_(n_ + 1),
        B_(m_),
        D_(m_ + 2, std::vector<double>(n_ + 2)) {
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < n_; ++j) D_[i][j] = A[i][j];
    for (int i = 0; i < m_; ++i) {
      B_[i] = n_ + i;
      D_[i][n_] = -1;
      D_[i][n_ + 1] = b[i];
    }
    for (int j = 0; j < n_; ++j) {
      N_[j] = j;
      D_[m_][j] = -c[j];
    }
    N_[n_] = -1;
    D_[m_ + 1][n_] = 1;
  }

  bool feasible() {
    int r = 0;
    for (int i = 1; i < m_; ++i)
      if (D_[i][n_ + 1] < D_[r][n_ + 1]) r = i;
    if (m_ > 0 && D_[r][n_ + 1] < -kEps) {
      pivot(r, n_);
      if (!run(2) || D_[m_ + 1][n_ + 1] < -kEps) return false;
    }
    return true;
  }

 private:
  static constexpr double kEps = 1e-9;

  void pivot(int r, int s) {
    const double inv = 1.0 / D_[r][s];
    for (int i = 0; i < m_ + 2; ++i)
      if (i != r && std::abs(D_[i][s]) > kEps) {
        const double f = D_[i][s] * inv;
        for (int j = 0; j < n_ + 2; ++j) D_[i][j] -= D_[r][j] * f;
        D_[i][s] = D_[r][s] * f;
      }
    for (int j = 0; j < n_ + 2; ++j)
      if (j != s) D_[r][j] *= inv;
    for (int i = 0; i < m_ + 2; ++i)
      if (i != r) D_[i][s] *= -inv;
    D_[r][s] = inv;
    std::swap(B_[r], N_[s]);
  }

  bool run(int phase) {
    const int x = m_ + phase - 1;
    for (int guard = 0; guard < 100000; ++guard) {
      int s = -1;
      for (int j = 0; j <= n_; ++j)
        if (N_[j] != -phase &&
            (s == -1 || std::make_pair(D_[x][j], N_[j]) < std::make_pair(D_[x][s], N_[s])))
          s = j;
      if (D_[x][s] >= -kEps) return true;
      int r = -1;
      for (int i = 0; i < m_; ++i) {
        if (D_[i][s] <= kEps) continue;
        if (r == -1 || std::make_pair(D_[i][n_ + 1] / D_[i][s], B_[i]) <
                           std::make_pair(D_[r][n_ + 1] / D_[r][s], B_[r]))
          r = i;
      }
      if (r == -1) return false;
      pivot(r, s);
    }
    return false;
  }

  int m_, n_;
  std::vector<int> N_, B_;
  std::vector<std::vector<double>> D_;
};

inline bool textbook_feasible(const std::vector<Row>& rows, std::size_t nvars) {
  std::vector<std::vector<double>> A;
  std::vector<double> b;
  auto add = [&](const std::vector<double>& a, double rhs, double sign) {
    std::vector<double> split(2 * nvars);
    for (std::size_t i = 0; i < nvars; ++i) {
      split[i] = sign * a[i];
      split[nvars + i] = -sign * a[i];
    }
    A.push_back(split);
    b.push_back(sign * rhs);
  };
  for (const auto& r : rows) {
    if (r.rel <= 0) add(r.a, r.b, 1.0);
    if (r.rel >= 0) add(r.a, r.b, -1.0);
  }
  TextbookSimplex lp(A, b, std::vector<double>(2 * nvars, 0.0));
  return lp.feasible();
}

}  // namespace orc::check
