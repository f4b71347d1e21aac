#pragma once

/*
 * Small exact linear-algebra utilities used by the renormalization model:
 *
 *  - dense matrices over the quadratic field (Surd entries) with Gaussian
 *    elimination for consistent, possibly overdetermined systems;
 *  - dense integer matrices: products, powers, positivity patterns;
 *  - exact characteristic polynomials (Faddeev-LeVerrier over rationals);
 *  - integer polynomial division and cyclotomic polynomials;
 *  - Smith normal form for integer lattices.
 *
 * All dimensions here are tiny (a handful of states per row), so simple
 * O(n^3) dense algorithms are the right tool.
 */

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "renorm/numeric.hpp"
#include "renorm/surd.hpp"

namespace renorm {

/// Row-major dense matrix over the quadratic field.
struct SurdMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<Surd> a;  // rows * cols entries

  SurdMatrix() = default;
  SurdMatrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, Surd()) {}

  Surd& at(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  const Surd& at(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

  static SurdMatrix identity(int n) {
    SurdMatrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = Surd::from_int(1);
    return m;
  }

  friend SurdMatrix operator*(const SurdMatrix& x, const SurdMatrix& y) {
    if (x.cols != y.rows) throw internal_error("SurdMatrix: shape mismatch in product");
    SurdMatrix r(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
      for (int k = 0; k < x.cols; ++k) {
        if (x.at(i, k).sign() == 0) continue;
        for (int j = 0; j < y.cols; ++j)
          r.at(i, j) = r.at(i, j) + x.at(i, k) * y.at(k, j);
      }
    return r;
  }

  friend SurdMatrix operator-(const SurdMatrix& x, const SurdMatrix& y) {
    if (x.rows != y.rows || x.cols != y.cols)
      throw internal_error("SurdMatrix: shape mismatch in difference");
    SurdMatrix r(x.rows, x.cols);
    for (size_t i = 0; i < x.a.size(); ++i) r.a[i] = x.a[i] - y.a[i];
    return r;
  }

  std::vector<Surd> apply(const std::vector<Surd>& v) const {
    if (static_cast<int>(v.size()) != cols)
      throw internal_error("SurdMatrix: shape mismatch in apply");
    std::vector<Surd> r(static_cast<size_t>(rows), Surd());
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        if (at(i, j).sign() != 0) r[static_cast<size_t>(i)] = r[static_cast<size_t>(i)] + at(i, j) * v[static_cast<size_t>(j)];
    return r;
  }
};

/// Solve A x = b exactly for a consistent system with full column rank
/// (rows >= cols allowed).  Throws internal_error when the system is
/// rank-deficient or inconsistent.
inline std::vector<Surd> solve_linear(SurdMatrix A, std::vector<Surd> b) {
  if (static_cast<int>(b.size()) != A.rows)
    throw internal_error("solve_linear: rhs size mismatch");
  const int n = A.cols;
  int pivot_row = 0;
  std::vector<int> pivot_of_col(static_cast<size_t>(n), -1);
  for (int col = 0; col < n && pivot_row < A.rows; ++col) {
    int pr = -1;
    for (int r = pivot_row; r < A.rows; ++r)
      if (A.at(r, col).sign() != 0) {
        pr = r;
        break;
      }
    if (pr < 0) continue;
    for (int j = 0; j < n; ++j) std::swap(A.at(pr, j), A.at(pivot_row, j));
    std::swap(b[static_cast<size_t>(pr)], b[static_cast<size_t>(pivot_row)]);
    const Surd inv = A.at(pivot_row, col).inverse();
    for (int j = col; j < n; ++j) A.at(pivot_row, j) = A.at(pivot_row, j) * inv;
    b[static_cast<size_t>(pivot_row)] = b[static_cast<size_t>(pivot_row)] * inv;
    for (int r = 0; r < A.rows; ++r) {
      if (r == pivot_row || A.at(r, col).sign() == 0) continue;
      const Surd f = A.at(r, col);
      for (int j = col; j < n; ++j) A.at(r, j) = A.at(r, j) - f * A.at(pivot_row, j);
      b[static_cast<size_t>(r)] = b[static_cast<size_t>(r)] - f * b[static_cast<size_t>(pivot_row)];
    }
    pivot_of_col[static_cast<size_t>(col)] = pivot_row;
    ++pivot_row;
  }
  for (int col = 0; col < n; ++col)
    if (pivot_of_col[static_cast<size_t>(col)] < 0)
      throw internal_error("solve_linear: rank-deficient system");
  for (int r = pivot_row; r < A.rows; ++r)
    if (b[static_cast<size_t>(r)].sign() != 0)
      throw internal_error("solve_linear: inconsistent system");
  std::vector<Surd> x(static_cast<size_t>(n), Surd());
  for (int col = 0; col < n; ++col)
    x[static_cast<size_t>(col)] = b[static_cast<size_t>(pivot_of_col[static_cast<size_t>(col)])];
  return x;
}

/// Row-major dense integer matrix.
struct IntMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<BigInt> a;

  IntMatrix() = default;
  IntMatrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, BigInt(0)) {}

  BigInt& at(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  const BigInt& at(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

  static IntMatrix identity(int n) {
    IntMatrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
  }

  friend IntMatrix operator*(const IntMatrix& x, const IntMatrix& y) {
    if (x.cols != y.rows) throw internal_error("IntMatrix: shape mismatch in product");
    IntMatrix r(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
      for (int k = 0; k < x.cols; ++k) {
        if (x.at(i, k) == 0) continue;
        for (int j = 0; j < y.cols; ++j) r.at(i, j) += x.at(i, k) * y.at(k, j);
      }
    return r;
  }

  friend bool operator==(const IntMatrix& x, const IntMatrix& y) {
    return x.rows == y.rows && x.cols == y.cols && x.a == y.a;
  }

  bool entrywise_positive() const {
    for (const BigInt& v : a)
      if (v <= 0) return false;
    return !a.empty();
  }

  std::vector<BigInt> apply(const std::vector<BigInt>& v) const {
    if (static_cast<int>(v.size()) != cols)
      throw internal_error("IntMatrix: shape mismatch in apply");
    std::vector<BigInt> r(static_cast<size_t>(rows), BigInt(0));
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        if (at(i, j) != 0) r[static_cast<size_t>(i)] += at(i, j) * v[static_cast<size_t>(j)];
    return r;
  }
};

/// Does some power B^t (1 <= t <= cap) have all entries positive?  Works on
/// the zero/nonzero pattern only, so huge integer growth is never an issue.
/// Returns the smallest such t, or nullopt if none exists up to the cap.
inline std::optional<int> positivity_index(const IntMatrix& B, int cap) {
  const int n = B.rows;
  if (n != B.cols) throw internal_error("positivity_index: square matrix required");
  std::vector<std::vector<bool>> p(static_cast<size_t>(n), std::vector<bool>(static_cast<size_t>(n)));
  std::vector<std::vector<bool>> base = p;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) base[static_cast<size_t>(i)][static_cast<size_t>(j)] = B.at(i, j) > 0;
  p = base;
  for (int t = 1; t <= cap; ++t) {
    bool all = true;
    for (int i = 0; i < n && all; ++i)
      for (int j = 0; j < n && all; ++j)
        if (!p[static_cast<size_t>(i)][static_cast<size_t>(j)]) all = false;
    if (all) return t;
    std::vector<std::vector<bool>> q(static_cast<size_t>(n), std::vector<bool>(static_cast<size_t>(n)));
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        if (!p[static_cast<size_t>(i)][static_cast<size_t>(k)]) continue;
        for (int j = 0; j < n; ++j)
          if (base[static_cast<size_t>(k)][static_cast<size_t>(j)]) q[static_cast<size_t>(i)][static_cast<size_t>(j)] = true;
      }
    p = std::move(q);
  }
  return std::nullopt;
}

/// Exact characteristic polynomial det(z I - A) of an integer matrix, by the
/// Faddeev-LeVerrier recurrence over rationals.  Returns coefficients
/// c[0..n] with c[n] = 1 (c[i] multiplies z^i); all of them are integers.
inline std::vector<BigInt> char_poly(const IntMatrix& A) {
  const int n = A.rows;
  if (n != A.cols) throw internal_error("char_poly: square matrix required");
  std::vector<std::vector<BigRat>> M(static_cast<size_t>(n),
                                     std::vector<BigRat>(static_cast<size_t>(n), BigRat(0)));
  std::vector<BigRat> c(static_cast<size_t>(n) + 1, BigRat(0));
  c[static_cast<size_t>(n)] = 1;
  // M_0 = 0; M_{k} = A M_{k-1} + c_{n-k+1} I;  c_{n-k} = -tr(A M_k)/k.
  for (int k = 1; k <= n; ++k) {
    std::vector<std::vector<BigRat>> AM(static_cast<size_t>(n),
                                        std::vector<BigRat>(static_cast<size_t>(n), BigRat(0)));
    for (int i = 0; i < n; ++i) M[static_cast<size_t>(i)][static_cast<size_t>(i)] += c[static_cast<size_t>(n - k + 1)];
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < n; ++l) {
        if (A.at(i, l) == 0) continue;
        const BigRat f(A.at(i, l));
        for (int j = 0; j < n; ++j)
          AM[static_cast<size_t>(i)][static_cast<size_t>(j)] += f * M[static_cast<size_t>(l)][static_cast<size_t>(j)];
      }
    M = AM;
    BigRat tr(0);
    for (int i = 0; i < n; ++i) tr += M[static_cast<size_t>(i)][static_cast<size_t>(i)];
    c[static_cast<size_t>(n - k)] = -tr / k;
  }
  std::vector<BigInt> out(static_cast<size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    const BigRat& v = c[static_cast<size_t>(i)];
    if (boost::multiprecision::denominator(v) != 1)
      throw internal_error("char_poly: non-integer coefficient");
    out[static_cast<size_t>(i)] = boost::multiprecision::numerator(v);
  }
  return out;
}

/// Exact division of integer polynomials (coefficients low-to-high).
/// Returns the quotient if divisor divides dividend exactly, else nullopt.
/// The divisor must be monic (leading coefficient 1).
inline std::optional<std::vector<BigInt>> poly_divide_exact(std::vector<BigInt> num,
                                                            const std::vector<BigInt>& den) {
  while (!num.empty() && num.back() == 0) num.pop_back();
  std::vector<BigInt> d = den;
  while (!d.empty() && d.back() == 0) d.pop_back();
  if (d.empty()) throw internal_error("poly_divide_exact: zero divisor");
  if (d.back() != 1) throw internal_error("poly_divide_exact: divisor must be monic");
  if (num.empty()) return std::vector<BigInt>{};
  if (num.size() < d.size()) return std::nullopt;
  std::vector<BigInt> q(num.size() - d.size() + 1, BigInt(0));
  for (size_t i = q.size(); i-- > 0;) {
    BigInt coef = num[i + d.size() - 1];
    q[i] = coef;
    if (coef == 0) continue;
    for (size_t j = 0; j < d.size(); ++j) num[i + j] -= coef * d[j];
  }
  for (const BigInt& r : num)
    if (r != 0) return std::nullopt;
  return q;
}

/// Coefficients (low-to-high) of the m-th cyclotomic polynomial.
inline std::vector<BigInt> cyclotomic(int m) {
  if (m < 1) throw internal_error("cyclotomic: m must be >= 1");
  // x^m - 1 divided by the cyclotomic polynomials of all proper divisors.
  std::vector<BigInt> num(static_cast<size_t>(m) + 1, BigInt(0));
  num[0] = -1;
  num[static_cast<size_t>(m)] = 1;
  for (int d = 1; d < m; ++d) {
    if (m % d != 0) continue;
    auto q = poly_divide_exact(num, cyclotomic(d));
    if (!q) throw internal_error("cyclotomic: internal division failure");
    num = std::move(*q);
  }
  return num;
}

/// Result of factoring a monic integer polynomial into cyclotomics.
struct CyclotomicFactorization {
  bool complete = false;            // whole polynomial is a product of cyclotomics
  std::vector<int> orders;          // m for each cyclotomic factor, with multiplicity
  std::vector<BigInt> remainder;    // what is left after removing all cyclotomic factors
};

/// Greedily factor a monic integer polynomial (coefficients low-to-high) into
/// cyclotomic polynomials Phi_m.  Tries every m whose degree phi(m) is at most
/// the degree of the remaining polynomial; repeats factors are taken with
/// multiplicity.  The decision is exact.
inline CyclotomicFactorization factor_into_cyclotomics(std::vector<BigInt> poly) {
  CyclotomicFactorization out;
  while (!poly.empty() && poly.back() == 0) poly.pop_back();
  if (poly.empty()) throw internal_error("factor_into_cyclotomics: zero polynomial");
  // Candidate orders: phi(m) <= deg. Since phi(m) >= sqrt(m/2), m <= 2 deg^2 + 1
  // is a safe cap; the degrees here are at most a few units.
  const int deg0 = static_cast<int>(poly.size()) - 1;
  const int m_cap = 2 * deg0 * deg0 + 2;
  bool progress = true;
  while (static_cast<int>(poly.size()) - 1 > 0 && progress) {
    progress = false;
    for (int m = 1; m <= m_cap; ++m) {
      const std::vector<BigInt> phi_m = cyclotomic(m);
      if (phi_m.size() > poly.size()) continue;
      for (;;) {
        auto q = poly_divide_exact(poly, phi_m);
        if (!q) break;
        poly = std::move(*q);
        out.orders.push_back(m);
        progress = true;
      }
    }
  }
  out.remainder = poly;
  out.complete = poly.size() == 1 && poly[0] == 1;
  return out;
}

/// Smith normal form elementary divisors of an integer matrix (the diagonal
/// of the SNF, nonnegative, each dividing the next; zeros trail).
inline std::vector<BigInt> smith_normal_divisors(IntMatrix A) {
  const int rows = A.rows, cols = A.cols;
  std::vector<BigInt> divisors;
  int top = 0;
  while (top < rows && top < cols) {
    // Find a nonzero pivot in the lower-right block.
    int pi = -1, pj = -1;
    for (int i = top; i < rows && pi < 0; ++i)
      for (int j = top; j < cols; ++j)
        if (A.at(i, j) != 0) {
          pi = i;
          pj = j;
          break;
        }
    if (pi < 0) break;
    for (int j = 0; j < cols; ++j) std::swap(A.at(pi, j), A.at(top, j));
    for (int i = 0; i < rows; ++i) std::swap(A.at(i, pj), A.at(i, top));
    // Reduce until the pivot divides everything in its row and column.
    for (;;) {
      bool clean = true;
      for (int i = top + 1; i < rows; ++i) {
        if (A.at(i, top) == 0) continue;
        const BigInt q = floor_div(A.at(i, top), A.at(top, top));
        for (int j = 0; j < cols; ++j) A.at(i, j) -= q * A.at(top, j);
        if (A.at(i, top) != 0) {
          for (int j = 0; j < cols; ++j) std::swap(A.at(i, j), A.at(top, j));
          clean = false;
        }
      }
      for (int j = top + 1; j < cols; ++j) {
        if (A.at(top, j) == 0) continue;
        const BigInt q = floor_div(A.at(top, j), A.at(top, top));
        for (int i = 0; i < rows; ++i) A.at(i, j) -= q * A.at(i, top);
        if (A.at(top, j) != 0) {
          for (int i = 0; i < rows; ++i) std::swap(A.at(i, j), A.at(i, top));
          clean = false;
        }
      }
      if (!clean) continue;
      // Pivot must also divide the rest of the block for true SNF divisors.
      bool fixed = false;
      for (int i = top + 1; i < rows && !fixed; ++i)
        for (int j = top + 1; j < cols && !fixed; ++j)
          if (A.at(i, j) % A.at(top, top) != 0) {
            for (int jj = 0; jj < cols; ++jj) A.at(top, jj) += A.at(i, jj);
            fixed = true;
          }
      if (!fixed) break;
    }
    if (A.at(top, top) < 0)
      for (int j = 0; j < cols; ++j) A.at(top, j) = -A.at(top, j);
    divisors.push_back(A.at(top, top));
    ++top;
  }
  return divisors;
}

}  // namespace renorm
