#pragma once

/*
 * Spectral data of the renormalization step.
 *
 * The drift tables sigma_k (stacked over states (i, eps)) evolve linearly:
 * sigma_{k+1} = M^{(k+1)} sigma_k with a nonnegative integer 2Q x 2Q matrix
 * M^{(k+1)} determined by the digit n_{k+1} and the cell offset eps_k(0).
 * Once the digit phase and offsets recur with period L, the product of one
 * period's matrices governs everything:
 *
 *  - its length sector (vectors constant in eps) is the 2x2 digit matrix
 *    with characteristic polynomial z^2 - J z + 1, J = trace >= 3;
 *  - on the complement the spectrum consists of roots of unity, certified by
 *    exact division of the characteristic polynomial by cyclotomics;
 *  - raising the period to the least common multiple of those root orders
 *    (extended until the product is entrywise positive) makes the drift
 *    tables exactly affine in the period count, which is certified on an
 *    11-point grid.
 *
 * Numeric helpers (dominant eigenvalue fields, finite-difference curvature,
 * norm scans) operate on callback-supplied complex matrix families and are
 * shared by the transfer-operator style checks downstream.
 */

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "renorm/blocks.hpp"
#include "renorm/linalg.hpp"
#include "renorm/numeric.hpp"

namespace renorm {

/// The 2Q x 2Q integer matrix of the step producing level k1 >= 1:
/// sigma_{k1} = M sigma_{k1-1}, applied per coordinate to the stacked tables
/// indexed by i*Q + eps.
inline IntMatrix displacement_matrix(RenormModel& m, int k1) {
  if (k1 < 1) throw internal_error("displacement_matrix: level must be >= 1");
  const int Q = m.Q();
  const std::int64_t n = m.digit(k1);
  const int eta = m.eps(k1 - 1, 0);
  IntMatrix M(2 * Q, 2 * Q);
  for (int i = 0; i < 2; ++i)
    for (int e = 0; e < Q; ++e) {
      const int row = i * Q + e;
      for (std::int64_t j = 1; j <= n - 1 - i; ++j)
        M.at(row, static_cast<int>((e + (j - 1) * eta) % Q)) += 1;
      M.at(row, Q + static_cast<int>((e + (n - 1 - i) * eta) % Q)) += 1;
    }
  return M;
}

/// Product of the step matrices across levels K+1 .. K+L (latest step
/// leftmost), so that sigma_{K+L} = period_matrix * sigma_K.
inline IntMatrix period_matrix(RenormModel& m, int K, int L) {
  IntMatrix P = IntMatrix::identity(2 * m.Q());
  for (int r = 1; r <= L; ++r) P = displacement_matrix(m, K + r) * P;
  return P;
}

/// Exact eigenstructure of the one-period product.
struct SpectralStructure {
  int K = 0;  // first level of the recurring phase
  int L = 0;  // cycle length
  IntMatrix period;                      // 2Q x 2Q product over one cycle
  std::vector<IntMatrix> factors;        // chronological step matrices (levels K+1..K+L)
  IntMatrix length_block;                // 2x2 action on the length sector
  BigInt trace;                          // J of the length block (det is 1)
  std::vector<BigInt> charpoly;          // full characteristic polynomial, low-to-high
  std::vector<BigInt> length_charpoly;   // {1, -J, 1}
  std::vector<BigInt> perp_charpoly;     // exact quotient on the complement
  CyclotomicFactorization perp_factors;  // cyclotomic decomposition of the quotient
  int lcm_orders = 1;                    // lcm of the root-of-unity orders
  int positivity = 0;                    // least t with (period^t) entrywise positive
  int M = 0;                             // extension multiple (see period_extend)
  int L_ext = 0;                         // L * M
};

inline SpectralStructure spectral_structure(RenormModel& m) {
  SpectralStructure s;
  const auto [K, L] = m.parity_cycle();
  s.K = K;
  s.L = L;
  const int Q = m.Q();
  s.period = IntMatrix::identity(2 * Q);
  for (int r = 1; r <= L; ++r) {
    s.factors.push_back(displacement_matrix(m, K + r));
    s.period = s.factors.back() * s.period;
  }
  // Length sector: constant-in-eps vectors (u0, u1) evolve by a 2x2 block.
  s.length_block = IntMatrix(2, 2);
  {
    // Apply the period to the indicators of the two constant sectors.
    for (int col = 0; col < 2; ++col) {
      std::vector<BigInt> u(static_cast<size_t>(2 * Q), BigInt(0));
      for (int e = 0; e < Q; ++e) u[static_cast<size_t>(col * Q + e)] = 1;
      const std::vector<BigInt> v = s.period.apply(u);
      // The image is again constant in eps; read the two constants.
      for (int i = 0; i < 2; ++i) {
        for (int e = 1; e < Q; ++e)
          if (v[static_cast<size_t>(i * Q + e)] != v[static_cast<size_t>(i * Q)])
            throw internal_error("period matrix does not preserve the length sector");
        s.length_block.at(i, col) = v[static_cast<size_t>(i * Q)];
      }
    }
  }
  s.trace = s.length_block.at(0, 0) + s.length_block.at(1, 1);
  const BigInt det = s.length_block.at(0, 0) * s.length_block.at(1, 1) -
                     s.length_block.at(0, 1) * s.length_block.at(1, 0);
  if (det != 1) throw internal_error("length sector determinant is not 1");
  s.charpoly = char_poly(s.period);
  s.length_charpoly = {BigInt(1), -s.trace, BigInt(1)};
  auto quotient = poly_divide_exact(s.charpoly, s.length_charpoly);
  if (!quotient)
    throw internal_error("length-sector polynomial does not divide the period polynomial");
  s.perp_charpoly = *quotient;
  s.perp_factors = factor_into_cyclotomics(s.perp_charpoly);
  s.lcm_orders = 1;
  for (int ord : s.perp_factors.orders)
    s.lcm_orders = static_cast<int>(std::lcm(static_cast<long long>(s.lcm_orders),
                                             static_cast<long long>(ord)));
  const int cap = m.caps().period_extension;
  auto pos = positivity_index(s.period, cap);
  if (!pos) throw cap_exceeded("period positivity index exceeds the configured cap");
  s.positivity = *pos;
  // Smallest multiple of the root-order lcm whose power is entrywise positive.
  s.M = s.lcm_orders;
  while (s.M < s.positivity) s.M += s.lcm_orders;
  s.L_ext = s.L * s.M;
  return s;
}

/// Extended-period drift data: on levels K + p + n*L_ext (p = 0..L_ext-1)
/// the tables are exactly affine in n, with certified base and slope.
struct PeriodStructure {
  SpectralStructure spec;
  int K = 0;
  int L_ext = 0;
  std::vector<std::int64_t> digits;          // digits[r-1] = digit(K+r), r = 1..L_ext
  std::vector<std::array<int, 2>> eps_pair;  // [p] = (eps(K+p,0), eps(K+p,1))
  std::vector<std::vector<Vec>> sig_base;    // [p][i*Q+e] = sigma_{K+p}
  std::vector<std::vector<Vec>> sig_slope;   // [p][i*Q+e] = sigma_{K+p+L_ext} - sigma_{K+p}
  bool affine_certified = false;             // exact at 11 grid points per phase
  int certified_points = 0;
};

inline PeriodStructure period_extend(RenormModel& m) {
  PeriodStructure ps;
  ps.spec = spectral_structure(m);
  ps.K = ps.spec.K;
  ps.L_ext = ps.spec.L_ext;
  const int Q = m.Q();
  const int grid = 11;
  ps.certified_points = grid;
  ps.affine_certified = true;
  ps.digits.resize(static_cast<size_t>(ps.L_ext));
  for (int r = 1; r <= ps.L_ext; ++r)
    ps.digits[static_cast<size_t>(r - 1)] = m.digit(ps.K + r);
  ps.eps_pair.resize(static_cast<size_t>(ps.L_ext));
  ps.sig_base.resize(static_cast<size_t>(ps.L_ext));
  ps.sig_slope.resize(static_cast<size_t>(ps.L_ext));
  for (int p = 0; p < ps.L_ext; ++p) {
    const int base_level = ps.K + p;
    ps.eps_pair[static_cast<size_t>(p)] = {m.eps(base_level, 0), m.eps(base_level, 1)};
    std::vector<Vec>& base = ps.sig_base[static_cast<size_t>(p)];
    std::vector<Vec>& slope = ps.sig_slope[static_cast<size_t>(p)];
    base.resize(static_cast<size_t>(2 * Q), Vec(m.dim()));
    slope.resize(static_cast<size_t>(2 * Q), Vec(m.dim()));
    for (int i = 0; i < 2; ++i)
      for (int e = 0; e < Q; ++e) {
        const size_t idx = static_cast<size_t>(i * Q + e);
        base[idx] = m.sigma(base_level, i, e);
        slope[idx] = m.sigma(base_level + ps.L_ext, i, e) - base[idx];
      }
    // Certification: digit phase, offsets, and affine drift at all grid points.
    for (int n = 0; n < grid; ++n) {
      const int lvl = base_level + n * ps.L_ext;
      if (m.eps(lvl, 0) != m.eps(base_level, 0) || m.eps(lvl, 1) != m.eps(base_level, 1))
        ps.affine_certified = false;
      if (m.digit(lvl + 1) != m.digit(base_level + 1)) ps.affine_certified = false;
      for (int i = 0; i < 2 && ps.affine_certified; ++i)
        for (int e = 0; e < Q; ++e) {
          const size_t idx = static_cast<size_t>(i * Q + e);
          Vec expect = base[idx];
          for (int c = 0; c < m.dim(); ++c)
            expect[c] += static_cast<std::int64_t>(n) * slope[idx][c];
          if (!(m.sigma(lvl, i, e) == expect)) {
            ps.affine_certified = false;
            break;
          }
        }
      if (!ps.affine_certified) break;
    }
    if (!ps.affine_certified) break;
  }
  return ps;
}

// ---------------------------------------------------------------------------
// Numeric helpers on complex matrix families.

/// A family theta -> row-major n x n complex matrix.
using CharMatrixFn =
    std::function<std::vector<std::complex<double>>(const std::array<double, 3>&)>;

inline Eigen::MatrixXcd to_eigen(const std::vector<std::complex<double>>& a, int n) {
  Eigen::MatrixXcd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = a[static_cast<size_t>(i) * n + j];
  return M;
}

/// Dominant eigenvalue and matched right/left eigenvectors, scaled so that
/// left^T right = 1.
struct PerronData {
  std::complex<double> lambda;
  Eigen::VectorXcd right;
  Eigen::VectorXcd left;
};

inline PerronData perron(const Eigen::MatrixXcd& A) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> right_solver(A);
  if (right_solver.info() != Eigen::Success)
    throw internal_error("eigensolver failed on the transfer matrix");
  int ri = 0;
  for (int i = 1; i < A.rows(); ++i)
    if (std::abs(right_solver.eigenvalues()(i)) > std::abs(right_solver.eigenvalues()(ri)))
      ri = i;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> left_solver(A.transpose());
  if (left_solver.info() != Eigen::Success)
    throw internal_error("eigensolver failed on the transposed transfer matrix");
  int li = 0;
  for (int i = 1; i < A.rows(); ++i)
    if (std::abs(left_solver.eigenvalues()(i) - right_solver.eigenvalues()(ri)) <
        std::abs(left_solver.eigenvalues()(li) - right_solver.eigenvalues()(ri)))
      li = i;
  PerronData p;
  p.lambda = right_solver.eigenvalues()(ri);
  p.right = right_solver.eigenvectors().col(ri);
  p.left = left_solver.eigenvectors().col(li);
  const std::complex<double> inner = p.left.transpose() * p.right;
  if (std::abs(inner) < 1e-14) throw internal_error("degenerate dominant eigenpair");
  p.left /= inner;
  return p;
}

/// Dominant eigenpair of Pi(theta), normalized against the stationary row
/// vector at zero: <pi0, v(theta)> = <pi(theta), v(theta)> = 1, where pi0 is
/// the theta = 0 left eigenvector scaled to sum 1.
struct PerronField {
  std::complex<double> lambda;
  Eigen::VectorXcd v;    // right eigenvector, <pi0, v> = 1
  Eigen::VectorXcd pi;   // left eigenvector, <pi, v> = 1
  Eigen::VectorXcd pi0;  // stationary vector at theta = 0 (sums to 1)
};

inline PerronField perron_normalized(const CharMatrixFn& Pi, int n,
                                     const std::array<double, 3>& theta) {
  PerronData at0 = perron(to_eigen(Pi({0.0, 0.0, 0.0}), n));
  Eigen::VectorXcd pi0 = at0.left;
  pi0 /= pi0.sum();
  PerronData at = perron(to_eigen(Pi(theta), n));
  PerronField f;
  f.lambda = at.lambda;
  f.pi0 = pi0;
  const std::complex<double> s = (pi0.transpose() * at.right);
  if (std::abs(s) < 1e-14) throw internal_error("right eigenvector orthogonal to pi0");
  f.v = at.right / s;
  const std::complex<double> t = (at.left.transpose() * f.v);
  f.pi = at.left / t;
  return f;
}

inline std::complex<double> top_eigenvalue(const CharMatrixFn& Pi, int n,
                                           const std::array<double, 3>& theta) {
  Eigen::MatrixXcd A = to_eigen(Pi(theta), n);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw internal_error("eigensolver failed on the transfer matrix");
  std::complex<double> top = es.eigenvalues()(0);
  for (int i = 1; i < n; ++i)
    if (std::abs(es.eigenvalues()(i)) > std::abs(top)) top = es.eigenvalues()(i);
  return top;
}

/// Gradient of the dominant eigenvalue at theta = 0 by Richardson-extrapolated
/// central differences (O(h^4) accurate), returned coordinatewise.
inline std::array<std::complex<double>, 3> perron_gradient(const CharMatrixFn& Pi, int n,
                                                           int d, double h = 1e-3) {
  std::array<std::complex<double>, 3> g{};
  for (int i = 0; i < d; ++i) {
    auto diff = [&](double step) {
      std::array<double, 3> tp{}, tm{};
      tp[static_cast<size_t>(i)] = step;
      tm[static_cast<size_t>(i)] = -step;
      return (top_eigenvalue(Pi, n, tp) - top_eigenvalue(Pi, n, tm)) / (2.0 * step);
    };
    const std::complex<double> full = diff(h), half = diff(h / 2);
    g[static_cast<size_t>(i)] = (4.0 * half - full) / 3.0;
  }
  return g;
}

/// Curvature matrix D with |lambda(theta)| = 1 - <D theta, theta> + o(|theta|^2),
/// from Richardson-extrapolated central second differences of 1 - |lambda|.
inline std::array<std::array<double, 3>, 3> diffusion_fd(const CharMatrixFn& Pi, int n,
                                                         int d, double h = 1e-3) {
  auto g = [&](const std::array<double, 3>& theta) {
    return 1.0 - std::abs(top_eigenvalue(Pi, n, theta));
  };
  std::array<std::array<double, 3>, 3> D{};
  for (int i = 0; i < d; ++i) {
    auto second = [&](double step) {
      std::array<double, 3> tp{}, tm{};
      tp[static_cast<size_t>(i)] = step;
      tm[static_cast<size_t>(i)] = -step;
      return (g(tp) + g(tm)) / (2.0 * step * step);
    };
    const double full = second(h), half = second(h / 2);
    D[static_cast<size_t>(i)][static_cast<size_t>(i)] = (4.0 * half - full) / 3.0;
  }
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      auto mixed = [&](double step) {
        auto make = [&](double si, double sj) {
          std::array<double, 3> t{};
          t[static_cast<size_t>(i)] = si;
          t[static_cast<size_t>(j)] = sj;
          return g(t);
        };
        return (make(step, step) + make(-step, -step) - make(step, -step) -
                make(-step, step)) /
               (8.0 * step * step);
      };
      const double full = mixed(h), half = mixed(h / 2);
      const double v = (4.0 * half - full) / 3.0;
      D[static_cast<size_t>(i)][static_cast<size_t>(j)] = v;
      D[static_cast<size_t>(j)][static_cast<size_t>(i)] = v;
    }
  return D;
}

/// Max-row-absolute-sum norm of a row-major n x n complex matrix.
inline double row_sum_norm(const std::vector<std::complex<double>>& a, int n) {
  double best = 0;
  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (int j = 0; j < n; ++j) s += std::abs(a[static_cast<size_t>(i) * n + j]);
    best = std::max(best, s);
  }
  return best;
}

/// Norm scan of a transfer family over the fundamental torus domain.
/// The scanned norms are invariant under integer translations of theta when
/// the transition displacements per (source, target) pair differ by lattice
/// vectors, so scanning [-1/2, 1/2)^d covers all of R^d.
struct AdaptednessScan {
  double norm_at_zero = 0;  // should be 1 for a stochastic family
  double r_hat = 0;         // radius separating the near-zero and bulk regimes
  double eps_hat = 0;       // min over the bulk of 1 - norm(theta)
  double c_hat = 0;         // min over 0 < |theta| < r_hat of (1 - norm) / |theta|^2
};

inline AdaptednessScan adaptedness_scan(const CharMatrixFn& Pi, int n, int d,
                                        int grid = 64, double r_hat = 0.15) {
  AdaptednessScan out;
  out.r_hat = r_hat;
  out.norm_at_zero = row_sum_norm(Pi({0.0, 0.0, 0.0}), n);
  out.eps_hat = 1e300;
  out.c_hat = 1e300;
  std::array<int, 3> dims{1, 1, 1};
  for (int i = 0; i < d; ++i) dims[static_cast<size_t>(i)] = grid;
  for (int a = 0; a < dims[0]; ++a)
    for (int b = 0; b < dims[1]; ++b)
      for (int c = 0; c < dims[2]; ++c) {
        std::array<double, 3> theta{};
        const std::array<int, 3> idx{a, b, c};
        double norm2 = 0;
        for (int i = 0; i < d; ++i) {
          double t = (idx[static_cast<size_t>(i)] + 0.5) / grid - 0.5;
          theta[static_cast<size_t>(i)] = t;
          norm2 += t * t;
        }
        const double r = std::sqrt(norm2);
        if (r == 0) continue;
        const double gap = 1.0 - row_sum_norm(Pi(theta), n);
        if (r >= r_hat)
          out.eps_hat = std::min(out.eps_hat, gap);
        else
          out.c_hat = std::min(out.c_hat, gap / norm2);
      }
  return out;
}

}  // namespace renorm
