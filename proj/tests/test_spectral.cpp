#include <catch2/catch_amalgamated.hpp>

#include "renorm/rat.hpp"
#include "renorm/spectral.hpp"

using namespace renorm;

namespace {
RenormModel golden_model() {
  return RenormModel(Surd(-1, 1, 2, 5), StepCocycle(2, {Vec::of({1}), Vec::of({-1})}));
}
RenormModel pell_model() {
  return RenormModel(Surd(-1, 1, 1, 2),
                     StepCocycle(3, {Vec::of({1, 0}), Vec::of({0, 1}), Vec::of({-1, -1})}));
}

std::vector<BigInt> poly_mul(const std::vector<BigInt>& a, const std::vector<BigInt>& b) {
  std::vector<BigInt> r(a.size() + b.size() - 1, BigInt(0));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}
}  // namespace

TEST_CASE("cyclotomic polynomials and exact division") {
  CHECK(cyclotomic(1) == std::vector<BigInt>{-1, 1});
  CHECK(cyclotomic(2) == std::vector<BigInt>{1, 1});
  CHECK(cyclotomic(4) == (std::vector<BigInt>{1, 0, 1}));
  CHECK(cyclotomic(6) == (std::vector<BigInt>{1, -1, 1}));
  // (z + 1)(z^2 + 1) = z^3 + z^2 + z + 1 factors completely.
  const auto f = factor_into_cyclotomics({1, 1, 1, 1});
  CHECK(f.complete);
  CHECK(f.orders == (std::vector<int>{2, 4}));
  // z^2 - z - 1 has no root of unity factor.
  const auto g = factor_into_cyclotomics({-1, -1, 1});
  CHECK_FALSE(g.complete);
  CHECK(g.orders.empty());
  // Non-divisibility is reported, not rounded.
  CHECK_FALSE(poly_divide_exact({1, 1, 1, 1}, {1, -1, 1}).has_value());
  const auto q = poly_divide_exact({1, 1, 1, 1}, {1, 1});
  REQUIRE(q.has_value());
  CHECK(*q == (std::vector<BigInt>{1, 0, 1}));
}

TEST_CASE("step matrices advance the length vector") {
  for (auto& mdl : {golden_model(), pell_model()}) {
    RenormModel m = mdl;
    const int Q = m.Q();
    for (int k1 = 1; k1 <= 8; ++k1) {
      const IntMatrix M = displacement_matrix(m, k1);
      std::vector<BigInt> prev(static_cast<size_t>(2 * Q));
      for (int i = 0; i < 2; ++i)
        for (int e = 0; e < Q; ++e) prev[static_cast<size_t>(i * Q + e)] = m.len(k1 - 1, i);
      const auto next = M.apply(prev);
      for (int i = 0; i < 2; ++i)
        for (int e = 0; e < Q; ++e)
          REQUIRE(next[static_cast<size_t>(i * Q + e)] == m.len(k1, i));
    }
  }
}

TEST_CASE("one-period eigenstructure of the golden instance") {
  RenormModel m = golden_model();
  const SpectralStructure s = spectral_structure(m);
  CHECK(s.K == 1);
  CHECK(s.L == 4);
  CHECK(s.M == 1);
  CHECK(s.L_ext == 4);
  CHECK(s.positivity == 1);
  CHECK(s.trace == 18);
  CHECK(s.length_charpoly == (std::vector<BigInt>{1, -18, 1}));
  // Quotient on the complement: degree 2Q - 2 = 2, all roots of unity.
  CHECK(static_cast<int>(s.perp_charpoly.size()) - 1 == 2 * m.Q() - 2);
  CHECK(s.perp_factors.complete);
  for (int ord : s.perp_factors.orders) CHECK(ord >= 1);
  // charpoly = length_charpoly * perp_charpoly exactly.
  CHECK(s.charpoly == poly_mul(s.length_charpoly, s.perp_charpoly));
  // The length block advances (len_K(0), len_K(1)) across one cycle.
  for (int i = 0; i < 2; ++i)
    CHECK(s.length_block.at(i, 0) * m.len(s.K, 0) + s.length_block.at(i, 1) * m.len(s.K, 1) ==
          m.len(s.K + s.L, i));
}

TEST_CASE("one-period eigenstructure of the three-cell instance") {
  RenormModel m = pell_model();
  const SpectralStructure s = spectral_structure(m);
  CHECK(s.trace == 1154);
  CHECK(s.L_ext == s.L * s.M);
  CHECK(static_cast<int>(s.perp_charpoly.size()) - 1 == 2 * m.Q() - 2);
  CHECK(s.perp_factors.complete);
  int lcm = 1;
  for (int ord : s.perp_factors.orders)
    lcm = static_cast<int>(std::lcm(static_cast<long long>(lcm), static_cast<long long>(ord)));
  CHECK(lcm == s.lcm_orders);
  CHECK(s.M % s.lcm_orders == 0);
  CHECK(s.M >= s.positivity);
  CHECK(s.charpoly == poly_mul(s.length_charpoly, s.perp_charpoly));
  for (int i = 0; i < 2; ++i)
    CHECK(s.length_block.at(i, 0) * m.len(s.K, 0) + s.length_block.at(i, 1) * m.len(s.K, 1) ==
          m.len(s.K + s.L, i));
}

TEST_CASE("extended period drift is exactly affine") {
  for (auto& mdl : {golden_model(), pell_model()}) {
    RenormModel m = mdl;
    const PeriodStructure ps = period_extend(m);
    CHECK(ps.affine_certified);
    CHECK(ps.certified_points == 11);
    CHECK(ps.L_ext == ps.spec.L_ext);
    CHECK(static_cast<int>(ps.digits.size()) == ps.L_ext);
    // Spot-check the slope definition at phase 0.
    for (int e = 0; e < m.Q(); ++e) {
      const Vec base = m.sigma(ps.K, 0, e);
      const Vec deep = m.sigma(ps.K + ps.L_ext, 0, e);
      CHECK(deep - base == ps.sig_slope[0][static_cast<size_t>(e)]);
    }
  }
}

TEST_CASE("transfer operator is flat at the origin with definite curvature") {
  RenormModel m = golden_model();
  const LimitChain chain = rat_limit_build(m, period_extend(m));
  const LimitCharModel model = chain.char_model();
  const CharMatrixFn fn = model.fn();

  const auto top0 = top_eigenvalue(fn, model.n, {0.0, 0.0, 0.0});
  CHECK(std::abs(top0 - std::complex<double>(1.0, 0.0)) < 1e-12);

  const auto grad = perron_gradient(fn, model.n, model.d);
  double gnorm = 0;
  for (int i = 0; i < model.d; ++i) gnorm += std::norm(grad[static_cast<size_t>(i)]);
  CHECK(std::sqrt(gnorm) < 1e-6);

  const auto fd = diffusion_fd(fn, model.n, model.d);
  const auto exact = chain.curvature();
  double worst = 0, scale = 0;
  for (int i = 0; i < model.d; ++i)
    for (int j = 0; j < model.d; ++j) {
      worst = std::max(worst, std::abs(fd[static_cast<size_t>(i)][static_cast<size_t>(j)] -
                                       exact[static_cast<size_t>(i)][static_cast<size_t>(j)]));
      scale = std::max(scale, std::abs(exact[static_cast<size_t>(i)][static_cast<size_t>(j)]));
    }
  REQUIRE(scale > 0);
  CHECK(worst / scale < 1e-3);
  CHECK(exact[0][0] > 0);
}

TEST_CASE("torus norm scan separates origin and bulk") {
  RenormModel m = golden_model();
  const LimitChain chain = rat_limit_build(m, period_extend(m));
  const LimitCharModel model = chain.char_model();
  const AdaptednessScan scan = adaptedness_scan(model.fn(), model.n, model.d, 128);
  CHECK(std::abs(scan.norm_at_zero - 1.0) < 1e-12);
  CHECK(scan.eps_hat > 0);
  CHECK(scan.c_hat > 0);
}

TEST_CASE("positivity index is minimal") {
  RenormModel m = pell_model();
  const SpectralStructure s = spectral_structure(m);
  auto positive = [](const IntMatrix& A) {
    for (int i = 0; i < A.rows; ++i)
      for (int j = 0; j < A.cols; ++j)
        if (A.at(i, j) <= 0) return false;
    return true;
  };
  IntMatrix P = IntMatrix::identity(s.period.rows);
  for (int t = 1; t < s.positivity; ++t) {
    P = P * s.period;
    CHECK_FALSE(positive(P));
  }
  P = P * s.period;
  CHECK(positive(P));
}
