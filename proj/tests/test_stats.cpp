#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "renorm/stats.hpp"

using namespace renorm;

namespace {
RenormModel golden_model() {
  return RenormModel(Surd(-1, 1, 2, 5), StepCocycle(2, {Vec::of({1}), Vec::of({-1})}));
}
RenormModel pell_model() {
  return RenormModel(Surd(-1, 1, 1, 2),
                     StepCocycle(3, {Vec::of({1, 0}), Vec::of({0, 1}), Vec::of({-1, -1})}));
}
}  // namespace

TEST_CASE("lattice certificate detects full and degenerate step lattices") {
  const auto a = lattice_check(StepCocycle(2, {Vec::of({1}), Vec::of({-1})}));
  CHECK(a.full_lattice);
  CHECK(a.rank == 1);
  REQUIRE(a.divisors.size() == 1);
  CHECK(a.divisors[0] == 1);

  const auto b = lattice_check(
      StepCocycle(3, {Vec::of({1, 0}), Vec::of({0, 1}), Vec::of({-1, -1})}));
  CHECK(b.full_lattice);
  CHECK(b.rank == 2);

  // Values in 2Z: index-two sublattice.
  const auto c = lattice_check(StepCocycle(2, {Vec::of({2}), Vec::of({-2})}));
  CHECK_FALSE(c.full_lattice);
  CHECK(c.rank == 1);
  CHECK(c.divisors[0] == 2);

  // Rank-deficient: all values on one line of Z^2.
  const auto e = lattice_check(
      StepCocycle(3, {Vec::of({1, 1}), Vec::of({1, 1}), Vec::of({-2, -2})}));
  CHECK_FALSE(e.full_lattice);
  CHECK(e.rank == 1);
}

TEST_CASE("bivariate normal cdf reproduces closed forms") {
  for (double rho : {-0.9, -0.3, 0.0, 0.5, 0.95}) {
    const double expect = 0.25 + std::asin(rho) / (2.0 * kPi);
    CHECK(binormal_cdf(0.0, 0.0, rho) == Catch::Approx(expect).margin(1e-10));
  }
  CHECK(binormal_cdf(0.7, -0.4, 0.0) ==
        Catch::Approx(normal_cdf(0.7) * normal_cdf(-0.4)).margin(1e-12));
  CHECK(binormal_cdf(1.2, 0.3, 0.6) == Catch::Approx(binormal_cdf(0.3, 1.2, 0.6)).margin(1e-12));
  // Perfect correlation: P(X <= h, X <= k) = Phi(min(h, k)).
  CHECK(binormal_cdf(0.5, 1.5, 0.999999) == Catch::Approx(normal_cdf(0.5)).margin(1e-3));
}

TEST_CASE("two-point law distances to the standard normal") {
  // Atoms at -1 and +1 with equal mass, standardized by mean 0, sd 1.
  const std::vector<std::pair<double, BigInt>> atoms{{-1.0, BigInt(1)}, {1.0, BigInt(1)}};
  const auto [ks, ks_mid] = detail::ks_discrete_vs_normal(atoms, BigInt(2), 0.0, 1.0);
  const double phi_m1 = normal_cdf(-1.0);
  CHECK(ks == Catch::Approx(0.5 - phi_m1).margin(1e-15));
  CHECK(ks_mid == Catch::Approx(0.25 - phi_m1).margin(1e-15));
}

TEST_CASE("exact visit profile at the golden rotation") {
  RenormModel m = golden_model();
  // Psi_2 = 1 exactly on [0, 1 - alpha) and [1/2, 3/2 - alpha): measure 3 - sqrt 5.
  const VisitProfile p2 = visit_profile(m, 2);
  CHECK((p2.integral - Surd(3, -1, 1, 5)).is_zero());
  CHECK(p2.sup == 1);
  CHECK(p2.at_zero == 1);  // S_1(0) = 1, S_2(0) = 0

  const VisitProfile p5 = visit_profile(m, 5);
  CHECK(p5.at_zero == 2);
  CHECK(p5.sup >= p5.at_zero);

  // Profiles are monotone in N at every anchor the struct exposes.
  BigInt last_sup = 0;
  Surd last_int;
  for (int N : {10, 20, 40, 80}) {
    const VisitProfile p = visit_profile(m, N);
    CHECK(p.sup >= last_sup);
    CHECK((p.integral - last_int).sign() >= 0);
    last_sup = p.sup;
    last_int = p.integral;
  }
}

TEST_CASE("zero-visit counts agree between stream, level law, and profile") {
  for (auto& mdl : {golden_model(), pell_model()}) {
    RenormModel m = mdl;
    for (int k = 1; k <= 7; ++k) {
      const std::int64_t N = m.len(k, 0).convert_to<std::int64_t>();
      if (N > 2000) break;
      const BigInt lvl = visit_count_level(m, k);
      CHECK(visit_count_stream(m, Surd::from_int(0), N) == lvl);
      CHECK(visit_profile(m, N).at_zero == lvl);
      // The level law's atom at the origin is the same count.
      const SparseDist V = temporal_distribution(m, k);
      BigInt atom0 = 0;
      for (const auto& [key, w] : V.w)
        if (Vec::unpack(key, m.dim()).is_zero()) atom0 = w;
      CHECK(atom0 == lvl);
    }
  }
}

TEST_CASE("sup-norm sweep at principal denominators") {
  RenormModel ma = golden_model();
  const auto qs = principal_denominators(ma.alpha(), 100);
  CHECK(qs == (std::vector<std::int64_t>{1, 2, 3, 5, 8, 13, 21, 34, 55, 89}));

  const SupSweepReport a = dk_check(ma, 2000);
  CHECK(a.variation_inf == 4);
  CHECK(a.variation_coord == (std::vector<std::int64_t>{4}));
  CHECK(a.inf_ok);
  CHECK(a.coord_ok);
  REQUIRE_FALSE(a.entries.empty());
  for (const auto& e : a.entries) {
    CHECK(e.sup_inf >= 1);  // a nonzero cocycle cannot vanish identically
    CHECK(e.sup_inf <= a.variation_inf);
  }

  RenormModel mb = pell_model();
  const SupSweepReport b = dk_check(mb, 1000);
  CHECK(b.variation_inf == 5);
  CHECK(b.variation_coord == (std::vector<std::int64_t>{4, 4}));
  CHECK(b.inf_ok);
  CHECK(b.coord_ok);
}

TEST_CASE("pair estimator counts equal-sum pairs exactly") {
  for (auto& mdl : {golden_model(), pell_model()}) {
    RenormModel m = mdl;
    const std::int64_t N = 25, M = 400;
    const auto est = visit_integral_estimate(m, N, M);
    // Brute force: pairs (j, j + n), 1 <= j <= M, 1 <= n <= N, S_{j+n} = S_j.
    const auto sums = birkhoff_direct(m.alpha(), m.cocycle(), Surd::from_int(0),
                                      static_cast<std::int64_t>(M + N));
    std::int64_t pairs = 0;
    for (std::int64_t j = 1; j <= M; ++j)
      for (std::int64_t n = 1; n <= N; ++n)
        if (sums[static_cast<size_t>(j + n - 1)] == sums[static_cast<size_t>(j - 1)]) ++pairs;
    CHECK(est.pairs == pairs);
    CHECK(est.value == Catch::Approx(static_cast<double>(pairs) / M));
  }
}

TEST_CASE("pair estimator converges to the exact visit integral") {
  RenormModel m = golden_model();
  const VisitIntegralReport rep = visit_integral(m, 100, 50000);
  REQUIRE(rep.exact.has_value());
  CHECK(rep.exact_value > 0);
  CHECK(rep.rel_error < 0.05);
}

TEST_CASE("torus characteristic integrals: quadrature against Parseval") {
  for (auto& mdl : {golden_model(), pell_model()}) {
    RenormModel m = mdl;
    const SparseDist V = temporal_distribution(m, 8);
    const BigRat exact2 = char_l2_exact(V);
    const CharIntegral q2 = char_lp_integral(V, 2);
    CHECK(q2.value == Catch::Approx(rat_to_double(exact2)).margin(1e-12));
    CHECK(q2.error < 1e-12);
    // Since |E e(.)| <= 1: int |f|^2 <= int |f| <= sqrt(int |f|^2).
    const CharIntegral q1 = char_lp_integral(V, 1);
    CHECK(q1.value + 1e-9 >= q2.value);
    CHECK(q1.value - q1.error - 1e-9 <= std::sqrt(q2.value));
  }
  CHECK_THROWS_AS(char_lp_integral(SparseDist::point(Vec::of({0})), 3), config_error);
}

TEST_CASE("gaussian distance report at a mid level") {
  RenormModel m = golden_model();
  const CltReport rep = temporal_clt_check(m, 10);
  CHECK(rep.k == 10);
  CHECK(rep.d == 1);
  REQUIRE(rep.cov.size() == 1);
  CHECK(rep.cov[0] > 0);
  REQUIRE(rep.ks_coord.size() == 1);
  REQUIRE(rep.ks_mid_coord.size() == 1);
  CHECK(rep.ks_mid <= rep.ks);
  CHECK(rep.ks_mid > 0);
  CHECK(rep.ks_mid < 0.05);
  // The plain statistic is floored by half the largest standardized atom.
  const SparseDist V = temporal_distribution(m, 10);
  BigInt biggest = 0;
  for (const auto& [key, w] : V.w) biggest = std::max(biggest, w);
  const double floor_bound = 0.5 * rat_to_double(BigRat(biggest, V.total()));
  CHECK(rep.ks >= floor_bound - 1e-15);
  CHECK(rep.ks_box > 0);

  RenormModel mb = pell_model();
  const CltReport rb = temporal_clt_check(mb, 10);
  CHECK(rb.d == 2);
  CHECK(rb.cov.size() == 4);
  CHECK(rb.ks_mid <= rb.ks);

  CHECK_THROWS_AS(temporal_clt_check(m, 4), config_error);
}

TEST_CASE("scaled ratio table over a window of levels") {
  RenormModel m = golden_model();
  const ReturnSeqReport rep = return_seq_estimate(m, 5, 8, 200000);
  REQUIRE(rep.rows.size() == 4);
  for (const LevelStats& row : rep.rows) {
    CHECK(row.ell0 == m.len(row.k, 0));
    CHECK(row.zero_visits == visit_count_level(m, row.k));
    const double expect =
        std::sqrt(static_cast<double>(row.k)) * rat_to_double(BigRat(row.zero_visits, row.ell0));
    CHECK(row.ratio0 == Catch::Approx(expect));
    CHECK(row.w2 == Catch::Approx(rat_to_double(row.w2_exact)));
    CHECK(row.w2 <= row.w1 + row.w1_err + 1e-9);
    REQUIRE(row.ratio1.has_value());  // every level here is within streaming range
    CHECK(*row.ratio1 > 0);
    CHECK(row.ks_mid <= row.ks);
  }
  CHECK(rep.r0_band >= 1.0);
  CHECK(rep.union_band >= rep.r0_band - 1e-12);
  CHECK(rep.w2_band >= 1.0);
  CHECK(rep.w_union_band >= rep.w2_band - 1e-12);
  REQUIRE_FALSE(rep.bounds.empty());
  CHECK(rep.bounds_ok);
  for (const auto& b : rep.bounds) {
    CHECK(b.lower_ok);
    CHECK(b.upper_ok);
    CHECK(b.integral_value > 0);
  }
  CHECK_THROWS_AS(return_seq_estimate(m, 4, 8), config_error);
}
