#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "renorm/blocks.hpp"
#include "renorm/rng.hpp"

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

TEST_CASE("model rejects invalid inputs") {
  const StepCocycle phi(2, {Vec::of({1}), Vec::of({-1})});
  CHECK_THROWS_AS(RenormModel(Surd::from_rational(BigRat(1, 2)), phi), config_error);
  CHECK_THROWS_AS(RenormModel(Surd(3, 1, 2, 5), phi), config_error);  // > 1
  CHECK_THROWS_AS(StepCocycle(2, {Vec::of({1}), Vec::of({1})}), config_error);
}

TEST_CASE("level recursion at the golden rotation") {
  RenormModel m = golden_model();
  CHECK(m.P() == 1);
  CHECK(m.beta().str() == "(-2+1*sqrt(5))/1");
  CHECK(m.partition_cf().str() == "[5; 2,2,2,6]");
  // len_{k+1}(0) = (n_{k+1}-1) len_k(0) + len_k(1),
  // len_{k+1}(1) = (n_{k+1}-2) len_k(0) + len_k(1), from (1, 1).
  const long long len0[] = {1, 5, 9, 13, 17, 89, 161, 233, 305, 1597};
  const long long len1[] = {1, 4, 4, 4, 4, 72, 72, 72, 72, 1292};
  for (int k = 0; k <= 9; ++k) {
    CHECK(m.len(k, 0) == len0[k]);
    CHECK(m.len(k, 1) == len1[k]);
  }
  // Lengths satisfy the recursion for all computed digits.
  for (int k = 0; k < 30; ++k) {
    const std::int64_t n = m.digit(k + 1);
    CHECK(m.len(k + 1, 0) == (n - 1) * m.len(k, 0) + m.len(k, 1));
    CHECK(m.len(k + 1, 1) == (n - 2) * m.len(k, 0) + m.len(k, 1));
  }
}

TEST_CASE("symbolic words reproduce the rotation coding") {
  RenormModel m = golden_model();
  const auto [w1_0, w1_1] = symbol_blocks(m, 1);
  std::string s0(w1_0.begin(), w1_0.end());
  for (auto& c : s0) c += '0';
  CHECK(s0 == "00001");

  const auto [w0, w1] = symbol_blocks(m, 6);
  const auto psi = psi_sequence(m.beta(), static_cast<std::int64_t>(w0.size()));
  CHECK(psi == w0);

  RenormModel mb = pell_model();
  const auto [b0, b1] = symbol_blocks(mb, 8);
  const auto psib = psi_sequence(mb.beta(), static_cast<std::int64_t>(b0.size()));
  CHECK(psib == b0);
}

TEST_CASE("parity identity links cells to the coding") {
  for (auto& m : {golden_model(), pell_model()}) {
    RenormModel mm = m;
    const int Q = mm.Q(), N = 3000;
    const std::int64_t P = mm.P().convert_to<std::int64_t>();
    const auto kap = kappa_sequence(mm.alpha(), Q, N + 1);
    const auto psi = psi_sequence(mm.beta(), N);
    std::int64_t sum = 0;
    for (int n = 1; n <= N; ++n) {
      sum += psi[static_cast<size_t>(n - 1)];
      REQUIRE(kap[static_cast<size_t>(n)] == static_cast<int>((n * P + sum) % Q));
    }
  }
}

TEST_CASE("streamed orbit equals the direct rotation sums") {
  for (auto& m : {golden_model(), pell_model()}) {
    RenormModel mm = m;
    const int N = 4000;
    const auto direct = birkhoff_direct(mm.alpha(), mm.cocycle(), Surd::from_int(0), N);
    OrbitStream os(mm, N);
    for (int n = 1; n <= N; ++n, os.next())
      REQUIRE(os.value() == direct[static_cast<size_t>(n - 1)]);
  }
}

TEST_CASE("random access matches sequential values") {
  RenormModel m = golden_model();
  const int N = 500;
  const auto direct = birkhoff_direct(m.alpha(), m.cocycle(), Surd::from_int(0), N);
  for (int n = 1; n <= N; ++n)
    REQUIRE(birkhoff_at(m, n) == direct[static_cast<size_t>(n - 1)]);
}

TEST_CASE("random access matches the exact rotation at far indices") {
  // At indices far beyond enumerable range, the increment of the descent
  // value must equal the step value of the exact orbit point {n alpha}.
  for (auto& m : {golden_model(), pell_model()}) {
    RenormModel mm = m;
    CounterRng rng(7, 99);
    const BigInt bound = mm.len(25, 0) - 1;
    for (int t = 0; t < 64; ++t) {
      const BigInt n = 1 + rng.next_below(bound);
      const Vec inc = birkhoff_at(mm, n + 1) - birkhoff_at(mm, n);
      const Surd x = (mm.alpha() * Surd::from_int(n)).frac();
      const int cell =
          static_cast<int>((x * Surd::from_int(mm.Q())).floor().convert_to<int>());
      REQUIRE(inc == mm.cocycle()(cell));
    }
  }
}

TEST_CASE("level covering finds the right scale") {
  RenormModel m = golden_model();
  for (int k = 1; k <= 12; ++k) {
    const BigInt n = m.len(k, 0);
    const int cov = m.level_covering(n);
    CHECK(m.len(cov, 0) >= n);
    if (cov > 0) CHECK(m.len(cov - 1, 0) < n);
  }
}

TEST_CASE("walker seek agrees with sequential traversal") {
  RenormModel m = golden_model();
  BlockWalker seq(m, 6);
  const std::int64_t total = m.len(6, 0).convert_to<std::int64_t>();
  for (std::int64_t pos = 1; pos <= total; ++pos) {
    BlockWalker rnd(m, 6);
    rnd.seek(pos);
    REQUIRE(rnd.offset() == seq.offset());
    REQUIRE(rnd.cell_eps() == seq.cell_eps());
    seq.next();
  }
}

TEST_CASE("rotation orbit kappa agrees with exact field arithmetic") {
  const Surd alpha(-1, 1, 1, 2);
  const int Q = 3;
  RotationOrbit orbit(Surd::from_int(0), alpha, 500);
  for (int n = 0; n < 500; ++n) {
    const Surd x = (alpha * Surd::from_int(n)).frac();
    const int cell = static_cast<int>((x * Surd::from_int(Q)).floor().convert_to<int>());
    REQUIRE(orbit.kappa(Q) == cell);
    orbit.advance();
  }
}
