#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "renorm/dist.hpp"

using namespace renorm;

namespace {
RenormModel golden_model() {
  return RenormModel(Surd(-1, 1, 2, 5), StepCocycle(2, {Vec::of({1}), Vec::of({-1})}));
}
RenormModel pell_model() {
  return RenormModel(Surd(-1, 1, 1, 2),
                     StepCocycle(3, {Vec::of({1, 0}), Vec::of({0, 1}), Vec::of({-1, -1})}));
}

/// Histogram of the streamed Birkhoff sums at n = 1..N, keyed by packed value.
std::map<std::int64_t, BigInt> streamed_histogram(RenormModel& m, const BigInt& N) {
  std::map<std::int64_t, BigInt> h;
  OrbitStream os(m, N);
  for (BigInt n = 1; n <= N; ++n, os.next()) h[os.value().pack()] += 1;
  return h;
}
}  // namespace

TEST_CASE("level-one law of the golden instance") {
  RenormModel m = golden_model();
  const SparseDist V = temporal_distribution(m, 1);
  REQUIRE(V.support() == 2);
  CHECK(V.total() == 5);
  std::map<std::int64_t, BigInt> atoms(V.w.begin(), V.w.end());
  CHECK(atoms.at(Vec::of({0}).pack()) == 2);
  CHECK(atoms.at(Vec::of({1}).pack()) == 3);

  const Moments mo = temporal_moments(m, 1);
  CHECK(mo.mean(0) == BigRat(3, 5));
  CHECK(mo.cov(0, 0) == BigRat(6, 25));

  // E (-1)^V = (2 - 3)/5.
  const auto z = V.char_at({0.5, 0.0, 0.0});
  CHECK(std::abs(z.real() - (-0.2)) < 1e-12);
  CHECK(std::abs(z.imag()) < 1e-12);
}

TEST_CASE("distribution recursion equals the streamed histogram") {
  for (auto& mdl : {golden_model(), pell_model()}) {
    RenormModel m = mdl;
    int k = 0;
    while (m.len(k + 1, 0) <= 2000) ++k;
    const SparseDist V = temporal_distribution(m, k);
    const auto hist = streamed_histogram(m, m.len(k, 0));
    REQUIRE(V.support() == hist.size());
    for (const auto& [key, count] : V.w) REQUIRE(hist.at(key) == count);
    CHECK(V.total() == m.len(k, 0));
  }
}

TEST_CASE("state table totals equal block lengths") {
  RenormModel m = pell_model();
  const int Q = m.Q(), k = 6;
  const auto table = dist_table(m, k);
  REQUIRE(table.size() == static_cast<size_t>(2 * Q));
  for (int i = 0; i < 2; ++i)
    for (int e = 0; e < Q; ++e)
      CHECK(table[static_cast<size_t>(i * Q + e)].total() == m.len(k, i));
  // The headline law is the (i=0, eps=0) entry.
  const SparseDist V = temporal_distribution(m, k);
  CHECK(table[0].w == V.w);
}

TEST_CASE("moment recursion matches the explicit law") {
  for (auto& mdl : {golden_model(), pell_model()}) {
    RenormModel m = mdl;
    const int Q = m.Q(), d = m.dim(), k = 7;
    const auto table = dist_table(m, k);
    const auto mos = moment_table(m, k);
    for (size_t s = 0; s < table.size(); ++s) {
      const auto s1 = table[s].sum1();
      const auto s2 = table[s].sum2();
      REQUIRE(mos[s].n == table[s].total());
      for (int i = 0; i < d; ++i) {
        REQUIRE(mos[s].s1[static_cast<size_t>(i)] == s1[static_cast<size_t>(i)]);
        for (int j = 0; j < d; ++j)
          REQUIRE(mos[s].s2[static_cast<size_t>(i)][static_cast<size_t>(j)] ==
                  s2[static_cast<size_t>(i)][static_cast<size_t>(j)]);
      }
    }
    CHECK(Q >= 2);
  }
}

TEST_CASE("sorted merge accumulates shifted atoms") {
  SparseDist a(1);
  a.w = {{Vec::of({0}).pack(), BigInt(2)}, {Vec::of({3}).pack(), BigInt(1)}};
  SparseDist b(1);
  b.w = {{Vec::of({-1}).pack(), BigInt(4)}, {Vec::of({2}).pack(), BigInt(5)}};
  a.merge_shifted(b, Vec::of({1}));  // b shifts to {0 -> 4, 3 -> 5}
  std::map<std::int64_t, BigInt> got(a.w.begin(), a.w.end());
  REQUIRE(got.size() == 2);
  CHECK(got.at(Vec::of({0}).pack()) == 6);
  CHECK(got.at(Vec::of({3}).pack()) == 6);
  CHECK(a.total() == 12);
}

TEST_CASE("moments absorb shifted children exactly") {
  // Absorbing (values v over n times, shifted by s) must reproduce the
  // brute-force sums over the shifted multiset.
  Moments child(2);
  child.n = 3;
  child.s1 = {BigInt(4), BigInt(-2)};
  child.s2[0][0] = 6;
  child.s2[0][1] = child.s2[1][0] = -2;
  child.s2[1][1] = 2;  // values (2,0), (1,-1), (1,-1)
  Moments acc(2);
  acc.absorb(child, Vec::of({1, 2}));
  // shifted values: (3,2), (2,1), (2,1)
  CHECK(acc.n == 3);
  CHECK(acc.s1[0] == 7);
  CHECK(acc.s1[1] == 4);
  CHECK(acc.s2[0][0] == 17);  // 9 + 4 + 4
  CHECK(acc.s2[0][1] == 10);  // 6 + 2 + 2
  CHECK(acc.s2[1][0] == 10);
  CHECK(acc.s2[1][1] == 6);  // 4 + 1 + 1
}
