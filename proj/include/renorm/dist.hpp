#pragma once

/**
 * Exact temporal distributions of Birkhoff sums.
 *
 * For a type-i level-k block over cell offset eps, V_k(i,eps) is the
 * multiset of partial sums of the jumps along the block: the law of
 * phi_n at a uniformly random time n in 1..len_k(i), kept exact as
 * (lattice point -> multiplicity) with big-integer counts.  It satisfies
 * the same child decomposition as the drift tables: each child
 * contributes its own distribution shifted by the drift offset at which
 * the child starts,
 *
 *   V_{k+1}(i,eps) = sum_{c=1}^{n-i} shift(V_k(i_c, eps_c), cum_k(eps, c-1)).
 *
 * First and second moments satisfy the induced linear recursion, so they
 * are computable exactly at levels far beyond any materializable support;
 * `moment_table` runs that recursion on big integers.
 */

#include <array>
#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "blocks.hpp"
#include "numeric.hpp"

namespace renorm {

struct SparseDist {
  int dim = 0;
  // Sorted by packed key; BigInt multiplicities (totals reach block lengths
  // far beyond 2^63).
  std::vector<std::pair<std::int64_t, BigInt>> w;

  SparseDist() = default;
  explicit SparseDist(int d) : dim(d) {}

  static SparseDist point(const Vec& v) {
    SparseDist r(v.dim);
    r.w.emplace_back(v.pack(), BigInt(1));
    return r;
  }

  size_t support() const { return w.size(); }
  BigInt total() const {
    BigInt t = 0;
    for (const auto& [k, c] : w) t += c;
    return t;
  }
  Vec value_at(size_t idx) const { return Vec::unpack(w[idx].first, dim); }

  /// this += shift(o, s).  Linear-time sorted merge; repacking each shifted
  /// point keeps the range check exact.
  void merge_shifted(const SparseDist& o, const Vec& s) {
    std::vector<std::pair<std::int64_t, BigInt>> merged;
    merged.reserve(w.size() + o.w.size());
    size_t a = 0, b = 0;
    while (a < w.size() || b < o.w.size()) {
      std::int64_t kb = 0;
      if (b < o.w.size()) kb = (Vec::unpack(o.w[b].first, dim) + s).pack();
      if (b == o.w.size() || (a < w.size() && w[a].first < kb)) {
        merged.push_back(w[a++]);
      } else if (a == w.size() || kb < w[a].first) {
        merged.emplace_back(kb, o.w[b++].second);
      } else {
        merged.emplace_back(kb, w[a++].second + o.w[b++].second);
      }
    }
    w = std::move(merged);
  }

  /// Exact first moment (sum of value * multiplicity).
  std::array<BigInt, kMaxDim> sum1() const {
    std::array<BigInt, kMaxDim> s{};
    for (const auto& [k, c] : w) {
      Vec v = Vec::unpack(k, dim);
      for (int i = 0; i < dim; ++i) s[static_cast<size_t>(i)] += BigInt(v[i]) * c;
    }
    return s;
  }

  /// Exact second moment matrix (sum of v v^T * multiplicity).
  std::array<std::array<BigInt, kMaxDim>, kMaxDim> sum2() const {
    std::array<std::array<BigInt, kMaxDim>, kMaxDim> s{};
    for (const auto& [k, c] : w) {
      Vec v = Vec::unpack(k, dim);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
          s[static_cast<size_t>(i)][static_cast<size_t>(j)] += BigInt(v[i]) * v[j] * c;
    }
    return s;
  }

  /// Characteristic function E exp(2 pi i <t, V>).
  std::complex<double> char_at(const std::array<double, kMaxDim>& t) const {
    std::complex<double> z{0.0, 0.0};
    double tot = 0.0;
    for (const auto& [k, c] : w) {
      Vec v = Vec::unpack(k, dim);
      double phase = 0.0;
      for (int i = 0; i < dim; ++i) phase += t[static_cast<size_t>(i)] * double(v[i]);
      double m = c.convert_to<double>();
      z += m * std::polar(1.0, 2.0 * kPi * phase);
      tot += m;
    }
    return z / tot;
  }
};

// ---------------------------------------------------------------------------
// Exact moments by level recursion.

struct Moments {
  int dim = 0;
  BigInt n;                                              // number of times
  std::array<BigInt, kMaxDim> s1{};                      // sum of values
  std::array<std::array<BigInt, kMaxDim>, kMaxDim> s2{}; // sum of v v^T

  explicit Moments(int d = 0) : dim(d), n(0) {}

  BigRat mean(int i) const { return BigRat(s1[static_cast<size_t>(i)], n); }
  /// Covariance entry: s2/n - mean mean^T.
  BigRat cov(int i, int j) const {
    BigInt num = s2[static_cast<size_t>(i)][static_cast<size_t>(j)] * n -
                 s1[static_cast<size_t>(i)] * s1[static_cast<size_t>(j)];
    return BigRat(num, n * n);
  }

  /// Absorb a child's moments, shifted by s: values v -> v + s over n_c times.
  void absorb(const Moments& c, const Vec& s) {
    n += c.n;
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j)
        s2[static_cast<size_t>(i)][static_cast<size_t>(j)] +=
            c.s2[static_cast<size_t>(i)][static_cast<size_t>(j)] +
            BigInt(s[i]) * c.s1[static_cast<size_t>(j)] +
            c.s1[static_cast<size_t>(i)] * BigInt(s[j]) + c.n * s[i] * s[j];
      s1[static_cast<size_t>(i)] += c.s1[static_cast<size_t>(i)] + c.n * s[i];
    }
  }
};

namespace detail {

/// Apply the level-k child decomposition: combine(i, eps, c, eps_c, i_c, shift)
/// for each child c = 1..n-i of a type-i block at offset eps.
template <class F>
void for_each_child(RenormModel& m, int k, int i, int e, F&& combine) {
  std::int64_t n = m.digit(k + 1);
  for (std::int64_t c = 1; c <= n - i; ++c) {
    bool last = c == n - i;
    int ec = static_cast<int>((e + (c - 1) * m.eps(k, 0)) % m.Q());
    combine(c, last ? 1 : 0, ec, m.cum(k, e, c - 1));
  }
}

}  // namespace detail

/// Exact moment tables [i*Q+eps] for level k.
inline std::vector<Moments> moment_table(RenormModel& m, int k) {
  int Q = m.Q(), d = m.dim();
  std::vector<Moments> cur(static_cast<size_t>(2 * Q), Moments(d));
  for (int i = 0; i < 2; ++i)
    for (int e = 0; e < Q; ++e) {
      Moments& mo = cur[static_cast<size_t>(i * Q + e)];
      mo.n = 1;
      const Vec& v = m.cocycle()(e);
      for (int a = 0; a < d; ++a) {
        mo.s1[static_cast<size_t>(a)] = v[a];
        for (int b = 0; b < d; ++b)
          mo.s2[static_cast<size_t>(a)][static_cast<size_t>(b)] = BigInt(v[a]) * v[b];
      }
    }
  for (int lev = 0; lev < k; ++lev) {
    std::vector<Moments> nxt(static_cast<size_t>(2 * Q), Moments(d));
    for (int i = 0; i < 2; ++i)
      for (int e = 0; e < Q; ++e) {
        Moments& mo = nxt[static_cast<size_t>(i * Q + e)];
        detail::for_each_child(m, lev, i, e,
                               [&](std::int64_t, int ic, int ec, const Vec& s) {
                                 mo.absorb(cur[static_cast<size_t>(ic * Q + ec)], s);
                               });
      }
    cur = std::move(nxt);
  }
  return cur;
}

/// Exact distribution tables [i*Q+eps] for level k.  The cap bounds the
/// support size of any intermediate table (memory), not the block length
/// (counts are big integers).
inline std::vector<SparseDist> dist_table(RenormModel& m, int k,
                                          std::int64_t support_cap = 0) {
  if (support_cap == 0) support_cap = m.caps().explicit_block;
  int Q = m.Q();
  std::vector<SparseDist> cur(static_cast<size_t>(2 * Q));
  for (int i = 0; i < 2; ++i)
    for (int e = 0; e < Q; ++e)
      cur[static_cast<size_t>(i * Q + e)] = SparseDist::point(m.cocycle()(e));
  for (int lev = 0; lev < k; ++lev) {
    std::vector<SparseDist> nxt(static_cast<size_t>(2 * Q));
    for (int i = 0; i < 2; ++i)
      for (int e = 0; e < Q; ++e) {
        SparseDist& D = nxt[static_cast<size_t>(i * Q + e)];
        D = SparseDist(m.dim());
        detail::for_each_child(m, lev, i, e,
                               [&](std::int64_t, int ic, int ec, const Vec& s) {
                                 D.merge_shifted(cur[static_cast<size_t>(ic * Q + ec)], s);
                               });
        if (static_cast<std::int64_t>(D.support()) > support_cap)
          throw cap_exceeded("distribution support exceeds explicit-block cap");
      }
    cur = std::move(nxt);
  }
  return cur;
}

/// The temporal distribution of the orbit of 0 at scale len_k(0):
/// the law of phi_n(0) for n uniform in 1..len_k(0).
inline SparseDist temporal_distribution(RenormModel& m, int k) {
  return dist_table(m, k)[0 * m.Q() + 0];
}

/// Exact moments of the same law, valid at any level.
inline Moments temporal_moments(RenormModel& m, int k) {
  return moment_table(m, k)[0 * m.Q() + 0];
}

}  // namespace renorm
