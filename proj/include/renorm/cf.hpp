#pragma once

/**
 * Continued-fraction expansions of quadratic surds, in two flavours:
 *
 *  - the regular expansion, digits a_k = floor(1/y) under the Gauss map
 *    y -> frac(1/y), used for the convergents p_k/q_k of the base rotation;
 *
 *  - the "ceiling" (backwards) expansion, digits n_k = ceil(1/y) >= 2 under
 *    y -> n_k - 1/y, which drives the renormalization tower.  For an
 *    irrational quadratic argument the digit stream is eventually periodic
 *    and the period is never the all-2 word (that word encodes a rational).
 *
 * Both expansions iterate the exact Surd state and detect the first
 * recurring state, so preperiod/period are the least state cycle.  Also
 * here: the denominator-separation minimum ("disc") of a rotation against
 * the level-Q grid, computed exactly with an int128 fast path.
 */

#include <cmath>
#include <cstdint>
#include <map>
#include <type_traits>
#include <string>
#include <vector>

#include "surd.hpp"

namespace renorm {

enum class CFKind { Regular, Ceiling };

struct CFExpansion {
  CFKind kind = CFKind::Regular;
  std::vector<std::int64_t> preperiod;
  std::vector<std::int64_t> period;

  /// k-th digit, 1-based; the period repeats forever.
  std::int64_t digit(std::int64_t k) const {
    if (k < 1) throw internal_error("CFExpansion::digit: k must be >= 1");
    std::int64_t K = static_cast<std::int64_t>(preperiod.size());
    if (k <= K) return preperiod[static_cast<size_t>(k - 1)];
    if (period.empty()) throw internal_error("CFExpansion::digit: empty period");
    return period[static_cast<size_t>((k - K - 1) % static_cast<std::int64_t>(period.size()))];
  }

  /// Text form "[n1,...,nK; m1,...,mL]" (preperiod may be empty: "[; m1,...]").
  std::string str() const {
    std::string s = "[";
    for (size_t i = 0; i < preperiod.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(preperiod[i]);
    }
    s += ";";
    for (size_t i = 0; i < period.size(); ++i) {
      s += (i ? "," : " ");
      s += std::to_string(period[i]);
    }
    return s + "]";
  }

  static CFExpansion parse(const std::string& text, CFKind kind) {
    CFExpansion cf;
    cf.kind = kind;
    size_t i = 0;
    auto skip = [&] { while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i; };
    auto read_list = [&](char stop) {
      std::vector<std::int64_t> out;
      for (;;) {
        skip();
        if (i < text.size() && text[i] == stop) break;
        size_t start = i;
        if (i < text.size() && (text[i] == '-' || text[i] == '+')) ++i;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
        if (i == start) throw config_error("cf: expected digit list: " + text);
        out.push_back(std::stoll(text.substr(start, i - start)));
        skip();
        if (i < text.size() && text[i] == ',') { ++i; continue; }
        break;
      }
      return out;
    };
    skip();
    if (i >= text.size() || text[i] != '[') throw config_error("cf: expected '[': " + text);
    ++i;
    cf.preperiod = read_list(';');
    skip();
    if (i >= text.size() || text[i] != ';') throw config_error("cf: expected ';': " + text);
    ++i;
    cf.period = read_list(']');
    skip();
    if (i >= text.size() || text[i] != ']') throw config_error("cf: expected ']': " + text);
    return cf;
  }
};

namespace detail {

struct CFStep {
  std::int64_t digit;
  Surd next;
};

template <typename StepFn>
CFExpansion expand_until_cycle(Surd y, CFKind kind, StepFn step, int cap) {
  CFExpansion cf;
  cf.kind = kind;
  std::vector<std::int64_t> digits;
  std::map<Surd, int, Surd::KeyLess> seen;  // state -> index of digit it produces
  for (int k = 0; k < cap; ++k) {
    auto it = seen.find(y);
    if (it != seen.end()) {
      int p = it->second;
      cf.preperiod.assign(digits.begin(), digits.begin() + p);
      cf.period.assign(digits.begin() + p, digits.end());
      return cf;
    }
    seen.emplace(y, k);
    CFStep s = step(y);
    digits.push_back(s.digit);
    y = s.next;
  }
  throw cap_exceeded("continued fraction: no cycle within " + std::to_string(cap) + " digits");
}

}  // namespace detail

/// Regular continued fraction of x in (0,1), x quadratic irrational.
inline CFExpansion regular_cf(const Surd& x, int cap = 10000) {
  if (x.is_rational()) throw config_error("regular_cf: argument must be irrational");
  if (x.sign() <= 0 || x >= Surd::from_int(1))
    throw config_error("regular_cf: argument must lie in (0,1)");
  return detail::expand_until_cycle(
      x, CFKind::Regular,
      [](const Surd& y) {
        Surd inv = Surd::from_int(1) / y;
        BigInt a = inv.floor();
        return detail::CFStep{a.convert_to<std::int64_t>(), inv.frac()};
      },
      cap);
}

/// Ceiling (backwards) continued fraction of x in (0,1), digits >= 2.
inline CFExpansion ceiling_cf(const Surd& x, int cap = 10000) {
  if (x.is_rational()) throw config_error("ceiling_cf: argument must be irrational");
  if (x.sign() <= 0 || x >= Surd::from_int(1))
    throw config_error("ceiling_cf: argument must lie in (0,1)");
  CFExpansion cf = detail::expand_until_cycle(
      x, CFKind::Ceiling,
      [](const Surd& y) {
        Surd inv = Surd::from_int(1) / y;
        BigInt n = inv.ceil();
        return detail::CFStep{n.convert_to<std::int64_t>(), Surd::from_int(n) - inv};
      },
      cap);
  for (auto d : cf.preperiod)
    if (d < 2) throw internal_error("ceiling_cf: digit below 2");
  bool all_two = true;
  for (auto d : cf.period) {
    if (d < 2) throw internal_error("ceiling_cf: digit below 2");
    if (d != 2) all_two = false;
  }
  if (cf.period.empty() || all_two)
    throw internal_error("ceiling_cf: degenerate all-2 period (rational input?)");
  return cf;
}

/// Convergents p_n/q_n of a regular expansion, n = 0..m:
/// q_0 = 1, q_1 = a_1, q_{n+1} = a_{n+1} q_n + q_{n-1} (same recursion for p,
/// seeded p_0 = 0, p_1 = 1).
inline std::vector<std::pair<BigInt, BigInt>> convergents(const CFExpansion& cf, int m) {
  if (cf.kind != CFKind::Regular)
    throw internal_error("convergents: regular expansion required");
  std::vector<std::pair<BigInt, BigInt>> pq;
  BigInt p0 = 0, q0 = 1;  // n = 0
  pq.emplace_back(p0, q0);
  if (m == 0) return pq;
  BigInt p1 = 1, q1 = cf.digit(1);
  pq.emplace_back(p1, q1);
  for (int n = 2; n <= m; ++n) {
    BigInt a = cf.digit(n);
    BigInt p2 = a * p1 + p0, q2 = a * q1 + q0;
    pq.emplace_back(p2, q2);
    p0 = p1; p1 = p2;
    q0 = q1; q1 = q2;
  }
  return pq;
}

// ---------------------------------------------------------------------------
// Grid separation minimum:
//   disc(q) = min { || l/Q - j*alpha || : |l| <= Q-1, |j| <= q-1, (l,j) != 0 }
// where ||.|| is distance to the nearest integer.  Exact; the argmin is
// reported.  Everything is evaluated over the common denominator C = Q*c so
// a candidate is just a pair (A, B) representing (A + B*sqrt(D))/C, and the
// whole scan runs in int128 when certified bounds allow (BigInt otherwise).
// ---------------------------------------------------------------------------

struct DiscResult {
  Surd value;        // the exact minimum distance
  std::int64_t l = 0, j = 0;
};

namespace detail {

inline __int128 isqrt_i128(__int128 x) {
  if (x < 0) throw internal_error("isqrt_i128: negative");
  if (x == 0) return 0;
  __int128 r = static_cast<__int128>(sqrtl(static_cast<long double>(x)));
  while (r > 0 && r * r > x) --r;
  while ((r + 1) * (r + 1) <= x) ++r;
  return r;
}

// floor(B * sqrt(D)); for B != 0 the radicand is never a perfect square.
template <typename Int>
Int floor_b_sqrt(const Int& B, const Int& D, Int (*isqrt)(Int)) {
  if (B == 0) return 0;
  Int s = isqrt(B * B * D);
  return B > 0 ? s : Int(-s - 1);
}

template <typename Int>
int sign_a_plus_b_sqrt(const Int& A, const Int& B, const Int& D) {
  int sa = (A == 0) ? 0 : (A > 0 ? 1 : -1);
  int sb = (B == 0) ? 0 : (B > 0 ? 1 : -1);
  if (sb == 0) return sa;
  if (sa == 0) return sb;
  if (sa == sb) return sa;
  Int lhs = A * A, rhs = B * B * D;
  if (lhs == rhs) return 0;
  return lhs > rhs ? sa : sb;
}

template <typename Int>
DiscResult disc_scan(const Int& aa, const Int& ba, const Int& ca, const Int& DD,
                     int Q, std::int64_t q, Int (*isqrt)(Int)) {
  const Int C = Int(Q) * ca;
  bool have = false;
  Int bestA = 0, bestB = 0;
  std::int64_t bl = 0, bj = 0;
  std::vector<int> lorder;  // nonnegative first, so ties prefer small |l| with l >= 0
  for (int l = 0; l <= Q - 1; ++l) lorder.push_back(l);
  for (int l = -1; l >= -(Q - 1); --l) lorder.push_back(l);
  for (std::int64_t j = 0; j < q; ++j) {
    for (int l : lorder) {
      if (j == 0 && l <= 0) continue;
      // x = l/Q - j*alpha = (A + B sqrt(D)) / C
      Int A = Int(l) * ca - Int(j) * Int(Q) * aa;
      Int B = -Int(j) * Int(Q) * ba;
      Int t = floor_b_sqrt<Int>(B, DD, isqrt);
      Int m = A + t;
      // floor((A + B sqrt D)/C) = floor((A + t)/C) since C >= 1
      Int fl = (m >= 0) ? Int(m / C) : Int(-(((-m) + C - 1) / C));
      Int A1 = A - fl * C;  // numerator of frac(x), in [0, C) as a value
      // distance = min(frac, 1 - frac)
      Int An, Bn;
      if (sign_a_plus_b_sqrt<Int>(2 * A1 - C, 2 * B, DD) <= 0) {
        An = A1; Bn = B;
      } else {
        An = C - A1; Bn = -B;
      }
      if (!have || sign_a_plus_b_sqrt<Int>(An - bestA, Bn - bestB, DD) < 0) {
        have = true;
        bestA = An; bestB = Bn;
        bl = l; bj = j;
      }
    }
  }
  if (!have) throw config_error("disc: empty candidate set (Q = 1 with q = 1)");
  DiscResult r;
  if constexpr (std::is_same_v<Int, BigInt>) {
    r.value = Surd(bestA, bestB, C, DD);
  } else {
    r.value = Surd(BigInt(static_cast<std::int64_t>(bestA)),
                   BigInt(static_cast<std::int64_t>(bestB)),
                   BigInt(static_cast<std::int64_t>(C)),
                   BigInt(static_cast<std::int64_t>(DD)));
  }
  r.l = bl;
  r.j = bj;
  return r;
}

inline BigInt isqrt_big(BigInt x) { return isqrt_floor(x); }

}  // namespace detail

inline DiscResult disc(const Surd& alpha, int Q, const BigInt& q_big) {
  if (alpha.is_rational()) throw config_error("disc: alpha must be irrational");
  if (Q < 1) throw config_error("disc: Q must be >= 1");
  if (q_big < 1) throw config_error("disc: q must be >= 1");
  if (q_big > BigInt(100000000))
    throw cap_exceeded("disc: q beyond the 1e8 scan cap");
  std::int64_t q = q_big.convert_to<std::int64_t>();
  // Certify the int128 fast path: every intermediate is bounded by
  // (|A| + C + |t|)^2 * D with |A| <= Q*c + q*Q*|a|, |B| <= q*Q*|b|.
  BigInt bndA = BigInt(Q) * alpha.c() + BigInt(q) * Q * boost::multiprecision::abs(alpha.a());
  BigInt bndB = BigInt(q) * Q * boost::multiprecision::abs(alpha.b());
  BigInt bndLin = 4 * (bndA + BigInt(Q) * alpha.c()) + 4 * bndB + 4;
  if (bndLin * bndLin * alpha.D() < (BigInt(1) << 120)) {
    return detail::disc_scan<__int128>(
        static_cast<__int128>(alpha.a().convert_to<std::int64_t>()),
        static_cast<__int128>(alpha.b().convert_to<std::int64_t>()),
        static_cast<__int128>(alpha.c().convert_to<std::int64_t>()),
        static_cast<__int128>(alpha.D().convert_to<std::int64_t>()), Q, q,
        detail::isqrt_i128);
  }
  return detail::disc_scan<BigInt>(alpha.a(), alpha.b(), alpha.c(), alpha.D(), Q, q,
                                   detail::isqrt_big);
}

/// One row per principal denominator q_m <= q_cap (m <= m_max): the exact
/// separation minimum at q_m, its argmin, and the product q_m * disc(q_m)
/// whose positivity/size is the per-scale separation diagnostic.
struct DiscRow {
  int m = 0;
  BigInt q;
  Surd value;
  std::int64_t l = 0, j = 0;
  double product = 0.0;  // q * disc(q)
};

inline std::vector<DiscRow> disc_subsequence_check(const Surd& alpha, int Q, int m_max,
                                                   const BigInt& q_cap = BigInt(100000000)) {
  CFExpansion cf = regular_cf(alpha);
  auto pq = convergents(cf, m_max);
  std::vector<DiscRow> rows;
  for (int m = 1; m <= m_max && static_cast<size_t>(m) < pq.size(); ++m) {
    const BigInt& q = pq[static_cast<size_t>(m)].second;
    if (q > q_cap) break;
    DiscRow row;
    row.m = m;
    row.q = q;
    DiscResult d = disc(alpha, Q, q);
    row.value = d.value;
    row.l = d.l;
    row.j = d.j;
    row.product = (Surd::from_int(q) * d.value).to_double();
    rows.push_back(row);
  }
  return rows;
}

}  // namespace renorm
