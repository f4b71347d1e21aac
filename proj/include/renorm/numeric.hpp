#pragma once

// Shared numeric foundations: arbitrary-precision integers/rationals,
// small integer lattice vectors (dimension <= 3), and the error types the
// rest of the library throws.  Everything downstream assumes the exact
// types defined here; no floating point is used for anything that feeds a
// comparison or an exact invariant.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace renorm {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------------------
// Errors.  The CLI maps these onto process exit codes, so keep the taxonomy
// small: bad user input, a configured cap was hit, or an internal invariant
// broke.  Check *failures* (a verification that ran and came out false) are
// reported as data, not exceptions.
// ---------------------------------------------------------------------------

struct config_error : std::runtime_error {
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

struct cap_exceeded : std::runtime_error {
  explicit cap_exceeded(const std::string& what) : std::runtime_error(what) {}
};

struct internal_error : std::logic_error {
  explicit internal_error(const std::string& what) : std::logic_error(what) {}
};

// ---------------------------------------------------------------------------
// Integer helpers.
// ---------------------------------------------------------------------------

// Floor division for possibly-negative numerators (b > 0 required).
inline BigInt floor_div(const BigInt& a, const BigInt& b) {
  if (b <= 0) throw internal_error("floor_div: divisor must be positive");
  BigInt q = a / b;
  if (q * b > a) --q;
  return q;
}

inline BigInt mod_floor(const BigInt& a, const BigInt& b) {
  return a - floor_div(a, b) * b;
}

// Exact integer square root: the unique t >= 0 with t*t <= n < (t+1)*(t+1).
inline BigInt isqrt_floor(const BigInt& n) {
  if (n < 0) throw internal_error("isqrt_floor: negative argument");
  return boost::multiprecision::sqrt(n);
}

inline bool is_perfect_square(const BigInt& n, BigInt* root = nullptr) {
  if (n < 0) return false;
  BigInt r = isqrt_floor(n);
  if (root) *root = r;
  return r * r == n;
}

// Split n > 0 as s^2 * m with m squarefree.  Trial division up to 10^5
// plus a perfect-square test on the remainder; that is complete for every
// n < 10^15 (a remainder with all prime factors > 10^5 that is neither
// prime, a product of two primes, nor a perfect square would exceed that),
// which comfortably covers the discriminants this library produces.
inline std::pair<BigInt, BigInt> squarefree_split(BigInt n) {
  if (n <= 0) throw internal_error("squarefree_split: argument must be positive");
  BigInt s = 1, m = 1;
  for (BigInt p = 2; p * p <= n && p <= 100000; ++p) {
    if (n % p != 0) continue;
    int e = 0;
    while (n % p == 0) { n /= p; ++e; }
    for (int i = 0; i + 1 < e; i += 2) s *= p;
    if (e % 2 == 1) m *= p;
  }
  // Remainder has no prime factor <= 10^5.
  if (n > 1) {
    BigInt r;
    if (is_perfect_square(n, &r)) {
      s *= r;
    } else if (n < BigInt("1000000000000000")) {
      m *= n;  // certified squarefree by the size argument above
    } else {
      throw cap_exceeded("squarefree_split: remainder too large to certify: " + n.str());
    }
  }
  return {s, m};
}

inline BigInt big_gcd(const BigInt& a, const BigInt& b) {
  return boost::multiprecision::gcd(a, b);
}

inline BigInt big_lcm(const BigInt& a, const BigInt& b) {
  return boost::multiprecision::lcm(a, b);
}

inline BigInt big_pow(BigInt base, unsigned e) {
  BigInt r = 1;
  while (e) {
    if (e & 1) r *= base;
    base *= base;
    e >>= 1;
  }
  return r;
}

inline double rat_to_double(const BigRat& r) { return r.convert_to<double>(); }

// ---------------------------------------------------------------------------
// Small integer lattice vectors.  The cocycle takes values in Z^d with
// d <= 3; every Birkhoff sum and displacement this library touches stays
// far below 2^20 per coordinate, so values pack into a single int64 key
// for sorted/hashed containers.
// ---------------------------------------------------------------------------

inline constexpr int kMaxDim = 3;
inline constexpr std::int64_t kPackOffset = std::int64_t(1) << 20;
inline constexpr double kPi = 3.14159265358979323846;

struct Vec {
  int dim = 0;
  std::array<std::int64_t, kMaxDim> v{0, 0, 0};

  Vec() = default;
  explicit Vec(int d) : dim(d) {
    if (d < 1 || d > kMaxDim) throw internal_error("Vec: dimension out of range");
  }
  static Vec of(std::initializer_list<std::int64_t> xs) {
    Vec r(static_cast<int>(xs.size()));
    int i = 0;
    for (auto x : xs) r.v[i++] = x;
    return r;
  }

  std::int64_t& operator[](int i) { return v[i]; }
  std::int64_t operator[](int i) const { return v[i]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < dim; ++i) v[i] += o.v[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < dim; ++i) v[i] -= o.v[i];
    return *this;
  }
  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator-(Vec a) {
    for (int i = 0; i < a.dim; ++i) a.v[i] = -a.v[i];
    return a;
  }
  friend bool operator==(const Vec& a, const Vec& b) {
    return a.dim == b.dim && a.v == b.v;
  }
  friend bool operator!=(const Vec& a, const Vec& b) { return !(a == b); }

  bool is_zero() const {
    for (int i = 0; i < dim; ++i)
      if (v[i] != 0) return false;
    return true;
  }

  std::int64_t norm_inf() const {
    std::int64_t m = 0;
    for (int i = 0; i < dim; ++i) m = std::max(m, v[i] < 0 ? -v[i] : v[i]);
    return m;
  }

  // Strictly monotone packing into one key; collision-free while every
  // coordinate stays inside (-2^20, 2^20), which is asserted.
  std::int64_t pack() const {
    std::int64_t key = 0;
    for (int i = 0; i < dim; ++i) {
      std::int64_t c = v[i];
      if (c <= -kPackOffset || c >= kPackOffset)
        throw internal_error("Vec::pack: coordinate out of packable range");
      key = (key << 21) | (c + kPackOffset);
    }
    return key;
  }
  static Vec unpack(std::int64_t key, int dim) {
    Vec r(dim);
    for (int i = dim - 1; i >= 0; --i) {
      r.v[i] = (key & ((std::int64_t(1) << 21) - 1)) - kPackOffset;
      key >>= 21;
    }
    return r;
  }

  std::string str() const {
    std::string s = "(";
    for (int i = 0; i < dim; ++i) {
      if (i) s += ",";
      s += std::to_string(v[i]);
    }
    return s + ")";
  }
};

// Rational-valued vector, used once displacement laws get recentred by
// drift/offset vectors that are no longer integers.
struct VecQ {
  int dim = 0;
  std::array<BigRat, kMaxDim> v;

  VecQ() = default;
  explicit VecQ(int d) : dim(d) {}
  static VecQ from(const Vec& x) {
    VecQ r(x.dim);
    for (int i = 0; i < x.dim; ++i) r.v[i] = x.v[i];
    return r;
  }

  BigRat& operator[](int i) { return v[i]; }
  const BigRat& operator[](int i) const { return v[i]; }

  VecQ& operator+=(const VecQ& o) {
    for (int i = 0; i < dim; ++i) v[i] += o.v[i];
    return *this;
  }
  VecQ& operator-=(const VecQ& o) {
    for (int i = 0; i < dim; ++i) v[i] -= o.v[i];
    return *this;
  }
  friend VecQ operator+(VecQ a, const VecQ& b) { return a += b; }
  friend VecQ operator-(VecQ a, const VecQ& b) { return a -= b; }
  friend bool operator==(const VecQ& a, const VecQ& b) {
    if (a.dim != b.dim) return false;
    for (int i = 0; i < a.dim; ++i)
      if (a.v[i] != b.v[i]) return false;
    return true;
  }

  double norm_inf_double() const {
    double m = 0;
    for (int i = 0; i < dim; ++i) m = std::max(m, std::abs(rat_to_double(v[i])));
    return m;
  }
  std::string str() const {
    std::string s = "(";
    for (int i = 0; i < dim; ++i) {
      if (i) s += ",";
      s += v[i].str();
    }
    return s + ")";
  }
};

}  // namespace renorm
