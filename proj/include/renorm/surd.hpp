#pragma once

/**
 * Exact arithmetic over real quadratic surds.
 *
 * A Surd stores x = (a + b*sqrt(D)) / c in the canonical form
 *
 *   - D >= 1 squarefree (square factors of a raw radicand are pulled into b),
 *   - c >= 1,
 *   - gcd(a, b, c) = 1,
 *   - b == 0  implies  D == 1   (rationals have a unique representation).
 *
 * Canonical forms are unique, so equality is structural and the type can key
 * ordered containers.  All field operations stay inside Q(sqrt(D)); mixing
 * two genuinely irrational surds from different fields is an error.  Floors,
 * fractional parts, signs and comparisons are computed with integer case
 * analysis only — no floating point ever decides anything here.
 */

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <tuple>

#include "numeric.hpp"

namespace renorm {

class Surd {
 public:
  Surd() : a_(0), b_(0), c_(1), d_(1) {}

  /// Construct (a + b*sqrt(D))/c and normalize.  D may carry square factors
  /// (they are extracted); c may be negative (the sign moves to the
  /// numerator); c == 0 is an error.
  Surd(BigInt a, BigInt b, BigInt c, BigInt D)
      : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(D)) {
    normalize();
  }

  static Surd from_int(BigInt n) { return Surd(std::move(n), 0, 1, 1); }
  static Surd from_rational(const BigRat& r) {
    return Surd(BigInt(boost::multiprecision::numerator(r)), 0,
                BigInt(boost::multiprecision::denominator(r)), 1);
  }
  /// sqrt(n) for n >= 0.
  static Surd sqrt_of(BigInt n) { return Surd(0, 1, 1, std::move(n)); }

  const BigInt& a() const { return a_; }
  const BigInt& b() const { return b_; }
  const BigInt& c() const { return c_; }
  const BigInt& D() const { return d_; }

  bool is_rational() const { return b_ == 0; }
  bool is_zero() const { return a_ == 0 && b_ == 0; }

  BigRat as_rational() const {
    if (!is_rational()) throw internal_error("Surd: not rational");
    return BigRat(a_, c_);
  }

  /// -1, 0, +1.
  int sign() const {
    if (b_ == 0) return sign_of(a_);
    if (a_ == 0) return sign_of(b_);
    int sa = sign_of(a_), sb = sign_of(b_);
    if (sa == sb) return sa;
    // Opposite signs: compare a^2 against b^2 D; the larger magnitude wins.
    BigInt lhs = a_ * a_, rhs = b_ * b_ * d_;
    if (lhs == rhs) return 0;  // impossible for b != 0, D squarefree > 1
    return (lhs > rhs) ? sa : sb;
  }

  friend bool operator==(const Surd& x, const Surd& y) {
    return x.a_ == y.a_ && x.b_ == y.b_ && x.c_ == y.c_ && x.d_ == y.d_;
  }
  friend bool operator!=(const Surd& x, const Surd& y) { return !(x == y); }
  friend bool operator<(const Surd& x, const Surd& y) { return (x - y).sign() < 0; }
  friend bool operator>(const Surd& x, const Surd& y) { return y < x; }
  friend bool operator<=(const Surd& x, const Surd& y) { return !(y < x); }
  friend bool operator>=(const Surd& x, const Surd& y) { return !(x < y); }

  friend Surd operator-(const Surd& x) { return Surd(-x.a_, -x.b_, x.c_, x.d_); }

  friend Surd operator+(const Surd& x, const Surd& y) {
    BigInt D = common_field(x, y);
    return Surd(x.a_ * y.c_ + y.a_ * x.c_, x.b_ * y.c_ + y.b_ * x.c_, x.c_ * y.c_, D);
  }
  friend Surd operator-(const Surd& x, const Surd& y) { return x + (-y); }

  friend Surd operator*(const Surd& x, const Surd& y) {
    BigInt D = common_field(x, y);
    return Surd(x.a_ * y.a_ + x.b_ * y.b_ * D, x.a_ * y.b_ + x.b_ * y.a_,
                x.c_ * y.c_, D);
  }

  Surd inverse() const {
    if (is_zero()) throw internal_error("Surd: division by zero");
    // 1/x = c (a - b sqrt(D)) / (a^2 - b^2 D)
    BigInt den = a_ * a_ - b_ * b_ * d_;
    return Surd(c_ * a_, -c_ * b_, den, d_);
  }
  friend Surd operator/(const Surd& x, const Surd& y) { return x * y.inverse(); }

  Surd& operator+=(const Surd& y) { return *this = *this + y; }
  Surd& operator-=(const Surd& y) { return *this = *this - y; }
  Surd& operator*=(const Surd& y) { return *this = *this * y; }
  Surd& operator/=(const Surd& y) { return *this = *this / y; }

  /// Exact floor.  Uses floor(b*sqrt(D)) by integer square root, then one
  /// integer floor-division; for b < 0 the radicand b^2 D is never a perfect
  /// square (D squarefree > 1), so floor(b*sqrt(D)) = -isqrt(b^2 D) - 1.
  BigInt floor() const {
    BigInt t;
    if (b_ == 0) {
      t = 0;
    } else {
      BigInt s = isqrt_floor(b_ * b_ * d_);
      if (b_ > 0) {
        t = s;
      } else {
        if (s * s == b_ * b_ * d_)
          throw internal_error("Surd: perfect-square radicand escaped normalize");
        t = -s - 1;
      }
    }
    return floor_div(a_ + t, c_);
  }

  BigInt ceil() const { return -((-*this).floor()); }

  Surd frac() const { return *this - Surd::from_int(floor()); }

  /// Distance to the nearest integer, as an exact surd in [0, 1/2].
  Surd dist_to_integers() const {
    Surd f = frac();
    Surd g = Surd::from_int(1) - f;
    return (f <= g) ? f : g;
  }

  /// Correctly-signed double approximation computed through an exact scaled
  /// floor, so nearly-cancelling a and b*sqrt(D) do not destroy precision.
  double to_double() const {
    static const BigInt scale = BigInt(1) << 64;
    Surd scaled(a_ * scale, b_ * scale, c_, d_);
    BigInt fl = scaled.floor();
    return fl.convert_to<double>() / 1.8446744073709551616e19;
  }

  /// Canonical text form "(a+b*sqrt(D))/c", e.g. "(-1+1*sqrt(5))/2".
  std::string str() const {
    std::string s = "(" + a_.str();
    s += (b_ >= 0 ? "+" : "-");
    BigInt babs = b_ >= 0 ? b_ : BigInt(-b_);
    s += babs.str() + "*sqrt(" + d_.str() + "))/" + c_.str();
    return s;
  }

  /// Parse the grammar  "(a+b*sqrt(D))/c"  (also accepts a bare integer or
  /// "p/q" as rationals).  Whitespace is ignored.  Throws config_error.
  static Surd parse(const std::string& text);

  /// Strict total order for use as a container key (field-aware: compares
  /// canonical tuples, which is consistent with numeric order only within a
  /// single field — container keying only needs *some* strict order).
  struct KeyLess {
    bool operator()(const Surd& x, const Surd& y) const {
      return std::tie(x.d_, x.c_, x.a_, x.b_) < std::tie(y.d_, y.c_, y.a_, y.b_);
    }
  };

 private:
  static int sign_of(const BigInt& v) { return v == 0 ? 0 : (v > 0 ? 1 : -1); }

  // The field two operands live in; rationals are compatible with anything.
  static BigInt common_field(const Surd& x, const Surd& y) {
    if (x.b_ == 0) return y.d_;
    if (y.b_ == 0) return x.d_;
    if (x.d_ != y.d_)
      throw internal_error("Surd: mixing sqrt(" + x.d_.str() + ") with sqrt(" +
                           y.d_.str() + ")");
    return x.d_;
  }

  void normalize() {
    if (c_ == 0) throw internal_error("Surd: zero denominator");
    if (d_ < 0) throw internal_error("Surd: negative radicand");
    if (d_ == 0) b_ = 0;
    if (b_ != 0) {
      auto [s, m] = squarefree_split(d_);
      b_ *= s;
      d_ = m;
      if (d_ == 1) {  // sqrt collapsed to an integer
        a_ += b_;
        b_ = 0;
      }
    }
    if (b_ == 0) d_ = 1;
    if (c_ < 0) {
      a_ = -a_;
      b_ = -b_;
      c_ = -c_;
    }
    BigInt g = big_gcd(big_gcd(abs_of(a_), abs_of(b_)), c_);
    if (g > 1) {
      a_ /= g;
      b_ /= g;
      c_ /= g;
    }
  }

  static BigInt abs_of(const BigInt& v) { return v < 0 ? BigInt(-v) : v; }

  BigInt a_, b_, c_, d_;
};

// --- parsing -----------------------------------------------------------

namespace detail {

inline void skip_ws(const std::string& s, size_t& i) {
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

inline bool parse_int(const std::string& s, size_t& i, BigInt* out) {
  skip_ws(s, i);
  size_t start = i;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  size_t digits = i;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (i == digits) {
    i = start;
    return false;
  }
  *out = BigInt(s.substr(start, i - start));
  return true;
}

inline bool expect(const std::string& s, size_t& i, const std::string& tok) {
  skip_ws(s, i);
  if (s.compare(i, tok.size(), tok) != 0) return false;
  i += tok.size();
  return true;
}

}  // namespace detail

inline Surd Surd::parse(const std::string& text) {
  using namespace detail;
  size_t i = 0;
  skip_ws(text, i);
  if (i < text.size() && text[i] == '(') {
    ++i;
    BigInt a, b, D, c;
    bool neg_b = false;
    if (!parse_int(text, i, &a)) throw config_error("surd: expected integer after '(': " + text);
    skip_ws(text, i);
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
      neg_b = (text[i] == '-');
      ++i;
    } else {
      throw config_error("surd: expected '+' or '-' before radical term: " + text);
    }
    if (!parse_int(text, i, &b)) throw config_error("surd: expected coefficient: " + text);
    if (!expect(text, i, "*")) throw config_error("surd: expected '*': " + text);
    if (!expect(text, i, "sqrt(")) throw config_error("surd: expected 'sqrt(': " + text);
    if (!parse_int(text, i, &D)) throw config_error("surd: expected radicand: " + text);
    if (!expect(text, i, ")")) throw config_error("surd: expected ')' after radicand: " + text);
    if (!expect(text, i, ")")) throw config_error("surd: expected closing ')': " + text);
    if (!expect(text, i, "/")) throw config_error("surd: expected '/denominator': " + text);
    if (!parse_int(text, i, &c)) throw config_error("surd: expected denominator: " + text);
    skip_ws(text, i);
    if (i != text.size()) throw config_error("surd: trailing junk: " + text);
    if (neg_b) b = -b;
    return Surd(a, b, c, D);
  }
  // Bare rational: "p" or "p/q".
  BigInt p, q = 1;
  if (!parse_int(text, i, &p)) throw config_error("surd: cannot parse: " + text);
  skip_ws(text, i);
  if (i < text.size() && text[i] == '/') {
    ++i;
    if (!parse_int(text, i, &q)) throw config_error("surd: expected denominator: " + text);
  }
  skip_ws(text, i);
  if (i != text.size()) throw config_error("surd: trailing junk: " + text);
  return Surd(p, 0, q, 1);
}

}  // namespace renorm
