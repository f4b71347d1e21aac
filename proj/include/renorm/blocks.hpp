#pragma once

/**
 * The renormalization engine for skew products over a quadratic-irrational
 * rotation.
 *
 * Setup: the rotation x -> x + alpha acts on the Q-cell partition of the
 * circle; beta = frac(Q*alpha) and P = floor(Q*alpha).  The orbit of 0
 * decomposes into two families of blocks, indexed by levels of the ceiling
 * continued-fraction expansion of beta.  Per level k a block of type
 * i in {0,1} has
 *
 *   - length      len_k(i),     len_0 = (1,1),
 *                 len_{k+1}(i) = (n_{k+1}-1-i) len_k(0) + len_k(1),
 *   - cell shift  eps_k(i),     eps_0(i) = (P+i) mod Q,
 *                 eps_{k+1}(i) = (n_{k+1}-1-i) eps_k(0) + eps_k(1) mod Q,
 *   - drift       sigma_k(i,eps): total jump over a type-i block whose
 *                 first cell is offset by eps,
 *                 sigma_{k+1}(i,eps) = sum_{j=1}^{n-1-i} sigma_k(0, eps+(j-1)eps_k(0))
 *                                    + sigma_k(1, eps+(n-1-i) eps_k(0)),
 *
 * where n = n_{k+1} is the (k+1)-st ceiling digit.  A level-(k+1) block
 * therefore concatenates n-1-i type-0 children followed by one type-1
 * child, and the partial sums of the child drifts ("cum" tables below) are
 * the offsets at which each child starts.
 *
 * Streams over the orbit of 0 walk this block tree with an explicit stack
 * (an odometer), which gives sequential access in O(1) amortized per step
 * and random access to the n-th Birkhoff sum in O(depth).  Independent
 * oracles (`psi_sequence`, `kappa_sequence`, `birkhoff_direct`) follow the
 * rotation itself with exact arithmetic and know nothing about blocks.
 */

#include <array>
#include <cstdint>
#include <map>
#include <utility>
#include <variant>
#include <vector>

#include "cf.hpp"
#include "cocycle.hpp"
#include "numeric.hpp"
#include "surd.hpp"

namespace renorm {

// ---------------------------------------------------------------------------
// Exact rotation orbits.
//
// The orbit y_n = frac(y_0 + n*step) lives in the field of `step`; writing
// y_n = (A_n + B_n sqrt(D)) / C with a fixed denominator C, one step is an
// integer translation of (A, B) followed by at most one subtraction of C.
// All comparisons reduce to the sign of u + v sqrt(D), which fits in
// __int128 for every orbit length we ever request; the bound is certified
// at construction and a big-integer core is substituted when it fails.

namespace detail {

template <class Int>
int sign_pair(const Int& u, const Int& v, const Int& D) {
  // sign of u + v sqrt(D), exact.
  if (v == 0) return u > 0 ? 1 : (u < 0 ? -1 : 0);
  if (u == 0) return v > 0 ? 1 : -1;
  if (u > 0 && v > 0) return 1;
  if (u < 0 && v < 0) return -1;
  Int lhs = u * u, rhs = v * v * D;
  if (lhs == rhs) return 0;           // u = -v sqrt(D) is impossible for D nonsquare,
  int cmp = lhs > rhs ? 1 : -1;       // but D = 1 (rational field) does hit it.
  return u > 0 ? cmp : -cmp;
}

template <class Int>
struct RotationCore {
  Int A, B, As, Bs, C, D;
  std::int64_t n = 0;  // steps taken

  // Advance y -> frac(y + step); returns true when the addition wrapped
  // (i.e. y + step >= 1).
  bool advance() {
    A += As;
    B += Bs;
    ++n;
    bool carry = sign_pair<Int>(A - C, B, D) >= 0;
    if (carry) A -= C;
    return carry;
  }

  // floor(Q * y) for the current point: counts thresholds l/Q <= y.
  int kappa(int Q) const {
    int k = 0;
    for (int l = 1; l < Q; ++l)
      if (sign_pair<Int>(Int(Q) * A - Int(l) * C, Int(Q) * B, D) >= 0) ++k;
    return k;
  }
};

}  // namespace detail

class RotationOrbit {
 public:
  /// Orbit of `start` under y -> frac(y + step), prepared for up to
  /// `max_steps` advances.  `start` must be rational or lie in the
  /// quadratic field of `step`.
  RotationOrbit(const Surd& start, const Surd& step, std::int64_t max_steps)
      : max_steps_(max_steps) {
    if (step.sign() <= 0 || (step - Surd::from_int(1)).sign() >= 0)
      throw config_error("rotation step must lie in (0,1)");
    BigInt D = step.is_rational() ? start.D() : step.D();
    if (!start.is_rational() && !step.is_rational() && start.D() != step.D())
      throw config_error("rotation start must be rational or share the step's field");
    BigInt C = big_lcm(start.c(), step.c());
    BigInt f0 = C / start.c(), fs = C / step.c();
    BigInt A0 = start.a() * f0, B0 = start.b() * f0;
    BigInt As = step.a() * fs, Bs = step.b() * fs;

    // Certify the __int128 fast path: every quantity whose sign we take is
    // bounded by Ma + Mb sqrt(D) with Ma, Mb below; the squares must fit.
    BigInt Bmax = abs(B0) + (BigInt(max_steps) + 2) * abs(Bs) + 1;
    BigInt Amax = isqrt_floor(Bmax * Bmax * D) + 2 * C + abs(As) + 2;
    BigInt Ma = BigInt(kKappaMax) * (Amax + C);
    BigInt Mb = BigInt(kKappaMax) * Bmax;
    BigInt lim = BigInt(1) << 62;
    if (Ma < lim && Mb * (isqrt_floor(D) + 1) < lim) {
      detail::RotationCore<I128> core{to_i128(A0), to_i128(B0), to_i128(As),
                                      to_i128(Bs), to_i128(C), to_i128(D), 0};
      core_ = core;
    } else {
      core_ = detail::RotationCore<BigInt>{A0, B0, As, Bs, C, D, 0};
    }
  }

  bool advance() {
    if (steps() >= max_steps_ + 1)
      throw internal_error("rotation orbit advanced beyond certified length");
    return std::visit([](auto& c) { return c.advance(); }, core_);
  }
  int kappa(int Q) const {
    if (Q > kKappaMax) throw internal_error("rotation orbit: Q exceeds certified bound");
    return std::visit([Q](const auto& c) { return c.kappa(Q); }, core_);
  }
  std::int64_t steps() const {
    return std::visit([](const auto& c) { return c.n; }, core_);
  }

 private:
  using I128 = __int128;
  static constexpr int kKappaMax = 64;  // certification covers Q up to this
  static I128 to_i128(const BigInt& x) { return static_cast<I128>(x); }
  std::int64_t max_steps_ = 0;
  std::variant<detail::RotationCore<I128>, detail::RotationCore<BigInt>> core_;
};

/// psi_k = 1 iff frac((k-1) beta) lands in [1-beta, 1), for k = 1..N.
/// Equivalently: adding beta at step k wraps past 1, so the k-th carry of
/// the exact beta-orbit starting at 0.
inline std::vector<std::uint8_t> psi_sequence(const Surd& beta, std::int64_t N) {
  RotationOrbit orbit(Surd::from_int(0), beta, N);
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<size_t>(N));
  for (std::int64_t k = 1; k <= N; ++k) out.push_back(orbit.advance() ? 1 : 0);
  return out;
}

/// kappa_n = floor(Q * frac(x0 + n alpha)) for n = 0..N-1.
inline std::vector<int> kappa_sequence(const Surd& alpha, int Q, std::int64_t N,
                                       const Surd& x0 = Surd::from_int(0)) {
  RotationOrbit orbit(x0.frac(), alpha, N);
  std::vector<int> out;
  out.reserve(static_cast<size_t>(N));
  for (std::int64_t n = 0; n < N; ++n) {
    out.push_back(orbit.kappa(Q));
    orbit.advance();
  }
  return out;
}

/// Birkhoff partial sums phi_1(x0), ..., phi_N(x0) of the step cocycle,
/// computed directly from the rotation orbit (the block-free oracle).
inline std::vector<Vec> birkhoff_direct(const Surd& alpha, const StepCocycle& phi,
                                        const Surd& x0, std::int64_t N) {
  RotationOrbit orbit(x0.frac(), alpha, N);
  std::vector<Vec> out;
  out.reserve(static_cast<size_t>(N));
  Vec run(phi.d);
  for (std::int64_t n = 0; n < N; ++n) {
    run += phi(orbit.kappa(phi.Q));
    out.push_back(run);
    orbit.advance();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Renormalization levels.

struct Caps {
  std::int64_t explicit_block = 10'000'000;  // materialized words / blocks
  std::int64_t streaming = 10'000'000;       // sequential stream length
  int cf = 10'000;                           // continued-fraction states
  int max_level = 4096;                      // lazily built levels
  int period_extension = 10'000;             // positivity search for period powers
};

struct LevelData {
  int k = 0;
  std::array<BigInt, 2> len;       // len[i]
  std::array<int, 2> eps;          // eps[i]
  std::vector<Vec> sigma;          // sigma[i*Q + eps]
  std::int64_t next_digit = 0;     // n_{k+1}
  // cum[eps][j] = sum_{v=1}^{j} sigma(0, eps + (v-1) eps[0]), j = 0..n_{k+1}-1:
  // the drift offset at which the (j+1)-st child of a level-(k+1) block starts.
  std::vector<std::vector<Vec>> cum;
};

class RenormModel {
 public:
  RenormModel(Surd alpha, StepCocycle phi, Caps caps = Caps{})
      : alpha_(std::move(alpha)), phi_(std::move(phi)), caps_(caps) {
    if (alpha_.is_rational()) throw config_error("rotation number must be irrational");
    if (alpha_.sign() <= 0 || (alpha_ - Surd::from_int(1)).sign() >= 0)
      throw config_error("rotation number must lie in (0,1)");
    Surd Qa = alpha_ * Surd::from_int(phi_.Q);
    P_ = Qa.floor();
    beta_ = Qa.frac();
    P_mod_ = static_cast<int>(mod_floor(P_, BigInt(phi_.Q)));
    cf_ = ceiling_cf(beta_, caps_.cf);
    levels_.push_back(make_level0());
  }

  const Surd& alpha() const { return alpha_; }
  const Surd& beta() const { return beta_; }
  const BigInt& P() const { return P_; }
  int Q() const { return phi_.Q; }
  int dim() const { return phi_.d; }
  const StepCocycle& cocycle() const { return phi_; }
  const CFExpansion& partition_cf() const { return cf_; }
  const Caps& caps() const { return caps_; }

  /// Ceiling digit n_k (k >= 1).
  std::int64_t digit(int k) const { return cf_.digit(k); }

  /// Level data for level k, building lazily.
  const LevelData& level(int k) {
    if (k < 0) throw internal_error("level index negative");
    if (k > caps_.max_level) throw cap_exceeded("level cap exceeded");
    while (static_cast<int>(levels_.size()) <= k) levels_.push_back(step(levels_.back()));
    return levels_[static_cast<size_t>(k)];
  }

  const BigInt& len(int k, int i) { return level(k).len[static_cast<size_t>(i)]; }
  int eps(int k, int i) { return level(k).eps[static_cast<size_t>(i)]; }
  const Vec& sigma(int k, int i, int e) {
    return level(k).sigma[static_cast<size_t>(i * Q() + e)];
  }
  /// Drift offset of the (j+1)-st child (j = 0..n_{k+1}-1) of a level-(k+1)
  /// block over cell offset e.
  const Vec& cum(int k, int e, std::int64_t j) {
    return level(k).cum[static_cast<size_t>(e)][static_cast<size_t>(j)];
  }

  /// Smallest level whose type-0 block covers n orbit points.
  int level_covering(const BigInt& n) {
    int k = 0;
    while (len(k, 0) < n) ++k;
    return k;
  }

  /// First level K and cycle length L such that the pair
  /// (eps_k(0), eps_k(1)) together with the digit phase recurs:
  /// levels K, K+L, K+2L, ... share identical transition data.
  std::pair<int, int> parity_cycle() {
    std::int64_t Kd = static_cast<std::int64_t>(cf_.preperiod.size());
    std::int64_t Ld = static_cast<std::int64_t>(cf_.period.size());
    std::map<std::array<std::int64_t, 3>, int> seen;
    for (int k = static_cast<int>(Kd);; ++k) {
      if (k > caps_.max_level) throw cap_exceeded("parity cycle exceeds level cap");
      std::array<std::int64_t, 3> state{(k - Kd) % Ld, eps(k, 0), eps(k, 1)};
      auto [it, fresh] = seen.emplace(state, k);
      if (!fresh) return {it->second, k - it->second};
    }
  }

 private:
  LevelData make_level0() {
    LevelData L;
    L.k = 0;
    L.len = {BigInt(1), BigInt(1)};
    L.eps = {P_mod_, (P_mod_ + 1) % Q()};
    L.sigma.resize(static_cast<size_t>(2 * Q()), Vec(dim()));
    for (int i = 0; i < 2; ++i)
      for (int e = 0; e < Q(); ++e) L.sigma[static_cast<size_t>(i * Q() + e)] = phi_(e);
    L.next_digit = digit(1);
    fill_cum(L);
    return L;
  }

  LevelData step(const LevelData& prev) {
    LevelData L;
    L.k = prev.k + 1;
    std::int64_t n = prev.next_digit;
    for (int i = 0; i < 2; ++i) {
      L.len[static_cast<size_t>(i)] = BigInt(n - 1 - i) * prev.len[0] + prev.len[1];
      L.eps[static_cast<size_t>(i)] =
          static_cast<int>(((n - 1 - i) * prev.eps[0] + prev.eps[1]) % Q());
    }
    L.sigma.resize(static_cast<size_t>(2 * Q()), Vec(dim()));
    for (int i = 0; i < 2; ++i)
      for (int e = 0; e < Q(); ++e) {
        // Children: n-1-i type-0 blocks, then one type-1 block; each child
        // starts eps[0] cells further on than its predecessor.
        std::int64_t j = n - 1 - i;
        Vec total = prev.cum[static_cast<size_t>(e)][static_cast<size_t>(j)];
        int e1 = static_cast<int>((e + j * prev.eps[0]) % Q());
        total += prev.sigma[static_cast<size_t>(1 * Q() + e1)];
        L.sigma[static_cast<size_t>(i * Q() + e)] = total;
      }
    L.next_digit = digit(L.k + 1);
    fill_cum(L);
    return L;
  }

  void fill_cum(LevelData& L) {
    L.cum.assign(static_cast<size_t>(Q()), {});
    for (int e = 0; e < Q(); ++e) {
      auto& row = L.cum[static_cast<size_t>(e)];
      row.reserve(static_cast<size_t>(L.next_digit));
      row.push_back(Vec(dim()));
      for (std::int64_t j = 1; j < L.next_digit; ++j) {
        int ej = static_cast<int>((e + (j - 1) * L.eps[0]) % Q());
        row.push_back(row.back() + L.sigma[static_cast<size_t>(ej)]);
      }
    }
  }

  Surd alpha_;
  StepCocycle phi_;
  Caps caps_;
  BigInt P_;
  int P_mod_ = 0;
  Surd beta_;
  CFExpansion cf_;
  std::vector<LevelData> levels_;
};

// ---------------------------------------------------------------------------
// Block tree walker (odometer).
//
// A walker enumerates the level-0 cells of one top block in orbit order.
// Each stack frame fixes a child index inside its parent; descending always
// takes child 1, and `next` increments the deepest frame that still has a
// sibling.  Every frame carries the drift offset at which its block starts,
// so the Birkhoff sum at the current cell is offset + Phi(cell eps).

class BlockWalker {
 public:
  BlockWalker(RenormModel& m, int top_level, int top_i = 0, int top_eps = 0)
      : m_(&m), top_{top_level, top_i, top_eps, Vec(m.dim()), 0} {
    size_ = m.len(top_level, top_i);
    reset();
  }

  const BigInt& size() const { return size_; }
  bool done() const { return done_; }
  int cell_eps() const { return cell_.eps; }
  /// Sum of all jumps strictly before the current cell.
  const Vec& offset() const { return cell_.offset; }
  /// Jump at the current cell.
  const Vec& jump() const { return m_->cocycle()(cell_.eps); }

  void reset() {
    stack_.clear();
    done_ = false;
    descend(top_);
  }

  /// Jump to the cell at 1-based position pos (1 <= pos <= size()).
  void seek(const BigInt& pos) {
    if (pos < 1 || pos > size_) throw internal_error("walker seek out of range");
    stack_.clear();
    done_ = false;
    Frame f = top_;
    BigInt r = pos;
    while (f.level > 0) {
      std::int64_t n = m_->digit(f.level);
      const BigInt& child_len = m_->len(f.level - 1, 0);
      BigInt q = (r - 1) / child_len;
      std::int64_t jmax = n - 1 - f.i;  // number of type-0 children
      std::int64_t j = q < jmax ? static_cast<std::int64_t>(q) : jmax;
      r -= BigInt(j) * child_len;
      f.child = j + 1;
      stack_.push_back(f);
      f = child_frame(f, j + 1);
    }
    cell_ = f;
  }

  void next() {
    while (!stack_.empty() && stack_.back().child == children_of(stack_.back())) {
      stack_.pop_back();
    }
    if (stack_.empty()) {
      done_ = true;
      return;
    }
    Frame& f = stack_.back();
    ++f.child;
    descend(child_frame(f, f.child));
  }

 private:
  struct Frame {
    int level;
    int i;
    int eps;
    Vec offset;
    std::int64_t child;  // current child index, 1-based
  };

  std::int64_t children_of(const Frame& f) const { return m_->digit(f.level) - f.i; }

  Frame child_frame(const Frame& f, std::int64_t c) const {
    int kc = f.level - 1;
    bool last = c == children_of(f);
    Frame g;
    g.level = kc;
    g.i = last ? 1 : 0;
    g.eps = static_cast<int>((f.eps + (c - 1) * m_->eps(kc, 0)) % m_->Q());
    g.offset = f.offset + m_->cum(kc, f.eps, c - 1);
    g.child = 0;
    return g;
  }

  void descend(Frame f) {
    while (f.level > 0) {
      f.child = 1;
      stack_.push_back(f);
      f = child_frame(f, 1);
    }
    cell_ = f;
  }

  RenormModel* m_;
  Frame top_;
  BigInt size_;
  std::vector<Frame> stack_;
  Frame cell_;
  bool done_ = false;
};

/// Birkhoff sum phi_n(0) via one O(depth) descent of the block tree.
inline Vec birkhoff_at(RenormModel& m, const BigInt& n) {
  if (n < 1) throw internal_error("birkhoff_at: n must be >= 1");
  BlockWalker w(m, m.level_covering(n));
  w.seek(n);
  return w.offset() + w.jump();
}

/// Sequential stream of jumps phi(x + k alpha) along the orbit of 0;
/// `value()` is the jump at 1-based position `pos()`.
class JumpStream {
 public:
  JumpStream(RenormModel& m, const BigInt& n_max)
      : walker_(m, m.level_covering(n_max)) {
    if (BigInt(m.caps().streaming) < n_max)
      throw cap_exceeded("stream length exceeds streaming cap");
  }
  bool done() const { return walker_.done(); }
  const Vec& value() const { return walker_.jump(); }
  std::int64_t pos() const { return pos_; }
  void next() {
    walker_.next();
    ++pos_;
  }
  BlockWalker& walker() { return walker_; }

 private:
  BlockWalker walker_;
  std::int64_t pos_ = 1;
};

/// Sequential stream of Birkhoff partial sums phi_n(0), n = 1, 2, ...
class OrbitStream {
 public:
  OrbitStream(RenormModel& m, const BigInt& n_max) : jumps_(m, n_max), sum_(m.dim()) {
    sum_ += jumps_.value();
  }
  bool done() const { return jumps_.done(); }
  /// phi_n(0) for the current n = pos().
  const Vec& value() const { return sum_; }
  std::int64_t pos() const { return jumps_.pos(); }
  void next() {
    jumps_.next();
    if (!jumps_.done()) sum_ += jumps_.value();
  }
  JumpStream& jumps() { return jumps_; }

 private:
  JumpStream jumps_;
  Vec sum_;
};

// ---------------------------------------------------------------------------
// Explicit words.

/// The substitution words over {0,1} at level k:
///   W_{k+1}(0) = W_k(0)^{n-1} W_k(1),   W_{k+1}(1) = W_k(0)^{n-2} W_k(1),
/// from W_0(0) = "0", W_0(1) = "1".  Materializes both; lengths are checked
/// against the explicit-block cap first.
inline std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>> symbol_blocks(
    RenormModel& m, int k) {
  if (m.len(k, 0) > m.caps().explicit_block)
    throw cap_exceeded("symbol block exceeds explicit-block cap");
  std::vector<std::uint8_t> w0{0}, w1{1};
  for (int j = 1; j <= k; ++j) {
    std::int64_t n = m.digit(j);
    std::vector<std::uint8_t> v0, v1;
    v0.reserve(static_cast<size_t>(m.len(j, 0)));
    v1.reserve(static_cast<size_t>(m.len(j, 1)));
    for (std::int64_t r = 0; r < n - 1; ++r) v0.insert(v0.end(), w0.begin(), w0.end());
    v0.insert(v0.end(), w1.begin(), w1.end());
    for (std::int64_t r = 0; r < n - 2; ++r) v1.insert(v1.end(), w0.begin(), w0.end());
    v1.insert(v1.end(), w1.begin(), w1.end());
    w0 = std::move(v0);
    w1 = std::move(v1);
  }
  return {std::move(w0), std::move(w1)};
}

/// The cell sequence (parity word) of one type-i level-k block over cell
/// offset eps, materialized via the walker.
inline std::vector<int> parity_block(RenormModel& m, int k, int i, int eps) {
  if (m.len(k, i) > m.caps().explicit_block)
    throw cap_exceeded("parity block exceeds explicit-block cap");
  std::vector<int> out;
  out.reserve(static_cast<size_t>(m.len(k, i)));
  for (BlockWalker w(m, k, i, eps); !w.done(); w.next()) out.push_back(w.cell_eps());
  return out;
}

}  // namespace renorm
