#pragma once

/*
 * Transition chains of the renormalization step.
 *
 * Reading a level-(k+1) block as a concatenation of level-k blocks turns the
 * descent through the block hierarchy into a Markov chain on the states
 * (i, eps) in {0,1} x Z_Q: a uniformly random position of a level-(k+1)
 * block lies in a level-k child whose type and cell offset follow explicit
 * probabilities given by length ratios, and the drift accumulated at each
 * descent is a finitely supported displacement law per transition.  The
 * chain's characteristic-function matrix Pi(theta) intertwines the
 * normalized block distributions: Xi_{k+1}(theta) = Pi^{(k+1)}(theta)
 * Xi_k(theta).
 *
 * Along the certified extended period the transition data converge: length
 * ratios become exact quadratic-field quantities built from the dominant
 * eigenvector of the period's length matrix, and the displacement tables are
 * exactly affine in the period count.  The composed one-period chain is then
 * centered by solving two singular linear systems over the field, which
 * removes the drift and the affine slope simultaneously; the residual slope
 * vanishing atom by atom is certified exactly, leaving a genuinely
 * period-independent chain whose per-state displacement means are zero.
 * Its stationary second moment gives the diffusion matrix in closed form.
 */

#include <algorithm>
#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <tuple>
#include <utility>
#include <vector>

#include "renorm/blocks.hpp"
#include "renorm/dist.hpp"
#include "renorm/linalg.hpp"
#include "renorm/numeric.hpp"
#include "renorm/parallel.hpp"
#include "renorm/rng.hpp"
#include "renorm/spectral.hpp"
#include "renorm/surd.hpp"

namespace renorm {

/// States (i, eps) are indexed s = i*Q + eps throughout.
inline int state_index(int i, int eps, int Q) { return i * Q + eps; }
inline std::pair<int, int> state_unpack(int s, int Q) { return {s / Q, s % Q}; }

// ---------------------------------------------------------------------------
// Finite-level chain.

/// One displacement atom: an integer drift vector with a rational weight.
struct RatAtom {
  Vec value;
  BigRat weight;
};

/// One transition of the descent chain with its displacement law.
struct RatEntry {
  int target = 0;
  BigRat prob;
  std::vector<RatAtom> atoms;  // weights sum to 1
};

/// The descent chain of the step from level k to level k+1: row s lists the
/// child-state transitions of a uniform position in a level-(k+1) block of
/// state s, together with the drift accumulated at this descent.
struct RatSpec {
  int Q = 0;
  int d = 0;
  int level = 0;  // source level k (the step produces level k+1)
  std::vector<std::vector<RatEntry>> rows;
};

/// Build the step chain from level k to level k+1.
inline RatSpec rat_build(RenormModel& m, int k) {
  const int Q = m.Q();
  const std::int64_t n = m.digit(k + 1);
  const int eta = m.eps(k, 0);
  RatSpec spec;
  spec.Q = Q;
  spec.d = m.dim();
  spec.level = k;
  spec.rows.resize(static_cast<size_t>(2 * Q));
  for (int i = 0; i < 2; ++i)
    for (int e = 0; e < Q; ++e) {
      std::vector<RatEntry>& row = spec.rows[static_cast<size_t>(state_index(i, e, Q))];
      const BigInt& lp = m.len(k + 1, i);
      // Type-0 children grouped by cell-offset increment delta = (j-1)*eta.
      std::vector<std::vector<std::int64_t>> js(static_cast<size_t>(Q));
      for (std::int64_t j = 1; j <= n - 1 - i; ++j)
        js[static_cast<size_t>(((j - 1) * eta) % Q)].push_back(j);
      for (int delta = 0; delta < Q; ++delta) {
        const auto& list = js[static_cast<size_t>(delta)];
        if (list.empty()) continue;
        RatEntry entry;
        entry.target = state_index(0, (e + delta) % Q, Q);
        entry.prob = BigRat(m.len(k, 0) * static_cast<std::int64_t>(list.size()), lp);
        std::map<std::int64_t, BigRat> merged;
        const BigRat w(BigInt(1), BigInt(static_cast<std::int64_t>(list.size())));
        for (std::int64_t j : list) merged[m.cum(k, e, j - 1).pack()] += w;
        for (const auto& [key, weight] : merged)
          entry.atoms.push_back({Vec::unpack(key, spec.d), weight});
        row.push_back(std::move(entry));
      }
      // The single type-1 child.
      RatEntry tail;
      tail.target = state_index(1, static_cast<int>((e + (n - 1 - i) * eta) % Q), Q);
      tail.prob = BigRat(m.len(k, 1), lp);
      tail.atoms.push_back({m.cum(k, e, n - 1 - i), BigRat(1)});
      row.push_back(std::move(tail));
    }
  return spec;
}

/// Characteristic-function matrix Pi(theta) of a finite-level chain,
/// row-major 2Q x 2Q: Pi[s][t] = P(s -> t) E(exp(2 pi i <theta, W_{s,t}>)).
inline std::vector<std::complex<double>> rat_cf(const RatSpec& spec,
                                                const std::array<double, 3>& theta) {
  const int n = 2 * spec.Q;
  std::vector<std::complex<double>> out(static_cast<size_t>(n) * n);
  for (int s = 0; s < n; ++s)
    for (const RatEntry& entry : spec.rows[static_cast<size_t>(s)]) {
      std::complex<double> cf = 0;
      for (const RatAtom& atom : entry.atoms) {
        double phase = 0;
        for (int c = 0; c < spec.d; ++c)
          phase += theta[static_cast<size_t>(c)] * static_cast<double>(atom.value[c]);
        cf += rat_to_double(atom.weight) *
              std::exp(std::complex<double>(0, 2 * kPi * phase));
      }
      out[static_cast<size_t>(s) * n + entry.target] += rat_to_double(entry.prob) * cf;
    }
  return out;
}

/// Normalized block characteristic vector Xi_k(theta), indexed by state.
inline std::vector<std::complex<double>> dist_cf(RenormModel& m, int k,
                                                 const std::array<double, 3>& theta) {
  std::vector<SparseDist> table = dist_table(m, k);
  std::vector<std::complex<double>> out;
  out.reserve(table.size());
  for (const SparseDist& dist : table) out.push_back(dist.char_at(theta));
  return out;
}

/// Exact total-variation distance between two nonempty weighted laws.
inline double tv_distance(const SparseDist& a, const SparseDist& b) {
  const BigInt ta = a.total(), tb = b.total();
  if (ta == 0 || tb == 0) throw internal_error("tv_distance: empty distribution");
  BigRat acc(0);
  size_t ia = 0, ib = 0;
  while (ia < a.w.size() || ib < b.w.size()) {
    BigRat pa(0), pb(0);
    if (ib >= b.w.size() || (ia < a.w.size() && a.w[ia].first < b.w[ib].first)) {
      pa = BigRat(a.w[ia].second, ta);
      ++ia;
    } else if (ia >= a.w.size() || b.w[ib].first < a.w[ia].first) {
      pb = BigRat(b.w[ib].second, tb);
      ++ib;
    } else {
      pa = BigRat(a.w[ia].second, ta);
      pb = BigRat(b.w[ib].second, tb);
      ++ia;
      ++ib;
    }
    BigRat diff = pa - pb;
    if (diff < 0) diff = -diff;
    acc += diff;
  }
  return rat_to_double(acc) / 2;
}

/// Sample the level-k block displacement law by the descent chain: one
/// independent walk per (trial, start state), driven by counter-based
/// streams keyed on (seed, trial, state).  The result is a per-state
/// empirical distribution whose bytes do not depend on the worker count.
inline std::vector<SparseDist> arw_sample(RenormModel& m, int k, std::int64_t trials,
                                          std::uint64_t seed, int workers = 0) {
  const int Q = m.Q(), d = m.dim();
  const int states = 2 * Q;
  // Pre-touch all levels so worker threads only read.
  m.level(k);
  if (workers <= 0) workers = thread_count();
  std::vector<std::map<std::int64_t, std::int64_t>> merged(static_cast<size_t>(states));
  std::vector<std::vector<std::map<std::int64_t, std::int64_t>>> local(
      static_cast<size_t>(workers),
      std::vector<std::map<std::int64_t, std::int64_t>>(static_cast<size_t>(states)));
  parallel_chunks(
      trials,
      [&](std::int64_t begin, std::int64_t end, int w) {
        for (std::int64_t trial = begin; trial < end; ++trial)
          for (int s = 0; s < states; ++s) {
            CounterRng rng(seed, static_cast<std::uint64_t>(trial),
                           static_cast<std::uint64_t>(s));
            auto [i, e] = state_unpack(s, Q);
            Vec drift(d);
            for (int lvl = k; lvl >= 1; --lvl) {
              const std::int64_t n = m.digit(lvl);
              const int eta = m.eps(lvl - 1, 0);
              const BigInt u = rng.next_below(m.len(lvl, i));
              const BigInt head = m.len(lvl - 1, 0) * (n - 1 - i);
              std::int64_t child;
              int child_i;
              if (u < head) {
                child = static_cast<std::int64_t>(u / m.len(lvl - 1, 0));
                child_i = 0;
              } else {
                child = n - 1 - i;
                child_i = 1;
              }
              drift += m.cum(lvl - 1, e, child);
              e = static_cast<int>((e + child * eta) % Q);
              i = child_i;
            }
            local[static_cast<size_t>(w)][static_cast<size_t>(s)][drift.pack()] += 1;
          }
      },
      workers);
  for (const auto& per_worker : local)
    for (int s = 0; s < states; ++s)
      for (const auto& [key, count] : per_worker[static_cast<size_t>(s)])
        merged[static_cast<size_t>(s)][key] += count;
  std::vector<SparseDist> out(static_cast<size_t>(states));
  for (int s = 0; s < states; ++s) {
    out[static_cast<size_t>(s)].dim = d;
    for (const auto& [key, count] : merged[static_cast<size_t>(s)])
      out[static_cast<size_t>(s)].w.emplace_back(key, BigInt(count));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Limit chain over the extended period.

/// Small vector with quadratic-field coordinates.
struct SurdVec {
  int dim = 0;
  std::array<Surd, 3> v{};

  explicit SurdVec(int d = 0) : dim(d) {}
  static SurdVec from_vec(const Vec& x) {
    SurdVec r(x.dim);
    for (int c = 0; c < x.dim; ++c) r.v[static_cast<size_t>(c)] = Surd::from_int(x[c]);
    return r;
  }
  Surd& operator[](int c) { return v[static_cast<size_t>(c)]; }
  const Surd& operator[](int c) const { return v[static_cast<size_t>(c)]; }
  friend SurdVec operator+(const SurdVec& x, const SurdVec& y) {
    SurdVec r(x.dim);
    for (int c = 0; c < x.dim; ++c) r[c] = x[c] + y[c];
    return r;
  }
  friend SurdVec operator-(const SurdVec& x, const SurdVec& y) {
    SurdVec r(x.dim);
    for (int c = 0; c < x.dim; ++c) r[c] = x[c] - y[c];
    return r;
  }
  bool is_zero() const {
    for (int c = 0; c < dim; ++c)
      if (v[static_cast<size_t>(c)].sign() != 0) return false;
    return true;
  }
};

/// One affine displacement atom: drift = base + n * slope at period index n.
struct LimitAtom {
  Vec base;
  Vec slope;
  BigRat weight;
};

/// One transition of a limit step chain.
struct LimitEntry {
  int target = 0;
  Surd prob;
  std::vector<LimitAtom> atoms;
};

/// The limit of the step chains at a fixed phase of the extended period.
struct LimitSpec {
  int Q = 0;
  int d = 0;
  int phase = 0;  // source phase p; the step maps phase p to phase p+1
  std::vector<std::vector<LimitEntry>> rows;
};

/// One flattened transition atom of the composed one-period chain, carrying
/// its full probability mass (transition probability times atom weight).
struct AffineMass {
  int target = 0;
  Surd mass;
  Vec base;
  Vec slope;
};

/// A centered transition atom: field-valued displacement, zero mean per row.
struct CenteredMass {
  int target = 0;
  Surd mass;
  SurdVec value;
};

/// Compact double-precision view of a centered chain for numeric spectra.
struct LimitCharModel {
  int n = 0;  // number of states
  int d = 0;
  struct Entry {
    int s, t;
    double mass;
    std::array<double, 3> b;
  };
  std::vector<Entry> entries;

  std::vector<std::complex<double>> matrix(const std::array<double, 3>& theta) const {
    std::vector<std::complex<double>> out(static_cast<size_t>(n) * n);
    for (const Entry& e : entries) {
      double phase = 0;
      for (int c = 0; c < d; ++c) phase += theta[static_cast<size_t>(c)] * e.b[static_cast<size_t>(c)];
      out[static_cast<size_t>(e.s) * n + e.t] +=
          e.mass * std::exp(std::complex<double>(0, 2 * kPi * phase));
    }
    return out;
  }
  CharMatrixFn fn() const {
    return [copy = *this](const std::array<double, 3>& theta) { return copy.matrix(theta); };
  }
};

/// The composed and centered one-period limit chain.
struct LimitChain {
  int Q = 0, d = 0;
  int K = 0, L = 0, M = 1, L_ext = 0;
  Surd lambda;                  // dominant root of the extended length matrix
  std::array<Surd, 2> c0;       // scaled length vector at phase 0
  std::vector<std::array<Surd, 2>> c;  // c[r], r = 0..L_ext
  bool c_periodic = false;      // c[L_ext] == lambda * c[0], exact
  std::vector<LimitSpec> steps;                 // G_r, r = 1..L_ext
  std::vector<std::vector<AffineMass>> H;       // composed chain, one row per state
  SurdMatrix P;                                 // transition probabilities of H
  std::vector<Surd> pi;                         // stationary row vector of P
  std::vector<SurdVec> mean_base, mean_slope;   // E(base), E(slope) per state
  std::vector<SurdVec> mu, xi;                  // centering data
  bool drift_solvable = false;                  // pi . E(slope) == 0, exact
  bool slope_residual_zero = false;             // slope == mu_s - mu_t atomwise
  bool centered_mean_zero = false;              // E(b) == 0 per state, exact
  std::vector<std::vector<CenteredMass>> centered;
  std::array<std::array<Surd, 3>, 3> sigma_exact{};  // sum_s pi_s E(b b^T)

  /// Asymptotic covariance as doubles.
  std::array<std::array<double, 3>, 3> covariance() const {
    std::array<std::array<double, 3>, 3> out{};
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        out[static_cast<size_t>(i)][static_cast<size_t>(j)] =
            sigma_exact[static_cast<size_t>(i)][static_cast<size_t>(j)].to_double();
    return out;
  }
  /// Curvature normalization: |lambda(theta)| = 1 - <D theta, theta> + o,
  /// with D = 2 pi^2 * covariance.
  std::array<std::array<double, 3>, 3> curvature() const {
    auto out = covariance();
    for (auto& row : out)
      for (double& x : row) x *= 2 * kPi * kPi;
    return out;
  }

  /// Double view of the centered chain.
  LimitCharModel char_model() const {
    LimitCharModel model;
    model.n = 2 * Q;
    model.d = d;
    for (int s = 0; s < 2 * Q; ++s)
      for (const CenteredMass& cm : centered[static_cast<size_t>(s)]) {
        LimitCharModel::Entry e;
        e.s = s;
        e.t = cm.target;
        e.mass = cm.mass.to_double();
        e.b = {0, 0, 0};
        for (int c = 0; c < d; ++c) e.b[static_cast<size_t>(c)] = cm.value[c].to_double();
        model.entries.push_back(e);
      }
    return model;
  }
};

/// Characteristic-function matrix of a limit step chain at period index n.
inline std::vector<std::complex<double>> limit_step_cf(const LimitSpec& g,
                                                       std::int64_t n_index,
                                                       const std::array<double, 3>& theta) {
  const int n = 2 * g.Q;
  std::vector<std::complex<double>> out(static_cast<size_t>(n) * n);
  for (int s = 0; s < n; ++s)
    for (const LimitEntry& entry : g.rows[static_cast<size_t>(s)]) {
      std::complex<double> cf = 0;
      for (const LimitAtom& atom : entry.atoms) {
        double phase = 0;
        for (int c = 0; c < g.d; ++c)
          phase += theta[static_cast<size_t>(c)] *
                   (static_cast<double>(atom.base[c]) +
                    static_cast<double>(n_index) * static_cast<double>(atom.slope[c]));
        cf += rat_to_double(atom.weight) *
              std::exp(std::complex<double>(0, 2 * kPi * phase));
      }
      out[static_cast<size_t>(s) * n + entry.target] += entry.prob.to_double() * cf;
    }
  return out;
}

/// Characteristic-function matrix of the composed (uncentered) chain at
/// period index n.
inline std::vector<std::complex<double>> composed_cf(const LimitChain& chain,
                                                     std::int64_t n_index,
                                                     const std::array<double, 3>& theta) {
  const int n = 2 * chain.Q;
  std::vector<std::complex<double>> out(static_cast<size_t>(n) * n);
  for (int s = 0; s < n; ++s)
    for (const AffineMass& am : chain.H[static_cast<size_t>(s)]) {
      double phase = 0;
      for (int c = 0; c < chain.d; ++c)
        phase += theta[static_cast<size_t>(c)] *
                 (static_cast<double>(am.base[c]) +
                  static_cast<double>(n_index) * static_cast<double>(am.slope[c]));
      out[static_cast<size_t>(s) * n + am.target] +=
          am.mass.to_double() * std::exp(std::complex<double>(0, 2 * kPi * phase));
    }
  return out;
}

namespace detail {

/// 2x2 length matrix of one digit.
inline std::array<std::array<BigInt, 2>, 2> digit_length_matrix(std::int64_t mdig) {
  return {{{BigInt(mdig - 1), BigInt(1)}, {BigInt(mdig - 2), BigInt(1)}}};
}

}  // namespace detail

/// Build the limit chain over a certified extended period.
inline LimitChain rat_limit_build(RenormModel& m, const PeriodStructure& ps) {
  if (!ps.affine_certified)
    throw internal_error("limit chain requires a certified affine extended period");
  LimitChain chain;
  chain.Q = m.Q();
  chain.d = m.dim();
  chain.K = ps.K;
  chain.L = ps.spec.L;
  chain.M = ps.spec.M;
  chain.L_ext = ps.L_ext;
  const int Q = chain.Q, d = chain.d, states = 2 * Q;

  // Extended length matrix and its dominant eigenpair, exactly.
  std::array<std::array<BigInt, 2>, 2> C{{{BigInt(1), BigInt(0)}, {BigInt(0), BigInt(1)}}};
  for (int r = 1; r <= chain.L_ext; ++r) {
    const auto B = detail::digit_length_matrix(ps.digits[static_cast<size_t>(r - 1)]);
    std::array<std::array<BigInt, 2>, 2> next{};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          next[static_cast<size_t>(i)][static_cast<size_t>(j)] +=
              B[static_cast<size_t>(i)][static_cast<size_t>(k)] *
              C[static_cast<size_t>(k)][static_cast<size_t>(j)];
    C = next;
  }
  const BigInt J = C[0][0] + C[1][1];
  if (J < 3) throw internal_error("extended length matrix trace must be at least 3");
  chain.lambda = (Surd::from_int(J) + Surd::sqrt_of(J * J - 4)) / Surd::from_int(2);
  if (C[0][1] == 0) throw internal_error("extended length matrix must be positive");
  chain.c0 = {Surd::from_int(C[0][1]) / (chain.lambda - Surd::from_int(C[0][0])),
              Surd::from_int(1)};

  // Scaled lengths along the period, and exact eigen-periodicity.
  chain.c.resize(static_cast<size_t>(chain.L_ext) + 1);
  chain.c[0] = chain.c0;
  for (int r = 1; r <= chain.L_ext; ++r) {
    const std::int64_t mdig = ps.digits[static_cast<size_t>(r - 1)];
    const auto& prev = chain.c[static_cast<size_t>(r - 1)];
    chain.c[static_cast<size_t>(r)] = {
        Surd::from_int(mdig - 1) * prev[0] + prev[1],
        Surd::from_int(mdig - 2) * prev[0] + prev[1]};
  }
  chain.c_periodic =
      ((chain.c[static_cast<size_t>(chain.L_ext)][0] - chain.lambda * chain.c0[0]).sign() == 0) &&
      ((chain.c[static_cast<size_t>(chain.L_ext)][1] - chain.lambda * chain.c0[1]).sign() == 0);

  // Limit step chains G_r, r = 1..L_ext (source phase p = r-1).
  for (int r = 1; r <= chain.L_ext; ++r) {
    const int p = r - 1;
    const std::int64_t mdig = ps.digits[static_cast<size_t>(p)];
    const int eta = ps.eps_pair[static_cast<size_t>(p)][0];
    const auto& base = ps.sig_base[static_cast<size_t>(p)];
    const auto& slope = ps.sig_slope[static_cast<size_t>(p)];
    const auto& c_src = chain.c[static_cast<size_t>(p)];
    const auto& c_dst = chain.c[static_cast<size_t>(r)];
    auto cum_at = [&](const std::vector<Vec>& table, int e, std::int64_t j) {
      Vec acc(d);
      for (std::int64_t v = 1; v <= j; ++v)
        acc += table[static_cast<size_t>(((e + (v - 1) * eta) % Q))];
      return acc;
    };
    LimitSpec g;
    g.Q = Q;
    g.d = d;
    g.phase = p;
    g.rows.resize(static_cast<size_t>(states));
    for (int i = 0; i < 2; ++i)
      for (int e = 0; e < Q; ++e) {
        std::vector<LimitEntry>& row = g.rows[static_cast<size_t>(state_index(i, e, Q))];
        std::vector<std::vector<std::int64_t>> js(static_cast<size_t>(Q));
        for (std::int64_t j = 1; j <= mdig - 1 - i; ++j)
          js[static_cast<size_t>(((j - 1) * eta) % Q)].push_back(j);
        for (int delta = 0; delta < Q; ++delta) {
          const auto& list = js[static_cast<size_t>(delta)];
          if (list.empty()) continue;
          LimitEntry entry;
          entry.target = state_index(0, (e + delta) % Q, Q);
          entry.prob = Surd::from_int(static_cast<std::int64_t>(list.size())) * c_src[0] /
                       c_dst[static_cast<size_t>(i)];
          std::map<std::pair<std::int64_t, std::int64_t>, BigRat> merged;
          const BigRat w(BigInt(1), BigInt(static_cast<std::int64_t>(list.size())));
          for (std::int64_t j : list)
            merged[{cum_at(base, e, j - 1).pack(), cum_at(slope, e, j - 1).pack()}] += w;
          for (const auto& [key, weight] : merged)
            entry.atoms.push_back(
                {Vec::unpack(key.first, d), Vec::unpack(key.second, d), weight});
          row.push_back(std::move(entry));
        }
        LimitEntry tail;
        tail.target =
            state_index(1, static_cast<int>((e + (mdig - 1 - i) * eta) % Q), Q);
        tail.prob = c_src[1] / c_dst[static_cast<size_t>(i)];
        tail.atoms.push_back(
            {cum_at(base, e, mdig - 1 - i), cum_at(slope, e, mdig - 1 - i), BigRat(1)});
        row.push_back(std::move(tail));
      }
    chain.steps.push_back(std::move(g));
  }

  // Compose one full period: walk down from phase L_ext through G_{L_ext}..G_1.
  chain.H.resize(static_cast<size_t>(states));
  for (int s = 0; s < states; ++s) {
    std::map<std::tuple<int, std::int64_t, std::int64_t>, Surd> dp;
    const std::int64_t zero = Vec(d).pack();
    dp[{s, zero, zero}] = Surd::from_int(1);
    for (int r = chain.L_ext; r >= 1; --r) {
      const LimitSpec& g = chain.steps[static_cast<size_t>(r - 1)];
      std::map<std::tuple<int, std::int64_t, std::int64_t>, Surd> next;
      for (const auto& [key, mass] : dp) {
        const auto& [state, base_key, slope_key] = key;
        const Vec base_acc = Vec::unpack(base_key, d);
        const Vec slope_acc = Vec::unpack(slope_key, d);
        for (const LimitEntry& entry : g.rows[static_cast<size_t>(state)])
          for (const LimitAtom& atom : entry.atoms) {
            const Surd add = mass * entry.prob * Surd::from_rational(atom.weight);
            auto& slot = next[{entry.target, (base_acc + atom.base).pack(),
                               (slope_acc + atom.slope).pack()}];
            slot = slot + add;
          }
      }
      dp = std::move(next);
    }
    for (const auto& [key, mass] : dp) {
      const auto& [state, base_key, slope_key] = key;
      chain.H[static_cast<size_t>(s)].push_back(
          {state, mass, Vec::unpack(base_key, d), Vec::unpack(slope_key, d)});
    }
  }

  // Transition matrix, stationary vector, and per-state displacement means.
  chain.P = SurdMatrix(states, states);
  chain.mean_base.assign(static_cast<size_t>(states), SurdVec(d));
  chain.mean_slope.assign(static_cast<size_t>(states), SurdVec(d));
  for (int s = 0; s < states; ++s)
    for (const AffineMass& am : chain.H[static_cast<size_t>(s)]) {
      chain.P.at(s, am.target) = chain.P.at(s, am.target) + am.mass;
      for (int cdim = 0; cdim < d; ++cdim) {
        chain.mean_base[static_cast<size_t>(s)][cdim] =
            chain.mean_base[static_cast<size_t>(s)][cdim] +
            am.mass * Surd::from_int(am.base[cdim]);
        chain.mean_slope[static_cast<size_t>(s)][cdim] =
            chain.mean_slope[static_cast<size_t>(s)][cdim] +
            am.mass * Surd::from_int(am.slope[cdim]);
      }
    }
  {
    // pi P = pi with sum(pi) = 1: stack the transposed system over a sum row.
    SurdMatrix A(states + 1, states);
    std::vector<Surd> rhs(static_cast<size_t>(states) + 1, Surd());
    for (int t = 0; t < states; ++t)
      for (int s = 0; s < states; ++s) {
        Surd v = chain.P.at(s, t);
        if (s == t) v = v - Surd::from_int(1);
        A.at(t, s) = v;
      }
    for (int s = 0; s < states; ++s) A.at(states, s) = Surd::from_int(1);
    rhs[static_cast<size_t>(states)] = Surd::from_int(1);
    chain.pi = solve_linear(A, rhs);
  }

  // Solvability of the drift system: pi . E(slope) must vanish exactly.
  chain.drift_solvable = true;
  for (int cdim = 0; cdim < d; ++cdim) {
    Surd acc;
    for (int s = 0; s < states; ++s)
      acc = acc + chain.pi[static_cast<size_t>(s)] * chain.mean_slope[static_cast<size_t>(s)][cdim];
    if (acc.sign() != 0) chain.drift_solvable = false;
  }

  // Centering: solve (I - P) mu = E(slope) with pi.mu = pi.E(base), then
  // (I - P) xi = E(base) - mu with pi.xi = 0, coordinate by coordinate.
  chain.mu.assign(static_cast<size_t>(states), SurdVec(d));
  chain.xi.assign(static_cast<size_t>(states), SurdVec(d));
  if (chain.drift_solvable) {
    for (int cdim = 0; cdim < d; ++cdim) {
      SurdMatrix A(states + 1, states);
      for (int s = 0; s < states; ++s)
        for (int t = 0; t < states; ++t) {
          Surd v = -chain.P.at(s, t);
          if (s == t) v = v + Surd::from_int(1);
          A.at(s, t) = v;
        }
      for (int t = 0; t < states; ++t) A.at(states, t) = chain.pi[static_cast<size_t>(t)];
      std::vector<Surd> rhs(static_cast<size_t>(states) + 1, Surd());
      Surd pi_base;
      for (int s = 0; s < states; ++s) {
        rhs[static_cast<size_t>(s)] = chain.mean_slope[static_cast<size_t>(s)][cdim];
        pi_base = pi_base + chain.pi[static_cast<size_t>(s)] *
                                chain.mean_base[static_cast<size_t>(s)][cdim];
      }
      rhs[static_cast<size_t>(states)] = pi_base;
      std::vector<Surd> mu_c = solve_linear(A, rhs);
      for (int s = 0; s < states; ++s) chain.mu[static_cast<size_t>(s)][cdim] = mu_c[static_cast<size_t>(s)];
      for (int s = 0; s < states; ++s)
        rhs[static_cast<size_t>(s)] =
            chain.mean_base[static_cast<size_t>(s)][cdim] - mu_c[static_cast<size_t>(s)];
      rhs[static_cast<size_t>(states)] = Surd();
      std::vector<Surd> xi_c = solve_linear(A, rhs);
      for (int s = 0; s < states; ++s) chain.xi[static_cast<size_t>(s)][cdim] = xi_c[static_cast<size_t>(s)];
    }
  }

  // Atomwise residual slope: slope == mu_s - mu_t for every transition atom.
  chain.slope_residual_zero = chain.drift_solvable;
  if (chain.drift_solvable)
    for (int s = 0; s < states && chain.slope_residual_zero; ++s)
      for (const AffineMass& am : chain.H[static_cast<size_t>(s)]) {
        for (int cdim = 0; cdim < d; ++cdim) {
          const Surd expect = chain.mu[static_cast<size_t>(s)][cdim] -
                              chain.mu[static_cast<size_t>(am.target)][cdim];
          if ((Surd::from_int(am.slope[cdim]) - expect).sign() != 0) {
            chain.slope_residual_zero = false;
            break;
          }
        }
        if (!chain.slope_residual_zero) break;
      }

  // Centered atoms b = base + xi_t - xi_s - mu_s, with exact zero means.
  chain.centered.resize(static_cast<size_t>(states));
  if (chain.drift_solvable) {
    for (int s = 0; s < states; ++s)
      for (const AffineMass& am : chain.H[static_cast<size_t>(s)]) {
        CenteredMass cm;
        cm.target = am.target;
        cm.mass = am.mass;
        cm.value = SurdVec(d);
        for (int cdim = 0; cdim < d; ++cdim)
          cm.value[cdim] = Surd::from_int(am.base[cdim]) +
                           chain.xi[static_cast<size_t>(am.target)][cdim] -
                           chain.xi[static_cast<size_t>(s)][cdim] -
                           chain.mu[static_cast<size_t>(s)][cdim];
        chain.centered[static_cast<size_t>(s)].push_back(std::move(cm));
      }
    chain.centered_mean_zero = true;
    for (int s = 0; s < states; ++s) {
      SurdVec mean(d);
      for (const CenteredMass& cm : chain.centered[static_cast<size_t>(s)])
        for (int cdim = 0; cdim < d; ++cdim)
          mean[cdim] = mean[cdim] + cm.mass * cm.value[cdim];
      if (!mean.is_zero()) chain.centered_mean_zero = false;
    }
    // Stationary second moment: the exact diffusion data.
    for (int s = 0; s < states; ++s)
      for (const CenteredMass& cm : chain.centered[static_cast<size_t>(s)])
        for (int c1 = 0; c1 < d; ++c1)
          for (int c2 = 0; c2 < d; ++c2)
            chain.sigma_exact[static_cast<size_t>(c1)][static_cast<size_t>(c2)] =
                chain.sigma_exact[static_cast<size_t>(c1)][static_cast<size_t>(c2)] +
                chain.pi[static_cast<size_t>(s)] * cm.mass * cm.value[c1] * cm.value[c2];
  }
  return chain;
}

}  // namespace renorm
