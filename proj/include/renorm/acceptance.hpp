#pragma once

// End-to-end verification battery.  Each check cross-validates one layer of
// the library against an independent witness: exact rotation orbits against
// substitution combinatorics, streamed enumeration against sparse recursion,
// Monte Carlo against exact laws, finite-difference spectral data against
// closed forms, and scaling bands against the renormalization predictions.
// Every tolerance is pinned here as a named constant; a check either runs
// honestly and reports, or fails with the thrown diagnostic attached.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "renorm/blocks.hpp"
#include "renorm/cf.hpp"
#include "renorm/config.hpp"
#include "renorm/dist.hpp"
#include "renorm/rat.hpp"
#include "renorm/report.hpp"
#include "renorm/rng.hpp"
#include "renorm/spectral.hpp"
#include "renorm/stats.hpp"

namespace renorm {

struct CheckResult {
  std::string id;
  std::string instance;
  bool pass = false;
  double seconds = 0.0;
  std::string detail;  // one-line human-readable metrics
  Json data;           // machine-readable metrics
};

/// Scale and tolerance constants for the verification battery.  The defaults
/// are the full gate; tests that only need a smoke pass may shrink them.
struct CheckOptions {
  int workers = 0;                 // 0 = RENORM_SKEW_THREADS or hardware
  std::int64_t prefix_n = 100'000;  // symbolic prefix / parity identity length
  std::int64_t orbit_n = 10'000;    // streamed-vs-direct orbit length
  std::int64_t orbit_probes = 1'000;  // random tree-descent probes
  int orbit_level = 30;               // probe indices drawn below len(level, 0)
  std::int64_t hist_ell_cap = 1'000'000;  // streamed histogram level bound
  std::int64_t tv_ell_cap = 1'000;        // sampler comparison level bound
  double tv_tol = 0.02;
  double unit_modulus_tol = 1e-9;
  int drift_grid = 10;              // affine certification at n = 0..drift_grid
  std::int64_t dk_q_cap = 100'000;  // principal denominators up to this bound
  double grad_tol = 1e-6;
  double curvature_rel_tol = 1e-3;
  std::vector<int> clt_levels = {10, 20, 30, 40};
  double clt_tol = 0.05;
  double clt_budget_seconds = 120.0;
  int band_k_min = 10, band_k_max = 40;
  double band_limit = 10.0;
  std::int64_t band_pair_samples = 10'000'000;
  std::int64_t band_stream_ell_cap = 1'000'000;
  std::int64_t band_sweep_cap = 2'000;
  int separation_m_max = 20;
};

namespace detail {

inline int euler_phi(int n) {
  int r = n;
  for (int p = 2; p * p <= n; ++p)
    if (n % p == 0) {
      while (n % p == 0) n /= p;
      r -= r / p;
    }
  if (n > 1) r -= r / n;
  return r;
}

/// Roots of a monic integer polynomial (low-to-high coefficients) via the
/// companion matrix.
inline std::vector<std::complex<double>> poly_roots(const std::vector<BigInt>& poly) {
  const int deg = static_cast<int>(poly.size()) - 1;
  if (deg < 1) return {};
  if (poly.back() != 1) throw internal_error("poly_roots: polynomial is not monic");
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) C(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i)
    C(i, deg - 1) = -poly[static_cast<size_t>(i)].convert_to<double>();
  Eigen::ComplexEigenSolver<Eigen::MatrixXd> solver(C, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw internal_error("poly_roots: eigensolver failed");
  std::vector<std::complex<double>> roots;
  for (int i = 0; i < deg; ++i) roots.push_back(solver.eigenvalues()(i));
  return roots;
}

inline IntMatrix matrix_power(const IntMatrix& A, int e) {
  IntMatrix r = IntMatrix::identity(A.rows);
  for (int i = 0; i < e; ++i) r = r * A;
  return r;
}

/// Cell index of the exact rotation orbit point {n alpha} in the Q-partition.
inline int exact_cell(const Surd& alpha, int Q, const BigInt& n) {
  const Surd x = (alpha * Surd::from_int(n)).frac();
  return static_cast<int>((x * Surd::from_int(Q)).floor().convert_to<int>());
}

inline std::string fmt3(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Individual checks.  Each takes a fresh model built from the config so that
// level tables are only as deep as the check requires.
// ---------------------------------------------------------------------------

/// Symbolic fidelity: the type-0 substitution word reproduces the rotation
/// coding psi_1..psi_N symbol for symbol.
inline CheckResult check_block_prefix(const InstanceConfig& cfg, const CheckOptions& opt) {
  CheckResult r;
  r.id = "block-prefix";
  RenormModel m = cfg.model();
  const std::int64_t N = opt.prefix_n;
  int k = 0;
  while (m.len(k, 0) < N) ++k;
  const auto [w0, w1] = symbol_blocks(m, k);
  const auto psi = psi_sequence(m.beta(), N);
  bool ok = true;
  for (std::int64_t n = 0; n < N && ok; ++n)
    ok = (psi[static_cast<size_t>(n)] == w0[static_cast<size_t>(n)]);
  r.pass = ok;
  r.detail = "N=" + std::to_string(N) + " level=" + std::to_string(k) +
             " word_len=" + std::to_string(w0.size());
  r.data = {{"N", N}, {"level", k}, {"word_len", w0.size()}, {"equal", ok}};
  return r;
}

/// Parity identity: the partition cell of {n alpha} equals
/// (n*P + sum of the first n coding symbols) mod Q, exactly.
inline CheckResult check_parity_congruence(const InstanceConfig& cfg,
                                           const CheckOptions& opt) {
  CheckResult r;
  r.id = "parity-congruence";
  RenormModel m = cfg.model();
  const std::int64_t N = opt.prefix_n;
  const int Q = m.Q();
  const std::int64_t P = m.P().convert_to<std::int64_t>();
  const auto kap = kappa_sequence(m.alpha(), Q, N + 1);
  const auto psi = psi_sequence(m.beta(), N);
  bool ok = true;
  std::int64_t sum = 0, first_bad = -1;
  for (std::int64_t n = 1; n <= N; ++n) {
    sum += psi[static_cast<size_t>(n - 1)];
    const int rhs = static_cast<int>((n * P + sum) % Q);
    if (kap[static_cast<size_t>(n)] != rhs) {
      ok = false;
      first_bad = n;
      break;
    }
  }
  r.pass = ok;
  r.detail = "N=" + std::to_string(N) + " P=" + std::to_string(P);
  r.data = {{"N", N}, {"P", P}, {"equal", ok}, {"first_mismatch", first_bad}};
  return r;
}

/// Orbit engine: the block-tree stream equals the direct exact-rotation sums
/// over a full prefix, and random-access descents reproduce the exact
/// rotation's step law at random indices far beyond enumerable range.
inline CheckResult check_orbit_engine(const InstanceConfig& cfg, const CheckOptions& opt) {
  CheckResult r;
  r.id = "orbit-engine";
  RenormModel m = cfg.model();
  const std::int64_t N = opt.orbit_n;
  const auto direct = birkhoff_direct(m.alpha(), m.cocycle(), Surd::from_int(0), N);
  bool stream_ok = true;
  {
    OrbitStream os(m, N);
    for (std::int64_t n = 1; n <= N; ++n, os.next())
      if (!(os.value() == direct[static_cast<size_t>(n - 1)])) {
        stream_ok = false;
        break;
      }
  }
  bool anchor_ok = true;
  for (std::int64_t n = 1; n <= std::min<std::int64_t>(N, 1000); ++n)
    if (!(birkhoff_at(m, n) == direct[static_cast<size_t>(n - 1)])) {
      anchor_ok = false;
      break;
    }
  // Far-range probes: the increment of the descent value at n must equal the
  // step value attached to the exact orbit point {n alpha}, computed in the
  // quadratic field with no tree involvement.
  bool probe_ok = true;
  const BigInt bound = m.len(opt.orbit_level, 0) - 1;
  CounterRng rng(cfg.seed, 0x0b17);
  for (std::int64_t t = 0; t < opt.orbit_probes && probe_ok; ++t) {
    const BigInt n = 1 + rng.next_below(bound);
    const Vec inc = birkhoff_at(m, n + 1) - birkhoff_at(m, n);
    const int cell = detail::exact_cell(m.alpha(), m.Q(), n);
    probe_ok = (inc == m.cocycle()(cell));
  }
  r.pass = stream_ok && anchor_ok && probe_ok;
  r.detail = "stream_n=" + std::to_string(N) + " probes=" + std::to_string(opt.orbit_probes) +
             " below_len(" + std::to_string(opt.orbit_level) + ",0)";
  r.data = {{"stream_n", N},
            {"stream_equal", stream_ok},
            {"anchor_equal", anchor_ok},
            {"probes", opt.orbit_probes},
            {"probe_equal", probe_ok},
            {"probe_bound", BigInt(bound + 1).str()}};
  return r;
}

/// Distribution recursion: the sparse level law V_k(0,0) equals the streamed
/// histogram of the first len_k(0) orbit sums, atom for atom.
inline CheckResult check_histogram_recursion(const InstanceConfig& cfg,
                                             const CheckOptions& opt) {
  CheckResult r;
  r.id = "histogram-recursion";
  RenormModel m = cfg.model();
  int k = 0;
  while (m.len(k + 1, 0) <= opt.hist_ell_cap) ++k;
  const std::int64_t N = m.len(k, 0).convert_to<std::int64_t>();
  const SparseDist V = temporal_distribution(m, k);
  std::map<std::int64_t, std::int64_t> hist;
  {
    OrbitStream os(m, N);
    for (std::int64_t n = 1; n <= N; ++n, os.next()) hist[os.value().pack()] += 1;
  }
  bool ok = (V.w.size() == hist.size()) && (V.total() == N);
  if (ok) {
    auto it = hist.begin();
    for (const auto& [key, w] : V.w) {
      if (it == hist.end() || it->first != key || BigInt(it->second) != w) {
        ok = false;
        break;
      }
      ++it;
    }
  }
  r.pass = ok;
  r.detail = "k=" + std::to_string(k) + " ell=" + std::to_string(N) +
             " atoms=" + std::to_string(V.w.size());
  r.data = {{"k", k}, {"ell", N}, {"atoms", V.w.size()}, {"equal", ok}};
  return r;
}

/// Monte Carlo sampler: the per-state empirical law of the descent-chain
/// sampler is within total-variation tolerance of the exact level law.
inline CheckResult check_sampler_tv(const InstanceConfig& cfg, const CheckOptions& opt) {
  CheckResult r;
  r.id = "sampler-tv";
  RenormModel m = cfg.model();
  int k = 1;
  while (m.len(k + 1, 0) <= opt.tv_ell_cap) ++k;
  const auto exact = dist_table(m, k);
  const auto emp = arw_sample(m, k, cfg.trials, cfg.seed, opt.workers);
  double worst = 0;
  Json per_state = Json::array();
  for (size_t s = 0; s < exact.size(); ++s) {
    const double tv = tv_distance(emp[s], exact[s]);
    per_state.push_back(tv);
    worst = std::max(worst, tv);
  }
  r.pass = worst <= opt.tv_tol;
  r.detail = "k=" + std::to_string(k) + " trials=" + std::to_string(cfg.trials) +
             " worst_tv=" + detail::fmt3(worst) + " tol=" + detail::fmt3(opt.tv_tol);
  r.data = {{"k", k},
            {"trials", cfg.trials},
            {"seed", cfg.seed},
            {"tv_per_state", per_state},
            {"tv_worst", worst},
            {"tol", opt.tv_tol}};
  return r;
}

/// Length-sector spectrum: the period matrix acts on constant vectors by an
/// integer 2x2 block with characteristic polynomial z^2 - J z + 1, J >= 3;
/// the complementary factor has all roots on the unit circle and is a
/// product of cyclotomics of degree at most 2(Q-1).
inline CheckResult check_length_spectrum(const InstanceConfig& cfg,
                                         const CheckOptions& opt) {
  CheckResult r;
  r.id = "length-spectrum";
  RenormModel m = cfg.model();
  const SpectralStructure s = spectral_structure(m);
  const int Q = m.Q();
  const bool trace_ok = s.trace >= 3;
  const int perp_deg = static_cast<int>(s.perp_charpoly.size()) - 1;
  const bool deg_ok = perp_deg == 2 * Q - 2 && perp_deg >= 1;
  // Root moduli: when the exact integer factorization into cyclotomics is
  // complete, every root is a root of unity and the moduli are exactly 1 —
  // a certificate stronger than any floating eigensolver (companion-matrix
  // eigenvalues of a root of multiplicity m are only O(eps^(1/m)) accurate).
  // Without a complete factorization, fall back to numeric roots.
  double worst_dev = 0;
  std::string modulus_method = "exact-cyclotomic";
  if (!s.perp_factors.complete) {
    modulus_method = "companion-eigenvalues";
    for (const auto& z : detail::poly_roots(s.perp_charpoly))
      worst_dev = std::max(worst_dev, std::abs(std::abs(z) - 1.0));
  }
  const bool unit_ok = worst_dev <= opt.unit_modulus_tol;
  bool cyc_ok = s.perp_factors.complete;
  int max_phi = 0;
  for (int ord : s.perp_factors.orders) {
    max_phi = std::max(max_phi, detail::euler_phi(ord));
    if (detail::euler_phi(ord) > 2 * (Q - 1)) cyc_ok = false;
  }
  r.pass = trace_ok && deg_ok && unit_ok && cyc_ok;
  r.detail = "J=" + s.trace.str() + " perp_deg=" + std::to_string(perp_deg) +
             " unit_dev=" + detail::fmt3(worst_dev) + " max_phi=" + std::to_string(max_phi);
  Json orders = Json::array();
  for (int ord : s.perp_factors.orders) orders.push_back(ord);
  r.data = {{"J", s.trace.str()},
            {"trace_ok", trace_ok},
            {"perp_degree", perp_deg},
            {"unit_modulus_dev", worst_dev},
            {"unit_modulus_method", modulus_method},
            {"unit_tol", opt.unit_modulus_tol},
            {"cyclotomic_orders", orders},
            {"cyclotomic_complete", s.perp_factors.complete},
            {"max_phi", max_phi},
            {"phi_limit", 2 * (Q - 1)}};
  return r;
}

/// Affine drift: along the extended period the offset tables are exactly
/// affine in the period index (second differences vanish in integer
/// arithmetic at n = 0..grid), and the extended period power of the step
/// matrix is entrywise positive.
inline CheckResult check_affine_drift(const InstanceConfig& cfg, const CheckOptions& opt) {
  CheckResult r;
  r.id = "affine-drift";
  RenormModel m = cfg.model();
  const PeriodStructure ps = period_extend(m);
  const bool affine_ok = ps.affine_certified && ps.certified_points >= opt.drift_grid + 1;
  const IntMatrix BM = detail::matrix_power(ps.spec.period, ps.spec.M);
  bool positive_ok = true;
  for (const BigInt& x : BM.a)
    if (x <= 0) {
      positive_ok = false;
      break;
    }
  r.pass = affine_ok && positive_ok;
  r.detail = "K=" + std::to_string(ps.K) + " L_ext=" + std::to_string(ps.L_ext) +
             " M=" + std::to_string(ps.spec.M) + " grid=" +
             std::to_string(ps.certified_points) + " positive=" +
             (positive_ok ? "yes" : "no");
  r.data = {{"K", ps.K},
            {"L", ps.spec.L},
            {"M", ps.spec.M},
            {"L_ext", ps.L_ext},
            {"affine_certified", ps.affine_certified},
            {"certified_points", ps.certified_points},
            {"power_positive", positive_ok},
            {"positivity_index", ps.spec.positivity}};
  return r;
}

/// Uniform sum bound: along every principal denominator q <= cap the full
/// orbit sum phi_q stays within the step function's total variation, checked
/// by an exact breakpoint sweep over the whole circle.
inline CheckResult check_dk_bound(const InstanceConfig& cfg, const CheckOptions& opt) {
  CheckResult r;
  r.id = "dk-bound";
  RenormModel m = cfg.model();
  const SupSweepReport rep = dk_check(m, opt.dk_q_cap);
  r.pass = rep.inf_ok && rep.coord_ok;
  std::int64_t worst = 0;
  for (const auto& e : rep.entries) worst = std::max(worst, e.sup_inf);
  r.detail = "q_count=" + std::to_string(rep.entries.size()) +
             " sup=" + std::to_string(worst) +
             " variation=" + std::to_string(rep.variation_inf);
  Json qs = Json::array();
  for (const auto& e : rep.entries) qs.push_back(e.q);
  r.data = {{"q_cap", opt.dk_q_cap},
            {"q_count", rep.entries.size()},
            {"denominators", qs},
            {"sup_worst", worst},
            {"variation", rep.variation_inf},
            {"inf_ok", rep.inf_ok},
            {"coord_ok", rep.coord_ok}};
  return r;
}

/// Spectral consistency: the dominant-eigenvalue gradient vanishes at the
/// origin, finite-difference curvature matches the exact covariance under
/// the 2 pi^2 normalization, the curvature is positive definite, and the
/// torus norm scan shows a strictly positive bulk gap.
inline CheckResult check_spectral_diffusion(const InstanceConfig& cfg,
                                            const CheckOptions& opt) {
  CheckResult r;
  r.id = "spectral-diffusion";
  RenormModel m = cfg.model();
  const PeriodStructure ps = period_extend(m);
  const LimitChain chain = rat_limit_build(m, ps);
  const LimitCharModel model = chain.char_model();
  const CharMatrixFn fn = model.fn();
  const int n = model.n, d = m.dim();

  const bool exact_ok = chain.c_periodic && chain.drift_solvable &&
                        chain.slope_residual_zero && chain.centered_mean_zero;

  const auto grad = perron_gradient(fn, n, d);
  double gnorm = 0;
  for (int i = 0; i < d; ++i) gnorm += std::norm(grad[static_cast<size_t>(i)]);
  gnorm = std::sqrt(gnorm);
  const bool grad_ok = gnorm <= opt.grad_tol;

  const auto Dfd = diffusion_fd(fn, n, d);
  const auto Dex = chain.curvature();
  double scale = 0, dev = 0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      scale = std::max(scale, std::abs(Dex[static_cast<size_t>(i)][static_cast<size_t>(j)]));
      dev = std::max(dev, std::abs(Dfd[static_cast<size_t>(i)][static_cast<size_t>(j)] -
                                   Dex[static_cast<size_t>(i)][static_cast<size_t>(j)]));
    }
  const double rel = scale > 0 ? dev / scale : 1e300;
  const bool curv_ok = rel <= opt.curvature_rel_tol;

  Eigen::MatrixXd D(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      D(i, j) = Dex[static_cast<size_t>(i)][static_cast<size_t>(j)];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
  const double min_eig = es.eigenvalues().minCoeff();
  const bool posdef_ok = min_eig > 0;

  const int grid = d == 1 ? 256 : 64;
  const AdaptednessScan scan = adaptedness_scan(fn, n, d, grid);
  const bool scan_ok = scan.eps_hat > 0 && scan.c_hat > 0 &&
                       std::abs(scan.norm_at_zero - 1.0) <= 1e-12;

  r.pass = exact_ok && grad_ok && curv_ok && posdef_ok && scan_ok;
  r.detail = "grad=" + detail::fmt3(gnorm) + " curv_rel=" + detail::fmt3(rel) +
             " min_eig=" + detail::fmt3(min_eig) + " eps_hat=" + detail::fmt3(scan.eps_hat);
  r.data = {{"grad_norm", gnorm},
            {"grad_tol", opt.grad_tol},
            {"curvature_rel_err", rel},
            {"curvature_rel_tol", opt.curvature_rel_tol},
            {"curvature_min_eig", min_eig},
            {"eps_hat", scan.eps_hat},
            {"c_hat", scan.c_hat},
            {"norm_at_zero", scan.norm_at_zero},
            {"scan_grid", grid},
            {"chain_exact_certificates", exact_ok}};
  return r;
}

/// Distributional convergence of the uniformly-sampled orbit sums: the
/// continuity-corrected per-coordinate distance to the matched Gaussian is
/// monotonically nonincreasing along the checkpoint levels and small at the
/// last one.  The plain (uncorrected) distance is reported alongside; for a
/// lattice law it is bounded below by half the largest atom, so the
/// corrected statistic is the one that measures distributional shape.
inline CheckResult check_temporal_clt(const InstanceConfig& cfg, const CheckOptions& opt) {
  CheckResult r;
  r.id = "temporal-clt";
  RenormModel m = cfg.model();
  const int d = m.dim();
  std::vector<CltReport> reps;
  for (int k : opt.clt_levels) reps.push_back(temporal_clt_check(m, k));
  bool monotone = true;
  for (size_t t = 1; t < reps.size(); ++t)
    for (int c = 0; c < d; ++c)
      if (reps[t].ks_mid_coord[static_cast<size_t>(c)] >
          reps[t - 1].ks_mid_coord[static_cast<size_t>(c)] + 1e-15)
        monotone = false;
  const double final_mid = reps.back().ks_mid;
  const bool final_ok = final_mid <= opt.clt_tol;
  r.pass = monotone && final_ok;
  std::string series;
  Json levels = Json::array();
  for (size_t t = 0; t < reps.size(); ++t) {
    if (t) series += " ";
    series += detail::fmt3(reps[t].ks_mid);
    Json coords = Json::array(), plain = Json::array();
    for (int c = 0; c < d; ++c) {
      coords.push_back(reps[t].ks_mid_coord[static_cast<size_t>(c)]);
      plain.push_back(reps[t].ks_coord[static_cast<size_t>(c)]);
    }
    levels.push_back({{"k", reps[t].k},
                      {"ks_mid_coord", coords},
                      {"ks_coord", plain},
                      {"ks_mid", reps[t].ks_mid},
                      {"ks", reps[t].ks},
                      {"ks_box", reps[t].ks_box}});
  }
  r.detail = "ks_mid=[" + series + "] tol=" + detail::fmt3(opt.clt_tol) +
             (monotone ? " monotone" : " NOT-monotone");
  r.data = {{"levels", levels},
            {"monotone", monotone},
            {"final_ks_mid", final_mid},
            {"tol", opt.clt_tol},
            {"budget_seconds", opt.clt_budget_seconds}};
  return r;
}

namespace detail {

/// Shared scaling-band computation for the characteristic-integral and
/// visit-ratio checks, run once per instance.
struct BandBundle {
  ReturnSeqReport report;
  double seconds = 0;
};

inline BandBundle band_bundle(const InstanceConfig& cfg, const CheckOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  RenormModel m = cfg.model();
  BandBundle b;
  b.report = return_seq_estimate(m, opt.band_k_min, opt.band_k_max, opt.band_pair_samples,
                                 BigInt(opt.band_stream_ell_cap), opt.band_sweep_cap,
                                 opt.workers);
  b.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return b;
}

}  // namespace detail

/// Characteristic-integral scaling: k^{d/2} times the L^2 mass of the level
/// characteristic function (exact, by summing squared atom weights) stays in
/// a band of bounded ratio over the checkpoint range, and the p = 1
/// quadrature values stay within the same band.
inline CheckResult check_char_band(const InstanceConfig&, const CheckOptions& opt,
                                   const ReturnSeqReport& rep) {
  CheckResult r;
  r.id = "char-band";
  const bool w2_ok = rep.w2_band <= opt.band_limit;
  const bool union_ok = rep.w_union_band <= opt.band_limit;
  r.pass = w2_ok && union_ok;
  r.detail = "w2_band=" + detail::fmt3(rep.w2_band) +
             " w_union_band=" + detail::fmt3(rep.w_union_band) +
             " limit=" + detail::fmt3(opt.band_limit);
  r.data = {{"k_min", opt.band_k_min},
            {"k_max", opt.band_k_max},
            {"w2_min", rep.w2_min},
            {"w2_max", rep.w2_max},
            {"w2_band", rep.w2_band},
            {"w1_min", rep.w1_min},
            {"w1_max", rep.w1_max},
            {"w_union_band", rep.w_union_band},
            {"limit", opt.band_limit}};
  return r;
}

/// Visit-count scaling: k^{d/2} times the zero-visit frequency of the level
/// blocks stays in a bounded band; the pair-correlation estimate of the
/// visit integral is consistent with that band; and the exact two-sided
/// visit bounds hold at every level small enough to sweep.
inline CheckResult check_visit_ratio(const InstanceConfig&, const CheckOptions& opt,
                                     const ReturnSeqReport& rep) {
  CheckResult r;
  r.id = "visit-ratio";
  const bool r0_ok = rep.r0_band <= opt.band_limit;
  const bool union_ok = rep.union_band <= opt.band_limit;
  const bool bounds_ok = rep.bounds_ok && !rep.bounds.empty();
  r.pass = r0_ok && union_ok && bounds_ok;
  r.detail = "r0_band=" + detail::fmt3(rep.r0_band) +
             " union_band=" + detail::fmt3(rep.union_band) + " bound_levels=" +
             std::to_string(rep.bounds.size()) + (bounds_ok ? " bounds_ok" : " BOUNDS-FAIL");
  Json bounds = Json::array();
  for (const auto& b : rep.bounds)
    bounds.push_back({{"k", b.k},
                      {"integral", b.integral_value},
                      {"lower_ok", b.lower_ok},
                      {"upper_ok", b.upper_ok}});
  r.data = {{"r0_min", rep.r0_min},
            {"r0_max", rep.r0_max},
            {"r0_band", rep.r0_band},
            {"union_band", rep.union_band},
            {"pair_samples", opt.band_pair_samples},
            {"bounds", bounds},
            {"bounds_ok", bounds_ok},
            {"limit", opt.band_limit}};
  return r;
}

/// Separation diagnostic: the scaled distance from l/Q to the rotation orbit
/// stays bounded away from zero along principal denominators.
inline CheckResult check_separation_scan(const InstanceConfig& cfg,
                                         const CheckOptions& opt) {
  CheckResult r;
  r.id = "separation-scan";
  const auto rows = disc_subsequence_check(cfg.alpha, cfg.Q, opt.separation_m_max);
  bool ok = !rows.empty();
  double min_product = 1e300;
  for (const auto& row : rows) {
    if (!(row.value.sign() > 0) || !(row.product > 0)) ok = false;
    min_product = std::min(min_product, row.product);
  }
  r.pass = ok;
  r.detail = "rows=" + std::to_string(rows.size()) +
             " min_scaled=" + detail::fmt3(min_product);
  Json jrows = Json::array();
  for (const auto& row : rows)
    jrows.push_back({{"m", row.m}, {"q", row.q.str()}, {"product", row.product}});
  r.data = {{"m_max", opt.separation_m_max}, {"rows", jrows}, {"all_positive", ok}};
  return r;
}

// ---------------------------------------------------------------------------
// Battery driver.
// ---------------------------------------------------------------------------

struct BatteryResult {
  std::vector<CheckResult> checks;
  std::optional<ReturnSeqReport> bands;  // the scaling-band table, for reports
};

inline BatteryResult run_instance_checks(const InstanceConfig& cfg,
                                         const CheckOptions& opt = {},
                                         const std::string& label = "") {
  std::vector<CheckResult> out;
  std::optional<ReturnSeqReport> bands;
  auto run = [&](auto&& fn, const char* id) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r.id = id;
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
      r.data = {{"exception", e.what()}};
    }
    r.instance = label.empty() ? cfg.origin : label;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(r));
  };

  run([&] { return check_block_prefix(cfg, opt); }, "block-prefix");
  run([&] { return check_parity_congruence(cfg, opt); }, "parity-congruence");
  run([&] { return check_orbit_engine(cfg, opt); }, "orbit-engine");
  run([&] { return check_histogram_recursion(cfg, opt); }, "histogram-recursion");
  run([&] { return check_sampler_tv(cfg, opt); }, "sampler-tv");
  run([&] { return check_length_spectrum(cfg, opt); }, "length-spectrum");
  run([&] { return check_affine_drift(cfg, opt); }, "affine-drift");
  run([&] { return check_dk_bound(cfg, opt); }, "dk-bound");
  run([&] { return check_spectral_diffusion(cfg, opt); }, "spectral-diffusion");
  run([&] { return check_temporal_clt(cfg, opt); }, "temporal-clt");
  run(
      [&] {
        bands = detail::band_bundle(cfg, opt).report;
        return check_char_band(cfg, opt, *bands);
      },
      "char-band");
  run(
      [&] {
        if (!bands) {
          RenormModel m = cfg.model();
          bands = return_seq_estimate(m, opt.band_k_min, opt.band_k_max,
                                      opt.band_pair_samples,
                                      BigInt(opt.band_stream_ell_cap),
                                      opt.band_sweep_cap, opt.workers);
        }
        return check_visit_ratio(cfg, opt, *bands);
      },
      "visit-ratio");
  run([&] { return check_separation_scan(cfg, opt); }, "separation-scan");
  return BatteryResult{std::move(out), std::move(bands)};
}

/// Per-level scaling table in the pinned column layout.  `ks` is the plain
/// two-sided distance (lower-bounded by half the largest atom for a lattice
/// law); the corrected statistic lives in the JSON battery output.
inline Table ratio_table(const ReturnSeqReport& rep) {
  Table t;
  t.columns = {"k", "ratio0", "ratio1", "ks", "wrllt_p1", "wrllt_p2"};
  for (const auto& row : rep.rows)
    t.add_row({std::to_string(row.k), fmt_double(row.ratio0),
               row.ratio1 ? fmt_double(*row.ratio1) : "", fmt_double(row.ks),
               fmt_double(row.w1_scaled), fmt_double(row.w2_scaled)});
  return t;
}

inline bool all_pass(const std::vector<CheckResult>& checks) {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

inline Json checks_json(const std::vector<CheckResult>& checks) {
  Json arr = Json::array();
  for (const auto& c : checks)
    arr.push_back({{"id", c.id},
                   {"instance", c.instance},
                   {"pass", c.pass},
                   {"seconds", c.seconds},
                   {"detail", c.detail},
                   {"data", c.data}});
  return arr;
}

}  // namespace renorm
