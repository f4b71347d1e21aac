// Command-line front end.
//
// Subcommands:
//   cf        continued-fraction expansions and the orbit-separation table
//   blocks    level table and symbolic block words
//   orbit     streamed orbit sums with plot data
//   dist      exact level displacement laws (moments; --dump writes atoms)
//   rat       descent-chain spec dump, sampler dump, and TV comparison
//   spectral  period matrix spectrum, drift chain, and diffusion report
//   verify    full verification battery with machine-readable results
//
// Exit codes: 0 ok, 1 check failure, 2 usage, 3 config, 4 cap exceeded,
// 5 internal error.  RENORM_SKEW_THREADS caps worker threads.

#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "renorm/acceptance.hpp"

namespace {

using namespace renorm;

struct CliArgs {
  std::string config_path;
  int k = -1;  // -1: per-subcommand default
  std::int64_t trials = -1;
  std::int64_t seed = -1;
  std::string out_dir;
  std::string format;
  bool dump = false;
};

InstanceConfig load(const CliArgs& a) {
  InstanceConfig cfg = parse_config(a.config_path);
  if (a.trials >= 0) cfg.trials = a.trials;
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
  if (!a.format.empty()) cfg.format = a.format;
  if (cfg.format != "csv" && cfg.format != "json")
    throw config_error("format must be csv or json");
  return cfg;
}

std::string out_path(const InstanceConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

/// Largest k with len(k, 0) <= cap.
int level_below(RenormModel& m, std::int64_t cap, int k_min = 1) {
  int k = k_min;
  while (m.len(k + 1, 0) <= cap) ++k;
  return k;
}

// ---------------------------------------------------------------------------

int cmd_cf(const CliArgs& args) {
  InstanceConfig cfg = load(args);
  RenormModel m = cfg.model();
  const CFExpansion reg = regular_cf(cfg.alpha);
  std::printf("alpha          = %s ~ %.12f\n", cfg.alpha.str().c_str(),
              cfg.alpha.to_double());
  std::printf("regular_cf     = %s\n", reg.str().c_str());
  std::printf("beta           = %s ~ %.12f\n", m.beta().str().c_str(),
              m.beta().to_double());
  std::printf("partition_cf   = %s\n", m.partition_cf().str().c_str());
  std::printf("P              = %s\n", m.P().str().c_str());
  const auto qs = principal_denominators(cfg.alpha, 100000, cfg.caps.cf);
  std::string qline;
  for (size_t i = 0; i < qs.size(); ++i)
    qline += (i ? "," : "") + std::to_string(qs[i]);
  std::printf("principal_q    = %s\n", qline.c_str());

  Table sep;
  sep.add_meta("alpha", cfg.alpha.str());
  sep.add_meta("Q", std::to_string(cfg.Q));
  sep.columns = {"m", "q", "l", "j", "scaled_separation"};
  for (const auto& row : disc_subsequence_check(cfg.alpha, cfg.Q, 20)) {
    sep.add_row({std::to_string(row.m), row.q.str(), std::to_string(row.l),
                 std::to_string(row.j), fmt_double(row.product)});
  }
  const std::string path = sep.save(cfg.out_dir, "separation", cfg.format);
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

int cmd_blocks(const CliArgs& args) {
  InstanceConfig cfg = load(args);
  RenormModel m = cfg.model();
  const int K = args.k >= 0 ? args.k : std::min(cfg.k_max, 40);
  Table t;
  t.add_meta("alpha", cfg.alpha.str());
  t.add_meta("k_max", std::to_string(K));
  t.columns = {"k", "digit", "len0", "len1", "eps0", "eps1"};
  for (int k = 0; k <= K; ++k)
    t.add_row({std::to_string(k), std::to_string(k >= 1 ? m.digit(k) : 0),
               m.len(k, 0).str(), m.len(k, 1).str(), std::to_string(m.eps(k, 0)),
               std::to_string(m.eps(k, 1))});
  const std::string path = t.save(cfg.out_dir, "levels", cfg.format);
  std::printf("levels up to k=%d, len(%d,0)=%s\n", K, K, m.len(K, 0).str().c_str());
  std::printf("wrote %s\n", path.c_str());

  const int kw = args.k >= 0 ? args.k : level_below(m, 10000);
  if (m.len(kw, 0) + m.len(kw, 1) <= 100000) {
    const auto [w0, w1] = symbol_blocks(m, kw);
    auto to_str = [](const std::vector<std::uint8_t>& w) {
      std::string s;
      for (auto v : w) s += static_cast<char>('0' + v);
      return s;
    };
    const std::string s0 = to_str(w0), s1 = to_str(w1);
    std::printf("word(%d,0) len=%zu: %.60s%s\n", kw, s0.size(), s0.c_str(),
                s0.size() > 60 ? "..." : "");
    std::printf("word(%d,1) len=%zu: %.60s%s\n", kw, s1.size(), s1.c_str(),
                s1.size() > 60 ? "..." : "");
    write_text_file(out_path(cfg, "word0.txt"), s0 + "\n");
    write_text_file(out_path(cfg, "word1.txt"), s1 + "\n");
    std::printf("wrote %s, %s\n", out_path(cfg, "word0.txt").c_str(),
                out_path(cfg, "word1.txt").c_str());
  }
  return 0;
}

int cmd_orbit(const CliArgs& args) {
  InstanceConfig cfg = load(args);
  RenormModel m = cfg.model();
  const int k = args.k >= 0 ? args.k : level_below(m, 10000);
  const std::int64_t N = m.len(k, 0).convert_to<std::int64_t>();
  const int d = m.dim();

  Table t;
  t.add_meta("alpha", cfg.alpha.str());
  t.add_meta("k", std::to_string(k));
  t.add_meta("n", std::to_string(N));
  t.columns = {"n"};
  for (int c = 0; c < d; ++c) t.columns.push_back("nu_" + std::to_string(c + 1));
  std::vector<std::vector<std::pair<double, double>>> plots(static_cast<size_t>(d));
  std::int64_t zero_visits = 0;
  Vec last(d);
  {
    OrbitStream os(m, N);
    for (std::int64_t n = 1; n <= N; ++n, os.next()) {
      const Vec& v = os.value();
      std::vector<std::string> row{std::to_string(n)};
      bool zero = true;
      for (int c = 0; c < d; ++c) {
        row.push_back(std::to_string(v[c]));
        plots[static_cast<size_t>(c)].emplace_back(static_cast<double>(n),
                                                   static_cast<double>(v[c]));
        zero = zero && v[c] == 0;
      }
      if (zero) ++zero_visits;
      t.add_row(std::move(row));
      last = v;
    }
  }
  const std::string path = t.save(cfg.out_dir, "orbit", cfg.format);
  std::printf("orbit: k=%d n=%lld zero_visits=%lld final=(", k,
              static_cast<long long>(N), static_cast<long long>(zero_visits));
  for (int c = 0; c < d; ++c)
    std::printf("%s%lld", c ? "," : "", static_cast<long long>(last[c]));
  std::printf(")\n");
  std::printf("wrote %s\n", path.c_str());
  for (int c = 0; c < d; ++c) {
    const std::string p = out_path(cfg, "orbit_c" + std::to_string(c + 1) + ".dat");
    write_text_file(p, plot_xy(plots[static_cast<size_t>(c)],
                               "orbit sums, coordinate " + std::to_string(c + 1)));
    std::printf("wrote %s\n", p.c_str());
  }
  return 0;
}

int cmd_dist(const CliArgs& args) {
  InstanceConfig cfg = load(args);
  RenormModel m = cfg.model();
  const int k = args.k >= 0 ? args.k : cfg.k_max;
  const int Q = m.Q(), d = m.dim();
  const auto moments = moment_table(m, k);
  for (int i = 0; i < 2; ++i)
    for (int e = 0; e < Q; ++e) {
      const Moments& mo = moments[static_cast<size_t>(i * Q + e)];
      std::printf("state (i=%d,eps=%d): ell=%s mean=(", i, e,
                  m.len(k, i).str().c_str());
      for (int c = 0; c < d; ++c)
        std::printf("%s%.6f", c ? "," : "", rat_to_double(mo.mean(c)));
      std::printf(") var=(");
      for (int c = 0; c < d; ++c)
        std::printf("%s%.6f", c ? "," : "", rat_to_double(mo.cov(c, c)));
      std::printf(")\n");
    }
  if (args.dump) {
    const auto table = dist_table(m, k);
    for (int i = 0; i < 2; ++i)
      for (int e = 0; e < Q; ++e) {
        const SparseDist& D = table[static_cast<size_t>(i * Q + e)];
        Table t;
        t.add_meta("k", std::to_string(k));
        t.add_meta("i", std::to_string(i));
        t.add_meta("eps", std::to_string(e));
        t.add_meta("ell", m.len(k, i).str());
        for (int c = 0; c < d; ++c) t.columns.push_back("nu_" + std::to_string(c + 1));
        t.columns.push_back("weight");
        for (const auto& [key, w] : D.w) {
          const Vec v = Vec::unpack(key, d);
          std::vector<std::string> row;
          for (int c = 0; c < d; ++c) row.push_back(std::to_string(v[c]));
          row.push_back(w.str());
          t.add_row(std::move(row));
        }
        const std::string stem =
            "dist_k" + std::to_string(k) + "_i" + std::to_string(i) + "_e" +
            std::to_string(e);
        std::printf("wrote %s\n", t.save(cfg.out_dir, stem, cfg.format).c_str());
      }
  }
  return 0;
}

int cmd_rat(const CliArgs& args) {
  InstanceConfig cfg = load(args);
  RenormModel m = cfg.model();
  const int k = args.k >= 0 ? args.k : level_below(m, 1000);
  const int Q = m.Q(), d = m.dim();

  // Exact chain spec with rational masses.
  const RatSpec spec = rat_build(m, k);
  Json jspec;
  jspec["Q"] = spec.Q;
  jspec["d"] = spec.d;
  jspec["level"] = spec.level;
  Json rows = Json::array();
  for (int s = 0; s < 2 * Q; ++s) {
    Json row = Json::array();
    for (const RatEntry& e : spec.rows[static_cast<size_t>(s)]) {
      Json atoms = Json::array();
      for (const RatAtom& a : e.atoms) {
        Json val = Json::array();
        for (int c = 0; c < d; ++c) val.push_back(a.value[c]);
        atoms.push_back({{"value", val}, {"weight", fmt_rat(a.weight)}});
      }
      row.push_back({{"target", e.target}, {"prob", fmt_rat(e.prob)}, {"atoms", atoms}});
    }
    rows.push_back(row);
  }
  jspec["rows"] = rows;
  save_json(out_path(cfg, "rat_spec.json"), jspec);
  std::printf("wrote %s\n", out_path(cfg, "rat_spec.json").c_str());

  // Sampler dump and total-variation comparison against the exact laws.
  const auto emp = arw_sample(m, k, cfg.trials, cfg.seed);
  const auto exact = dist_table(m, k);
  Table t;
  t.add_meta("k", std::to_string(k));
  t.add_meta("trials", std::to_string(cfg.trials));
  t.add_meta("seed", std::to_string(cfg.seed));
  t.columns = {"s_i", "s_eps"};
  for (int c = 0; c < d; ++c) t.columns.push_back("nu_" + std::to_string(c + 1));
  t.columns.push_back("count");
  double worst = 0;
  for (int s = 0; s < 2 * Q; ++s) {
    for (const auto& [key, w] : emp[static_cast<size_t>(s)].w) {
      const Vec v = Vec::unpack(key, d);
      std::vector<std::string> row{std::to_string(s / Q), std::to_string(s % Q)};
      for (int c = 0; c < d; ++c) row.push_back(std::to_string(v[c]));
      row.push_back(w.str());
      t.add_row(std::move(row));
    }
    const double tv = tv_distance(emp[static_cast<size_t>(s)],
                                  exact[static_cast<size_t>(s)]);
    std::printf("state (i=%d,eps=%d): tv=%.5f\n", s / Q, s % Q, tv);
    worst = std::max(worst, tv);
  }
  std::printf("worst tv=%.5f (k=%d, trials=%lld)\n", worst, k,
              static_cast<long long>(cfg.trials));
  std::printf("wrote %s\n", t.save(cfg.out_dir, "rat_samples", cfg.format).c_str());
  return 0;
}

int cmd_spectral(const CliArgs& args) {
  InstanceConfig cfg = load(args);
  RenormModel m = cfg.model();
  const PeriodStructure ps = period_extend(m);
  const SpectralStructure& s = ps.spec;
  const LimitChain chain = rat_limit_build(m, ps);
  const LimitCharModel model = chain.char_model();
  const CharMatrixFn fn = model.fn();
  const int n = model.n, d = m.dim();

  auto int_matrix = [](const IntMatrix& M) {
    Json rows = Json::array();
    for (int i = 0; i < M.rows; ++i) {
      Json row = Json::array();
      for (int j = 0; j < M.cols; ++j) row.push_back(M.at(i, j).str());
      rows.push_back(row);
    }
    return rows;
  };
  auto int_poly = [](const std::vector<BigInt>& p) {
    Json arr = Json::array();
    for (const BigInt& c : p) arr.push_back(c.str());
    return arr;
  };

  Json j;
  j["K"] = s.K;
  j["L"] = s.L;
  j["M"] = s.M;
  j["L_ext"] = s.L_ext;
  j["positivity_index"] = s.positivity;
  j["period_matrix"] = int_matrix(s.period);
  j["length_block"] = int_matrix(s.length_block);
  j["J"] = s.trace.str();
  j["charpoly"] = int_poly(s.charpoly);
  j["length_charpoly"] = int_poly(s.length_charpoly);
  j["perp_charpoly"] = int_poly(s.perp_charpoly);
  Json orders = Json::array();
  for (int ord : s.perp_factors.orders) orders.push_back(ord);
  j["cyclotomic_orders"] = orders;
  j["cyclotomic_complete"] = s.perp_factors.complete;
  j["affine_certified"] = ps.affine_certified;
  j["lambda"] = chain.lambda.str();
  j["lambda_value"] = chain.lambda.to_double();
  j["chain_certificates"] = {{"c_periodic", chain.c_periodic},
                             {"drift_solvable", chain.drift_solvable},
                             {"slope_residual_zero", chain.slope_residual_zero},
                             {"centered_mean_zero", chain.centered_mean_zero}};
  const auto grad = perron_gradient(fn, n, d);
  Json jgrad = Json::array();
  for (int i = 0; i < d; ++i)
    jgrad.push_back({grad[static_cast<size_t>(i)].real(),
                     grad[static_cast<size_t>(i)].imag()});
  j["grad_lambda_at_zero"] = jgrad;
  const auto Dfd = diffusion_fd(fn, n, d);
  const auto Dex = chain.curvature();
  Json jfd = Json::array(), jex = Json::array();
  for (int i = 0; i < d; ++i) {
    Json rf = Json::array(), re = Json::array();
    for (int jj = 0; jj < d; ++jj) {
      rf.push_back(Dfd[static_cast<size_t>(i)][static_cast<size_t>(jj)]);
      re.push_back(Dex[static_cast<size_t>(i)][static_cast<size_t>(jj)]);
    }
    jfd.push_back(rf);
    jex.push_back(re);
  }
  j["curvature_fd"] = jfd;
  j["curvature_exact"] = jex;
  const AdaptednessScan scan = adaptedness_scan(fn, n, d, d == 1 ? 256 : 64);
  j["scan"] = {{"norm_at_zero", scan.norm_at_zero},
               {"r_hat", scan.r_hat},
               {"eps_hat", scan.eps_hat},
               {"c_hat", scan.c_hat}};
  save_json(out_path(cfg, "spectral.json"), j);

  std::printf("J=%s  lambda=%s ~ %.6f\n", s.trace.str().c_str(),
              chain.lambda.str().c_str(), chain.lambda.to_double());
  std::printf("K=%d L=%d M=%d L_ext=%d positivity=%d affine=%s\n", s.K, s.L, s.M,
              s.L_ext, s.positivity, ps.affine_certified ? "yes" : "no");
  std::printf("eps_hat=%.6f c_hat=%.6f\n", scan.eps_hat, scan.c_hat);
  std::printf("wrote %s\n", out_path(cfg, "spectral.json").c_str());
  return 0;
}

int cmd_verify(const CliArgs& args) {
  InstanceConfig cfg = load(args);
  if (!cfg.lattice.full_lattice) {
    std::fprintf(stderr,
                 "verify: step values do not generate the full integer lattice "
                 "(rank %d); the local limit normalization would be wrong\n",
                 cfg.lattice.rank);
    return 1;
  }
  CheckOptions opt;
  const BatteryResult result = run_instance_checks(cfg, opt, cfg.origin);
  for (const auto& c : result.checks)
    std::printf("[%s] %-20s (%6.2fs) %s\n", c.pass ? "PASS" : "FAIL", c.id.c_str(),
                c.seconds, c.detail.c_str());
  const bool ok = all_pass(result.checks);

  Json summary;
  summary["instance"] = cfg.origin;
  summary["alpha"] = cfg.alpha.str();
  summary["Q"] = cfg.Q;
  summary["d"] = cfg.d;
  summary["all_pass"] = ok;
  summary["checks"] = checks_json(result.checks);
  save_json(out_path(cfg, "verify.json"), summary);
  std::printf("wrote %s\n", out_path(cfg, "verify.json").c_str());

  if (result.bands) {
    Table t = ratio_table(*result.bands);
    t.meta.insert(t.meta.begin(), {"alpha", cfg.alpha.str()});
    std::printf("wrote %s\n", t.save(cfg.out_dir, "ratio_table", cfg.format).c_str());
    std::vector<std::pair<double, double>> p0, pks, pw;
    for (const auto& row : result.bands->rows) {
      p0.emplace_back(row.k, row.ratio0);
      pks.emplace_back(row.k, row.ks);
      pw.emplace_back(row.k, row.w2_scaled);
    }
    write_text_file(out_path(cfg, "ratio0.dat"),
                    plot_xy(p0, "scaled zero-visit frequency per level"));
    write_text_file(out_path(cfg, "ks.dat"),
                    plot_xy(pks, "per-level distance to matched Gaussian"));
    write_text_file(out_path(cfg, "wrllt.dat"),
                    plot_xy(pw, "scaled characteristic-function L2 mass per level"));
    std::printf("wrote %s, %s, %s\n", out_path(cfg, "ratio0.dat").c_str(),
                out_path(cfg, "ks.dat").c_str(), out_path(cfg, "wrllt.dat").c_str());
  }
  std::printf("verify: %s\n", ok ? "all checks passed" : "CHECK FAILURES PRESENT");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"renormalization toolkit for step-function skew products over "
               "quadratic-irrational rotations"};
  app.require_subcommand(1);
  CliArgs args;

  auto add_common = [&](CLI::App* sub, bool with_k = true) {
    sub->add_option("--config", args.config_path, "instance config file")->required();
    if (with_k) sub->add_option("--k", args.k, "level index");
    sub->add_option("--trials", args.trials, "Monte Carlo trials");
    sub->add_option("--seed", args.seed, "random seed");
    sub->add_option("--out", args.out_dir, "output directory");
    sub->add_option("--format", args.format, "table format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
  };

  std::function<int()> selected;
  CLI::App* c_cf = app.add_subcommand("cf", "continued fractions and separation table");
  add_common(c_cf, false);
  c_cf->callback([&] { selected = [&] { return cmd_cf(args); }; });

  CLI::App* c_blocks = app.add_subcommand("blocks", "level table and block words");
  add_common(c_blocks);
  c_blocks->callback([&] { selected = [&] { return cmd_blocks(args); }; });

  CLI::App* c_orbit = app.add_subcommand("orbit", "streamed orbit sums");
  add_common(c_orbit);
  c_orbit->callback([&] { selected = [&] { return cmd_orbit(args); }; });

  CLI::App* c_dist = app.add_subcommand("dist", "exact level displacement laws");
  add_common(c_dist);
  c_dist->add_flag("--dump", args.dump, "write per-state atom tables");
  c_dist->callback([&] { selected = [&] { return cmd_dist(args); }; });

  CLI::App* c_rat = app.add_subcommand("rat", "descent chain: spec, samples, TV");
  add_common(c_rat);
  c_rat->callback([&] { selected = [&] { return cmd_rat(args); }; });

  CLI::App* c_spec = app.add_subcommand("spectral", "period spectrum and diffusion");
  add_common(c_spec, false);
  c_spec->callback([&] { selected = [&] { return cmd_spectral(args); }; });

  CLI::App* c_verify = app.add_subcommand("verify", "full verification battery");
  add_common(c_verify, false);
  c_verify->callback([&] { selected = [&] { return cmd_verify(args); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return selected ? selected() : 2;
  } catch (const renorm::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 3;
  } catch (const renorm::cap_exceeded& e) {
    std::fprintf(stderr, "cap exceeded: %s\n", e.what());
    return 4;
  } catch (const renorm::internal_error& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 5;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 5;
  }
}
