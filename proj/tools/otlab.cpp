// Command-line front end: exact, entropic and penalized solves, the
// experiment sweeps driven by TOML configs, and the 1D transform tools.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "otlab/experiments.hpp"
#include "otlab/io.hpp"

using namespace otlab;

namespace {

enum Exit { kOk = 0, kInvalid = 2, kNotConverged = 3, kInfeasible = 4 };

// Output is assembled in memory and written once, so a failed run leaves no
// partial file behind.
void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::invalid_argument("cannot write '" + out_path + "'");
  f << text;
}

std::string fmt(double v) { return format_double(v); }

int exit_for(Termination t) { return t == Termination::iteration_cap ? kNotConverged : kOk; }

struct MeasureArgs {
  std::string mu, nu, cost = "quadratic";
};

void add_measure_args(CLI::App* cmd, MeasureArgs& a) {
  cmd->add_option("--mu", a.mu, "source measure CSV (x1..xd,weight)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--nu", a.nu, "target measure CSV")->required()->check(CLI::ExistingFile);
  cmd->add_option("--cost", a.cost, "quadratic | power:P | cramer:FAMILY[:SCALE] | contracted:P")
      ->capture_default_str();
}

Instance load_instance(const MeasureArgs& a, std::size_t m, const std::string& noise_text, KernelMode mode) {
  DiscreteMeasure mu = read_measure_csv(a.mu);
  DiscreteMeasure nu = read_measure_csv(a.nu);
  const CostSpec cost = parse_cost_spec(a.cost);
  std::vector<Point> all = mu.support();
  all.insert(all.end(), nu.support().begin(), nu.support().end());
  if (mu.dim() != nu.dim()) throw std::invalid_argument("mu and nu live in different dimensions");
  NoiseSpec noise = ScaledGaussian{mu.dim()};
  if (!noise_text.empty()) {
    noise = parse_noise_spec(noise_text, cost);
  } else if (mode == KernelMode::density) {
    noise = noise_for_cost(cost, mu.dim());
  }
  Instance inst{std::move(mu), std::move(nu), cost, TestFamily::canonical(all.front().dim(), m, enclosing_radius(all)),
                mode, noise, {}};
  inst.validate();
  return inst;
}

std::size_t parse_testfam(const std::string& text) {
  const std::string key = "m=";
  const std::string v = text.rfind(key, 0) == 0 ? text.substr(key.size()) : text;
  const double m = parse_double(v);
  if (!(m >= 1.0) || m != std::floor(m) || m > 1e6) throw std::invalid_argument("--testfam expects m=INT with INT >= 1");
  return static_cast<std::size_t>(m);
}

KernelMode parse_mode(const std::string& s) {
  if (s == "gibbs") return KernelMode::gibbs;
  if (s == "density") return KernelMode::density;
  throw std::invalid_argument("--mode must be gibbs or density");
}

// --- subcommands ---------------------------------------------------------------

int cmd_solve(const MeasureArgs& a, const std::string& out) {
  const auto mu = read_measure_csv(a.mu);
  const auto nu = read_measure_csv(a.nu);
  const auto c = cost_matrix(parse_cost_spec(a.cost), mu.support(), nu.support());
  const auto r = solve_mk_lp(mu, nu, c);
  auto j = to_json(r);
  j["duality_gap"] = duality_gap(r, mu, nu, c);
  emit(out, dump_json(j));
  return exit_for(r.termination);
}

struct EntropicArgs {
  int k = 1;
  std::string mode = "gibbs", noise;
  double tol = 1e-9;
  long max_iters = 100000;
};

int cmd_entropic(const MeasureArgs& a, const EntropicArgs& e, const std::string& out) {
  const auto inst = load_instance(a, 8, e.noise, parse_mode(e.mode));
  const auto pi = build_reference(inst, e.k, reference_targets(inst));
  SinkhornOptions opts;
  opts.tol = e.tol;
  opts.max_iters = e.max_iters;
  const auto r = solve_tk_sinkhorn(inst.mu, inst.nu, pi, opts);
  auto j = to_json(r);
  j["k"] = e.k;
  j["mode"] = e.mode;
  emit(out, dump_json(j));
  return exit_for(r.termination);
}

struct PenalizedArgs {
  int k = 0;
  double alpha = 1.0;
  std::string testfam = "m=8", mode = "gibbs", noise, method = "newton";
  std::uint64_t seed = 0;
  double tol = 1e-12;
  long max_iters = 500;
};

int cmd_penalized(const MeasureArgs& a, const PenalizedArgs& p, const std::string& out) {
  const std::size_t m = parse_testfam(p.testfam);
  const auto inst = load_instance(a, m, p.noise, parse_mode(p.mode));
  const auto& targets = inst.nu.support();
  if (!separates_support(inst.fam, targets)) {
    throw std::invalid_argument("the test family does not separate measures on nu's support; raise m");
  }
  const PenaltyProblem pen{p.alpha, inst.fam, inst.nu};
  const CostMatrix c = cost_matrix(inst.cost, inst.mu.support(), targets);
  SolveReport r;
  nlohmann::json j;
  if (p.k == 0) {
    r = solve_mk_alpha_lp(inst.mu, c, pen);
    j = to_json(r);
  } else {
    PenaltyOptions opts;
    opts.seed = p.seed;
    opts.tol = p.tol;
    opts.max_iters = p.max_iters;
    if (p.method == "mirror") {
      opts.method = PenaltyMethod::mirror_descent;
    } else if (p.method != "newton") {
      throw std::invalid_argument("--method must be newton or mirror");
    }
    r = solve_mkk_alpha(build_reference(inst, p.k, targets), pen, opts);
    j = to_json(r);
    j["k"] = p.k;
  }
  j["alpha"] = p.alpha;
  j["testfam_m"] = m;
  emit(out, dump_json(j));
  return exit_for(r.termination);
}

int worst(int code, Termination t) { return std::max(code, exit_for(t)); }

int cmd_anneal(const std::string& config, const std::string& out) {
  const auto cfg = load_config(config);
  const auto rows = gamma_sweep(cfg.inst, cfg.ks, cfg.sweep);
  std::ostringstream s;
  s << output_header(cfg) << "\nk,value,gap,iters,seconds\n";
  int code = kOk;
  for (const auto& r : rows) {
    s << r.k << ',' << fmt(r.value) << ',' << fmt(r.gap_to_limit) << ',' << r.iterations << ','
      << fmt(r.seconds) << '\n';
    code = worst(code, r.termination);
  }
  emit(out, s.str());
  return code;
}

int cmd_doublelimit(const std::string& config, const std::string& out) {
  const auto cfg = load_config(config);
  const auto res = double_limit(cfg.inst, cfg.ks, cfg.alphas, cfg.sweep);
  std::ostringstream s;
  s << output_header(cfg) << "\nk,alpha,value,gap_alpha,gap_mk\n";
  int code = kOk;
  for (const auto& c : res.cells) {
    s << c.k << ',' << fmt(*c.alpha) << ',' << fmt(c.value) << ',' << fmt(c.gap_to_limit) << ','
      << fmt(c.value - res.mk) << '\n';
    code = worst(code, c.termination);
  }
  s << "# mk=" << fmt(res.mk) << '\n';
  for (std::size_t i = 0; i < res.alphas.size(); ++i) {
    s << "# mk_alpha alpha=" << fmt(res.alphas[i]) << " value=" << fmt(res.mk_alpha[i]) << '\n';
  }
  emit(out, s.str());
  return code;
}

int cmd_recovery(const std::string& config, const std::string& out) {
  const auto cfg = load_config(config);
  const auto rows = recovery_sequence(cfg.inst, cfg.ks, cfg.sweep);
  std::ostringstream s;
  s << output_header(cfg) << "\nk,value,distance,nu_reachable\n";
  for (const auto& r : rows) {
    s << r.k << ',' << fmt(r.value) << ',' << fmt(r.distance) << ',' << (r.nu_reachable ? 1 : 0) << '\n';
  }
  emit(out, s.str());
  return kOk;
}

int cmd_trace(const std::string& config, const std::string& out) {
  const auto cfg = load_config(config);
  const auto rows = minimizer_trace(cfg.inst, cfg.ks, cfg.alpha, cfg.sweep);
  std::ostringstream s;
  s << output_header(cfg) << "\n# alpha=" << fmt(cfg.alpha) << "\nk,distance,value_gap\n";
  for (const auto& r : rows) s << r.k << ',' << fmt(r.distance) << ',' << fmt(r.value_gap) << '\n';
  emit(out, s.str());
  return kOk;
}

int cmd_particles(const std::string& config, const std::string& out) {
  const auto cfg = load_config(config);
  if (cfg.ldp.n_values.empty()) throw std::invalid_argument("config: [particles] needs n_values");
  const auto est = estimate_ldp_slope(cfg.inst.mu, cfg.inst.nu, cfg.inst.noise, cfg.particle_k, cfg.inst.fam, cfg.ldp);
  std::ostringstream s;
  s << output_header(cfg) << "\nn,replicates,hits,log_prob,stderr\n";
  for (const auto& p : est.points) {
    s << p.n << ',' << est.replicates << ',' << p.hits << ',' << fmt(p.log_prob) << ',' << fmt(p.stderr_log) << '\n';
  }
  s << "# k=" << cfg.particle_k << " delta=" << fmt(est.delta) << '\n';
  s << "# slope=" << fmt(est.slope) << " slope_se=" << fmt(est.slope_se) << '\n';
  s << "# nu_hat=";
  for (std::size_t i = 0; i < est.nu_hat.size(); ++i) {
    s << (i ? ";" : "") << fmt(est.nu_hat.atom(i)[0]) << ':' << fmt(est.nu_hat.weight(i));
  }
  s << "\n# tk_nu_hat=" << fmt(est.tk_nu_hat) << " reference_rate=" << fmt(est.reference_rate)
    << " ratio=" << fmt(est.ratio()) << '\n';
  s << "# reliable=" << (est.reliable ? "true" : "false") << '\n';
  emit(out, s.str());
  return kOk;
}

int cmd_cramer(const std::string& family, double scale, const std::string& grid, const std::string& out) {
  const CramerFamily fam{parse_cramer_law(family), scale, {}};
  fam.validate();
  const auto u = parse_grid_spec(grid);
  const auto numeric = cramer_numeric(sample_log_mgf(fam, default_zeta_grid(fam.law)), u);
  std::ostringstream s;
  s << "u,closed,numeric,abs_diff\n";
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double c = cramer_closed(fam, u[i]);
    const double n = numeric.value(i);
    const double d = (std::isinf(c) && std::isinf(n)) ? 0.0 : std::abs(c - n);
    s << fmt(u[i]) << ',' << fmt(c) << ',' << fmt(n) << ',' << fmt(d) << '\n';
  }
  emit(out, s.str());
  return kOk;
}

int cmd_legendre(const std::string& in, const std::string& dual, bool direct, const std::string& out) {
  const auto f = read_grid_function_csv(in);
  const auto y = parse_grid_spec(dual);
  const auto g = direct ? lft(f, y) : lft_fast(f, y);
  std::ostringstream s;
  write_grid_function_csv(s, g);
  emit(out, s.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal transport, entropic and penalized approximations, and particle diagnostics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());
  std::string out;

  MeasureArgs m_solve, m_ent, m_pen;
  auto* solve = app.add_subcommand("solve", "exact Monge-Kantorovich problem (JSON report)");
  add_measure_args(solve, m_solve);
  solve->add_option("--out", out, "output file (default stdout)");

  EntropicArgs ent;
  auto* entropic = app.add_subcommand("entropic", "T_k(nu) by Sinkhorn (JSON report)");
  add_measure_args(entropic, m_ent);
  entropic->add_option("--k", ent.k, "entropic index")->required()->check(CLI::PositiveNumber);
  entropic->add_option("--mode", ent.mode, "gibbs | density")->capture_default_str();
  entropic->add_option("--noise", ent.noise, "gaussian[:DIM] | iid:FAMILY[:SCALE] | power:P | gibbs");
  entropic->add_option("--tol", ent.tol)->capture_default_str();
  entropic->add_option("--max-iters", ent.max_iters)->capture_default_str();
  entropic->add_option("--out", out, "output file (default stdout)");

  PenalizedArgs pen;
  auto* penalized = app.add_subcommand("penalized", "MK^alpha (LP) or, with --k, MK_k^alpha (JSON report)");
  add_measure_args(penalized, m_pen);
  penalized->add_option("--k", pen.k, "entropic index; omit for the LP limit")->check(CLI::PositiveNumber);
  penalized->add_option("--alpha", pen.alpha, "penalty weight")->required()->check(CLI::NonNegativeNumber);
  penalized->add_option("--testfam", pen.testfam, "test family size, m=INT")->capture_default_str();
  penalized->add_option("--mode", pen.mode, "gibbs | density")->capture_default_str();
  penalized->add_option("--noise", pen.noise, "noise for the density kernel");
  penalized->add_option("--method", pen.method, "newton | mirror")->capture_default_str();
  penalized->add_option("--seed", pen.seed, "initialization seed")->capture_default_str();
  penalized->add_option("--tol", pen.tol)->capture_default_str();
  penalized->add_option("--max-iters", pen.max_iters)->capture_default_str();
  penalized->add_option("--out", out, "output file (default stdout)");

  std::string config;
  auto config_cmd = [&](const char* name, const char* help) {
    auto* c = app.add_subcommand(name, help);
    c->add_option("--config", config, "TOML experiment file")->required()->check(CLI::ExistingFile);
    c->add_option("--out", out, "output file (default stdout)");
    return c;
  };
  auto* anneal = config_cmd("anneal", "T_k(nu) - T(nu) over the k schedule (CSV)");
  auto* dlimit = config_cmd("doublelimit", "MK_k^alpha over the (k, alpha) grid (CSV)");
  auto* recovery = config_cmd("recovery", "recovery sequence nu_k (CSV)");
  auto* trace = config_cmd("trace", "distance of rho_k^alpha to the MK^alpha solution set (CSV)");
  auto* particles = config_cmd("particles", "large deviation diagnostics for N^k_n (CSV)");

  std::string family, grid, in_file;
  double scale = 1.0;
  bool direct = false;
  auto* cramer = app.add_subcommand("cramer", "closed-form vs numeric Cramer transform (CSV)");
  cramer->add_option("--family", family, "gaussian | bernoulli | exponential | poisson")->required();
  cramer->add_option("--scale", scale)->capture_default_str();
  cramer->add_option("--grid", grid, "a:b:n")->required();
  cramer->add_option("--out", out, "output file (default stdout)");

  auto* legendre = app.add_subcommand("legendre", "Legendre-Fenchel transform of a grid function (CSV)");
  legendre->add_option("--in", in_file, "CSV y,value")->required()->check(CLI::ExistingFile);
  legendre->add_option("--dual", grid, "a:b:n")->required();
  legendre->add_flag("--direct", direct, "O(NM) scan instead of the hull walk");
  legendre->add_option("--out", out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*solve) return cmd_solve(m_solve, out);
    if (*entropic) return cmd_entropic(m_ent, ent, out);
    if (*penalized) return cmd_penalized(m_pen, pen, out);
    if (*anneal) return cmd_anneal(config, out);
    if (*dlimit) return cmd_doublelimit(config, out);
    if (*recovery) return cmd_recovery(config, out);
    if (*trace) return cmd_trace(config, out);
    if (*particles) return cmd_particles(config, out);
    if (*cramer) return cmd_cramer(family, scale, grid, out);
    if (*legendre) return cmd_legendre(in_file, grid, direct, out);
  } catch (const InfeasibleError& e) {
    std::cerr << "otlab: infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const std::invalid_argument& e) {
    std::cerr << "otlab: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::domain_error& e) {
    std::cerr << "otlab: " << e.what() << '\n';
    return kInvalid;
  }
  return kInvalid;
}
