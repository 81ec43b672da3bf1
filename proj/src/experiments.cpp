#include "otlab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include <toml.hpp>

#include "otlab/io.hpp"
#include "otlab/rng.hpp"

namespace otlab {

namespace {

class Stopwatch {
 public:
  explicit Stopwatch(bool on) : on_(on), start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    if (!on_) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  bool on_;
  std::chrono::steady_clock::time_point start_;
};

CostMatrix mk_costs(const Instance& inst, const std::vector<Point>& targets) {
  return cost_matrix(inst.cost, inst.mu.support(), targets);
}

void check_ks(const std::vector<int>& ks) {
  if (ks.empty()) throw std::invalid_argument("empty k schedule");
  for (int k : ks) {
    if (k < 1) throw std::invalid_argument("k must be a positive integer");
  }
}

}  // namespace

void Instance::validate() const {
  if (mu.dim() != nu.dim()) throw std::invalid_argument("mu and nu live in different dimensions");
  for (const auto& t : targets) {
    if (t.dim() != mu.dim()) throw std::invalid_argument("target points have the wrong dimension");
  }
  if (fam.feature(0).omega.size() != mu.dim()) {
    throw std::invalid_argument("test family dimension does not match the measures");
  }
  otlab::validate(noise);
  if (!finite_plan_exists(mu.weights(), nu.weights(), mk_costs(*this, nu.support()).values())) {
    throw InfeasibleError("every coupling of mu and nu has infinite cost");
  }
}

std::vector<Point> reference_targets(const Instance& inst) {
  if (!inst.targets.empty()) return DiscreteMeasure::uniform(inst.targets).support();
  std::vector<Point> all = inst.mu.support();
  all.insert(all.end(), inst.nu.support().begin(), inst.nu.support().end());
  return DiscreteMeasure::uniform(all).support();
}

ReferenceCoupling build_reference(const Instance& inst, int k, const std::vector<Point>& targets) {
  if (inst.kernel_mode == KernelMode::gibbs) return build_reference_gibbs(inst.mu, mk_costs(inst, targets), k);
  if (inst.kernel_mode == KernelMode::density) return build_reference_density(inst.mu, targets, inst.noise, k);
  throw std::invalid_argument("experiments use the gibbs or density kernel");
}

std::vector<SweepRow> gamma_sweep(const Instance& inst, const std::vector<int>& ks,
                                  const SweepOptions& opts) {
  check_ks(ks);
  inst.validate();
  const double t = solve_mk_lp(inst.mu, inst.nu, mk_costs(inst, inst.nu.support())).value;
  const auto targets = reference_targets(inst);
  std::vector<int> sorted(ks);
  std::sort(sorted.begin(), sorted.end());
  std::vector<SweepRow> rows;
  for (int k : sorted) {
    Stopwatch clock(opts.timing);
    const auto pi = build_reference(inst, k, targets);
    const auto r = solve_tk_sinkhorn(inst.mu, inst.nu, pi, opts.sinkhorn);
    rows.push_back({k, std::nullopt, r.value, r.value - t, r.iterations, clock.seconds(), r.termination});
  }
  return rows;
}

std::vector<RecoveryRow> recovery_sequence(const Instance& inst, const std::vector<int>& ks,
                                           const SweepOptions& opts) {
  check_ks(ks);
  inst.validate();
  const auto targets = reference_targets(inst);
  const auto plan = solve_mk_lp(inst.mu, inst.nu, mk_costs(inst, inst.nu.support())).plan;
  std::vector<int> sorted(ks);
  std::sort(sorted.begin(), sorted.end());
  std::vector<RecoveryRow> rows;
  for (int k : sorted) {
    const auto pi = build_reference(inst, k, targets);
    bool reachable = true;
    std::vector<std::size_t> nu_idx(inst.nu.size());
    for (std::size_t j = 0; j < inst.nu.size(); ++j) {
      const auto it = std::find(targets.begin(), targets.end(), inst.nu.atom(j));
      if (it == targets.end()) {
        reachable = false;
        break;
      }
      nu_idx[j] = static_cast<std::size_t>(it - targets.begin());
      for (std::size_t z = 0; z < inst.mu.size() && reachable; ++z) {
        if (inst.mu.weight(z) > 0.0 && pi.rows(z, nu_idx[j]) == 0.0) reachable = false;
      }
    }
    DiscreteMeasure nu_k = inst.nu;
    if (!reachable) {
      std::vector<double> w(targets.size(), 0.0);
      for (std::size_t z = 0; z < plan.rows(); ++z) {
        for (std::size_t j = 0; j < plan.cols(); ++j) {
          if (plan(z, j) == 0.0) continue;
          const Point& x = inst.nu.atom(j);
          std::size_t best = targets.size();
          double best_d = kInf;
          for (std::size_t t = 0; t < targets.size(); ++t) {
            if (pi.rows(z, t) == 0.0) continue;
            const double d = (targets[t] - x).norm();
            if (d < best_d) {
              best_d = d;
              best = t;
            }
          }
          if (best == targets.size()) throw InfeasibleError("recovery sequence: a source row of pi^k is empty");
          w[best] += plan(z, j);
        }
      }
      nu_k = DiscreteMeasure(targets, w);
    }
    const auto r = solve_tk_sinkhorn(inst.mu, nu_k, pi, opts.sinkhorn);
    const double dist = narrow_metric(nu_k, inst.nu, inst.fam);
    rows.push_back({k, std::move(nu_k), r.value, dist, reachable});
  }
  return rows;
}

DoubleLimitResult double_limit(const Instance& inst, const std::vector<int>& ks,
                               const std::vector<double>& alphas, const SweepOptions& opts) {
  check_ks(ks);
  if (alphas.empty()) throw std::invalid_argument("empty alpha schedule");
  inst.validate();
  const auto& targets = inst.nu.support();
  if (!separates_support(inst.fam, targets)) {
    throw std::invalid_argument("the test family does not separate measures on nu's support; raise m");
  }
  const CostMatrix c = mk_costs(inst, targets);
  DoubleLimitResult out;
  out.mk = solve_mk_lp(inst.mu, inst.nu, c).value;
  out.alphas = alphas;
  std::sort(out.alphas.begin(), out.alphas.end());
  for (double a : out.alphas) {
    out.mk_alpha.push_back(solve_mk_alpha_lp(inst.mu, c, PenaltyProblem{a, inst.fam, inst.nu}).value);
  }
  std::vector<int> sorted(ks);
  std::sort(sorted.begin(), sorted.end());
  for (int k : sorted) {
    const auto pi = build_reference(inst, k, targets);
    for (std::size_t i = 0; i < out.alphas.size(); ++i) {
      Stopwatch clock(opts.timing);
      const auto r = solve_mkk_alpha(pi, PenaltyProblem{out.alphas[i], inst.fam, inst.nu}, opts.penalty);
      out.cells.push_back({k, out.alphas[i], r.value, r.value - out.mk_alpha[i], r.iterations,
                           clock.seconds(), r.termination});
    }
  }
  return out;
}

std::vector<TraceRow> minimizer_trace(const Instance& inst, const std::vector<int>& ks, double alpha,
                                      const SweepOptions& opts) {
  check_ks(ks);
  inst.validate();
  const auto& targets = inst.nu.support();
  if (!separates_support(inst.fam, targets)) {
    throw std::invalid_argument("the test family does not separate measures on nu's support; raise m");
  }
  const CostMatrix c = mk_costs(inst, targets);
  const PenaltyProblem pen{alpha, inst.fam, inst.nu};
  const double limit = solve_mk_alpha_lp(inst.mu, c, pen).value;
  std::vector<int> sorted(ks);
  std::sort(sorted.begin(), sorted.end());
  std::vector<TraceRow> rows;
  for (int k : sorted) {
    const auto pi = build_reference(inst, k, targets);
    const auto r = solve_mkk_alpha(pi, pen, opts.penalty);
    rows.push_back({k, mk_alpha_face_distance(inst.mu, c, pen, r.plan.weights()), r.value - limit});
  }
  return rows;
}

std::vector<int> dyadic_ks(int max_k) {
  std::vector<int> out;
  for (int k = 1; k <= max_k; k *= 2) out.push_back(k);
  return out;
}

std::vector<double> dyadic_alphas(double max_alpha) {
  std::vector<double> out;
  for (double a = 1.0; a <= max_alpha; a *= 2.0) out.push_back(a);
  return out;
}

// --- configs -----------------------------------------------------------------

namespace {

[[noreturn]] void config_error(const std::string& what) {
  throw std::invalid_argument("config: " + what);
}

double as_double(const toml::node& n, const std::string& key) {
  if (auto v = n.value<double>()) return *v;
  if (auto s = n.value<std::string>()) return parse_double(*s);
  config_error("'" + key + "' must be a number");
}

std::vector<double> double_list(const toml::node* n, const std::string& key) {
  const auto* arr = n ? n->as_array() : nullptr;
  if (!arr) config_error("'" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : *arr) out.push_back(as_double(e, key));
  return out;
}

Point as_point(const toml::node& n, const std::string& key) {
  if (const auto* arr = n.as_array()) {
    std::vector<double> c;
    for (const auto& e : *arr) c.push_back(as_double(e, key));
    return Point(std::move(c));
  }
  return Point{as_double(n, key)};
}

std::vector<Point> point_list(const toml::node* n, const std::string& key) {
  const auto* arr = n ? n->as_array() : nullptr;
  if (!arr) config_error("'" + key + "' must be an array of points");
  std::vector<Point> out;
  for (const auto& e : *arr) out.push_back(as_point(e, key));
  return out;
}

// Dirichlet(1, ..., 1) weights from the config seed.
std::vector<double> random_weights(std::size_t n, std::uint64_t seed, std::uint64_t stream) {
  CounterRng rng(seed, stream);
  std::vector<double> w(n);
  double s = 0.0;
  for (auto& v : w) s += (v = rng.exponential());
  for (auto& v : w) v /= s;
  return w;
}

// { file = "mu.csv" } | { points = [...], weights = [...] } |
// { grid = [a, b, n], weights = "random" | [...] }. Missing weights mean uniform.
// Targets accept the same tables; only the points are used.
DiscreteMeasure measure_from(const toml::node* node, const std::string& key, const std::string& base,
                             std::uint64_t seed, std::uint64_t stream) {
  const auto* t = node ? node->as_table() : nullptr;
  if (!t) config_error("missing table '" + key + "'");
  if (const auto* f = t->get("file")) {
    auto path = f->value<std::string>();
    if (!path) config_error(key + ".file must be a string");
    std::filesystem::path p(*path);
    if (p.is_relative()) p = std::filesystem::path(base) / p;
    return read_measure_csv(p.string());
  }
  std::vector<Point> pts;
  if (t->get("points")) {
    pts = point_list(t->get("points"), key + ".points");
  } else if (t->get("grid")) {
    const auto g = double_list(t->get("grid"), key + ".grid");
    if (g.size() != 3 || !(g[2] >= 1.0) || g[2] != std::floor(g[2])) config_error(key + ".grid must be [a, b, n]");
    const auto n = static_cast<std::size_t>(g[2]);
    for (double x : n == 1 ? std::vector<double>{g[0]} : linspace(g[0], g[1], n)) pts.push_back(Point{x});
  } else {
    config_error(key + " needs file, points or grid");
  }
  std::vector<double> w;
  const auto* wn = t->get("weights");
  if (!wn) {
    w.assign(pts.size(), 1.0 / static_cast<double>(pts.size()));
  } else if (auto s = wn->value<std::string>(); s && *s == "random") {
    w = random_weights(pts.size(), seed, stream);
  } else {
    w = double_list(wn, key + ".weights");
  }
  if (w.size() != pts.size()) config_error(key + ": weights and points differ in length");
  return DiscreteMeasure(std::move(pts), std::move(w));
}

std::string get_string(const toml::table& t, const std::string& key, const std::string& fallback) {
  const auto* n = t.get(key);
  if (!n) return fallback;
  auto s = n->value<std::string>();
  if (!s) config_error("'" + key + "' must be a string");
  return *s;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config: " << e.description() << " at line " << e.source().begin.line;
    throw std::invalid_argument(msg.str());
  }
  std::uint64_t seed = 0;
  if (const auto* s = root.get("seed")) {
    auto v = s->value<std::int64_t>();
    if (!v || *v < 0) config_error("seed must be a nonnegative integer");
    seed = static_cast<std::uint64_t>(*v);
  }
  const auto* inst_node = root.get("instance");
  if (!inst_node || !inst_node->as_table()) config_error("missing [instance] table");
  const auto& it = *inst_node->as_table();

  DiscreteMeasure mu = measure_from(it.get("mu"), "instance.mu", base_dir, seed, 1);
  DiscreteMeasure nu = measure_from(it.get("nu"), "instance.nu", base_dir, seed, 2);
  const CostSpec cost = parse_cost_spec(get_string(it, "cost", "quadratic"));
  const std::string mode = get_string(it, "kernel", "gibbs");
  KernelMode km = KernelMode::gibbs;
  if (mode == "density") {
    km = KernelMode::density;
  } else if (mode != "gibbs") {
    config_error("kernel must be gibbs or density");
  }
  const std::string noise_text = get_string(it, "noise", "");
  const NoiseSpec noise = noise_text.empty() ? noise_for_cost(cost, mu.dim()) : parse_noise_spec(noise_text, cost);
  std::vector<Point> targets;
  if (const auto* tn = it.get("targets"); tn && tn->as_table()) {
    targets = measure_from(tn, "instance.targets", base_dir, seed, 3).support();
  } else if (tn) {
    targets = point_list(tn, "instance.targets");
  }
  std::size_t m = 8;
  if (const auto* n = it.get("testfam")) {
    auto v = n->value<std::int64_t>();
    if (!v || *v < 1) config_error("instance.testfam must be a positive integer");
    m = static_cast<std::size_t>(*v);
  }
  std::vector<Point> all = mu.support();
  all.insert(all.end(), nu.support().begin(), nu.support().end());
  all.insert(all.end(), targets.begin(), targets.end());
  double radius = enclosing_radius(all);
  if (const auto* r = it.get("radius")) radius = as_double(*r, "instance.radius");
  TestFamily fam = TestFamily::canonical(mu.dim(), m, radius);

  ExperimentConfig cfg{text, seed, Instance{mu, nu, cost, fam, km, noise, targets}, {}, {}, 1.0, {}, 1, {}};

  cfg.ks = root.get("ks") ? std::vector<int>{} : dyadic_ks();
  if (root.get("ks")) {
    for (double k : double_list(root.get("ks"), "ks")) {
      if (k < 1 || k != std::floor(k) || k > 1e9) config_error("ks must be positive integers");
      cfg.ks.push_back(static_cast<int>(k));
    }
  }
  cfg.alphas = root.get("alphas") ? double_list(root.get("alphas"), "alphas") : dyadic_alphas();
  if (const auto* a = root.get("alpha")) cfg.alpha = as_double(*a, "alpha");
  if (const auto* t = root.get("timing")) {
    auto v = t->value<bool>();
    if (!v) config_error("timing must be true or false");
    cfg.sweep.timing = *v;
  }
  if (const auto* s = root.get("solver"); s && s->as_table()) {
    const auto& st = *s->as_table();
    if (const auto* v = st.get("tol")) cfg.sweep.sinkhorn.tol = as_double(*v, "solver.tol");
    if (const auto* v = st.get("max_iters")) cfg.sweep.sinkhorn.max_iters = static_cast<long>(as_double(*v, "solver.max_iters"));
    if (const auto* v = st.get("penalty_tol")) cfg.sweep.penalty.tol = as_double(*v, "solver.penalty_tol");
    if (const auto* v = st.get("penalty_max_iters")) {
      cfg.sweep.penalty.max_iters = static_cast<long>(as_double(*v, "solver.penalty_max_iters"));
    }
    const std::string method = get_string(st, "penalty_method", "newton");
    if (method == "mirror") {
      cfg.sweep.penalty.method = PenaltyMethod::mirror_descent;
    } else if (method != "newton") {
      config_error("solver.penalty_method must be newton or mirror");
    }
  }
  cfg.sweep.penalty.seed = seed;

  if (const auto* p = root.get("particles")) {
    const auto* pt = p->as_table();
    if (!pt) config_error("[particles] must be a table");
    if (const auto* v = pt->get("k")) cfg.particle_k = static_cast<int>(as_double(*v, "particles.k"));
    if (cfg.particle_k < 1) config_error("particles.k must be positive");
    for (double n : double_list(pt->get("n_values"), "particles.n_values")) {
      if (n < 1 || n != std::floor(n)) config_error("particles.n_values must be positive integers");
      cfg.ldp.n_values.push_back(static_cast<std::size_t>(n));
    }
    if (const auto* v = pt->get("replicates")) cfg.ldp.replicates = static_cast<std::size_t>(as_double(*v, "particles.replicates"));
    if (const auto* v = pt->get("delta")) cfg.ldp.delta = as_double(*v, "particles.delta");
    if (const auto* v = pt->get("bootstrap")) cfg.ldp.bootstrap = static_cast<std::size_t>(as_double(*v, "particles.bootstrap"));
    if (pt->get("lattice")) cfg.ldp.lattice = point_list(pt->get("lattice"), "particles.lattice");
    cfg.ldp.seed = seed;
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  const std::string text = read_file(path);
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(text, dir.empty() ? "." : dir.string());
}

std::string version_string() {
  std::string v = OTLAB_VERSION;
  const std::string d = OTLAB_GIT_DESCRIBE;
  if (!d.empty() && d != "unknown") v += "+" + d;
  return v;
}

std::string output_header(const ExperimentConfig& cfg) {
  return "# otlab " + version_string() + " config_hash=" + hex64(fnv1a64(cfg.text)) +
         " seed=" + std::to_string(cfg.seed);
}

}  // namespace otlab
