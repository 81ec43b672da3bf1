#include "otlab/particles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "otlab/rng.hpp"
#include "otlab/solvers.hpp"

namespace otlab {

namespace {

constexpr std::uint64_t kSiteStream = 0x7369746573ull;
constexpr std::uint64_t kNoiseStream = 0x6e6f697365ull;

std::size_t inverse_cdf(const DiscreteMeasure& mu, double q) {
  double cum = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    cum += mu.weight(i);
    if (cum >= q - 1e-12) return i;
  }
  return mu.size() - 1;
}

std::size_t noise_dim(const NoiseSpec& noise, std::size_t fallback) {
  if (const auto* g = std::get_if<ScaledGaussian>(&noise)) return g->dim;
  return fallback;
}

}  // namespace

SiteArray quantile_sites(const DiscreteMeasure& mu, std::size_t n) {
  if (mu.dim() != 1) throw std::invalid_argument("quantile sites need a 1-d measure");
  if (n == 0) throw std::invalid_argument("site count must be positive");
  SiteArray out;
  out.generator = SiteGenerator::quantile1d;
  out.sites.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    out.sites.push_back(mu.atom(inverse_cdf(mu, q)));
  }
  return out;
}

SiteArray iid_sites(const DiscreteMeasure& mu, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("site count must be positive");
  SiteArray out;
  out.generator = SiteGenerator::seeded_iid;
  out.seed = seed;
  out.sites.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(seed, stream_id(kSiteStream, i));
    out.sites.push_back(mu.atom(inverse_cdf(mu, rng.uniform())));
  }
  return out;
}

SiteArray default_sites(const DiscreteMeasure& mu, std::size_t n, std::uint64_t seed) {
  return mu.dim() == 1 ? quantile_sites(mu, n) : iid_sites(mu, n, seed);
}

std::vector<Point> sample_noise(const NoiseSpec& noise, int k, std::size_t count,
                                std::uint64_t seed, std::size_t dim) {
  validate(noise);
  std::vector<Point> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    CounterRng rng(seed, stream_id(kNoiseStream, i));
    out.push_back(sample_noise(noise, k, dim, rng));
  }
  return out;
}

ParticleRun run_particles(const SiteArray& sites, const NoiseSpec& noise, int k,
                          std::uint64_t seed, std::uint64_t replicate) {
  validate(noise);
  if (sites.sites.empty()) throw std::invalid_argument("particle run needs at least one site");
  const std::size_t dim = sites.sites.front().dim();
  if (noise_dim(noise, dim) != dim) throw std::invalid_argument("noise dimension does not match sites");
  ParticleRun run;
  run.k = k;
  run.seed = seed;
  run.sites = sites.sites;
  run.endpoints.reserve(sites.n());
  for (std::size_t i = 0; i < sites.n(); ++i) {
    CounterRng rng(seed, stream_id(replicate, i));
    run.endpoints.push_back(sites.sites[i] + sample_noise(noise, k, dim, rng));
  }
  return run;
}

DiscreteMeasure simulate_Nkn(const SiteArray& sites, const NoiseSpec& noise, int k,
                             std::uint64_t seed) {
  return DiscreteMeasure::empirical(run_particles(sites, noise, k, seed).endpoints);
}

Coupling simulate_Mkn(const SiteArray& sites, const NoiseSpec& noise, int k, std::uint64_t seed) {
  const ParticleRun run = run_particles(sites, noise, k, seed);
  const auto src = DiscreteMeasure::empirical(run.sites);
  const auto dst = DiscreteMeasure::empirical(run.endpoints);
  Matrix w(src.size(), dst.size());
  const double unit = 1.0 / static_cast<double>(run.n());
  for (std::size_t i = 0; i < run.n(); ++i) {
    w(*src.find(run.sites[i]), *dst.find(run.endpoints[i])) += unit;
  }
  return Coupling(src.support(), dst.support(), std::move(w));
}

// --- LDP diagnostics ---------------------------------------------------------

std::pair<DiscreteMeasure, double> minimize_tk_over_ball(const ReferenceCoupling& pi,
                                                        const DiscreteMeasure& nu, double delta,
                                                        const TestFamily& fam) {
  const std::size_t n = pi.target.size();
  if (n < 2 || n > 4) throw std::invalid_argument("ball minimization needs 2 to 4 lattice points");
  const auto nu_m = fam.moments(nu);
  Matrix g(n, fam.size());
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t i = 0; i < fam.size(); ++i) g(x, i) = fam.eval(i, pi.target[x]);
  }
  SinkhornOptions so;
  so.tol = 1e-12;
  so.max_iters = 100000;

  std::vector<double> best_w;
  double best = kInf;
  std::vector<double> w(n), mom(fam.size());
  const auto consider = [&]() {
    double rest = 1.0;
    for (std::size_t x = 0; x + 1 < n; ++x) rest -= w[x];
    if (rest < -1e-12) return;
    w[n - 1] = std::max(rest, 0.0);
    std::fill(mom.begin(), mom.end(), 0.0);
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t i = 0; i < fam.size(); ++i) mom[i] += w[x] * g(x, i);
    }
    if (narrow_metric_from_moments(mom, nu_m, fam) > delta) return;
    double v = kInf;
    try {
      v = solve_tk_sinkhorn(pi.mu, DiscreteMeasure(pi.target, w), pi, so).value;
    } catch (const InfeasibleError&) {
      return;
    }
    if (v < best) {
      best = v;
      best_w = w;
    }
  };

  // Coarse grid over the simplex, then three refinements around the best
  // point, each a factor 10 finer.
  std::vector<double> lo(n - 1, 0.0), hi(n - 1, 1.0);
  double step = 0.02;
  for (int level = 0; level < 4; ++level) {
    std::vector<long> count(n - 1), idx(n - 1, 0);
    for (std::size_t a = 0; a + 1 < n; ++a) {
      count[a] = static_cast<long>(std::floor((hi[a] - lo[a]) / step + 1e-9)) + 1;
    }
    for (bool done = false; !done;) {
      for (std::size_t a = 0; a + 1 < n; ++a) w[a] = lo[a] + static_cast<double>(idx[a]) * step;
      consider();
      std::size_t a = n - 1;
      while (true) {
        if (a == 0) {
          done = true;
          break;
        }
        --a;
        if (++idx[a] < count[a]) break;
        idx[a] = 0;
      }
    }
    if (best_w.empty()) throw std::invalid_argument("the event ball contains no measure on the lattice grid");
    for (std::size_t a = 0; a + 1 < n; ++a) {
      lo[a] = std::max(0.0, best_w[a] - step);
      hi[a] = std::min(1.0, best_w[a] + step);
    }
    step /= 10.0;
  }
  return {DiscreteMeasure(pi.target, best_w), best};
}

namespace {

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

LdpEstimate estimate_ldp_slope(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                               const NoiseSpec& noise, int k, const TestFamily& fam,
                               const LdpOptions& opt) {
  validate(noise);
  if (opt.n_values.size() < 2) throw std::invalid_argument("LDP slope needs at least two n values");
  if (opt.replicates == 0) throw std::invalid_argument("LDP slope needs replicates");
  if (!(opt.delta > 0.0)) throw std::invalid_argument("LDP ball radius must be positive");
  const std::size_t dim = mu.dim();

  LdpEstimate est{nu, opt.delta, opt.replicates, {}, 0.0, 0.0, nu, 0.0, 0.0, false};
  const auto nu_m = fam.moments(nu);
  const double reps = static_cast<double>(opt.replicates);

  // Endpoints repeat on lattices; cache their feature values.
  std::map<Point, std::vector<double>> cache;
  const auto features = [&](const Point& x) -> const std::vector<double>& {
    auto it = cache.find(x);
    if (it != cache.end()) return it->second;
    std::vector<double> v(fam.size());
    for (std::size_t i = 0; i < fam.size(); ++i) v[i] = fam.eval(i, x);
    if (cache.size() > 4096) cache.clear();
    return cache.emplace(x, std::move(v)).first->second;
  };

  std::vector<double> mom(fam.size());
  for (std::size_t n : opt.n_values) {
    const SiteArray sites = default_sites(mu, n, opt.seed);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < opt.replicates; ++r) {
      std::fill(mom.begin(), mom.end(), 0.0);
      const std::uint64_t rep = stream_id(n, r);
      for (std::size_t i = 0; i < n; ++i) {
        CounterRng rng(opt.seed, stream_id(rep, i));
        const auto& f = features(sites.sites[i] + sample_noise(noise, k, dim, rng));
        for (std::size_t j = 0; j < f.size(); ++j) mom[j] += f[j];
      }
      for (auto& m : mom) m /= static_cast<double>(n);
      if (narrow_metric_from_moments(mom, nu_m, fam) <= opt.delta) ++hits;
    }
    LdpPoint p;
    p.n = n;
    p.hits = hits;
    p.reliable = hits >= opt.min_hits && hits > 0;
    if (p.reliable) {
      const double q = static_cast<double>(hits) / reps;
      p.log_prob = std::log(q);
      p.stderr_log = std::sqrt((1.0 - q) / static_cast<double>(hits));
    } else {
      p.log_prob = std::nan("");
    }
    est.points.push_back(p);
  }

  std::vector<double> xs, ys, qs;
  for (const auto& p : est.points) {
    if (!p.reliable) continue;
    xs.push_back(static_cast<double>(p.n));
    ys.push_back(p.log_prob);
    qs.push_back(std::exp(p.log_prob));
  }
  est.reliable = xs.size() == est.points.size();
  if (xs.size() >= 2) {
    est.slope = ls_slope(xs, ys);
    std::mt19937_64 gen(mix64(opt.seed ^ 0x626f6f74ull));
    std::vector<double> slopes;
    std::vector<double> yb(xs.size());
    for (std::size_t b = 0; b < opt.bootstrap; ++b) {
      for (std::size_t i = 0; i < xs.size(); ++i) {
        std::binomial_distribution<std::size_t> bin(opt.replicates, qs[i]);
        const double h = static_cast<double>(bin(gen));
        yb[i] = std::log(std::max(h, 0.5) / reps);
      }
      slopes.push_back(ls_slope(xs, yb));
    }
    if (slopes.size() >= 2) {
      double m = 0.0, s = 0.0;
      for (double v : slopes) m += v;
      m /= static_cast<double>(slopes.size());
      for (double v : slopes) s += (v - m) * (v - m);
      est.slope_se = std::sqrt(s / static_cast<double>(slopes.size() - 1));
    }
  } else {
    est.slope = std::nan("");
  }

  if (!opt.lattice.empty()) {
    const auto pi = build_reference_density(mu, opt.lattice, noise, k);
    auto [hat, tk] = minimize_tk_over_ball(pi, nu, opt.delta, fam);
    est.nu_hat = std::move(hat);
    est.tk_nu_hat = tk;
    est.reference_rate = k * tk;
  }
  return est;
}

}  // namespace otlab
