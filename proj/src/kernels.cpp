#include "otlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace otlab {

namespace {

constexpr double kLatticeTol = 1e-9;

void check_common(const DiscreteMeasure& mu, const std::vector<Point>& target, int k) {
  if (k < 1) throw std::invalid_argument("reference coupling: k must be a positive integer");
  if (target.empty()) throw std::invalid_argument("reference coupling: empty target support");
  for (const auto& x : target) {
    if (x.dim() != mu.dim()) throw std::invalid_argument("reference coupling: dimension mismatch");
  }
}

// Normalizes each row of log-weights in place and fills the linear rows.
void normalize_rows(Matrix& log_rows, Matrix& rows) {
  rows = Matrix(log_rows.rows(), log_rows.cols());
  for (std::size_t z = 0; z < log_rows.rows(); ++z) {
    auto lr = log_rows.row(z);
    const double top = *std::max_element(lr.begin(), lr.end());
    if (top == -kInf) {
      throw std::invalid_argument("reference coupling: row " + std::to_string(z) +
                                  " puts no mass on the target support");
    }
    double sum = 0.0;
    for (double v : lr) sum += std::exp(v - top);
    const double log_z = top + std::log(sum);
    auto r = rows.row(z);
    for (std::size_t x = 0; x < lr.size(); ++x) {
      lr[x] = lr[x] == -kInf ? -kInf : lr[x] - log_z;
      r[x] = std::exp(lr[x]);
    }
  }
}

// Offset of s from the nearest multiple of 1/k, and that multiple times k.
bool on_lattice(double s, int k, long& j) {
  const double ks = s * k;
  const double r = std::round(ks);
  if (std::abs(s - r / k) > kLatticeTol) return false;
  j = static_cast<long>(r);
  return true;
}

double log_binomial(long n, long i) {
  return std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0);
}

// Unnormalized log mass/density of the k-fold average in one coordinate.
double iid_sum_log_density(const CramerFamily& f, std::size_t coord, double u, int k) {
  const double s = (u - f.shift_at(coord)) / f.scale;
  switch (f.law) {
    case CramerLaw::StandardGaussian:
      return -0.5 * k * s * s;
    case CramerLaw::ExponentialMean1:
      if (s <= 0.0) return -kInf;
      return (k - 1.0) * std::log(s) - k * s;
    case CramerLaw::PoissonMean1: {
      long j = 0;
      if (!on_lattice(s, k, j) || j < 0) return -kInf;
      return j * std::log(static_cast<double>(k)) - std::lgamma(j + 1.0);
    }
    case CramerLaw::BernoulliPM1: {
      long j = 0;
      if (!on_lattice(s, k, j) || std::abs(j) > k || (j + k) % 2 != 0) return -kInf;
      return log_binomial(k, (j + k) / 2);
    }
  }
  return -kInf;
}

double log_density(const NoiseSpec& noise, const Point& u, int k) {
  return std::visit(
      [&](const auto& n) -> double {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ScaledGaussian>) {
          if (u.dim() != n.dim) throw std::invalid_argument("noise dimension does not match target");
          return -0.5 * k * u.squared_norm();
        } else if constexpr (std::is_same_v<T, IIDSum>) {
          double total = 0.0;
          for (std::size_t i = 0; i < u.dim(); ++i) {
            total += iid_sum_log_density(n.family, i, u[i], k);
          }
          return total;
        } else if constexpr (std::is_same_v<T, PowerGaussian>) {
          // |u|^{d(p/2-1)} exp(-k |u|^p) up to a constant.
          const double r = u.norm();
          const double expo = static_cast<double>(u.dim()) * (0.5 * n.p - 1.0);
          if (r == 0.0) {
            if (expo == 0.0) return 0.0;
            if (expo > 0.0) return -kInf;
            throw std::domain_error("power-Gaussian density is unbounded at a target equal to z");
          }
          return expo * std::log(r) - k * std::pow(r, n.p);
        } else {
          throw std::invalid_argument("density mode needs a noise law, not a Gibbs cost");
        }
      },
      noise);
}

bool is_lattice(const NoiseSpec& noise) {
  const auto* s = std::get_if<IIDSum>(&noise);
  return s && (s->family.law == CramerLaw::PoissonMean1 || s->family.law == CramerLaw::BernoulliPM1);
}

}  // namespace

void validate(const NoiseSpec& noise) {
  std::visit(
      [](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ScaledGaussian>) {
          if (n.dim == 0) throw std::invalid_argument("scaled Gaussian: dim must be positive");
        } else if constexpr (std::is_same_v<T, IIDSum>) {
          n.family.validate();
        } else if constexpr (std::is_same_v<T, PowerGaussian>) {
          if (!(n.p > 0.0) || !std::isfinite(n.p)) {
            throw std::invalid_argument("power Gaussian: p must be positive");
          }
        }
      },
      noise);
}

std::string describe(const NoiseSpec& noise) {
  std::ostringstream os;
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ScaledGaussian>) {
          os << "scaled_gaussian(dim=" << n.dim << ")";
        } else if constexpr (std::is_same_v<T, IIDSum>) {
          os << "iid_sum(" << to_string(n.family.law) << ")";
        } else if constexpr (std::is_same_v<T, PowerGaussian>) {
          os << "power_gaussian(p=" << n.p << ")";
        } else {
          os << "gibbs(" << n.cost.describe() << ")";
        }
      },
      noise);
  return os.str();
}

CostSpec induced_cost(const NoiseSpec& noise) {
  return std::visit(
      [](const auto& n) -> CostSpec {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ScaledGaussian>) {
          return CostSpec::quadratic();
        } else if constexpr (std::is_same_v<T, IIDSum>) {
          return CostSpec::cramer(n.family);
        } else if constexpr (std::is_same_v<T, PowerGaussian>) {
          return CostSpec::power(n.p);
        } else {
          return n.cost;
        }
      },
      noise);
}

std::string to_string(KernelMode mode) {
  switch (mode) {
    case KernelMode::gibbs:
      return "gibbs";
    case KernelMode::density:
      return "density";
    case KernelMode::montecarlo:
      return "montecarlo";
  }
  return "unknown";
}

Coupling ReferenceCoupling::as_coupling() const {
  Matrix w(rows.rows(), rows.cols());
  for (std::size_t z = 0; z < rows.rows(); ++z) {
    for (std::size_t x = 0; x < rows.cols(); ++x) w(z, x) = mu.weight(z) * rows(z, x);
  }
  return Coupling(mu.support(), target, std::move(w));
}

ReferenceCoupling build_reference_gibbs(const DiscreteMeasure& mu, const std::vector<Point>& target,
                                        const CostSpec& cost, int k) {
  check_common(mu, target, k);
  return build_reference_gibbs(mu, cost_matrix(cost, mu.support(), target), k);
}

ReferenceCoupling build_reference_gibbs(const DiscreteMeasure& mu, const CostMatrix& cost, int k) {
  if (k < 1) throw std::invalid_argument("reference coupling: k must be a positive integer");
  if (cost.rows() != mu.size()) {
    throw std::invalid_argument("reference coupling: cost rows do not match mu");
  }
  Matrix log_rows(cost.rows(), cost.cols());
  for (std::size_t z = 0; z < cost.rows(); ++z) {
    for (std::size_t x = 0; x < cost.cols(); ++x) {
      const double c = cost(z, x);
      log_rows(z, x) = std::isfinite(c) ? -static_cast<double>(k) * c : -kInf;
    }
  }
  ReferenceCoupling pi{mu, cost.target_support(), Matrix(), std::move(log_rows), k,
                       KernelMode::gibbs};
  normalize_rows(pi.log_rows, pi.rows);
  return pi;
}

ReferenceCoupling build_reference_density(const DiscreteMeasure& mu,
                                          const std::vector<Point>& target,
                                          const NoiseSpec& noise, int k) {
  check_common(mu, target, k);
  validate(noise);
  Matrix log_rows(mu.size(), target.size());
  for (std::size_t z = 0; z < mu.size(); ++z) {
    for (std::size_t x = 0; x < target.size(); ++x) {
      log_rows(z, x) = log_density(noise, target[x] - mu.atom(z), k);
    }
  }
  ReferenceCoupling pi{mu, target, Matrix(), std::move(log_rows), k, KernelMode::density};
  try {
    normalize_rows(pi.log_rows, pi.rows);
  } catch (const std::invalid_argument& e) {
    if (is_lattice(noise)) {
      throw std::invalid_argument(std::string(e.what()) +
                                  "; lattice noise needs a target on the matching lattice");
    }
    throw;
  }
  return pi;
}

Point sample_noise(const NoiseSpec& noise, int k, std::size_t dim, CounterRng& rng) {
  if (k < 1) throw std::invalid_argument("sample_noise: k must be a positive integer");
  std::vector<double> u(dim);
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ScaledGaussian>) {
          if (dim != n.dim) throw std::invalid_argument("noise dimension does not match target");
          const double s = 1.0 / std::sqrt(static_cast<double>(k));
          for (auto& v : u) v = s * rng.normal();
        } else if constexpr (std::is_same_v<T, IIDSum>) {
          const auto& f = n.family;
          for (std::size_t i = 0; i < dim; ++i) {
            double sum = 0.0;
            switch (f.law) {
              case CramerLaw::StandardGaussian:
                sum = std::sqrt(static_cast<double>(k)) * rng.normal();
                break;
              case CramerLaw::BernoulliPM1:
                for (int m = 0; m < k; ++m) sum += rng.sign();
                break;
              case CramerLaw::ExponentialMean1:
                for (int m = 0; m < k; ++m) sum += rng.exponential();
                break;
              case CramerLaw::PoissonMean1:
                for (int m = 0; m < k; ++m) sum += rng.poisson1();
                break;
            }
            u[i] = f.scale * sum / k + f.shift_at(i);
          }
        } else if constexpr (std::is_same_v<T, PowerGaussian>) {
          const double s = 1.0 / std::sqrt(static_cast<double>(k));
          for (auto& v : u) v = s * rng.normal();
          const Point w = power_map(n.p, Point(u));
          for (std::size_t i = 0; i < dim; ++i) u[i] = w[i];
        } else {
          throw std::invalid_argument("cannot sample from a Gibbs cost");
        }
      },
      noise);
  return Point(std::move(u));
}

NearestTarget::NearestTarget(const std::vector<Point>& target) : target_(&target) {
  if (target.empty()) throw std::invalid_argument("nearest target: empty target support");
  if (target.front().dim() == 1) {
    sorted_.reserve(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) sorted_.emplace_back(target[i][0], i);
    std::sort(sorted_.begin(), sorted_.end());
  }
}

std::size_t NearestTarget::operator()(const Point& x) const {
  const auto& target = *target_;
  if (!sorted_.empty()) {
    const double v = x[0];
    auto it = std::lower_bound(sorted_.begin(), sorted_.end(), std::make_pair(v, std::size_t{0}));
    std::size_t best = target.size();
    double best_d = kInf;
    const auto consider = [&](std::size_t pos) {
      const double d = std::abs(sorted_[pos].first - v);
      const std::size_t idx = sorted_[pos].second;
      if (d < best_d || (d == best_d && idx < best)) {
        best_d = d;
        best = idx;
      }
    };
    // Candidates: the run of equal values on each side of v.
    const std::size_t hi = static_cast<std::size_t>(it - sorted_.begin());
    if (hi < sorted_.size()) {
      const double val = sorted_[hi].first;
      for (std::size_t p = hi; p < sorted_.size() && sorted_[p].first == val; ++p) consider(p);
    }
    if (hi > 0) {
      const double val = sorted_[hi - 1].first;
      for (std::size_t p = hi; p-- > 0 && sorted_[p].first == val;) consider(p);
    }
    return best;
  }
  std::size_t best = 0;
  double best_d = kInf;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double d = (target[i] - x).squared_norm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

ReferenceCoupling build_reference_montecarlo(const DiscreteMeasure& mu,
                                             const std::vector<Point>& target,
                                             const NoiseSpec& noise, int k,
                                             std::size_t n_samples, std::uint64_t seed) {
  check_common(mu, target, k);
  validate(noise);
  if (n_samples < 1) throw std::invalid_argument("montecarlo kernel: n_samples must be >= 1");
  const NearestTarget nearest(target);
  const std::size_t dim = mu.dim();
  Matrix counts(mu.size(), target.size());
  for (std::size_t z = 0; z < mu.size(); ++z) {
    CounterRng rng(seed, stream_id(z, 0x6b65726e656cull));
    for (std::size_t s = 0; s < n_samples; ++s) {
      const Point x = mu.atom(z) + sample_noise(noise, k, dim, rng);
      counts(z, nearest(x)) += 1.0;
    }
  }
  Matrix log_rows(mu.size(), target.size());
  const double n = static_cast<double>(n_samples);
  for (std::size_t z = 0; z < mu.size(); ++z) {
    for (std::size_t x = 0; x < target.size(); ++x) {
      const double c = counts(z, x);
      log_rows(z, x) = c > 0.0 ? std::log(c / n) : -kInf;
      counts(z, x) = c / n;
    }
  }
  return ReferenceCoupling{mu, target, std::move(counts), std::move(log_rows), k,
                           KernelMode::montecarlo};
}

DiscreteMeasure second_marginal(const ReferenceCoupling& pi) { return marginal1(pi.as_coupling()); }

}  // namespace otlab
