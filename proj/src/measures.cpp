#include "otlab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace otlab {

namespace {

constexpr double kRenormTol = 1e-9;

void check_finite(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) throw std::invalid_argument("point coordinate is not finite");
  }
}

double normalized_total(std::span<const double> weights, const char* what) {
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument(std::string(what) + ": weights must be finite and nonnegative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > kRenormTol) {
    throw std::invalid_argument(std::string(what) + ": weights sum to " + std::to_string(total) +
                                ", not 1");
  }
  return total;
}

}  // namespace

Point::Point(std::vector<double> coords) : coords_(std::move(coords)) { check_finite(coords_); }

Point::Point(std::initializer_list<double> coords) : coords_(coords) { check_finite(coords_); }

double Point::squared_norm() const {
  double s = 0.0;
  for (double x : coords_) s += x * x;
  return s;
}

double Point::norm() const { return std::sqrt(squared_norm()); }

Point Point::operator-(const Point& other) const {
  if (dim() != other.dim()) throw std::invalid_argument("point dimension mismatch");
  std::vector<double> out(dim());
  for (std::size_t i = 0; i < dim(); ++i) out[i] = coords_[i] - other.coords_[i];
  return Point(std::move(out));
}

Point Point::operator+(const Point& other) const {
  if (dim() != other.dim()) throw std::invalid_argument("point dimension mismatch");
  std::vector<double> out(dim());
  for (std::size_t i = 0; i < dim(); ++i) out[i] = coords_[i] + other.coords_[i];
  return Point(std::move(out));
}

// ---------------------------------------------------------------------------

DiscreteMeasure::DiscreteMeasure(std::vector<Point> support, std::vector<double> weights) {
  if (support.empty()) throw std::invalid_argument("measure: empty support");
  if (support.size() != weights.size()) {
    throw std::invalid_argument("measure: support and weights differ in length");
  }
  const std::size_t d = support.front().dim();
  if (d == 0) throw std::invalid_argument("measure: zero-dimensional points");
  for (const auto& p : support) {
    if (p.dim() != d) throw std::invalid_argument("measure: mixed point dimensions");
  }
  const double total = normalized_total(weights, "measure");

  std::vector<std::size_t> order(support.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::is_lt(support[a] <=> support[b]);
  });
  for (std::size_t idx : order) {
    if (!support_.empty() && support_.back() == support[idx]) {
      weights_.back() += weights[idx];
    } else {
      support_.push_back(support[idx]);
      weights_.push_back(weights[idx]);
    }
  }
  if (total != 1.0) {
    for (double& w : weights_) w /= total;
  }
}

DiscreteMeasure DiscreteMeasure::dirac(Point atom) {
  return DiscreteMeasure({std::move(atom)}, {1.0});
}

DiscreteMeasure DiscreteMeasure::uniform(std::vector<Point> atoms) {
  const double w = 1.0 / static_cast<double>(atoms.size());
  std::vector<double> weights(atoms.size(), w);
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

DiscreteMeasure DiscreteMeasure::empirical(std::span<const Point> samples) {
  return uniform(std::vector<Point>(samples.begin(), samples.end()));
}

std::optional<std::size_t> DiscreteMeasure::find(const Point& p) const {
  auto it = std::lower_bound(support_.begin(), support_.end(), p,
                             [](const Point& a, const Point& b) { return std::is_lt(a <=> b); });
  if (it != support_.end() && *it == p) return static_cast<std::size_t>(it - support_.begin());
  return std::nullopt;
}

std::optional<std::size_t> DiscreteMeasure::find_near(const Point& p, double tol) const {
  if (auto exact = find(p)) return exact;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    if (support_[i].dim() != p.dim()) continue;
    double dist = 0.0;
    for (std::size_t c = 0; c < p.dim(); ++c) {
      dist = std::max(dist, std::abs(support_[i][c] - p[c]));
    }
    if (dist <= tol) return i;
  }
  return std::nullopt;
}

bool approx_equal(const DiscreteMeasure& a, const DiscreteMeasure& b, double tol) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto j = b.find(a.atom(i));
    const double wb = j ? b.weight(*j) : 0.0;
    if (std::abs(a.weight(i) - wb) > tol) return false;
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (!a.find(b.atom(j)) && b.weight(j) > tol) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

Coupling::Coupling(std::vector<Point> source, std::vector<Point> target, Matrix weights)
    : source_(std::move(source)), target_(std::move(target)), weights_(std::move(weights)) {
  if (source_.size() != weights_.rows() || target_.size() != weights_.cols()) {
    throw std::invalid_argument("coupling: support sizes do not match weight matrix");
  }
  if (source_.empty() || target_.empty()) throw std::invalid_argument("coupling: empty support");
  const double total = normalized_total(weights_.data(), "coupling");
  if (total != 1.0) {
    for (double& w : weights_.data()) w /= total;
  }
}

std::vector<double> Coupling::row_sums() const {
  std::vector<double> out(rows(), 0.0);
  for (std::size_t i = 0; i < rows(); ++i) {
    for (double w : weights_.row(i)) out[i] += w;
  }
  return out;
}

std::vector<double> Coupling::col_sums() const {
  std::vector<double> out(cols(), 0.0);
  for (std::size_t i = 0; i < rows(); ++i) {
    for (std::size_t j = 0; j < cols(); ++j) out[j] += weights_(i, j);
  }
  return out;
}

DiscreteMeasure marginal0(const Coupling& rho) {
  return DiscreteMeasure(rho.source_support(), rho.row_sums());
}

DiscreteMeasure marginal1(const Coupling& rho) {
  return DiscreteMeasure(rho.target_support(), rho.col_sums());
}

Coupling product_coupling(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  Matrix w(mu.size(), nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t j = 0; j < nu.size(); ++j) w(i, j) = mu.weight(i) * nu.weight(j);
  }
  return Coupling(mu.support(), nu.support(), std::move(w));
}

// ---------------------------------------------------------------------------

double FourierFeature::operator()(const Point& x) const {
  if (x.dim() != omega.size()) throw std::invalid_argument("test function dimension mismatch");
  double phase = 0.0;
  for (std::size_t i = 0; i < omega.size(); ++i) phase += omega[i] * x[i];
  return 0.5 * (is_sine ? std::sin(phase) : std::cos(phase));
}

TestFamily::TestFamily(std::vector<FourierFeature> features) : features_(std::move(features)) {
  if (features_.empty()) throw std::invalid_argument("test family must have at least one member");
  const std::size_t d = features_.front().omega.size();
  double w = 1.0;
  for (const auto& f : features_) {
    if (f.omega.size() != d) throw std::invalid_argument("test family: mixed dimensions");
    check_finite(f.omega);
    w *= 0.5;
    weights_.push_back(w);
  }
}

TestFamily TestFamily::canonical_1d(std::size_t m, double radius) {
  return canonical(1, m, radius);
}

TestFamily TestFamily::canonical(std::size_t dim, std::size_t m, double radius) {
  if (dim == 0 || m == 0) throw std::invalid_argument("canonical family: dim and m must be >= 1");
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("canonical family: radius must be positive");
  }
  // Enumerate integer multi-indices with first nonzero entry positive, by
  // increasing l1 norm, lexicographic within a shell.
  std::vector<std::vector<int>> indices;
  for (int shell = 1; indices.size() * 2 < m; ++shell) {
    std::vector<std::vector<int>> layer;
    std::vector<int> cur(dim, -shell);
    for (bool done = false; !done;) {
      int l1 = 0;
      for (int c : cur) l1 += std::abs(c);
      auto first = std::find_if(cur.begin(), cur.end(), [](int c) { return c != 0; });
      if (l1 == shell && first != cur.end() && *first > 0) layer.push_back(cur);
      done = true;
      for (std::size_t pos = dim; pos-- > 0;) {
        if (cur[pos] < shell) {
          ++cur[pos];
          done = false;
          break;
        }
        cur[pos] = -shell;
      }
    }
    indices.insert(indices.end(), layer.begin(), layer.end());
  }
  std::vector<FourierFeature> features;
  const double scale = std::numbers::pi / radius;
  for (const auto& idx : indices) {
    std::vector<double> omega(dim);
    for (std::size_t c = 0; c < dim; ++c) omega[c] = scale * idx[c];
    features.push_back({omega, false});
    if (features.size() == m) break;
    features.push_back({omega, true});
    if (features.size() == m) break;
  }
  return TestFamily(std::move(features));
}

TestFamily TestFamily::for_support(std::size_t m, std::span<const Point> support) {
  if (support.empty()) throw std::invalid_argument("for_support: empty support");
  return canonical(support.front().dim(), m, enclosing_radius(support));
}

std::vector<double> TestFamily::moments(const DiscreteMeasure& gamma) const {
  std::vector<double> out(size(), 0.0);
  for (std::size_t j = 0; j < gamma.size(); ++j) {
    const double w = gamma.weight(j);
    if (w == 0.0) continue;
    for (std::size_t i = 0; i < size(); ++i) out[i] += w * features_[i](gamma.atom(j));
  }
  return out;
}

double enclosing_radius(std::span<const Point> support) {
  double r = 0.0;
  for (const auto& p : support) {
    for (double x : p.coords()) r = std::max(r, std::abs(x));
  }
  return r > 0.0 ? r : 1.0;
}

double narrow_metric_from_moments(std::span<const double> gamma_moments,
                                  std::span<const double> nu_moments, const TestFamily& fam) {
  double d = 0.0;
  for (std::size_t i = 0; i < fam.size(); ++i) {
    d += fam.weight(i) * std::min(std::abs(gamma_moments[i] - nu_moments[i]), 1.0);
  }
  return d;
}

double narrow_metric(const DiscreteMeasure& gamma, const DiscreteMeasure& nu,
                     const TestFamily& fam) {
  const auto a = fam.moments(gamma);
  const auto b = fam.moments(nu);
  return narrow_metric_from_moments(a, b, fam);
}

std::size_t matrix_rank(Matrix a, double rel_tol) {
  double scale = 0.0;
  for (double x : a.data()) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return 0;
  const double tol = rel_tol * scale;
  std::size_t rank = 0;
  for (std::size_t col = 0; col < a.cols() && rank < a.rows(); ++col) {
    std::size_t pivot = rank;
    for (std::size_t r = rank + 1; r < a.rows(); ++r) {
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    }
    if (std::abs(a(pivot, col)) <= tol) continue;
    for (std::size_t c = 0; c < a.cols(); ++c) std::swap(a(rank, c), a(pivot, c));
    for (std::size_t r = rank + 1; r < a.rows(); ++r) {
      const double f = a(r, col) / a(rank, col);
      for (std::size_t c = col; c < a.cols(); ++c) a(r, c) -= f * a(rank, c);
    }
    ++rank;
  }
  return rank;
}

bool separates_support(const TestFamily& fam, std::span<const Point> support) {
  Matrix m(fam.size() + 1, support.size());
  for (std::size_t j = 0; j < support.size(); ++j) {
    for (std::size_t i = 0; i < fam.size(); ++i) m(i, j) = fam.eval(i, support[j]);
    m(fam.size(), j) = 1.0;
  }
  return matrix_rank(std::move(m)) == support.size();
}

}  // namespace otlab
