#include "otlab/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace otlab {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

bool try_parse(std::string_view s, double& out) {
  try {
    out = parse_double(s);
    return true;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

json num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (double v : m.row(i)) r.push_back(num(v));
    rows.push_back(std::move(r));
  }
  return rows;
}

json points_json(const std::vector<Point>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back(to_json(p));
  return a;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // no "-0"
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  const std::string t = trim(s);
  if (t == "inf" || t == "+inf" || t == "Infinity") return kInf;
  if (t == "-inf" || t == "-Infinity") return -kInf;
  if (t.empty()) throw std::invalid_argument("empty number");
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || std::isnan(v)) {
    throw std::invalid_argument("not a number: '" + t + "'");
  }
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DiscreteMeasure parse_measure_csv(std::istream& in) {
  std::vector<Point> atoms;
  std::vector<double> weights;
  std::string line;
  std::size_t cols = 0, lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = split(t, ',');
    double probe = 0.0;
    if (first && !try_parse(fields[0], probe)) {
      first = false;
      continue;  // header
    }
    first = false;
    if (fields.size() < 2) throw std::invalid_argument("measure CSV line " + std::to_string(lineno) + ": need x1..xd,weight");
    if (cols == 0) cols = fields.size();
    if (fields.size() != cols) throw std::invalid_argument("measure CSV line " + std::to_string(lineno) + ": ragged row");
    std::vector<double> x(cols - 1);
    try {
      for (std::size_t i = 0; i + 1 < cols; ++i) x[i] = parse_double(fields[i]);
      weights.push_back(parse_double(fields[cols - 1]));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("measure CSV line " + std::to_string(lineno) + ": " + e.what());
    }
    atoms.emplace_back(std::move(x));
  }
  if (atoms.empty()) throw std::invalid_argument("measure CSV has no atoms");
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

DiscreteMeasure read_measure_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  return parse_measure_csv(in);
}

void write_measure_csv(std::ostream& out, const DiscreteMeasure& mu) {
  for (std::size_t i = 0; i < mu.dim(); ++i) out << 'x' << i + 1 << ',';
  out << "weight\n";
  for (std::size_t j = 0; j < mu.size(); ++j) {
    for (double c : mu.atom(j).coords()) out << format_double(c) << ',';
    out << format_double(mu.weight(j)) << '\n';
  }
}

GridFunction1D read_grid_function_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<double> ys, vs;
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto f = split(t, ',');
    double probe = 0.0;
    if (first && !try_parse(f[0], probe)) {
      first = false;
      continue;
    }
    first = false;
    if (f.size() != 2) throw std::invalid_argument("grid CSV line " + std::to_string(lineno) + ": need y,value");
    ys.push_back(parse_double(f[0]));
    vs.push_back(parse_double(f[1]));
  }
  return GridFunction1D(std::move(ys), std::move(vs));
}

void write_grid_function_csv(std::ostream& out, const GridFunction1D& f, const std::string& header) {
  out << header << '\n';
  for (std::size_t i = 0; i < f.size(); ++i) {
    out << format_double(f.x(i)) << ',' << format_double(f.value(i)) << '\n';
  }
}

json to_json(const Point& p) {
  if (p.dim() == 1) return num(p[0]);
  json a = json::array();
  for (double c : p.coords()) a.push_back(num(c));
  return a;
}

json to_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

json to_json(const Coupling& rho) {
  return {{"source", points_json(rho.source_support())},
          {"target", points_json(rho.target_support())},
          {"weights", matrix_json(rho.weights())}};
}

json to_json(const SolveReport& r) {
  return {{"value", num(r.value)},           {"plan", to_json(r.plan)},
          {"dual_phi", to_json(r.dual_phi)}, {"dual_psi", to_json(r.dual_psi)},
          {"iterations", r.iterations},      {"residual", num(r.residual)},
          {"termination", to_string(r.termination)}};
}

json to_json(const ReferenceCoupling& pi) {
  return {{"k", pi.k},
          {"mode", to_string(pi.mode)},
          {"source", points_json(pi.mu.support())},
          {"source_weights", to_json(pi.mu.weights())},
          {"target", points_json(pi.target)},
          {"rows", matrix_json(pi.rows)}};
}

json to_json(const ParticleRun& run, bool include_endpoints) {
  json j = {{"k", run.k}, {"n", run.n()}, {"seed", run.seed}};
  if (include_endpoints) {
    json pairs = json::array();
    for (std::size_t i = 0; i < run.n(); ++i) pairs.push_back({to_json(run.sites[i]), to_json(run.endpoints[i])});
    j["pairs"] = std::move(pairs);
  }
  return j;
}

std::string dump_json(const json& j) { return j.dump(1) + "\n"; }

CostSpec parse_cost_spec(const std::string& text) {
  const auto parts = split(text, ':');
  const std::string& kind = parts[0];
  const auto arg = [&](std::size_t i) {
    if (parts.size() <= i) throw std::invalid_argument("cost spec '" + text + "' is missing a parameter");
    return parse_double(parts[i]);
  };
  if (kind == "quadratic" && parts.size() == 1) return CostSpec::quadratic();
  if (kind == "power" && parts.size() == 2) return CostSpec::power(arg(1));
  if (kind == "contracted" && parts.size() == 2) {
    return CostSpec::contracted(CostSpec::quadratic(), ContractionMap::power(arg(1)));
  }
  if (kind == "cramer" && (parts.size() == 2 || parts.size() == 3)) {
    CramerFamily f{parse_cramer_law(parts[1]), parts.size() == 3 ? arg(2) : 1.0, {}};
    return CostSpec::cramer(f);
  }
  throw std::invalid_argument("unknown cost spec '" + text +
                              "' (quadratic, power:P, cramer:FAMILY[:SCALE], contracted:P)");
}

NoiseSpec parse_noise_spec(const std::string& text, const CostSpec& cost) {
  const auto parts = split(text, ':');
  const std::string& kind = parts[0];
  NoiseSpec out;
  if (kind == "gaussian" && parts.size() <= 2) {
    out = ScaledGaussian{parts.size() == 2 ? static_cast<std::size_t>(parse_double(parts[1])) : 1};
  } else if (kind == "iid" && (parts.size() == 2 || parts.size() == 3)) {
    out = IIDSum{CramerFamily{parse_cramer_law(parts[1]), parts.size() == 3 ? parse_double(parts[2]) : 1.0, {}}};
  } else if (kind == "power" && parts.size() == 2) {
    out = PowerGaussian{parse_double(parts[1])};
  } else if (kind == "gibbs" && parts.size() == 1) {
    out = GibbsOf{cost};
  } else {
    throw std::invalid_argument("unknown noise spec '" + text +
                                "' (gaussian[:DIM], iid:FAMILY[:SCALE], power:P, gibbs)");
  }
  validate(out);
  return out;
}

NoiseSpec noise_for_cost(const CostSpec& cost, std::size_t dim) {
  const auto& v = cost.variant();
  if (std::holds_alternative<QuadraticCost>(v)) return ScaledGaussian{dim};
  if (const auto* c = std::get_if<CramerClosedCost>(&v)) return IIDSum{c->family};
  if (const auto* c = std::get_if<ContractedCost>(&v)) {
    if (c->map.name == "power") return PowerGaussian{c->map.parameter};
  }
  throw std::invalid_argument("no sampling law induces the cost " + cost.describe() +
                              "; use --noise or the gibbs mode");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<double> parse_grid_spec(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) throw std::invalid_argument("grid spec must be a:b:n, got '" + text + "'");
  const double a = parse_double(parts[0]), b = parse_double(parts[1]), n = parse_double(parts[2]);
  if (!(n >= 2.0) || n != std::floor(n) || !(b > a) || !std::isfinite(a) || !std::isfinite(b)) {
    throw std::invalid_argument("grid spec a:b:n needs a < b and an integer n >= 2");
  }
  return linspace(a, b, static_cast<std::size_t>(n));
}

}  // namespace otlab
