#pragma once

// File formats: measures and grid functions as CSV, reports and couplings
// as JSON, and the textual cost / noise specifications used by the CLI and
// the experiment configs.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "otlab/costs.hpp"
#include "otlab/kernels.hpp"
#include "otlab/legendre.hpp"
#include "otlab/measures.hpp"
#include "otlab/particles.hpp"
#include "otlab/solvers.hpp"

namespace otlab {

/// Shortest round-trip decimal, with "0" for either zero and "inf", "-inf",
/// "nan" for the non-finite values.
std::string format_double(double v);
/// Accepts anything strtod does plus "inf"/"+inf"/"-inf".
double parse_double(std::string_view s);

/// Columns x1..xd,weight. A header line is optional.
DiscreteMeasure read_measure_csv(const std::string& path);
DiscreteMeasure parse_measure_csv(std::istream& in);
void write_measure_csv(std::ostream& out, const DiscreteMeasure& mu);

/// Columns y,value; value may be "inf".
GridFunction1D read_grid_function_csv(const std::string& path);
void write_grid_function_csv(std::ostream& out, const GridFunction1D& f,
                             const std::string& header = "y,value");

nlohmann::json to_json(const Point& p);
nlohmann::json to_json(const std::vector<double>& v);
nlohmann::json to_json(const Coupling& rho);
nlohmann::json to_json(const SolveReport& report);
nlohmann::json to_json(const ReferenceCoupling& pi);
nlohmann::json to_json(const ParticleRun& run, bool include_endpoints);

/// Writes JSON with doubles in format_double form (non-finite values as
/// strings, which JSON cannot represent).
std::string dump_json(const nlohmann::json& j);

/// "quadratic", "power:P", "cramer:FAMILY[:SCALE]" or "contracted:P"
/// (quadratic cost pulled back through the power map).
CostSpec parse_cost_spec(const std::string& text);
/// "gaussian[:DIM]", "iid:FAMILY[:SCALE]", "power:P" or "gibbs".
/// "gibbs" uses the given cost.
NoiseSpec parse_noise_spec(const std::string& text, const CostSpec& cost = CostSpec::quadratic());
/// Noise whose induced cost is `cost`, when one exists.
NoiseSpec noise_for_cost(const CostSpec& cost, std::size_t dim);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// "a:b:n" -> linspace(a, b, n).
std::vector<double> parse_grid_spec(const std::string& text);

std::string read_file(const std::string& path);

}  // namespace otlab
