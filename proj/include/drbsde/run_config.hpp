#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "drbsde/game_option.hpp"
#include "drbsde/market.hpp"
#include "drbsde/problem.hpp"
#include "drbsde/solver.hpp"

namespace drbsde {

/// Configuration rejected before any numerics run; maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ProblemConfig {
    ProblemData data;
    MarketCurves market;
    std::optional<SurfaceFn> lower;  // kept for game specs
    std::optional<SurfaceFn> upper;
    std::string lower_spec;  // serialized barrier sections, used by `compare`
    std::string upper_spec;  // to recognize shared-barrier pairs
};

/// Parsed and validated run configuration. Catalog names:
///   terminal:  constant{value} | put{strike} | call{strike} | asset
///   barrier:   constant{value} | put{strike} | call{strike} |
///              put_premium{strike, premium} | call_premium{strike, premium} |
///              linear_t{start, end}
///   generator: zero | linear{rate} | affine{const, y_coef, z_coef} |
///              discounting  (uses the market rate curve)
/// Curves (rate, sigma, theta) are numbers or {"start": a, "end": b}
/// interpolated linearly in t over the horizon.
struct RunConfig {
    ProblemConfig problem;
    std::optional<ProblemConfig> problem_b;  // compare only

    double horizon = 1.0;
    std::size_t steps = 100;

    double eps = 1e-4;
    double beta = 6.0;
    std::optional<double> mu_override;
    std::optional<double> gamma_override;

    std::string backend = "lattice";  // lattice | regression
    std::string solver = "clamped";   // bsde | penalized | clamped | picard
    double penalty = 256.0;
    PenaltyMode penalty_mode = PenaltyMode::all_barriers;
    std::vector<int> schedule = {16, 32, 64, 128, 256};
    PicardConfig picard;
    int degree = 3;
    BasisTransform transform = BasisTransform::log_state;

    std::size_t n_paths = 10000;
    std::uint64_t seed = 0;

    std::string out_dir = "out";
};

/// Parses a JSON document; throws ConfigError with field diagnostics.
RunConfig parse_run_config(const std::string& json_text);

GameSpec game_spec_from(const ProblemConfig& cfg);

}  // namespace drbsde
