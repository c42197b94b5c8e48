#include "drbsde/runner.hpp"

#include <cmath>
#include <fstream>
#include <memory>

#include "drbsde/diagnostics.hpp"
#include "drbsde/json_writer.hpp"
#include "drbsde/norms.hpp"

namespace drbsde {

namespace {

std::unique_ptr<CondExpBackend> build_engine(const RunConfig& cfg,
                                             const ProblemConfig& problem,
                                             const TimeGrid& grid, bool risk_neutral) {
    MarketCurves market = problem.market;
    if (risk_neutral) market.risk_premium = [](double) { return 0.0; };
    if (cfg.backend == "lattice") {
        return make_lattice_backend(Lattice::build(market, grid));
    }
    PathEnsemble paths = PathEnsemble::simulate(grid, cfg.n_paths, 1, cfg.seed);
    MarketPaths mp = MarketPaths::simulate(market, paths, grid);
    return make_regression_backend(std::move(paths), std::move(mp.s), grid, cfg.degree,
                                   cfg.transform);
}

WeightProfile weights_from(const RunConfig& cfg, const ProblemConfig& problem,
                           const TimeGrid& grid) {
    if (cfg.mu_override || cfg.gamma_override) {
        const std::size_t n = grid.steps() + 1;
        std::vector<double> mu(n), gamma(n);
        for (std::size_t i = 0; i < n; ++i) {
            mu[i] = cfg.mu_override ? *cfg.mu_override
                                    : problem.data.generator.mu(grid.node(i));
            gamma[i] = cfg.gamma_override ? *cfg.gamma_override
                                          : problem.data.generator.gamma(grid.node(i));
        }
        return WeightProfile::build(std::move(mu), std::move(gamma), cfg.eps, cfg.beta, grid);
    }
    return sample_weights(problem.data.generator, grid, cfg.eps, cfg.beta);
}

SolutionBundle dispatch_solver(const RunConfig& cfg, const ProblemConfig& problem,
                               CondExpBackend& backend, const TimeGrid& grid,
                               const WeightProfile& w) {
    if (cfg.solver == "bsde") return solve_bsde(problem.data, backend, grid, w);
    if (cfg.solver == "penalized") {
        return solve_penalized(problem.data, cfg.penalty, backend, grid, w, cfg.penalty_mode);
    }
    if (cfg.solver == "clamped") return solve_clamped(problem.data, backend, grid, w);
    return picard_solve(problem.data, cfg.picard, backend, grid, w).solution;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open output file " + path.string());
    }
    out << content;
}

void cmd_solve(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    const TimeGrid grid = TimeGrid::uniform(cfg.horizon, cfg.steps);
    const WeightProfile w = weights_from(cfg, cfg.problem, grid);
    auto engine = build_engine(cfg, cfg.problem, grid, /*risk_neutral=*/false);
    const SolutionBundle sol = dispatch_solver(cfg, cfg.problem, *engine, grid, w);

    std::string csv = "t,mean_y,mean_z,mean_k_plus,mean_k_minus\n";
    for (std::size_t i = 0; i <= grid.steps(); ++i) {
        const double mz = i < grid.steps() ? sol.level_mean(sol.z, i) : 0.0;
        csv += format_double(grid.node(i)) + ',' + format_double(sol.level_mean(sol.y, i)) +
               ',' + format_double(mz) + ',' + format_double(sol.level_mean(sol.k_plus, i)) +
               ',' + format_double(sol.level_mean(sol.k_minus, i)) + '\n';
    }
    write_file(out_dir / "series.csv", csv);

    const NormReport norms = beta_norms(sol, w, grid);
    SkorokhodResidual residual;
    double lower_violation = 0.0, upper_violation = 0.0;
    if (cfg.problem.data.has_lower() || cfg.problem.data.has_upper()) {
        residual = skorokhod_residual(sol, cfg.problem.data, grid);
        for (std::size_t i = 0; i <= grid.steps(); ++i) {
            const double t = grid.node(i);
            const auto y = sol.y.level(i);
            const auto s = sol.state.level(i);
            for (std::size_t j = 0; j < y.size(); ++j) {
                if (cfg.problem.data.has_lower()) {
                    lower_violation = std::max(
                        lower_violation, (*cfg.problem.data.lower)(t, s[j]) - y[j]);
                }
                if (cfg.problem.data.has_upper()) {
                    upper_violation = std::max(
                        upper_violation, y[j] - (*cfg.problem.data.upper)(t, s[j]));
                }
            }
        }
    }

    JsonWriter jw;
    jw.begin_object();
    jw.key("command").string("solve");
    jw.key("solver").string(sol.meta.solver);
    jw.key("backend").string(cfg.backend);
    jw.key("grid_steps").unsigned_integer(grid.steps());
    jw.key("seed").unsigned_integer(cfg.seed);
    jw.key("y0").number(sol.level_mean(sol.y, 0));
    jw.key("norms").begin_object();
    jw.key("sup").number(norms.sup_norm);
    jw.key("ay").number(norms.aY_norm);
    jw.key("z").number(norms.Z_norm);
    jw.key("combined").number(norms.combined);
    jw.end_object();
    jw.key("residuals").begin_object();
    jw.key("lower").number(residual.lower);
    jw.key("upper").number(residual.upper);
    jw.end_object();
    jw.key("violations").begin_object();
    jw.key("lower").number(lower_violation);
    jw.key("upper").number(upper_violation);
    jw.end_object();
    jw.key("penalty_level").number(sol.meta.penalty_level);
    jw.key("iterations").integer(sol.meta.iterations);
    jw.end_object();
    write_file(out_dir / "summary.json", jw.str() + "\n");
}

void cmd_converge(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    const TimeGrid grid = TimeGrid::uniform(cfg.horizon, cfg.steps);
    BackendFactory factory = [&cfg](const TimeGrid& g) -> std::unique_ptr<CondExpBackend> {
        // The study may refine the grid; rebuild the configured backend on it.
        if (cfg.backend == "lattice") {
            return make_lattice_backend(Lattice::build(cfg.problem.market, g));
        }
        PathEnsemble paths = PathEnsemble::simulate(g, cfg.n_paths, 1, cfg.seed);
        MarketPaths mp = MarketPaths::simulate(cfg.problem.market, paths, g);
        return make_regression_backend(std::move(paths), std::move(mp.s), g, cfg.degree,
                                       cfg.transform);
    };

    const PenaltySchedule schedule{cfg.schedule};
    const ConvergenceReport report = convergence_study(
        cfg.problem.data, schedule, factory, grid, cfg.eps, cfg.beta, cfg.penalty_mode);

    std::string csv =
        "n,value,max_upper_violation,max_lower_violation,dist_sq_to_clamped,"
        "n_times_upper,n_times_lower\n";
    for (const auto& row : report.rows) {
        csv += std::to_string(row.n) + ',' + format_double(row.value) + ',' +
               format_double(row.max_upper_violation) + ',' +
               format_double(row.max_lower_violation) + ',' +
               format_double(row.dist_sq_to_clamped) + ',' + format_double(row.n_times_upper) +
               ',' + format_double(row.n_times_lower) + '\n';
    }
    write_file(out_dir / "convergence.csv", csv);

    JsonWriter jw;
    jw.begin_object();
    jw.key("command").string("converge");
    jw.key("grid_steps").unsigned_integer(report.grid_steps);
    jw.key("clamped_reference_value").number(report.clamped_reference_value);
    jw.key("distance_nonincreasing").boolean(report.distance_nonincreasing);
    jw.end_object();
    write_file(out_dir / "summary.json", jw.str() + "\n");
}

void cmd_compare(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    if (!cfg.problem_b) {
        throw ConfigError("compare needs problem_a and problem_b sections");
    }
    const TimeGrid grid = TimeGrid::uniform(cfg.horizon, cfg.steps);
    const WeightProfile w = weights_from(cfg, cfg.problem, grid);

    // Shared noise: both problems run on backends built from the same seed.
    auto engine_a = build_engine(cfg, cfg.problem, grid, false);
    auto engine_b = build_engine(cfg, *cfg.problem_b, grid, false);
    const SolutionBundle a = dispatch_solver(cfg, cfg.problem, *engine_a, grid, w);
    const SolutionBundle b = dispatch_solver(cfg, *cfg.problem_b, *engine_b, grid, w);
    // The reflection-order theorem needs a shared lower barrier and no upper.
    const bool shared_lower_only = cfg.problem.upper_spec.empty() &&
                                   cfg.problem_b->upper_spec.empty() &&
                                   !cfg.problem.lower_spec.empty() &&
                                   cfg.problem.lower_spec == cfg.problem_b->lower_spec;
    const ComparisonResult res =
        comparison_check(a, b, 1e-8,
                         shared_lower_only ? ReflectionOrderCheck::require
                                           : ReflectionOrderCheck::skip);

    JsonWriter jw;
    jw.begin_object();
    jw.key("command").string("compare");
    jw.key("ordered").boolean(res.ordered);
    jw.key("worst_y_violation").number(res.worst_y_violation);
    jw.key("k_checked").boolean(res.k_checked);
    jw.key("worst_k_violation").number(res.k_checked ? res.worst_k_violation : 0.0);
    jw.key("y0_a").number(a.level_mean(a.y, 0));
    jw.key("y0_b").number(b.level_mean(b.y, 0));
    jw.end_object();
    write_file(out_dir / "comparison.json", jw.str() + "\n");
}

void cmd_price(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    const TimeGrid grid = TimeGrid::uniform(cfg.horizon, cfg.steps);
    const GameSpec spec = game_spec_from(cfg.problem);
    if (!spec.lower_payoff && !spec.upper_payoff) {
        throw ConfigError("price needs at least one barrier payoff");
    }

    // Oracle on the lattice; pricing engine as configured (risk neutral).
    const Lattice oracle_lattice = Lattice::build(spec.market, grid);
    const DynkinValue oracle = dynkin_tree_oracle(spec, oracle_lattice, grid);

    auto engine = build_engine(cfg, cfg.problem, grid, /*risk_neutral=*/true);
    PricingEngine pe = PricingEngine::clamped;
    if (cfg.solver == "penalized") pe = PricingEngine::penalized;
    if (cfg.solver == "picard") pe = PricingEngine::picard;
    const PriceResult price = price_game_option(spec, pe, *engine, grid, cfg.penalty,
                                                cfg.picard);

    const double denom = std::abs(oracle.value) > 1e-300 ? std::abs(oracle.value) : 1.0;
    const double gap = (price.value - oracle.value) / denom;

    JsonWriter jw;
    jw.begin_object();
    jw.key("command").string("price");
    jw.key("engine").string(cfg.solver == "penalized"  ? "penalized"
                            : cfg.solver == "picard"   ? "picard"
                                                       : "clamped");
    jw.key("backend").string(cfg.backend);
    jw.key("oracle_value").number(oracle.value);
    jw.key("engine_value").number(price.value);
    jw.key("relative_gap").number(gap);
    if (price.solution.kind == EnsembleKind::lattice) {
        jw.key("regions").begin_object();
        jw.key("tolerance").number(price.regions.tolerance);
        jw.key("exercise").begin_array();
        for (const auto& level : price.regions.exercise) {
            jw.begin_array();
            for (auto m : level) jw.integer(m);
            jw.end_array();
        }
        jw.end_array();
        jw.key("cancel").begin_array();
        for (const auto& level : price.regions.cancel) {
            jw.begin_array();
            for (auto m : level) jw.integer(m);
            jw.end_array();
        }
        jw.end_array();
        jw.end_object();
    } else {
        // Per-step active fractions keep path-engine output compact.
        jw.key("regions").begin_object();
        jw.key("tolerance").number(price.regions.tolerance);
        auto fraction = [](const std::vector<std::uint8_t>& level) {
            double acc = 0.0;
            for (auto m : level) acc += m;
            return level.empty() ? 0.0 : acc / static_cast<double>(level.size());
        };
        jw.key("exercise_fraction").begin_array();
        for (const auto& level : price.regions.exercise) jw.number(fraction(level));
        jw.end_array();
        jw.key("cancel_fraction").begin_array();
        for (const auto& level : price.regions.cancel) jw.number(fraction(level));
        jw.end_array();
        jw.end_object();
    }
    jw.end_object();
    write_file(out_dir / "price.json", jw.str() + "\n");
}

}  // namespace

Command parse_command(const std::string& name) {
    if (name == "solve") return Command::solve;
    if (name == "converge") return Command::converge;
    if (name == "compare") return Command::compare;
    if (name == "price") return Command::price;
    throw ConfigError("unknown command '" + name + "'");
}

void run_command(Command cmd, const RunConfig& cfg, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    switch (cmd) {
        case Command::solve: cmd_solve(cfg, out_dir); break;
        case Command::converge: cmd_converge(cfg, out_dir); break;
        case Command::compare: cmd_compare(cfg, out_dir); break;
        case Command::price: cmd_price(cfg, out_dir); break;
    }
}

}  // namespace drbsde
