#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>

#include "drbsde/backend.hpp"
#include "drbsde/diagnostics.hpp"
#include "drbsde/game_option.hpp"
#include "drbsde/norms.hpp"
#include "drbsde/parallel.hpp"
#include "drbsde/problem.hpp"
#include "drbsde/solver.hpp"

namespace py = pybind11;
using namespace drbsde;

namespace {

/// Owns everything a backend needs so Python lifetimes stay simple.
struct BackendHandle {
    TimeGrid grid;
    std::optional<Lattice> lattice;
    std::unique_ptr<CondExpBackend> impl;

    BackendHandle(TimeGrid g) : grid(std::move(g)) {}
    BackendHandle(const BackendHandle&) = delete;
    BackendHandle& operator=(const BackendHandle&) = delete;
};

std::unique_ptr<BackendHandle> make_lattice_handle(const MarketCurves& market,
                                                   const TimeGrid& grid) {
    auto h = std::make_unique<BackendHandle>(grid);
    h->lattice = Lattice::build(market, h->grid);
    h->impl = std::make_unique<LatticeBackend>(*h->lattice);
    return h;
}

std::unique_ptr<BackendHandle> make_regression_handle(const MarketCurves& market,
                                                      const TimeGrid& grid,
                                                      std::size_t n_paths, std::uint64_t seed,
                                                      int degree, BasisTransform transform) {
    auto h = std::make_unique<BackendHandle>(grid);
    PathEnsemble paths = PathEnsemble::simulate(h->grid, n_paths, 1, seed);
    MarketPaths mp = MarketPaths::simulate(market, paths, h->grid);
    h->impl = make_regression_backend(std::move(paths), std::move(mp.s), h->grid, degree,
                                      transform);
    return h;
}

std::vector<std::vector<double>> grid_levels(const GridFunction& g) {
    std::vector<std::vector<double>> out(g.levels());
    for (std::size_t i = 0; i < g.levels(); ++i) {
        const auto lv = g.level(i);
        out[i].assign(lv.begin(), lv.end());
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_drbsde, m) {
    m.doc() = "Reflected BSDE solvers with stochastic Lipschitz weights and a Dynkin-game "
              "option pricer";

    py::class_<TimeGrid>(m, "TimeGrid")
        .def_static("uniform", &TimeGrid::uniform, py::arg("horizon"), py::arg("steps"))
        .def(py::init<std::vector<double>>(), py::arg("nodes"))
        .def_property_readonly("steps", &TimeGrid::steps)
        .def_property_readonly("horizon", &TimeGrid::horizon)
        .def("node", &TimeGrid::node)
        .def("dt", &TimeGrid::dt)
        .def("nodes", [](const TimeGrid& g) {
            return std::vector<double>(g.nodes().begin(), g.nodes().end());
        });

    py::class_<WeightProfile>(m, "WeightProfile")
        .def_static("build", &WeightProfile::build, py::arg("mu"), py::arg("gamma"),
                    py::arg("eps"), py::arg("beta"), py::arg("grid"))
        .def_static("constant", &WeightProfile::constant, py::arg("mu"), py::arg("gamma"),
                    py::arg("eps"), py::arg("beta"), py::arg("grid"))
        .def_readonly("mu", &WeightProfile::mu)
        .def_readonly("gamma", &WeightProfile::gamma)
        .def_readonly("a_sq", &WeightProfile::a_sq)
        .def_readonly("cum_a", &WeightProfile::cum_a)
        .def_readonly("eps", &WeightProfile::eps)
        .def_readonly("beta", &WeightProfile::beta);

    m.def("accumulate_weights", &WeightProfile::build, py::arg("mu"), py::arg("gamma"),
          py::arg("eps"), py::arg("beta"), py::arg("grid"));
    m.def("build_grid", &TimeGrid::uniform, py::arg("horizon"), py::arg("steps"));

    py::class_<Generator>(m, "Generator")
        .def_static("zero", &Generator::zero)
        .def_static("linear_in_y", &Generator::linear_in_y, py::arg("rate"))
        .def_static("affine", &Generator::affine, py::arg("c0"), py::arg("cy"), py::arg("cz"))
        .def_static("discounting", &Generator::discounting, py::arg("rate"))
        .def(py::init([](std::function<double(double, double, double)> f,
                         std::function<double(double)> mu,
                         std::function<double(double)> gamma) {
                 return Generator{std::move(f), std::move(mu), std::move(gamma)};
             }),
             py::arg("f"), py::arg("mu"), py::arg("gamma"))
        .def("__call__",
             [](const Generator& g, double t, double y, double z) { return g.f(t, y, z); });

    m.def("probe_generator_envelope", &probe_generator_envelope, py::arg("generator"),
          py::arg("horizon"), py::arg("n_probes"), py::arg("seed"), py::arg("range") = 10.0);

    py::class_<ProblemData>(m, "ProblemData")
        .def(py::init([](std::function<double(double)> terminal, Generator generator,
                         std::optional<SurfaceFn> lower, std::optional<SurfaceFn> upper) {
                 ProblemData p;
                 p.terminal = std::move(terminal);
                 p.generator = std::move(generator);
                 p.lower = std::move(lower);
                 p.upper = std::move(upper);
                 return p;
             }),
             py::arg("terminal"), py::arg("generator"), py::arg("lower") = std::nullopt,
             py::arg("upper") = std::nullopt)
        .def_property_readonly("has_lower", &ProblemData::has_lower)
        .def_property_readonly("has_upper", &ProblemData::has_upper);

    py::class_<MarketCurves>(m, "MarketCurves")
        .def_static("constants", &MarketCurves::constants, py::arg("rate"), py::arg("theta"),
                    py::arg("sigma"), py::arg("s0"))
        .def(py::init([](std::function<double(double)> rate,
                         std::function<double(double)> theta,
                         std::function<double(double)> sigma, double s0) {
                 return MarketCurves{std::move(rate), std::move(theta), std::move(sigma), s0};
             }),
             py::arg("rate"), py::arg("theta"), py::arg("sigma"), py::arg("s0"))
        .def_readonly("s0", &MarketCurves::s0);

    py::class_<PathEnsemble>(m, "PathEnsemble")
        .def_static("simulate", &PathEnsemble::simulate, py::arg("grid"), py::arg("n_paths"),
                    py::arg("dim"), py::arg("seed"))
        .def_property_readonly("n_paths", &PathEnsemble::n_paths)
        .def_property_readonly("dim", &PathEnsemble::dim)
        .def_property_readonly("n_steps", &PathEnsemble::n_steps)
        .def("increment", &PathEnsemble::increment, py::arg("step"), py::arg("path"),
             py::arg("component") = 0);
    m.def("simulate_brownian", &PathEnsemble::simulate, py::arg("grid"), py::arg("n_paths"),
          py::arg("dim"), py::arg("seed"));

    py::class_<MarketPaths>(m, "MarketPaths")
        .def_static("simulate", &MarketPaths::simulate, py::arg("curves"), py::arg("paths"),
                    py::arg("grid"))
        .def_property_readonly("levels",
                               [](const MarketPaths& mp) { return grid_levels(mp.s); })
        .def("value", [](const MarketPaths& mp, std::size_t level, std::size_t path) {
            return mp.s.at(level, path);
        });
    m.def("simulate_market", &MarketPaths::simulate, py::arg("curves"), py::arg("paths"),
          py::arg("grid"));

    py::enum_<BasisTransform>(m, "BasisTransform")
        .value("identity", BasisTransform::identity)
        .value("log_state", BasisTransform::log_state);

    py::enum_<EnsembleKind>(m, "EnsembleKind")
        .value("lattice", EnsembleKind::lattice)
        .value("paths", EnsembleKind::paths);

    py::class_<BackendHandle>(m, "Backend")
        .def_property_readonly("kind", [](const BackendHandle& h) { return h.impl->kind(); })
        .def_property_readonly("grid", [](const BackendHandle& h) { return h.grid; })
        .def("n_states",
             [](const BackendHandle& h, std::size_t level) { return h.impl->n_states(level); })
        .def("state", [](const BackendHandle& h, std::size_t level,
                         std::size_t idx) { return h.impl->state(level, idx); })
        .def("condexp",
             [](BackendHandle& h, std::size_t step, const std::vector<double>& next) {
                 std::vector<double> out(h.impl->n_states(step));
                 h.impl->condexp(step, next, out);
                 return out;
             })
        .def("condexp_increment",
             [](BackendHandle& h, std::size_t step, const std::vector<double>& next) {
                 std::vector<double> out(h.impl->n_states(step));
                 h.impl->condexp_increment(step, next, out);
                 return out;
             });

    m.def("lattice_backend", &make_lattice_handle, py::arg("market"), py::arg("grid"));
    m.def("regression_backend", &make_regression_handle, py::arg("market"), py::arg("grid"),
          py::arg("n_paths"), py::arg("seed"), py::arg("degree") = 3,
          py::arg("transform") = BasisTransform::log_state);

    py::class_<SolutionBundle>(m, "SolutionBundle")
        .def_property_readonly("kind", [](const SolutionBundle& s) { return s.kind; })
        .def_property_readonly("y", [](const SolutionBundle& s) { return grid_levels(s.y); })
        .def_property_readonly("z", [](const SolutionBundle& s) { return grid_levels(s.z); })
        .def_property_readonly("k_plus",
                               [](const SolutionBundle& s) { return grid_levels(s.k_plus); })
        .def_property_readonly("k_minus",
                               [](const SolutionBundle& s) { return grid_levels(s.k_minus); })
        .def_property_readonly("state",
                               [](const SolutionBundle& s) { return grid_levels(s.state); })
        .def_property_readonly("solver",
                               [](const SolutionBundle& s) { return s.meta.solver; })
        .def_property_readonly(
            "penalty_level", [](const SolutionBundle& s) { return s.meta.penalty_level; })
        .def("mean_y", [](const SolutionBundle& s,
                          std::size_t level) { return s.level_mean(s.y, level); })
        .def_property_readonly("value",
                               [](const SolutionBundle& s) { return s.level_mean(s.y, 0); });

    py::class_<NormReport>(m, "NormReport")
        .def_readonly("sup_norm", &NormReport::sup_norm)
        .def_readonly("aY_norm", &NormReport::aY_norm)
        .def_readonly("Z_norm", &NormReport::Z_norm)
        .def_readonly("combined", &NormReport::combined);

    m.def(
        "beta_norms",
        [](const SolutionBundle& sol, const WeightProfile& w, const TimeGrid& grid) {
            return beta_norms(sol, w, grid);
        },
        py::arg("solution"), py::arg("weights"), py::arg("grid"));
    m.def(
        "beta_distance_sq",
        [](const SolutionBundle& a, const SolutionBundle& b, const WeightProfile& w,
           const TimeGrid& grid) { return beta_distance_sq(a, b, w, grid); },
        py::arg("a"), py::arg("b"), py::arg("weights"), py::arg("grid"));

    m.def("sample_weights", &sample_weights, py::arg("generator"), py::arg("grid"),
          py::arg("eps") = 1e-4, py::arg("beta") = 6.0);

    py::enum_<PenaltyMode>(m, "PenaltyMode")
        .value("all_barriers", PenaltyMode::all_barriers)
        .value("upper_only", PenaltyMode::upper_only);

    m.def(
        "solve_bsde",
        [](const ProblemData& p, BackendHandle& h, const WeightProfile& w) {
            return solve_bsde(p, *h.impl, h.grid, w);
        },
        py::arg("problem"), py::arg("backend"), py::arg("weights"));
    m.def(
        "solve_penalized",
        [](const ProblemData& p, double n, BackendHandle& h, const WeightProfile& w,
           PenaltyMode mode) { return solve_penalized(p, n, *h.impl, h.grid, w, mode); },
        py::arg("problem"), py::arg("penalty"), py::arg("backend"), py::arg("weights"),
        py::arg("mode") = PenaltyMode::all_barriers);
    m.def(
        "solve_clamped",
        [](const ProblemData& p, BackendHandle& h, const WeightProfile& w) {
            return solve_clamped(p, *h.impl, h.grid, w);
        },
        py::arg("problem"), py::arg("backend"), py::arg("weights"));

    py::class_<PicardConfig>(m, "PicardConfig")
        .def(py::init([](double tol, int max_iter) {
                 return PicardConfig{tol, max_iter};
             }),
             py::arg("tol") = 1e-8, py::arg("max_iter") = 25)
        .def_readwrite("tol", &PicardConfig::tol)
        .def_readwrite("max_iter", &PicardConfig::max_iter);

    py::class_<PicardResult>(m, "PicardResult")
        .def_readonly("solution", &PicardResult::solution)
        .def_readonly("distances", &PicardResult::distances)
        .def_readonly("converged", &PicardResult::converged)
        .def_readonly("iterations", &PicardResult::iterations);

    m.def(
        "picard_solve",
        [](const ProblemData& p, const PicardConfig& cfg, BackendHandle& h,
           const WeightProfile& w) { return picard_solve(p, cfg, *h.impl, h.grid, w); },
        py::arg("problem"), py::arg("config"), py::arg("backend"), py::arg("weights"));

    m.def("penalize_generator_value",
          [](const Generator& f, double n, std::optional<SurfaceFn> lower,
             std::optional<SurfaceFn> upper, double t, double s, double y, double z) {
              return penalize_generator(f, n, std::move(lower), std::move(upper))
                  .eval(t, s, y, z);
          },
          py::arg("generator"), py::arg("penalty"), py::arg("lower"), py::arg("upper"),
          py::arg("t"), py::arg("s"), py::arg("y"), py::arg("z"));

    py::class_<SkorokhodResidual>(m, "SkorokhodResidual")
        .def_readonly("lower", &SkorokhodResidual::lower)
        .def_readonly("upper", &SkorokhodResidual::upper);
    m.def("skorokhod_residual", &skorokhod_residual, py::arg("solution"), py::arg("problem"),
          py::arg("grid"));

    py::enum_<ReflectionOrderCheck>(m, "ReflectionOrderCheck")
        .value("automatic", ReflectionOrderCheck::automatic)
        .value("require", ReflectionOrderCheck::require)
        .value("skip", ReflectionOrderCheck::skip);

    py::class_<ComparisonResult>(m, "ComparisonResult")
        .def_readonly("ordered", &ComparisonResult::ordered)
        .def_readonly("worst_y_violation", &ComparisonResult::worst_y_violation)
        .def_readonly("k_checked", &ComparisonResult::k_checked)
        .def_readonly("worst_k_violation", &ComparisonResult::worst_k_violation);
    m.def("comparison_check", &comparison_check, py::arg("a"), py::arg("b"),
          py::arg("tol") = 1e-8, py::arg("k_order") = ReflectionOrderCheck::automatic);

    m.def("apriori_ratio", &apriori_ratio, py::arg("solution"), py::arg("problem"),
          py::arg("weights"), py::arg("grid"));

    py::class_<CrossingTrace::PathTrace>(m, "PathTrace")
        .def_readonly("touches", &CrossingTrace::PathTrace::touches)
        .def_readonly("stationary", &CrossingTrace::PathTrace::stationary);
    py::class_<CrossingTrace>(m, "CrossingTrace")
        .def_readonly("paths", &CrossingTrace::paths);
    m.def("crossing_times", &crossing_times, py::arg("solution"), py::arg("problem"),
          py::arg("grid"), py::arg("l_max") = 64);

    py::class_<PenaltySchedule>(m, "PenaltySchedule")
        .def(py::init([](std::vector<int> levels) {
                 PenaltySchedule s{std::move(levels)};
                 s.validate();
                 return s;
             }),
             py::arg("levels"))
        .def_static("doubling", &PenaltySchedule::doubling, py::arg("first") = 1,
                    py::arg("last") = 256)
        .def_readonly("levels", &PenaltySchedule::levels);

    py::class_<ConvergenceRow>(m, "ConvergenceRow")
        .def_readonly("n", &ConvergenceRow::n)
        .def_readonly("value", &ConvergenceRow::value)
        .def_readonly("max_upper_violation", &ConvergenceRow::max_upper_violation)
        .def_readonly("max_lower_violation", &ConvergenceRow::max_lower_violation)
        .def_readonly("dist_sq_to_clamped", &ConvergenceRow::dist_sq_to_clamped)
        .def_readonly("n_times_upper", &ConvergenceRow::n_times_upper)
        .def_readonly("n_times_lower", &ConvergenceRow::n_times_lower);
    py::class_<ConvergenceReport>(m, "ConvergenceReport")
        .def_readonly("rows", &ConvergenceReport::rows)
        .def_readonly("grid_steps", &ConvergenceReport::grid_steps)
        .def_readonly("distance_nonincreasing", &ConvergenceReport::distance_nonincreasing)
        .def_readonly("clamped_reference_value",
                      &ConvergenceReport::clamped_reference_value);

    m.def(
        "convergence_study_lattice",
        [](const ProblemData& problem, const PenaltySchedule& schedule,
           const MarketCurves& market, const TimeGrid& base_grid, double eps, double beta,
           PenaltyMode mode) {
            const BackendFactory factory = [&market](const TimeGrid& g) {
                return make_lattice_backend(Lattice::build(market, g));
            };
            return convergence_study(problem, schedule, factory, base_grid, eps, beta, mode);
        },
        py::arg("problem"), py::arg("schedule"), py::arg("market"), py::arg("base_grid"),
        py::arg("eps") = 1e-4, py::arg("beta") = 6.0,
        py::arg("mode") = PenaltyMode::all_barriers);

    py::class_<GameSpec>(m, "GameSpec")
        .def(py::init([](MarketCurves market, std::optional<SurfaceFn> lower,
                         std::optional<SurfaceFn> upper,
                         std::function<double(double)> terminal) {
                 GameSpec s;
                 s.market = std::move(market);
                 s.lower_payoff = std::move(lower);
                 s.upper_payoff = std::move(upper);
                 s.terminal = std::move(terminal);
                 return s;
             }),
             py::arg("market"), py::arg("lower_payoff"), py::arg("upper_payoff"),
             py::arg("terminal"))
        .def("validate", &GameSpec::validate, py::arg("grid"), py::arg("state_samples"));

    m.def(
        "evaluate_payoff",
        [](const GameSpec& spec, std::size_t tau, std::size_t nu,
           const std::vector<double>& trajectory, const TimeGrid& grid) {
            return evaluate_payoff(spec, tau, nu, trajectory, grid);
        },
        py::arg("spec"), py::arg("tau"), py::arg("nu"), py::arg("trajectory"), py::arg("grid"));

    py::class_<ExerciseRegions>(m, "ExerciseRegions")
        .def_readonly("exercise", &ExerciseRegions::exercise)
        .def_readonly("cancel", &ExerciseRegions::cancel)
        .def_readonly("tolerance", &ExerciseRegions::tolerance);

    py::class_<DynkinValue>(m, "DynkinValue")
        .def_readonly("value", &DynkinValue::value)
        .def_readonly("values", &DynkinValue::values)
        .def_readonly("policy", &DynkinValue::policy);

    m.def(
        "dynkin_tree_oracle",
        [](const GameSpec& spec, const BackendHandle& h) {
            if (!h.lattice) {
                throw std::invalid_argument("dynkin_tree_oracle: needs a lattice backend");
            }
            return dynkin_tree_oracle(spec, *h.lattice, h.grid);
        },
        py::arg("spec"), py::arg("backend"));

    py::enum_<PricingEngine>(m, "PricingEngine")
        .value("clamped", PricingEngine::clamped)
        .value("penalized", PricingEngine::penalized)
        .value("picard", PricingEngine::picard);

    py::class_<PriceResult>(m, "PriceResult")
        .def_readonly("value", &PriceResult::value)
        .def_readonly("regions", &PriceResult::regions)
        .def_readonly("solution", &PriceResult::solution);

    m.def(
        "price_game_option",
        [](const GameSpec& spec, PricingEngine engine, BackendHandle& h, double penalty,
           const PicardConfig& picard) {
            return price_game_option(spec, engine, *h.impl, h.grid, penalty, picard);
        },
        py::arg("spec"), py::arg("engine"), py::arg("backend"), py::arg("penalty") = 256.0,
        py::arg("picard") = PicardConfig{});

    m.def("game_problem", &game_problem, py::arg("spec"));
    m.def("set_threads", &parallel::set_threads, py::arg("n"));

#ifdef VERSION_INFO
    m.attr("__version__") = VERSION_INFO;
#else
    m.attr("__version__") = "0.1.0";
#endif
}
