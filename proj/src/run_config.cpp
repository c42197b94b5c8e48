#include "drbsde/run_config.hpp"

#include <cmath>
#include <json.hpp>

namespace drbsde {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError("config error at '" + where + "': " + what);
}

double require_number(const json& j, const std::string& where, const char* field) {
    if (!j.contains(field) || !j[field].is_number()) {
        fail(where + "." + field, "expected a number");
    }
    return j[field].get<double>();
}

double number_or(const json& j, const char* field, double fallback) {
    if (!j.contains(field)) return fallback;
    return j[field].get<double>();
}

std::function<double(double)> parse_curve(const json& j, const std::string& where,
                                          double horizon) {
    if (j.is_number()) {
        const double v = j.get<double>();
        return [v](double) { return v; };
    }
    if (j.is_object() && j.contains("start") && j.contains("end")) {
        const double a = j["start"].get<double>();
        const double b = j["end"].get<double>();
        return [a, b, horizon](double t) { return a + (b - a) * t / horizon; };
    }
    fail(where, "expected a number or {start, end}");
}

MarketCurves parse_market(const json& j, const std::string& where, double horizon) {
    if (!j.is_object()) fail(where, "expected an object");
    MarketCurves m;
    m.s0 = require_number(j, where, "s0");
    if (!(m.s0 > 0.0)) fail(where + ".s0", "spot must be positive");
    m.rate = j.contains("rate") ? parse_curve(j["rate"], where + ".rate", horizon)
                                : [](double) { return 0.0; };
    m.sigma = j.contains("sigma") ? parse_curve(j["sigma"], where + ".sigma", horizon)
                                  : [](double) { return 0.0; };
    m.risk_premium = j.contains("theta")
                         ? parse_curve(j["theta"], where + ".theta", horizon)
                         : [](double) { return 0.0; };
    return m;
}

std::function<double(double)> parse_terminal(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("name")) fail(where, "expected {name, ...}");
    const std::string name = j["name"].get<std::string>();
    if (name == "constant") {
        const double v = require_number(j, where, "value");
        return [v](double) { return v; };
    }
    if (name == "put") {
        const double k = require_number(j, where, "strike");
        return [k](double s) { return std::max(k - s, 0.0); };
    }
    if (name == "call") {
        const double k = require_number(j, where, "strike");
        return [k](double s) { return std::max(s - k, 0.0); };
    }
    if (name == "asset") {
        return [](double s) { return s; };
    }
    fail(where + ".name", "unknown terminal '" + name + "'");
}

SurfaceFn parse_barrier(const json& j, const std::string& where, double horizon) {
    if (!j.is_object() || !j.contains("name")) fail(where, "expected {name, ...}");
    const std::string name = j["name"].get<std::string>();
    if (name == "constant") {
        const double v = require_number(j, where, "value");
        return [v](double, double) { return v; };
    }
    if (name == "put") {
        const double k = require_number(j, where, "strike");
        return [k](double, double s) { return std::max(k - s, 0.0); };
    }
    if (name == "call") {
        const double k = require_number(j, where, "strike");
        return [k](double, double s) { return std::max(s - k, 0.0); };
    }
    if (name == "put_premium") {
        const double k = require_number(j, where, "strike");
        const double prem = require_number(j, where, "premium");
        return [k, prem](double, double s) { return std::max(k - s, 0.0) + prem; };
    }
    if (name == "call_premium") {
        const double k = require_number(j, where, "strike");
        const double prem = require_number(j, where, "premium");
        return [k, prem](double, double s) { return std::max(s - k, 0.0) + prem; };
    }
    if (name == "linear_t") {
        const double a = require_number(j, where, "start");
        const double b = require_number(j, where, "end");
        return [a, b, horizon](double t, double) { return a + (b - a) * t / horizon; };
    }
    fail(where + ".name", "unknown barrier '" + name + "'");
}

Generator parse_generator(const json& j, const std::string& where, const MarketCurves& market) {
    if (!j.is_object() || !j.contains("name")) fail(where, "expected {name, ...}");
    const std::string name = j["name"].get<std::string>();
    if (name == "zero") return Generator::zero();
    if (name == "linear") return Generator::linear_in_y(require_number(j, where, "rate"));
    if (name == "affine") {
        return Generator::affine(number_or(j, "const", 0.0), number_or(j, "y_coef", 0.0),
                                 number_or(j, "z_coef", 0.0));
    }
    if (name == "discounting") return Generator::discounting(market.rate);
    fail(where + ".name", "unknown generator '" + name + "'");
}

ProblemConfig parse_problem(const json& j, const std::string& where, double horizon) {
    if (!j.is_object()) fail(where, "expected an object");
    if (!j.contains("market")) fail(where + ".market", "market section is required");
    ProblemConfig cfg;
    cfg.market = parse_market(j["market"], where + ".market", horizon);
    if (!j.contains("terminal")) fail(where + ".terminal", "terminal section is required");
    cfg.data.terminal = parse_terminal(j["terminal"], where + ".terminal");
    if (!j.contains("generator")) fail(where + ".generator", "generator section is required");
    cfg.data.generator = parse_generator(j["generator"], where + ".generator", cfg.market);
    if (j.contains("lower")) {
        cfg.lower = parse_barrier(j["lower"], where + ".lower", horizon);
        cfg.data.lower = cfg.lower;
        cfg.lower_spec = j["lower"].dump();
    }
    if (j.contains("upper")) {
        cfg.upper = parse_barrier(j["upper"], where + ".upper", horizon);
        cfg.data.upper = cfg.upper;
        cfg.upper_spec = j["upper"].dump();
    }
    return cfg;
}

}  // namespace

namespace {

RunConfig parse_run_config_impl(const json& doc) {
    RunConfig cfg;

    if (!doc.contains("grid")) fail("grid", "grid section is required");
    const json& grid = doc["grid"];
    cfg.horizon = require_number(grid, "grid", "horizon");
    if (!(cfg.horizon > 0.0)) fail("grid.horizon", "must be positive");
    const double steps = require_number(grid, "grid", "steps");
    if (!(steps >= 1.0) || steps != std::floor(steps)) {
        fail("grid.steps", "must be a positive integer");
    }
    cfg.steps = static_cast<std::size_t>(steps);

    if (doc.contains("problem")) {
        cfg.problem = parse_problem(doc["problem"], "problem", cfg.horizon);
    } else if (doc.contains("problem_a")) {
        cfg.problem = parse_problem(doc["problem_a"], "problem_a", cfg.horizon);
    } else {
        fail("problem", "a problem (or problem_a) section is required");
    }
    if (doc.contains("problem_b")) {
        cfg.problem_b = parse_problem(doc["problem_b"], "problem_b", cfg.horizon);
    }

    if (doc.contains("weights")) {
        const json& w = doc["weights"];
        cfg.eps = number_or(w, "eps", cfg.eps);
        cfg.beta = number_or(w, "beta", cfg.beta);
        if (!(cfg.eps > 0.0)) fail("weights.eps", "must be positive");
        if (!(cfg.beta > 0.0)) fail("weights.beta", "must be positive");
        if (w.contains("mu")) cfg.mu_override = w["mu"].get<double>();
        if (w.contains("gamma")) cfg.gamma_override = w["gamma"].get<double>();
        if ((cfg.mu_override && *cfg.mu_override < 0.0) ||
            (cfg.gamma_override && *cfg.gamma_override < 0.0)) {
            fail("weights", "mu and gamma must be nonnegative");
        }
    }

    if (doc.contains("engine")) {
        const json& e = doc["engine"];
        if (e.contains("backend")) cfg.backend = e["backend"].get<std::string>();
        if (cfg.backend != "lattice" && cfg.backend != "regression") {
            fail("engine.backend", "expected 'lattice' or 'regression'");
        }
        if (e.contains("solver")) cfg.solver = e["solver"].get<std::string>();
        if (cfg.solver != "bsde" && cfg.solver != "penalized" && cfg.solver != "clamped" &&
            cfg.solver != "picard") {
            fail("engine.solver", "expected bsde|penalized|clamped|picard");
        }
        cfg.penalty = number_or(e, "penalty", cfg.penalty);
        if (cfg.penalty < 0.0) fail("engine.penalty", "must be nonnegative");
        if (e.contains("penalty_mode")) {
            const std::string m = e["penalty_mode"].get<std::string>();
            if (m == "all") {
                cfg.penalty_mode = PenaltyMode::all_barriers;
            } else if (m == "upper") {
                cfg.penalty_mode = PenaltyMode::upper_only;
            } else {
                fail("engine.penalty_mode", "expected 'all' or 'upper'");
            }
        }
        if (e.contains("schedule")) {
            if (!e["schedule"].is_array() || e["schedule"].empty()) {
                fail("engine.schedule", "expected a nonempty array");
            }
            cfg.schedule.clear();
            for (const auto& v : e["schedule"]) cfg.schedule.push_back(v.get<int>());
            PenaltySchedule s{cfg.schedule};
            try {
                s.validate();
            } catch (const std::exception& ex) {
                fail("engine.schedule", ex.what());
            }
        }
        if (e.contains("picard")) {
            cfg.picard.tol = number_or(e["picard"], "tol", cfg.picard.tol);
            cfg.picard.max_iter =
                static_cast<int>(number_or(e["picard"], "max_iter", cfg.picard.max_iter));
            if (!(cfg.picard.tol > 0.0)) fail("engine.picard.tol", "must be positive");
            if (cfg.picard.max_iter < 1) fail("engine.picard.max_iter", "must be >= 1");
        }
        cfg.degree = static_cast<int>(number_or(e, "degree", cfg.degree));
        if (cfg.degree < 0) fail("engine.degree", "must be nonnegative");
        if (e.contains("transform")) {
            const std::string t = e["transform"].get<std::string>();
            if (t == "identity") {
                cfg.transform = BasisTransform::identity;
            } else if (t == "log") {
                cfg.transform = BasisTransform::log_state;
            } else {
                fail("engine.transform", "expected 'identity' or 'log'");
            }
        }
    }

    if (doc.contains("simulation")) {
        const json& s = doc["simulation"];
        const double np = number_or(s, "n_paths", static_cast<double>(cfg.n_paths));
        if (!(np >= 1.0)) fail("simulation.n_paths", "must be >= 1");
        cfg.n_paths = static_cast<std::size_t>(np);
        if (s.contains("seed")) cfg.seed = s["seed"].get<std::uint64_t>();
    }

    if (doc.contains("output")) {
        const json& o = doc["output"];
        if (o.contains("directory")) cfg.out_dir = o["directory"].get<std::string>();
    }

    return cfg;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config root must be an object");
    try {
        return parse_run_config_impl(doc);
    } catch (const json::exception& e) {
        // Wrong field types surface as configuration errors, not numerics.
        throw ConfigError(std::string("config field has the wrong type: ") + e.what());
    }
}

GameSpec game_spec_from(const ProblemConfig& cfg) {
    GameSpec spec;
    spec.market = cfg.market;
    spec.lower_payoff = cfg.lower;
    spec.upper_payoff = cfg.upper;
    spec.terminal = cfg.data.terminal;
    return spec;
}

}  // namespace drbsde
