#pragma once

// JSON scenario files. Every section is validated before any solve and
// unknown keys are rejected; errors name the offending field.
//
//   {
//     "mesh":  {"nodes": 33, "length": 1.0},
//     "alpha": 1.0,
//     "time":  {"horizon": 1.0, "steps": 1000},
//     "load":  {"expression": "sin(pi*t)*cos(pi*x)"},
//     "kernel": {"kind": "identity" | "convolution", "b": EXPR|TABLE, "b_prime": EXPR|TABLE, "y0": EXPR},
//     "dissipation": {"kind": "fatigue" | "weighted_l1", "weight": EXPR|TABLE,
//                     "weight_prime": EXPR|TABLE, "lipschitz": NUMBER},
//     "eps": 1e-3,
//     "schedule": {"eps0": 0.1, "levels": 8} | [eps...],
//     "solver": {"integrator": "implicit" | "explicit", "tolerance": 1e-10, "warm_start": true},
//     "experiments": {...}, "control": {...},
//     "output": "out", "seed": 1, "jobs": 1
//   }
//
// EXPR is a string in t (kernel), x (load profile, y0) or z (weights);
// TABLE is {"points": [...], "values": [...]}, interpolated linearly.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "control.hpp"
#include "expression.hpp"
#include "history.hpp"
#include "load.hpp"
#include "table.hpp"
#include "verify.hpp"
#include "viscous.hpp"
#include "vv.hpp"

namespace hris {

class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

struct ExperimentSettings {
    std::vector<double> eps_list{1e-1, 1e-2, 1e-3};
    double load_cap = 1.0;
    std::size_t n_loads = 10;
    std::size_t n_pairs = 20;
    double variation_limit = 2.0;
    RandomLoadFamily family{};
    std::size_t history_samples = 50;
    double history_tolerance = 1e-6;
    double dual_tolerance = 1e-6;
    double unique_tolerance = 3e-2;
};

struct ControlSettings {
    std::size_t n_time = 1;
    std::size_t n_space = 1;
    double regularization = 1.0;
    double eps = 1e-3;
    OptimizeOptions search{};
    /// Target trajectory generated by a reference parameter vector.
    std::optional<std::vector<double>> target_theta;
    /// Target trajectory given as an expression in t and x.
    std::optional<std::string> target_expression;
};

struct Config {
    Scenario scenario;
    double eps = 1e-3;
    std::vector<double> schedule = geometric_schedule();
    SolveOptions solve{};
    ExperimentSettings experiments{};
    ControlSettings control{};
    std::string output = "out";
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
    /// FNV-1a of the canonical JSON text, written into every CSV.
    std::string hash;
};

namespace detail {

using nlohmann::json;

inline void allow_keys(const json& obj, const std::string& section, std::initializer_list<const char*> keys)
{
    if (!obj.is_object()) {
        throw ConfigError("config: '" + section + "' must be an object");
    }
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : keys) {
            known = known || it.key() == k;
        }
        if (!known) {
            throw ConfigError("config: unknown key '" + (section.empty() ? "" : section + ".") + it.key() + "'");
        }
    }
}

inline double get_number(const json& obj, const char* key, const std::string& field, double fallback)
{
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
        throw ConfigError("config: field '" + field + "' must be a number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
        throw ConfigError("config: field '" + field + "' must be finite");
    }
    return d;
}

inline double get_positive(const json& obj, const char* key, const std::string& field, double fallback)
{
    const double d = get_number(obj, key, field, fallback);
    if (!(d > 0.0)) {
        throw ConfigError("config: field '" + field + "' must be positive (got " + format17(d) + ")");
    }
    return d;
}

inline std::size_t get_count(const json& obj, const char* key, const std::string& field, std::size_t fallback,
                             std::size_t minimum = 1)
{
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(minimum)) {
        throw ConfigError("config: field '" + field + "' must be an integer >= " + std::to_string(minimum));
    }
    return v.get<std::size_t>();
}

inline std::vector<double> get_number_list(const json& v, const std::string& field)
{
    if (!v.is_array() || v.empty()) {
        throw ConfigError("config: field '" + field + "' must be a nonempty array of numbers");
    }
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) {
            throw ConfigError("config: field '" + field + "' must contain numbers only");
        }
        out.push_back(e.get<double>());
    }
    return out;
}

inline Expression parse_expression(const json& v, const std::string& field)
{
    if (!v.is_string()) {
        throw ConfigError("config: field '" + field + "' must be an expression string");
    }
    try {
        return Expression(v.get<std::string>());
    }
    catch (const ExpressionError& e) {
        throw ConfigError("config: field '" + field + "': " + e.what());
    }
}

struct ParsedFunction {
    ScalarFunction fn;
    std::optional<double> table_lipschitz;
};

/// Expression in `variable`, a number, or a piecewise-linear table.
inline ParsedFunction parse_function(const json& v, char variable, const std::string& field)
{
    if (v.is_number()) {
        return {constant_function(v.get<double>()), 0.0};
    }
    if (v.is_string()) {
        return {bind_variable(parse_expression(v, field), variable), std::nullopt};
    }
    if (v.is_object()) {
        allow_keys(v, field, {"points", "values"});
        if (!v.contains("points") || !v.contains("values")) {
            throw ConfigError("config: table '" + field + "' needs 'points' and 'values'");
        }
        try {
            auto pl = std::make_shared<PiecewiseLinear>(get_number_list(v.at("points"), field + ".points"),
                                                        get_number_list(v.at("values"), field + ".values"));
            const double L = pl->max_abs_slope();
            return {[pl](double s) { return (*pl)(s); }, L};
        }
        catch (const ConfigError&) {
            throw;
        }
        catch (const std::invalid_argument& e) {
            throw ConfigError("config: field '" + field + "': " + e.what());
        }
    }
    throw ConfigError("config: field '" + field + "' must be an expression, number or table");
}

/// Largest difference quotient of f on a uniform grid of [-50, 50].
inline double estimate_lipschitz(const ScalarFunction& f)
{
    constexpr int n = 20000;
    constexpr double a = -50.0, b = 50.0;
    const double h = (b - a) / n;
    double L = 0.0;
    double prev = f(a);
    for (int i = 1; i <= n; ++i) {
        const double cur = f(a + i * h);
        L = std::max(L, std::abs(cur - prev) / h);
        prev = cur;
    }
    return L;
}

inline Field nodal_field(const Mesh& mesh, const json& v, const std::string& field)
{
    Field out = Field::zero(mesh.n_nodes());
    if (v.is_number()) {
        return Field::constant(mesh.n_nodes(), v.get<double>());
    }
    const Expression e = parse_expression(v, field);
    for (std::size_t i = 0; i < mesh.n_nodes(); ++i) {
        out[i] = e(Variables{0.0, mesh.node_coords()(static_cast<Eigen::Index>(i)), 0.0});
    }
    if (!out.all_finite()) {
        throw ConfigError("config: field '" + field + "' evaluates to a non-finite value");
    }
    return out;
}

inline json read_json(const std::string& path)
{
    std::ifstream f(path);
    if (!f) {
        throw ConfigError("config: cannot open " + path);
    }
    try {
        return json::parse(f);
    }
    catch (const json::parse_error& e) {
        throw ConfigError("config: " + path + " is not valid JSON: " + e.what());
    }
}

} // namespace detail

inline Config parse_config(const nlohmann::json& root);

namespace detail {
inline Config parse_config_impl(const nlohmann::json& root);
}

/// Parses a JSON document; type mismatches surface as ConfigError.
inline Config parse_config(const nlohmann::json& root)
{
    try {
        return detail::parse_config_impl(root);
    }
    catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

inline Config detail::parse_config_impl(const nlohmann::json& root)
{
    using detail::get_count;
    using detail::get_number;
    using detail::get_positive;
    detail::allow_keys(root, "",
                       {"mesh", "alpha", "time", "load", "kernel", "dissipation", "eps", "schedule", "solver",
                        "experiments", "control", "output", "seed", "jobs"});
    for (const char* required : {"mesh", "time", "load", "dissipation"}) {
        if (!root.contains(required)) {
            throw ConfigError(std::string("config: missing section '") + required + "'");
        }
    }
    Config cfg;
    Scenario& sc = cfg.scenario;

    const auto& mesh = root.at("mesh");
    detail::allow_keys(mesh, "mesh", {"nodes", "length"});
    sc.mesh = std::make_shared<const Mesh>(get_count(mesh, "nodes", "mesh.nodes", 33, 2),
                                           get_positive(mesh, "length", "mesh.length", 1.0));
    sc.alpha = get_positive(root, "alpha", "alpha", 1.0);

    const auto& time = root.at("time");
    detail::allow_keys(time, "time", {"horizon", "steps"});
    sc.horizon = get_positive(time, "horizon", "time.horizon", 1.0);
    sc.n_steps = get_count(time, "steps", "time.steps", 1000);

    const auto& load = root.at("load");
    detail::allow_keys(load, "load", {"expression"});
    if (!load.contains("expression")) {
        throw ConfigError("config: missing field 'load.expression'");
    }
    sc.load = expression_load(*sc.mesh, detail::parse_expression(load.at("expression"), "load.expression"));

    const nlohmann::json kernel = root.value("kernel", nlohmann::json::object());
    detail::allow_keys(kernel, "kernel", {"kind", "b", "b_prime", "y0"});
    const Field y0 = kernel.contains("y0") ? detail::nodal_field(*sc.mesh, kernel.at("y0"), "kernel.y0")
                                           : Field::zero(sc.mesh->n_nodes());
    const std::string kkind = kernel.value("kind", "identity");
    if (kkind == "identity") {
        if (kernel.contains("b") || kernel.contains("b_prime")) {
            throw ConfigError("config: field 'kernel.b' only applies to kind 'convolution'");
        }
        sc.kernel = KernelSpec::identity(y0);
    }
    else if (kkind == "convolution") {
        if (!kernel.contains("b")) {
            throw ConfigError("config: missing field 'kernel.b'");
        }
        auto b = detail::parse_function(kernel.at("b"), 't', "kernel.b");
        auto bp = kernel.contains("b_prime") ? detail::parse_function(kernel.at("b_prime"), 't', "kernel.b_prime")
                                             : detail::ParsedFunction{constant_function(0.0), 0.0};
        sc.kernel = KernelSpec::convolution(b.fn, bp.fn, y0);
    }
    else {
        throw ConfigError("config: field 'kernel.kind' must be 'identity' or 'convolution'");
    }

    const auto& diss = root.at("dissipation");
    detail::allow_keys(diss, "dissipation", {"kind", "weight", "weight_prime", "lipschitz"});
    if (!diss.contains("weight")) {
        throw ConfigError("config: missing field 'dissipation.weight'");
    }
    const auto weight = detail::parse_function(diss.at("weight"), 'z', "dissipation.weight");
    double lipschitz = 0.0;
    if (diss.contains("lipschitz")) {
        lipschitz = get_number(diss, "lipschitz", "dissipation.lipschitz", 0.0);
        if (lipschitz < 0.0) {
            throw ConfigError("config: field 'dissipation.lipschitz' must be nonnegative");
        }
    }
    else {
        lipschitz = weight.table_lipschitz ? *weight.table_lipschitz : detail::estimate_lipschitz(weight.fn);
    }
    std::optional<ScalarFunction> weight_prime;
    if (diss.contains("weight_prime")) {
        weight_prime = detail::parse_function(diss.at("weight_prime"), 'z', "dissipation.weight_prime").fn;
    }
    const std::string dkind = diss.value("kind", "fatigue");
    if (dkind == "fatigue") {
        sc.dissipation = DissipationSpec::fatigue(weight.fn, lipschitz, weight_prime);
    }
    else if (dkind == "weighted_l1") {
        if (weight_prime) {
            throw ConfigError("config: field 'dissipation.weight_prime' only applies to kind 'fatigue'");
        }
        sc.dissipation = DissipationSpec::weighted_l1(weight.fn, lipschitz);
    }
    else {
        throw ConfigError("config: field 'dissipation.kind' must be 'fatigue' or 'weighted_l1'");
    }
    for (std::size_t i = 0; i < y0.size(); ++i) {
        const double w = sc.dissipation.weight(y0[i]);
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw ConfigError("config: field 'dissipation.weight' must be finite and nonnegative at y0");
        }
    }

    cfg.eps = get_positive(root, "eps", "eps", 1e-3);
    if (root.contains("schedule")) {
        const auto& s = root.at("schedule");
        if (s.is_array()) {
            cfg.schedule = detail::get_number_list(s, "schedule");
        }
        else {
            detail::allow_keys(s, "schedule", {"eps0", "levels"});
            cfg.schedule = geometric_schedule(get_positive(s, "eps0", "schedule.eps0", 0.1),
                                              get_count(s, "levels", "schedule.levels", 8));
        }
        for (std::size_t k = 0; k < cfg.schedule.size(); ++k) {
            if (!(cfg.schedule[k] > 0.0) || (k > 0 && !(cfg.schedule[k] < cfg.schedule[k - 1]))) {
                throw ConfigError("config: field 'schedule' must be positive and strictly decreasing");
            }
        }
    }

    if (root.contains("solver")) {
        const auto& s = root.at("solver");
        detail::allow_keys(s, "solver", {"integrator", "tolerance", "warm_start"});
        const std::string integ = s.value("integrator", "implicit");
        if (integ == "implicit") {
            cfg.solve.integrator = Integrator::Implicit;
        }
        else if (integ == "explicit") {
            cfg.solve.integrator = Integrator::Explicit;
        }
        else {
            throw ConfigError("config: field 'solver.integrator' must be 'implicit' or 'explicit'");
        }
        cfg.solve.qp.tolerance = get_positive(s, "tolerance", "solver.tolerance", cfg.solve.qp.tolerance);
        if (s.contains("warm_start")) {
            if (!s.at("warm_start").is_boolean()) {
                throw ConfigError("config: field 'solver.warm_start' must be a boolean");
            }
            cfg.solve.warm_start = s.at("warm_start").get<bool>();
        }
    }

    if (root.contains("experiments")) {
        const auto& e = root.at("experiments");
        detail::allow_keys(e, "experiments",
                           {"eps_list", "load_cap", "n_loads", "n_pairs", "variation_limit", "modes",
                            "min_frequency", "max_frequency", "max_wavenumber", "history_samples",
                            "history_tolerance", "dual_tolerance", "unique_tolerance"});
        auto& x = cfg.experiments;
        if (e.contains("eps_list")) {
            x.eps_list = detail::get_number_list(e.at("eps_list"), "experiments.eps_list");
            for (double v : x.eps_list) {
                if (!(v > 0.0)) {
                    throw ConfigError("config: field 'experiments.eps_list' must contain positive values");
                }
            }
        }
        x.load_cap = get_positive(e, "load_cap", "experiments.load_cap", x.load_cap);
        x.n_loads = get_count(e, "n_loads", "experiments.n_loads", x.n_loads);
        x.n_pairs = get_count(e, "n_pairs", "experiments.n_pairs", x.n_pairs);
        x.variation_limit = get_positive(e, "variation_limit", "experiments.variation_limit", x.variation_limit);
        x.family.n_modes = get_count(e, "modes", "experiments.modes", x.family.n_modes);
        x.family.min_frequency = get_positive(e, "min_frequency", "experiments.min_frequency", x.family.min_frequency);
        x.family.max_frequency = get_positive(e, "max_frequency", "experiments.max_frequency", x.family.max_frequency);
        if (x.family.max_frequency < x.family.min_frequency) {
            throw ConfigError("config: field 'experiments.max_frequency' must be >= min_frequency");
        }
        x.family.max_wavenumber =
            static_cast<int>(get_count(e, "max_wavenumber", "experiments.max_wavenumber", x.family.max_wavenumber, 0));
        x.history_samples = get_count(e, "history_samples", "experiments.history_samples", x.history_samples);
        x.history_tolerance =
            get_positive(e, "history_tolerance", "experiments.history_tolerance", x.history_tolerance);
        x.dual_tolerance = get_positive(e, "dual_tolerance", "experiments.dual_tolerance", x.dual_tolerance);
        x.unique_tolerance = get_positive(e, "unique_tolerance", "experiments.unique_tolerance", x.unique_tolerance);
    }

    if (root.contains("control")) {
        const auto& c = root.at("control");
        detail::allow_keys(c, "control",
                           {"n_time", "n_space", "regularization", "eps", "budget", "initial_step", "min_step",
                            "theta0", "target_theta", "target_expression"});
        auto& x = cfg.control;
        x.n_time = get_count(c, "n_time", "control.n_time", x.n_time);
        x.n_space = get_count(c, "n_space", "control.n_space", x.n_space);
        x.regularization = get_number(c, "regularization", "control.regularization", x.regularization);
        if (x.regularization < 0.0) {
            throw ConfigError("config: field 'control.regularization' must be nonnegative");
        }
        x.eps = get_positive(c, "eps", "control.eps", x.eps);
        x.search.budget = get_count(c, "budget", "control.budget", x.search.budget);
        x.search.initial_step = get_positive(c, "initial_step", "control.initial_step", x.search.initial_step);
        x.search.min_step = get_positive(c, "min_step", "control.min_step", x.search.min_step);
        const std::size_t m = x.n_time * x.n_space;
        if (c.contains("theta0")) {
            x.search.theta0 = detail::get_number_list(c.at("theta0"), "control.theta0");
            if (x.search.theta0.size() != m) {
                throw ConfigError("config: field 'control.theta0' must have n_time * n_space entries");
            }
        }
        if (c.contains("target_theta") && c.contains("target_expression")) {
            throw ConfigError("config: fields 'control.target_theta' and 'control.target_expression' are exclusive");
        }
        if (c.contains("target_theta")) {
            x.target_theta = detail::get_number_list(c.at("target_theta"), "control.target_theta");
            if (x.target_theta->size() != m) {
                throw ConfigError("config: field 'control.target_theta' must have n_time * n_space entries");
            }
        }
        if (c.contains("target_expression")) {
            x.target_expression = detail::parse_expression(c.at("target_expression"), "control.target_expression")
                                      .source();
        }
    }

    if (root.contains("output")) {
        if (!root.at("output").is_string()) {
            throw ConfigError("config: field 'output' must be a string");
        }
        cfg.output = root.at("output").get<std::string>();
    }
    cfg.seed = get_count(root, "seed", "seed", cfg.seed, 0);
    cfg.jobs = get_count(root, "jobs", "jobs", cfg.jobs);
    cfg.control.search.seed = cfg.seed;
    cfg.control.search.jobs = cfg.jobs;
    cfg.hash = hex64(fnv1a(root.dump()));
    return cfg;
}

inline Config load_config(const std::string& path)
{
    const auto root = detail::read_json(path);
    try {
        return parse_config(root);
    }
    catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

inline ExperimentConfig experiment_config(const Config& cfg)
{
    ExperimentConfig e;
    e.base = cfg.scenario;
    e.load_cap = cfg.experiments.load_cap;
    e.eps_list = cfg.experiments.eps_list;
    e.n_loads = cfg.experiments.n_loads;
    e.n_pairs = cfg.experiments.n_pairs;
    e.seed = cfg.seed;
    e.family = cfg.experiments.family;
    e.jobs = cfg.jobs;
    e.solve = cfg.solve;
    e.variation_limit = cfg.experiments.variation_limit;
    return e;
}

inline ControlProblem control_problem(const Config& cfg)
{
    ControlProblem p;
    p.base = cfg.scenario;
    p.n_time = cfg.control.n_time;
    p.n_space = cfg.control.n_space;
    p.regularization = cfg.control.regularization;
    p.eps = cfg.control.eps;
    p.solve = cfg.solve;
    if (cfg.control.target_theta) {
        Scenario sc = p.base;
        sc.load = control_load(p, *cfg.control.target_theta);
        p.target = solve_viscous(sc, p.eps, p.solve).trajectory;
    }
    else if (cfg.control.target_expression) {
        const Expression e(*cfg.control.target_expression);
        const Mesh& mesh = *p.base.mesh;
        Trajectory target(p.base.horizon, p.base.n_steps);
        for (std::size_t k = 0; k <= p.base.n_steps; ++k) {
            Field f = Field::zero(mesh.n_nodes());
            for (std::size_t i = 0; i < mesh.n_nodes(); ++i) {
                f[i] = e(Variables{p.base.time(k), mesh.node_coords()(static_cast<Eigen::Index>(i)), 0.0});
            }
            target.push_back(std::move(f));
        }
        p.target = std::move(target);
    }
    return p;
}

} // namespace hris
