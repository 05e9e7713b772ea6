#include "fracinv/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "fracinv/forward.hpp"
#include "fracinv/frac_operator.hpp"
#include "fracinv/measurement.hpp"
#include "fracinv/recovery.hpp"

namespace fracinv {

namespace {

double poly_eval(const std::vector<double>& coeffs, double x) {
    double acc = 0.0;
    for (std::size_t j = coeffs.size(); j-- > 0;) acc = acc * x + coeffs[j];
    return acc;
}

// Truth fields are either "csv:<path>" or a list of polynomial
// coefficients in x (lowest power first).
ScalarField field_from_spec(const io::FlatConfig& cfg, const std::string& key,
                            const GridPtr& grid, const RegionMask& region) {
    const std::string& spec = cfg.get(key);
    if (spec.rfind("csv:", 0) == 0) {
        return io::read_field_csv(spec.substr(4), grid).restricted(region);
    }
    std::vector<double> coeffs = cfg.get_list(key);
    return field_from_function(grid, [&](double x) { return poly_eval(coeffs, x); }, region);
}

// Random smooth field: cubic with +-1 coefficients, scaled to the target
// sup over the masked nodes.
ScalarField random_poly_field(const GridPtr& grid, const RegionMask& region, double amplitude,
                              NoiseStream& rng) {
    for (;;) {
        std::vector<double> c(4);
        for (double& v : c) v = rng.next_pm1();
        ScalarField f = field_from_function(
            grid, [&](double x) { return poly_eval(c, x); }, region);
        double sup = f.sup_norm(region);
        if (sup > 1e-3) {
            f *= amplitude / sup;
            return f;
        }
    }
}

// Random smooth nonnegative field with the given sup (a squared quadratic).
ScalarField random_nonneg_field(const GridPtr& grid, const RegionMask& region, double amplitude,
                                NoiseStream& rng) {
    for (;;) {
        std::vector<double> c(3);
        for (double& v : c) v = rng.next_pm1();
        ScalarField f = field_from_function(
            grid, [&](double x) { double p = poly_eval(c, x); return p * p; }, region);
        double sup = f.sup_norm(region);
        if (sup > 1e-3) {
            f *= amplitude / sup;
            return f;
        }
    }
}

struct Context {
    io::FlatConfig cfg;
    std::string scenario;
    GridPtr grid;
    double s = 0.5;
    std::uint64_t seed = 1;
};

void fill_default(io::FlatConfig& cfg, const std::string& key, const std::string& value) {
    if (!cfg.has(key)) cfg.set(key, value);
}

void fill_common_defaults(io::FlatConfig& cfg) {
    fill_default(cfg, "grid.L", "2");
    fill_default(cfg, "grid.M", "401");
    fill_default(cfg, "grid.omega.lo", "-1");
    fill_default(cfg, "grid.omega.hi", "1");
    fill_default(cfg, "grid.w1.lo", "1.2");
    fill_default(cfg, "grid.w1.hi", "1.6");
    fill_default(cfg, "grid.w2.lo", "-1.6");
    fill_default(cfg, "grid.w2.hi", "-1.2");
    fill_default(cfg, "s", "0.5");
    fill_default(cfg, "seed", "1");
    fill_default(cfg, "smallness.eps", "0.1");
    fill_default(cfg, "smallness.delta", "0.1");
    fill_default(cfg, "override_smallness", "0");
}

const std::set<std::string> kCommonKeys = {
    "scenario",      "label",         "out",           "grid.L",          "grid.M",
    "grid.omega.lo", "grid.omega.hi", "grid.w1.lo",    "grid.w1.hi",      "grid.w2.lo",
    "grid.w2.hi",    "s",             "seed",          "smallness.eps",   "smallness.delta",
    "override_smallness"};

struct ScenarioSpec {
    std::set<std::string> keys;                          // scenario-specific keys
    std::vector<std::pair<std::string, std::string>> defaults;
};

const std::map<std::string, ScenarioSpec>& scenario_specs() {
    static const std::map<std::string, ScenarioSpec> specs = {
        {"passive_source",
         {{"trials", "source.amplitude", "truth.a1", "truth.a2"},
          {{"trials", "20"},
           {"source.amplitude", "0.05"},
           {"truth.a1", "0.2"},
           {"truth.a2", "0.3 0 -0.3"}}}},
        {"linear_two",
         {{"truth.a1", "truth.F", "input.amplitude"},
          {{"truth.a1", "0.3 0.3"}, {"truth.F", "-0.02"}, {"input.amplitude", "0.05"}}}},
        {"polynomial_Nplus1",
         {{"degree", "truth.a1", "truth.a2", "truth.a3", "truth.a4", "truth.F",
           "input.amplitude", "noise.levels"},
          {{"degree", "2"}, {"noise.levels", "1e-6 1e-4"}}}},
        {"quadratic_two",
         {{"truth.a2", "truth.F", "input.amplitude"},
          {{"truth.a2", "0.4 0 -0.4"}, {"truth.F", "-0.02"}, {"input.amplitude", "0.05"}}}},
        {"comparison_suite",
         {{"trials", "amplitude.source", "amplitude.exterior", "amplitude.a2"},
          {{"trials", "100"},
           {"amplitude.source", "0.05"},
           {"amplitude.exterior", "0.05"},
           {"amplitude.a2", "0.5"}}}},
        {"getoor_convergence", {{"levels"}, {{"levels", "201 401 801"}}}},
        {"runge_study",
         {{"dofs", "truth.a1"}, {{"dofs", "2 4 8 16"}, {"truth.a1", "0"}}}},
        {"linearization_check",
         {{"eps.levels", "truth.a1", "truth.a2", "truth.F", "bump.amplitude"},
          {{"eps.levels", "1e-2 1e-3 1e-4"},
           {"truth.a1", "0.2"},
           {"truth.a2", "0.5 0 -0.5"},
           {"truth.F", "-0.01"},
           {"bump.amplitude", "0.1"}}}},
    };
    return specs;
}

// Degree-dependent defaults: the cubic run needs the input window closer
// to omega and a larger ladder to keep the pointwise cubic systems well
// conditioned in double precision.
void fill_polynomial_defaults(io::FlatConfig& cfg) {
    int degree = cfg.has("degree") ? cfg.get_int("degree") : 2;
    fill_default(cfg, "truth.a1", "0.2");
    fill_default(cfg, "truth.a2", "0.5 0 -0.5");
    if (degree >= 3) fill_default(cfg, "truth.a3", "0.1 0.05");
    if (degree >= 4) fill_default(cfg, "truth.a4", "0.05");
    if (degree >= 3) {
        fill_default(cfg, "grid.w1.lo", "1.05");
        fill_default(cfg, "grid.w1.hi", "1.45");
        fill_default(cfg, "input.amplitude", "0.09");
    } else {
        fill_default(cfg, "input.amplitude", "0.06");
    }
}

void add_check(ScenarioResult& result, const std::string& name, double value,
               const std::string& cmp, double threshold) {
    Check c{name, value, threshold, cmp, false};
    if (cmp == "<=") {
        c.pass = value <= threshold;
    } else if (cmp == ">=") {
        c.pass = value >= threshold;
    } else {
        c.pass = value == threshold;
    }
    result.checks.push_back(c);
    result.metrics[name] = value;
}

double rel_sup_error(const ScalarField& recovered, const ScalarField& truth,
                     const std::vector<int>& nodes, double truth_scale) {
    double err = 0.0;
    for (int i : nodes) err = std::max(err, std::abs(recovered[i] - truth[i]));
    return err / truth_scale;
}

ScalarField target_one(const GridPtr& grid, const RegionMask& omega) {
    return field_from_function(grid, [](double) { return 1.0; }, omega);
}

PolynomialNonlinearity truth_nonlinearity(const Context& ctx, int degree,
                                          const RegionMask& omega) {
    std::vector<ScalarField> coeffs;
    for (int k = 1; k <= degree; ++k) {
        std::string key = "truth.a" + std::to_string(k);
        coeffs.push_back(field_from_spec(ctx.cfg, key, ctx.grid, omega));
    }
    if (coeffs.empty()) return PolynomialNonlinearity::none(ctx.grid);
    return PolynomialNonlinearity::from_coefficients(std::move(coeffs));
}

ForwardProblem make_problem(const Context& ctx, const NonlocalStiffness& op,
                            PolynomialNonlinearity a, ScalarField source, ScalarField f) {
    ForwardProblem p(op, std::move(a), std::move(source), std::move(f));
    p.smallness_source = ctx.cfg.get_double("smallness.eps");
    p.smallness_exterior = ctx.cfg.get_double("smallness.delta");
    p.override_smallness = ctx.cfg.get_int("override_smallness") != 0;
    return p;
}

// ---------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------

void scenario_passive_source(const Context& ctx, const NonlocalStiffness& op,
                             ScenarioResult& result) {
    RegionMask omega = RegionMask::of(ctx.grid, Region::interior);
    PolynomialNonlinearity a = truth_nonlinearity(ctx, 2, omega);
    const int trials = ctx.cfg.get_int("trials");
    const double amplitude = ctx.cfg.get_double("source.amplitude");
    NoiseStream rng(ctx.seed);

    double worst = 0.0;
    ScalarField last_truth(ctx.grid), last_recovered(ctx.grid);
    for (int t = 0; t < trials; ++t) {
        ScalarField source = random_poly_field(ctx.grid, omega, amplitude, rng);
        SolveReport solve = solve_semilinear(make_problem(ctx, op, a, source, ScalarField(ctx.grid)));
        ScalarField recovered = recover_source_passive(op, solve.solution, a);
        double err = rel_sup_error(recovered, source, omega.indices(), amplitude);
        worst = std::max(worst, err);
        last_truth = source;
        last_recovered = recovered;
    }
    result.metrics["trials"] = trials;
    result.metrics["primary_error"] = worst;
    add_check(result, "f_rel_sup_error", worst, "<=", 1e-8);
    result.fields.emplace_back("source_truth", last_truth);
    result.fields.emplace_back("source_recovered", last_recovered);
}

void scenario_linear_two(const Context& ctx, const NonlocalStiffness& op,
                         ScenarioResult& result) {
    RegionMask omega = RegionMask::of(ctx.grid, Region::interior);
    ScalarField a1 = field_from_spec(ctx.cfg, "truth.a1", ctx.grid, omega);
    ScalarField source = field_from_spec(ctx.cfg, "truth.F", ctx.grid, omega);
    double delta = ctx.cfg.get_double("input.amplitude");
    auto family = synthesize_exterior_family(ctx.grid, 2, delta);

    ScalarField u = solve_linear(op, a1, source, family[1]).solution;
    ScalarField u0 = solve_linear(op, a1, source, family[0]).solution;
    LinearRecovery rec = recover_linear_two(op, u, u0);

    double a1_scale = std::max(a1.sup_norm(omega), 1e-12);
    double f_scale = std::max(source.sup_norm(omega), 1e-12);
    double a1_err = rel_sup_error(rec.a1, a1, rec.unmasked, a1_scale);
    double f_err = rel_sup_error(rec.source, source, rec.unmasked, f_scale);
    result.metrics["primary_error"] = a1_err;
    add_check(result, "a1_rel_error", a1_err, "<=", 1e-6);
    add_check(result, "f_rel_error", f_err, "<=", 1e-6);
    add_check(result, "masked_fraction", rec.masked_fraction, "<=", 0.2);
    result.fields.emplace_back("a1_truth", a1);
    result.fields.emplace_back("a1_recovered", rec.a1);
    result.fields.emplace_back("source_truth", source);
    result.fields.emplace_back("source_recovered", rec.source);
}

void scenario_polynomial(const Context& ctx, const NonlocalStiffness& op,
                         ScenarioResult& result) {
    RegionMask omega = RegionMask::of(ctx.grid, Region::interior);
    const int degree = ctx.cfg.get_int("degree");
    if (degree < 1 || degree > 4) {
        throw std::invalid_argument("polynomial_Nplus1: degree must be 1..4");
    }
    PolynomialNonlinearity a = truth_nonlinearity(ctx, degree, omega);
    ScalarField source = field_from_spec(ctx.cfg, "truth.F", ctx.grid, omega);
    const double delta = ctx.cfg.get_double("input.amplitude");
    auto family = synthesize_exterior_family(ctx.grid, degree + 1, delta);

    std::vector<ScalarField> solutions;
    for (const auto& f : family) {
        solutions.push_back(solve_semilinear(make_problem(ctx, op, a, source, f)).solution);
    }

    auto recovery_error = [&](const RecoveryReport& rec) {
        double err = 0.0;
        for (int k = 1; k <= degree; ++k) {
            const ScalarField& truth = a.coefficient(k);
            double scale = std::max(truth.sup_norm(omega), 1e-12);
            err = std::max(err, rel_sup_error(rec.coefficients[static_cast<std::size_t>(k - 1)],
                                              truth, rec.unmasked, scale));
        }
        double f_scale = std::max(source.sup_norm(omega), 1e-12);
        err = std::max(err, rel_sup_error(rec.source, source, rec.unmasked, f_scale));
        return err;
    };

    RecoveryReport exact = recover_polynomial(op, solutions, degree);
    double f_scale = std::max(source.sup_norm(omega), 1e-12);
    for (int k = 1; k <= degree; ++k) {
        const ScalarField& truth = a.coefficient(k);
        double scale = std::max(truth.sup_norm(omega), 1e-12);
        double err = rel_sup_error(exact.coefficients[static_cast<std::size_t>(k - 1)], truth,
                                   exact.unmasked, scale);
        add_check(result, "a" + std::to_string(k) + "_rel_error", err, "<=", 1e-5);
    }
    add_check(result, "f_rel_error",
              rel_sup_error(exact.source, source, exact.unmasked, f_scale), "<=", 1e-5);
    if (degree <= 2) {
        add_check(result, "masked_fraction", exact.masked_fraction, "<=", 0.2);
    } else {
        result.metrics["masked_fraction"] = exact.masked_fraction;
    }
    result.metrics["primary_error"] = recovery_error(exact);

    // Noise study: perturb the reconstruction inputs on omega and track the
    // worst coefficient error per level.
    std::vector<double> levels = ctx.cfg.get_list("noise.levels");
    std::vector<double> noise_errors;
    for (std::size_t li = 0; li < levels.size(); ++li) {
        std::vector<ScalarField> noisy;
        for (std::size_t l = 0; l < solutions.size(); ++l) {
            noisy.push_back(perturb_field(solutions[l], omega, levels[li],
                                          ctx.seed + 1000 * (li + 1) + l));
        }
        RecoveryReport rec = recover_polynomial(op, noisy, degree);
        rec.noise_level = levels[li];
        double err = recovery_error(rec);
        noise_errors.push_back(err);
        result.metrics["noise_error_" + std::to_string(li)] = err;
    }
    if (levels.size() >= 2 && noise_errors.front() > 0.0) {
        double slope = std::log(noise_errors.back() / noise_errors.front()) /
                       std::log(levels.back() / levels.front());
        add_check(result, "noise_slope", slope, ">=", 1.0 / 3.0);
        add_check(result, "noise_slope_upper", slope, "<=", 3.0);
    }

    for (int k = 1; k <= degree; ++k) {
        result.fields.emplace_back("a" + std::to_string(k) + "_truth", a.coefficient(k));
        result.fields.emplace_back("a" + std::to_string(k) + "_recovered",
                                   exact.coefficients[static_cast<std::size_t>(k - 1)]);
    }
    result.fields.emplace_back("source_truth", source);
    result.fields.emplace_back("source_recovered", exact.source);
    result.fields.emplace_back("determinant", exact.determinant);
}

void scenario_quadratic_two(const Context& ctx, const NonlocalStiffness& op,
                            ScenarioResult& result) {
    RegionMask omega = RegionMask::of(ctx.grid, Region::interior);
    ScalarField a2 = field_from_spec(ctx.cfg, "truth.a2", ctx.grid, omega);
    for (int i : omega.indices()) {
        if (a2[i] < 0.0) {
            throw std::invalid_argument("quadratic_two: truth.a2 must be nonnegative on omega");
        }
    }
    ScalarField source = field_from_spec(ctx.cfg, "truth.F", ctx.grid, omega);
    for (int i : omega.indices()) {
        if (source[i] > 0.0) {
            throw std::invalid_argument("quadratic_two: truth.F must be nonpositive on omega");
        }
    }
    double delta = ctx.cfg.get_double("input.amplitude");
    auto family = synthesize_exterior_family(ctx.grid, 2, delta, /*nonpositive=*/true);

    PolynomialNonlinearity a =
        PolynomialNonlinearity::from_coefficients({ScalarField(ctx.grid), a2});
    ScalarField u = solve_semilinear(make_problem(ctx, op, a, source, family[1])).solution;
    ScalarField u0 = solve_semilinear(make_problem(ctx, op, a, source, family[0])).solution;
    QuadraticRecovery rec = recover_quadratic_two(op, u, u0);

    double a2_scale = std::max(a2.sup_norm(omega), 1e-12);
    double f_scale = std::max(source.sup_norm(omega), 1e-12);
    double a2_min = 0.0;
    for (int i : rec.unmasked) a2_min = std::min(a2_min, rec.a2[i]);
    add_check(result, "a2_rel_error", rel_sup_error(rec.a2, a2, rec.unmasked, a2_scale), "<=",
              1e-5);
    add_check(result, "f_rel_error", rel_sup_error(rec.source, source, rec.unmasked, f_scale),
              "<=", 1e-5);
    add_check(result, "a2_min_unmasked", a2_min, ">=", -1e-8);
    result.metrics["masked_fraction"] = rec.masked_fraction;
    result.metrics["source_consistency"] = rec.consistency;
    result.metrics["primary_error"] = result.metrics["a2_rel_error"];
    result.fields.emplace_back("a2_truth", a2);
    result.fields.emplace_back("a2_recovered", rec.a2);
    result.fields.emplace_back("source_truth", source);
    result.fields.emplace_back("source_recovered", rec.source);
}

void scenario_comparison_suite(const Context& ctx, const NonlocalStiffness& op,
                               ScenarioResult& result) {
    RegionMask omega = RegionMask::of(ctx.grid, Region::interior);
    RegionMask w1 = RegionMask::of(ctx.grid, Region::exterior_w1);
    const int trials = ctx.cfg.get_int("trials");
    const double amp_f = ctx.cfg.get_double("amplitude.source");
    const double amp_g = ctx.cfg.get_double("amplitude.exterior");
    const double amp_a = ctx.cfg.get_double("amplitude.a2");
    NoiseStream rng(ctx.seed);

    int violations = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        ScalarField source = -1.0 * random_nonneg_field(ctx.grid, omega, amp_f, rng);
        ScalarField f = -1.0 * random_nonneg_field(ctx.grid, w1, amp_g, rng);
        ScalarField a2 = random_nonneg_field(ctx.grid, omega, amp_a, rng);
        PolynomialNonlinearity a =
            PolynomialNonlinearity::from_coefficients({ScalarField(ctx.grid), a2});
        SolveReport solve = solve_semilinear(make_problem(ctx, op, a, source, f));
        double mx = -std::numeric_limits<double>::infinity();
        for (int i : omega.indices()) mx = std::max(mx, solve.solution[i]);
        worst = std::max(worst, mx);
        if (mx > 1e-8) ++violations;
    }
    result.metrics["trials"] = trials;
    result.metrics["primary_error"] = std::max(worst, 0.0);
    add_check(result, "max_interior_value", worst, "<=", 1e-8);
    add_check(result, "violations", violations, "<=", 0.0);
}

// The benchmark field is only C^s at the omega boundary, so the lattice
// error at the O(h)-wide kink layer grows like h^{-s} for every nodal
// quadrature in this family. The benchmark sup is therefore measured on
// the inner 90% of omega; the all-node sup is reported alongside.
void scenario_getoor(const Context& ctx, ScenarioResult& result) {
    std::vector<double> levels_d = ctx.cfg.get_list("levels");
    std::vector<int> levels;
    for (double d : levels_d) levels.push_back(static_cast<int>(d));
    const double s = ctx.s;
    const double target = getoor_constant(s);
    const Interval omega_iv{ctx.cfg.get_double("grid.omega.lo"),
                            ctx.cfg.get_double("grid.omega.hi")};
    const double center = 0.5 * (omega_iv.lo + omega_iv.hi);
    const double inset_radius = 0.9 * 0.5 * omega_iv.length();

    std::vector<double> errors, spacings;
    double full_error = 0.0;
    ScalarField finest_result{ctx.grid};
    for (std::size_t li = 0; li < levels.size(); ++li) {
        GridPtr g = Grid::build(ctx.cfg.get_double("grid.L"), levels[li], omega_iv,
                                Interval{ctx.cfg.get_double("grid.w1.lo"),
                                         ctx.cfg.get_double("grid.w1.hi")},
                                Interval{ctx.cfg.get_double("grid.w2.lo"),
                                         ctx.cfg.get_double("grid.w2.hi")});
        NonlocalStiffness op = NonlocalStiffness::assemble(g, s);
        RegionMask omega = RegionMask::of(g, Region::interior);
        ScalarField u = field_from_function(
            g,
            [&](double x) {
                double t = 1.0 - x * x;
                return t > 0.0 ? std::pow(t, s) : 0.0;
            },
            omega);
        ScalarField au = op.apply(u);
        double err = 0.0;
        full_error = 0.0;
        for (int i : omega.indices()) {
            double e = std::abs(au[i] - target);
            full_error = std::max(full_error, e);
            if (std::abs(g->node(i) - center) <= inset_radius) err = std::max(err, e);
        }
        errors.push_back(err);
        spacings.push_back(g->spacing());
        result.metrics["error_" + std::to_string(li)] = err;
        if (li + 1 == levels.size()) finest_result = au;
    }
    double min_order = std::numeric_limits<double>::infinity();
    for (std::size_t li = 1; li < errors.size(); ++li) {
        double order = std::log(errors[li - 1] / errors[li]) /
                       std::log(spacings[li - 1] / spacings[li]);
        result.metrics["order_" + std::to_string(li)] = order;
        min_order = std::min(min_order, order);
    }
    result.metrics["primary_error"] = errors.back();
    result.metrics["sup_error_full"] = full_error;
    add_check(result, "sup_error", errors.back(), "<=", 2e-2);
    if (errors.size() >= 2) {
        add_check(result, "min_order", min_order, ">=", std::min(2.0 - 2.0 * s, 1.0));
    }
    result.fields.emplace_back("getoor_finest", finest_result);
}

void scenario_runge(const Context& ctx, const NonlocalStiffness& op, ScenarioResult& result) {
    RegionMask omega = RegionMask::of(ctx.grid, Region::interior);
    ScalarField a1 = field_from_spec(ctx.cfg, "truth.a1", ctx.grid, omega);
    ScalarField target = target_one(ctx.grid, omega);
    std::vector<double> dofs_d = ctx.cfg.get_list("dofs");

    std::vector<double> residuals;
    bool monotone = true;
    for (std::size_t k = 0; k < dofs_d.size(); ++k) {
        RungeResult r = runge_approximate(op, a1, target, static_cast<int>(dofs_d[k]));
        if (!residuals.empty() && r.residual > residuals.back() * (1.0 + 1e-10) + 1e-14) {
            monotone = false;
        }
        residuals.push_back(r.residual);
        result.metrics["residual_" + std::to_string(k)] = r.residual;
    }
    double decrease =
        residuals.front() > 0.0 ? (residuals.front() - residuals.back()) / residuals.front() : 0.0;
    result.metrics["primary_error"] = residuals.back();
    add_check(result, "monotone", monotone ? 1.0 : 0.0, ">=", 1.0);
    add_check(result, "decrease_ratio", decrease, ">=", 0.1);
}

void scenario_linearization(const Context& ctx, const NonlocalStiffness& op,
                            ScenarioResult& result) {
    RegionMask omega = RegionMask::of(ctx.grid, Region::interior);
    PolynomialNonlinearity a = truth_nonlinearity(ctx, 2, omega);
    ScalarField source = field_from_spec(ctx.cfg, "truth.F", ctx.grid, omega);

    // First-order consistency around the passive state.
    SolveReport passive = solve_semilinear(make_problem(ctx, op, a, source, ScalarField(ctx.grid)));
    const ScalarField& u0 = passive.solution;
    ScalarField g = synthesize_exterior_family(ctx.grid, 2, 1.0)[1];  // unit bump
    ScalarField v1 = solve_first_linearization(op, a, u0, g);

    std::vector<double> eps = ctx.cfg.get_list("eps.levels");
    std::vector<double> fd_errors;
    for (std::size_t k = 0; k < eps.size(); ++k) {
        SolveReport sr = solve_semilinear(make_problem(ctx, op, a, source, eps[k] * g));
        double err = 0.0;
        for (int i : omega.indices()) {
            err = std::max(err, std::abs((sr.solution[i] - u0[i]) / eps[k] - v1[i]));
        }
        fd_errors.push_back(err);
        result.metrics["fd_error_" + std::to_string(k)] = err;
    }
    double min_order = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < eps.size(); ++k) {
        double order = std::log(fd_errors[k - 1] / fd_errors[k]) / std::log(eps[k - 1] / eps[k]);
        result.metrics["fd_order_" + std::to_string(k)] = order;
        min_order = std::min(min_order, order);
    }

    // Second-order identity around the zero state, where two
    // nonlinearities differing only in the quadratic coefficient share
    // their first linearization exactly.
    ScalarField zero(ctx.grid);
    ScalarField v1z = solve_first_linearization(op, a, zero, g);
    double bump_amp = ctx.cfg.get_double("bump.amplitude");
    ScalarField bump = field_from_function(
        ctx.grid,
        [bump_amp](double x) {
            double t = (x - 0.2) / 0.3;
            double q = 1.0 - t * t;
            return q > 0.0 ? bump_amp * q * q : 0.0;
        },
        omega);
    PolynomialNonlinearity a_alt =
        PolynomialNonlinearity::from_coefficients({a.coefficient(1), a.coefficient(2) + bump});

    RungeResult runge = runge_approximate(op, a.coefficient(1), target_one(ctx.grid, omega), 16);
    ScalarField v2 = solve_linear(op, a.coefficient(1), ScalarField(ctx.grid),
                                  runge.exterior_data).solution;

    ScalarField w_same = solve_second_linearization(op, a, zero, v1z);
    ScalarField w_alt = solve_second_linearization(op, a_alt, zero, v1z);
    double r_same = std::abs(
        verify_second_order_identity(op, a, zero, v1z, v2, w_same - w_same));
    double r_diff = std::abs(
        verify_second_order_identity(op, a, zero, v1z, v2, w_same - w_alt));

    result.metrics["primary_error"] = fd_errors.back();
    add_check(result, "fd_min_order", min_order, ">=", 0.9);
    add_check(result, "identity_residual_same", r_same, "<=", 1e-10);
    add_check(result, "identity_residual_diff", r_diff, ">=", 1e-6);
    result.fields.emplace_back("first_linearization", v1);
}

}  // namespace

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = {
        "passive_source",   "linear_two",          "polynomial_Nplus1", "quadratic_two",
        "comparison_suite", "getoor_convergence",  "runge_study",       "linearization_check"};
    return names;
}

std::vector<std::pair<std::string, ExperimentConfig>> suite_configs() {
    std::vector<std::pair<std::string, ExperimentConfig>> out;
    for (const auto& name : scenario_names()) {
        out.emplace_back(name, ExperimentConfig::defaults(name));
        if (name == "polynomial_Nplus1") {
            out.emplace_back(name + "_cubic",
                             ExperimentConfig::defaults(name).with("degree", "3"));
        }
    }
    return out;
}

ExperimentConfig ExperimentConfig::defaults(const std::string& scenario) {
    auto it = scenario_specs().find(scenario);
    if (it == scenario_specs().end()) {
        throw std::invalid_argument("unknown scenario: " + scenario);
    }
    ExperimentConfig cfg;
    cfg.values.set("scenario", scenario);
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
    ExperimentConfig cfg;
    cfg.values = io::FlatConfig::parse_file(path);
    return cfg;
}

ExperimentConfig ExperimentConfig::with(const std::string& key, const std::string& value) const {
    ExperimentConfig out = *this;
    out.values.set(key, value);
    return out;
}

ScenarioResult run_scenario(const ExperimentConfig& config) {
    Context ctx;
    ctx.cfg = config.values;
    if (!ctx.cfg.has("scenario")) {
        throw std::invalid_argument("config is missing the 'scenario' key");
    }
    ctx.scenario = ctx.cfg.get("scenario");
    auto it = scenario_specs().find(ctx.scenario);
    if (it == scenario_specs().end()) {
        std::ostringstream os;
        os << "unknown scenario '" << ctx.scenario << "'; expected one of:";
        for (const auto& n : scenario_names()) os << " " << n;
        throw std::invalid_argument(os.str());
    }

    // Reject keys this scenario does not understand.
    std::vector<std::string> offending;
    for (const auto& [key, value] : ctx.cfg.entries()) {
        if (!kCommonKeys.contains(key) && !it->second.keys.contains(key)) {
            offending.push_back(key);
        }
    }
    if (!offending.empty()) {
        std::ostringstream os;
        os << "config keys not recognized by scenario " << ctx.scenario << ":";
        for (const auto& k : offending) os << " " << k;
        throw std::invalid_argument(os.str());
    }

    for (const auto& [key, value] : it->second.defaults) fill_default(ctx.cfg, key, value);
    if (ctx.scenario == "polynomial_Nplus1") fill_polynomial_defaults(ctx.cfg);
    fill_common_defaults(ctx.cfg);

    ctx.grid = io::grid_from_config(ctx.cfg);
    ctx.s = ctx.cfg.get_double("s");
    ctx.seed = static_cast<std::uint64_t>(ctx.cfg.get_int("seed"));

    ScenarioResult result;
    result.scenario = ctx.scenario;
    result.effective = ctx.cfg;

    if (ctx.scenario == "getoor_convergence") {
        scenario_getoor(ctx, result);
    } else {
        NonlocalStiffness op = NonlocalStiffness::assemble(ctx.grid, ctx.s);
        if (ctx.scenario == "passive_source") {
            scenario_passive_source(ctx, op, result);
        } else if (ctx.scenario == "linear_two") {
            scenario_linear_two(ctx, op, result);
        } else if (ctx.scenario == "polynomial_Nplus1") {
            scenario_polynomial(ctx, op, result);
        } else if (ctx.scenario == "quadratic_two") {
            scenario_quadratic_two(ctx, op, result);
        } else if (ctx.scenario == "comparison_suite") {
            scenario_comparison_suite(ctx, op, result);
        } else if (ctx.scenario == "runge_study") {
            scenario_runge(ctx, op, result);
        } else {
            scenario_linearization(ctx, op, result);
        }
    }

    result.pass = true;
    for (const auto& c : result.checks) result.pass = result.pass && c.pass;
    return result;
}

std::vector<std::filesystem::path> emit_report(const ScenarioResult& result,
                                               const std::filesystem::path& dir) {
    if (result.metrics.empty()) {
        throw std::invalid_argument("emit_report: result has no metrics");
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw std::runtime_error("emit_report: cannot create directory " + dir.string());
    }

    std::vector<std::filesystem::path> manifest;

    nlohmann::ordered_json root;
    root["scenario"] = result.scenario;
    root["version"] = kVersion;
    root["pass"] = result.pass;
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    for (const auto& c : result.checks) {
        checks.push_back({{"name", c.name},
                          {"value", c.value},
                          {"cmp", c.cmp},
                          {"threshold", c.threshold},
                          {"pass", c.pass}});
    }
    root["checks"] = checks;
    nlohmann::ordered_json metrics;
    for (const auto& [k, v] : result.metrics) metrics[k] = v;
    root["metrics"] = metrics;
    nlohmann::ordered_json cfg;
    for (const auto& [k, v] : result.effective.entries()) cfg[k] = v;
    root["config"] = cfg;

    std::filesystem::path summary = dir / "summary.json";
    io::write_text_file(summary, root.dump(2) + "\n");
    manifest.push_back(summary);

    for (const auto& [name, field] : result.fields) {
        std::filesystem::path p = dir / (name + ".csv");
        io::write_field_csv(p, field);
        manifest.push_back(p);
    }
    std::sort(manifest.begin(), manifest.end());
    return manifest;
}

std::vector<ConvergenceRow> convergence_study(const ExperimentConfig& base,
                                              const std::vector<int>& refinements) {
    if (refinements.size() < 3) {
        throw std::invalid_argument("convergence_study: need at least 3 refinement levels");
    }
    std::set<int> distinct(refinements.begin(), refinements.end());
    if (distinct.size() != refinements.size()) {
        throw std::invalid_argument("convergence_study: refinement levels must be distinct");
    }

    std::vector<ConvergenceRow> rows;
    for (int m : refinements) {
        ExperimentConfig cfg = base.with("grid.M", std::to_string(m));
        if (cfg.values.get_or("scenario", "") == "getoor_convergence") {
            cfg = cfg.with("levels", std::to_string(m));
        }
        ScenarioResult res = run_scenario(cfg);
        ConvergenceRow row;
        row.node_count = m;
        row.spacing = res.effective.get_double("grid.L") * 2.0 / static_cast<double>(m - 1);
        row.error = res.metrics.at("primary_error");
        rows.push_back(row);
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
        rows[i].order = std::log(rows[i - 1].error / rows[i].error) /
                        std::log(rows[i - 1].spacing / rows[i].spacing);
    }
    return rows;
}

}  // namespace fracinv
