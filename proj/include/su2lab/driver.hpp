#pragma once

// Run orchestration: a RunConfig (command, parsed parameters, seed, output
// format) dispatches to the module surfaces, aggregates their outcomes into
// a Report of pass/fail records, and collects CSV tables for emission.
// Parameter problems (unknown keys, bad values) throw before any work
// starts; module errors raised while a check runs become failed records so
// a suite never aborts midway.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "su2lab/asymptotics.hpp"
#include "su2lab/config.hpp"
#include "su2lab/models.hpp"
#include "su2lab/grid.hpp"
#include "su2lab/relax.hpp"
#include "su2lab/report.hpp"
#include "su2lab/residuals.hpp"

namespace su2lab {

/// One resolved invocation: which verb to run, its parameters, the shared
/// random seed, the report format, and an optional output directory (the
/// front end decides where tables land).
struct RunConfig {
    std::string command;
    ConfigMap params;
    std::uint64_t seed = 1;
    std::string format = "csv";  // csv | json
    std::string out_dir;
};

/// Named CSV tables produced alongside a report.
using TableMap = std::map<std::string, std::string>;

namespace detail {

inline const std::vector<std::string_view> kFamilyKeys = {
    "family.kind", "family.m", "family.w_re", "family.w_im", "family.r", "family.c"};
inline const std::vector<std::string_view> kGridKeys = {
    "grid.t_min", "grid.t_max", "grid.x_half", "grid.nt", "grid.nx"};

inline void allow_keys(const ConfigMap& params,
                       const std::vector<std::vector<std::string_view>>& groups) {
    for (const auto& [key, value] : params.entries()) {
        bool known = false;
        for (const auto& group : groups)
            for (std::string_view k : group) known = known || (key == k);
        if (!known) throw UnknownKey(key);
    }
}

[[nodiscard]] inline FamilySampler family_from(const ConfigMap& c) {
    const std::string kind = c.get_choice("family.kind", "model",
                                          {"model", "imposter", "abelian", "cfamily", "flat"});
    if (kind == "model") {
        const ModelParams params{static_cast<int>(c.get_int("family.m", 1, 0, 32))};
        return [params](const PointTZ& p) { return model_fields(params, p); };
    }
    if (kind == "imposter") {
        ImposterParams params;
        params.w = complexd{c.get_double("family.w_re", 0.0, -1.0, 1.0),
                            c.get_double("family.w_im", 0.0, -1.0, 1.0)};
        if (std::abs(params.w) > 1.0 + 1e-12)
            throw BadValue("family.w_re", "|w| must lie in the closed unit disk");
        return [params](const PointTZ& p) { return imposter_fields(params, p.t); };
    }
    if (kind == "abelian") {
        const double r = c.get_double("family.r", 1.0, 1e-12, 1e6);
        return [r](const PointTZ& p) { return abelian_fields(r, p); };
    }
    if (kind == "cfamily") {
        const double cc = c.get_double("family.c", 1.0, -1e6, 1e6);
        return [cc](const PointTZ& p) { return c_family_fields(cc, p.t); };
    }
    return [](const PointTZ&) { return FieldSample{}; };
}

/// Vanishing degree used by the scalar-equation and divergence checks:
/// the model index for the model family, zero otherwise.
[[nodiscard]] inline int family_degree(const ConfigMap& c) {
    if (c.get_string("family.kind", "model") == "model")
        return static_cast<int>(c.get_int("family.m", 1, 0, 32));
    return 0;
}

[[nodiscard]] inline std::array<GridSpec, 3> nest_from(const ConfigMap& c) {
    GridSpec coarse;
    coarse.t_min = c.get_double("grid.t_min", 0.5, 1e-6, 1e6);
    coarse.t_max = c.get_double("grid.t_max", 2.0, 1e-6, 1e6);
    coarse.x_half = c.get_double("grid.x_half", 2.0, 1e-6, 1e6);
    coarse.n_t = static_cast<int>(c.get_int("grid.nt", 33, 7, 257));
    coarse.n_x = static_cast<int>(c.get_int("grid.nx", coarse.n_t, 7, 257));
    std::array<GridSpec, 3> nest{coarse, coarse, coarse};
    for (int level = 1; level < 3; ++level) {
        nest[level].n_t = 2 * nest[level - 1].n_t - 1;
        nest[level].n_x = 2 * nest[level - 1].n_x - 1;
    }
    return nest;
}

[[nodiscard]] inline GridSpec single_grid_from(const ConfigMap& c, double def_t_min,
                                               double def_t_max, double def_x_half,
                                               int def_nt, int def_nx) {
    GridSpec g;
    g.t_min = c.get_double("grid.t_min", def_t_min, 1e-6, 1e6);
    g.t_max = c.get_double("grid.t_max", def_t_max, 1e-6, 1e6);
    g.x_half = c.get_double("grid.x_half", def_x_half, 1e-6, 1e6);
    g.n_t = static_cast<int>(c.get_int("grid.nt", def_nt, 3, 1025));
    g.n_x = static_cast<int>(c.get_int("grid.nx", def_nx, 3, 1025));
    return g;
}

inline void study_records(Report& rep, const std::string& check_name,
                          const ConvergenceStudy& study) {
    for (const ConvergenceRow& row : study.rows) {
        if (row.exact)
            rep.records.push_back(make_record(check_name + "." + row.equation + ".exact", true,
                                              row.max_abs[2], kExactFloor, "max_abs"));
        else
            rep.records.push_back(make_record(check_name + "." + row.equation + ".ratio",
                                              row.pass, row.ratio[1], kRatioLow, "ratio"));
    }
}

/// Runs one named piece of work; a thrown module error becomes a failed
/// record instead of aborting the suite.
template <class F>
void guarded(Report& rep, std::ostream* diag, const std::string& name, F&& work) {
    try {
        work();
    } catch (const std::exception& e) {
        if (diag != nullptr) *diag << name << ": " << e.what() << '\n';
        rep.records.push_back(make_record(
            name + ".error", false, std::numeric_limits<double>::quiet_NaN(), 0.0, "error"));
    }
}

[[nodiscard]] inline std::vector<double> parse_radii(const ConfigMap& c, std::string_view key,
                                                     const std::string& def) {
    const std::string text = c.get_string(key, def);
    std::vector<double> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        char* end = nullptr;
        const double r = std::strtod(item.c_str(), &end);
        if (end != item.c_str() + item.size() || item.empty() || !(r > 0.0))
            throw BadValue(std::string(key), "'" + text + "' is not a list of positive radii");
        out.push_back(r);
    }
    if (out.empty()) throw BadValue(std::string(key), "need at least one radius");
    return out;
}

[[nodiscard]] inline std::vector<double> log_spaced(double lo, double hi, int n) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out.push_back(n == 1 ? lo
                             : std::exp(std::log(lo) +
                                        (std::log(hi) - std::log(lo)) * i / (n - 1.0)));
    return out;
}

// ---- command handlers ---------------------------------------------------------

inline void cmd_model_eval(const RunConfig& cfg, Report& rep, TableMap& tables,
                           std::ostream* diag) {
    allow_keys(cfg.params, {kFamilyKeys, {"point.t", "point.x1", "point.x2"}});
    const FamilySampler family = family_from(cfg.params);
    PointTZ p;
    p.t = cfg.params.get_double("point.t", 1.0, 1e-9, 1e9);
    p.z = complexd{cfg.params.get_double("point.x1", 0.0, -1e9, 1e9),
                   cfg.params.get_double("point.x2", 0.0, -1e9, 1e9)};
    guarded(rep, diag, "sample", [&] {
        const FieldSample s = family(p);
        const std::vector<std::pair<const char*, const LieElement*>> fields = {
            {"A_t", &s.A_t}, {"A_1", &s.A_1}, {"A_2", &s.A_2},
            {"a_1", &s.a_1}, {"a_2", &s.a_2}, {"a_3", &s.a_3}};
        std::ostringstream os;
        os << "field,component,value\n";
        char line[96];
        double peak = 0.0;
        bool finite = true;
        for (const auto& [name, v] : fields) {
            const std::array<double, 3> comps = {v->c1, v->c2, v->c3};
            for (int comp = 0; comp < 3; ++comp) {
                const double value = comps[static_cast<std::size_t>(comp)];
                finite = finite && std::isfinite(value);
                peak = std::max(peak, std::abs(value));
                std::snprintf(line, sizeof line, "%s,%d,%.17g\n", name, comp + 1, value);
                os << line;
            }
        }
        tables["sample"] = os.str();
        rep.records.push_back(make_record("sample.finite", finite, peak, 0.0, "max_abs"));
    });
}

inline void cmd_model_table(const RunConfig& cfg, Report& rep, TableMap& tables,
                            std::ostream* diag) {
    allow_keys(cfg.params,
               {{"model.m", "table.quantity", "table.t_min", "table.t_max", "table.n_t",
                 "table.z_min", "table.z_max", "table.n_z"}});
    const int m = static_cast<int>(cfg.params.get_int("model.m", 1, 0, 32));
    const std::string quantity =
        cfg.params.get_choice("table.quantity", "w-regular",
                              {"w-regular", "sinh-ratio", "abs-phi", "triple-product"});
    const double t_min = cfg.params.get_double("table.t_min", 0.5, 1e-9, 1e9);
    const double t_max = cfg.params.get_double("table.t_max", 2.0, t_min, 1e9);
    const int n_t = static_cast<int>(cfg.params.get_int("table.n_t", 9, 1, 4096));
    const double z_min = cfg.params.get_double("table.z_min", 0.0, 0.0, 1e9);
    const double z_max = cfg.params.get_double("table.z_max", 2.0, z_min, 1e9);
    const int n_z = static_cast<int>(cfg.params.get_int("table.n_z", 9, 1, 4096));

    guarded(rep, diag, "table", [&] {
        const ModelParams params{m};
        std::vector<std::array<double, 3>> rows;
        for (int i = 0; i < n_t; ++i) {
            const double t = n_t == 1 ? t_min : t_min + (t_max - t_min) * i / (n_t - 1.0);
            for (int j = 0; j < n_z; ++j) {
                const double z = n_z == 1 ? z_min : z_min + (z_max - z_min) * j / (n_z - 1.0);
                const PointTZ p{t, complexd{z, 0.0}};
                double value = 0.0;
                if (quantity == "w-regular") {
                    value = w_model_regular(m, p);
                } else if (quantity == "sinh-ratio") {
                    value = sinh_ratio(m, theta_x(p).theta);
                } else if (quantity == "abs-phi") {
                    const FieldSample s = model_fields(params, p);
                    const complexd iu{0.0, 1.0};
                    value = norm(CLieElement(s.a_1) - iu * CLieElement(s.a_2));
                } else {
                    value = triple_product_model(params, p);
                }
                rows.push_back({t, z, value});
            }
        }
        std::ostringstream os;
        write_profile_csv(os, rows);
        tables["table"] = os.str();
        rep.records.push_back(make_record("table.rows", !rows.empty(),
                                          static_cast<double>(rows.size()), 1.0, "rows"));
    });
}

inline void cmd_residual(const RunConfig& cfg, Report& rep, TableMap& tables,
                         std::ostream* diag) {
    allow_keys(cfg.params, {kFamilyKeys, kGridKeys});
    const FamilySampler family = family_from(cfg.params);
    const auto nest = nest_from(cfg.params);
    const std::vector<std::pair<const char*, ResidualCheck>> checks = {
        {"first_order", ResidualCheck::first_order},
        {"second_order", ResidualCheck::second_order}};
    for (const auto& [name, check] : checks) {
        guarded(rep, diag, name, [&, name = name, check = check] {
            const ConvergenceStudy study = convergence_study(check, family, nest);
            std::ostringstream os;
            write_convergence_csv(os, study);
            tables[name] = os.str();
            study_records(rep, name, study);
        });
    }
}

inline void cmd_identity(const RunConfig& cfg, Report& rep, TableMap& tables,
                         std::ostream* diag) {
    allow_keys(cfg.params, {kFamilyKeys, kGridKeys, {"identity.synthetic_seed"}});
    const auto nest = nest_from(cfg.params);
    const bool synthetic = cfg.params.has("identity.synthetic_seed");

    std::function<GaugeConfig(const GridSpec&)> make;
    std::vector<std::pair<const char*, ResidualCheck>> checks;
    int degree = 0;
    if (synthetic) {
        SyntheticSpec spec;
        spec.seed = static_cast<std::uint64_t>(
            cfg.params.get_int("identity.synthetic_seed", 1, 1, 1 << 30));
        make = [spec](const GridSpec& g) {
            return recompose(synthetic_decomposition(g, spec));
        };
        checks = {{"curvature_projection", ResidualCheck::curvature_projection}};
    } else {
        const FamilySampler family = family_from(cfg.params);
        make = [family](const GridSpec& g) { return sample_family(family, g); };
        degree = family_degree(cfg.params);
        checks = {{"projected", ResidualCheck::projected},
                  {"curvature_projection", ResidualCheck::curvature_projection},
                  {"pairing_flow", ResidualCheck::pairing_flow},
                  {"balance", ResidualCheck::balance},
                  {"bochner", ResidualCheck::bochner},
                  {"w_equations", ResidualCheck::w_equations},
                  {"divergence_identity", ResidualCheck::divergence_identity}};
    }

    for (const auto& [name, check] : checks) {
        guarded(rep, diag, name, [&, name = name, check = check] {
            const ConvergenceStudy study = convergence_study(check, make, nest, degree);
            std::ostringstream os;
            write_convergence_csv(os, study);
            tables[name] = os.str();
            study_records(rep, name, study);
        });
    }
}

inline void cmd_flux(const RunConfig& cfg, Report& rep, TableMap& tables,
                     std::ostream* diag) {
    allow_keys(cfg.params, {kFamilyKeys, kGridKeys, {"flux.radii", "flux.t_lo", "flux.t_hi"}});
    const FamilySampler family = family_from(cfg.params);
    const GridSpec g = single_grid_from(cfg.params, 0.05, 20.0, 16.0, 65, 129);
    const std::vector<double> radii = parse_radii(cfg.params, "flux.radii", "1,2,4,8");
    const double t_lo = cfg.params.get_double("flux.t_lo", g.t_min, 0.0, 1e9);
    const double t_hi = cfg.params.get_double("flux.t_hi", g.t_max, t_lo, 1e9);

    guarded(rep, diag, "flux", [&] {
        const GaugeConfig sampled = sample_family(family, g);
        const FluxCurve curve = constraint_flux(sampled, radii, t_lo, t_hi);
        std::ostringstream os;
        write_flux_csv(os, curve);
        tables["flux"] = os.str();
        const ConstraintDiagnostics diags = constraint_diagnostics(sampled, &curve);
        rep.records.push_back(make_record("growth_bound", true, diags.growth_bound,
                                          kDiagnosticGrowthCap, "sup_t_norm"));
        for (const BulletCheck& check : diags.checks)
            rep.records.push_back(make_record("diagnostic." + check.id, check.pass,
                                              check.measured, check.threshold, check.group));
    });
}

inline void cmd_solve_w(const RunConfig& cfg, Report& rep, TableMap& tables,
                        std::ostream* diag) {
    allow_keys(cfg.params,
               {{"solve.m", "solve.mode", "solve.t_min", "solve.t_max", "solve.rho_max",
                 "solve.nt", "solve.nrho", "solve.tolerance", "solve.max_sweeps",
                 "solve.damping", "solve.scheme", "solve.amplitude", "solve.threshold"}});
    const int m = static_cast<int>(cfg.params.get_int("solve.m", 1, 0, 32));
    const std::string mode = cfg.params.get_choice("solve.mode", "uniqueness",
                                                   {"uniqueness", "comparison", "source"});
    const double t_min = cfg.params.get_double("solve.t_min", 0.2, 1e-6, 1e6);
    const double t_max = cfg.params.get_double("solve.t_max", 5.0, t_min, 1e6);
    const double rho_max = cfg.params.get_double("solve.rho_max", 10.0, 1e-6, 1e6);
    const int n_t = static_cast<int>(cfg.params.get_int("solve.nt", 65, 5, 1025));
    const int n_rho = static_cast<int>(cfg.params.get_int("solve.nrho", 65, 5, 1025));
    const ScalarGrid2D domain = zero_grid(t_min, t_max, rho_max, n_t, n_rho);

    SolverConfig solver;
    solver.tolerance = cfg.params.get_double("solve.tolerance", 1e-10, 1e-16, 1e-2);
    solver.max_sweeps =
        static_cast<int>(cfg.params.get_int("solve.max_sweeps", 60000, 1, 100000000));
    solver.damping = cfg.params.get_double("solve.damping", 0.8, 1e-3, 1.0);
    solver.scheme = cfg.params.get_choice("solve.scheme", "gauss-seidel",
                                          {"gauss-seidel", "jacobi"}) == "jacobi"
                        ? Scheme::jacobi_newton
                        : Scheme::gauss_seidel_newton;
    const double amplitude = cfg.params.get_double("solve.amplitude", 0.1, 0.0, 1e3);

    if (mode == "uniqueness") {
        const double threshold = cfg.params.get_double("solve.threshold", 1e-6, 0.0, 1.0);
        guarded(rep, diag, "uniqueness", [&] {
            const double sup = uniqueness_experiment(m, domain, cfg.seed, solver);
            rep.records.push_back(
                make_record("uniqueness.sup_u", sup < threshold, sup, threshold, "sup_abs"));
        });
    } else if (mode == "comparison") {
        const double threshold = cfg.params.get_double("solve.threshold", 1e-8, 0.0, 1.0);
        guarded(rep, diag, "comparison", [&] {
            const auto [max_u, min_u] = comparison_experiment(m, domain, amplitude, solver);
            rep.records.push_back(
                make_record("comparison.max_u", max_u <= threshold, max_u, threshold, "max"));
            rep.records.push_back(
                make_record("comparison.min_u", min_u <= threshold, min_u, threshold, "min"));
        });
    } else {
        guarded(rep, diag, "solve", [&] {
            const ScalarGrid2D source = centered_bump(domain, amplitude);
            std::vector<SweepStat> log;
            const SolveResult result = solve_u(m, source, zero_like(domain), solver, &log);
            std::ostringstream sol;
            write_solution_csv(sol, result.u);
            tables["solution"] = sol.str();
            std::ostringstream conv;
            write_convergence_log_csv(conv, log);
            tables["convergence_log"] = conv.str();
            const ScalarGrid2D residual_grid = u_residual(result.u, m, source);
            double residual = 0.0;
            for (double v : residual_grid.values) residual = std::max(residual, std::abs(v));
            rep.records.push_back(make_record("solve.sweeps",
                                              result.sweeps <= solver.max_sweeps,
                                              static_cast<double>(result.sweeps),
                                              static_cast<double>(solver.max_sweeps),
                                              "sweeps"));
            rep.records.push_back(make_record("solve.final_update",
                                              result.final_update < solver.tolerance,
                                              result.final_update, solver.tolerance,
                                              "max_update"));
            rep.records.push_back(make_record("solve.residual",
                                              residual <= 10.0 * solver.tolerance, residual,
                                              10.0 * solver.tolerance, "max_abs"));
        });
    }
}

inline void cmd_ode(const RunConfig& cfg, Report& rep, TableMap& tables,
                    std::ostream* diag) {
    allow_keys(cfg.params,
               {{"ode.kind", "ode.z", "ode.alpha0", "ode.t0", "ode.t_end", "ode.k", "ode.mu",
                 "ode.y0", "ode.tau0", "ode.tau_end", "ode.forcing", "ode.frequency",
                 "ode.tolerance", "ode.bound_tol"}});
    const std::string kind = cfg.params.get_choice("ode.kind", "alpha", {"alpha", "y"});
    const double tol = cfg.params.get_double("ode.tolerance", 1e-10, 1e-15, 1e-2);

    if (kind == "alpha") {
        const double zconst = cfg.params.get_double("ode.z", 0.0, -1e6, 1e6);
        const double alpha0 = cfg.params.get_double("ode.alpha0", -0.5, -1e6, 1e6);
        const double t0 = cfg.params.get_double("ode.t0", 1.0, 1e-9, 1e9);
        const double t_end = cfg.params.get_double("ode.t_end", 10.0, t0, 1e9);
        guarded(rep, diag, "ode", [&] {
            const Trajectory traj = riccati_alpha(zconst, alpha0, t0, t_end, tol);
            std::ostringstream os;
            write_trajectory_csv(os, traj, "t", "alpha");
            tables["trajectory"] = os.str();
            const bool blew = traj.termination == Termination::blow_up;
            rep.records.push_back(make_record("ode.samples", traj.samples.size() >= 2,
                                              static_cast<double>(traj.samples.size()), 2.0,
                                              "samples"));
            rep.records.push_back(
                make_record("ode.blow_up", true, blew ? 1.0 : 0.0, 0.5, "flag"));
        });
        return;
    }

    RiccatiSpec spec;
    spec.k = static_cast<int>(cfg.params.get_int("ode.k", 1, 0, 32));
    spec.mu = cfg.params.get_double("ode.mu", 0.0, 0.0, 1e6);
    spec.y0 = cfg.params.get_double("ode.y0", 0.0, -1e6, 1e6);
    spec.tau0 = cfg.params.get_double("ode.tau0", 0.0, -1e6, 1e6);
    const double tau_end = cfg.params.get_double("ode.tau_end", 5.0, spec.tau0, 1e9);
    const std::string forcing = cfg.params.get_choice("ode.forcing", "none", {"none", "sin"});
    const double frequency = cfg.params.get_double("ode.frequency", 3.0, 0.0, 1e6);
    const double bound_tol = cfg.params.get_double("ode.bound_tol", 1e-8, 0.0, 1.0);

    guarded(rep, diag, "ode", [&] {
        std::function<double(double)> eps4;
        if (forcing == "sin") {
            const double amp = spec.mu;
            eps4 = [amp, frequency](double tau) { return amp * std::sin(frequency * tau); };
        }
        const Trajectory traj = riccati_y(spec, eps4, tau_end, tol);
        std::ostringstream os;
        write_trajectory_csv(os, traj);
        tables["trajectory"] = os.str();
        const bool blew = traj.termination == Termination::blow_up;
        rep.records.push_back(make_record("ode.samples", traj.samples.size() >= 2,
                                          static_cast<double>(traj.samples.size()), 2.0,
                                          "samples"));
        rep.records.push_back(make_record("ode.blow_up", true, blew ? 1.0 : 0.0, 0.5, "flag"));
        const double lambda_sq = 0.25 * (spec.k + 1) * (spec.k + 1) - spec.mu;
        if (!blew && lambda_sq > 0.0 && spec.y0 * spec.y0 < lambda_sq) {
            const double violation = tanh_bound_check(spec.k, spec.mu, traj);
            rep.records.push_back(make_record("ode.tanh_bound_violation",
                                              violation <= bound_tol, violation, bound_tol,
                                              "max_gap"));
        }
    });
}

inline void cmd_asym(const RunConfig& cfg, Report& rep, TableMap& tables,
                     std::ostream* diag) {
    allow_keys(cfg.params,
               {{"asym.profile", "asym.k", "asym.m", "asym.p", "asym.t_z", "asym.kappa",
                 "asym.t_star", "asym.abs_z", "asym.bz", "asym.t", "asym.t_min", "asym.t_max",
                 "asym.n", "asym.z_min", "asym.z_max"}});
    const std::string profile = cfg.params.get_choice(
        "asym.profile", "alpha", {"alpha", "beta", "phi", "bhat", "synthetic", "exponent"});

    if (profile == "exponent") {
        const int m = static_cast<int>(cfg.params.get_int("asym.m", 0, 0, 64));
        const int p = static_cast<int>(cfg.params.get_int("asym.p", 1, 1, 64));
        const Rational r = tz_exponent(m, p);
        rep.records.push_back(make_record(
            "asym.tz_exponent", true, static_cast<double>(r.num) / static_cast<double>(r.den),
            0.0, std::to_string(r.num) + "/" + std::to_string(r.den)));
        return;
    }

    const int k = static_cast<int>(cfg.params.get_int("asym.k", 1, 0, 64));
    const int m = static_cast<int>(cfg.params.get_int("asym.m", 0, 0, 64));
    const double t_z = cfg.params.get_double("asym.t_z", 0.1, 1e-9, 1e9);
    const int n = static_cast<int>(cfg.params.get_int("asym.n", 33, 2, 65536));

    guarded(rep, diag, "asym", [&] {
        std::vector<std::array<double, 3>> rows;
        if (profile == "synthetic") {
            const double t = cfg.params.get_double("asym.t", 1.0, 1e-9, 1e9);
            const double z_min = cfg.params.get_double("asym.z_min", 1e-3, 1e-12, 1e9);
            const double z_max = cfg.params.get_double("asym.z_max", 10.0, z_min, 1e9);
            for (double z : log_spaced(z_min, z_max, n))
                rows.push_back({t, z, std::abs(synthetic_bhat(k, m, t, complexd{z, 0.0}))});
        } else {
            const double t_min = cfg.params.get_double("asym.t_min", 0.01, 1e-9, 1e9);
            const double t_max = cfg.params.get_double("asym.t_max", 1.0, t_min, 1e9);
            const double kappa = cfg.params.get_double("asym.kappa", 1.0, 1e-12, 1e9);
            const double t_star = cfg.params.get_double("asym.t_star", 1.0, 1e-9, 1e9);
            const double abs_z = cfg.params.get_double("asym.abs_z", 0.1, 0.0, 1e9);
            const double bz = cfg.params.get_double("asym.bz", 1.0, 0.0, 1e9);
            for (double t : log_spaced(t_min, t_max, n)) {
                double value = 0.0;
                double z_col = 0.0;
                if (profile == "alpha") {
                    value = alpha_profile(k, t, t_z);
                } else if (profile == "beta") {
                    value = beta_profile(k, t, t_z);
                } else if (profile == "phi") {
                    value = phi_profile(k, m, kappa, t, t_z, t_star, abs_z);
                    z_col = abs_z;
                } else {
                    value = bhat_profile(k, t, t_z, bz);
                }
                rows.push_back({t, z_col, value});
            }
        }
        std::ostringstream os;
        write_profile_csv(os, rows);
        tables["profile"] = os.str();
        rep.records.push_back(make_record("asym.rows", !rows.empty(),
                                          static_cast<double>(rows.size()), 1.0, "rows"));
    });
}

inline void cmd_report(const RunConfig& cfg, Report& rep, TableMap& tables,
                       std::ostream* diag) {
    allow_keys(cfg.params, {});

    guarded(rep, diag, "first_order", [&] {
        const ModelParams params{1};
        const FamilySampler family = [params](const PointTZ& p) {
            return model_fields(params, p);
        };
        const GridSpec coarse{0.5, 2.0, 2.0, 33, 33};
        const std::array<GridSpec, 3> nest{coarse, GridSpec{0.5, 2.0, 2.0, 65, 65},
                                           GridSpec{0.5, 2.0, 2.0, 129, 129}};
        const ConvergenceStudy study =
            convergence_study(ResidualCheck::first_order, family, nest);
        std::ostringstream os;
        write_convergence_csv(os, study);
        tables["first_order"] = os.str();
        study_records(rep, "first_order", study);
    });

    guarded(rep, diag, "curvature_projection", [&] {
        SyntheticSpec spec;
        spec.seed = cfg.seed;
        const auto make = [spec](const GridSpec& g) {
            return recompose(synthetic_decomposition(g, spec));
        };
        const std::array<GridSpec, 3> nest{GridSpec{0.5, 1.5, 1.5, 17, 25},
                                           GridSpec{0.5, 1.5, 1.5, 33, 49},
                                           GridSpec{0.5, 1.5, 1.5, 65, 97}};
        const ConvergenceStudy study =
            convergence_study(ResidualCheck::curvature_projection, make, nest);
        std::ostringstream os;
        write_convergence_csv(os, study);
        tables["curvature_projection"] = os.str();
        study_records(rep, "curvature_projection", study);
    });

    guarded(rep, diag, "uniqueness", [&] {
        const double sup =
            uniqueness_experiment(0, zero_grid(0.2, 5.0, 10.0, 65, 65), cfg.seed);
        rep.records.push_back(
            make_record("uniqueness.sup_u", sup < 1e-6, sup, 1e-6, "sup_abs"));
    });

    guarded(rep, diag, "comparison", [&] {
        const auto [max_u, min_u] =
            comparison_experiment(1, zero_grid(0.2, 5.0, 10.0, 65, 65), 0.1);
        rep.records.push_back(
            make_record("comparison.max_u", max_u <= 1e-8, max_u, 1e-8, "max"));
    });

    guarded(rep, diag, "riccati", [&] {
        const Trajectory traj =
            riccati_y(RiccatiSpec{1, 0.0, 0.0, 0.0}, [](double) { return 0.0; }, 5.0);
        double worst = 0.0;
        for (const auto& [tau, y] : traj.samples)
            worst = std::max(worst, std::abs(y - std::tanh(2.0 * tau)));
        rep.records.push_back(
            make_record("riccati.tanh_match", worst <= 1e-8, worst, 1e-8, "max_abs"));
        const double violation = tanh_bound_check(1, 0.0, traj);
        rep.records.push_back(make_record("riccati.tanh_bound_violation", violation <= 1e-8,
                                          violation, 1e-8, "max_gap"));
    });

    guarded(rep, diag, "exponent", [&] {
        const Rational r = tz_exponent(1, 1);
        rep.records.push_back(make_record("asym.tz_exponent", r == Rational{1, 4}, 0.25, 0.25,
                                          std::to_string(r.num) + "/" +
                                              std::to_string(r.den)));
    });
}

}  // namespace detail

/// Dispatches one resolved invocation, returning its report and filling the
/// optional table map with named CSV payloads.  Unknown commands, unknown
/// keys and bad values throw; errors inside a dispatched check are recorded
/// as failures (logged to diag when given) without aborting the run.
[[nodiscard]] inline Report run_suite(const RunConfig& cfg, TableMap* tables = nullptr,
                                      std::ostream* diag = nullptr) {
    if (cfg.format != "csv" && cfg.format != "json")
        throw BadValue("run.format", "'" + cfg.format + "' is not csv or json");

    Report rep;
    rep.config.emplace_back("run.command", cfg.command);
    rep.config.emplace_back("run.seed", std::to_string(cfg.seed));
    rep.config.emplace_back("run.format", cfg.format);
    std::vector<std::pair<std::string, std::string>> sorted = cfg.params.entries();
    std::sort(sorted.begin(), sorted.end());
    for (auto& kv : sorted) rep.config.push_back(std::move(kv));

    TableMap local;
    TableMap& tbl = tables != nullptr ? *tables : local;

    if (cfg.command == "model-eval")
        detail::cmd_model_eval(cfg, rep, tbl, diag);
    else if (cfg.command == "model-table")
        detail::cmd_model_table(cfg, rep, tbl, diag);
    else if (cfg.command == "residual")
        detail::cmd_residual(cfg, rep, tbl, diag);
    else if (cfg.command == "identity")
        detail::cmd_identity(cfg, rep, tbl, diag);
    else if (cfg.command == "flux")
        detail::cmd_flux(cfg, rep, tbl, diag);
    else if (cfg.command == "solve-w")
        detail::cmd_solve_w(cfg, rep, tbl, diag);
    else if (cfg.command == "ode")
        detail::cmd_ode(cfg, rep, tbl, diag);
    else if (cfg.command == "asym")
        detail::cmd_asym(cfg, rep, tbl, diag);
    else if (cfg.command == "report")
        detail::cmd_report(cfg, rep, tbl, diag);
    else
        throw BadParam("run_suite: unknown command '" + cfg.command + "'");

    return rep;
}

}  // namespace su2lab
