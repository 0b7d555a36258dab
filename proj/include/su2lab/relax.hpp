#pragma once

// Axisymmetric nonlinear relaxation solver for the comparison form of the
// log-magnitude equation.  The unknown u is the difference between a
// candidate log-magnitude profile and the closed-form degree-m profile, so
// it is smooth across the axis and tends to zero both at large |z|/t and
// toward the ends of the t-range; the truncated box therefore carries
// homogeneous Dirichlet data on its t-edges and outer rho-edge, while the
// axis rho = 0 is a regular interior line handled by even reflection.
//
// The equation solved is
//
//     -(d^2/dt^2 + d^2/drho^2 + (1/rho) d/drho) u
//         + (e^{4u} - 1) |phi_m|^2 + 4 s  =  0,
//
// with |phi_m|^2 the squared magnitude of the degree-m transverse Higgs
// pair and s >= 0 a prescribed source.  Pointwise damped Newton sweeps
// (Gauss-Seidel in red-black order, or Jacobi) drive it to a fixed point;
// the linearized diagonal is the stencil centre plus 4 e^{4u} |phi_m|^2,
// which is strictly positive, so every Newton step is well defined.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "su2lab/models.hpp"

namespace su2lab {

/// Thrown when two scalar grids that must conform (same box, same node
/// counts) do not.
struct ShapeMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A real scalar field on a uniform (t, rho) grid covering
/// [t_min, t_max] x [0, rho_max].  Row-major storage, t first.  The
/// boundary ring (both t-edges and the outer rho-edge) carries Dirichlet
/// data; the axis column rho = 0 is a regular unknown.
struct ScalarGrid2D {
    double t_min = 0.2;
    double t_max = 5.0;
    double rho_max = 10.0;
    int n_t = 129;
    int n_rho = 129;
    std::vector<double> values;

    [[nodiscard]] std::size_t size() const {
        return static_cast<std::size_t>(n_t) * static_cast<std::size_t>(n_rho);
    }
    [[nodiscard]] std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) * n_rho + j;
    }
    [[nodiscard]] double h_t() const { return (t_max - t_min) / (n_t - 1); }
    [[nodiscard]] double h_rho() const { return rho_max / (n_rho - 1); }
    [[nodiscard]] double t(int i) const { return t_min + i * h_t(); }
    [[nodiscard]] double rho(int j) const { return j * h_rho(); }

    void validate() const {
        if (!(t_min > 0.0) || !(t_max > t_min) || !(rho_max > 0.0))
            throw BadParam("ScalarGrid2D: need 0 < t_min < t_max and rho_max > 0");
        if (n_t < 3 || n_rho < 3)
            throw BadParam("ScalarGrid2D: need at least 3 nodes per direction");
        if (values.size() != size())
            throw ShapeMismatch("ScalarGrid2D: values do not match the node count");
    }
};

/// True when both grids cover the same box with the same node counts.
[[nodiscard]] inline bool conforms(const ScalarGrid2D& a, const ScalarGrid2D& b) {
    return a.t_min == b.t_min && a.t_max == b.t_max && a.rho_max == b.rho_max &&
           a.n_t == b.n_t && a.n_rho == b.n_rho;
}

/// A zero-filled field on the given box.
[[nodiscard]] inline ScalarGrid2D zero_grid(double t_min, double t_max, double rho_max,
                                            int n_t, int n_rho) {
    ScalarGrid2D g;
    g.t_min = t_min;
    g.t_max = t_max;
    g.rho_max = rho_max;
    g.n_t = n_t;
    g.n_rho = n_rho;
    g.values.assign(g.size(), 0.0);
    g.validate();
    return g;
}

/// The default desk-scale box: t in [0.2, 5], rho in [0, 10], spanning
/// three decades of the polar angle while keeping sweeps sub-second.
[[nodiscard]] inline ScalarGrid2D desk_grid(int n_t = 129, int n_rho = 129) {
    return zero_grid(0.2, 5.0, 10.0, n_t, n_rho);
}

/// A zero-filled copy of the box of g.
[[nodiscard]] inline ScalarGrid2D zero_like(const ScalarGrid2D& g) {
    return zero_grid(g.t_min, g.t_max, g.rho_max, g.n_t, g.n_rho);
}

/// Sweep ordering of the pointwise Newton relaxation.
enum class Scheme { gauss_seidel_newton, jacobi_newton };

/// Relaxation parameters.  Convergence requires the update max-norm to
/// fall below tolerance AND the equation residual max-norm to fall below
/// twice the tolerance, so a converged field satisfies the discrete
/// equation to a few times the tolerance irrespective of grid size or
/// sweep ordering.
struct SolverConfig {
    double tolerance = 1.0e-10;
    long max_sweeps = 60000;
    double damping = 0.8;
    Scheme scheme = Scheme::gauss_seidel_newton;

    void validate() const {
        if (!(tolerance > 0.0)) throw BadParam("SolverConfig: tolerance must be positive");
        if (max_sweeps < 1) throw BadParam("SolverConfig: need at least one sweep");
        if (!(damping > 0.0) || damping > 1.0)
            throw BadParam("SolverConfig: damping must lie in (0, 1]");
    }
};

/// Squared magnitude of the degree-m transverse Higgs pair,
/// (1/2t^2) times the squared normalized hyperbolic ratio.  Vanishes on
/// the axis for m >= 1 and tends to 1/(2t^2) far from it.
[[nodiscard]] inline double phi_model_sq(int m, double t, double rho) {
    if (m < 0) throw BadParam("phi_model_sq: degree must be >= 0");
    if (!(t > 0.0)) throw BadParam("phi_model_sq: need t > 0");
    const double r = sinh_ratio(m, theta_x(PointTZ{t, {rho, 0.0}}).theta);
    return r * r / (2.0 * t * t);
}

namespace detail {

/// Per-column stencil coefficients of the axisymmetric Laplacian.  For
/// j >= 1 the transverse part is cr (u_E - 2u + u_W) + (cr/2j)(u_E - u_W);
/// on the axis, even reflection gives 4 cr (u_E - u).
struct RelaxStencil {
    double ct = 0.0;                // 1/h_t^2
    std::vector<double> east;       // coefficient of u(i, j+1)
    std::vector<double> west;       // coefficient of u(i, j-1)
    std::vector<double> center_t;   // transverse part of the stencil centre
};

[[nodiscard]] inline RelaxStencil relax_stencil(const ScalarGrid2D& g) {
    RelaxStencil st;
    const double cr = 1.0 / (g.h_rho() * g.h_rho());
    st.ct = 1.0 / (g.h_t() * g.h_t());
    st.east.resize(g.n_rho, 0.0);
    st.west.resize(g.n_rho, 0.0);
    st.center_t.resize(g.n_rho, 0.0);
    st.east[0] = 4.0 * cr;
    st.center_t[0] = 4.0 * cr;
    for (int j = 1; j < g.n_rho; ++j) {
        const double c1 = cr / (2.0 * j);  // 1/(2 rho_j h_rho)
        st.east[j] = cr + c1;
        st.west[j] = cr - c1;
        st.center_t[j] = 2.0 * cr;
    }
    return st;
}

/// Equation residual at one unknown node (interior t row, any rho column
/// except the outer edge).
[[nodiscard]] inline double node_residual(const ScalarGrid2D& u, const RelaxStencil& st,
                                          const std::vector<double>& weight,
                                          const ScalarGrid2D& s, int i, int j) {
    const std::size_t at = u.index(i, j);
    const double uc = u.values[at];
    double lap = st.ct * (u.values[at + u.n_rho] + u.values[at - u.n_rho] - 2.0 * uc);
    lap += st.east[j] * u.values[at + 1] - st.center_t[j] * uc;
    if (j > 0) lap += st.west[j] * u.values[at - 1];
    return -lap + std::expm1(4.0 * uc) * weight[at] + 4.0 * s.values[at];
}

[[nodiscard]] inline double residual_maxnorm(const ScalarGrid2D& u, const RelaxStencil& st,
                                             const std::vector<double>& weight,
                                             const ScalarGrid2D& s) {
    double worst = 0.0;
    for (int i = 1; i + 1 < u.n_t; ++i)
        for (int j = 0; j + 1 < u.n_rho; ++j)
            worst = std::max(worst, std::abs(node_residual(u, st, weight, s, i, j)));
    return worst;
}

[[nodiscard]] inline std::vector<double> weight_table(int m, const ScalarGrid2D& g) {
    std::vector<double> weight(g.size());
    for (int i = 0; i < g.n_t; ++i) {
        const double t = g.t(i);
        for (int j = 0; j < g.n_rho; ++j) weight[g.index(i, j)] = phi_model_sq(m, t, g.rho(j));
    }
    return weight;
}

}  // namespace detail

/// Node-wise residual of the comparison equation.  The axis column is
/// evaluated through the even-reflection stencil; the Dirichlet ring
/// (t-edges and the outer rho-edge) reports zero.
[[nodiscard]] inline ScalarGrid2D u_residual(const ScalarGrid2D& u, int m,
                                             const ScalarGrid2D& s) {
    u.validate();
    s.validate();
    if (!conforms(u, s)) throw ShapeMismatch("u_residual: source does not conform to u");
    if (m < 0) throw BadParam("u_residual: degree must be >= 0");

    const detail::RelaxStencil st = detail::relax_stencil(u);
    const std::vector<double> weight = detail::weight_table(m, u);
    ScalarGrid2D out = zero_like(u);
    for (int i = 1; i + 1 < u.n_t; ++i)
        for (int j = 0; j + 1 < u.n_rho; ++j)
            out.values[out.index(i, j)] = detail::node_residual(u, st, weight, s, i, j);
    return out;
}

/// One entry of the per-sweep convergence log.
struct SweepStat {
    long sweep = 0;
    double update_maxnorm = 0.0;
    double residual_maxnorm = 0.0;
};

/// Converged field plus iteration statistics.
struct SolveResult {
    ScalarGrid2D u;
    long sweeps = 0;
    double final_update = std::numeric_limits<double>::infinity();
};

/// Thrown when the sweep budget is exhausted; carries the last iterate so
/// the caller can inspect how far the relaxation got.
struct NoConvergence : std::runtime_error {
    NoConvergence(const std::string& what, ScalarGrid2D last, long sweeps_used)
        : std::runtime_error(what), last_iterate(std::move(last)), sweeps(sweeps_used) {}
    ScalarGrid2D last_iterate;
    long sweeps = 0;
};

/// Damped pointwise-Newton relaxation of the comparison equation from the
/// initial field init, whose boundary ring supplies the Dirichlet data.
/// The source s must conform to init and should be nonnegative for the
/// maximum-principle experiments.  When log is non-null a per-sweep
/// convergence record is appended.
[[nodiscard]] inline SolveResult solve_u(int m, const ScalarGrid2D& s, const ScalarGrid2D& init,
                                         const SolverConfig& cfg = {},
                                         std::vector<SweepStat>* log = nullptr) {
    init.validate();
    s.validate();
    cfg.validate();
    if (!conforms(init, s)) throw ShapeMismatch("solve_u: source does not conform to init");
    if (m < 0) throw BadParam("solve_u: degree must be >= 0");
    for (double v : init.values)
        if (!std::isfinite(v)) throw BadParam("solve_u: initial field must be finite");

    const detail::RelaxStencil st = detail::relax_stencil(init);
    const std::vector<double> weight = detail::weight_table(m, init);

    SolveResult result;
    result.u = init;
    ScalarGrid2D& u = result.u;
    ScalarGrid2D next = init;  // Jacobi target buffer

    const int n_t = u.n_t;
    const int n_rho = u.n_rho;
    const double two_ct = 2.0 * st.ct;

    auto newton_update = [&](const ScalarGrid2D& from, int i, int j) {
        const std::size_t at = from.index(i, j);
        const double uc = from.values[at];
        double lap = st.ct * (from.values[at + n_rho] + from.values[at - n_rho] - 2.0 * uc);
        lap += st.east[j] * from.values[at + 1] - st.center_t[j] * uc;
        if (j > 0) lap += st.west[j] * from.values[at - 1];
        const double e4u = std::exp(4.0 * uc);
        const double f = -lap + (e4u - 1.0) * weight[at] + 4.0 * s.values[at];
        const double diag = two_ct + st.center_t[j] + 4.0 * e4u * weight[at];
        return -cfg.damping * f / diag;
    };

    for (long sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
        double update = 0.0;
        if (cfg.scheme == Scheme::gauss_seidel_newton) {
            // red-black ordering: each colour reads only the other colour
            for (int colour = 0; colour < 2; ++colour) {
                for (int i = 1; i + 1 < n_t; ++i) {
                    for (int j = (i + colour) % 2; j + 1 < n_rho; j += 2) {
                        const double du = newton_update(u, i, j);
                        u.values[u.index(i, j)] += du;
                        update = std::max(update, std::abs(du));
                    }
                }
            }
        } else {
            for (int i = 1; i + 1 < n_t; ++i) {
                for (int j = 0; j + 1 < n_rho; ++j) {
                    const double du = newton_update(u, i, j);
                    next.values[next.index(i, j)] = u.values[u.index(i, j)] + du;
                    update = std::max(update, std::abs(du));
                }
            }
            std::swap(u.values, next.values);
        }

        result.sweeps = sweep;
        result.final_update = update;

        // converged once the update stalls AND the equation itself is met
        double residual = std::numeric_limits<double>::quiet_NaN();
        if (update < cfg.tolerance || log) {
            residual = detail::residual_maxnorm(u, st, weight, s);
            if (log) log->push_back({sweep, update, residual});
            if (update < cfg.tolerance && residual <= 2.0 * cfg.tolerance) return result;
        }
    }
    throw NoConvergence("solve_u: no convergence within the sweep budget", std::move(result.u),
                        cfg.max_sweeps);
}

/// Runs the relaxation on a zero source from a seeded random initial field
/// of amplitude 1/2 on the unknown nodes, and reports the max-norm of the
/// converged field.  A tolerance-level result realizes the uniqueness of
/// the degree-m profile on the box.
[[nodiscard]] inline double uniqueness_experiment(int m, const ScalarGrid2D& domain,
                                                  unsigned seed, const SolverConfig& cfg = {}) {
    domain.validate();
    ScalarGrid2D init = zero_like(domain);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-0.5, 0.5);
    for (int i = 1; i + 1 < init.n_t; ++i)
        for (int j = 0; j + 1 < init.n_rho; ++j) init.values[init.index(i, j)] = amp(rng);

    const SolveResult result = solve_u(m, zero_like(domain), init, cfg);
    double sup = 0.0;
    for (double v : result.u.values) sup = std::max(sup, std::abs(v));
    return sup;
}

/// A smooth positive bump of the given amplitude centred in the box,
/// exp(-8 (xi^2 + eta^2)) in box-normalized coordinates.
[[nodiscard]] inline ScalarGrid2D centered_bump(const ScalarGrid2D& domain, double amplitude) {
    domain.validate();
    if (amplitude < 0.0) throw BadParam("centered_bump: amplitude must be >= 0");
    ScalarGrid2D s = zero_like(domain);
    const double t_c = 0.5 * (domain.t_min + domain.t_max);
    const double rho_c = 0.5 * domain.rho_max;
    for (int i = 0; i < s.n_t; ++i) {
        const double xi = (s.t(i) - t_c) / (0.5 * (domain.t_max - domain.t_min));
        for (int j = 0; j < s.n_rho; ++j) {
            const double eta = (s.rho(j) - rho_c) / (0.5 * domain.rho_max);
            s.values[s.index(i, j)] = amplitude * std::exp(-8.0 * (xi * xi + eta * eta));
        }
    }
    return s;
}

/// Relaxes from zero with the centred-bump source of amplitude a and
/// reports (max u, min u) of the converged field.  A nonnegative source
/// forces a nonpositive field: the max sits at tolerance-level zero and
/// the min is strictly negative for a > 0.
[[nodiscard]] inline std::pair<double, double> comparison_experiment(
    int m, const ScalarGrid2D& domain, double amplitude, const SolverConfig& cfg = {}) {
    const SolveResult result =
        solve_u(m, centered_bump(domain, amplitude), zero_like(domain), cfg);
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    for (double v : result.u.values) {
        hi = std::max(hi, v);
        lo = std::min(lo, v);
    }
    return {hi, lo};
}

/// Solution dump as CSV rows t,rho,u.
inline void write_solution_csv(std::ostream& os, const ScalarGrid2D& u) {
    os << "t,rho,u\n";
    char line[128];
    for (int i = 0; i < u.n_t; ++i)
        for (int j = 0; j < u.n_rho; ++j) {
            std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", u.t(i), u.rho(j),
                          u.values[u.index(i, j)]);
            os << line;
        }
}

/// Convergence log as CSV rows sweep,update_maxnorm,residual_maxnorm.
inline void write_convergence_log_csv(std::ostream& os, const std::vector<SweepStat>& log) {
    os << "sweep,update_maxnorm,residual_maxnorm\n";
    char line[128];
    for (const SweepStat& s : log) {
        std::snprintf(line, sizeof line, "%ld,%.17g,%.17g\n", s.sweep, s.update_maxnorm,
                      s.residual_maxnorm);
        os << line;
    }
}

}  // namespace su2lab
