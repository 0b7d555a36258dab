#pragma once

/// Lattice residual suite: node-wise finite-difference residuals of the
/// first-order system and every identity layered on top of it (the
/// second-order form, the frame-projected flow equations, the curvature
/// splitting identities, the pairing flows, the norm balance, the two
/// second-order frame formulas, the scalar log-magnitude equations and the
/// divergence identity), plus the truncated curvature-flux curve and the
/// growth/flux diagnostics.
///
/// Checks come in two classes.  "Solution-only" residuals vanish exactly
/// when the configuration solves the first-order system and stay bounded
/// away from zero otherwise.  "Decomposition-identity" residuals vanish on
/// any configuration assembled from frame data in the flow form, solution
/// or not; testing them on random synthetic frame data is the intended use.
/// The classification lives in `check_class` so callers cannot mistakenly
/// expect a synthetic configuration to satisfy a solution-only equation.
///
/// All statistics exclude a two-node boundary margin (one-sided stencils
/// composed with one-sided stencils lose an order on the outermost ring)
/// and the dilation of any flagged transverse-zero nodes; excluded counts
/// are reported.  Refinement studies restrict every level of a nested grid
/// triple to one fixed physical region derived from the coarsest level, so
/// the Richardson ratios compare identical points.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "su2lab/algebra.hpp"
#include "su2lab/grid.hpp"
#include "su2lab/models.hpp"

namespace su2lab {

// ---- thresholds shared by reports, studies and acceptance checks -----------

/// Richardson ratio band certifying second-order decay under grid halving.
inline constexpr double kRatioLow = 3.2;
inline constexpr double kRatioHigh = 4.8;
/// Residuals below this on every level count as exact lattice zeros.
inline constexpr double kExactFloor = 1.0e-10;
/// Empirical lower-bound threshold for the growth-floor diagnostics.  The
/// box must reach |z|/t of a few hundred for the threshold to separate
/// decaying tails from genuine floors.
inline constexpr double kDiagnosticFloor = 1.0e-2;
/// Empirical upper bound accepted for the scaled growth diagnostic.
inline constexpr double kDiagnosticGrowthCap = 10.0;
/// Orthogonality tolerance for the algebraic diagnostic bullet.
inline constexpr double kDiagnosticOrthoTol = 1.0e-10;
/// Accepted spread of R * f(R) over a flux curve (decay consistent with a
/// 1/R bound); area-growing curves exceed it immediately.
inline constexpr double kFluxSpreadMax = 1.5;

/// Which side of the solution/identity divide a named equation lives on.
enum class CheckClass { solution_only, decomposition_identity };

/// Summary statistics of one equation's node-wise residual magnitude.
struct ResidualEntry {
    std::string equation;
    double max_abs = 0.0;
    double l2 = 0.0;  // root-mean-square over included nodes
    std::size_t excluded = 0;
};

/// Residual statistics for a batch of equations on one grid.
struct ResidualReport {
    GridSpec grid;
    std::vector<ResidualEntry> entries;

    [[nodiscard]] const ResidualEntry& entry(std::string_view equation) const {
        for (const ResidualEntry& e : entries)
            if (e.equation == equation) return e;
        throw BadParam("ResidualReport: no entry named " + std::string(equation));
    }
    [[nodiscard]] double worst_max() const {
        double w = 0.0;
        for (const ResidualEntry& e : entries) w = std::max(w, e.max_abs);
        return w;
    }
};

/// Node-wise residual magnitude of one equation.
struct ResidualField {
    std::string equation;
    std::vector<double> abs_residual;
};
using ResidualFields = std::vector<ResidualField>;

/// Truncated curvature-flux curve: f(R) integrates the curvature density
/// over [t_lo, t_hi] x {R <= |z| <= 2R}.
struct FluxCurve {
    std::vector<std::pair<double, double>> points;  // (R, f(R)), R increasing
    double t_lo = 0.0;
    double t_hi = 0.0;
};

/// One empirical growth/flux diagnostic bullet.
struct BulletCheck {
    std::string id;
    std::string group;  // "shared", "pointwise" or "integral"
    double measured = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

/// Structured growth/flux diagnostics of a configuration.
struct ConstraintDiagnostics {
    double growth_bound = 0.0;  // max over nodes of t |a|
    std::vector<BulletCheck> checks;

    [[nodiscard]] const BulletCheck& check(std::string_view id) const {
        for (const BulletCheck& c : checks)
            if (c.id == id) return c;
        throw BadParam("ConstraintDiagnostics: no check named " + std::string(id));
    }
};

/// Classification table: equation id -> check class.  Unknown ids throw.
[[nodiscard]] inline CheckClass check_class(std::string_view equation) {
    static constexpr std::string_view identities[] = {
        "sigma_curvature_split_b", "sigma_curvature_split_e", "plus_curvature_b3",
        "plus_curvature_e1",       "plus_curvature_e2",
    };
    static constexpr std::string_view solutions[] = {
        "phi_time_flow",      "phi_holomorphic",
        "a3_time_flow",       "electric_1",
        "electric_2",         "second_order_higgs_1",
        "second_order_higgs_2", "second_order_higgs_3",
        "frame_phi_time",     "frame_phi_holomorphic",
        "frame_magnetic_projection", "frame_electric_projection",
        "beta_flow",          "bhat_flow",
        "bhat_pairing_flow",  "beta_pairing_flow",
        "norm_balance",       "beta_bochner",
        "bhat_bochner",       "w_elliptic",
        "w_alpha_relation",   "w_magnetic",
        "divergence_identity",
    };
    for (std::string_view id : identities)
        if (id == equation) return CheckClass::decomposition_identity;
    for (std::string_view id : solutions)
        if (id == equation) return CheckClass::solution_only;
    throw BadParam("check_class: unknown equation " + std::string(equation));
}

// ---- node masks and deterministic reductions --------------------------------

/// A physical sub-box with an optional excluded axis tube, used to restrict
/// residual statistics to a region independent of grid resolution.
struct Region {
    double t_lo = 0.0;
    double t_hi = 0.0;
    double x_in = 0.0;          // include |x1| <= x_in and |x2| <= x_in
    double axis_radius = 0.0;   // exclude |z| < axis_radius when positive

    [[nodiscard]] bool contains(const PointTZ& p) const {
        constexpr double slack = 1.0e-12;
        if (p.t < t_lo - slack || p.t > t_hi + slack) return false;
        if (std::abs(p.z.real()) > x_in + slack) return false;
        if (std::abs(p.z.imag()) > x_in + slack) return false;
        if (axis_radius > 0.0 && std::abs(p.z) < axis_radius - slack) return false;
        return true;
    }
};

/// The grid's own interior region: `margin` spacings inside every face.
[[nodiscard]] inline Region interior_region(const GridSpec& g, int margin = 2) {
    g.validate();
    return Region{g.t_min + margin * g.h_t(), g.t_max - margin * g.h_t(),
                  g.x_half - margin * g.h_x(), 0.0};
}

/// Inclusion mask (1 = include) of the nodes inside a region.
[[nodiscard]] inline std::vector<std::uint8_t> region_mask(const GridSpec& g, const Region& r) {
    std::vector<std::uint8_t> mask(g.size(), 0);
    for (int i = 0; i < g.n_t; ++i)
        for (int j = 0; j < g.n_x; ++j)
            for (int k = 0; k < g.n_x; ++k)
                mask[g.index(i, j, k)] = r.contains(g.point(i, j, k)) ? 1 : 0;
    return mask;
}

/// Clears the mask on every node within Chebyshev distance `radius` of a
/// flagged node, removing stencils contaminated by placeholder values.
inline void exclude_dilated(std::vector<std::uint8_t>& mask, const GridSpec& g,
                            const std::vector<std::uint8_t>& flagged, int radius = 2) {
    if (flagged.size() != g.size() || mask.size() != g.size())
        throw GridTooSmall("exclude_dilated: mask does not match the grid");
    for (int i = 0; i < g.n_t; ++i)
        for (int j = 0; j < g.n_x; ++j)
            for (int k = 0; k < g.n_x; ++k) {
                if (!flagged[g.index(i, j, k)]) continue;
                for (int di = -radius; di <= radius; ++di)
                    for (int dj = -radius; dj <= radius; ++dj)
                        for (int dk = -radius; dk <= radius; ++dk) {
                            const int ii = i + di, jj = j + dj, kk = k + dk;
                            if (ii < 0 || ii >= g.n_t || jj < 0 || jj >= g.n_x || kk < 0 ||
                                kk >= g.n_x)
                                continue;
                            mask[g.index(ii, jj, kk)] = 0;
                        }
            }
}

namespace detail {

/// Fixed-order pairwise summation: deterministic and accurate reductions.
[[nodiscard]] inline double pairwise_sum(const std::vector<double>& v, std::size_t lo,
                                         std::size_t hi) {
    const std::size_t len = hi - lo;
    if (len == 0) return 0.0;
    if (len <= 8) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += v[i];
        return s;
    }
    const std::size_t mid = lo + len / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

[[nodiscard]] inline double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(v, 0, v.size());
}

}  // namespace detail

/// Summarizes node-wise residual fields over an inclusion mask.
[[nodiscard]] inline ResidualReport summarize(const GridSpec& g, const ResidualFields& fields,
                                              const std::vector<std::uint8_t>& include) {
    if (include.size() != g.size())
        throw GridTooSmall("summarize: mask does not match the grid");
    std::size_t included = 0;
    for (std::uint8_t b : include) included += b;
    const std::size_t excluded = g.size() - included;

    ResidualReport report;
    report.grid = g;
    for (const ResidualField& f : fields) {
        if (f.abs_residual.size() != g.size())
            throw GridTooSmall("summarize: field does not match the grid");
        ResidualEntry e;
        e.equation = f.equation;
        e.excluded = excluded;
        std::vector<double> squares;
        squares.reserve(included);
        for (std::size_t i = 0; i < include.size(); ++i) {
            if (!include[i]) continue;
            e.max_abs = std::max(e.max_abs, f.abs_residual[i]);
            squares.push_back(f.abs_residual[i] * f.abs_residual[i]);
        }
        e.l2 = included ? std::sqrt(detail::pairwise_sum(squares) / included) : 0.0;
        report.entries.push_back(std::move(e));
    }
    return report;
}

// ---- node-wise residual fields ----------------------------------------------

namespace detail {

[[nodiscard]] inline std::vector<CLieElement> transverse_pair(const GaugeConfig& cfg) {
    const complexd i_unit{0.0, 1.0};
    std::vector<CLieElement> phi(cfg.grid.size());
    for (std::size_t i = 0; i < phi.size(); ++i)
        phi[i] = CLieElement(cfg.a_1[i]) - i_unit * CLieElement(cfg.a_2[i]);
    return phi;
}

/// The frame-preserving connection of a decomposition as a configuration
/// (curvature and covariant derivatives only touch the connection slots).
[[nodiscard]] inline GaugeConfig frame_connection(const Decomposition& d) {
    GaugeConfig cfg;
    cfg.grid = d.grid;
    cfg.A_t = d.Ahat_t;
    cfg.A_1 = d.Ahat_1;
    cfg.A_2 = d.Ahat_2;
    return cfg;
}

/// The full configuration a decomposition describes.
[[nodiscard]] inline GaugeConfig full_connection(const Decomposition& d) {
    GaugeConfig cfg;
    cfg.grid = d.grid;
    const std::size_t n = d.grid.size();
    cfg.A_t.resize(n);
    cfg.A_1.resize(n);
    cfg.A_2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        cfg.A_t[i] = d.Ahat_t[i] + d.b_t[i];
        cfg.A_1[i] = d.Ahat_1[i] + d.b_1[i];
        cfg.A_2[i] = d.Ahat_2[i] + d.b_2[i];
    }
    return cfg;
}

/// Second frame-covariant derivative along one axis.
[[nodiscard]] inline std::vector<CLieElement> frame_second_derivative(
    const GaugeConfig& frame, const std::vector<CLieElement>& field, Axis dir) {
    return covariant_derivative(frame, covariant_derivative(frame, field, dir), dir);
}

}  // namespace detail

/// Node-wise residual magnitudes of the five first-order equations.
[[nodiscard]] inline ResidualFields kw_residual_fields(const GaugeConfig& cfg) {
    const GridSpec& g = cfg.grid;
    g.validate();
    const std::size_t n = g.size();
    const complexd i_unit{0.0, 1.0};

    ResidualFields out(5);
    out[0].equation = "phi_time_flow";
    out[1].equation = "phi_holomorphic";
    out[2].equation = "a3_time_flow";
    out[3].equation = "electric_1";
    out[4].equation = "electric_2";
    for (ResidualField& f : out) f.abs_residual.resize(n);

    {
        const auto phi = detail::transverse_pair(cfg);
        const auto Dphi_t = covariant_derivative(cfg, phi, Axis::t);
        const auto Dphi_1 = covariant_derivative(cfg, phi, Axis::x1);
        const auto Dphi_2 = covariant_derivative(cfg, phi, Axis::x2);
        for (std::size_t i = 0; i < n; ++i) {
            out[0].abs_residual[i] =
                norm(Dphi_t[i] - i_unit * bracket(CLieElement(cfg.a_3[i]), phi[i]));
            out[1].abs_residual[i] = norm(Dphi_1[i] + i_unit * Dphi_2[i]);
        }
    }
    {
        const auto phi = detail::transverse_pair(cfg);
        const CurvatureGrids curv = curvature(cfg);
        const auto Da3_t = covariant_derivative(cfg, cfg.a_3, Axis::t);
        const auto Da3_1 = covariant_derivative(cfg, cfg.a_3, Axis::x1);
        const auto Da3_2 = covariant_derivative(cfg, cfg.a_3, Axis::x2);
        for (std::size_t i = 0; i < n; ++i) {
            const LieElement quad =
                real_part((0.5 * i_unit) * bracket(phi[i], star(phi[i])));
            out[2].abs_residual[i] = norm(Da3_t[i] - curv.B_3[i] - quad);
            out[3].abs_residual[i] = norm(curv.E_1[i] - Da3_2[i]);
            out[4].abs_residual[i] = norm(curv.E_2[i] + Da3_1[i]);
        }
    }
    return out;
}

/// Node-wise residual magnitudes of the second-order form for the three
/// Higgs components: minus the covariant Laplacian of each component minus
/// the double-bracket sum over the triple.
[[nodiscard]] inline ResidualFields second_order_residual_fields(const GaugeConfig& cfg) {
    const GridSpec& g = cfg.grid;
    g.validate();
    const std::size_t n = g.size();

    ResidualFields out(3);
    out[0].equation = "second_order_higgs_1";
    out[1].equation = "second_order_higgs_2";
    out[2].equation = "second_order_higgs_3";
    const std::vector<LieElement>* higgs[3] = {&cfg.a_1, &cfg.a_2, &cfg.a_3};

    for (int comp = 0; comp < 3; ++comp) {
        std::vector<LieElement> res(n);
        for (Axis dir : {Axis::t, Axis::x1, Axis::x2}) {
            const auto dd = covariant_derivative(
                cfg, covariant_derivative(cfg, *higgs[comp], dir), dir);
            for (std::size_t i = 0; i < n; ++i) res[i] -= dd[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (int other = 0; other < 3; ++other) {
                const LieElement& aj = (*higgs[other])[i];
                res[i] -= bracket(aj, bracket(aj, (*higgs[comp])[i]));
            }
        }
        out[comp].abs_residual.resize(n);
        for (std::size_t i = 0; i < n; ++i) out[comp].abs_residual[i] = norm(res[i]);
    }
    return out;
}

/// Node-wise residuals of the six frame-projected flow equations: the two
/// transverse-pair flows, the two scalar curvature projections and the two
/// off-frame flows.
[[nodiscard]] inline ResidualFields projected_residuals_fields(const Decomposition& d) {
    const GridSpec& g = d.grid;
    g.validate();
    const std::size_t n = g.size();
    const complexd i_unit{0.0, 1.0};
    const GaugeConfig frame = detail::frame_connection(d);

    ResidualFields out(6);
    out[0].equation = "frame_phi_time";
    out[1].equation = "frame_phi_holomorphic";
    out[2].equation = "frame_magnetic_projection";
    out[3].equation = "frame_electric_projection";
    out[4].equation = "beta_flow";
    out[5].equation = "bhat_flow";
    for (ResidualField& f : out) f.abs_residual.resize(n);

    const auto dt_alpha = partial_derivative(g, d.alpha, Axis::t);
    const auto d1_alpha = partial_derivative(g, d.alpha, Axis::x1);
    const auto d2_alpha = partial_derivative(g, d.alpha, Axis::x2);
    const CurvatureGrids curv_hat = curvature(frame);

    {
        const auto Dphi_t = covariant_derivative(frame, d.phi, Axis::t);
        const auto Dphi_1 = covariant_derivative(frame, d.phi, Axis::x1);
        const auto Dphi_2 = covariant_derivative(frame, d.phi, Axis::x2);
        for (std::size_t i = 0; i < n; ++i) {
            out[0].abs_residual[i] = norm(Dphi_t[i] - 2.0 * d.alpha[i] * d.phi[i]);
            out[1].abs_residual[i] = norm(Dphi_1[i] + i_unit * Dphi_2[i]);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double sig_b = inner(d.sigma[i], curv_hat.B_3[i]);
        const complexd sig_e = complexd(inner(d.sigma[i], curv_hat.E_1[i]),
                                        inner(d.sigma[i], curv_hat.E_2[i]));
        out[2].abs_residual[i] =
            std::abs(sig_b - (dt_alpha[i] - norm_sq(d.phi[i]) - 4.0 * norm_sq(d.b_hat[i]) -
                              4.0 * norm_sq(d.beta[i])));
        out[3].abs_residual[i] =
            std::abs(sig_e + i_unit * complexd(d1_alpha[i], d2_alpha[i]));
    }
    {
        const auto Dbeta_t = covariant_derivative(frame, d.beta, Axis::t);
        const auto Dbhat_t = covariant_derivative(frame, d.b_hat, Axis::t);
        const auto Dbeta_1 = covariant_derivative(frame, d.beta, Axis::x1);
        const auto Dbeta_2 = covariant_derivative(frame, d.beta, Axis::x2);
        const auto Dbhat_1 = covariant_derivative(frame, d.b_hat, Axis::x1);
        const auto Dbhat_2 = covariant_derivative(frame, d.b_hat, Axis::x2);
        for (std::size_t i = 0; i < n; ++i) {
            out[4].abs_residual[i] =
                norm(Dbeta_t[i] + 2.0 * d.alpha[i] * d.beta[i] +
                     i_unit * (Dbhat_1[i] - i_unit * Dbhat_2[i]));
            out[5].abs_residual[i] =
                norm(Dbhat_t[i] - 2.0 * d.alpha[i] * d.b_hat[i] +
                     i_unit * (Dbeta_1[i] + i_unit * Dbeta_2[i]));
        }
    }
    return out;
}

/// Node-wise residuals of the curvature splitting identities: the two
/// frame-component splits and the three plus-mode curvature formulas.
/// These hold for any configuration assembled from frame data in the flow
/// form, solutions or not.
[[nodiscard]] inline ResidualFields curvature_projection_residuals_fields(
    const Decomposition& d) {
    const GridSpec& g = d.grid;
    g.validate();
    const std::size_t n = g.size();
    const complexd i_unit{0.0, 1.0};
    const GaugeConfig frame = detail::frame_connection(d);
    const GaugeConfig full = detail::full_connection(d);

    ResidualFields out(5);
    out[0].equation = "sigma_curvature_split_b";
    out[1].equation = "sigma_curvature_split_e";
    out[2].equation = "plus_curvature_b3";
    out[3].equation = "plus_curvature_e1";
    out[4].equation = "plus_curvature_e2";
    for (ResidualField& f : out) f.abs_residual.resize(n);

    const CurvatureGrids curv_full = curvature(full);
    const CurvatureGrids curv_hat = curvature(frame);
    const auto Dbeta_1 = covariant_derivative(frame, d.beta, Axis::x1);
    const auto Dbeta_2 = covariant_derivative(frame, d.beta, Axis::x2);
    const auto Dbhat_t = covariant_derivative(frame, d.b_hat, Axis::t);
    const auto Dbhat_1 = covariant_derivative(frame, d.b_hat, Axis::x1);
    const auto Dbhat_2 = covariant_derivative(frame, d.b_hat, Axis::x2);

    for (std::size_t i = 0; i < n; ++i) {
        const double sig_b_full = inner(d.sigma[i], curv_full.B_3[i]);
        const double sig_b_hat = inner(d.sigma[i], curv_hat.B_3[i]);
        out[0].abs_residual[i] =
            std::abs(sig_b_full - sig_b_hat - 4.0 * norm_sq(d.b_hat[i]));

        const complexd sig_e_full = complexd(inner(d.sigma[i], curv_full.E_1[i]),
                                             inner(d.sigma[i], curv_full.E_2[i]));
        const complexd sig_e_hat = complexd(inner(d.sigma[i], curv_hat.E_1[i]),
                                            inner(d.sigma[i], curv_hat.E_2[i]));
        const complexd pairing = inner(star(d.beta[i]), d.b_hat[i]);
        out[1].abs_residual[i] = std::abs(sig_e_full - sig_e_hat + 4.0 * pairing);

        const CLieElement b_plus =
            eigen_split(d.sigma[i], CLieElement(curv_full.B_3[i])).p_plus;
        out[2].abs_residual[i] =
            norm(b_plus + i_unit * (Dbhat_1[i] - i_unit * Dbhat_2[i]));

        const CLieElement e1_plus =
            eigen_split(d.sigma[i], CLieElement(curv_full.E_1[i])).p_plus;
        const CLieElement e2_plus =
            eigen_split(d.sigma[i], CLieElement(curv_full.E_2[i])).p_plus;
        out[3].abs_residual[i] = norm(e1_plus - i_unit * Dbeta_1[i] - Dbhat_t[i]);
        out[4].abs_residual[i] = norm(e2_plus - i_unit * Dbeta_2[i] + i_unit * Dbhat_t[i]);
    }
    return out;
}

/// Node-wise residuals of the two pairing flow identities: the time
/// derivative of the transverse-pair pairing with b_hat (resp. beta) equals
/// the pairing with the plus-mode electric (resp. magnetic) curvature.
[[nodiscard]] inline ResidualFields pairing_flow_residuals_fields(const Decomposition& d) {
    const GridSpec& g = d.grid;
    g.validate();
    const std::size_t n = g.size();
    const complexd i_unit{0.0, 1.0};
    const GaugeConfig full = detail::full_connection(d);
    const CurvatureGrids curv = curvature(full);

    std::vector<complexd> pair_bhat(n), pair_beta(n), rhs_bhat(n), rhs_beta(n);
    for (std::size_t i = 0; i < n; ++i) {
        const CLieElement phi_star = star(d.phi[i]);
        pair_bhat[i] = inner(phi_star, d.b_hat[i]);
        pair_beta[i] = inner(phi_star, d.beta[i]);
        const CLieElement e1_plus =
            eigen_split(d.sigma[i], CLieElement(curv.E_1[i])).p_plus;
        const CLieElement e2_plus =
            eigen_split(d.sigma[i], CLieElement(curv.E_2[i])).p_plus;
        const CLieElement b3_plus =
            eigen_split(d.sigma[i], CLieElement(curv.B_3[i])).p_plus;
        rhs_bhat[i] = inner(phi_star, e1_plus + i_unit * e2_plus);
        rhs_beta[i] = inner(phi_star, b3_plus);
    }
    const auto dt_pair_bhat = partial_derivative(g, pair_bhat, Axis::t);
    const auto dt_pair_beta = partial_derivative(g, pair_beta, Axis::t);

    ResidualFields out(2);
    out[0].equation = "bhat_pairing_flow";
    out[1].equation = "beta_pairing_flow";
    out[0].abs_residual.resize(n);
    out[1].abs_residual.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[0].abs_residual[i] = std::abs(dt_pair_bhat[i] - rhs_bhat[i]);
        out[1].abs_residual[i] = std::abs(dt_pair_beta[i] - rhs_beta[i]);
    }
    return out;
}

/// Node-wise residual of the off-frame norm balance: the time derivative of
/// |beta|^2 - |b_hat|^2 balances transverse derivatives of the mixed
/// pairing and the alpha-weighted total norm.
[[nodiscard]] inline ResidualFields balance_residual_fields(const Decomposition& d) {
    const GridSpec& g = d.grid;
    g.validate();
    const std::size_t n = g.size();

    std::vector<double> diff(n), total(n), pair_re(n), pair_im(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double nb = norm_sq(d.beta[i]);
        const double nh = norm_sq(d.b_hat[i]);
        diff[i] = nb - nh;
        total[i] = nb + nh;
        const complexd p = inner(star(d.beta[i]), d.b_hat[i]);
        pair_re[i] = p.real();
        pair_im[i] = p.imag();
    }
    const auto dt_diff = partial_derivative(g, diff, Axis::t);
    const auto d1_im = partial_derivative(g, pair_im, Axis::x1);
    const auto d2_re = partial_derivative(g, pair_re, Axis::x2);

    ResidualFields out(1);
    out[0].equation = "norm_balance";
    out[0].abs_residual.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[0].abs_residual[i] = std::abs(dt_diff[i] - 2.0 * d1_im[i] + 2.0 * d2_re[i] +
                                          4.0 * d.alpha[i] * total[i]);
    }
    return out;
}

/// Node-wise residuals of the two second-order frame formulas for beta and
/// b_hat (frame-covariant Laplacian against curvature and alpha data).
[[nodiscard]] inline ResidualFields bochner_residuals_fields(const Decomposition& d) {
    const GridSpec& g = d.grid;
    g.validate();
    const std::size_t n = g.size();
    const complexd i_unit{0.0, 1.0};
    const GaugeConfig frame = detail::frame_connection(d);

    const auto dt_alpha = partial_derivative(g, d.alpha, Axis::t);
    const auto d1_alpha = partial_derivative(g, d.alpha, Axis::x1);
    const auto d2_alpha = partial_derivative(g, d.alpha, Axis::x2);
    const CurvatureGrids curv_hat = curvature(frame);

    std::vector<CLieElement> lap_beta(n), lap_bhat(n);
    for (Axis dir : {Axis::t, Axis::x1, Axis::x2}) {
        const auto ddb = detail::frame_second_derivative(frame, d.beta, dir);
        const auto ddh = detail::frame_second_derivative(frame, d.b_hat, dir);
        for (std::size_t i = 0; i < n; ++i) {
            lap_beta[i] += ddb[i];
            lap_bhat[i] += ddh[i];
        }
    }

    ResidualFields out(2);
    out[0].equation = "beta_bochner";
    out[1].equation = "bhat_bochner";
    out[0].abs_residual.resize(n);
    out[1].abs_residual.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double sig_b = inner(d.sigma[i], curv_hat.B_3[i]);
        const double a = d.alpha[i];
        const CLieElement rhs_beta =
            (-2.0 * sig_b - 2.0 * dt_alpha[i] + 4.0 * a * a) * d.beta[i] -
            (4.0 * i_unit * complexd(d1_alpha[i], -d2_alpha[i])) * d.b_hat[i];
        const CLieElement rhs_bhat =
            (2.0 * sig_b + 2.0 * dt_alpha[i] + 4.0 * a * a) * d.b_hat[i] +
            (4.0 * i_unit * complexd(d1_alpha[i], d2_alpha[i])) * d.beta[i];
        out[0].abs_residual[i] = norm(lap_beta[i] - rhs_beta);
        out[1].abs_residual[i] = norm(lap_bhat[i] - rhs_bhat);
    }
    return out;
}

/// Node-wise residuals of the scalar log-magnitude equations: the elliptic
/// equation for w = (1/2) ln(sqrt(2) t |phi|), the alpha relation and the
/// magnetic projection.  Flagged nodes carry w = 0 placeholders; consumers
/// must exclude their dilation from statistics (the report operations do).
[[nodiscard]] inline ResidualFields w_equation_residuals_fields(const Decomposition& d) {
    const GridSpec& g = d.grid;
    g.validate();
    const std::size_t n = g.size();
    const GaugeConfig frame = detail::frame_connection(d);

    std::vector<double> w(n, 0.0);
    for (int i = 0; i < g.n_t; ++i)
        for (int j = 0; j < g.n_x; ++j)
            for (int k = 0; k < g.n_x; ++k) {
                const std::size_t at = g.index(i, j, k);
                if (d.flagged[at]) continue;
                w[at] = 0.5 * std::log(std::sqrt(2.0) * g.t(i) * norm(d.phi[at]));
            }

    const auto dt_w = partial_derivative(g, w, Axis::t);
    const auto wtt = second_partial_derivative(g, w, Axis::t);
    const auto w11 = second_partial_derivative(g, w, Axis::x1);
    const auto w22 = second_partial_derivative(g, w, Axis::x2);
    const CurvatureGrids curv_hat = curvature(frame);

    ResidualFields out(3);
    out[0].equation = "w_elliptic";
    out[1].equation = "w_alpha_relation";
    out[2].equation = "w_magnetic";
    for (ResidualField& f : out) f.abs_residual.resize(n);

    for (int i = 0; i < g.n_t; ++i)
        for (int j = 0; j < g.n_x; ++j)
            for (int k = 0; k < g.n_x; ++k) {
                const std::size_t at = g.index(i, j, k);
                const double t = g.t(i);
                out[0].abs_residual[at] =
                    std::abs(-(wtt[at] + w11[at] + w22[at]) +
                             (std::exp(4.0 * w[at]) - 1.0) / (2.0 * t * t) +
                             4.0 * (norm_sq(d.beta[at]) + norm_sq(d.b_hat[at])));
                out[1].abs_residual[at] =
                    std::abs(d.alpha[at] + 0.5 / t - dt_w[at]);
                out[2].abs_residual[at] = std::abs(
                    inner(d.sigma[at], curv_hat.B_3[at]) + w11[at] + w22[at]);
            }
    return out;
}

/// Node-wise residual of the divergence identity, evaluated through the
/// regular part of w (the log-magnitude minus its m-fold vanishing factor),
/// which extends smoothly across z = 0.  Axis nodes get the regular part by
/// four-point extrapolation along the transverse directions.
[[nodiscard]] inline ResidualFields divergence_identity_residual_fields(const Decomposition& d,
                                                                        int m) {
    const GridSpec& g = d.grid;
    g.validate();
    if (m < 0) throw BadParam("divergence_identity_residual: degree must be >= 0");
    const std::size_t n = g.size();

    // Regular part of the log-magnitude away from the axis.
    const double axis_tol = 1.0e-9 * g.h_x();
    std::vector<double> w_reg(n, 0.0);
    std::vector<std::uint8_t> on_axis(n, 0);
    for (int i = 0; i < g.n_t; ++i)
        for (int j = 0; j < g.n_x; ++j)
            for (int k = 0; k < g.n_x; ++k) {
                const std::size_t at = g.index(i, j, k);
                const double t = g.t(i);
                const double rho = std::hypot(g.x1(j), g.x2(k));
                if (rho < axis_tol) {
                    on_axis[at] = 1;
                    continue;
                }
                if (d.flagged[at]) continue;  // placeholder, excluded by dilation
                const double t_pow = std::pow(t, m + 1);
                const double rho_pow = std::pow(rho, m);
                w_reg[at] =
                    0.5 * std::log(std::sqrt(2.0) * t_pow * norm(d.phi[at]) / rho_pow);
            }

    // Axis values by cubic extrapolation, averaged over the available
    // transverse directions whose four sample nodes are clean.
    for (int i = 0; i < g.n_t; ++i)
        for (int j = 0; j < g.n_x; ++j)
            for (int k = 0; k < g.n_x; ++k) {
                const std::size_t at = g.index(i, j, k);
                if (!on_axis[at]) continue;
                double acc = 0.0;
                int used = 0;
                const int dirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
                for (const auto& dir : dirs) {
                    const int j4 = j + 4 * dir[0], k4 = k + 4 * dir[1];
                    if (j4 < 0 || j4 >= g.n_x || k4 < 0 || k4 >= g.n_x) continue;
                    bool clean = true;
                    double v[4] = {0.0, 0.0, 0.0, 0.0};
                    for (int step = 1; step <= 4; ++step) {
                        const std::size_t nb = g.index(i, j + step * dir[0], k + step * dir[1]);
                        if (d.flagged[nb] || on_axis[nb]) {
                            clean = false;
                            break;
                        }
                        v[step - 1] = w_reg[nb];
                    }
                    if (!clean) continue;
                    acc += 4.0 * v[0] - 6.0 * v[1] + 4.0 * v[2] - v[3];
                    ++used;
                }
                if (used > 0) w_reg[at] = acc / used;
            }

    const auto dt_wreg = partial_derivative(g, w_reg, Axis::t);
    const auto w1 = partial_derivative(g, w_reg, Axis::x1);
    const auto w2 = partial_derivative(g, w_reg, Axis::x2);
    std::vector<double> lap_perp(n);
    {
        const auto w11 = second_partial_derivative(g, w_reg, Axis::x1);
        const auto w22 = second_partial_derivative(g, w_reg, Axis::x2);
        for (std::size_t i = 0; i < n; ++i) lap_perp[i] = w11[i] + w22[i];
    }

    std::vector<double> q(n), prod1(n), prod2(n), pair_re(n), pair_im(n);
    for (int i = 0; i < g.n_t; ++i)
        for (int j = 0; j < g.n_x; ++j)
            for (int k = 0; k < g.n_x; ++k) {
                const std::size_t at = g.index(i, j, k);
                const double t = g.t(i);
                const double rho = std::hypot(g.x1(j), g.x2(k));
                const double dtw_full = dt_wreg[at] - 0.5 * m / t;
                const double e4w = std::exp(4.0 * w_reg[at]) *
                                   su2lab::detail::int_pow(rho / t, 2 * m);
                q[at] = -dtw_full / (2.0 * t) + 0.5 * dtw_full * dtw_full -
                        0.5 * (w1[at] * w1[at] + w2[at] * w2[at]) -
                        (e4w - 1.0) / (8.0 * t * t) + norm_sq(d.beta[at]) -
                        norm_sq(d.b_hat[at]);
                prod1[at] = dt_wreg[at] * w1[at];
                prod2[at] = dt_wreg[at] * w2[at];
                const complexd p = inner(star(d.beta[at]), d.b_hat[at]);
                pair_re[at] = p.real();
                pair_im[at] = p.imag();
            }

    const auto dt_q = partial_derivative(g, q, Axis::t);
    const auto d1_prod1 = partial_derivative(g, prod1, Axis::x1);
    const auto d2_prod2 = partial_derivative(g, prod2, Axis::x2);
    const auto d1_im = partial_derivative(g, pair_im, Axis::x1);
    const auto d2_re = partial_derivative(g, pair_re, Axis::x2);

    ResidualFields out(1);
    out[0].equation = "divergence_identity";
    out[0].abs_residual.resize(n);
    for (int i = 0; i < g.n_t; ++i)
        for (int j = 0; j < g.n_x; ++j)
            for (int k = 0; k < g.n_x; ++k) {
                const std::size_t at = g.index(i, j, k);
                const double t = g.t(i);
                const double rhs = (m + 1) / (2.0 * t) * lap_perp[at] - d1_prod1[at] -
                                   d2_prod2[at] + 2.0 * d1_im[at] - 2.0 * d2_re[at];
                out[0].abs_residual[at] = std::abs(dt_q[at] - rhs);
            }
    return out;
}

// ---- report-level operations -------------------------------------------------

namespace detail {

[[nodiscard]] inline std::vector<std::uint8_t> report_mask(const GridSpec& g) {
    return region_mask(g, interior_region(g));
}

[[nodiscard]] inline std::vector<std::uint8_t> report_mask(const Decomposition& d) {
    auto mask = region_mask(d.grid, interior_region(d.grid));
    exclude_dilated(mask, d.grid, d.flagged);
    return mask;
}

}  // namespace detail

/// Residual report of the five first-order equations on a configuration.
[[nodiscard]] inline ResidualReport kw_residual(const GaugeConfig& cfg) {
    return summarize(cfg.grid, kw_residual_fields(cfg), detail::report_mask(cfg.grid));
}

/// Residual report of the second-order form on a configuration.
[[nodiscard]] inline ResidualReport second_order_residual(const GaugeConfig& cfg) {
    return summarize(cfg.grid, second_order_residual_fields(cfg),
                     detail::report_mask(cfg.grid));
}

/// Residual report of the frame-projected flow equations.
[[nodiscard]] inline ResidualReport projected_residuals(const Decomposition& d) {
    return summarize(d.grid, projected_residuals_fields(d), detail::report_mask(d));
}

/// Residual report of the curvature splitting identities.
[[nodiscard]] inline ResidualReport curvature_projection_residuals(const Decomposition& d) {
    return summarize(d.grid, curvature_projection_residuals_fields(d),
                     detail::report_mask(d));
}

/// Residual report of the two pairing flow identities.
[[nodiscard]] inline ResidualReport pairing_flow_residuals(const Decomposition& d) {
    return summarize(d.grid, pairing_flow_residuals_fields(d), detail::report_mask(d));
}

/// Residual report of the off-frame norm balance.
[[nodiscard]] inline ResidualReport balance_residual(const Decomposition& d) {
    return summarize(d.grid, balance_residual_fields(d), detail::report_mask(d));
}

/// Residual report of the two second-order frame formulas.
[[nodiscard]] inline ResidualReport bochner_residuals(const Decomposition& d) {
    return summarize(d.grid, bochner_residuals_fields(d), detail::report_mask(d));
}

/// Residual report of the scalar log-magnitude equations.  The vanishing
/// degree controls the excluded axis tube: for positive degree the
/// log-magnitude is singular on the axis, so nodes within three spacings of
/// it are excluded along with the flagged dilation.
[[nodiscard]] inline ResidualReport w_equation_residuals(const Decomposition& d, int m) {
    if (m < 0) throw BadParam("w_equation_residuals: degree must be >= 0");
    Region region = interior_region(d.grid);
    if (m >= 1) region.axis_radius = 3.0 * d.grid.h_x();
    auto mask = region_mask(d.grid, region);
    exclude_dilated(mask, d.grid, d.flagged);
    return summarize(d.grid, w_equation_residuals_fields(d), mask);
}

/// Residual report of the divergence identity (smooth across the axis for
/// the declared vanishing degree, so only flagged off-axis nodes and the
/// boundary margin are excluded).
[[nodiscard]] inline ResidualReport divergence_identity_residual(const Decomposition& d,
                                                                 int m) {
    auto mask = region_mask(d.grid, interior_region(d.grid));
    // Flagged nodes on the axis are handled by extrapolation; flagged nodes
    // elsewhere carry placeholders and must shed their dilation.
    std::vector<std::uint8_t> off_axis_flags(d.grid.size(), 0);
    const double axis_tol = 1.0e-9 * d.grid.h_x();
    bool any = false;
    for (int i = 0; i < d.grid.n_t; ++i)
        for (int j = 0; j < d.grid.n_x; ++j)
            for (int k = 0; k < d.grid.n_x; ++k) {
                const std::size_t at = d.grid.index(i, j, k);
                if (!d.flagged[at]) continue;
                if (std::hypot(d.grid.x1(j), d.grid.x2(k)) < axis_tol) continue;
                off_axis_flags[at] = 1;
                any = true;
            }
    if (any) exclude_dilated(mask, d.grid, off_axis_flags);
    return summarize(d.grid, divergence_identity_residual_fields(d, m), mask);
}

// ---- truncated curvature flux and growth diagnostics -------------------------

/// Truncated curvature flux over [t_lo, t_hi] x {R <= |z| <= 2R} for each
/// requested radius, by node-indicator quadrature of the curvature density.
[[nodiscard]] inline FluxCurve constraint_flux(const GaugeConfig& cfg,
                                               std::vector<double> radii, double t_lo,
                                               double t_hi) {
    const GridSpec& g = cfg.grid;
    g.validate();
    if (radii.empty()) throw BadParam("constraint_flux: need at least one radius");
    std::sort(radii.begin(), radii.end());
    if (!(radii.front() > 0.0)) throw BadParam("constraint_flux: radii must be positive");
    if (2.0 * radii.back() > g.x_half)
        throw BadParam("constraint_flux: outer annulus must fit inside the box");
    if (!(t_lo < t_hi)) throw BadParam("constraint_flux: need t_lo < t_hi");

    const CurvatureGrids curv = curvature(cfg);
    std::vector<double> density(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        density[i] =
            norm_sq(curv.B_3[i]) + norm_sq(curv.E_1[i]) + norm_sq(curv.E_2[i]);

    FluxCurve out;
    out.t_lo = t_lo;
    out.t_hi = t_hi;
    const double cell = g.h_t() * g.h_x() * g.h_x();
    for (double r : radii) {
        std::vector<double> contributions;
        for (int i = 0; i < g.n_t; ++i) {
            const double t = g.t(i);
            if (t < t_lo || t > t_hi) continue;
            for (int j = 0; j < g.n_x; ++j)
                for (int k = 0; k < g.n_x; ++k) {
                    const double rho = std::hypot(g.x1(j), g.x2(k));
                    if (rho < r || rho > 2.0 * r) continue;
                    contributions.push_back(density[g.index(i, j, k)]);
                }
        }
        out.points.emplace_back(r, cell * detail::pairwise_sum(contributions));
    }
    return out;
}

/// Empirical growth and flux diagnostics: the scaled growth bound, the two
/// lower-bound bullets (axial component everywhere; full norm on the cone
/// |z| >= 2t, both measured on the lower half of the t range), the
/// transverse-pair conditions, and the flux-decay bullet when a curve is
/// supplied.
[[nodiscard]] inline ConstraintDiagnostics constraint_diagnostics(
    const GaugeConfig& cfg, const FluxCurve* flux = nullptr) {
    const GridSpec& g = cfg.grid;
    g.validate();
    const complexd i_unit{0.0, 1.0};
    const double t_half = 0.5 * (g.t_min + g.t_max);

    double growth = 0.0;
    double axial_floor = std::numeric_limits<double>::infinity();
    double cone_floor = std::numeric_limits<double>::infinity();
    double phi_peak = 0.0;
    double ortho = 0.0;
    for (int i = 0; i < g.n_t; ++i)
        for (int j = 0; j < g.n_x; ++j)
            for (int k = 0; k < g.n_x; ++k) {
                const std::size_t at = g.index(i, j, k);
                const double t = g.t(i);
                const double rho = std::hypot(g.x1(j), g.x2(k));
                const double mag = std::sqrt(norm_sq(cfg.a_1[at]) + norm_sq(cfg.a_2[at]) +
                                             norm_sq(cfg.a_3[at]));
                growth = std::max(growth, t * mag);
                const CLieElement phi =
                    CLieElement(cfg.a_1[at]) - i_unit * CLieElement(cfg.a_2[at]);
                phi_peak = std::max(phi_peak, t * norm(phi));
                ortho = std::max(ortho,
                                 t * t * std::abs(inner(CLieElement(cfg.a_3[at]), phi)));
                if (t <= t_half) {
                    axial_floor = std::min(axial_floor, t * norm(cfg.a_3[at]));
                    if (rho >= 2.0 * t) cone_floor = std::min(cone_floor, t * mag);
                }
            }

    ConstraintDiagnostics out;
    out.growth_bound = growth;
    out.checks.push_back({"bounded_growth", "shared", growth, kDiagnosticGrowthCap,
                          growth <= kDiagnosticGrowthCap});
    out.checks.push_back({"axial_floor", "pointwise", axial_floor, kDiagnosticFloor,
                          axial_floor > kDiagnosticFloor});
    out.checks.push_back({"higgs_nonvanishing", "pointwise", phi_peak, kDiagnosticFloor,
                          phi_peak > kDiagnosticFloor});
    out.checks.push_back({"higgs_axial_orthogonality", "pointwise", ortho,
                          kDiagnosticOrthoTol, ortho <= kDiagnosticOrthoTol});
    out.checks.push_back({"cone_floor", "integral", cone_floor, kDiagnosticFloor,
                          cone_floor > kDiagnosticFloor});
    if (flux != nullptr && flux->points.size() >= 2) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (const auto& [r, f] : flux->points) {
            lo = std::min(lo, r * f);
            hi = std::max(hi, r * f);
        }
        const double spread = (lo > 0.0) ? hi / lo : (hi > 0.0 ? hi / kExactFloor : 1.0);
        out.checks.push_back(
            {"flux_decay", "integral", spread, kFluxSpreadMax, spread <= kFluxSpreadMax});
    }
    return out;
}

// ---- refinement studies -------------------------------------------------------

/// Which residual batch a study runs.
enum class ResidualCheck {
    first_order,
    second_order,
    projected,
    curvature_projection,
    pairing_flow,
    balance,
    bochner,
    w_equations,
    divergence_identity,
};

/// Whether a check consumes the frame decomposition (as opposed to the raw
/// configuration).
[[nodiscard]] inline bool check_uses_decomposition(ResidualCheck check) {
    return check != ResidualCheck::first_order && check != ResidualCheck::second_order;
}

/// Node-wise residual fields of one check on decomposed data.
[[nodiscard]] inline ResidualFields residual_fields(ResidualCheck check,
                                                    const Decomposition& d, int m = 0) {
    switch (check) {
        case ResidualCheck::projected:
            return projected_residuals_fields(d);
        case ResidualCheck::curvature_projection:
            return curvature_projection_residuals_fields(d);
        case ResidualCheck::pairing_flow:
            return pairing_flow_residuals_fields(d);
        case ResidualCheck::balance:
            return balance_residual_fields(d);
        case ResidualCheck::bochner:
            return bochner_residuals_fields(d);
        case ResidualCheck::w_equations:
            return w_equation_residuals_fields(d);
        case ResidualCheck::divergence_identity:
            return divergence_identity_residual_fields(d, m);
        default:
            throw BadParam("residual_fields: check needs a configuration, not a frame");
    }
}

/// Node-wise residual fields of one check on a configuration, decomposing
/// first when the check needs frame data.
[[nodiscard]] inline ResidualFields residual_fields(ResidualCheck check,
                                                    const GaugeConfig& cfg, int m = 0) {
    if (check == ResidualCheck::first_order) return kw_residual_fields(cfg);
    if (check == ResidualCheck::second_order) return second_order_residual_fields(cfg);
    return residual_fields(check, decompose(cfg), m);
}

/// Per-equation outcome of a three-level refinement study.
struct ConvergenceRow {
    std::string equation;
    std::array<double, 3> max_abs{};
    std::array<double, 2> ratio{};
    bool exact = false;  // every level under the exactness floor
    bool pass = false;   // exact, or both ratios inside the band
};

/// A three-level refinement study on nested grids restricted to one fixed
/// physical region.
struct ConvergenceStudy {
    std::array<GridSpec, 3> grids;
    Region region;
    std::array<ResidualReport, 3> reports;
    std::vector<ConvergenceRow> rows;

    [[nodiscard]] bool all_pass() const {
        for (const ConvergenceRow& r : rows)
            if (!r.pass) return false;
        return !rows.empty();
    }
};

namespace detail {

inline void validate_nested(const std::array<GridSpec, 3>& grids) {
    for (const GridSpec& g : grids) g.validate();
    for (int level = 1; level < 3; ++level) {
        const GridSpec& c = grids[level - 1];
        const GridSpec& f = grids[level];
        const bool same_box =
            c.t_min == f.t_min && c.t_max == f.t_max && c.x_half == f.x_half;
        if (!same_box || f.n_t != 2 * c.n_t - 1 || f.n_x != 2 * c.n_x - 1)
            throw BadParam("convergence_study: grids must be nested halvings of one box");
    }
}

}  // namespace detail

/// Runs one residual check on three nested grids and reports per-equation
/// Richardson ratios over the shared physical region: the coarse grid's
/// two-spacing interior, minus an axis tube when the coarse level flags
/// axis nodes (their influence region must not shrink with h).  A row
/// passes when both ratios land in the second-order band or every level is
/// an exact lattice zero.
[[nodiscard]] inline ConvergenceStudy convergence_study(
    ResidualCheck check, const std::function<GaugeConfig(const GridSpec&)>& make,
    const std::array<GridSpec, 3>& grids, int degree_m = 0, double axis_exclusion = -1.0) {
    detail::validate_nested(grids);

    ConvergenceStudy study;
    study.grids = grids;
    study.region = interior_region(grids[0]);

    for (int level = 0; level < 3; ++level) {
        const GridSpec& g = grids[level];
        const GaugeConfig cfg = make(g);
        ResidualFields fields;
        std::vector<std::uint8_t> flagged;
        if (check_uses_decomposition(check)) {
            const Decomposition d = decompose(cfg);
            flagged = d.flagged;
            fields = residual_fields(check, d, degree_m);
        } else {
            fields = residual_fields(check, cfg, degree_m);
        }

        if (level == 0) {
            // Freeze the region from coarse-level data.
            bool flagged_axis = false;
            for (std::size_t b = 0; b < flagged.size(); ++b) flagged_axis |= (flagged[b] != 0);
            if (axis_exclusion >= 0.0) {
                study.region.axis_radius = axis_exclusion;
            } else if (flagged_axis) {
                // Wide enough to swallow the coarse level's own flag
                // dilation (Chebyshev radius 2 reaches 2*sqrt(2) spacings
                // at the corners), so every level masks the same region.
                study.region.axis_radius = 3.0 * grids[0].h_x();
            }
        }

        auto mask = region_mask(g, study.region);
        if (!flagged.empty()) exclude_dilated(mask, g, flagged);
        study.reports[level] = summarize(g, fields, mask);
    }

    for (std::size_t e = 0; e < study.reports[0].entries.size(); ++e) {
        ConvergenceRow row;
        row.equation = study.reports[0].entries[e].equation;
        for (int level = 0; level < 3; ++level)
            row.max_abs[level] = study.reports[level].entries[e].max_abs;
        row.exact = row.max_abs[0] <= kExactFloor && row.max_abs[1] <= kExactFloor &&
                    row.max_abs[2] <= kExactFloor;
        if (row.exact) {
            row.ratio = {0.0, 0.0};
            row.pass = true;
        } else {
            row.ratio[0] = row.max_abs[0] / std::max(row.max_abs[1], kExactFloor * 1e-6);
            row.ratio[1] = row.max_abs[1] / std::max(row.max_abs[2], kExactFloor * 1e-6);
            row.pass = row.ratio[0] >= kRatioLow && row.ratio[0] <= kRatioHigh &&
                       row.ratio[1] >= kRatioLow && row.ratio[1] <= kRatioHigh;
        }
        study.rows.push_back(std::move(row));
    }
    return study;
}

/// Family-sampler convenience overload.
[[nodiscard]] inline ConvergenceStudy convergence_study(ResidualCheck check,
                                                        const FamilySampler& family,
                                                        const std::array<GridSpec, 3>& grids,
                                                        int degree_m = 0,
                                                        double axis_exclusion = -1.0) {
    return convergence_study(
        check, [&family](const GridSpec& g) { return sample_family(family, g); }, grids,
        degree_m, axis_exclusion);
}

// ---- CSV emission --------------------------------------------------------------

/// One report as CSV rows: equation,grid_h,max_abs,l2,excluded,ratio_vs_previous.
inline void write_report_csv(std::ostream& os, const ResidualReport& report,
                             bool header = true) {
    if (header) os << "equation,grid_h,max_abs,l2,excluded,ratio_vs_previous\n";
    char line[256];
    for (const ResidualEntry& e : report.entries) {
        std::snprintf(line, sizeof line, "%s,%.17g,%.17g,%.17g,%zu,\n", e.equation.c_str(),
                      report.grid.h_x(), e.max_abs, e.l2, e.excluded);
        os << line;
    }
}

/// A refinement study as CSV: one row per (equation, level) with the ratio
/// against the previous level filled in from the second level on.
inline void write_convergence_csv(std::ostream& os, const ConvergenceStudy& study) {
    os << "equation,grid_h,max_abs,l2,excluded,ratio_vs_previous\n";
    char line[256];
    for (std::size_t e = 0; e < study.rows.size(); ++e) {
        for (int level = 0; level < 3; ++level) {
            const ResidualEntry& entry = study.reports[level].entries[e];
            if (level == 0) {
                std::snprintf(line, sizeof line, "%s,%.17g,%.17g,%.17g,%zu,\n",
                              entry.equation.c_str(), study.grids[level].h_x(), entry.max_abs,
                              entry.l2, entry.excluded);
            } else {
                std::snprintf(line, sizeof line, "%s,%.17g,%.17g,%.17g,%zu,%.17g\n",
                              entry.equation.c_str(), study.grids[level].h_x(), entry.max_abs,
                              entry.l2, entry.excluded, study.rows[e].ratio[level - 1]);
            }
            os << line;
        }
    }
}

/// A flux curve as CSV rows: R,f,Rf.
inline void write_flux_csv(std::ostream& os, const FluxCurve& curve) {
    os << "R,flux,R_times_flux\n";
    char line[160];
    for (const auto& [r, f] : curve.points) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", r, f, r * f);
        os << line;
    }
}

}  // namespace su2lab
