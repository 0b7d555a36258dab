#pragma once

/// Grid representation of gauge pairs on truncated (t, x1, x2) boxes and the
/// finite-difference calculus on them: covariant derivatives, curvature,
/// gauge transformations, the unit-frame decomposition of a configuration,
/// and winding numbers of the transverse Higgs pair.
///
/// All derivatives are second-order accurate: central stencils in the
/// interior and one-sided three-point stencils on box faces, so refinement
/// studies produce clean factor-four residual ratios.  The t axis is the
/// slow storage axis, keeping per-t-slice operations contiguous.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "su2lab/algebra.hpp"
#include "su2lab/models.hpp"

namespace su2lab {

/// Thrown when a grid is too small for the requested stencil or violates
/// the minimum point-count invariant.
struct GridTooSmall : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown by the decomposition when the transverse Higgs pair is below the
/// zero tolerance on every node, so no frame direction can be formed.
struct PhiZeroEverywhere : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown by the winding computation when the interpolated field is too
/// close to zero on the sampling circle (or its phase fails to settle on an
/// integer, which on smooth data has the same cause).
struct ZeroOnCircle : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Derivative directions on the half-space box.
enum class Axis { t = 0, x1 = 1, x2 = 2 };

/// A uniform box [t_min, t_max] x [-x_half, x_half]^2 with n_t points along
/// t and n_x along each transverse axis.
struct GridSpec {
    double t_min = 0.2;
    double t_max = 5.0;
    double x_half = 10.0;
    int n_t = 9;
    int n_x = 9;

    void validate() const {
        if (!(t_min > 0.0) || !(t_max > t_min) || !(x_half > 0.0))
            throw GridTooSmall("GridSpec: need 0 < t_min < t_max and x_half > 0");
        if (n_t < 8 || n_x < 8)
            throw GridTooSmall("GridSpec: need at least 8 points per axis");
    }

    [[nodiscard]] double h_t() const { return (t_max - t_min) / (n_t - 1); }
    [[nodiscard]] double h_x() const { return 2.0 * x_half / (n_x - 1); }
    [[nodiscard]] double t(int i) const { return t_min + i * h_t(); }
    [[nodiscard]] double x1(int j) const { return -x_half + j * h_x(); }
    [[nodiscard]] double x2(int k) const { return -x_half + k * h_x(); }
    [[nodiscard]] std::size_t size() const {
        return static_cast<std::size_t>(n_t) * n_x * n_x;
    }
    [[nodiscard]] std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * n_x + j) * n_x + k;
    }
    [[nodiscard]] PointTZ point(int i, int j, int k) const {
        return PointTZ{t(i), {x1(j), x2(k)}};
    }
    [[nodiscard]] double spacing(Axis dir) const { return dir == Axis::t ? h_t() : h_x(); }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Node-wise storage of a configuration: three connection components and
/// three Higgs components, all independent of the suppressed third spatial
/// coordinate.
struct GaugeConfig {
    GridSpec grid;
    std::vector<LieElement> A_t, A_1, A_2;
    std::vector<LieElement> a_1, a_2, a_3;
};

/// Unit-frame decomposition of a configuration: the frame direction sigma,
/// the frame component alpha of the axial Higgs field, the off-frame parts
/// beta (axial) and b_hat (connection) in the +i eigenspace of the frame,
/// the transverse Higgs pair packed as phi, the frame-preserving connection
/// Ahat, and the raw frame potential b with A = Ahat + b node-wise.
///
/// Nodes where |phi| fell below tolerance carry a filled-in sigma and are
/// flagged; consumers exclude them from residual statistics.
struct Decomposition {
    GridSpec grid;
    std::vector<LieElement> sigma;
    std::vector<double> alpha;
    std::vector<CLieElement> beta, b_hat, phi;
    std::vector<LieElement> Ahat_t, Ahat_1, Ahat_2;
    std::vector<LieElement> b_t, b_1, b_2;
    std::vector<std::uint8_t> flagged;

    [[nodiscard]] std::size_t flagged_count() const {
        return static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), 1));
    }
};

/// Winding of the transverse Higgs pair around a circle at fixed t.
struct Winding {
    int degree = 0;
    double radius = 0.0;
};

namespace detail {

/// Tolerance below which the transverse Higgs pair counts as zero; fields
/// scale like 1/t, hence the division by the smallest t on the grid.
[[nodiscard]] inline double phi_zero_tolerance(const GridSpec& g) { return 1.0e-8 / g.t_min; }

/// 3x3 rotation matrices acting on basis coefficients.
using Mat3 = std::array<double, 9>;

[[nodiscard]] inline Mat3 mat_mul(const Mat3& a, const Mat3& b) {
    Mat3 c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            c[3 * i + j] = a[3 * i] * b[j] + a[3 * i + 1] * b[3 + j] + a[3 * i + 2] * b[6 + j];
    return c;
}

[[nodiscard]] inline LieElement mat_apply(const Mat3& r, const LieElement& v) {
    return LieElement{r[0] * v.c1 + r[1] * v.c2 + r[2] * v.c3,
                      r[3] * v.c1 + r[4] * v.c2 + r[5] * v.c3,
                      r[6] * v.c1 + r[7] * v.c2 + r[8] * v.c3};
}

[[nodiscard]] inline CLieElement mat_apply(const Mat3& r, const CLieElement& v) {
    return CLieElement{r[0] * v.c1 + r[1] * v.c2 + r[2] * v.c3,
                       r[3] * v.c1 + r[4] * v.c2 + r[5] * v.c3,
                       r[6] * v.c1 + r[7] * v.c2 + r[8] * v.c3};
}

/// Rodrigues rotation about a unit axis.
[[nodiscard]] inline Mat3 rotation_about(const LieElement& axis, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double k = 1.0 - c;
    const double nx = axis.c1, ny = axis.c2, nz = axis.c3;
    return Mat3{c + nx * nx * k,      nx * ny * k - nz * s, nx * nz * k + ny * s,
                ny * nx * k + nz * s, c + ny * ny * k,      ny * nz * k - nx * s,
                nz * nx * k - ny * s, nz * ny * k + nx * s, c + nz * nz * k};
}

/// Adjoint rotation generated by a Lie element: axis along the element,
/// angle -2 |g| (the bracket doubles and flips the underlying cross
/// product).  The zero element maps to the identity.
[[nodiscard]] inline Mat3 adjoint_rotation(const LieElement& g) {
    const double mag = norm(g);
    if (mag == 0.0) return Mat3{1, 0, 0, 0, 1, 0, 0, 0, 1};
    return rotation_about((1.0 / mag) * g, -2.0 * mag);
}

struct AxisGeometry {
    std::size_t stride;
    int extent;
    double h;
};

[[nodiscard]] inline AxisGeometry axis_geometry(const GridSpec& g, Axis dir) {
    switch (dir) {
        case Axis::t:
            return {static_cast<std::size_t>(g.n_x) * g.n_x, g.n_t, g.h_t()};
        case Axis::x1:
            return {static_cast<std::size_t>(g.n_x), g.n_x, g.h_x()};
        default:
            return {1, g.n_x, g.h_x()};
    }
}

}  // namespace detail

/// Second-order partial derivative of a node-wise field along one axis:
/// central differences in the interior, one-sided three-point stencils on
/// the two faces.  Works for any element type with vector arithmetic
/// (scalars, complex scalars, Lie elements).
template <class Elem>
[[nodiscard]] std::vector<Elem> partial_derivative(const GridSpec& g,
                                                   const std::vector<Elem>& field, Axis dir) {
    g.validate();
    if (field.size() != g.size())
        throw GridTooSmall("partial_derivative: field does not match the grid");
    const auto [stride, extent, h] = detail::axis_geometry(g, dir);
    if (extent < 3) throw GridTooSmall("partial_derivative: need at least 3 nodes along axis");

    std::vector<Elem> out(field.size());
    const double inv2h = 1.0 / (2.0 * h);
    for (int i = 0; i < g.n_t; ++i) {
        for (int j = 0; j < g.n_x; ++j) {
            for (int k = 0; k < g.n_x; ++k) {
                const std::size_t n = g.index(i, j, k);
                const int pos = (dir == Axis::t) ? i : (dir == Axis::x1 ? j : k);
                if (pos == 0) {
                    out[n] = inv2h * (4.0 * field[n + stride] - 3.0 * field[n] -
                                      field[n + 2 * stride]);
                } else if (pos == extent - 1) {
                    out[n] = inv2h * (3.0 * field[n] - 4.0 * field[n - stride] +
                                      field[n - 2 * stride]);
                } else {
                    out[n] = inv2h * (field[n + stride] - field[n - stride]);
                }
            }
        }
    }
    return out;
}

/// Second-order-accurate second partial derivative along one axis: the
/// standard three-point stencil in the interior and a one-sided four-point
/// stencil on the two faces.
template <class Elem>
[[nodiscard]] std::vector<Elem> second_partial_derivative(const GridSpec& g,
                                                          const std::vector<Elem>& field,
                                                          Axis dir) {
    g.validate();
    if (field.size() != g.size())
        throw GridTooSmall("second_partial_derivative: field does not match the grid");
    const auto [stride, extent, h] = detail::axis_geometry(g, dir);
    if (extent < 4)
        throw GridTooSmall("second_partial_derivative: need at least 4 nodes along axis");

    std::vector<Elem> out(field.size());
    const double inv_h2 = 1.0 / (h * h);
    for (int i = 0; i < g.n_t; ++i) {
        for (int j = 0; j < g.n_x; ++j) {
            for (int k = 0; k < g.n_x; ++k) {
                const std::size_t n = g.index(i, j, k);
                const int pos = (dir == Axis::t) ? i : (dir == Axis::x1 ? j : k);
                if (pos == 0) {
                    out[n] = inv_h2 * (2.0 * field[n] - 5.0 * field[n + stride] +
                                       4.0 * field[n + 2 * stride] - field[n + 3 * stride]);
                } else if (pos == extent - 1) {
                    out[n] = inv_h2 * (2.0 * field[n] - 5.0 * field[n - stride] +
                                       4.0 * field[n - 2 * stride] - field[n - 3 * stride]);
                } else {
                    out[n] = inv_h2 * (field[n + stride] - 2.0 * field[n] + field[n - stride]);
                }
            }
        }
    }
    return out;
}

/// Covariant derivative along one axis with an explicitly supplied
/// connection component for that axis.
template <class Elem>
[[nodiscard]] std::vector<Elem> covariant_derivative(const GridSpec& g,
                                                     const std::vector<LieElement>& conn_dir,
                                                     const std::vector<Elem>& field, Axis dir) {
    std::vector<Elem> out = partial_derivative(g, field, dir);
    if (conn_dir.size() != g.size())
        throw GridTooSmall("covariant_derivative: connection does not match the grid");
    for (std::size_t n = 0; n < out.size(); ++n) {
        out[n] += bracket(Elem(conn_dir[n]), field[n]);
    }
    return out;
}

/// Covariant derivative using the connection of a configuration.
template <class Elem>
[[nodiscard]] std::vector<Elem> covariant_derivative(const GaugeConfig& cfg,
                                                     const std::vector<Elem>& field, Axis dir) {
    const std::vector<LieElement>& conn =
        dir == Axis::t ? cfg.A_t : (dir == Axis::x1 ? cfg.A_1 : cfg.A_2);
    return covariant_derivative(cfg.grid, conn, field, dir);
}

/// The three curvature grids of a configuration.
struct CurvatureGrids {
    std::vector<LieElement> E_1, E_2, B_3;
};

/// Electric and magnetic curvature components of the stored connection:
/// E_i = d_t A_i - d_i A_t + [A_t, A_i] and B_3 = d_1 A_2 - d_2 A_1 +
/// [A_1, A_2].
[[nodiscard]] inline CurvatureGrids curvature(const GaugeConfig& cfg) {
    const auto dt_A1 = partial_derivative(cfg.grid, cfg.A_1, Axis::t);
    const auto dt_A2 = partial_derivative(cfg.grid, cfg.A_2, Axis::t);
    const auto d1_At = partial_derivative(cfg.grid, cfg.A_t, Axis::x1);
    const auto d2_At = partial_derivative(cfg.grid, cfg.A_t, Axis::x2);
    const auto d1_A2 = partial_derivative(cfg.grid, cfg.A_2, Axis::x1);
    const auto d2_A1 = partial_derivative(cfg.grid, cfg.A_1, Axis::x2);

    CurvatureGrids out;
    const std::size_t n = cfg.grid.size();
    out.E_1.resize(n);
    out.E_2.resize(n);
    out.B_3.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.E_1[i] = dt_A1[i] - d1_At[i] + bracket(cfg.A_t[i], cfg.A_1[i]);
        out.E_2[i] = dt_A2[i] - d2_At[i] + bracket(cfg.A_t[i], cfg.A_2[i]);
        out.B_3[i] = d1_A2[i] - d2_A1[i] + bracket(cfg.A_1[i], cfg.A_2[i]);
    }
    return out;
}

/// Point-wise sampler for a closed-form family.
using FamilySampler = std::function<FieldSample(const PointTZ&)>;

/// Samples a closed-form family node-wise onto a grid.
[[nodiscard]] inline GaugeConfig sample_family(const FamilySampler& family, const GridSpec& grid) {
    grid.validate();
    GaugeConfig cfg;
    cfg.grid = grid;
    const std::size_t n = grid.size();
    cfg.A_t.resize(n);
    cfg.A_1.resize(n);
    cfg.A_2.resize(n);
    cfg.a_1.resize(n);
    cfg.a_2.resize(n);
    cfg.a_3.resize(n);
    for (int i = 0; i < grid.n_t; ++i) {
        for (int j = 0; j < grid.n_x; ++j) {
            for (int k = 0; k < grid.n_x; ++k) {
                const FieldSample s = family(grid.point(i, j, k));
                const std::size_t idx = grid.index(i, j, k);
                cfg.A_t[idx] = s.A_t;
                cfg.A_1[idx] = s.A_1;
                cfg.A_2[idx] = s.A_2;
                cfg.a_1[idx] = s.a_1;
                cfg.a_2[idx] = s.a_2;
                cfg.a_3[idx] = s.a_3;
            }
        }
    }
    return cfg;
}

/// Applies the gauge action generated node-wise by a Lie-valued grid: Higgs
/// components rotate by the adjoint of exp(generator) (the push-forward
/// convention), the connection additionally picks up the inhomogeneous term
/// computed from finite differences of the rotation itself.
[[nodiscard]] inline GaugeConfig gauge_transform(const GaugeConfig& cfg,
                                                 const std::vector<LieElement>& generator) {
    const GridSpec& g = cfg.grid;
    g.validate();
    if (generator.size() != g.size())
        throw GridTooSmall("gauge_transform: generator does not match the grid");

    const std::size_t n = g.size();
    std::vector<detail::Mat3> rot(n);
    for (std::size_t i = 0; i < n; ++i) rot[i] = detail::adjoint_rotation(generator[i]);

    // Entry-wise derivatives of the rotation field reuse the scalar stencils.
    std::array<std::vector<double>, 9> entries;
    for (int e = 0; e < 9; ++e) {
        entries[e].resize(n);
        for (std::size_t i = 0; i < n; ++i) entries[e][i] = rot[i][e];
    }
    std::array<std::array<std::vector<double>, 9>, 3> d_entries;
    for (int dir = 0; dir < 3; ++dir)
        for (int e = 0; e < 9; ++e)
            d_entries[dir][e] = partial_derivative(g, entries[e], static_cast<Axis>(dir));

    GaugeConfig out;
    out.grid = g;
    out.A_t.resize(n);
    out.A_1.resize(n);
    out.A_2.resize(n);
    out.a_1.resize(n);
    out.a_2.resize(n);
    out.a_3.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        const detail::Mat3& r = rot[i];
        out.a_1[i] = detail::mat_apply(r, cfg.a_1[i]);
        out.a_2[i] = detail::mat_apply(r, cfg.a_2[i]);
        out.a_3[i] = detail::mat_apply(r, cfg.a_3[i]);

        const std::vector<LieElement>* conns[3] = {&cfg.A_t, &cfg.A_1, &cfg.A_2};
        std::vector<LieElement>* outs[3] = {&out.A_t, &out.A_1, &out.A_2};
        for (int dir = 0; dir < 3; ++dir) {
            // M = (dR) R^T is antisymmetric up to stencil error; the
            // generator of that infinitesimal rotation has coefficients
            // lambda = (M_23, M_31, M_12)/(-2) matching the bracket's -2
            // cross-product normalization.
            detail::Mat3 dr{};
            for (int e = 0; e < 9; ++e) dr[e] = d_entries[dir][e][i];
            detail::Mat3 rt{r[0], r[3], r[6], r[1], r[4], r[7], r[2], r[5], r[8]};
            const detail::Mat3 m = detail::mat_mul(dr, rt);
            const double m12 = 0.5 * (m[1] - m[3]);
            const double m23 = 0.5 * (m[5] - m[7]);
            const double m31 = 0.5 * (m[6] - m[2]);
            const LieElement lambda{-0.5 * m23, -0.5 * m31, -0.5 * m12};
            (*outs[dir])[i] = detail::mat_apply(r, (*conns[dir])[i]) - lambda;
        }
    }
    return out;
}

/// Frame decomposition of a configuration.  The frame direction is the
/// normalized bracket i/(2|phi|^2) [phi, phi*]; nodes where |phi| is below
/// tolerance get sigma filled from the average of the four nearest clean
/// nodes and are flagged.  The raw frame potential b = (1/4)[sigma,
/// cov-deriv of sigma] is stored so that Ahat + b reproduces the connection
/// exactly, and the reported b_hat is the +i eigenspace part of
/// (b_1 + i b_2)/2.
[[nodiscard]] inline Decomposition decompose(const GaugeConfig& cfg) {
    const GridSpec& g = cfg.grid;
    g.validate();
    const std::size_t n = g.size();
    const double tol = detail::phi_zero_tolerance(g);
    const complexd i_unit{0.0, 1.0};

    Decomposition d;
    d.grid = g;
    d.sigma.resize(n);
    d.alpha.resize(n);
    d.beta.resize(n);
    d.b_hat.resize(n);
    d.phi.resize(n);
    d.flagged.assign(n, 0);

    std::vector<CLieElement> phi_raw(n);
    for (std::size_t i = 0; i < n; ++i)
        phi_raw[i] = CLieElement(cfg.a_1[i]) - i_unit * CLieElement(cfg.a_2[i]);

    // Frame direction where the transverse pair is clean.
    std::size_t clean = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double mag2 = norm_sq(phi_raw[i]);
        if (mag2 < tol * tol) {
            d.flagged[i] = 1;
            continue;
        }
        const LieElement s =
            real_part((i_unit / (2.0 * mag2)) * bracket(phi_raw[i], star(phi_raw[i])));
        const double mag = norm(s);
        d.sigma[i] = (1.0 / mag) * s;
        ++clean;
    }
    if (clean == 0) throw PhiZeroEverywhere("decompose: |phi| below tolerance on every node");

    // Fill flagged nodes from the nearest clean neighbours (average of up to
    // four, renormalized), searched over growing cubical shells.
    if (clean < n) {
        for (int i = 0; i < g.n_t; ++i) {
            for (int j = 0; j < g.n_x; ++j) {
                for (int k = 0; k < g.n_x; ++k) {
                    const std::size_t at = g.index(i, j, k);
                    if (!d.flagged[at]) continue;
                    std::vector<std::pair<long, std::size_t>> found;
                    const int reach = std::max(g.n_t, g.n_x);
                    for (int r = 1; r <= reach && found.size() < 4; ++r) {
                        for (int di = -r; di <= r; ++di) {
                            for (int dj = -r; dj <= r; ++dj) {
                                for (int dk = -r; dk <= r; ++dk) {
                                    if (std::max({std::abs(di), std::abs(dj), std::abs(dk)}) != r)
                                        continue;
                                    const int ii = i + di, jj = j + dj, kk = k + dk;
                                    if (ii < 0 || ii >= g.n_t || jj < 0 || jj >= g.n_x ||
                                        kk < 0 || kk >= g.n_x)
                                        continue;
                                    const std::size_t nb = g.index(ii, jj, kk);
                                    if (d.flagged[nb]) continue;
                                    found.emplace_back(
                                        static_cast<long>(di) * di + static_cast<long>(dj) * dj +
                                            static_cast<long>(dk) * dk,
                                        nb);
                                }
                            }
                        }
                    }
                    std::sort(found.begin(), found.end());
                    LieElement acc{};
                    const std::size_t take = std::min<std::size_t>(4, found.size());
                    for (std::size_t q = 0; q < take; ++q) acc += d.sigma[found[q].second];
                    const double mag = norm(acc);
                    d.sigma[at] = (mag > 0.0) ? (1.0 / mag) * acc : sigma3();
                }
            }
        }
    }

    // Frame potential from the covariant derivative of the frame direction.
    const auto ds_t = covariant_derivative(cfg, d.sigma, Axis::t);
    const auto ds_1 = covariant_derivative(cfg, d.sigma, Axis::x1);
    const auto ds_2 = covariant_derivative(cfg, d.sigma, Axis::x2);
    d.b_t.resize(n);
    d.b_1.resize(n);
    d.b_2.resize(n);
    d.Ahat_t.resize(n);
    d.Ahat_1.resize(n);
    d.Ahat_2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        d.b_t[i] = 0.25 * bracket(d.sigma[i], ds_t[i]);
        d.b_1[i] = 0.25 * bracket(d.sigma[i], ds_1[i]);
        d.b_2[i] = 0.25 * bracket(d.sigma[i], ds_2[i]);
        d.Ahat_t[i] = cfg.A_t[i] - d.b_t[i];
        d.Ahat_1[i] = cfg.A_1[i] - d.b_1[i];
        d.Ahat_2[i] = cfg.A_2[i] - d.b_2[i];

        d.alpha[i] = inner(d.sigma[i], cfg.a_3[i]);
        d.beta[i] = eigen_split(d.sigma[i], CLieElement(cfg.a_3[i])).p_plus;
        d.b_hat[i] =
            eigen_split(d.sigma[i],
                        0.5 * (CLieElement(d.b_1[i]) + i_unit * CLieElement(d.b_2[i])))
                .p_plus;
        d.phi[i] = eigen_split(d.sigma[i], phi_raw[i]).p_plus;
    }
    return d;
}

/// Reassembles the configuration a decomposition came from: the axial Higgs
/// field from its frame components, the transverse pair from phi, and the
/// connection as Ahat plus the stored raw frame potential.
[[nodiscard]] inline GaugeConfig recompose(const Decomposition& d) {
    const std::size_t n = d.grid.size();
    GaugeConfig cfg;
    cfg.grid = d.grid;
    cfg.A_t.resize(n);
    cfg.A_1.resize(n);
    cfg.A_2.resize(n);
    cfg.a_1.resize(n);
    cfg.a_2.resize(n);
    cfg.a_3.resize(n);
    const complexd i_unit{0.0, 1.0};
    for (std::size_t i = 0; i < n; ++i) {
        cfg.a_3[i] = d.alpha[i] * d.sigma[i] + real_part(d.beta[i] + star(d.beta[i]));
        cfg.a_1[i] = real_part(0.5 * (d.phi[i] + star(d.phi[i])));
        cfg.a_2[i] = real_part(0.5 * i_unit * (d.phi[i] - star(d.phi[i])));
        cfg.A_t[i] = d.Ahat_t[i] + d.b_t[i];
        cfg.A_1[i] = d.Ahat_1[i] + d.b_1[i];
        cfg.A_2[i] = d.Ahat_2[i] + d.b_2[i];
    }
    return cfg;
}

/// Winding of the transverse Higgs pair around the circle |z| = radius on
/// one t-slice, from the accumulated phase of its fixed-frame complex
/// coefficient, bilinearly interpolated and unwrapped over at least 64
/// samples.  The slice is indexed like the full grid at fixed t.
[[nodiscard]] inline Winding vanishing_degree(const GridSpec& grid,
                                              const std::vector<CLieElement>& phi_slice,
                                              double radius, int samples = 256) {
    grid.validate();
    if (phi_slice.size() != static_cast<std::size_t>(grid.n_x) * grid.n_x)
        throw GridTooSmall("vanishing_degree: slice does not match the grid");
    if (!(radius > 0.0) || radius >= grid.x_half)
        throw BadParam("vanishing_degree: radius must lie inside the box");
    samples = std::max(samples, 64);

    const double h = grid.h_x();
    const double tol = detail::phi_zero_tolerance(grid);
    const CLieElement probe = star(plus_generator());

    auto coefficient_at = [&](double px, double py) {
        const double u = (px + grid.x_half) / h;
        const double v = (py + grid.x_half) / h;
        const int j = std::min(grid.n_x - 2, std::max(0, static_cast<int>(std::floor(u))));
        const int k = std::min(grid.n_x - 2, std::max(0, static_cast<int>(std::floor(v))));
        const double fu = u - j;
        const double fv = v - k;
        auto val = [&](int jj, int kk) {
            return inner(phi_slice[static_cast<std::size_t>(jj) * grid.n_x + kk], probe);
        };
        return (1 - fu) * (1 - fv) * val(j, k) + fu * (1 - fv) * val(j + 1, k) +
               (1 - fu) * fv * val(j, k + 1) + fu * fv * val(j + 1, k + 1);
    };

    const double two_pi = 2.0 * std::acos(-1.0);
    std::vector<complexd> ring(samples);
    for (int s = 0; s < samples; ++s) {
        const double ang = two_pi * s / samples;
        ring[s] = coefficient_at(radius * std::cos(ang), radius * std::sin(ang));
        if (std::abs(ring[s]) < tol)
            throw ZeroOnCircle("vanishing_degree: field too small on the sampling circle");
    }
    double total = 0.0;
    for (int s = 0; s < samples; ++s) {
        total += std::arg(ring[(s + 1) % samples] / ring[s]);
    }
    const double turns = total / two_pi;
    const double rounded = std::round(turns);
    if (std::abs(turns - rounded) > 0.25)
        throw ZeroOnCircle("vanishing_degree: accumulated phase did not settle on an integer");
    return Winding{static_cast<int>(rounded), radius};
}

/// Convenience overload taking a configuration and a t index.
[[nodiscard]] inline Winding vanishing_degree(const GaugeConfig& cfg, int t_index, double radius,
                                              int samples = 256) {
    const GridSpec& g = cfg.grid;
    if (t_index < 0 || t_index >= g.n_t) throw BadParam("vanishing_degree: t index out of range");
    const complexd i_unit{0.0, 1.0};
    std::vector<CLieElement> slice(static_cast<std::size_t>(g.n_x) * g.n_x);
    for (int j = 0; j < g.n_x; ++j) {
        for (int k = 0; k < g.n_x; ++k) {
            const std::size_t idx = g.index(t_index, j, k);
            slice[static_cast<std::size_t>(j) * g.n_x + k] =
                CLieElement(cfg.a_1[idx]) - i_unit * CLieElement(cfg.a_2[idx]);
        }
    }
    return vanishing_degree(g, slice, radius, samples);
}

/// Parameters of the synthetic decomposition generator: band-limited random
/// fields with a reproducible seed.
struct SyntheticSpec {
    std::uint64_t seed = 1;
    int modes = 3;
    double max_frequency = 1.5;
};

namespace detail {

/// A real band-limited field: a short sum of cosines with random
/// frequencies, phases and amplitudes.  Exact closed-form gradient, so
/// nested grids sample one smooth continuum field.
struct TrigPoly {
    struct Term {
        double amp, w_t, w_1, w_2, phase;
    };
    std::vector<Term> terms;
    double offset = 0.0;

    [[nodiscard]] double value(double t, double x1, double x2) const {
        double acc = offset;
        for (const Term& q : terms)
            acc += q.amp * std::cos(q.w_t * t + q.w_1 * x1 + q.w_2 * x2 + q.phase);
        return acc;
    }
    [[nodiscard]] double d(int dir, double t, double x1, double x2) const {
        double acc = 0.0;
        for (const Term& q : terms) {
            const double w = dir == 0 ? q.w_t : (dir == 1 ? q.w_1 : q.w_2);
            acc -= q.amp * w * std::sin(q.w_t * t + q.w_1 * x1 + q.w_2 * x2 + q.phase);
        }
        return acc;
    }
};

[[nodiscard]] inline TrigPoly random_trig_poly(std::mt19937_64& rng, int modes, double max_freq,
                                               double amp, double offset = 0.0) {
    std::uniform_real_distribution<double> freq(-max_freq, max_freq);
    std::uniform_real_distribution<double> amplitude(-amp, amp);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::acos(-1.0));
    TrigPoly p;
    p.offset = offset;
    p.terms.resize(modes);
    for (auto& q : p.terms) q = {amplitude(rng), freq(rng), freq(rng), freq(rng), phase(rng)};
    return p;
}

[[nodiscard]] inline LieElement random_unit_axis(std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    LieElement v{gauss(rng), gauss(rng), gauss(rng)};
    const double mag = norm(v);
    return (mag > 1e-12) ? (1.0 / mag) * v : sigma3();
}

}  // namespace detail

/// Builds a random synthetic decomposition from closed-form band-limited
/// fields: a frame direction obtained by two position-dependent rotations
/// about fixed random axes, a frame-preserving connection assembled with the
/// exact inhomogeneous term of those rotations, and off-frame data (phi,
/// beta, b_hat) carried along the rotated frame.  The transverse pair's
/// magnitude is bounded away from zero, so no node is flagged.  The raw
/// frame potential is derived from b_hat and beta in the solution form, so
/// the assembled configuration lies in the class on which the curvature
/// splitting identities hold.
[[nodiscard]] inline Decomposition synthetic_decomposition(const GridSpec& grid,
                                                           const SyntheticSpec& spec) {
    grid.validate();
    std::mt19937_64 rng(spec.seed);
    const int kM = spec.modes;
    const double kF = spec.max_frequency;

    const LieElement axis1 = detail::random_unit_axis(rng);
    const LieElement axis2 = detail::random_unit_axis(rng);
    const auto gamma1 = detail::random_trig_poly(rng, kM, kF, 0.4);
    const auto gamma2 = detail::random_trig_poly(rng, kM, kF, 0.4);
    const auto alpha_field = detail::random_trig_poly(rng, kM, kF, 0.5);
    const auto conn_t = detail::random_trig_poly(rng, kM, kF, 0.3);
    const auto conn_1 = detail::random_trig_poly(rng, kM, kF, 0.3);
    const auto conn_2 = detail::random_trig_poly(rng, kM, kF, 0.3);
    const auto beta_re = detail::random_trig_poly(rng, kM, kF, 0.3);
    const auto beta_im = detail::random_trig_poly(rng, kM, kF, 0.3);
    const auto bhat_re = detail::random_trig_poly(rng, kM, kF, 0.3);
    const auto bhat_im = detail::random_trig_poly(rng, kM, kF, 0.3);
    const auto phi_mag = detail::random_trig_poly(rng, kM, kF, 0.13, 0.8);
    const auto phi_arg = detail::random_trig_poly(rng, kM, kF, 0.8);

    const std::size_t n = grid.size();
    Decomposition d;
    d.grid = grid;
    d.sigma.resize(n);
    d.alpha.resize(n);
    d.beta.resize(n);
    d.b_hat.resize(n);
    d.phi.resize(n);
    d.Ahat_t.resize(n);
    d.Ahat_1.resize(n);
    d.Ahat_2.resize(n);
    d.b_t.resize(n);
    d.b_1.resize(n);
    d.b_2.resize(n);
    d.flagged.assign(n, 0);

    const complexd i_unit{0.0, 1.0};
    for (int i = 0; i < grid.n_t; ++i) {
        for (int j = 0; j < grid.n_x; ++j) {
            for (int k = 0; k < grid.n_x; ++k) {
                const std::size_t at = grid.index(i, j, k);
                const double t = grid.t(i), u1 = grid.x1(j), u2 = grid.x2(k);

                const double g1 = gamma1.value(t, u1, u2);
                const double g2 = gamma2.value(t, u1, u2);
                const detail::Mat3 r1 = detail::rotation_about(axis1, -2.0 * g1);
                const detail::Mat3 r2 = detail::rotation_about(axis2, -2.0 * g2);
                const detail::Mat3 r = detail::mat_mul(r1, r2);

                const LieElement sig = detail::mat_apply(r, sigma3());
                d.sigma[at] = sig;
                d.alpha[at] = alpha_field.value(t, u1, u2);

                // Off-frame directions ride along the rotated frame.
                const CLieElement u_plus = detail::mat_apply(r, plus_generator());
                const complexd c_beta{beta_re.value(t, u1, u2), beta_im.value(t, u1, u2)};
                const complexd c_bhat{bhat_re.value(t, u1, u2), bhat_im.value(t, u1, u2)};
                const complexd c_phi =
                    phi_mag.value(t, u1, u2) *
                    std::exp(i_unit * phi_arg.value(t, u1, u2));
                d.beta[at] = 0.5 * c_beta * u_plus;
                d.b_hat[at] = 0.5 * c_bhat * u_plus;
                d.phi[at] = c_phi * u_plus;

                // Frame-preserving connection: a frame-parallel part plus
                // the exact inhomogeneous compensation for the rotations.
                const std::vector<const detail::TrigPoly*> cpar = {&conn_t, &conn_1, &conn_2};
                LieElement* ahat[3] = {&d.Ahat_t[at], &d.Ahat_1[at], &d.Ahat_2[at]};
                for (int dir = 0; dir < 3; ++dir) {
                    const LieElement lam = gamma1.d(dir, t, u1, u2) * axis1 +
                                           detail::mat_apply(r1, gamma2.d(dir, t, u1, u2) * axis2);
                    *ahat[dir] = cpar[static_cast<std::size_t>(dir)]->value(t, u1, u2) * sig - lam;
                }

                // Raw frame potential in the form the flow equations pick
                // out: transverse parts from b_hat, the t part from beta.
                d.b_1[at] = real_part(d.b_hat[at] + star(d.b_hat[at]));
                d.b_2[at] = real_part(-i_unit * (d.b_hat[at] - star(d.b_hat[at])));
                d.b_t[at] = real_part(-i_unit * (d.beta[at] - star(d.beta[at])));
            }
        }
    }
    return d;
}

/// Writes one Lie-valued grid as CSV: a comment header naming the field and
/// the grid, then rows t,x1,x2,c1,c2,c3.
inline void write_csv(std::ostream& os, const GridSpec& g, const std::vector<LieElement>& field,
                      std::string_view name) {
    os << "# field=" << name << " t_min=" << g.t_min << " t_max=" << g.t_max
       << " x_half=" << g.x_half << " n_t=" << g.n_t << " n_x=" << g.n_x << "\n";
    os << "t,x1,x2,c1,c2,c3\n";
    char line[256];
    for (int i = 0; i < g.n_t; ++i)
        for (int j = 0; j < g.n_x; ++j)
            for (int k = 0; k < g.n_x; ++k) {
                const LieElement& v = field[g.index(i, j, k)];
                std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", g.t(i),
                              g.x1(j), g.x2(k), v.c1, v.c2, v.c3);
                os << line;
            }
}

/// Complex variant with paired re/im columns.
inline void write_csv(std::ostream& os, const GridSpec& g, const std::vector<CLieElement>& field,
                      std::string_view name) {
    os << "# field=" << name << " t_min=" << g.t_min << " t_max=" << g.t_max
       << " x_half=" << g.x_half << " n_t=" << g.n_t << " n_x=" << g.n_x << "\n";
    os << "t,x1,x2,c1_re,c1_im,c2_re,c2_im,c3_re,c3_im\n";
    char line[384];
    for (int i = 0; i < g.n_t; ++i)
        for (int j = 0; j < g.n_x; ++j)
            for (int k = 0; k < g.n_x; ++k) {
                const CLieElement& v = field[g.index(i, j, k)];
                std::snprintf(line, sizeof line,
                              "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", g.t(i),
                              g.x1(j), g.x2(k), v.c1.real(), v.c1.imag(), v.c2.real(), v.c2.imag(),
                              v.c3.real(), v.c3.imag());
                os << line;
            }
}

}  // namespace su2lab
