#pragma once

/// Closed-form solution families on the half-space t > 0 with translation
/// symmetry along x3, together with the scalar profiles derived from them
/// (log-magnitude profile, triple product, disk integrals).
///
/// Every field is reported in Cartesian components so that lattice code can
/// sample it without knowing about the polar coordinate system used in the
/// closed forms.  The polar coordinate pair is
///
///   sinh(theta) = t / |z|,    x = sqrt(t^2 + |z|^2),
///
/// and all evaluation is routed through s = exp(-theta) = |z| / (t + x),
/// which is finite on the whole half-space (s = 0 on the z = 0 axis) and
/// turns every hyperbolic expression into a ratio of polynomials in s that
/// is free of catastrophic cancellation.

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "su2lab/algebra.hpp"

namespace su2lab {

/// Thrown when a family parameter violates its domain (for example an
/// off-center deformation of modulus larger than one).
struct BadParam : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when an adaptive quadrature fails to reach its tolerance within
/// the refinement budget.
struct QuadratureFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parameters of the axisymmetric model family: the vanishing degree of the
/// Higgs field on the symmetry axis.
struct ModelParams {
    int m = 0;
};

/// Parameters of the homogeneous (z-independent) deformation family: a
/// complex constant of modulus at most one.
struct ImposterParams {
    complexd w{0.0, 0.0};
};

/// A point of the open half-space, t > 0, with the two transverse
/// coordinates packed as z = x1 + i x2.
struct PointTZ {
    double t = 1.0;
    complexd z{0.0, 0.0};
};

/// One sample of a configuration: connection components (A_t, A_1, A_2) and
/// Higgs components (a_1, a_2, a_3), all in units of inverse length.  The
/// model families carry no dt component, so A_t is identically zero there.
struct FieldSample {
    LieElement A_t, A_1, A_2;
    LieElement a_1, a_2, a_3;
};

/// Polar data attached to a point: theta (infinite on the z = 0 axis) and
/// the distance x to the corner t = |z| = 0.
struct ThetaX {
    double theta = 0.0;
    double x = 0.0;
};

namespace detail {

/// Geometric partial sum 1 + y + ... + y^m, evaluated by Horner's rule.
/// Returns 0 for m < 0 so that the m = 0 model has a vanishing connection.
[[nodiscard]] inline double geometric_sum(int m, double y) noexcept {
    if (m < 0) return 0.0;
    double acc = 1.0;
    for (int j = 0; j < m; ++j) acc = 1.0 + y * acc;
    return acc;
}

/// Integer power by repeated multiplication (exact scaling behaviour, no
/// transcendental calls).
[[nodiscard]] inline double int_pow(double base, int n) noexcept {
    double acc = 1.0;
    for (int j = 0; j < n; ++j) acc *= base;
    return acc;
}

[[nodiscard]] inline complexd int_pow(complexd base, int n) noexcept {
    complexd acc{1.0, 0.0};
    for (int j = 0; j < n; ++j) acc *= base;
    return acc;
}

/// s = exp(-theta) = |z| / (t + x): the half-space compactification of the
/// polar angle.  Always in [0, 1) for t > 0.
[[nodiscard]] inline double s_of_point(double t, double abs_z, double x) noexcept {
    return abs_z / (t + x);
}

/// Above this value of (m+1)*theta the hyperbolic ratio is evaluated in the
/// exponentially scaled form; below theta = 1e-3 a polynomial recurrence in
/// cosh(theta) is used.  The overlap between branches is tested explicitly.
inline constexpr double kSinhRatioExpThreshold = 30.0;
inline constexpr double kSinhRatioSmallTheta = 1.0e-3;

/// Deficit factor 1 - (m+1)*sinh(2 theta)/sinh(2(m+1) theta) expressed in
/// y = s^2.  Two cancellation-free branches: for small y the subtracted term
/// is itself small; for y near 1 a positive three-term recurrence builds the
/// numerator directly.
[[nodiscard]] inline double curvature_deficit(int m, double y) noexcept {
    if (m == 0) return 0.0;
    if (y == 0.0) return 1.0;
    if (y < 0.5) {
        // 1 - (m+1) y^m / (1 + y^2 + ... + y^{2m}); the ratio is at most
        // (m+1) 2^{-m} < 1 so at most one bit cancels.
        return 1.0 - (m + 1) * int_pow(y, m) / geometric_sum(m, y * y);
    }
    // V_k = sinh(2(k+1)theta)/sinh(2 theta) - (k+1) satisfies a recurrence
    // with non-negative coefficients in d = cosh(2 theta) - 1 = (1-y)^2/(2y),
    // so the tiny deficit near theta = 0 is accumulated without cancellation.
    const double d = (1.0 - y) * (1.0 - y) / (2.0 * y);
    double v_prev = 0.0;      // V_0
    double v = 2.0 * d;       // V_1
    for (int k = 1; k < m; ++k) {
        const double v_next = 2.0 * (1.0 + d) * v - v_prev + 2.0 * (k + 1) * d;
        v_prev = v;
        v = v_next;
    }
    return v / (v + m + 1);
}

}  // namespace detail

/// Polar coordinates of a half-space point: sinh(theta) = t/|z| (theta is
/// the +infinity sentinel on the axis z = 0) and x = sqrt(t^2 + |z|^2).
[[nodiscard]] inline ThetaX theta_x(const PointTZ& p) {
    const double abs_z = std::abs(p.z);
    ThetaX out;
    out.x = std::hypot(p.t, abs_z);
    out.theta = (abs_z == 0.0) ? std::numeric_limits<double>::infinity()
                               : std::asinh(p.t / abs_z);
    return out;
}

/// The normalized hyperbolic ratio (m+1) sinh(theta) / sinh((m+1) theta),
/// extended by its limits: 1 at theta = 0 and 0 at theta = +infinity (for
/// m >= 1).  Values lie in (0, 1]; accurate to about 1e-12 relative over
/// theta in [0, 50].
[[nodiscard]] inline double sinh_ratio(int m, double theta) {
    if (m == 0) return 1.0;
    if (theta == 0.0) return 1.0;
    if (std::isinf(theta)) return 0.0;
    if ((m + 1) * theta > detail::kSinhRatioExpThreshold) {
        // Exponentially scaled: every factor is of moderate size.
        const double em = std::exp(-m * theta);
        const double e2 = std::exp(-2.0 * theta);
        const double e2m = std::exp(-2.0 * (m + 1) * theta);
        return (m + 1) * em * (1.0 - e2) / (1.0 - e2m);
    }
    if (theta < detail::kSinhRatioSmallTheta) {
        // sinh((m+1)theta)/sinh(theta) is a degree-m polynomial in
        // cosh(theta) built by the usual three-term recurrence; all terms
        // are positive and of comparable size near theta = 0.
        const double c2 = 2.0 * std::cosh(theta);
        double u_prev = 1.0;  // degree 0
        double u = c2;        // degree 1
        for (int k = 1; k < m; ++k) {
            const double u_next = c2 * u - u_prev;
            u_prev = u;
            u = u_next;
        }
        return (m + 1) / u;
    }
    return (m + 1) * std::sinh(theta) / std::sinh((m + 1) * theta);
}

/// Sample of the degree-m axisymmetric model at a half-space point.  The
/// Higgs and connection components are assembled from ratios of geometric
/// polynomials in y = s^2, which extend smoothly across the axis z = 0.
[[nodiscard]] inline FieldSample model_fields(const ModelParams& params, const PointTZ& p) {
    const int m = params.m;
    if (m < 0) throw BadParam("model_fields: vanishing degree must be non-negative");
    const double t = p.t;
    const double abs_z = std::abs(p.z);
    const double x = std::hypot(t, abs_z);
    const double s = detail::s_of_point(t, abs_z, x);
    const double y = s * s;
    const double pm = detail::geometric_sum(m, y);
    const double big_s = detail::int_pow(y, m + 1);

    FieldSample out;

    // Higgs transverse pair via phi = a_1 - i a_2 = c_phi (sigma_1 - i sigma_2).
    const complexd zeta = p.z / (t + x);
    const complexd c_phi = -((m + 1) / (2.0 * t)) * detail::int_pow(zeta, m) / pm;
    const double u = c_phi.real();
    const double v = c_phi.imag();
    out.a_1 = u * sigma1() + v * sigma2();
    out.a_2 = -v * sigma1() + u * sigma2();

    // Axial Higgs component; the bracketed factor tends to (m+1) on the axis
    // and to 1 far from it.
    const double qg = (m + 1) * (t + x) * (1.0 + big_s) / (2.0 * x * pm);
    out.a_3 = (-qg / (2.0 * t)) * sigma3();

    // Connection: an angular one-form around the axis whose radial profile
    // involves the geometric sum of one lower degree (so the m = 0 model is
    // exactly flat).
    const double hk = (m + 1) * detail::geometric_sum(m - 1, y) / (2.0 * x * (t + x) * pm);
    out.A_t = LieElement{};
    out.A_1 = (-hk * p.z.imag()) * sigma3();
    out.A_2 = (hk * p.z.real()) * sigma3();
    return out;
}

/// Closed-form curvature of the degree-m model connection: the magnetic
/// component B_3 = F_12 and the electric pair E_i = F_ti.  All three are
/// multiples of sigma_3 and vanish identically for m = 0.
///
/// Returns the triple (B_3, E_1, E_2) through the out-parameters.
inline void model_curvature(const ModelParams& params, const PointTZ& p,
                            LieElement& b_3, LieElement& e_1, LieElement& e_2) {
    const int m = params.m;
    if (m < 0) throw BadParam("model_curvature: vanishing degree must be non-negative");
    const double t = p.t;
    const double abs_z = std::abs(p.z);
    const double x = std::hypot(t, abs_z);
    const double s = detail::s_of_point(t, abs_z, x);
    const double y = s * s;
    const double pm = detail::geometric_sum(m, y);
    const double big_s = detail::int_pow(y, m + 1);
    const double deficit = detail::curvature_deficit(m, y);

    // tanh(theta) coth((m+1) theta) = (t+x)(1+S) / (2x P_m(y)); the extra
    // coth((m+1)theta) in the electric part is (t+x)(1+S) / (2t P_m(y)).
    const double ratio_b = (t + x) * (1.0 + big_s) / (2.0 * x * pm);
    const double ratio_e = (t + x) * (1.0 + big_s) / (2.0 * t * pm);

    const double b_coeff = (m + 1) / (2.0 * x * x) * ratio_b * deficit;
    const double e_coeff = (m + 1) / (2.0 * x * x * x) * ratio_e * deficit;

    b_3 = b_coeff * sigma3();
    e_1 = (e_coeff * p.z.imag()) * sigma3();
    e_2 = (-e_coeff * p.z.real()) * sigma3();
}

/// Homogeneous deformation of the flat pole solution: z-independent fields
/// parametrized by a complex constant w with |w| <= 1.  At w = 0 this is the
/// flat pole itself; at |w| = 1 the Higgs transverse pair vanishes.
[[nodiscard]] inline FieldSample imposter_fields(const ImposterParams& params, double t) {
    const double mod2 = std::norm(params.w);
    if (mod2 > 1.0 + 1.0e-14) throw BadParam("imposter_fields: |w| must be at most 1");
    FieldSample out;
    out.a_3 = (-1.0 / (2.0 * t)) * sigma3();

    // phi = a_1 - i a_2 = c_phi (sigma_1 - i sigma_2) with real c_phi.
    const double c_phi = -std::sqrt(std::max(0.0, 1.0 - mod2)) / (2.0 * t);
    out.a_1 = c_phi * sigma1();
    out.a_2 = c_phi * sigma2();

    // Connection components from b_1 + i b_2 = c_b (sigma_1 - i sigma_2).
    const complexd c_b = -params.w / (2.0 * t);
    const double u = c_b.real();
    const double v = c_b.imag();
    out.A_t = LieElement{};
    out.A_1 = u * sigma1() + v * sigma2();
    out.A_2 = v * sigma1() - u * sigma2();
    return out;
}

/// Abelian family: a_3 = -(r/x) sigma_3 with vanishing transverse Higgs pair
/// and an angular connection that is smooth away from the axis z = 0.
[[nodiscard]] inline FieldSample abelian_fields(double r, const PointTZ& p) {
    if (r <= 0.0) throw BadParam("abelian_fields: r must be positive");
    const double t = p.t;
    const double abs_z = std::abs(p.z);
    const double x = std::hypot(t, abs_z);
    FieldSample out;
    out.a_3 = (-r / x) * sigma3();
    const double k = r / (x * (x + t));
    out.A_t = LieElement{};
    out.A_1 = (-k * p.z.imag()) * sigma3();
    out.A_2 = (k * p.z.real()) * sigma3();
    return out;
}

/// One-parameter pole-like family constant in z: a_3 has a coth profile and
/// the Higgs transverse pair a csch profile in ct/2, both approaching the
/// flat pole as c -> 0 and a constant axial field as t -> infinity.
[[nodiscard]] inline FieldSample c_family_fields(double c, double t) {
    if (c <= 0.0) throw BadParam("c_family_fields: c must be positive");
    const double half = 0.5 * c * t;
    FieldSample out;
    out.a_3 = (-(c / 4.0) / std::tanh(half)) * sigma3();
    // Lie coefficient of phi = f (sigma_1 - i sigma_2); f = (c/4) csch(ct/2)
    // is the normalization under which both the flow equation and the
    // quadratic curvature balance hold exactly.
    const double f = (c / 4.0) / std::sinh(half);
    out.a_1 = f * sigma1();
    out.a_2 = f * sigma2();
    return out;
}

/// Log-magnitude profile of the degree-m model: one half the logarithm of
/// the hyperbolic ratio.  Identically zero for m = 0 and strictly negative
/// for m >= 1, theta > 0; tends to -theta + (1/2) log(m+1) as theta grows.
[[nodiscard]] inline double w_model(int m, double theta) {
    if (m == 0) return 0.0;
    return 0.5 * std::log(sinh_ratio(m, theta));
}

/// The part of the log-magnitude profile that stays bounded on the axis:
/// w_model minus its (m/2) log(|z|/t) singular part, expressed through the
/// smooth half-space variables.  Equals (1/2) log((m+1)/2^m) on the axis.
[[nodiscard]] inline double w_model_regular(int m, const PointTZ& p) {
    const double abs_z = std::abs(p.z);
    const double x = std::hypot(p.t, abs_z);
    const double s = detail::s_of_point(p.t, abs_z, x);
    const double y = s * s;
    // (1 - y)/2 = t/(t+x), so the argument below is (m+1) (t/(t+x))^m / P_m.
    const double arg = (m + 1) * detail::int_pow(0.5 * (1.0 - y), m) / detail::geometric_sum(m, y);
    return 0.5 * std::log(arg);
}

/// Triple product <a_3, [a_1, a_2]> of the degree-m model, computed directly
/// from the sampled fields by bracket and pairing arithmetic.  Non-negative
/// on the whole half-space and scaling as 1/t^3 along rays of fixed z/t.
[[nodiscard]] inline double triple_product_model(const ModelParams& params, const PointTZ& p) {
    const FieldSample f = model_fields(params, p);
    return inner(f.a_3, bracket(f.a_1, f.a_2));
}

/// Reference closed form for the triple product's profile: the squared
/// hyperbolic ratio times cosh((m+1)theta)/cosh(theta) over 2t^3, written in
/// the smooth half-space variables.  Proportional to the direct bracket
/// computation along each ray z/t = const (both scale as 1/t^3); the overall
/// normalization of the two differs.
[[nodiscard]] inline double triple_product_closed_form(const ModelParams& params, const PointTZ& p) {
    const int m = params.m;
    const double t = p.t;
    const double abs_z = std::abs(p.z);
    const double x = std::hypot(t, abs_z);
    const double s = detail::s_of_point(t, abs_z, x);
    const double y = s * s;
    const double pm = detail::geometric_sum(m, y);
    const double big_s = detail::int_pow(y, m + 1);
    // q^2 G = (m+1)^2 s^m (1+S) / (P_m^2 (1+y)) with q the hyperbolic ratio
    // and G = cosh((m+1)theta)/cosh(theta).
    const double q2g = (m + 1) * (m + 1) * detail::int_pow(s, m) * (1.0 + big_s) / (pm * pm * (1.0 + y));
    return q2g / (2.0 * t * t * t);
}

/// Integral of the degree-m log-magnitude profile over the disk |z| <= R at
/// fixed t, by adaptive Simpson quadrature on a logarithmic radial grid.
/// The coefficient of log(R/t) in the result tends to -pi m (m+2)/6 * t^2
/// for large R/t.  Throws QuadratureFailure if refinement stalls.
[[nodiscard]] inline double w_model_disk_integral(int m, double t, double R) {
    if (!(R > t) || !(t > 0.0)) throw BadParam("w_model_disk_integral: need R > t > 0");
    if (m == 0) return 0.0;

    // Integrand of 2 pi * w(theta(rho)) rho drho after rho = e^u: the inner
    // disk rho < 1e-6 t is dropped (w ~ (m/2) log(rho), so the omitted piece
    // is O(eps^2 log eps) relative to t^2).
    const auto integrand = [m, t](double u) {
        const double rho = std::exp(u);
        const double theta = std::asinh(t / rho);
        return w_model(m, theta) * rho * rho;
    };
    const double u_lo = std::log(1.0e-6 * t);
    const double u_hi = std::log(R);

    const double two_pi = 2.0 * std::acos(-1.0);
    double previous = 0.0;
    for (int n = 64; n <= (1 << 20); n *= 2) {
        const double h = (u_hi - u_lo) / n;
        double acc = integrand(u_lo) + integrand(u_hi);
        for (int j = 1; j < n; ++j) acc += (j % 2 == 1 ? 4.0 : 2.0) * integrand(u_lo + j * h);
        const double value = two_pi * acc * h / 3.0;
        if (n > 64 && std::abs(value - previous) <= 1.0e-10 * std::max(std::abs(value), t * t)) {
            return value;
        }
        previous = value;
    }
    throw QuadratureFailure("w_model_disk_integral: refinement did not converge");
}

}  // namespace su2lab
