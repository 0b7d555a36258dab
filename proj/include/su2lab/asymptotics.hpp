#pragma once

// Scalar small-t and large-t asymptotics: Riccati flows of the frame
// component of the axial Higgs field, the closed-form leading-order
// profiles near a turning time t_z, the conjectural off-frame connection
// profile, turning-time detection, and the turning-time scaling exponent.
//
// All trajectory integration is adaptive classical RK4 with step-halving
// error control (budget per unit of the independent variable), and escape
// past a sentinel is reported as a blow-up outcome, never as an error.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "su2lab/models.hpp"

namespace su2lab {

/// Thrown when the off-frame profile degree pair (k, m) has k - m odd or
/// nonpositive, so no positive integer p with k = m + 2p exists.
struct BadParity : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when a turning-time search finds more than one sign change.
struct MultipleZeros : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// How a trajectory ended.
enum class Termination { completed, blow_up };

/// An ordered sample path of a scalar ODE: pairs of (independent variable,
/// value), strictly increasing in the first component.  A blown-up
/// trajectory stops at the escape point, recorded in blow_up_at.
struct Trajectory {
    std::vector<std::pair<double, double>> samples;
    Termination termination = Termination::completed;
    double blow_up_at = std::numeric_limits<double>::quiet_NaN();
};

/// Parameters of the logarithmic-time Riccati flow
///     dy/dtau + 2 y^2 - (k+1)^2 / 2 = eps4(tau),
/// with mu the sup-norm budget for the forcing eps4.
struct RiccatiSpec {
    int k = 0;
    double mu = 0.0;
    double y0 = 0.0;
    double tau0 = 0.0;

    void validate() const {
        if (k < 0) throw BadParam("RiccatiSpec: k must be >= 0");
        if (!(mu >= 0.0)) throw BadParam("RiccatiSpec: mu must be >= 0");
    }
};

namespace detail {

inline constexpr double kOdeTolPerUnit = 1.0e-10;
inline constexpr double kBlowUpSentinel = 1.0e6;

template <class F>
[[nodiscard]] double rk4_step(const F& f, double x, double y, double h) {
    const double k1 = f(x, y);
    const double k2 = f(x + 0.5 * h, y + 0.5 * h * k1);
    const double k3 = f(x + 0.5 * h, y + 0.5 * h * k2);
    const double k4 = f(x + h, y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Adaptive RK4 with step-halving error control: a step is accepted when
/// the halving estimate stays within tol per unit of x, and the richer
/// half-step value (with its Richardson correction) is kept.  escape(x, y)
/// turns the integration into a reported blow-up.
template <class F, class Escape>
[[nodiscard]] Trajectory integrate_adaptive(const F& f, double x0, double y0, double x1,
                                            double tol, const Escape& escape) {
    if (!(x1 > x0)) throw BadParam("integrate: need an increasing range");
    if (!(tol > 0.0)) throw BadParam("integrate: tolerance must be positive");

    Trajectory out;
    out.samples.emplace_back(x0, y0);
    double x = x0;
    double y = y0;
    double h = (x1 - x0) / 64.0;
    const double h_min = (x1 - x0) * 1.0e-13;

    while (x < x1) {
        h = std::min(h, x1 - x);
        const double full = rk4_step(f, x, y, h);
        const double mid = rk4_step(f, x, y, 0.5 * h);
        const double halves = rk4_step(f, x + 0.5 * h, mid, 0.5 * h);
        const double err = std::abs(halves - full) / 15.0;
        const double budget = tol * h;

        const bool finite = std::isfinite(err);
        if ((finite && err <= budget) || h <= h_min) {
            x += h;
            y = halves + (halves - full) / 15.0;
            out.samples.emplace_back(x, y);
            if (!std::isfinite(y) || escape(x, y)) {
                out.termination = Termination::blow_up;
                out.blow_up_at = x;
                return out;
            }
        }
        const double scale =
            !finite ? 0.1
                    : (err > 0.0 ? 0.9 * std::pow(budget / std::max(err, 1e-300), 0.25) : 2.0);
        h = std::max(h * std::clamp(scale, 0.1, 2.0), h_min);
    }
    return out;
}

}  // namespace detail

/// Integrates d(alpha)/dt = 2 alpha^2 + zconst from (t0, alpha0) to t_end.
/// Blow-up is flagged once |alpha| exceeds the sentinel scaled by 1/t.
[[nodiscard]] inline Trajectory riccati_alpha(double zconst, double alpha0, double t0,
                                              double t_end,
                                              double tol = detail::kOdeTolPerUnit) {
    if (!(t0 > 0.0)) throw BadParam("riccati_alpha: need t0 > 0");
    return detail::integrate_adaptive(
        [zconst](double, double a) { return 2.0 * a * a + zconst; }, t0, alpha0, t_end, tol,
        [](double t, double a) { return std::abs(a) > detail::kBlowUpSentinel / t; });
}

/// Integrates dy/dtau = (k+1)^2/2 - 2 y^2 + eps4(tau) from the spec's
/// initial data to tau_end.  The forcing is checked against the spec's
/// budget at every evaluation.  Blow-up is flagged once |y| exceeds the
/// sentinel.
[[nodiscard]] inline Trajectory riccati_y(const RiccatiSpec& spec,
                                          const std::function<double(double)>& eps4,
                                          double tau_end,
                                          double tol = detail::kOdeTolPerUnit) {
    spec.validate();
    const double drive = 0.5 * (spec.k + 1) * (spec.k + 1);
    auto forcing = [&spec, &eps4](double tau) {
        const double e = eps4 ? eps4(tau) : 0.0;
        if (std::abs(e) > spec.mu + 1e-12)
            throw BadParam("riccati_y: forcing exceeds the budget mu");
        return e;
    };
    return detail::integrate_adaptive(
        [drive, &forcing](double tau, double y) { return drive - 2.0 * y * y + forcing(tau); },
        spec.tau0, spec.y0, tau_end, tol,
        [](double, double y) { return std::abs(y) > detail::kBlowUpSentinel; });
}

/// Verifies the tanh comparison bound along a trajectory of the
/// logarithmic-time flow: with lambda^2 = (k+1)^2/4 - mu and c fixed by
/// the first sample, every sample must satisfy
///     y(tau) >= lambda (c e^{4 lambda (tau-tau0)} - 1)
///                     / (c e^{4 lambda (tau-tau0)} + 1).
/// Returns the largest value of (bound - y); nonpositive means the bound
/// holds, and with zero forcing it is an equality up to integration error.
[[nodiscard]] inline double tanh_bound_check(int k, double mu, const Trajectory& trajectory) {
    if (k < 0) throw BadParam("tanh_bound_check: k must be >= 0");
    if (!(mu >= 0.0)) throw BadParam("tanh_bound_check: mu must be >= 0");
    const double lambda_sq = 0.25 * (k + 1) * (k + 1) - mu;
    if (!(lambda_sq > 0.0)) throw BadParam("tanh_bound_check: mu too large, lambda^2 <= 0");
    const double lambda = std::sqrt(lambda_sq);
    if (trajectory.samples.empty()) throw BadParam("tanh_bound_check: empty trajectory");

    const auto [tau0, y0] = trajectory.samples.front();
    if (!(y0 * y0 < lambda_sq))
        throw BadParam("tanh_bound_check: initial value outside (-lambda, lambda)");
    const double c = (lambda + y0) / (lambda - y0);

    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& [tau, y] : trajectory.samples) {
        // lambda (c e^x - 1)/(c e^x + 1) = lambda tanh((x + ln c)/2)
        const double bound = lambda * std::tanh(2.0 * lambda * (tau - tau0) + 0.5 * std::log(c));
        worst = std::max(worst, bound - y);
    }
    return worst;
}

/// Leading-order turning profile of the frame component of the axial
/// Higgs field:
///     (k+1)/(2t) * (t^{2(k+1)} - t_z^{2(k+1)}) / (t^{2(k+1)} + t_z^{2(k+1)}),
/// evaluated stably as a tanh in the log ratio.  Odd in ln(t/t_z) after
/// scaling by t.
[[nodiscard]] inline double alpha_profile(int k, double t, double t_z) {
    if (k < 0) throw BadParam("alpha_profile: k must be >= 0");
    if (!(t > 0.0) || !(t_z > 0.0)) throw BadParam("alpha_profile: need t, t_z > 0");
    return 0.5 * (k + 1) / t * std::tanh((k + 1) * std::log(t / t_z));
}

/// Leading-order profile of the off-frame axial magnitude:
///     (k+1)/t * t_z^{2(k+1)} / (t^{2(k+1)} + t_z^{2(k+1)}).
/// Equals (k+1)/(2 t_z) at the turning time and decays like
/// t_z^{2(k+1)} / t^{2k+3} far above it.
[[nodiscard]] inline double beta_profile(int k, double t, double t_z) {
    if (k < 0) throw BadParam("beta_profile: k must be >= 0");
    if (!(t > 0.0) || !(t_z > 0.0)) throw BadParam("beta_profile: need t, t_z > 0");
    const double x = 2.0 * (k + 1) * std::log(t / t_z);
    // 1 / (1 + e^x), saturating correctly for |x| large
    const double logistic = x > 0.0 ? std::exp(-x) / (1.0 + std::exp(-x))
                                    : 1.0 / (1.0 + std::exp(x));
    return (k + 1) / t * logistic;
}

/// Leading-order magnitude of the transverse Higgs pair near a turning
/// time:
///     kappa |z|^m (t_z/t_*)^{k+1} ((t_z/t)^{k+1} + (t/t_z)^{k+1}),
/// the bracket being 2 cosh((k+1) ln(t/t_z)); minimal over t at t = t_z.
[[nodiscard]] inline double phi_profile(int k, int m, double kappa, double t, double t_z,
                                        double t_star, double abs_z) {
    if (k < 0 || m < 0) throw BadParam("phi_profile: degrees must be >= 0");
    if (!(t > 0.0) || !(t_z > 0.0) || !(t_star > 0.0))
        throw BadParam("phi_profile: need positive times");
    if (!(kappa > 0.0) || abs_z < 0.0) throw BadParam("phi_profile: bad magnitude arguments");
    const double scale = kappa * std::pow(abs_z, m) * std::pow(t_z / t_star, k + 1);
    return scale * 2.0 * std::cosh((k + 1) * std::log(t / t_z));
}

/// Leading-order magnitude of the off-frame connection component near a
/// turning time, anchored by its value bz there:
///     bz ((t_z/t)^{k+1} + (t/t_z)^k).
[[nodiscard]] inline double bhat_profile(int k, double t, double t_z, double bz) {
    if (k < 0) throw BadParam("bhat_profile: k must be >= 0");
    if (!(t > 0.0) || !(t_z > 0.0)) throw BadParam("bhat_profile: need t, t_z > 0");
    if (bz < 0.0) throw BadParam("bhat_profile: anchor magnitude must be >= 0");
    return bz * (std::pow(t_z / t, k + 1) + std::pow(t / t_z, k));
}

/// Conjectural small-t shape of the off-frame connection component for
/// degree pair (k, m) with k = m + 2p:
///     (1/sqrt(2)) t^{-(k+1)} conj(z)^{p-1} / (1 + t^{-2(k+1)} |z|^{2p}),
/// evaluated through log-space magnitudes so that extreme ratios of t and
/// |z| neither overflow nor underflow prematurely.  Internal-consistency
/// checks only (peak scaling, parity); it is not a solution statement.
[[nodiscard]] inline complexd synthetic_bhat(int k, int m, double t, complexd z) {
    if (m < 0) throw BadParam("synthetic_bhat: m must be >= 0");
    if (k <= m || (k - m) % 2 != 0)
        throw BadParity("synthetic_bhat: need k = m + 2p with integer p >= 1");
    if (!(t > 0.0)) throw BadParam("synthetic_bhat: need t > 0");
    const int p = (k - m) / 2;
    const double abs_z = std::abs(z);
    if (abs_z == 0.0) {
        if (p == 1) return complexd{std::exp(-(k + 1) * std::log(t)) / std::sqrt(2.0), 0.0};
        return complexd{0.0, 0.0};
    }
    const double log_t = std::log(t);
    const double log_z = std::log(abs_z);
    const double log_num = -(k + 1) * log_t + (p - 1) * log_z;
    const double log_den_arg = -2.0 * (k + 1) * log_t + 2.0 * p * log_z;
    // log(1 + e^x), stable for both signs of x
    const double log_den = log_den_arg > 0.0 ? log_den_arg + std::log1p(std::exp(-log_den_arg))
                                             : std::log1p(std::exp(log_den_arg));
    const double magnitude = std::exp(log_num - log_den) / std::sqrt(2.0);
    const double phase = -(p - 1) * std::arg(z);
    return std::polar(magnitude, phase);
}

/// Radius of the off-axis magnitude peak of synthetic_bhat at fixed t,
/// located by golden-section search in the log radius.  Defined for
/// p >= 2 (for p = 1 the magnitude is largest on the axis itself); the
/// peak radius scales as t^{(k+1)/p}.
[[nodiscard]] inline double bhat_peak_radius(int k, int m, double t) {
    if (m < 0) throw BadParam("bhat_peak_radius: m must be >= 0");
    if (k <= m || (k - m) % 2 != 0)
        throw BadParity("bhat_peak_radius: need k = m + 2p with integer p >= 1");
    const int p = (k - m) / 2;
    if (p < 2) throw BadParam("bhat_peak_radius: no off-axis peak for p = 1");

    auto height = [&](double log_r) {
        return std::abs(synthetic_bhat(k, m, t, complexd{std::exp(log_r), 0.0}));
    };
    // bracket generously around the denominator transition radius
    const double centre = (k + 1) * std::log(t) / p;
    double lo = centre - 12.0;
    double hi = centre + 12.0;
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = hi - inv_phi * (hi - lo);
    double b = lo + inv_phi * (hi - lo);
    double fa = height(a);
    double fb = height(b);
    while (hi - lo > 1e-12) {
        if (fa < fb) {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = height(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = height(a);
        }
    }
    return std::exp(0.5 * (lo + hi));
}

/// A reduced fraction.
struct Rational {
    long long num = 0;
    long long den = 1;

    friend bool operator==(const Rational&, const Rational&) = default;
};

[[nodiscard]] inline Rational reduced(long long num, long long den) {
    const long long g = std::gcd(num, den);
    return Rational{num / g, den / g};
}

/// Scaling exponent of the turning time against the transverse distance
/// for degree pair (m, k = m + 2p): t_z ~ |z|^e with e = p/(m + 2p + 1),
/// cross-checked against the equivalent form (k - m) / (2 (k + 1)).
[[nodiscard]] inline Rational tz_exponent(int m, int p) {
    if (m < 0) throw BadParam("tz_exponent: m must be >= 0");
    if (p < 1) throw BadParam("tz_exponent: p must be >= 1");
    const Rational direct = reduced(p, m + 2 * p + 1);
    const int k = m + 2 * p;
    const Rational cross = reduced(static_cast<long long>(k - m), 2LL * (k + 1));
    if (!(direct == cross))
        throw std::logic_error("tz_exponent: equivalent forms disagree");
    return direct;
}

/// Locates the unique zero crossing of a sampled trajectory by bisection
/// on its piecewise-linear interpolant.  Returns nothing when the samples
/// never change sign; throws MultipleZeros when they change sign more than
/// once, and rejects a crossing with nonpositive slope (the turning time
/// must be a transversal upward crossing).
[[nodiscard]] inline std::optional<double> turning_time(const Trajectory& trajectory) {
    const auto& s = trajectory.samples;
    if (s.size() < 2) throw BadParam("turning_time: need at least two samples");
    for (std::size_t i = 1; i < s.size(); ++i)
        if (!(s[i].first > s[i - 1].first))
            throw BadParam("turning_time: samples must be strictly increasing");

    std::size_t crossing = 0;
    std::size_t count = 0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        const double prev = s[i - 1].second;
        const double cur = s[i].second;
        if ((prev < 0.0 && cur >= 0.0) || (prev > 0.0 && cur <= 0.0) ||
            (prev == 0.0 && cur != 0.0 && i == 1)) {
            crossing = i;
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    if (count > 1) throw MultipleZeros("turning_time: more than one sign change");
    if (!(s[crossing].second > s[crossing - 1].second))
        throw BadParam("turning_time: crossing has nonpositive slope");

    double lo = s[crossing - 1].first;
    double hi = s[crossing].first;
    double f_lo = s[crossing - 1].second;
    auto interp = [&](double x) {
        const double x0 = s[crossing - 1].first;
        const double x1 = s[crossing].first;
        const double y0 = s[crossing - 1].second;
        const double y1 = s[crossing].second;
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    };
    for (int it = 0; it < 80 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = interp(mid);
        if ((f_lo <= 0.0 && f_mid <= 0.0) || (f_lo >= 0.0 && f_mid >= 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Trajectory as CSV; column names default to the logarithmic-time flow
/// and can be relabeled (for example to t,alpha).
inline void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory,
                                 const char* x_name = "tau", const char* y_name = "y") {
    os << x_name << ',' << y_name << '\n';
    char line[96];
    for (const auto& [x, y] : trajectory.samples) {
        std::snprintf(line, sizeof line, "%.17g,%.17g\n", x, y);
        os << line;
    }
}

/// Profile table as CSV rows t,z,value.
inline void write_profile_csv(std::ostream& os, const std::vector<std::array<double, 3>>& rows) {
    os << "t,z,value\n";
    char line[128];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", r[0], r[1], r[2]);
        os << line;
    }
}

}  // namespace su2lab
