#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

#include "su2lab/asymptotics.hpp"

using namespace su2lab;

namespace {

double slope_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
}

}  // namespace

TEST_CASE("physical-time flow reproduces its closed forms") {
    SECTION("pole family decaying like -1/(2t)") {
        const Trajectory traj = riccati_alpha(0.0, -0.5, 1.0, 10.0);
        REQUIRE(traj.termination == Termination::completed);
        REQUIRE(traj.samples.front() == std::pair{1.0, -0.5});
        double worst = 0.0;
        for (const auto& [t, a] : traj.samples)
            worst = std::max(worst, std::abs(a + 0.5 / t));
        REQUIRE(worst <= 1e-8);
    }

    SECTION("shifted pole family -1/(2(t+1))") {
        const Trajectory traj = riccati_alpha(0.0, -0.25, 1.0, 10.0);
        double worst = 0.0;
        for (const auto& [t, a] : traj.samples)
            worst = std::max(worst, std::abs(a + 0.5 / (t + 1.0)));
        REQUIRE(worst <= 1e-8);
    }

    SECTION("constant forcing pins the stable fixed point") {
        const Trajectory at_rest = riccati_alpha(-2.0, -1.0, 1.0, 6.0);
        REQUIRE(at_rest.termination == Termination::completed);
        for (const auto& [t, a] : at_rest.samples) REQUIRE(std::abs(a + 1.0) <= 1e-12);

        const Trajectory approach = riccati_alpha(-2.0, -0.5, 1.0, 5.0);
        REQUIRE(approach.termination == Termination::completed);
        for (std::size_t i = 1; i < approach.samples.size(); ++i)
            REQUIRE(approach.samples[i].second <= approach.samples[i - 1].second + 1e-12);
        REQUIRE(std::abs(approach.samples.back().second + 1.0) <= 1e-6);
    }

    SECTION("positive initial data escapes in finite time") {
        const Trajectory traj = riccati_alpha(0.0, 1.0, 1.0, 3.0);
        REQUIRE(traj.termination == Termination::blow_up);
        // exact solution 1/(3 - 2t) has its pole at t = 1.5
        REQUIRE(traj.blow_up_at > 1.49);
        REQUIRE(traj.blow_up_at < 1.5 + 1e-3);
        REQUIRE(traj.samples.back().first == traj.blow_up_at);
        REQUIRE(std::abs(traj.samples.back().second) > 6e5);
    }

    SECTION("samples are strictly increasing in time") {
        const Trajectory traj = riccati_alpha(0.0, -0.5, 1.0, 4.0);
        for (std::size_t i = 1; i < traj.samples.size(); ++i)
            REQUIRE(traj.samples[i].first > traj.samples[i - 1].first);
    }

    SECTION("argument validation") {
        REQUIRE_THROWS_AS(riccati_alpha(0.0, -0.5, 0.0, 2.0), BadParam);
        REQUIRE_THROWS_AS(riccati_alpha(0.0, -0.5, 1.0, 1.0), BadParam);
        REQUIRE_THROWS_AS(riccati_alpha(0.0, -0.5, 1.0, 2.0, 0.0), BadParam);
    }
}

TEST_CASE("logarithmic-time flow follows the tanh family") {
    SECTION("unforced flow from zero matches lambda tanh(2 lambda tau) for low degrees") {
        for (int k = 0; k <= 4; ++k) {
            const double lambda = 0.5 * (k + 1);
            const Trajectory traj =
                riccati_y(RiccatiSpec{k, 0.0, 0.0, 0.0}, [](double) { return 0.0; }, 5.0);
            REQUIRE(traj.termination == Termination::completed);
            double worst = 0.0;
            for (const auto& [tau, y] : traj.samples)
                worst = std::max(worst, std::abs(y - lambda * std::tanh(2.0 * lambda * tau)));
            INFO("k = " << k);
            REQUIRE(worst <= 1e-8);
        }
    }

    SECTION("empty forcing callable means zero forcing") {
        const Trajectory traj = riccati_y(RiccatiSpec{1, 0.0, 0.0, 0.0}, {}, 2.0);
        double worst = 0.0;
        for (const auto& [tau, y] : traj.samples)
            worst = std::max(worst, std::abs(y - std::tanh(2.0 * tau)));
        REQUIRE(worst <= 1e-8);
    }

    SECTION("data above the plateau decays onto it") {
        const Trajectory traj =
            riccati_y(RiccatiSpec{2, 0.0, 2.0, 0.0}, [](double) { return 0.0; }, 3.0);
        REQUIRE(traj.termination == Termination::completed);
        for (std::size_t i = 1; i < traj.samples.size(); ++i)
            REQUIRE(traj.samples[i].second <= traj.samples[i - 1].second + 1e-12);
        for (const auto& [tau, y] : traj.samples) REQUIRE(y >= 1.5 - 1e-12);
        REQUIRE(std::abs(traj.samples.back().second - 1.5) <= 1e-6);
    }

    SECTION("data below the unstable plateau blows up at the predicted time") {
        const Trajectory traj =
            riccati_y(RiccatiSpec{1, 0.0, -1.5, 0.0}, [](double) { return 0.0; }, 5.0);
        REQUIRE(traj.termination == Termination::blow_up);
        // continued tanh form: pole where -0.2 e^{4 tau} = -1, tau* = ln(5)/4
        REQUIRE(std::abs(traj.blow_up_at - std::log(5.0) / 4.0) <= 1e-3);
        REQUIRE(traj.samples.back().second < -1e6);
    }

    SECTION("forcing beyond its declared budget is rejected") {
        REQUIRE_THROWS_AS(riccati_y(RiccatiSpec{1, 0.01, 0.0, 0.0},
                                    [](double tau) { return 0.05 * std::sin(tau); }, 4.0),
                          BadParam);
        REQUIRE_THROWS_AS(riccati_y(RiccatiSpec{-1, 0.0, 0.0, 0.0}, {}, 1.0), BadParam);
        REQUIRE_THROWS_AS(riccati_y(RiccatiSpec{1, -0.5, 0.0, 0.0}, {}, 1.0), BadParam);
    }
}

TEST_CASE("tanh comparison bound holds along trajectories") {
    SECTION("unforced flow saturates the bound") {
        const Trajectory traj =
            riccati_y(RiccatiSpec{1, 0.0, 0.0, 0.0}, [](double) { return 0.0; }, 5.0);
        const double violation = tanh_bound_check(1, 0.0, traj);
        REQUIRE(violation <= 1e-8);
        REQUIRE(violation >= -1e-8);
    }

    SECTION("forcing within budget keeps the slack bound") {
        const Trajectory traj =
            riccati_y(RiccatiSpec{1, 0.05, 0.0, 0.0},
                      [](double tau) { return 0.05 * std::sin(3.0 * tau); }, 5.0);
        REQUIRE(tanh_bound_check(1, 0.05, traj) <= 1e-8);
    }

    SECTION("degenerate low degree with nonzero budget") {
        const Trajectory traj =
            riccati_y(RiccatiSpec{0, 0.1, 0.0, 0.0},
                      [](double tau) { return 0.1 * std::cos(tau); }, 6.0);
        REQUIRE(tanh_bound_check(0, 0.1, traj) <= 1e-8);
        const double lambda = 0.5 * std::sqrt(1.0 - 4.0 * 0.1);
        for (const auto& [tau, y] : traj.samples) REQUIRE(std::abs(y) <= lambda + 0.35);
    }

    SECTION("argument validation") {
        const Trajectory traj =
            riccati_y(RiccatiSpec{1, 0.0, 0.0, 0.0}, [](double) { return 0.0; }, 1.0);
        REQUIRE_THROWS_AS(tanh_bound_check(1, 1.5, traj), BadParam);
        REQUIRE_THROWS_AS(tanh_bound_check(-1, 0.0, traj), BadParam);
        REQUIRE_THROWS_AS(tanh_bound_check(1, 0.0, Trajectory{}), BadParam);
        Trajectory outside;
        outside.samples = {{0.0, 2.0}, {1.0, 2.0}};
        REQUIRE_THROWS_AS(tanh_bound_check(1, 0.0, outside), BadParam);
    }
}

TEST_CASE("turning profiles have the pinned shapes") {
    SECTION("frame profile is odd in the log ratio after scaling by time") {
        for (int k = 0; k <= 3; ++k) {
            for (double t_z : {0.05, 0.3}) {
                for (double s : {0.1, 0.7, 1.9, 4.2}) {
                    const double tp = t_z * std::exp(s);
                    const double tm = t_z * std::exp(-s);
                    const double sum =
                        tp * alpha_profile(k, tp, t_z) + tm * alpha_profile(k, tm, t_z);
                    REQUIRE(std::abs(sum) <= 1e-12 * (k + 1));
                }
            }
        }
    }

    SECTION("frame profile limits") {
        REQUIRE(alpha_profile(2, 0.1, 0.1) == 0.0);
        const double far = alpha_profile(1, 1e6 * 0.2, 0.2);
        REQUIRE(std::abs(far - 2.0 / (2.0 * 2e5)) <= 1e-12 / 2e5);
        const double near = alpha_profile(1, 1e-6 * 0.2, 0.2);
        REQUIRE(std::abs(near + 2.0 / (2.0 * 2e-7)) <= 1e-6);
    }

    SECTION("off-frame axial magnitude: half height at the turning time, power decay") {
        for (int k = 0; k <= 3; ++k) {
            for (double t_z : {0.1, 0.7}) {
                const double at = beta_profile(k, t_z, t_z);
                REQUIRE(at == Catch::Approx(0.5 * (k + 1) / t_z).epsilon(1e-14));
            }
            const double t = 500.0;
            const double ratio = beta_profile(k, 10.0 * t, 0.2) / beta_profile(k, t, 0.2);
            REQUIRE(ratio == Catch::Approx(std::pow(10.0, -(2.0 * k + 3.0))).epsilon(1e-6));
            const double tiny = beta_profile(k, 1e-3 * 0.2, 0.2);
            REQUIRE(tiny == Catch::Approx((k + 1) / (1e-3 * 0.2)).epsilon(1e-5));
        }
    }

    SECTION("transverse magnitude is minimal at the turning time and even in the log ratio") {
        const int k = 1, m = 2;
        const double kappa = 0.7, t_z = 0.2, t_star = 1.0, abs_z = 0.3;
        const double at = phi_profile(k, m, kappa, t_z, t_z, t_star, abs_z);
        const double expected =
            2.0 * kappa * std::pow(abs_z, m) * std::pow(t_z / t_star, k + 1);
        REQUIRE(at == Catch::Approx(expected).epsilon(1e-14));

        double best = std::numeric_limits<double>::infinity();
        int best_i = -1;
        for (int i = 0; i <= 200; ++i) {
            const double s = -1.0 + 2.0 * i / 200.0;
            const double v = phi_profile(k, m, kappa, t_z * std::exp(s), t_z, t_star, abs_z);
            if (v < best) {
                best = v;
                best_i = i;
            }
        }
        REQUIRE(best_i == 100);
        const double up = phi_profile(k, m, kappa, t_z * std::exp(0.8), t_z, t_star, abs_z);
        const double down = phi_profile(k, m, kappa, t_z * std::exp(-0.8), t_z, t_star, abs_z);
        REQUIRE(up == Catch::Approx(down).epsilon(1e-12));
    }

    SECTION("off-frame connection magnitude grows with the smaller exponent above t_z") {
        const double bz = 0.4;
        for (int k = 1; k <= 3; ++k) {
            REQUIRE(bhat_profile(k, 0.3, 0.3, bz) == Catch::Approx(2.0 * bz).epsilon(1e-14));
            const double ratio = bhat_profile(k, 10.0 * 0.3, 0.3, bz) / bz;
            REQUIRE(ratio ==
                    Catch::Approx(std::pow(10.0, k) + std::pow(10.0, -(k + 1))).epsilon(1e-12));
        }
    }

    SECTION("argument validation") {
        REQUIRE_THROWS_AS(alpha_profile(-1, 1.0, 0.5), BadParam);
        REQUIRE_THROWS_AS(alpha_profile(1, 0.0, 0.5), BadParam);
        REQUIRE_THROWS_AS(beta_profile(1, 1.0, 0.0), BadParam);
        REQUIRE_THROWS_AS(phi_profile(1, 1, 0.0, 1.0, 0.5, 1.0, 0.1), BadParam);
        REQUIRE_THROWS_AS(phi_profile(1, 1, 1.0, 1.0, 0.5, 0.0, 0.1), BadParam);
        REQUIRE_THROWS_AS(bhat_profile(1, 1.0, 0.5, -0.1), BadParam);
    }
}

TEST_CASE("conjectural off-frame shape is internally consistent") {
    SECTION("degree parity is enforced") {
        REQUIRE_THROWS_AS(synthetic_bhat(2, 1, 1.0, complexd{0.1, 0.0}), BadParity);
        REQUIRE_THROWS_AS(synthetic_bhat(1, 1, 1.0, complexd{0.1, 0.0}), BadParity);
        REQUIRE_THROWS_AS(synthetic_bhat(0, 2, 1.0, complexd{0.1, 0.0}), BadParity);
        REQUIRE_THROWS_AS(synthetic_bhat(2, 0, 0.0, complexd{0.1, 0.0}), BadParam);
    }

    SECTION("log-space evaluation agrees with the direct formula at moderate arguments") {
        const int k = 4, m = 0;  // p = 2
        const double t = 1.7;
        const complexd z{0.6, 0.8};
        const complexd got = synthetic_bhat(k, m, t, z);
        const double tpow = std::pow(t, -(k + 1.0));
        const complexd naive = (1.0 / std::sqrt(2.0)) * tpow * std::conj(z) /
                               (1.0 + std::pow(t, -2.0 * (k + 1)) * std::pow(std::abs(z), 4.0));
        REQUIRE(std::abs(got - naive) <= 1e-13 * std::abs(naive));
    }

    SECTION("axis value for the lowest parity-allowed gap, zero above it") {
        const complexd on_axis = synthetic_bhat(2, 0, 2.0, complexd{0.0, 0.0});
        REQUIRE(on_axis.imag() == 0.0);
        REQUIRE(on_axis.real() == Catch::Approx(std::pow(2.0, -3.0) / std::sqrt(2.0)));
        REQUIRE(synthetic_bhat(4, 0, 2.0, complexd{0.0, 0.0}) == complexd{0.0, 0.0});
    }

    SECTION("extreme scales stay finite in log space") {
        const complexd v = synthetic_bhat(5, 1, 1e-30, complexd{1e-6, 0.0});
        REQUIRE(std::isfinite(v.real()));
        REQUIRE(std::isfinite(v.imag()));
        REQUIRE(std::abs(v) > 0.0);
    }

    SECTION("phase winds opposite to the transverse coordinate") {
        const int k = 5, m = 1;  // p = 2, phase -arg z
        for (double theta : {0.3, 1.2, 2.9, -2.0}) {
            const complexd z = std::polar(0.4, theta);
            const complexd v = synthetic_bhat(k, m, 0.8, z);
            double diff = std::arg(v) + (1.0) * theta;
            while (diff > M_PI) diff -= 2.0 * M_PI;
            while (diff < -M_PI) diff += 2.0 * M_PI;
            REQUIRE(std::abs(diff) <= 1e-12);
        }
    }

    SECTION("peak radius matches the stationarity condition") {
        const int k = 4, m = 0, p = 2;
        for (double t : {0.5, 1.3}) {
            const double expected =
                std::pow((p - 1.0) / (p + 1.0), 1.0 / (2.0 * p)) *
                std::pow(t, (k + 1.0) / p);
            REQUIRE(bhat_peak_radius(k, m, t) == Catch::Approx(expected).epsilon(1e-6));
        }
        REQUIRE_THROWS_AS(bhat_peak_radius(2, 0, 1.0), BadParam);   // p = 1: axis peak
        REQUIRE_THROWS_AS(bhat_peak_radius(3, 0, 1.0), BadParity);
    }

    SECTION("peak radius scales with the pinned log-log slope") {
        const std::vector<std::pair<int, int>> degrees = {{4, 0}, {5, 1}, {7, 1}};
        for (const auto& [k, m] : degrees) {
            const int p = (k - m) / 2;
            std::vector<double> log_t, log_r;
            for (double t : {0.01, 0.0631, 0.398, 2.51, 15.8}) {
                log_t.push_back(std::log(t));
                log_r.push_back(std::log(bhat_peak_radius(k, m, t)));
            }
            const double slope = slope_fit(log_t, log_r);
            INFO("k = " << k << ", m = " << m);
            REQUIRE(std::abs(slope - (k + 1.0) / p) <= 1e-3);
        }
    }
}

TEST_CASE("turning-time scaling exponent is an exact reduced fraction") {
    REQUIRE(tz_exponent(0, 1) == Rational{1, 3});
    REQUIRE(tz_exponent(1, 1) == Rational{1, 4});
    REQUIRE(tz_exponent(0, 2) == Rational{2, 5});
    for (int m = 0; m <= 4; ++m) {
        for (int p = 1; p <= 3; ++p) {
            const Rational r = tz_exponent(m, p);
            REQUIRE(r.den > 0);
            REQUIRE(std::gcd(r.num, r.den) == 1);
            REQUIRE(r.num * (m + 2 * p + 1) == static_cast<long long>(p) * r.den);
        }
    }
    REQUIRE_THROWS_AS(tz_exponent(-1, 1), BadParam);
    REQUIRE_THROWS_AS(tz_exponent(0, 0), BadParam);
}

TEST_CASE("turning-time detection on sampled trajectories") {
    SECTION("recovers the zero of the frame profile") {
        const int k = 2;
        const double t_z = 0.1;
        Trajectory traj;
        const int n = 4000;
        const double lo = std::log(0.02), hi = std::log(0.5);
        for (int i = 0; i <= n; ++i) {
            const double t = std::exp(lo + (hi - lo) * i / n);
            traj.samples.emplace_back(t, alpha_profile(k, t, t_z));
        }
        const auto found = turning_time(traj);
        REQUIRE(found.has_value());
        REQUIRE(std::abs(*found - t_z) <= 1e-6);
    }

    SECTION("pole family never turns") {
        const Trajectory traj = riccati_alpha(0.0, -0.5, 1.0, 10.0);
        REQUIRE_FALSE(turning_time(traj).has_value());
    }

    SECTION("recovers the upward crossing of the logarithmic-time flow") {
        const Trajectory traj = riccati_y(RiccatiSpec{1, 0.0, -0.5, 0.0},
                                          [](double) { return 0.0; }, 2.0, 1e-12);
        const auto found = turning_time(traj);
        REQUIRE(found.has_value());
        REQUIRE(std::abs(*found - std::atanh(0.5) / 2.0) <= 1e-6);
    }

    SECTION("multiple sign changes are rejected") {
        Trajectory wavy;
        for (int i = 0; i <= 100; ++i) {
            const double x = 0.1 * i;
            wavy.samples.emplace_back(x, std::sin(x));
        }
        REQUIRE_THROWS_AS(turning_time(wavy), MultipleZeros);
    }

    SECTION("downward crossings are rejected") {
        Trajectory down;
        for (int i = 0; i <= 10; ++i) {
            const double x = 0.2 * i;
            down.samples.emplace_back(x, 0.5 - x);
        }
        REQUIRE_THROWS_AS(turning_time(down), BadParam);
    }

    SECTION("argument validation") {
        Trajectory short_traj;
        short_traj.samples = {{0.0, 1.0}};
        REQUIRE_THROWS_AS(turning_time(short_traj), BadParam);
        Trajectory unordered;
        unordered.samples = {{0.0, -1.0}, {0.0, 1.0}};
        REQUIRE_THROWS_AS(turning_time(unordered), BadParam);
    }
}

TEST_CASE("trajectory and profile tables serialize to CSV") {
    Trajectory traj;
    traj.samples = {{0.5, -1.0}, {1.0, -0.5}};

    std::ostringstream def;
    write_trajectory_csv(def, traj);
    REQUIRE(def.str() == "tau,y\n0.5,-1\n1,-0.5\n");

    std::ostringstream named;
    write_trajectory_csv(named, traj, "t", "alpha");
    REQUIRE(named.str() == "t,alpha\n0.5,-1\n1,-0.5\n");

    std::ostringstream prof;
    write_profile_csv(prof, {{1.0, 0.25, 2.0}, {1.5, 0.25, 4.0}});
    REQUIRE(prof.str() == "t,z,value\n1,0.25,2\n1.5,0.25,4\n");
}
