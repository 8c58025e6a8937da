#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qst/dynamics.hpp"
#include "qst/optimizer.hpp"
#include "qst/pulses.hpp"

using namespace qst;

namespace {

double sech(double t) { return 1.0 / std::cosh(t); }

// Central difference with O(h^2) error.
template <typename F>
double num_deriv(F&& f, double t, double h = 1e-5) {
    return (f(t + h) - f(t - h)) / (2 * h);
}

}  // namespace

TEST_CASE("sech pulse values and symmetry") {
    const auto p = sech_pulse<double>();
    CHECK(p.g1(0.0) == 1.0);  // kappa units
    CHECK(p.g1(2.7) == doctest::Approx(p.g1(-2.7)).epsilon(1e-15));
    for (double t = -6; t <= 6; t += 0.37)
        CHECK(std::abs(p.g2(t) - p.g1(-t)) == 0.0);  // symmetric pulse condition
    CHECK(p.support_lo < -15);
    CHECK(p.g1(p.support_hi) == doctest::Approx(kSupportCutoff).epsilon(1e-6));
}

TEST_CASE("sech reference state") {
    SUBCASE("t = 0") {
        const auto s = sech_reference_state(0.0);
        CHECK(s.alpha1 == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(s.alpha2 == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(s.beta_a == doctest::Approx(-0.70710678118654752).epsilon(1e-15));
        CHECK(s.beta_s == 0.0);
    }
    SUBCASE("asymptotics of a successful transfer") {
        const auto s = sech_reference_state(18.0);
        CHECK(s.alpha2 == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(std::abs(s.alpha1) < 1e-14);
        CHECK(std::abs(s.beta_a) < 1e-7);
    }
    SUBCASE("normalised at all times") {
        for (const double t : {-3.2, -0.4, 1.3, 5.0})
            CHECK(sech_reference_state(t).squared_norm() == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("sech solution satisfies the reduced nonlinear equations") {
    // d/dt[(a1^2 - a2^2)/2] + kappa (1 - a1^2 - a2^2) = 0
    auto half_diff = [](double t) {
        const auto s = sech_reference_state(t);
        return (s.alpha1 * s.alpha1 - s.alpha2 * s.alpha2) / 2;
    };
    // and the logistic form a1' + 2 kappa (a1 - a1^2) = 0
    auto alpha1 = [](double t) { return sech_reference_state(t).alpha1; };
    for (const double t : {-2.0, -0.7, 0.0, 0.9, 2.4}) {
        const auto s = sech_reference_state(t);
        const double r1 =
            num_deriv(half_diff, t) + (1 - s.alpha1 * s.alpha1 - s.alpha2 * s.alpha2);
        CHECK(std::abs(r1) < 1e-9);
        const double r2 = num_deriv(alpha1, t) + 2 * (s.alpha1 - s.alpha1 * s.alpha1);
        CHECK(std::abs(r2) < 1e-9);
    }
}

TEST_CASE("construction reproduces the sech pulse from its positive half") {
    const auto shape = cirac_construct<double>([](double t) { return sech(t); });

    SUBCASE("fixed point on t < 0") {
        double max_err = 0;
        for (double t = -10; t < 0; t += 0.01)
            max_err = std::max(max_err, std::abs(shape.g1(t) - sech(t)));
        CHECK(max_err < 1e-6);
    }
    SUBCASE("step-2 initial condition") {
        // g1(0) = kappa gives alpha1(0) = 1/2, matching the closed form.
        const auto y0 = detail::construction_initial_state<double>(1.0);
        CHECK(y0(0) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(y0(1) == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-15));
    }
    SUBCASE("symmetric pulse condition holds exactly") {
        for (double t = -8; t <= 8; t += 0.61) CHECK(shape.g2(t) == shape.g1(-t));
    }
    SUBCASE("derivative of the constructed branch") {
        for (const double t : {-4.1, -1.2, -0.3, 0.4, 2.2})
            CHECK(shape.g1_deriv(t) ==
                  doctest::Approx(-sech(t) * std::tanh(t)).epsilon(1e-6));
    }
}

TEST_CASE("construction is idempotent on its own output") {
    // A non-sech seed; reconstructing from the constructed pulse's t >= 0
    // half must reproduce it.
    auto seed = [](double t) { return 0.8 * std::exp(-t * t / 6.0); };
    const auto first = cirac_construct<double>(seed);
    const auto second = cirac_construct<double>([&first](double t) { return first.g1(t); });
    double max_err = 0;
    for (double t = -12; t <= 12; t += 0.05)
        max_err = std::max(max_err, std::abs(second.g1(t) - first.g1(t)));
    CHECK(max_err < 1e-6);
}

TEST_CASE("zero-jump consistency along the step-2 trajectory") {
    // kappa beta_a + g1 a1/sqrt2 + g2 a2/sqrt2 = 0 with g2(t) = g1(-t).
    auto seed = [](double t) { return 0.8 * std::exp(-t * t / 6.0); };
    const auto shape = cirac_construct<double>(seed);
    const auto sol = detail::integrate_construction<double>(seed, 12.0, 1e-10, 1e-12, true);
    const double sqrt2 = std::sqrt(2.0);
    double max_res = 0;
    for (double s = 0; s <= 12; s += 0.1) {
        const auto y = sol.dense.eval(s);
        const double a1 = y(0), ba = y(1);
        const double a2 = std::sqrt(std::max(0.0, 1 - a1 * a1 - ba * ba));
        const double r = ba + seed(s) * a1 / sqrt2 + shape.g2(s) * a2 / sqrt2;
        max_res = std::max(max_res, std::abs(r));
    }
    CHECK(max_res < 1e-6);
}

TEST_CASE("construction rejects bad seeds") {
    CHECK_THROWS_AS(cirac_construct<double>([](double) { return 0.0; }), InfeasibleError);
    CHECK_THROWS_AS(cirac_construct<double>([](double t) { return -sech(t); }),
                    InfeasibleError);
}

TEST_CASE("sampled pulses interpolate through their knots") {
    SUBCASE("two points") {
        SampledPulse<double> p{4.0, 2, {1.0, 0.5}};
        const auto shape = sampled_to_shape(p);
        CHECK(shape.g1(0.0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(shape.g1(2.0) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(shape.g1(4.0) == 0.0);
        CHECK(shape.g1(5.7) == 0.0);  // zero beyond T
    }
    SUBCASE("three-point problem puts free knots at T/3 and 2T/3") {
        // g0 must come from the transfer constraint; arbitrary values leave
        // the mirror branch negative and are rejected.
        const double T = 6.0;
        const double g0 = solve_constraint<double>({0.7, 0.2}, T);
        SampledPulse<double> p{T, 3, {g0, 0.7, 0.2}};
        const auto shape = sampled_to_shape(p);
        CHECK(shape.g1(0.0) == doctest::Approx(g0).epsilon(1e-12));
        CHECK(shape.g1(T / 3) == doctest::Approx(0.7).epsilon(1e-12));
        CHECK(shape.g1(2 * T / 3) == doctest::Approx(0.2).epsilon(1e-12));
    }
    SUBCASE("unconstrained multi-point values are rejected by the construction") {
        CHECK_THROWS_AS(sampled_to_shape(SampledPulse<double>{6.0, 3, {1.0, 0.7, 0.2}}),
                        InfeasibleError);
    }
    SUBCASE("contract violations") {
        CHECK_THROWS_AS(sampled_to_shape(SampledPulse<double>{4.0, 1, {1.0}}),
                        std::invalid_argument);
        CHECK_THROWS_AS(sampled_to_shape(SampledPulse<double>{-1.0, 2, {1.0, 0.5}}),
                        std::invalid_argument);
        CHECK_THROWS_AS(sampled_to_shape(SampledPulse<double>{4.0, 2, {1.0, -0.5}}),
                        std::invalid_argument);
    }
}

TEST_CASE("monotone cubic interpolation is shape preserving") {
    const std::vector<double> xs = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
    const std::vector<double> ys = {0.2, 1.0, 0.1, 0.8, 0.05, 0.0};
    const MonotoneCubic<double> interp(xs, ys);

    SUBCASE("passes through the knots") {
        for (std::size_t i = 0; i < xs.size(); ++i)
            CHECK(interp(xs[i]) == doctest::Approx(ys[i]).epsilon(1e-14));
    }
    SUBCASE("never leaves the local data range (up to roundoff)") {
        for (double t = 0; t <= 5.0; t += 0.005) {
            CHECK(interp(t) >= -1e-15);
            CHECK(interp(t) <= 1.0 + 1e-15);
        }
    }
    SUBCASE("derivative matches finite differences of the value") {
        for (double t = 0.11; t < 5.0; t += 0.231) {
            const double fd = (interp(t + 1e-6) - interp(t - 1e-6)) / 2e-6;
            CHECK(interp.derivative(t) == doctest::Approx(fd).epsilon(1e-5));
        }
    }
    SUBCASE("monotone data gives a monotone interpolant") {
        const MonotoneCubic<double> mono({0.0, 1.0, 2.0, 3.0}, {1.0, 0.6, 0.5, 0.0});
        double prev = mono(0.0);
        for (double t = 0.01; t <= 3.0; t += 0.01) {
            const double v = mono(t);
            CHECK(v <= prev + 1e-14);
            prev = v;
        }
    }
}

TEST_CASE("perturbation profiles") {
    const auto shape = sech_pulse<double>();

    SUBCASE("amplitude noise tracks the pulse") {
        const auto prof = perturbation(shape, NoiseKind::Amplitude, 1);
        CHECK(prof.delta_g(0.0) == 1.0);
        for (double t = -3; t <= 3; t += 0.5) CHECK(prof.delta_g(t) == shape.g1(t));
    }
    SUBCASE("timing noise is the pulse derivative") {
        const auto prof = perturbation(shape, NoiseKind::Timing, 2);
        CHECK(prof.delta_g(0.0) == 0.0);  // sech'(0) = 0
        CHECK(prof.delta_g(1.0) ==
              doctest::Approx(-sech(1.0) * std::tanh(1.0)).epsilon(1e-14));
    }
    SUBCASE("timing noise on pulse 1 is a contract error") {
        CHECK_THROWS_AS(perturbation(shape, NoiseKind::Timing, 1), std::invalid_argument);
    }
}
