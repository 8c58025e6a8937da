#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "qst/dynamics.hpp"
#include "qst/hilbert.hpp"
#include "qst/pulses.hpp"

using namespace qst;

namespace {

using M5 = Matrix5<double>;
using V5 = Vector5<double>;

V5 unit_vector(int i) {
    V5 v = V5::Zero();
    v(i) = {1.0, 0.0};
    return v;
}

}  // namespace

TEST_CASE("basis indexing is total and stable") {
    CHECK(index(BasisState::g0g0) == 0);
    CHECK(index(BasisState::e0g0) == 1);
    CHECK(index(BasisState::g1g0) == 2);
    CHECK(index(BasisState::g0e0) == 3);
    CHECK(index(BasisState::g0g1) == 4);
}

TEST_CASE("annihilation operators act on the single photon") {
    const M5 a1 = annihilation_operator<double>(1);
    const M5 a2 = annihilation_operator<double>(2);

    CHECK((a1 * unit_vector(2) - unit_vector(0)).norm() == 0.0);
    CHECK((a2 * unit_vector(2)).norm() == 0.0);
    CHECK((a2 * unit_vector(4) - unit_vector(0)).norm() == 0.0);
    // At most one photon in the truncated space.
    CHECK((a1 * a1).norm() == 0.0);
    CHECK((a2 * a2).norm() == 0.0);
    CHECK_THROWS_AS(annihilation_operator<double>(3), std::invalid_argument);
}

TEST_CASE("coupling Hamiltonian blocks and Hermiticity") {
    CHECK(coupling_hamiltonian<double>(1, 0.0).norm() == 0.0);

    const M5 h1 = coupling_hamiltonian<double>(1, 1.0);
    const M5 h2 = coupling_hamiltonian<double>(2, 1.0);
    CHECK((h1 - h1.adjoint()).norm() == 0.0);
    CHECK((h2 - h2.adjoint()).norm() == 0.0);
    for (int i = 0; i < kDim; ++i) {
        for (int j = 0; j < kDim; ++j) {
            const bool in_h1_block = (i == 1 && j == 2) || (i == 2 && j == 1);
            const bool in_h2_block = (i == 3 && j == 4) || (i == 4 && j == 3);
            CHECK(std::abs(h1(i, j)) == (in_h1_block ? 1.0 : 0.0));
            CHECK(std::abs(h2(i, j)) == (in_h2_block ? 1.0 : 0.0));
        }
    }
    // Linearity in g.
    CHECK((coupling_hamiltonian<double>(2, 3.5) - 3.5 * h2).norm() == 0.0);
}

TEST_CASE("effective coupling formula") {
    LabFrameParams<double> p;
    p.omega_L = 7.0;
    p.omega_0 = 1.0;
    p.g_bare = 2.0;
    p.rabi = [](double) { return 3.0; };
    CHECK(effective_coupling(p, 0.0) == doctest::Approx(1.0).epsilon(1e-15));

    p.rabi = [](double) { return 6.0; };
    CHECK(effective_coupling(p, 0.0) == doctest::Approx(2.0).epsilon(1e-15));

    p.rabi = [](double) { return 0.0; };
    CHECK(effective_coupling(p, 0.0) == 0.0);

    p.omega_0 = 7.0;
    CHECK_THROWS_AS(effective_coupling(p, 0.0), std::domain_error);
}

TEST_CASE("pure_to_density embedding") {
    SUBCASE("excited left atom only") {
        PureState<double> s{1.0, 0.0, 0.0, 0.0, 0.0};
        const M5 rho = pure_to_density(s);
        CHECK(std::abs(rho(1, 1) - std::complex<double>(1, 0)) == 0.0);
        CHECK(std::abs(rho.trace() - std::complex<double>(1, 0)) < 1e-15);
    }
    SUBCASE("photon amplitude splits with the factor of two") {
        // beta_a^2 = 2 <g1g0| rho |g1g0>
        const double b = 0.6;
        PureState<double> s{std::sqrt(1 - b * b), 0.0, 0.0, b, 0.0};
        const M5 rho = pure_to_density(s);
        CHECK(rho(2, 2).real() == doctest::Approx(b * b / 2).epsilon(1e-14));
        CHECK(rho(4, 4).real() == doctest::Approx(b * b / 2).epsilon(1e-14));
    }
    SUBCASE("sech solution state at t = 0") {
        const auto s = sech_reference_state(0.0);
        CHECK(s.alpha1 == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(s.alpha2 == doctest::Approx(0.5).epsilon(1e-15));
        const M5 rho = pure_to_density(s);
        CHECK(std::abs(rho.trace() - std::complex<double>(1, 0)) < 1e-14);
        // Rank one: rho^2 = rho.
        CHECK((rho * rho - rho).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("norm violation rejected") {
        PureState<double> s{1.0, 1.0, 0.0, 0.0, 0.0};
        CHECK_THROWS_AS(pure_to_density(s), std::invalid_argument);
    }
}

TEST_CASE("trace equals squared norm of the input") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::Vector4d v;
        v << u(rng), u(rng), u(rng), u(rng);
        v.normalize();
        PureState<double> s{v(0), v(1), v(2), v(3), 0.0};
        const M5 rho = pure_to_density(s);
        CHECK(std::abs(rho.trace().real() - s.squared_norm()) < 1e-12);
        CHECK(std::abs(rho.trace().imag()) < 1e-15);
        CHECK((rho - rho.adjoint()).cwiseAbs().maxCoeff() < 1e-15);
    }
}

// Pins the beta_s/beta_a embedding sign: one Euler step of the master
// equation on |psi><psi| must match one Euler step of the trajectory
// equations on psi (zero-jump state, beta_s = 0) to second order in dt.
TEST_CASE("embedding agrees with the master equation over one Euler step") {
    const auto shape = sech_pulse<double>();
    const double sqrt2 = std::sqrt(2.0);
    for (const double t : {-1.3, 0.0, 0.7, 2.1}) {
        const auto s = sech_reference_state(t);
        const double g1 = shape.g1(t), g2 = shape.g2(t);

        for (const double dt : {1e-3, 1e-4}) {
            PureState<double> stepped;
            stepped.alpha1 = s.alpha1 + dt * g1 * s.beta_a / sqrt2;
            stepped.alpha2 = s.alpha2 - dt * g2 * s.beta_a / sqrt2;
            stepped.beta_s = 0.0;
            stepped.beta_a = s.beta_a + dt * (-g1 * s.alpha1 + g2 * s.alpha2) / sqrt2;
            const M5 via_trajectory = pure_to_density(stepped, 1e-2);
            const M5 via_master =
                pure_to_density(s) + dt * lindblad_rhs(pure_to_density(s), g1, g2);
            CHECK((via_trajectory - via_master).cwiseAbs().maxCoeff() < 10 * dt * dt);
        }
    }
}
