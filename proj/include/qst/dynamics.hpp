#ifndef QST_DYNAMICS_HPP
#define QST_DYNAMICS_HPP

// Dynamics of the cascaded two-cavity system: the zero-jump trajectory
// equations, the cascaded Lindblad master equation, and the inhomogeneous
// first-order noise-correction equation, all driven by the shared
// Dormand-Prince integrator.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qst/errors.hpp"
#include "qst/hilbert.hpp"
#include "qst/ode.hpp"
#include "qst/pulses.hpp"

namespace qst {

// White-noise model: delta-correlated <xi_j(t) xi_j(t')> = eps_j delta(t-t'),
// the only correlation supported. epsilon carries units of time and scales
// the correction in <rho> = rho0 + eps_1 Drho_1 + eps_2 Drho_2; the stored
// corrections themselves are epsilon-stripped.
template <typename Scalar>
struct NoiseModel {
    PerturbationProfile<Scalar> profile;
    Scalar epsilon{1};

    void validate() const {
        if (epsilon < Scalar(0)) throw std::invalid_argument("NoiseModel: epsilon must be >= 0");
        if (!profile.delta_g) throw std::invalid_argument("NoiseModel: missing delta_g");
    }
};

// Expands the default window so the pulse tails (and the photon remnant
// behind them) are inside the integration range.
template <typename Scalar>
IntegratorConfig<Scalar> window_for(const PulseShape<Scalar>& shape,
                                    IntegratorConfig<Scalar> base = {}) {
    base.t_start = std::min(base.t_start, shape.support_lo - Scalar(2));
    base.t_end = std::max(base.t_end, shape.support_hi + Scalar(2));
    return base;
}

// ---------------------------------------------------------------------------
// Right-hand side of the cascaded master equation,
//   drho/dt = -i [H1 + H2, rho] + kappa L{rho},
// with the unidirectional dissipator
//   L{rho} = 2 a1 rho a1+ - {a1+ a1, rho} + 2 a2 rho a2+ - {a2+ a2, rho}
//            - 2 ([a2+, a1 rho] + [rho a1+, a2]).
// The output is symmetrised, so Hermitian input maps to Hermitian output
// exactly; the trace of the output vanishes identically.

template <typename Scalar>
Matrix5<Scalar> lindblad_rhs(const Matrix5<Scalar>& rho, Scalar g1, Scalar g2) {
    static const Matrix5<Scalar> a1 = annihilation_operator<Scalar>(1);
    static const Matrix5<Scalar> a2 = annihilation_operator<Scalar>(2);
    static const Matrix5<Scalar> n1 = (a1.adjoint() * a1).eval();
    static const Matrix5<Scalar> n2 = (a2.adjoint() * a2).eval();

    const Scalar kappa(1);
    const Complex<Scalar> im(0, 1);

    Matrix5<Scalar> ham = Matrix5<Scalar>::Zero();
    ham(index(BasisState::e0g0), index(BasisState::g1g0)) = Complex<Scalar>(0, -g1);
    ham(index(BasisState::g1g0), index(BasisState::e0g0)) = Complex<Scalar>(0, g1);
    ham(index(BasisState::g0e0), index(BasisState::g0g1)) = Complex<Scalar>(0, -g2);
    ham(index(BasisState::g0g1), index(BasisState::g0e0)) = Complex<Scalar>(0, g2);

    const Matrix5<Scalar> a1rho = a1 * rho;
    const Matrix5<Scalar> rhoa1d = rho * a1.adjoint();

    Matrix5<Scalar> diss = Scalar(2) * (a1rho * a1.adjoint()) - n1 * rho - rho * n1 +
                           Scalar(2) * (a2 * rho * a2.adjoint()) - n2 * rho - rho * n2 -
                           Scalar(2) * (a2.adjoint() * a1rho - a1rho * a2.adjoint() +
                                        rhoa1d * a2 - a2 * rhoa1d);

    Matrix5<Scalar> out = -im * (ham * rho - rho * ham) + kappa * diss;
    return Scalar(0.5) * (out + out.adjoint());
}

// First-order Hamiltonian response to the pulse perturbation,
// h_j(t) = H_j evaluated at Delta_g_j(t).
template <typename Scalar>
Matrix5<Scalar> noise_hamiltonian(const PerturbationProfile<Scalar>& profile, Scalar t) {
    return coupling_hamiltonian<Scalar>(profile.target, profile.delta_g(t));
}

// ---------------------------------------------------------------------------
// Zero-jump trajectory: alpha1' = g1 beta_a / sqrt2, alpha2' = -g2 beta_a / sqrt2,
// beta_s held at 0, beta_a' = (-g1 alpha1 + g2 alpha2)/sqrt2 from the
// normalisation condition.

template <typename Scalar>
struct TrajectorySolution {
    std::vector<Scalar> times;
    std::vector<PureState<Scalar>> states;
    std::vector<Scalar> residual;  // zero-jump residual g1 a1/sqrt2 + g2 a2/sqrt2 + kappa b_a
    Scalar max_residual{0};
    Scalar max_norm_drift{0};
    DenseSolution<Scalar, Eigen::Matrix<Scalar, 3, 1>> dense;

    PureState<Scalar> eval(Scalar t) const {
        const auto y = dense.eval(t);
        return PureState<Scalar>{y(0), y(1), Scalar(0), y(2), t};
    }
};

template <typename Scalar>
TrajectorySolution<Scalar> integrate_trajectory(const PulseShape<Scalar>& shape,
                                                const IntegratorConfig<Scalar>& cfg) {
    using State3 = Eigen::Matrix<Scalar, 3, 1>;
    const Scalar kappa(1);
    const Scalar inv_sqrt2 = Scalar(1) / std::sqrt(Scalar(2));

    auto rhs = [&shape, inv_sqrt2](Scalar t, const State3& y, State3& dy) {
        const Scalar g1 = shape.g1(t), g2 = shape.g2(t);
        dy(0) = g1 * y(2) * inv_sqrt2;
        dy(1) = -g2 * y(2) * inv_sqrt2;
        dy(2) = (-g1 * y(0) + g2 * y(1)) * inv_sqrt2;
    };

    State3 y0;
    y0 << Scalar(1), Scalar(0), Scalar(0);
    auto sol = integrate_dopri5(rhs, y0, cfg);

    TrajectorySolution<Scalar> out;
    out.times = sol.times;
    out.dense = std::move(sol.dense);
    out.states.reserve(sol.states.size());
    out.residual.reserve(sol.states.size());
    for (std::size_t i = 0; i < sol.states.size(); ++i) {
        const auto& y = sol.states[i];
        const Scalar t = sol.times[i];
        out.states.push_back(PureState<Scalar>{y(0), y(1), Scalar(0), y(2), t});
        const Scalar r = shape.g1(t) * y(0) * inv_sqrt2 + shape.g2(t) * y(1) * inv_sqrt2 +
                         kappa * y(2);
        out.residual.push_back(r);
        out.max_residual = std::max(out.max_residual, std::abs(r));
        out.max_norm_drift =
            std::max(out.max_norm_drift, std::abs(y.squaredNorm() - Scalar(1)));
    }
    if (out.max_norm_drift > Scalar(1e-6))
        throw NumericError("integration-failure: trajectory norm drift " +
                           std::to_string(static_cast<double>(out.max_norm_drift)));
    return out;
}

// ---------------------------------------------------------------------------
// Noiseless master equation from rho(t_start) = |e0g0><e0g0|.

template <typename Scalar>
struct MasterSolution {
    std::vector<Scalar> times;
    std::vector<Matrix5<Scalar>> states;
    Scalar max_trace_drift{0};
    DenseSolution<Scalar, Eigen::Matrix<Complex<Scalar>, 25, 1>> dense;

    Matrix5<Scalar> eval(Scalar t) const {
        const auto y = dense.eval(t);
        return Eigen::Map<const Matrix5<Scalar>>(y.data());
    }

    // Transfer fidelity <g0e0| rho(t_end) |g0e0>.
    Scalar fidelity() const {
        return states.back()(index(BasisState::g0e0), index(BasisState::g0e0)).real();
    }
};

template <typename Scalar>
MasterSolution<Scalar> evolve_master(const PulseShape<Scalar>& shape,
                                     const IntegratorConfig<Scalar>& cfg) {
    using StateM = Eigen::Matrix<Complex<Scalar>, 25, 1>;

    auto rhs = [&shape](Scalar t, const StateM& y, StateM& dy) {
        Eigen::Map<const Matrix5<Scalar>> rho(y.data());
        Eigen::Map<Matrix5<Scalar>> drho(dy.data());
        drho = lindblad_rhs<Scalar>(rho, shape.g1(t), shape.g2(t));
    };

    StateM y0 = StateM::Zero();
    Matrix5<Scalar> rho0 = Matrix5<Scalar>::Zero();
    rho0(index(BasisState::e0g0), index(BasisState::e0g0)) = Complex<Scalar>(1, 0);
    Eigen::Map<Matrix5<Scalar>>(y0.data()) = rho0;

    auto sol = integrate_dopri5(rhs, y0, cfg);

    MasterSolution<Scalar> out;
    out.times = sol.times;
    out.dense = std::move(sol.dense);
    out.states.reserve(sol.states.size());
    for (const auto& y : sol.states) {
        out.states.emplace_back(Eigen::Map<const Matrix5<Scalar>>(y.data()));
        const Scalar drift = std::abs(out.states.back().trace() - Complex<Scalar>(1, 0));
        out.max_trace_drift = std::max(out.max_trace_drift, drift);
    }
    if (out.max_trace_drift > Scalar(1e-8))
        throw NumericError("integration-failure: master-equation trace drift " +
                           std::to_string(static_cast<double>(out.max_trace_drift)));
    return out;
}

// ---------------------------------------------------------------------------
// Joint integration of rho0 and the epsilon-stripped corrections
//   dDrho_j/dt = -i[H1+H2, Drho_j] + kappa L{Drho_j} - (1/2)[h_j, [h_j, rho0]],
// co-integrated in one state vector so the inhomogeneous term never needs
// interpolation.

template <typename Scalar>
struct JointSolution {
    std::vector<Scalar> times;
    std::vector<Matrix5<Scalar>> rho0;
    std::vector<std::vector<Matrix5<Scalar>>> delta_rho;  // [model][step]
    Scalar max_trace_drift{0};        // rho0
    Scalar max_correction_trace{0};   // any Drho_j

    Scalar fidelity() const {
        return rho0.back()(index(BasisState::g0e0), index(BasisState::g0e0)).real();
    }

    Scalar eta(std::size_t model, std::size_t step) const {
        return delta_rho[model][step](index(BasisState::g0e0), index(BasisState::g0e0))
            .real();
    }
};

template <typename Scalar>
JointSolution<Scalar> evolve_with_correction(const PulseShape<Scalar>& shape,
                                             const std::vector<NoiseModel<Scalar>>& models,
                                             const IntegratorConfig<Scalar>& cfg) {
    using StateJ = Eigen::Matrix<Complex<Scalar>, Eigen::Dynamic, 1>;
    for (const auto& m : models) m.validate();
    const std::size_t nm = models.size();
    const Eigen::Index dim = 25 * static_cast<Eigen::Index>(1 + nm);

    auto rhs = [&shape, &models, nm](Scalar t, const StateJ& y, StateJ& dy) {
        const Scalar g1 = shape.g1(t), g2 = shape.g2(t);
        Eigen::Map<const Matrix5<Scalar>> rho0(y.data());
        Eigen::Map<Matrix5<Scalar>> drho0(dy.data());
        drho0 = lindblad_rhs<Scalar>(rho0, g1, g2);
        for (std::size_t j = 0; j < nm; ++j) {
            Eigen::Map<const Matrix5<Scalar>> delta(y.data() + 25 * (j + 1));
            Eigen::Map<Matrix5<Scalar>> ddelta(dy.data() + 25 * (j + 1));
            const Matrix5<Scalar> h = noise_hamiltonian(models[j].profile, t);
            const Matrix5<Scalar> inner = h * rho0 - rho0 * h;
            ddelta = lindblad_rhs<Scalar>(delta, g1, g2) -
                     Scalar(0.5) * (h * inner - inner * h);
        }
    };

    StateJ y0 = StateJ::Zero(dim);
    y0(5 * index(BasisState::e0g0) + index(BasisState::e0g0)) = Complex<Scalar>(1, 0);

    auto sol = integrate_dopri5(rhs, y0, cfg);

    JointSolution<Scalar> out;
    out.times = sol.times;
    out.rho0.reserve(sol.states.size());
    out.delta_rho.assign(nm, {});
    for (auto& v : out.delta_rho) v.reserve(sol.states.size());

    for (const auto& y : sol.states) {
        out.rho0.emplace_back(Eigen::Map<const Matrix5<Scalar>>(y.data()));
        out.max_trace_drift = std::max(
            out.max_trace_drift, std::abs(out.rho0.back().trace() - Complex<Scalar>(1, 0)));
        for (std::size_t j = 0; j < nm; ++j) {
            out.delta_rho[j].emplace_back(
                Eigen::Map<const Matrix5<Scalar>>(y.data() + 25 * (j + 1)));
            const auto& d = out.delta_rho[j].back();
            out.max_correction_trace =
                std::max(out.max_correction_trace, std::abs(d.trace()));
            if (d.cwiseAbs().maxCoeff() > Scalar(1e3))
                throw NumericError(
                    "correction overflow: perturbative treatment invalid for this pulse");
        }
    }
    if (out.max_trace_drift > Scalar(1e-9))
        throw NumericError("integration-failure: rho0 trace drift");
    if (out.max_correction_trace > Scalar(1e-9))
        throw NumericError("integration-failure: correction trace nonzero");
    return out;
}

}  // namespace qst

#endif  // QST_DYNAMICS_HPP
