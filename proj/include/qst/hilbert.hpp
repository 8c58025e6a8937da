#ifndef QST_HILBERT_HPP
#define QST_HILBERT_HPP

// Truncated single-excitation Hilbert space of the two-cavity transfer
// problem: basis B = {|g0g0>, |e0g0>, |g1g0>, |g0e0>, |g0g1>}, the cavity
// operators on it, and conversions between the real four-amplitude state
// vector and the 5x5 density matrix.
//
// Units: hbar = 1 and kappa = 1 everywhere; times in 1/kappa, couplings
// in kappa.

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>

#include <Eigen/Dense>

namespace qst {

inline constexpr int kDim = 5;

template <typename Scalar>
using Complex = std::complex<Scalar>;

template <typename Scalar>
using Matrix5 = Eigen::Matrix<Complex<Scalar>, kDim, kDim>;

template <typename Scalar>
using Vector5 = Eigen::Matrix<Complex<Scalar>, kDim, 1>;

// Basis kets in fixed order. Values are the 0-based matrix indices.
enum class BasisState : int { g0g0 = 0, e0g0 = 1, g1g0 = 2, g0e0 = 3, g0g1 = 4 };

constexpr int index(BasisState b) { return static_cast<int>(b); }

// The four real amplitudes of the no-jump state vector. beta_s is the
// symmetric photon mode (zero along any zero-jump trajectory), beta_a the
// antisymmetric one.
template <typename Scalar>
struct PureState {
    Scalar alpha1{0};
    Scalar alpha2{0};
    Scalar beta_s{0};
    Scalar beta_a{0};
    Scalar time{0};

    Scalar squared_norm() const {
        return alpha1 * alpha1 + alpha2 * alpha2 + beta_s * beta_s + beta_a * beta_a;
    }
};

// Photon annihilation operator of cavity j on B. Double-excitation images
// are truncated to zero, so a_j a_j = 0.
template <typename Scalar>
Matrix5<Scalar> annihilation_operator(int cavity) {
    if (cavity != 1 && cavity != 2)
        throw std::invalid_argument("annihilation_operator: cavity must be 1 or 2");
    Matrix5<Scalar> a = Matrix5<Scalar>::Zero();
    if (cavity == 1)
        a(index(BasisState::g0g0), index(BasisState::g1g0)) = Complex<Scalar>(1, 0);
    else
        a(index(BasisState::g0g0), index(BasisState::g0g1)) = Complex<Scalar>(1, 0);
    return a;
}

// Atom-cavity coupling Hamiltonian H_j = -i g (sigma_+^j a_j - a_j^dag sigma_-^j)
// after the laser-phase choice has removed all explicit phases. H_1 couples
// |e0g0> and |g1g0>, H_2 couples |g0e0> and |g0g1>. Hermitian by construction.
template <typename Scalar>
Matrix5<Scalar> coupling_hamiltonian(int cavity, Scalar g_value) {
    if (cavity != 1 && cavity != 2)
        throw std::invalid_argument("coupling_hamiltonian: cavity must be 1 or 2");
    if (!std::isfinite(static_cast<double>(g_value)))
        throw std::invalid_argument("coupling_hamiltonian: g_value must be finite");
    Matrix5<Scalar> h = Matrix5<Scalar>::Zero();
    const int up = cavity == 1 ? index(BasisState::e0g0) : index(BasisState::g0e0);
    const int ph = cavity == 1 ? index(BasisState::g1g0) : index(BasisState::g0g1);
    h(up, ph) = Complex<Scalar>(0, -g_value);
    h(ph, up) = Complex<Scalar>(0, g_value);
    return h;
}

// Lab-frame control parameters. The Rabi frequency Omega(t) and laser phase
// phi(t) are supplied as functions; the dipole element and polarisation enter
// only through Omega and are not represented separately.
template <typename Scalar>
struct LabFrameParams {
    Scalar omega_L{0};
    Scalar omega_0{0};
    Scalar g_bare{0};
    std::function<Scalar(Scalar)> rabi;
    std::function<Scalar(Scalar)> phase;
};

// Effective coupling g(t) = g Omega(t) / (omega_L - omega_0).
template <typename Scalar>
Scalar effective_coupling(const LabFrameParams<Scalar>& p, Scalar t) {
    const Scalar detuning = p.omega_L - p.omega_0;
    if (detuning == Scalar(0))
        throw std::domain_error("effective_coupling: zero laser-atom detuning");
    return p.g_bare * p.rabi(t) / detuning;
}

// Embeds the four amplitudes into B and forms |psi><psi|. The photon
// amplitudes are beta_1 = (beta_s - beta_a)/sqrt(2) on |g1g0> and
// beta_2 = (beta_s + beta_a)/sqrt(2) on |g0g1>; this is the unique
// symmetric/antisymmetric split consistent with the master equation of
// the cascaded system (see the one-Euler-step cross-check in the tests).
template <typename Scalar>
Vector5<Scalar> embed_amplitudes(const PureState<Scalar>& s) {
    const Scalar inv_sqrt2 = Scalar(1) / std::sqrt(Scalar(2));
    Vector5<Scalar> psi = Vector5<Scalar>::Zero();
    psi(index(BasisState::e0g0)) = Complex<Scalar>(s.alpha1, 0);
    psi(index(BasisState::g1g0)) = Complex<Scalar>((s.beta_s - s.beta_a) * inv_sqrt2, 0);
    psi(index(BasisState::g0e0)) = Complex<Scalar>(s.alpha2, 0);
    psi(index(BasisState::g0g1)) = Complex<Scalar>((s.beta_s + s.beta_a) * inv_sqrt2, 0);
    return psi;
}

template <typename Scalar>
Matrix5<Scalar> pure_to_density(const PureState<Scalar>& s, Scalar norm_tol = Scalar(1e-6)) {
    using std::abs;
    if (abs(s.squared_norm() - Scalar(1)) > norm_tol)
        throw std::invalid_argument("pure_to_density: state not normalised within tolerance");
    const Vector5<Scalar> psi = embed_amplitudes(s);
    return psi * psi.adjoint();
}

}  // namespace qst

#endif  // QST_HILBERT_HPP
