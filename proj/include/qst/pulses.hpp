#ifndef QST_PULSES_HPP
#define QST_PULSES_HPP

// Pulse shapes g1(t), g2(t) for the two-cavity transfer: the analytic sech
// solution, shapes generated from a seed on t >= 0 by the mirror-construction
// procedure, monotone-cubic interpolants of sampled points, and the
// perturbation profiles Delta_g used by the noise models.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qst/errors.hpp"
#include "qst/hilbert.hpp"
#include "qst/ode.hpp"

namespace qst {

// Couplings below this value (in kappa units) are treated as zero.
inline constexpr double kSupportCutoff = 1e-10;

enum class PulseKind { AnalyticSech, CiracConstructed, Sampled };

enum class NoiseKind { Amplitude, Timing };

template <typename Scalar>
struct PulseShape {
    PulseKind kind{PulseKind::AnalyticSech};
    std::function<Scalar(Scalar)> g1, g2;
    std::function<Scalar(Scalar)> g1_deriv, g2_deriv;
    Scalar support_lo{0}, support_hi{0};
    bool symmetric{true};  // g2(t) == g1(-t)
    std::string meta;

    const std::string& describe() const { return meta; }
};

template <typename Scalar>
struct SampledPulse {
    Scalar T{0};
    int n{0};
    std::vector<Scalar> values;  // g_j at t_j = j T / n, j = 0..n-1; g(T) = 0 implied
};

template <typename Scalar>
struct PerturbationProfile {
    int target{1};  // which pulse is noisy
    NoiseKind kind{NoiseKind::Amplitude};
    std::function<Scalar(Scalar)> delta_g;
};

// ---------------------------------------------------------------------------
// Analytic sech solution: g1 = g2 = sech(t), alpha2(t) = (1 + tanh t)/2.

template <typename Scalar>
PureState<Scalar> sech_reference_state(Scalar t) {
    PureState<Scalar> s;
    s.alpha1 = (Scalar(1) - std::tanh(t)) / Scalar(2);
    s.alpha2 = (Scalar(1) + std::tanh(t)) / Scalar(2);
    s.beta_s = Scalar(0);
    s.beta_a = -(Scalar(1) / std::cosh(t)) / std::sqrt(Scalar(2));
    s.time = t;
    return s;
}

template <typename Scalar>
PulseShape<Scalar> sech_pulse() {
    PulseShape<Scalar> p;
    p.kind = PulseKind::AnalyticSech;
    auto sech = [](Scalar t) { return Scalar(1) / std::cosh(t); };
    auto dsech = [sech](Scalar t) { return -sech(t) * std::tanh(t); };
    p.g1 = sech;
    p.g2 = sech;
    p.g1_deriv = dsech;
    p.g2_deriv = dsech;
    const Scalar t_cut = std::acosh(Scalar(1) / Scalar(kSupportCutoff));
    p.support_lo = -t_cut;
    p.support_hi = t_cut;
    p.symmetric = true;
    p.meta = "analytic-sech";
    return p;
}

// ---------------------------------------------------------------------------
// Shape-preserving cubic interpolation (Fritsch-Carlson / PCHIP slopes).
// Monotone on monotone data; never leaves the local data range, so
// nonnegative knots give a nonnegative interpolant.

template <typename Scalar>
class MonotoneCubic {
  public:
    MonotoneCubic(std::vector<Scalar> x, std::vector<Scalar> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n)
            throw std::invalid_argument("MonotoneCubic: need >= 2 knots");
        for (std::size_t i = 0; i + 1 < n; ++i)
            if (!(x_[i + 1] > x_[i]))
                throw std::invalid_argument("MonotoneCubic: knots must be increasing");
        std::vector<Scalar> h(n - 1), d(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = x_[i + 1] - x_[i];
            d[i] = (y_[i + 1] - y_[i]) / h[i];
        }
        m_.assign(n, Scalar(0));
        if (n == 2) {
            m_[0] = m_[1] = d[0];
        } else {
            // Interior: Fritsch-Butland weighted harmonic mean, zero across
            // local extrema.
            for (std::size_t i = 1; i + 1 < n; ++i) {
                if (d[i - 1] * d[i] <= Scalar(0)) {
                    m_[i] = Scalar(0);
                } else {
                    const Scalar w1 = Scalar(2) * h[i] + h[i - 1];
                    const Scalar w2 = h[i] + Scalar(2) * h[i - 1];
                    m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
                }
            }
            m_[0] = endpoint_slope(h[0], h[1], d[0], d[1]);
            m_[n - 1] = endpoint_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
        }
    }

    Scalar operator()(Scalar t) const {
        const std::size_t i = interval(t);
        const Scalar s = t - x_[i];
        Scalar c2, c3;
        coeffs(i, c2, c3);
        return y_[i] + s * (m_[i] + s * (c2 + s * c3));
    }

    Scalar derivative(Scalar t) const {
        const std::size_t i = interval(t);
        const Scalar s = t - x_[i];
        Scalar c2, c3;
        coeffs(i, c2, c3);
        return m_[i] + s * (Scalar(2) * c2 + s * Scalar(3) * c3);
    }

    Scalar x_front() const { return x_.front(); }
    Scalar x_back() const { return x_.back(); }

  private:
    static Scalar endpoint_slope(Scalar h0, Scalar h1, Scalar d0, Scalar d1) {
        // Standard PCHIP one-sided three-point rule with monotonicity clamp.
        Scalar m = ((Scalar(2) * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (m * d0 <= Scalar(0))
            m = Scalar(0);
        else if (d0 * d1 < Scalar(0) && std::abs(m) > Scalar(3) * std::abs(d0))
            m = Scalar(3) * d0;
        return m;
    }

    void coeffs(std::size_t i, Scalar& c2, Scalar& c3) const {
        const Scalar h = x_[i + 1] - x_[i];
        const Scalar d = (y_[i + 1] - y_[i]) / h;
        c2 = (Scalar(3) * d - Scalar(2) * m_[i] - m_[i + 1]) / h;
        c3 = (m_[i] + m_[i + 1] - Scalar(2) * d) / (h * h);
    }

    std::size_t interval(Scalar t) const {
        if (t <= x_.front()) return 0;
        if (t >= x_.back()) return x_.size() - 2;
        std::size_t lo = 0, hi = x_.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (x_[mid] <= t)
                lo = mid;
            else
                hi = mid;
        }
        return lo;
    }

    std::vector<Scalar> x_, y_, m_;
};

// ---------------------------------------------------------------------------
// Mirror construction: given g1 on t >= 0, integrate the reduced zero-jump
// system and extend g1 to t < 0 so that the symmetric pulse condition
// g2(t) = g1(-t) yields a perfect transfer.

namespace detail {

template <typename Scalar>
using State2 = Eigen::Matrix<Scalar, 2, 1>;  // (alpha1, beta_a)

// Step 2 of the construction: alpha1' = g1 beta_a / sqrt(2),
// beta_a' = -sqrt(2) g1 alpha1 - kappa beta_a, from
// alpha1(0) = kappa / sqrt(2 (g1(0)^2 + kappa^2)),
// beta_a(0) = -sqrt(1 - 2 alpha1(0)^2).
template <typename Scalar>
State2<Scalar> construction_initial_state(Scalar g_at_0) {
    if (!(g_at_0 > Scalar(0)))
        throw InfeasibleError("invalid-seed: g1(0) must be positive");
    const Scalar kappa(1);
    State2<Scalar> y0;
    y0(0) = kappa / std::sqrt(Scalar(2) * (g_at_0 * g_at_0 + kappa * kappa));
    y0(1) = -std::sqrt(Scalar(1) - Scalar(2) * y0(0) * y0(0));
    return y0;
}

template <typename Scalar, typename Seed>
OdeSolution<Scalar, State2<Scalar>> integrate_construction(const Seed& seed, Scalar s_end,
                                                           Scalar rel_tol, Scalar abs_tol,
                                                           bool dense) {
    const Scalar kappa(1);
    const Scalar sqrt2 = std::sqrt(Scalar(2));
    auto rhs = [&seed, kappa, sqrt2](Scalar s, const State2<Scalar>& y,
                                     State2<Scalar>& dy) {
        const Scalar g = seed(s);
        dy(0) = g * y(1) / sqrt2;
        dy(1) = -sqrt2 * g * y(0) - kappa * y(1);
    };
    IntegratorConfig<Scalar> cfg;
    cfg.rel_tol = rel_tol;
    cfg.abs_tol = abs_tol;
    cfg.t_start = Scalar(0);
    cfg.t_end = s_end;
    cfg.dense_output = dense;
    return integrate_dopri5(rhs, construction_initial_state(seed(Scalar(0))), cfg);
}

// Central difference fallback for seeds supplied without a derivative.
template <typename Scalar>
Scalar seed_derivative_fd(const std::function<Scalar(Scalar)>& f, Scalar t) {
    const Scalar h = Scalar(1e-6) * std::max(Scalar(1), std::abs(t));
    if (t - h < Scalar(0)) return (f(t + h) - f(t)) / h;
    return (f(t + h) - f(t - h)) / (Scalar(2) * h);
}

}  // namespace detail

template <typename Scalar>
struct ConstructionSeed {
    std::function<Scalar(Scalar)> value;             // g1 on t >= 0
    std::function<Scalar(Scalar)> derivative;        // optional
    Scalar support_end{0};                           // seed ~ 0 beyond this (0 = scan)
};

template <typename Scalar>
PulseShape<Scalar> cirac_construct(ConstructionSeed<Scalar> seed, PulseKind kind,
                                   std::string meta,
                                   Scalar rel_tol = Scalar(1e-10),
                                   Scalar abs_tol = Scalar(1e-12)) {
    const Scalar kappa(1);
    const Scalar sqrt2 = std::sqrt(Scalar(2));

    if (!seed.derivative) {
        auto f = seed.value;
        seed.derivative = [f](Scalar t) { return detail::seed_derivative_fd<Scalar>(f, t); };
    }
    if (seed.support_end <= Scalar(0)) {
        // Find where the seed has decayed below the cutoff.
        Scalar end = Scalar(60);
        for (Scalar s = Scalar(60); s >= Scalar(0); s -= Scalar(0.25)) {
            if (std::abs(seed.value(s)) >= Scalar(kSupportCutoff)) break;
            end = s;
        }
        seed.support_end = end;
    }

    // The mirrored branch decays like e^{-kappa s} once the seed is gone;
    // 30/kappa of headroom brings it below the support cutoff.
    const Scalar s_max = seed.support_end + Scalar(30);
    auto sol = std::make_shared<OdeSolution<Scalar, detail::State2<Scalar>>>(
        detail::integrate_construction<Scalar>(seed.value, s_max, rel_tol, abs_tol, true));

    struct Branch {
        std::shared_ptr<OdeSolution<Scalar, detail::State2<Scalar>>> sol;
        std::function<Scalar(Scalar)> seed, seed_deriv;
        Scalar kappa, sqrt2;

        // g1 on t < 0 evaluated at s = |t|.
        Scalar value(Scalar s) const {
            const auto y = sol->dense.eval(s);
            const Scalar a1 = y(0), ba = y(1);
            const Scalar a2sq = Scalar(1) - a1 * a1 - ba * ba;
            const Scalar a2 = std::sqrt(std::max(a2sq, Scalar(0)));
            const Scalar num = -(sqrt2 * kappa * ba + seed(s) * a1);
            if (a2 < Scalar(1e-8)) {
                if (std::abs(num) > Scalar(1e-8))
                    throw InfeasibleError("construction-singular: alpha2 vanished with nonzero numerator");
                return Scalar(0);
            }
            return num / a2;
        }

        Scalar deriv(Scalar s) const {
            const auto y = sol->dense.eval(s);
            const Scalar a1 = y(0), ba = y(1);
            const Scalar g = seed(s), gp = seed_deriv(s);
            const Scalar a2 = std::sqrt(std::max(Scalar(1) - a1 * a1 - ba * ba, Scalar(0)));
            if (a2 < Scalar(1e-8)) return Scalar(0);
            const Scalar a1dot = g * ba / sqrt2;
            const Scalar badot = -sqrt2 * g * a1 - kappa * ba;
            const Scalar a2dot = -(a1 * a1dot + ba * badot) / a2;
            const Scalar num = -(sqrt2 * kappa * ba + g * a1);
            const Scalar numdot = -(sqrt2 * kappa * badot + gp * a1 + g * a1dot);
            return numdot / a2 - num * a2dot / (a2 * a2);
        }
    };
    auto branch = std::make_shared<Branch>(
        Branch{sol, seed.value, seed.derivative, kappa, sqrt2});

    // Reject seeds whose mirror extension turns negative.
    Scalar tail_end = s_max;
    {
        Scalar min_val = Scalar(0);
        bool tail_found = false;
        for (Scalar s = s_max; s >= Scalar(0); s -= Scalar(0.05)) {
            const Scalar v = branch->value(s);
            min_val = std::min(min_val, v);
            if (!tail_found && std::abs(v) >= Scalar(kSupportCutoff)) {
                tail_end = s;
                tail_found = true;
            }
        }
        if (min_val < Scalar(-1e-7))
            throw InfeasibleError("invalid-seed: construction produced negative coupling");
    }

    PulseShape<Scalar> p;
    p.kind = kind;
    p.meta = std::move(meta);
    p.symmetric = true;
    auto seed_fn = seed.value;
    auto seed_dfn = seed.derivative;
    p.g1 = [branch, seed_fn](Scalar t) {
        return t >= Scalar(0) ? seed_fn(t) : branch->value(-t);
    };
    p.g1_deriv = [branch, seed_dfn](Scalar t) {
        return t >= Scalar(0) ? seed_dfn(t) : -branch->deriv(-t);
    };
    auto g1 = p.g1;
    auto g1d = p.g1_deriv;
    p.g2 = [g1](Scalar t) { return g1(-t); };
    p.g2_deriv = [g1d](Scalar t) { return -g1d(-t); };
    // g1 lives on [-tail_end, seed_end]; g2 on the mirror image.
    p.support_lo = std::min(-tail_end, -seed.support_end);
    p.support_hi = std::max(seed.support_end, tail_end);
    return p;
}

template <typename Scalar>
PulseShape<Scalar> cirac_construct(std::function<Scalar(Scalar)> g1_positive) {
    ConstructionSeed<Scalar> seed;
    seed.value = std::move(g1_positive);
    return cirac_construct(std::move(seed), PulseKind::CiracConstructed, "cirac-constructed");
}

// ---------------------------------------------------------------------------
// Sampled pulses: g_j at t_j = j T / n plus the pinned zero at t = T,
// monotone-cubic interpolated, mirror-constructed for t < 0.

template <typename Scalar>
PulseShape<Scalar> sampled_to_shape(const SampledPulse<Scalar>& p) {
    if (p.n < 2) throw std::invalid_argument("sampled_to_shape: need n >= 2");
    if (!(p.T > Scalar(0))) throw std::invalid_argument("sampled_to_shape: need T > 0");
    if (static_cast<int>(p.values.size()) != p.n)
        throw std::invalid_argument("sampled_to_shape: values.size() != n");
    for (const Scalar v : p.values)
        if (v < Scalar(0)) throw std::invalid_argument("sampled_to_shape: negative sample");

    std::vector<Scalar> xs(p.n + 1), ys(p.n + 1);
    for (int j = 0; j < p.n; ++j) {
        xs[j] = Scalar(j) * p.T / Scalar(p.n);
        ys[j] = p.values[j];
    }
    xs[p.n] = p.T;
    ys[p.n] = Scalar(0);
    auto interp = std::make_shared<MonotoneCubic<Scalar>>(std::move(xs), std::move(ys));

    // The FC limiter keeps the cubic inside the local data range; verify.
    for (int i = 0; i <= 40 * p.n; ++i) {
        const Scalar t = p.T * Scalar(i) / Scalar(40 * p.n);
        if ((*interp)(t) < Scalar(-1e-12))
            throw InfeasibleError("invalid-pulse: interpolant dips below zero");
    }

    const Scalar T = p.T;
    ConstructionSeed<Scalar> seed;
    seed.value = [interp, T](Scalar t) { return t < T ? (*interp)(t) : Scalar(0); };
    seed.derivative = [interp, T](Scalar t) {
        return t < T ? interp->derivative(t) : Scalar(0);
    };
    seed.support_end = T;

    std::ostringstream meta;
    meta << "sampled(n=" << p.n << ",T=" << static_cast<double>(p.T) << ")";
    return cirac_construct(std::move(seed), PulseKind::Sampled, meta.str());
}

// ---------------------------------------------------------------------------
// Perturbation profiles. Amplitude errors scale with the pulse itself,
// Delta_g = g_j; timing errors enter through Delta_g = g2', and only the
// second pulse carries them (the first defines the origin of time).

template <typename Scalar>
PerturbationProfile<Scalar> perturbation(const PulseShape<Scalar>& shape, NoiseKind kind,
                                         int target) {
    if (target != 1 && target != 2)
        throw std::invalid_argument("perturbation: target must be 1 or 2");
    PerturbationProfile<Scalar> prof;
    prof.target = target;
    prof.kind = kind;
    if (kind == NoiseKind::Amplitude) {
        prof.delta_g = target == 1 ? shape.g1 : shape.g2;
    } else {
        if (target != 2)
            throw std::invalid_argument("perturbation: timing noise is defined on pulse 2 only");
        prof.delta_g = shape.g2_deriv;
    }
    return prof;
}

}  // namespace qst

#endif  // QST_PULSES_HPP
