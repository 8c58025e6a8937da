#ifndef QST_ODE_HPP
#define QST_ODE_HPP

// Adaptive Dormand-Prince 5(4) integrator with 4th-order continuous output,
// shared by the trajectory, master-equation and noise-correction solvers.
// State is any fixed- or dynamic-size Eigen column vector with real or
// complex entries.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "qst/errors.hpp"

namespace qst {

template <typename Scalar>
struct IntegratorConfig {
    Scalar rel_tol{1e-9};
    Scalar abs_tol{1e-11};
    Scalar t_start{-15};
    Scalar t_end{15};
    bool dense_output{false};

    void validate() const {
        if (!(rel_tol > Scalar(0)) || !(abs_tol > Scalar(0)))
            throw ConfigError("integrator tolerances must be positive");
        if (!(t_end > t_start))
            throw ConfigError("integrator window requires t_end > t_start");
    }
};

namespace detail {

// Dormand-Prince 5(4) tableau, error weights and the coefficients of the
// standard quartic interpolant (Hairer, Norsett & Wanner, dopri5).
template <typename S>
struct Dopri5Tableau {
    static constexpr S c2 = S(1) / S(5), c3 = S(3) / S(10), c4 = S(4) / S(5),
                       c5 = S(8) / S(9);
    static constexpr S a21 = S(1) / S(5);
    static constexpr S a31 = S(3) / S(40), a32 = S(9) / S(40);
    static constexpr S a41 = S(44) / S(45), a42 = S(-56) / S(15), a43 = S(32) / S(9);
    static constexpr S a51 = S(19372) / S(6561), a52 = S(-25360) / S(2187),
                       a53 = S(64448) / S(6561), a54 = S(-212) / S(729);
    static constexpr S a61 = S(9017) / S(3168), a62 = S(-355) / S(33),
                       a63 = S(46732) / S(5247), a64 = S(49) / S(176),
                       a65 = S(-5103) / S(18656);
    static constexpr S b1 = S(35) / S(384), b3 = S(500) / S(1113), b4 = S(125) / S(192),
                       b5 = S(-2187) / S(6784), b6 = S(11) / S(84);
    static constexpr S e1 = S(71) / S(57600), e3 = S(-71) / S(16695), e4 = S(71) / S(1920),
                       e5 = S(-17253) / S(339200), e6 = S(22) / S(525), e7 = S(-1) / S(40);
    static constexpr S d1 = S(-12715105075.) / S(11282082432.);
    static constexpr S d3 = S(87487479700.) / S(32700410799.);
    static constexpr S d4 = S(-10690763975.) / S(1880347072.);
    static constexpr S d5 = S(701980252875.) / S(199316789632.);
    static constexpr S d6 = S(-1453857185.) / S(822651844.);
    static constexpr S d7 = S(69997945.) / S(29380423.);
};

}  // namespace detail

// One accepted step's interpolant: y(t0 + theta*h) for theta in [0, 1].
template <typename Scalar, typename State>
struct DenseSegment {
    Scalar t0, h;
    State r1, r2, r3, r4, r5;

    State eval(Scalar t) const {
        const Scalar theta = (t - t0) / h;
        const Scalar theta1 = Scalar(1) - theta;
        return r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5)));
    }
};

template <typename Scalar, typename State>
class DenseSolution {
  public:
    void add(DenseSegment<Scalar, State> seg) { segments_.push_back(std::move(seg)); }
    bool empty() const { return segments_.empty(); }

    State eval(Scalar t) const {
        if (segments_.empty()) throw NumericError("dense output was not recorded");
        // Last segment whose start is <= t; clamps to the integration window.
        std::size_t lo = 0, hi = segments_.size();
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (segments_[mid].t0 <= t)
                lo = mid;
            else
                hi = mid;
        }
        return segments_[lo].eval(t);
    }

  private:
    std::vector<DenseSegment<Scalar, State>> segments_;
};

template <typename Scalar, typename State>
struct OdeSolution {
    std::vector<Scalar> times;
    std::vector<State> states;
    DenseSolution<Scalar, State> dense;
    std::size_t n_steps{0};
    std::size_t n_rejected{0};

    const State& final_state() const { return states.back(); }
};

// Integrates dy/dt = rhs(t, y) over cfg's window. Rhs signature:
// void(Scalar t, const State& y, State& dydt).
template <typename Scalar, typename State, typename Rhs>
OdeSolution<Scalar, State> integrate_dopri5(Rhs&& rhs, const State& y0,
                                            const IntegratorConfig<Scalar>& cfg) {
    using T = detail::Dopri5Tableau<Scalar>;
    cfg.validate();

    const Scalar span = cfg.t_end - cfg.t_start;
    const Scalar atol = cfg.abs_tol, rtol = cfg.rel_tol;

    auto scaled_rms = [&](const State& v, const State& ya, const State& yb) -> Scalar {
        Scalar sum = 0;
        const auto n = v.size();
        for (Eigen::Index i = 0; i < n; ++i) {
            const Scalar sc =
                atol + rtol * std::max<Scalar>(std::abs(ya(i)), std::abs(yb(i)));
            const Scalar q = std::abs(v(i)) / sc;
            sum += q * q;
        }
        return std::sqrt(sum / Scalar(n));
    };

    State y = y0;
    Scalar t = cfg.t_start;
    State k1(y0.size()), k2(y0.size()), k3(y0.size()), k4(y0.size()), k5(y0.size()),
        k6(y0.size()), k7(y0.size()), ytmp(y0.size()), ynew(y0.size()), yerr(y0.size());

    rhs(t, y, k1);

    // Initial step size (Hairer's hinit, abridged).
    Scalar h;
    {
        const Scalar d0 = scaled_rms(y, y, y);
        const Scalar d1 = scaled_rms(k1, y, y);
        Scalar h0 = (d0 < Scalar(1e-5) || d1 < Scalar(1e-5)) ? Scalar(1e-6)
                                                             : Scalar(0.01) * d0 / d1;
        h0 = std::min(h0, span);
        ytmp = y + h0 * k1;
        rhs(t + h0, ytmp, k2);
        const Scalar d2 = scaled_rms(State(k2 - k1), y, y) / h0;
        Scalar h1;
        if (std::max(d1, d2) <= Scalar(1e-15))
            h1 = std::max(Scalar(1e-6), h0 * Scalar(1e-3));
        else
            h1 = std::pow(Scalar(0.01) / std::max(d1, d2), Scalar(1) / Scalar(5));
        h = std::min({Scalar(100) * h0, h1, span});
    }

    OdeSolution<Scalar, State> sol;
    sol.times.push_back(t);
    sol.states.push_back(y);

    const Scalar safe = Scalar(0.9), facmin = Scalar(0.2), facmax_normal = Scalar(5);
    Scalar facmax = facmax_normal;
    const std::size_t max_steps = 2'000'000;

    while (t < cfg.t_end) {
        if (sol.n_steps + sol.n_rejected > max_steps)
            throw NumericError("integrate_dopri5: step limit exceeded");
        if (t + h > cfg.t_end) h = cfg.t_end - t;
        if (!(h > Scalar(0)) || t + h == t)
            throw NumericError("integrate_dopri5: step size underflow");

        ytmp = y + h * (T::a21 * k1);
        rhs(t + T::c2 * h, ytmp, k2);
        ytmp = y + h * (T::a31 * k1 + T::a32 * k2);
        rhs(t + T::c3 * h, ytmp, k3);
        ytmp = y + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3);
        rhs(t + T::c4 * h, ytmp, k4);
        ytmp = y + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4);
        rhs(t + T::c5 * h, ytmp, k5);
        ytmp = y + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5);
        rhs(t + h, ytmp, k6);
        ynew = y + h * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 + T::b6 * k6);
        rhs(t + h, ynew, k7);  // FSAL

        yerr = h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 +
                    T::e7 * k7);
        const Scalar err = scaled_rms(yerr, y, ynew);

        if (err <= Scalar(1)) {
            if (cfg.dense_output) {
                DenseSegment<Scalar, State> seg;
                seg.t0 = t;
                seg.h = h;
                seg.r1 = y;
                seg.r2 = ynew - y;
                seg.r3 = h * k1 - seg.r2;
                seg.r4 = seg.r2 - h * k7 - seg.r3;
                seg.r5 = h * (T::d1 * k1 + T::d3 * k3 + T::d4 * k4 + T::d5 * k5 +
                              T::d6 * k6 + T::d7 * k7);
                sol.dense.add(std::move(seg));
            }
            t += h;
            y = ynew;
            k1 = k7;
            sol.times.push_back(t);
            sol.states.push_back(y);
            ++sol.n_steps;
            const Scalar fac =
                err == Scalar(0)
                    ? facmax
                    : std::min(facmax, std::max(facmin, safe * std::pow(err, Scalar(-0.2))));
            h *= fac;
            facmax = facmax_normal;
        } else {
            ++sol.n_rejected;
            h *= std::max(facmin, safe * std::pow(err, Scalar(-0.2)));
            facmax = Scalar(1);
        }
    }
    return sol;
}

}  // namespace qst

#endif  // QST_ODE_HPP
