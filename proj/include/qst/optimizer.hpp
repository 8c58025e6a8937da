#ifndef QST_OPTIMIZER_HPP
#define QST_OPTIMIZER_HPP

// Numerical-substitution optimisation of discretised pulse shapes against
// noise sensitivity: g_0 is solved from the transfer constraint, the free
// points g_1..g_{n-1} are optimised derivative-free, plus the T-sweep and
// the hyperbolic extrapolation fit.

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qst/dynamics.hpp"
#include "qst/errors.hpp"
#include "qst/pulses.hpp"
#include "qst/sensitivity.hpp"

namespace qst {

template <typename Scalar>
struct OptimizationProblem {
    int n{3};                     // total discretisation points g_0..g_{n-1}
    Scalar T{10};                 // pulse end time; g(T) = 0
    NoiseKind noise_kind{NoiseKind::Amplitude};
    Scalar g_max{20};             // per-point bound [0, g_max]
    Scalar simplex_tol{1e-5};     // simplex diameter convergence criterion
    int max_evals{2000};
    unsigned seed{1};             // initial-simplex perturbation seed
    IntegratorConfig<Scalar> integrator{};

    void validate() const {
        if (n < 2) throw std::invalid_argument("OptimizationProblem: n must be >= 2");
        if (!(T > Scalar(0))) throw std::invalid_argument("OptimizationProblem: T must be > 0");
        if (!(g_max > Scalar(0)))
            throw std::invalid_argument("OptimizationProblem: g_max must be > 0");
    }
};

template <typename Scalar>
struct OptimizationResult {
    std::vector<Scalar> points;   // optimal g_0..g_{n-1}
    Scalar eta_final{0};
    Scalar fidelity{0};
    int evaluation_count{0};
    bool converged{false};
    Scalar constraint_residual{0};  // |alpha1(T)| of the reported pulse
    int n{0};
    Scalar T{0};
};

namespace detail {

// alpha1(T) of the step-2 construction trajectory for a candidate g_0.
// Zero means the mirrored pulse absorbs the photon completely.
template <typename Scalar>
Scalar constraint_mismatch(Scalar g0, const std::vector<Scalar>& free_points, Scalar T,
                           int n, Scalar rel_tol, Scalar abs_tol) {
    std::vector<Scalar> xs(n + 1), ys(n + 1);
    for (int j = 0; j < n; ++j) {
        xs[j] = Scalar(j) * T / Scalar(n);
        ys[j] = j == 0 ? g0 : free_points[j - 1];
    }
    xs[n] = T;
    ys[n] = Scalar(0);
    MonotoneCubic<Scalar> interp(std::move(xs), std::move(ys));
    auto seed = [&interp, T](Scalar t) { return t < T ? interp(t) : Scalar(0); };
    auto sol = integrate_construction<Scalar>(seed, T, rel_tol, abs_tol, false);
    return sol.final_state()(0);
}

}  // namespace detail

// Solves for g_0 > 0 such that the pulse interpolated through
// (0, g_0), (jT/n, g_j), (T, 0) satisfies the transfer constraint
// alpha1(T) = 0 along the step-2 trajectory. Bracket scan on
// [1e-3, 20] kappa, geometrically expanded to 1e3 on failure, then
// secant iteration with bisection safeguard.
template <typename Scalar>
Scalar solve_constraint(const std::vector<Scalar>& free_points, Scalar T,
                        Scalar rel_tol = Scalar(1e-10), Scalar abs_tol = Scalar(1e-12)) {
    const int n = static_cast<int>(free_points.size()) + 1;
    if (!(T > Scalar(0))) throw std::invalid_argument("solve_constraint: T must be > 0");
    for (const Scalar v : free_points)
        if (v < Scalar(0))
            throw std::invalid_argument("solve_constraint: free points must be >= 0");

    auto mismatch = [&](Scalar g0) {
        return detail::constraint_mismatch(g0, free_points, T, n, rel_tol, abs_tol);
    };

    // Scan for a sign change, densifying from the low end so the smallest
    // (smoothest) root is picked up first.
    Scalar lo = Scalar(1e-3), hi = Scalar(20);
    Scalar bracket_lo = 0, bracket_hi = 0, f_lo = 0, f_hi = 0;
    bool found = false;
    while (!found) {
        const int n_scan = 48;
        Scalar prev_g = lo, prev_f = mismatch(lo);
        for (int i = 1; i <= n_scan; ++i) {
            const Scalar g = lo * std::pow(hi / lo, Scalar(i) / Scalar(n_scan));
            const Scalar f = mismatch(g);
            if (prev_f == Scalar(0)) return prev_g;
            if (prev_f * f < Scalar(0)) {
                bracket_lo = prev_g;
                bracket_hi = g;
                f_lo = prev_f;
                f_hi = f;
                found = true;
                break;
            }
            prev_g = g;
            prev_f = f;
        }
        if (!found) {
            if (hi >= Scalar(1e3)) {
                std::ostringstream msg;
                msg << "constraint-infeasible: no alpha1(T) sign change for g0 in [1e-3, "
                    << static_cast<double>(hi) << "]";
                throw InfeasibleError(msg.str());
            }
            lo = hi;
            hi = std::min(hi * Scalar(4), Scalar(1e3));
        }
    }

    // Secant with bisection fallback on the bracket.
    Scalar a = bracket_lo, b = bracket_hi, fa = f_lo, fb = f_hi;
    for (int iter = 0; iter < 200; ++iter) {
        Scalar c;
        if (fb != fa) {
            c = b - fb * (b - a) / (fb - fa);
            if (!(c > a && c < b)) c = (a + b) / Scalar(2);
        } else {
            c = (a + b) / Scalar(2);
        }
        const Scalar fc = mismatch(c);
        if (std::abs(fc) < Scalar(1e-11) || (b - a) < Scalar(1e-14) * std::max(Scalar(1), b))
            return c;
        if (fa * fc < Scalar(0)) {
            b = c;
            fb = fc;
        } else {
            a = c;
            fa = fc;
        }
    }
    throw InfeasibleError("constraint-infeasible: secant iteration did not converge");
}

namespace detail {

template <typename Scalar>
struct ObjectiveEval {
    Scalar value;  // -eta_final (to be minimised)
    Scalar g0;
    Scalar fidelity;
    bool feasible;
};

template <typename Scalar>
class PulseObjective {
  public:
    explicit PulseObjective(const OptimizationProblem<Scalar>& prob) : prob_(prob) {}

    ObjectiveEval<Scalar> operator()(const std::vector<Scalar>& x) {
        ++count_;
        ObjectiveEval<Scalar> ev{Scalar(1e6), Scalar(0), Scalar(0), false};
        Scalar bound_penalty = Scalar(0);
        for (const Scalar v : x) {
            if (v < Scalar(0)) bound_penalty += v * v;
            if (v > prob_.g_max) bound_penalty += (v - prob_.g_max) * (v - prob_.g_max);
        }
        if (bound_penalty > Scalar(0)) {
            ev.value = Scalar(1e6) + bound_penalty;
            ++consecutive_failures_;
            check_failures();
            return ev;
        }
        try {
            const Scalar g0 = solve_constraint(x, prob_.T, prob_.integrator.rel_tol,
                                               prob_.integrator.abs_tol);
            if (g0 > prob_.g_max) {
                ev.value = Scalar(1e5) + g0;
                ++consecutive_failures_;
                check_failures();
                return ev;
            }
            SampledPulse<Scalar> sp;
            sp.T = prob_.T;
            sp.n = prob_.n;
            sp.values.push_back(g0);
            sp.values.insert(sp.values.end(), x.begin(), x.end());
            const auto shape = sampled_to_shape(sp);
            const auto cfg = window_for(shape, prob_.integrator);
            std::vector<NoiseModel<Scalar>> models;
            if (prob_.noise_kind == NoiseKind::Amplitude)
                models.push_back({perturbation(shape, NoiseKind::Amplitude, 1), Scalar(1)});
            else
                models.push_back({perturbation(shape, NoiseKind::Timing, 2), Scalar(1)});
            const auto rep = noise_sensitivity(shape, models, cfg);
            ev.value = -rep.eta_final.front();
            ev.g0 = g0;
            ev.fidelity = rep.fidelity;
            ev.feasible = true;
            consecutive_failures_ = 0;
        } catch (const InfeasibleError&) {
            ev.value = Scalar(8e5);
            ++consecutive_failures_;
            check_failures();
        } catch (const NumericError&) {
            ev.value = Scalar(9e5);
            ++consecutive_failures_;
            check_failures();
        }
        return ev;
    }

    int count() const { return count_; }

  private:
    void check_failures() const {
        if (consecutive_failures_ > 60)
            throw InfeasibleError(
                "optimization-failed: repeated constraint infeasibility");
    }

    OptimizationProblem<Scalar> prob_;
    int count_{0};
    int consecutive_failures_{0};
};

}  // namespace detail

namespace detail {

template <typename Scalar>
struct NmVertex {
    std::vector<Scalar> x;
    Scalar f;
};

template <typename Scalar, typename F>
class NelderMead {
  public:
    NelderMead(F& eval, int dim, Scalar tol) : eval_(eval), dim_(dim), tol_(tol) {}

    std::vector<NmVertex<Scalar>> simplex_around(const std::vector<Scalar>& center,
                                                 Scalar scale, std::mt19937& rng) {
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        std::vector<NmVertex<Scalar>> simplex;
        simplex.push_back({center, eval_(center)});
        for (int d = 0; d < dim_; ++d) {
            std::vector<Scalar> x = center;
            // Relative perturbation with an absolute floor so nearly-zero
            // tail points still span the search direction.
            const Scalar step = std::max(scale * std::abs(center[d]), Scalar(0.2) * scale);
            x[d] = std::max(Scalar(0), x[d] + (unit(rng) >= 0 ? step : -step));
            simplex.push_back({x, eval_(x)});
        }
        order(simplex);
        return simplex;
    }

    static Scalar diameter(const std::vector<NmVertex<Scalar>>& s) {
        Scalar d = 0;
        for (std::size_t i = 1; i < s.size(); ++i)
            for (std::size_t k = 0; k < s[i].x.size(); ++k)
                d = std::max(d, std::abs(s[i].x[k] - s[0].x[k]));
        return d;
    }

    // Standard reflect/expand/contract/shrink loop until the simplex
    // collapses below tol or the evaluation budget is exhausted.
    void run(std::vector<NmVertex<Scalar>>& simplex,
             const std::function<bool()>& budget_left) {
        while (budget_left() && diameter(simplex) >= tol_) {
            std::vector<Scalar> centroid(dim_, Scalar(0));
            for (int i = 0; i < dim_; ++i)
                for (int d = 0; d < dim_; ++d)
                    centroid[d] += simplex[i].x[d] / Scalar(dim_);
            const NmVertex<Scalar> worst = simplex.back();
            auto affine = [&](Scalar t) {
                std::vector<Scalar> x(dim_);
                for (int d = 0; d < dim_; ++d)
                    x[d] = centroid[d] + t * (worst.x[d] - centroid[d]);
                return x;
            };

            std::vector<Scalar> xr = affine(Scalar(-1));
            const Scalar fr = eval_(xr);
            if (fr < simplex[0].f) {
                std::vector<Scalar> xe = affine(Scalar(-2));
                const Scalar fe = eval_(xe);
                simplex.back() = fe < fr ? NmVertex<Scalar>{xe, fe} : NmVertex<Scalar>{xr, fr};
            } else if (fr < simplex[dim_ - 1].f) {
                simplex.back() = {xr, fr};
            } else {
                const bool outside = fr < worst.f;
                std::vector<Scalar> xc = affine(outside ? Scalar(-0.5) : Scalar(0.5));
                const Scalar fc = eval_(xc);
                if (fc < std::min(fr, worst.f)) {
                    simplex.back() = {xc, fc};
                } else {
                    for (std::size_t i = 1; i < simplex.size(); ++i) {
                        for (int d = 0; d < dim_; ++d)
                            simplex[i].x[d] =
                                simplex[0].x[d] +
                                Scalar(0.5) * (simplex[i].x[d] - simplex[0].x[d]);
                        simplex[i].f = eval_(simplex[i].x);
                    }
                }
            }
            order(simplex);
        }
    }

    static void order(std::vector<NmVertex<Scalar>>& s) {
        std::sort(s.begin(), s.end(), [](const NmVertex<Scalar>& a,
                                         const NmVertex<Scalar>& b) { return a.f < b.f; });
    }

  private:
    F& eval_;
    int dim_;
    Scalar tol_;
};

}  // namespace detail

// Nelder-Mead over the n-1 free points. Starting shapes: the sech pulse
// sampled at the knot times (perturbed by +-10%), and for finer grids a
// warm start interpolated from the coarse three-point optimum of the same
// problem; one restart from the incumbent afterwards. The landscape has
// shallow side basins that a single sech-seeded simplex tends to stall in.
template <typename Scalar>
OptimizationResult<Scalar> optimize(const OptimizationProblem<Scalar>& problem) {
    problem.validate();
    const int dim = problem.n - 1;
    detail::PulseObjective<Scalar> objective(problem);
    using Vec = std::vector<Scalar>;

    auto eval_f = [&objective](const Vec& x) { return objective(x).value; };
    std::mt19937 rng(problem.seed);
    detail::NelderMead<Scalar, decltype(eval_f)> nm(eval_f, dim, problem.simplex_tol);
    auto budget_left = [&objective, &problem]() {
        return objective.count() < problem.max_evals;
    };

    std::vector<Vec> starts;
    Vec sech_knots(dim);
    for (int j = 1; j < problem.n; ++j)
        sech_knots[j - 1] = Scalar(1) / std::cosh(Scalar(j) * problem.T / Scalar(problem.n));
    starts.push_back(sech_knots);

    if (problem.n > 3) {
        OptimizationProblem<Scalar> coarse = problem;
        coarse.n = 3;
        coarse.max_evals = problem.max_evals / 4;
        try {
            const auto sub = optimize(coarse);
            MonotoneCubic<Scalar> interp(
                {Scalar(0), problem.T / Scalar(3), Scalar(2) * problem.T / Scalar(3),
                 problem.T},
                {sub.points[0], sub.points[1], sub.points[2], Scalar(0)});
            Vec warm(dim);
            for (int j = 1; j < problem.n; ++j)
                warm[j - 1] =
                    std::max(Scalar(0), interp(Scalar(j) * problem.T / Scalar(problem.n)));
            starts.push_back(std::move(warm));
        } catch (const InfeasibleError&) {
            // Coarse problem infeasible; fall through with the sech start.
        }
    }

    std::vector<detail::NmVertex<Scalar>> best_simplex;
    const int share = problem.max_evals * 2 / (3 * static_cast<int>(starts.size()));
    for (std::size_t s = 0; s < starts.size(); ++s) {
        auto simplex = nm.simplex_around(starts[s], Scalar(0.1), rng);
        const int cap = objective.count() + share;
        auto capped = [&objective, cap, &budget_left]() {
            return budget_left() && objective.count() < cap;
        };
        nm.run(simplex, capped);
        if (best_simplex.empty() || simplex[0].f < best_simplex[0].f)
            best_simplex = std::move(simplex);
    }

    // Restart once from the incumbent with a smaller simplex.
    bool converged = detail::NelderMead<Scalar, decltype(eval_f)>::diameter(best_simplex) <
                     problem.simplex_tol;
    auto simplex = nm.simplex_around(best_simplex[0].x, Scalar(0.05), rng);
    if (simplex[0].f > best_simplex[0].f) simplex[0] = best_simplex[0];
    detail::NelderMead<Scalar, decltype(eval_f)>::order(simplex);
    nm.run(simplex, budget_left);
    converged =
        detail::NelderMead<Scalar, decltype(eval_f)>::diameter(simplex) < problem.simplex_tol ||
        converged;

    const auto best = objective(simplex[0].x);
    if (!best.feasible)
        throw InfeasibleError("optimization-failed: best simplex point infeasible");

    OptimizationResult<Scalar> res;
    res.points.push_back(best.g0);
    res.points.insert(res.points.end(), simplex[0].x.begin(), simplex[0].x.end());
    res.eta_final = -simplex[0].f;
    res.fidelity = best.fidelity;
    res.evaluation_count = objective.count();
    res.converged = converged;
    res.constraint_residual = std::abs(detail::constraint_mismatch(
        best.g0, simplex[0].x, problem.T, problem.n, problem.integrator.rel_tol,
        problem.integrator.abs_tol));
    if (res.constraint_residual > Scalar(1e-8))
        throw NumericError("optimization-failed: constraint residual " +
                           std::to_string(static_cast<double>(res.constraint_residual)) +
                           " exceeds 1e-8");
    res.n = problem.n;
    res.T = problem.T;
    return res;
}

template <typename Scalar>
struct SweepEntry {
    Scalar T{0};
    bool ok{false};
    OptimizationResult<Scalar> result;
    std::string error;
};

// Independent optimisations per pulse width, ordered by T. Entries that
// fail keep their error; the rest of the sweep is still returned.
template <typename Scalar>
std::vector<SweepEntry<Scalar>> sweep_T(int n, const std::vector<Scalar>& T_values,
                                        NoiseKind kind,
                                        OptimizationProblem<Scalar> base = {},
                                        int jobs = 1) {
    if (T_values.empty()) throw std::invalid_argument("sweep_T: empty T list");
    auto run_one = [&base, n, kind](Scalar T) {
        SweepEntry<Scalar> entry;
        entry.T = T;
        try {
            OptimizationProblem<Scalar> prob = base;
            prob.n = n;
            prob.T = T;
            prob.noise_kind = kind;
            entry.result = optimize(prob);
            entry.ok = true;
        } catch (const std::exception& e) {
            entry.error = e.what();
        }
        return entry;
    };

    std::vector<SweepEntry<Scalar>> out(T_values.size());
    if (jobs <= 1) {
        for (std::size_t i = 0; i < T_values.size(); ++i) out[i] = run_one(T_values[i]);
        return out;
    }
    std::vector<std::future<SweepEntry<Scalar>>> futures(T_values.size());
    std::size_t next = 0;
    while (next < T_values.size()) {
        const std::size_t batch =
            std::min<std::size_t>(jobs, T_values.size() - next);
        for (std::size_t k = 0; k < batch; ++k)
            futures[next + k] = std::async(std::launch::async, run_one, T_values[next + k]);
        for (std::size_t k = 0; k < batch; ++k) out[next + k] = futures[next + k].get();
        next += batch;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Least-squares fit of eta(T) = a + b / (c + T), Gauss-Newton with
// Levenberg damping.

template <typename Scalar>
struct FitResult {
    Scalar a{0}, b{0}, c{0};
    Scalar residual_norm{0};
};

template <typename Scalar>
FitResult<Scalar> fit_hyperbolic(const std::vector<std::pair<Scalar, Scalar>>& points) {
    if (points.size() < 3)
        throw std::invalid_argument("fit_hyperbolic: need at least 3 points");
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            if (points[i].first == points[j].first)
                throw std::invalid_argument("fit_hyperbolic: T values must be distinct");

    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
    const std::size_t m = points.size();

    Vec3 p;  // (a, b, c)
    p(0) = points.back().second;
    p(2) = Scalar(1);
    p(1) = (points.front().second - p(0)) * (p(2) + points.front().first);

    auto residuals = [&](const Vec3& q, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& r) {
        for (std::size_t i = 0; i < m; ++i) {
            const Scalar denom = q(2) + points[i].first;
            if (denom <= Scalar(0)) return false;
            r(static_cast<Eigen::Index>(i)) =
                q(0) + q(1) / denom - points[i].second;
        }
        return true;
    };

    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> r(m), r_new(m);
    if (!residuals(p, r)) throw NumericError("fit-failed: initial guess outside domain");
    Scalar lambda = Scalar(1e-3);
    bool converged = false;
    for (int iter = 0; iter < 200 && !converged; ++iter) {
        Eigen::Matrix<Scalar, Eigen::Dynamic, 3> J(m, 3);
        for (std::size_t i = 0; i < m; ++i) {
            const Scalar denom = p(2) + points[i].first;
            J(static_cast<Eigen::Index>(i), 0) = Scalar(1);
            J(static_cast<Eigen::Index>(i), 1) = Scalar(1) / denom;
            J(static_cast<Eigen::Index>(i), 2) = -p(1) / (denom * denom);
        }
        const Mat3 jtj = J.transpose() * J;
        const Vec3 jtr = J.transpose() * r;
        bool stepped = false;
        for (int attempt = 0; attempt < 40; ++attempt) {
            Mat3 damped = jtj;
            for (int d = 0; d < 3; ++d)
                damped(d, d) += lambda * std::max(jtj(d, d), Scalar(1e-12));
            const Vec3 delta = damped.ldlt().solve(-jtr);
            if (!delta.allFinite()) {
                lambda *= Scalar(10);
                continue;
            }
            const Vec3 candidate = p + delta;
            if (!residuals(candidate, r_new) ||
                r_new.squaredNorm() > r.squaredNorm() * (Scalar(1) + Scalar(1e-14))) {
                lambda *= Scalar(10);
                if (lambda > Scalar(1e12)) break;
                continue;
            }
            if (delta.norm() < Scalar(1e-13) * (Scalar(1) + p.norm())) converged = true;
            p = candidate;
            r = r_new;
            lambda = std::max(lambda / Scalar(10), Scalar(1e-15));
            stepped = true;
            break;
        }
        if (!stepped) break;
    }
    if (!converged && r.norm() > Scalar(1e-6) * std::sqrt(Scalar(m)))
        throw NumericError("fit-failed: Gauss-Newton did not converge, residual " +
                           std::to_string(static_cast<double>(r.norm())));
    for (const auto& pt : points)
        if (p(2) + pt.first <= Scalar(0))
            throw NumericError("fit-failed: c + T not positive over fitted range");

    FitResult<Scalar> out;
    out.a = p(0);
    out.b = p(1);
    out.c = p(2);
    out.residual_norm = r.norm();
    return out;
}

}  // namespace qst

#endif  // QST_OPTIMIZER_HPP
