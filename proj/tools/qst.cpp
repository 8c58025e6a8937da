// qst: command-line driver for the cascaded-cavity state-transfer library.
// Subcommands: simulate, sensitivity, optimize, sweep, fit, selftest.
// Exit codes: 0 success, 2 config error, 3 numeric failure, 4 infeasible
// constraint.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qst/config.hpp"
#include "qst/dynamics.hpp"
#include "qst/errors.hpp"
#include "qst/io.hpp"
#include "qst/optimizer.hpp"
#include "qst/sensitivity.hpp"
#include "qst/version.hpp"

using json = nlohmann::ordered_json;
using namespace qst;

namespace {

struct CliOptions {
    std::string config_path;
    std::string output_dir;
    int jobs = 1;
};

std::string resolve_output_dir(const CliOptions& opts, const RunConfig& cfg) {
    if (const char* env = std::getenv("QST_OUTPUT_DIR"); env && *env) return env;
    if (!opts.output_dir.empty()) return opts.output_dir;
    return cfg.get_or("output.dir", ".");
}

std::filesystem::path prepare_output_dir(const CliOptions& opts, const RunConfig& cfg) {
    const std::filesystem::path dir = resolve_output_dir(opts, cfg);
    std::filesystem::create_directories(dir);
    return dir;
}

PulseShape<double> build_pulse(const RunConfig& cfg) {
    const std::string kind = cfg.get_or("pulse.kind", "sech");
    if (kind == "sech") return sech_pulse<double>();
    if (kind == "zero") {
        // Diagnostic pulse: no coupling, nothing evolves.
        PulseShape<double> p;
        p.g1 = [](double) { return 0.0; };
        p.g2 = p.g1;
        p.g1_deriv = p.g1;
        p.g2_deriv = p.g1;
        p.support_lo = -1;
        p.support_hi = 1;
        p.meta = "zero";
        return p;
    }
    if (kind == "sampled") {
        const auto table = load_sampled_pulse<double>(cfg.resolve_path("pulse.table"));
        return sampled_to_shape(table);
    }
    if (kind == "constructed") {
        const std::string path = cfg.resolve_path("pulse.seed_table");
        auto seed = load_seed_table<double>(path);
        const std::string name = std::filesystem::path(path).filename().string();
        return cirac_construct(std::move(seed), PulseKind::CiracConstructed,
                               "constructed(" + name + ")");
    }
    throw ConfigError("pulse.kind must be sech, sampled or constructed (got '" + kind +
                      "')");
}

IntegratorConfig<double> build_window(const RunConfig& cfg, const PulseShape<double>& shape) {
    IntegratorConfig<double> base;
    base.rel_tol = cfg.get_double_or("integrator.rel_tol", 1e-9);
    base.abs_tol = cfg.get_double_or("integrator.abs_tol", 1e-11);
    if (cfg.has("window.t_start") || cfg.has("window.t_end")) {
        base.t_start = cfg.get_double_or("window.t_start", -15.0);
        base.t_end = cfg.get_double_or("window.t_end", 15.0);
        base.validate();
        return base;
    }
    return window_for(shape, base);
}

std::vector<NoiseKind> noise_kinds(const RunConfig& cfg) {
    std::vector<NoiseKind> kinds;
    std::istringstream ss(cfg.get_or("noise.kinds", "amplitude"));
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "amplitude")
            kinds.push_back(NoiseKind::Amplitude);
        else if (item == "timing")
            kinds.push_back(NoiseKind::Timing);
        else
            throw ConfigError("noise.kinds entries must be amplitude or timing (got '" +
                              item + "')");
    }
    if (kinds.empty()) throw ConfigError("noise.kinds is empty");
    return kinds;
}

OptimizationProblem<double> build_problem(const RunConfig& cfg) {
    OptimizationProblem<double> prob;
    prob.n = cfg.get_int_or("optimize.n", 3);
    prob.T = cfg.get_double_or("optimize.T", 10.0);
    const std::string kind = cfg.get_or("optimize.noise_kind", "amplitude");
    if (kind == "amplitude")
        prob.noise_kind = NoiseKind::Amplitude;
    else if (kind == "timing")
        prob.noise_kind = NoiseKind::Timing;
    else
        throw ConfigError("optimize.noise_kind must be amplitude or timing");
    prob.g_max = cfg.get_double_or("optimize.g_max", 20.0);
    prob.max_evals = cfg.get_int_or("optimize.max_evals", 2000);
    prob.simplex_tol = cfg.get_double_or("optimize.simplex_tol", 1e-5);
    prob.seed = static_cast<unsigned>(cfg.get_int_or("optimize.seed", 1));
    prob.integrator.rel_tol = cfg.get_double_or("integrator.rel_tol", 1e-9);
    prob.integrator.abs_tol = cfg.get_double_or("integrator.abs_tol", 1e-11);
    prob.validate();
    return prob;
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path.string());
    out << j.dump(2) << "\n";
}

json base_json(const RunConfig& cfg) {
    json j;
    j["version"] = kVersion;
    j["config"] = cfg.hash();
    return j;
}

// Uniform output grid including t = 0 when it lies in the window.
std::vector<double> output_grid(const IntegratorConfig<double>& window, int n_rows) {
    std::vector<double> grid;
    grid.reserve(n_rows + 2);
    const double dt = (window.t_end - window.t_start) / n_rows;
    for (int i = 0; i <= n_rows; ++i) grid.push_back(window.t_start + i * dt);
    if (window.t_start < 0 && window.t_end > 0) {
        grid.push_back(0.0);
        std::sort(grid.begin(), grid.end());
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    }
    return grid;
}

int cmd_simulate(const CliOptions& opts) {
    const auto cfg = RunConfig::from_file(opts.config_path);
    const auto dir = prepare_output_dir(opts, cfg);
    const auto shape = build_pulse(cfg);
    auto window = build_window(cfg, shape);
    window.dense_output = true;

    const auto traj = integrate_trajectory(shape, window);
    const auto master = evolve_master(shape, window);
    const auto grid = output_grid(window, 2000);

    std::vector<std::vector<double>> traj_rows;
    traj_rows.reserve(grid.size());
    for (const double t : grid) {
        const auto s = traj.eval(t);
        const double residual = shape.g1(t) * s.alpha1 / std::sqrt(2.0) +
                                shape.g2(t) * s.alpha2 / std::sqrt(2.0) + s.beta_a;
        traj_rows.push_back(
            {t, s.alpha1, s.alpha2, s.beta_a, shape.g1(t), shape.g2(t), residual});
    }
    write_csv((dir / "trajectory.csv").string(), cfg.hash(),
              {"t", "alpha1", "alpha2", "beta_a", "g1", "g2", "residual"}, traj_rows);

    std::vector<std::string> cols = {"t"};
    for (int i = 1; i <= kDim; ++i)
        for (int j = 1; j <= kDim; ++j) {
            cols.push_back("rho" + std::to_string(i) + std::to_string(j) + "_re");
            cols.push_back("rho" + std::to_string(i) + std::to_string(j) + "_im");
        }
    std::vector<std::vector<double>> master_rows;
    master_rows.reserve(grid.size());
    for (const double t : grid) {
        const auto rho = master.eval(t);
        std::vector<double> row = {t};
        for (int i = 0; i < kDim; ++i)
            for (int j = 0; j < kDim; ++j) {
                row.push_back(rho(i, j).real());
                row.push_back(rho(i, j).imag());
            }
        master_rows.push_back(std::move(row));
    }
    write_csv((dir / "master.csv").string(), cfg.hash(), cols, master_rows);

    json j = base_json(cfg);
    j["pulse"] = shape.describe();
    j["window"] = {{"t_start", window.t_start}, {"t_end", window.t_end}};
    j["fidelity"] = master.fidelity();
    j["max_trace_drift"] = master.max_trace_drift;
    j["max_zero_jump_residual"] = traj.max_residual;
    j["max_norm_drift"] = traj.max_norm_drift;
    write_json(dir / "summary.json", j);
    return 0;
}

int cmd_sensitivity(const CliOptions& opts) {
    const auto cfg = RunConfig::from_file(opts.config_path);
    const auto dir = prepare_output_dir(opts, cfg);
    const auto shape = build_pulse(cfg);
    const auto window = build_window(cfg, shape);
    const auto kinds = noise_kinds(cfg);
    const double eps1 = cfg.get_double_or("noise.epsilon1", 1.0);
    const double eps2 = cfg.get_double_or("noise.epsilon2", 1.0);

    json j = base_json(cfg);
    j["pulse"] = shape.describe();
    j["window"] = {{"t_start", window.t_start}, {"t_end", window.t_end}};
    j["noise"] = json::array();

    for (const NoiseKind kind : kinds) {
        auto models = standard_models(shape, kind);
        models[0].epsilon = eps1;
        if (models.size() > 1) models[1].epsilon = eps2;
        const auto rep = noise_sensitivity(shape, models, window);

        std::vector<std::vector<double>> rows;
        rows.reserve(rep.times.size());
        for (std::size_t i = 0; i < rep.times.size(); ++i) {
            std::vector<double> row = {rep.times[i]};
            for (const auto& trace : rep.eta_trace) row.push_back(trace[i]);
            rows.push_back(std::move(row));
        }
        json entry;
        if (kind == NoiseKind::Amplitude) {
            write_csv((dir / "eta_amplitude.csv").string(), cfg.hash(),
                      {"t", "eta1", "eta2"}, rows);
            entry = {{"kind", "amplitude"},
                     {"eta1_final", rep.eta_final[0]},
                     {"eta2_final", rep.eta_final[1]},
                     {"epsilon1", eps1},
                     {"epsilon2", eps2}};
        } else {
            write_csv((dir / "eta_timing.csv").string(), cfg.hash(), {"t", "eta"}, rows);
            entry = {{"kind", "timing"}, {"eta_final", rep.eta_final[0]}, {"epsilon", eps2}};
        }
        entry["fidelity"] = rep.fidelity;
        entry["max_trace_drift"] = rep.max_trace_drift;
        entry["max_correction_trace"] = rep.max_correction_trace;
        entry["max_zero_jump_residual"] = rep.max_zero_jump_residual;
        j["noise"].push_back(entry);
        j["fidelity"] = rep.fidelity;
    }
    write_json(dir / "summary.json", j);
    return 0;
}

json result_to_json(const OptimizationResult<double>& res) {
    json j;
    j["n"] = res.n;
    j["T"] = res.T;
    j["points"] = res.points;
    j["eta_final"] = res.eta_final;
    j["fidelity"] = res.fidelity;
    j["evaluation_count"] = res.evaluation_count;
    j["converged"] = res.converged;
    j["constraint_residual"] = res.constraint_residual;
    return j;
}

SampledPulse<double> result_to_sampled(const OptimizationResult<double>& res) {
    SampledPulse<double> sp;
    sp.T = res.T;
    sp.n = res.n;
    sp.values = res.points;
    return sp;
}

int cmd_optimize(const CliOptions& opts) {
    const auto cfg = RunConfig::from_file(opts.config_path);
    const auto dir = prepare_output_dir(opts, cfg);
    const auto prob = build_problem(cfg);
    const auto res = optimize(prob);

    json j = base_json(cfg);
    j["problem"] = {{"n", prob.n},
                    {"T", prob.T},
                    {"noise_kind",
                     prob.noise_kind == NoiseKind::Amplitude ? "amplitude" : "timing"},
                    {"g_max", prob.g_max},
                    {"max_evals", prob.max_evals},
                    {"simplex_tol", prob.simplex_tol},
                    {"seed", prob.seed}};
    j["result"] = result_to_json(res);
    write_json(dir / "optimize_result.json", j);
    save_pulse_table((dir / "pulse.txt").string(), result_to_sampled(res), cfg.hash());
    return 0;
}

int cmd_sweep(const CliOptions& opts) {
    const auto cfg = RunConfig::from_file(opts.config_path);
    const auto dir = prepare_output_dir(opts, cfg);
    const auto base = build_problem(cfg);
    const std::vector<double> t_values = cfg.has("sweep.T_values")
                                             ? cfg.get_list("sweep.T_values")
                                             : std::vector<double>{2, 4, 6, 8, 10};
    const auto entries =
        sweep_T(base.n, t_values, base.noise_kind, base, std::max(1, opts.jobs));

    json j = base_json(cfg);
    j["n"] = base.n;
    j["noise_kind"] = base.noise_kind == NoiseKind::Amplitude ? "amplitude" : "timing";
    j["entries"] = json::array();
    std::vector<std::vector<double>> csv_rows;
    bool any_failed = false;
    for (const auto& e : entries) {
        json je;
        je["T"] = e.T;
        je["ok"] = e.ok;
        if (e.ok) {
            je["result"] = result_to_json(e.result);
            csv_rows.push_back({e.T, e.result.eta_final});
            std::ostringstream name;
            name << "pulse_T" << e.T << ".txt";
            save_pulse_table((dir / name.str()).string(), result_to_sampled(e.result),
                             cfg.hash());
        } else {
            je["error"] = e.error;
            any_failed = true;
        }
        j["entries"].push_back(je);
    }
    write_csv((dir / "sweep_eta.csv").string(), cfg.hash(), {"T", "eta_final"}, csv_rows);
    write_json(dir / "sweep_result.json", j);
    return any_failed ? 3 : 0;
}

std::vector<std::pair<double, double>> read_sweep_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open fit input: " + path);
    std::vector<std::pair<double, double>> pts;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double t, eta;
        if (ss >> t >> eta) pts.emplace_back(t, eta);
    }
    if (pts.empty()) throw ConfigError(path + ": no (T, eta) rows found");
    return pts;
}

int cmd_fit(const CliOptions& opts) {
    const auto cfg = RunConfig::from_file(opts.config_path);
    const auto dir = prepare_output_dir(opts, cfg);
    const auto pts = read_sweep_csv(cfg.resolve_path("fit.input"));
    const auto fit = fit_hyperbolic(pts);

    json j = base_json(cfg);
    j["input"] = cfg.get("fit.input");
    j["points"] = json::array();
    for (const auto& [t, eta] : pts) j["points"].push_back({{"T", t}, {"eta", eta}});
    j["a"] = fit.a;
    j["b"] = fit.b;
    j["c"] = fit.c;
    j["residual_norm"] = fit.residual_norm;
    write_json(dir / "fit_result.json", j);
    return 0;
}

int cmd_selftest() {
    int failures = 0;
    auto report = [&failures](const char* name, bool ok, double value) {
        std::cout << "selftest " << name << ": " << (ok ? "PASS" : "FAIL") << " ("
                  << format_float(value) << ")\n";
        if (!ok) ++failures;
    };

    {
        const auto shape = sech_pulse<double>();
        auto cfg = window_for(shape);
        cfg.dense_output = true;
        const auto traj = integrate_trajectory(shape, cfg);
        const double err = std::abs(traj.eval(0.0).alpha1 - 0.5);
        report("trajectory-closed-form", err < 1e-7, err);

        const auto master = evolve_master(shape, cfg);
        report("transfer-fidelity", master.fidelity() >= 1 - 1e-6, master.fidelity());

        const auto rep =
            noise_sensitivity(shape, standard_models(shape, NoiseKind::Amplitude), cfg);
        report("amplitude-eta", std::abs(rep.eta_final[0] + 1.0) < 1e-2, rep.eta_final[0]);
    }
    {
        std::mt19937 rng(23);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        double worst = 0;
        for (int trial = 0; trial < 20; ++trial) {
            Matrix5<double> m;
            for (int i = 0; i < kDim; ++i)
                for (int j = 0; j < kDim; ++j)
                    m(i, j) = std::complex<double>(u(rng), u(rng));
            const Matrix5<double> rho = 0.5 * (m + m.adjoint().eval());
            const double g2 = 0.5 + 0.5 * u(rng);
            const auto out = lindblad_rhs(rho, 1.0, g2);
            const std::complex<double> expected =
                g2 * (rho(3, 4) + rho(4, 3)) - 2.0 * (rho(2, 4) + rho(4, 2) + rho(4, 4));
            worst = std::max(worst, std::abs(out(4, 4) - expected));
        }
        report("rho55-coupling", worst <= 1e-12, worst);
    }
    {
        const auto constructed =
            cirac_construct<double>([](double t) { return 1.0 / std::cosh(t); });
        const double err = std::abs(constructed.g1(-3.0) - 1.0 / std::cosh(3.0));
        report("construction-fixed-point", err < 1e-6, err);
    }
    {
        std::vector<std::pair<double, double>> pts;
        for (const double T : {2.0, 4.0, 6.0, 8.0, 10.0})
            pts.emplace_back(T, -0.5 + 1.0 / (2.0 + T));
        const auto fit = fit_hyperbolic(pts);
        const double err = std::abs(fit.a + 0.5);
        report("hyperbolic-fit", err < 1e-8, err);
    }
    return failures == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cascaded-cavity quantum state transfer under stochastic pulse noise"};
    app.require_subcommand(1);

    CliOptions opts;
    auto add_common = [&opts](CLI::App* sub) {
        sub->add_option("-c,--config", opts.config_path, "run configuration file")
            ->required();
        sub->add_option("-o,--output-dir", opts.output_dir,
                        "output directory (QST_OUTPUT_DIR overrides)");
    };

    auto* simulate = app.add_subcommand(
        "simulate", "integrate the trajectory and master equation, write CSV dumps");
    add_common(simulate);
    auto* sensitivity = app.add_subcommand(
        "sensitivity", "compute noise sensitivities eta_j for the configured pulse");
    add_common(sensitivity);
    auto* optimize_cmd =
        app.add_subcommand("optimize", "optimise a discretised pulse against noise");
    add_common(optimize_cmd);
    auto* sweep = app.add_subcommand("sweep", "optimise across a list of pulse widths T");
    add_common(sweep);
    sweep->add_option("-j,--jobs", opts.jobs, "parallel optimisations (default 1)");
    auto* fit =
        app.add_subcommand("fit", "fit a + b/(c+T) to a sweep's (T, eta_final) data");
    add_common(fit);
    app.add_subcommand("selftest", "run built-in consistency checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(opts);
        if (sensitivity->parsed()) return cmd_sensitivity(opts);
        if (optimize_cmd->parsed()) return cmd_optimize(opts);
        if (sweep->parsed()) return cmd_sweep(opts);
        if (fit->parsed()) return cmd_fit(opts);
        return cmd_selftest();
    } catch (const ConfigError& e) {
        std::cerr << json{{"error", {{"type", "config"}, {"message", e.what()}}}}.dump()
                  << "\n";
        return 2;
    } catch (const InfeasibleError& e) {
        std::cerr << json{{"error", {{"type", "infeasible"}, {"message", e.what()}}}}.dump()
                  << "\n";
        return 4;
    } catch (const NumericError& e) {
        std::cerr << json{{"error", {{"type", "numeric"}, {"message", e.what()}}}}.dump()
                  << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << json{{"error", {{"type", "config"}, {"message", e.what()}}}}.dump()
                  << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << json{{"error", {{"type", "config"}, {"message", e.what()}}}}.dump()
                  << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", {{"type", "internal"}, {"message", e.what()}}}}.dump()
                  << "\n";
        return 3;
    }
}
