#ifndef QST_IO_HPP
#define QST_IO_HPP

// Deterministic emitters: CSV with fixed 17-significant-digit floats, plain
// two-column pulse tables, and the FNV-1a config hash stamped into every
// output header.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qst/errors.hpp"
#include "qst/pulses.hpp"
#include "qst/version.hpp"

namespace qst {

inline std::string format_float(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Standard header block: tool version plus the hash of the driving config.
inline std::string file_header(const std::string& config_hash) {
    std::ostringstream ss;
    ss << "# qst version " << kVersion << "\n";
    ss << "# config " << config_hash << "\n";
    return ss.str();
}

inline void write_csv(const std::string& path, const std::string& config_hash,
                      const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << file_header(config_hash);
    for (std::size_t i = 0; i < columns.size(); ++i)
        out << columns[i] << (i + 1 < columns.size() ? "," : "\n");
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << format_float(row[i]) << (i + 1 < row.size() ? "," : "\n");
    }
}

// ---------------------------------------------------------------------------
// Pulse tables: two whitespace-separated columns (t, g), '#' comments.
// Sampled pulses use the uniform grid t_j = j T / n plus the final (T, 0) row.

template <typename Scalar>
void save_pulse_table(const std::string& path, const SampledPulse<Scalar>& pulse,
                      const std::string& config_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << file_header(config_hash);
    for (int j = 0; j < pulse.n; ++j)
        out << format_float(static_cast<double>(Scalar(j) * pulse.T / Scalar(pulse.n)))
            << " " << format_float(static_cast<double>(pulse.values[j])) << "\n";
    out << format_float(static_cast<double>(pulse.T)) << " 0\n";
}

template <typename Scalar>
std::vector<std::pair<Scalar, Scalar>> load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open table: " + path);
    std::vector<std::pair<Scalar, Scalar>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line.erase(hash_pos);
        std::istringstream ss(line);
        double t, g;
        if (!(ss >> t)) continue;  // blank/comment line
        if (!(ss >> g))
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected two columns (t, g)");
        double extra;
        if (ss >> extra)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected exactly two columns");
        rows.emplace_back(Scalar(t), Scalar(g));
    }
    if (rows.size() < 2) throw ConfigError(path + ": table needs at least two rows");
    for (std::size_t i = 0; i + 1 < rows.size(); ++i)
        if (!(rows[i + 1].first > rows[i].first))
            throw ConfigError(path + ": times must be strictly increasing");
    return rows;
}

// Strict sampled-pulse reader: uniform grid from t = 0, final value zero.
template <typename Scalar>
SampledPulse<Scalar> load_sampled_pulse(const std::string& path) {
    const auto rows = load_table<Scalar>(path);
    const int n = static_cast<int>(rows.size()) - 1;
    if (rows.front().first != Scalar(0))
        throw ConfigError(path + ": sampled pulse must start at t = 0");
    if (rows.back().second != Scalar(0))
        throw ConfigError(path + ": sampled pulse must end with g = 0");
    const Scalar T = rows.back().first;
    for (int j = 0; j <= n; ++j) {
        const Scalar expected = Scalar(j) * T / Scalar(n);
        if (std::abs(rows[j].first - expected) > Scalar(1e-9) * std::max(Scalar(1), T))
            throw ConfigError(path + ": sampled pulse requires the uniform grid t_j = jT/n");
    }
    SampledPulse<Scalar> p;
    p.T = T;
    p.n = n;
    p.values.reserve(n);
    for (int j = 0; j < n; ++j) p.values.push_back(rows[j].second);
    return p;
}

// Seed reader for constructed pulses: arbitrary increasing grid on t >= 0,
// monotone-cubic interpolated, zero beyond the last knot.
template <typename Scalar>
ConstructionSeed<Scalar> load_seed_table(const std::string& path) {
    const auto rows = load_table<Scalar>(path);
    if (rows.front().first < Scalar(0))
        throw ConfigError(path + ": seed table must cover t >= 0 only");
    std::vector<Scalar> xs, ys;
    xs.reserve(rows.size());
    ys.reserve(rows.size());
    for (const auto& [t, g] : rows) {
        xs.push_back(t);
        ys.push_back(g);
    }
    const Scalar t_end = xs.back();
    auto interp = std::make_shared<MonotoneCubic<Scalar>>(std::move(xs), std::move(ys));
    ConstructionSeed<Scalar> seed;
    seed.value = [interp, t_end](Scalar t) {
        return t < t_end ? std::max(Scalar(0), (*interp)(t)) : Scalar(0);
    };
    seed.derivative = [interp, t_end](Scalar t) {
        return t < t_end ? interp->derivative(t) : Scalar(0);
    };
    seed.support_end = t_end;
    return seed;
}

}  // namespace qst

#endif  // QST_IO_HPP
