#ifndef QST_CONFIG_HPP
#define QST_CONFIG_HPP

// Flat key = value run configuration. Unknown keys are rejected, referenced
// paths are checked at load time, and the raw bytes are hashed so every
// output file can record which configuration produced it.

#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qst/errors.hpp"
#include "qst/io.hpp"

namespace qst {

inline const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys = {
        "pulse.kind",          // sech | sampled | constructed
        "pulse.table",         // sampled-pulse table path
        "pulse.seed_table",    // constructed-pulse seed table path
        "window.t_start",      // optional; default expands [-15, 15] to the pulse support
        "window.t_end",
        "integrator.rel_tol",
        "integrator.abs_tol",
        "noise.kinds",         // amplitude | timing | amplitude,timing
        "noise.epsilon1",
        "noise.epsilon2",
        "optimize.n",
        "optimize.T",
        "optimize.noise_kind",
        "optimize.g_max",
        "optimize.max_evals",
        "optimize.simplex_tol",
        "optimize.seed",
        "sweep.T_values",
        "fit.input",           // CSV of (T, eta_final) rows
        "output.dir",
        "output.formats",      // csv,json
    };
    return keys;
}

class RunConfig {
  public:
    static RunConfig from_file(const std::string& path) {
        RunConfig cfg;
        cfg.raw_ = read_file(path);
        cfg.hash_ = fnv1a_hex(cfg.raw_);
        cfg.source_ = path;
        cfg.parse();
        cfg.validate_paths(std::filesystem::path(path).parent_path().string());
        return cfg;
    }

    static RunConfig from_string(const std::string& text) {
        RunConfig cfg;
        cfg.raw_ = text;
        cfg.hash_ = fnv1a_hex(text);
        cfg.source_ = "<string>";
        cfg.parse();
        cfg.validate_paths("");
        return cfg;
    }

    const std::string& hash() const { return hash_; }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("missing config key: " + key);
        return it->second;
    }

    std::string get_or(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key) const { return to_double(key, get(key)); }

    double get_double_or(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    int get_int(const std::string& key) const {
        const double v = get_double(key);
        const int i = static_cast<int>(v);
        if (static_cast<double>(i) != v)
            throw ConfigError("config key " + key + " must be an integer");
        return i;
    }

    int get_int_or(const std::string& key, int fallback) const {
        return has(key) ? get_int(key) : fallback;
    }

    std::vector<double> get_list(const std::string& key) const {
        std::vector<double> out;
        std::string item;
        std::istringstream ss(get(key));
        while (std::getline(ss, item, ','))
            out.push_back(to_double(key, item));
        if (out.empty()) throw ConfigError("config key " + key + " is an empty list");
        return out;
    }

    // Paths in the config are resolved relative to the config file.
    std::string resolve_path(const std::string& key) const {
        const std::string value = get(key);
        std::filesystem::path p(value);
        if (p.is_relative() && !base_dir_.empty()) p = std::filesystem::path(base_dir_) / p;
        return p.string();
    }

  private:
    void parse() {
        std::istringstream ss(raw_);
        std::string line;
        int lineno = 0;
        while (std::getline(ss, line)) {
            ++lineno;
            const auto hash_pos = line.find('#');
            if (hash_pos != std::string::npos) line.erase(hash_pos);
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(source_ + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (!known_config_keys().count(key))
                throw ConfigError(source_ + ":" + std::to_string(lineno) +
                                  ": unknown key '" + key + "'");
            if (values_.count(key))
                throw ConfigError(source_ + ":" + std::to_string(lineno) +
                                  ": duplicate key '" + key + "'");
            if (value.empty())
                throw ConfigError(source_ + ":" + std::to_string(lineno) +
                                  ": empty value for '" + key + "'");
            values_[key] = value;
        }
    }

    void validate_paths(const std::string& base_dir) {
        base_dir_ = base_dir;
        for (const char* key : {"pulse.table", "pulse.seed_table", "fit.input"}) {
            if (!has(key)) continue;
            const std::string p = resolve_path(key);
            if (!std::filesystem::exists(p))
                throw ConfigError(std::string("config key ") + key +
                                  " references missing path: " + p);
        }
    }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    double to_double(const std::string& key, const std::string& text) const {
        try {
            std::size_t pos = 0;
            const std::string t = trim(text);
            const double v = std::stod(t, &pos);
            if (pos != t.size()) throw std::invalid_argument(t);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + " has a non-numeric value: " + text);
        }
    }

    std::string raw_, hash_, source_, base_dir_;
    std::map<std::string, std::string> values_;
};

}  // namespace qst

#endif  // QST_CONFIG_HPP
