#ifndef QST_ERRORS_HPP
#define QST_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qst {

// Configuration / input problems (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numeric failures: norm/trace drift, fidelity gate, non-stationary
// endpoint, fit breakdown (CLI exit code 3).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Constraint solving / pulse construction infeasibility (CLI exit code 4).
struct InfeasibleError : std::runtime_error {
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qst

#endif  // QST_ERRORS_HPP
