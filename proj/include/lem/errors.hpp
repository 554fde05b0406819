#pragma once

#include <stdexcept>
#include <string>

namespace lem {

// Training produced a nonfinite loss.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed file contents (bad magic, truncated payload, wrong header).
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Adaptive integrator drove the step size below its floor.
struct StiffnessError : std::runtime_error {
    explicit StiffnessError(const std::string& msg) : std::runtime_error(msg) {}
};

// Requested accuracy not reachable within the step budget.
struct BudgetError : std::runtime_error {
    explicit BudgetError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lem
