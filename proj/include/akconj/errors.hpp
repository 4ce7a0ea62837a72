#pragma once

#include <stdexcept>
#include <string>

namespace akconj {

struct NoAdmissibleNumerator : std::runtime_error {
    explicit NoAdmissibleNumerator(const std::string& m) : std::runtime_error(m) {}
};

struct EmptySchedule : std::runtime_error {
    explicit EmptySchedule(const std::string& m) : std::runtime_error(m) {}
};

struct PrereqViolated : std::runtime_error {
    explicit PrereqViolated(const std::string& m) : std::runtime_error(m) {}
};

struct BudgetExceeded : std::runtime_error {
    explicit BudgetExceeded(const std::string& m) : std::runtime_error(m) {}
};

struct UnderResolved : std::runtime_error {
    explicit UnderResolved(const std::string& m) : std::runtime_error(m) {}
};

struct InfeasibleQuadrature : std::runtime_error {
    explicit InfeasibleQuadrature(const std::string& m) : std::runtime_error(m) {}
};

struct SmallDivisorZero : std::runtime_error {
    explicit SmallDivisorZero(const std::string& m) : std::runtime_error(m) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

} // namespace akconj
