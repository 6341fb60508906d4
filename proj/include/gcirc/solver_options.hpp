#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gcirc {

struct SolverOptions {
    double rel_tol = 1e-8;
    double abs_tol = 1e-12;      ///< molar
    double max_horizon = 1e9;    ///< minutes
    double steady_tol = 1e-12;   ///< molar per minute, on the residual inf-norm
    int newton_max_iters = 50;
    std::uint64_t seed = 0;      ///< quasi-random start sampling
    long max_steps = 20'000'000; ///< per integration
};

inline void check_options(const SolverOptions& o)
{
    if (!(o.rel_tol > 0.0) || !(o.abs_tol > 0.0) || !(o.steady_tol > 0.0) ||
        !(o.max_horizon > 0.0) || o.newton_max_iters < 0 || o.max_steps <= 0)
        throw std::invalid_argument("solver options: tolerances and limits must be positive");
}

/// Integration could not proceed (step-size underflow, step budget exhausted).
class integration_error : public std::runtime_error {
public:
    integration_error(const std::string& what, double time)
        : std::runtime_error(what + " at t=" + std::to_string(time)), time_(time)
    {
    }
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// No steady state was reached within the horizon.
class convergence_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace gcirc
