#pragma once

#include "gcirc/integrator.hpp"
#include "gcirc/model.hpp"
#include "gcirc/parallel.hpp"
#include "gcirc/solver_options.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace gcirc {

enum class Stability { stable, unstable, marginal };

inline std::string_view to_string(Stability s)
{
    switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::marginal: return "marginal";
    }
    return "unknown";
}

struct StabilityReport {
    Stability stability;
    double leading_real_part; ///< per minute
};

struct Equilibrium {
    State state;
    double residual_norm = 0.0; ///< inf-norm of dx/dt
    Stability stability = Stability::marginal;
    double leading_eigenvalue_real_part = 0.0;
    bool newton_converged = true; ///< false: the integrated point is returned unpolished
    double settle_time = 0.0;     ///< integration time spent before refinement
};

inline double inf_norm(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

/// Eigenvalue test at an equilibrium.  Stable if the largest real part is
/// below -margin, unstable above +margin, with margin = 1e-3 min(d_i).
inline StabilityReport classify_stability(const CompiledCircuit& circuit, std::span<const double> eq_state)
{
    const Matrix jac = circuit.jacobian(eq_state);
    Eigen::EigenSolver<Matrix> es(jac, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("classify_stability: eigenvalue computation failed");
    const double leading = es.eigenvalues().real().maxCoeff();
    const double margin = 1e-3 * circuit.min_degradation();
    Stability tag = Stability::marginal;
    if (leading < -margin)
        tag = Stability::stable;
    else if (leading > margin)
        tag = Stability::unstable;
    return {tag, leading};
}

inline StabilityReport classify_stability(const CircuitModel& model, std::span<const double> eq_state)
{
    return classify_stability(CompiledCircuit(model), eq_state);
}

namespace detail {

// Residual small relative to the production and degradation flux of each
// species, i.e. at rounding level.  Distinguishes a root from the residual
// minimum of a ghost, whose absolute residual can be below steady_tol when
// the rates themselves are tiny.
inline bool residual_at_rounding(const CompiledCircuit& c, std::span<const double> x,
                                 std::span<const double> f)
{
    constexpr double tol = 1e3 * std::numeric_limits<double>::epsilon();
    const auto& d = c.degradation_rates();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double loss = d[i] * std::abs(x[i]);
        const double scale = loss + std::abs(f[i] + d[i] * x[i]);
        if (std::abs(f[i]) > tol * scale)
            return false;
    }
    return true;
}

// Damped Newton on dx/dt = 0 with the analytic Jacobian.  Converged once the
// residual is below steady_tol and either at rounding level relative to the
// species fluxes or no longer reducible by a negligible update.
inline std::optional<State> newton_polish(const CompiledCircuit& c, State x, const SolverOptions& opts)
{
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const auto n = static_cast<Eigen::Index>(c.dimension());
    State f = c.rhs(x);
    double fn = inf_norm(f);
    for (int it = 0;; ++it) {
        if (fn < opts.steady_tol && residual_at_rounding(c, x, f))
            break;
        if (it == opts.newton_max_iters)
            return std::nullopt;
        const Matrix jac = c.jacobian(x);
        Eigen::PartialPivLU<Matrix> lu(jac);
        Eigen::VectorXd rhs(n);
        for (Eigen::Index i = 0; i < n; ++i)
            rhs(i) = -f[static_cast<std::size_t>(i)];
        const Eigen::VectorXd dx = lu.solve(rhs);
        if (!dx.allFinite())
            return std::nullopt;

        bool negligible = true;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (std::abs(dx(static_cast<Eigen::Index>(i))) > 4.0 * eps * std::abs(x[i]))
                negligible = false;
        if (negligible) {
            if (fn < opts.steady_tol)
                break;
            return std::nullopt;
        }

        double lambda = 1.0;
        State trial(x.size());
        bool improved = false;
        while (lambda >= 1e-6) {
            for (std::size_t i = 0; i < x.size(); ++i)
                trial[i] = x[i] + lambda * dx(static_cast<Eigen::Index>(i));
            const State ft = c.rhs(trial);
            const double tn = inf_norm(ft);
            if (tn <= fn) {
                improved = true;
                x = trial;
                f = ft;
                fn = tn;
                break;
            }
            lambda *= 0.5;
        }
        if (!improved)
            return std::nullopt;
    }
    for (double& v : x) {
        if (v < 0.0) {
            if (v < -opts.abs_tol)
                return std::nullopt;
            v = 0.0;
        }
    }
    return x;
}

} // namespace detail

/// Integrates until the residual inf-norm has stayed below 100 steady_tol for
/// a window of 10 / min(d_i), then Newton-refines to below steady_tol.
///
/// A Newton result is accepted only if it stays within 1e-3 (relative) of
/// the integrated point; otherwise the point is taken to be a slow passage
/// (e.g. the ghost of a vanished saddle-node) and integration resumes.
/// Throws convergence_error if no window completes within max_horizon,
/// integration_error if the integrator gives up.  If the horizon is reached
/// after a completed window but Newton never succeeded, the integrated point
/// is returned with newton_converged cleared.
inline Equilibrium find_steady_state(const CompiledCircuit& circuit, const State& state0,
                                     const SolverOptions& opts = {})
{
    const double window = 10.0 / circuit.min_degradation();
    const double loose = 100.0 * opts.steady_tol;

    DormandPrince dp(circuit, state0, opts);
    std::optional<double> below_since;
    if (inf_norm(dp.derivative()) < loose)
        below_since = 0.0;

    Equilibrium eq;
    for (;;) {
        while (!(below_since && dp.time() - *below_since >= window)) {
            if (dp.time() >= opts.max_horizon)
                throw convergence_error("no steady state within horizon " + std::to_string(opts.max_horizon) +
                                        " min (residual " + std::to_string(inf_norm(dp.derivative())) + ")");
            dp.step(opts.max_horizon);
            if (inf_norm(dp.derivative()) < loose) {
                if (!below_since)
                    below_since = dp.time();
            } else {
                below_since.reset();
            }
        }

        eq.settle_time = dp.time();
        auto polished = detail::newton_polish(circuit, dp.state(), opts);
        if (polished) {
            double dist = 0.0;
            for (std::size_t i = 0; i < polished->size(); ++i)
                dist = std::max(dist, std::abs((*polished)[i] - dp.state()[i]));
            if (dist > 1e-3 * std::max(inf_norm(*polished), inf_norm(dp.state())))
                polished.reset();
        }
        if (polished) {
            eq.state = std::move(*polished);
            break;
        }
        if (dp.time() >= opts.max_horizon) {
            eq.state = dp.state();
            eq.newton_converged = false;
            break;
        }
        below_since.reset();
    }
    eq.residual_norm = inf_norm(circuit.rhs(eq.state));
    const auto report = classify_stability(circuit, eq.state);
    eq.stability = report.stability;
    eq.leading_eigenvalue_real_part = report.leading_real_part;
    return eq;
}

inline Equilibrium find_steady_state(const CircuitModel& model, const State& state0,
                                     const SolverOptions& opts = {})
{
    return find_steady_state(CompiledCircuit(model), state0, opts);
}

// ---------------------------------------------------------------------------
// Multistart enumeration

/// Start points for enumerate_equilibria: the zero state, then each
/// single-species corner at Σs/d, then a Cranley–Patterson shifted Halton
/// sequence over the box [0, Σs/d].
inline std::vector<State> enumeration_starts(const CompiledCircuit& circuit, std::size_t n_samples,
                                             std::uint64_t seed)
{
    static constexpr unsigned primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31,
                                          37, 41, 43, 47, 53, 59, 61, 67, 71, 73};
    const std::size_t n = circuit.dimension();
    if (n > std::size(primes))
        throw std::invalid_argument("enumeration_starts: too many species for the Halton table");
    const State top = circuit.saturation_levels();

    std::vector<State> starts;
    starts.reserve(n_samples);
    if (starts.size() < n_samples)
        starts.emplace_back(n, 0.0);
    for (std::size_t i = 0; i < n && starts.size() < n_samples; ++i) {
        State corner(n, 0.0);
        corner[i] = top[i];
        starts.push_back(std::move(corner));
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    State shift(n);
    for (auto& s : shift)
        s = unit(rng);
    for (std::size_t index = 1; starts.size() < n_samples; ++index) {
        State p(n);
        for (std::size_t d = 0; d < n; ++d) {
            double f = 1.0, r = 0.0;
            for (std::size_t i = index; i > 0; i /= primes[d]) {
                f /= primes[d];
                r += f * static_cast<double>(i % primes[d]);
            }
            const double u = std::fmod(r + shift[d], 1.0);
            p[d] = u * top[d];
        }
        starts.push_back(std::move(p));
    }
    return starts;
}

/// True when two states differ by less than `rel` relative to the larger.
inline bool same_equilibrium(std::span<const double> a, std::span<const double> b, double rel = 1e-6)
{
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        diff = std::max(diff, std::abs(a[i] - b[i]));
    return diff <= rel * std::max(inf_norm(a), inf_norm(b));
}

struct EnumerationResult {
    std::vector<Equilibrium> equilibria; ///< distinct, in order of first discovery
    std::vector<std::string> failures;   ///< one message per start that did not converge
};

/// Runs find_steady_state from `n_samples` deterministic starts and merges
/// duplicates.  Starts run in parallel; output order follows start order.
inline EnumerationResult enumerate_equilibria(const CompiledCircuit& circuit, std::size_t n_samples,
                                              const SolverOptions& opts = {},
                                              unsigned threads = default_thread_count())
{
    if (n_samples < 1)
        throw std::invalid_argument("enumerate_equilibria: need at least one sample");
    const auto starts = enumeration_starts(circuit, n_samples, opts.seed);

    std::vector<std::optional<Equilibrium>> found(starts.size());
    std::vector<std::string> errors(starts.size());
    parallel_for(
        starts.size(),
        [&](std::size_t i) {
            try {
                found[i] = find_steady_state(circuit, starts[i], opts);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        },
        threads);

    EnumerationResult out;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        if (!found[i]) {
            out.failures.push_back("start " + std::to_string(i) + ": " + errors[i]);
            continue;
        }
        const bool dup = std::any_of(out.equilibria.begin(), out.equilibria.end(), [&](const Equilibrium& e) {
            return same_equilibrium(e.state, found[i]->state);
        });
        if (!dup)
            out.equilibria.push_back(std::move(*found[i]));
    }
    return out;
}

inline EnumerationResult enumerate_equilibria(const CircuitModel& model, std::size_t n_samples,
                                              const SolverOptions& opts = {},
                                              unsigned threads = default_thread_count())
{
    return enumerate_equilibria(CompiledCircuit(model), n_samples, opts, threads);
}

} // namespace gcirc
