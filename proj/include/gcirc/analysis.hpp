#pragma once

#include "gcirc/integrator.hpp"
#include "gcirc/model.hpp"
#include "gcirc/parallel.hpp"
#include "gcirc/steady_state.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gcirc {

/// Per-cell status bits of a sweep.
enum CellFlag : unsigned {
    cell_ok = 0,
    cell_not_converged = 1u << 0, ///< no steady state; value is NaN
    cell_newton_failed = 1u << 1, ///< value is the unpolished integration point
    cell_multistable = 1u << 2,   ///< another stable equilibrium differs in the observable
};

inline std::string flag_string(unsigned flags)
{
    if (flags == cell_ok)
        return "ok";
    std::string s;
    auto add = [&](unsigned bit, const char* name) {
        if (flags & bit) {
            if (!s.empty())
                s += '|';
            s += name;
        }
    };
    add(cell_not_converged, "not-converged");
    add(cell_newton_failed, "newton-failed");
    add(cell_multistable, "multistable");
    return s;
}

struct SweepAxis {
    std::string input;
    std::vector<double> values;
};

/// Steady observable over one or two clamped inputs.  Values are stored
/// row-major with axis1 as the row index.
struct SweepGrid {
    SweepAxis axis1;
    std::optional<SweepAxis> axis2;
    std::string observable;
    std::vector<double> values;
    std::vector<unsigned> flags;

    std::size_t rows() const { return axis1.values.size(); }
    std::size_t cols() const { return axis2 ? axis2->values.size() : 1; }
    double at(std::size_t i, std::size_t j = 0) const { return values[i * cols() + j]; }
    unsigned flag(std::size_t i, std::size_t j = 0) const { return flags[i * cols() + j]; }
    std::size_t failed_cells() const
    {
        return static_cast<std::size_t>(std::count_if(flags.begin(), flags.end(), [](unsigned f) {
            return (f & cell_not_converged) != 0;
        }));
    }
};

struct SweepOptions {
    SolverOptions solver;
    bool probe_multistability = true;
    unsigned threads = default_thread_count();
};

namespace detail {

inline void require_input(const CircuitModel& model, std::string_view id)
{
    const Species* s = model.find_species(id);
    if (!s || s->kind != SpeciesKind::clamped_input)
        throw std::invalid_argument("'" + std::string(id) + "' is not a clamped input of the model");
}

inline std::size_t require_observable(const CompiledCircuit& c, std::string_view id)
{
    if (auto i = c.index_of(id))
        return *i;
    throw std::invalid_argument("'" + std::string(id) + "' is not a state species of the model");
}

inline void require_sorted(std::span<const double> v, const char* what)
{
    if (v.empty())
        throw std::invalid_argument(std::string(what) + ": grid is empty");
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] >= 0.0))
            throw std::invalid_argument(std::string(what) + ": input values must be nonnegative");
        if (i > 0 && !(v[i] > v[i - 1]))
            throw std::invalid_argument(std::string(what) + ": input values must be strictly ascending");
    }
}

struct CellResult {
    double value = std::numeric_limits<double>::quiet_NaN();
    unsigned flags = cell_ok;
    std::optional<State> state;
};

// Steady observable from `start`, plus the cheap three-start multistability
// probe (zero state and the first two saturation corners).  Observables
// count as different when they disagree by more than 1e-3 relative to the
// larger value or to the observable's saturation level, whichever is larger,
// so near-zero levels do not trip the probe.
inline CellResult solve_cell(const CompiledCircuit& c, std::size_t obs, const State& start,
                             const SweepOptions& opts)
{
    CellResult r;
    try {
        auto eq = find_steady_state(c, start, opts.solver);
        r.value = eq.state[obs];
        if (!eq.newton_converged)
            r.flags |= cell_newton_failed;
        r.state = std::move(eq.state);
    } catch (const std::exception&) {
        r.flags |= cell_not_converged;
        return r;
    }
    if (opts.probe_multistability) {
        const double scale = c.saturation_levels()[obs];
        const auto probe = enumerate_equilibria(c, 3, opts.solver, 1);
        for (const auto& e : probe.equilibria) {
            if (e.stability != Stability::stable)
                continue;
            const double v = e.state[obs];
            const double tol = 1e-3 * std::max({std::abs(v), std::abs(r.value), scale});
            if (std::abs(v - r.value) > tol)
                r.flags |= cell_multistable;
        }
    }
    return r;
}

} // namespace detail

/// Steady `observable` for each value of `input_id`.  With `continuation`
/// each solve starts from the previous equilibrium (an up-sweep when values
/// ascend); otherwise every point starts from the zero state.
inline SweepGrid sweep_1d(const CircuitModel& model, std::string_view input_id, std::span<const double> values,
                          std::string_view observable, bool continuation, const SweepOptions& opts = {})
{
    detail::require_input(model, input_id);
    detail::require_sorted(values, "sweep_1d");
    const CompiledCircuit probe(model);
    const std::size_t obs = detail::require_observable(probe, observable);

    SweepGrid grid;
    grid.axis1 = {std::string(input_id), {values.begin(), values.end()}};
    grid.observable = std::string(observable);
    grid.values.assign(values.size(), std::numeric_limits<double>::quiet_NaN());
    grid.flags.assign(values.size(), cell_ok);

    const State zero(probe.dimension(), 0.0);
    if (continuation) {
        State start = zero;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const CompiledCircuit c(model.with_input(input_id, values[i]));
            auto r = detail::solve_cell(c, obs, start, opts);
            grid.values[i] = r.value;
            grid.flags[i] = r.flags;
            if (r.state)
                start = std::move(*r.state);
        }
    } else {
        parallel_for(
            values.size(),
            [&](std::size_t i) {
                const CompiledCircuit c(model.with_input(input_id, values[i]));
                auto r = detail::solve_cell(c, obs, zero, opts);
                grid.values[i] = r.value;
                grid.flags[i] = r.flags;
            },
            opts.threads);
    }
    return grid;
}

/// Steady `observable` over the Cartesian grid grid1 x grid2.  Every cell
/// starts from the zero state unless `continuation` is set, in which case
/// each fixed-input2 line is swept upward in input1 from the previous cell.
inline SweepGrid sweep_2d(const CircuitModel& model, std::string_view input1, std::string_view input2,
                          std::span<const double> grid1, std::span<const double> grid2,
                          std::string_view observable, const SweepOptions& opts = {},
                          bool continuation = false)
{
    detail::require_input(model, input1);
    detail::require_input(model, input2);
    if (input1 == input2)
        throw std::invalid_argument("sweep_2d: the two axes must be different inputs");
    detail::require_sorted(grid1, "sweep_2d");
    detail::require_sorted(grid2, "sweep_2d");
    const CompiledCircuit probe(model);
    const std::size_t obs = detail::require_observable(probe, observable);

    SweepGrid grid;
    grid.axis1 = {std::string(input1), {grid1.begin(), grid1.end()}};
    grid.axis2 = SweepAxis{std::string(input2), {grid2.begin(), grid2.end()}};
    grid.observable = std::string(observable);
    const std::size_t n1 = grid1.size(), n2 = grid2.size();
    grid.values.assign(n1 * n2, std::numeric_limits<double>::quiet_NaN());
    grid.flags.assign(n1 * n2, cell_ok);

    const State zero(probe.dimension(), 0.0);
    auto cell_model = [&](std::size_t i, std::size_t j) {
        return model.with_input(input1, grid1[i]).with_input(input2, grid2[j]);
    };
    if (continuation) {
        parallel_for(
            n2,
            [&](std::size_t j) {
                State start = zero;
                for (std::size_t i = 0; i < n1; ++i) {
                    const CompiledCircuit c(cell_model(i, j));
                    auto r = detail::solve_cell(c, obs, start, opts);
                    grid.values[i * n2 + j] = r.value;
                    grid.flags[i * n2 + j] = r.flags;
                    if (r.state)
                        start = std::move(*r.state);
                }
            },
            opts.threads);
    } else {
        parallel_for(
            n1 * n2,
            [&](std::size_t cell) {
                const std::size_t i = cell / n2, j = cell % n2;
                const CompiledCircuit c(cell_model(i, j));
                auto r = detail::solve_cell(c, obs, zero, opts);
                grid.values[cell] = r.value;
                grid.flags[cell] = r.flags;
            },
            opts.threads);
    }
    return grid;
}

// ---------------------------------------------------------------------------
// Difference envelope

struct Envelope {
    std::vector<double> differences; ///< bin centres, ascending
    std::vector<double> min_values;
    std::vector<double> max_values;
    std::vector<std::size_t> counts;
};

namespace detail {

inline std::optional<double> uniform_step(std::span<const double> v)
{
    if (v.size() < 2)
        return std::nullopt;
    const double step = (v.back() - v.front()) / static_cast<double>(v.size() - 1);
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::abs((v[i] - v[i - 1]) - step) > 1e-9 * std::abs(step))
            throw std::invalid_argument("difference_envelope: axes must be uniformly spaced");
    return step;
}

} // namespace detail

/// Min/max of the observable over cells binned by axis1 - axis2, bin width
/// equal to the grid step.  Cells flagged not-converged are skipped.  A
/// grid whose second axis has a single value bins by axis1 alone.
inline Envelope difference_envelope(const SweepGrid& grid)
{
    if (!grid.axis2)
        throw std::invalid_argument("difference_envelope: grid needs two axes");
    const auto& a1 = grid.axis1.values;
    const auto& a2 = grid.axis2->values;
    const auto s1 = detail::uniform_step(a1);
    const auto s2 = detail::uniform_step(a2);
    double step = 0.0;
    if (s1 && s2) {
        if (std::abs(*s1 - *s2) > 1e-9 * std::max(*s1, *s2))
            throw std::invalid_argument("difference_envelope: axes must share the same step");
        step = *s1;
    } else if (s1 || s2) {
        step = s1 ? *s1 : *s2;
    } else {
        step = 1.0;
    }

    Envelope env;
    struct Acc {
        double lo, hi;
        std::size_t n;
    };
    std::map<long long, Acc> bins;
    for (std::size_t i = 0; i < grid.rows(); ++i) {
        for (std::size_t j = 0; j < grid.cols(); ++j) {
            if (grid.flag(i, j) & cell_not_converged)
                continue;
            const double v = grid.at(i, j);
            const auto key = static_cast<long long>(std::llround((a1[i] - a2[j]) / step));
            auto [it, fresh] = bins.try_emplace(key, Acc{v, v, 0});
            it->second.lo = std::min(it->second.lo, v);
            it->second.hi = std::max(it->second.hi, v);
            ++it->second.n;
        }
    }
    for (const auto& [key, acc] : bins) {
        env.differences.push_back(static_cast<double>(key) * step);
        env.min_values.push_back(acc.lo);
        env.max_values.push_back(acc.hi);
        env.counts.push_back(acc.n);
    }
    return env;
}

// ---------------------------------------------------------------------------
// Switch point

struct SwitchPointResult {
    double up_sweep_point = 0.0;
    double down_sweep_point = 0.0;
    double low_plateau = 0.0;
    double high_plateau = 0.0;
    bool hysteretic = false;
    bool up_crossed = true;   ///< false: the up-sweep never reached mid-plateau
    bool down_crossed = true; ///< false: the down-sweep never fell to mid-plateau
};

class bracketing_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One steady solve of a response curve: the observable and the state to
/// continue from.
struct ResponsePoint {
    double value;
    State state;
};

struct SwitchSearchOptions {
    std::size_t coarse_points = 65; ///< continuation scan before bisection
    double rel_resolution = 1e-6;   ///< bisection stops at this bracket width / point
    double min_separation = 1e-11;  ///< plateaus closer than this do not bracket
};

/// Generic mid-plateau crossing search on a continuation curve.
///
/// `solve(x, start)` returns the steady response at input x starting from
/// `start`, or nullopt if the solve failed.  Plateaus are the zero-start
/// responses at the interval ends.  The up-sweep scans the interval from the
/// left on a coarse grid, each point continuing from the last, then bisects
/// the first bracket that crosses (low + high) / 2, always restarting from
/// the lower end's equilibrium.  The down-sweep mirrors it from the right.
template <class Solve>
SwitchPointResult switch_point_search(Solve&& solve, const State& zero, double lo, double hi,
                                      const SwitchSearchOptions& so = {})
{
    if (!(hi > lo) || !(lo >= 0.0))
        throw std::invalid_argument("find_switch_point: need 0 <= lo < hi");
    if (so.coarse_points < 2)
        throw std::invalid_argument("find_switch_point: need at least two scan points");

    auto must = [&](double x, const State& start) -> ResponsePoint {
        std::optional<ResponsePoint> r = solve(x, start);
        if (!r)
            throw convergence_error("find_switch_point: steady solve failed at input " + std::to_string(x));
        return std::move(*r);
    };
    // Inside the scan a failed solve means the branch being followed is gone
    // (no settled state within the horizon), so it counts as having crossed.
    auto crossed = [&](const std::optional<ResponsePoint>& p, double mid, bool upward) {
        if (!p)
            return true;
        return upward ? p->value >= mid : p->value < mid;
    };

    const ResponsePoint left = must(lo, zero);
    const ResponsePoint right = must(hi, zero);
    SwitchPointResult out;
    out.low_plateau = left.value;
    out.high_plateau = right.value;
    if (!(right.value - left.value >= so.min_separation))
        throw bracketing_error("find_switch_point: plateaus at the interval ends are not separated "
                               "(low " + std::to_string(left.value) + ", high " +
                               std::to_string(right.value) + ")");
    const double mid = 0.5 * (left.value + right.value);
    const std::size_t n = so.coarse_points;
    auto grid_x = [&](std::size_t i) {
        return i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    };

    // Up-sweep.
    {
        double a = lo;
        State sa = left.state;
        std::optional<double> b;
        for (std::size_t i = 1; i < n; ++i) {
            const double x = grid_x(i);
            auto p = solve(x, sa);
            if (crossed(p, mid, true)) {
                b = x;
                break;
            }
            a = x;
            sa = std::move(p->state);
        }
        if (!b) {
            out.up_sweep_point = hi;
            out.up_crossed = false;
        } else {
            double bb = *b;
            while (bb - a > so.rel_resolution * bb) {
                const double m = 0.5 * (a + bb);
                auto p = solve(m, sa);
                if (crossed(p, mid, true)) {
                    bb = m;
                } else {
                    a = m;
                    sa = std::move(p->state);
                }
            }
            out.up_sweep_point = 0.5 * (a + bb);
        }
    }

    // Down-sweep.
    {
        double b = hi;
        State sb = right.state;
        std::optional<double> a;
        for (std::size_t i = n - 1; i-- > 0;) {
            const double x = grid_x(i);
            auto p = solve(x, sb);
            if (crossed(p, mid, false)) {
                a = x;
                break;
            }
            b = x;
            sb = std::move(p->state);
        }
        if (!a) {
            out.down_sweep_point = lo;
            out.down_crossed = false;
        } else {
            double aa = *a;
            while (b - aa > so.rel_resolution * b) {
                const double m = 0.5 * (aa + b);
                auto p = solve(m, sb);
                if (crossed(p, mid, false)) {
                    aa = m;
                } else {
                    b = m;
                    sb = std::move(p->state);
                }
            }
            out.down_sweep_point = 0.5 * (aa + b);
        }
    }

    const double up = out.up_sweep_point, down = out.down_sweep_point;
    out.hysteretic = std::abs(up - down) > 1e-3 * std::max(std::abs(up), std::abs(down));
    return out;
}

/// Mid-plateau switch point of `observable` as `input_id` moves through
/// [lo, hi], on both an up- and a down-continuation sweep.
inline SwitchPointResult find_switch_point(const CircuitModel& model, std::string_view input_id,
                                           std::string_view observable, double lo, double hi,
                                           const SolverOptions& opts = {},
                                           const SwitchSearchOptions& so = {})
{
    detail::require_input(model, input_id);
    const CompiledCircuit probe(model);
    const std::size_t obs = detail::require_observable(probe, observable);
    const State zero(probe.dimension(), 0.0);
    SwitchSearchOptions sep = so;
    sep.min_separation = std::max(so.min_separation, 10.0 * opts.steady_tol);

    auto solve = [&](double x, const State& start) -> std::optional<ResponsePoint> {
        try {
            const CompiledCircuit c(model.with_input(input_id, x));
            auto eq = find_steady_state(c, start, opts);
            if (!eq.newton_converged)
                return std::nullopt;
            const double v = eq.state[obs];
            return ResponsePoint{v, std::move(eq.state)};
        } catch (const std::exception&) {
            return std::nullopt;
        }
    };
    return switch_point_search(solve, zero, lo, hi, sep);
}

// ---------------------------------------------------------------------------
// Closed-loop experiments

/// Steady output of a closed loop for each reference level (zero start).
inline SweepGrid tracking_curve(const CircuitModel& loop_model, std::span<const double> reference_values,
                                const SweepOptions& opts = {}, std::string_view reference = "Tin",
                                std::string_view output = "Pout")
{
    return sweep_1d(loop_model, reference, reference_values, output, false, opts);
}

/// Time courses from the zero state for each reference level, sampled at
/// `sample_times` (all within (0, horizon]).  A failed integration leaves
/// its entry holding the rows reached so far and a `failure` message.
inline std::vector<Trajectory> time_course_batch(const CircuitModel& loop_model,
                                                 std::span<const double> reference_values, double horizon,
                                                 std::span<const double> sample_times,
                                                 const SolverOptions& opts = {},
                                                 std::string_view reference = "Tin",
                                                 unsigned threads = default_thread_count())
{
    detail::require_input(loop_model, reference);
    std::vector<Trajectory> out(reference_values.size());
    parallel_for(
        reference_values.size(),
        [&](std::size_t i) {
            const CompiledCircuit c(loop_model.with_input(reference, reference_values[i]));
            out[i] = integrate(c, State(c.dimension(), 0.0), horizon, opts, sample_times, false);
        },
        threads);
    return out;
}

} // namespace gcirc
