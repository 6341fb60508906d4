#pragma once

#include "gcirc/model.hpp"
#include "gcirc/solver_options.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace gcirc {

struct Trajectory {
    std::vector<std::string> species; ///< column labels
    std::vector<double> times;        ///< minutes, strictly increasing, times[0] = 0
    std::vector<State> states;        ///< one row per time
    std::string failure;              ///< set when integration stopped before t_end
};

/// Dormand–Prince 5(4) stepper with FSAL and the order-4 continuous extension.
///
/// Step acceptance uses the max-norm of the embedded error scaled by
/// abs_tol + rel_tol * |x|.  An accepted step whose end state dips below zero
/// by at most abs_tol is clipped; a deeper excursion rejects the step.
class DormandPrince {
public:
    DormandPrince(const CompiledCircuit& circuit, State y0, const SolverOptions& opts)
        : sys_(circuit), opts_(opts), n_(circuit.dimension()), y_(std::move(y0))
    {
        check_options(opts_);
        if (y_.size() != n_)
            throw std::invalid_argument("initial state has wrong dimension");
        for (double v : y_)
            if (!(v >= 0.0))
                throw std::domain_error("initial state must be nonnegative and finite");
        for (auto& k : k_)
            k.assign(n_, 0.0);
        ytmp_.assign(n_, 0.0);
        ynew_.assign(n_, 0.0);
        err_.assign(n_, 0.0);
        for (auto& r : rcont_)
            r.assign(n_, 0.0);
        sys_.rhs(y_, k_[0]);
        h_ = initial_step();
    }

    double time() const noexcept { return t_; }
    const State& state() const noexcept { return y_; }
    /// dx/dt at the current state.
    const State& derivative() const noexcept { return k_[0]; }
    long accepted_steps() const noexcept { return accepted_; }
    long rejected_steps() const noexcept { return rejected_; }
    double previous_time() const noexcept { return t_old_; }

    /// Takes one accepted step, never past `t_limit`.
    void step(double t_limit)
    {
        constexpr double eps = std::numeric_limits<double>::epsilon();
        for (;;) {
            if (accepted_ + rejected_ >= opts_.max_steps)
                throw integration_error("step budget exhausted", t_);
            double h = std::min(h_, t_limit - t_);
            const bool last = h >= t_limit - t_;
            if (h <= 16.0 * eps * std::max(std::abs(t_), 1.0) && !last)
                throw integration_error("step size underflow", t_);
            if (h <= 0.0)
                throw integration_error("step requested past the limit", t_);

            attempt(h);
            const double err = error_norm();
            if (!(err <= 1.0)) {
                ++rejected_;
                h_ = h * (std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.1);
                continue;
            }

            bool clipped = false;
            bool excursion = false;
            for (double& v : ynew_) {
                if (v < 0.0) {
                    if (v >= -opts_.abs_tol) {
                        v = 0.0;
                        clipped = true;
                    } else {
                        excursion = true;
                    }
                }
            }
            if (excursion) {
                ++rejected_;
                h_ = 0.5 * h;
                continue;
            }
            if (clipped)
                sys_.rhs(ynew_, k_[6]);

            build_dense(h);
            t_old_ = t_;
            t_ = last ? t_limit : t_ + h;
            h_last_ = t_ - t_old_;
            y_.swap(ynew_);
            k_[0].swap(k_[6]);
            ++accepted_;
            const double fac = err == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
            h_ = h * fac;
            return;
        }
    }

    /// Interpolated state at t in [previous_time(), time()].
    State dense(double t) const
    {
        State out(n_);
        const double theta = h_last_ > 0.0 ? (t - t_old_) / h_last_ : 1.0;
        const double theta1 = 1.0 - theta;
        for (std::size_t i = 0; i < n_; ++i) {
            double v = rcont_[0][i] +
                       theta * (rcont_[1][i] +
                                theta1 * (rcont_[2][i] + theta * (rcont_[3][i] + theta1 * rcont_[4][i])));
            if (v < 0.0 && v >= -opts_.abs_tol)
                v = 0.0;
            out[i] = v;
        }
        return out;
    }

private:
    // Butcher tableau.
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                            a75 = -2187.0 / 6784, a76 = 11.0 / 84;
    // 5th minus 4th order weights.
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    // Continuous extension.
    static constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                            d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                            d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

    void attempt(double h)
    {
        auto& k = k_;
        for (std::size_t i = 0; i < n_; ++i)
            ytmp_[i] = y_[i] + h * a21 * k[0][i];
        sys_.rhs(ytmp_, k[1]);
        for (std::size_t i = 0; i < n_; ++i)
            ytmp_[i] = y_[i] + h * (a31 * k[0][i] + a32 * k[1][i]);
        sys_.rhs(ytmp_, k[2]);
        for (std::size_t i = 0; i < n_; ++i)
            ytmp_[i] = y_[i] + h * (a41 * k[0][i] + a42 * k[1][i] + a43 * k[2][i]);
        sys_.rhs(ytmp_, k[3]);
        for (std::size_t i = 0; i < n_; ++i)
            ytmp_[i] = y_[i] + h * (a51 * k[0][i] + a52 * k[1][i] + a53 * k[2][i] + a54 * k[3][i]);
        sys_.rhs(ytmp_, k[4]);
        for (std::size_t i = 0; i < n_; ++i)
            ytmp_[i] = y_[i] + h * (a61 * k[0][i] + a62 * k[1][i] + a63 * k[2][i] + a64 * k[3][i] +
                                    a65 * k[4][i]);
        sys_.rhs(ytmp_, k[5]);
        for (std::size_t i = 0; i < n_; ++i)
            ynew_[i] = y_[i] + h * (a71 * k[0][i] + a73 * k[2][i] + a74 * k[3][i] + a75 * k[4][i] +
                                    a76 * k[5][i]);
        sys_.rhs(ynew_, k[6]);
        for (std::size_t i = 0; i < n_; ++i)
            err_[i] = h * (e1 * k[0][i] + e3 * k[2][i] + e4 * k[3][i] + e5 * k[4][i] +
                           e6 * k[5][i] + e7 * k[6][i]);
    }

    double error_norm() const
    {
        double worst = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double scale = opts_.abs_tol + opts_.rel_tol * std::max(std::abs(y_[i]), std::abs(ynew_[i]));
            const double r = std::abs(err_[i]) / scale;
            if (std::isnan(r))
                return r;
            worst = std::max(worst, r);
        }
        return worst;
    }

    void build_dense(double h)
    {
        auto& k = k_;
        for (std::size_t i = 0; i < n_; ++i) {
            const double ydiff = ynew_[i] - y_[i];
            const double bspl = h * k[0][i] - ydiff;
            rcont_[0][i] = y_[i];
            rcont_[1][i] = ydiff;
            rcont_[2][i] = bspl;
            rcont_[3][i] = ydiff - h * k[6][i] - bspl;
            rcont_[4][i] = h * (d1 * k[0][i] + d3 * k[2][i] + d4 * k[3][i] + d5 * k[4][i] +
                                d6 * k[5][i] + d7 * k[6][i]);
        }
    }

    // Hairer–Nørsett–Wanner starting step heuristic.
    double initial_step()
    {
        double d0 = 0.0, dd1 = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double sc = opts_.abs_tol + opts_.rel_tol * std::abs(y_[i]);
            d0 = std::max(d0, std::abs(y_[i]) / sc);
            dd1 = std::max(dd1, std::abs(k_[0][i]) / sc);
        }
        double h0 = (d0 < 1e-5 || dd1 < 1e-5) ? 1e-6 : 0.01 * d0 / dd1;
        for (std::size_t i = 0; i < n_; ++i)
            ytmp_[i] = std::max(0.0, y_[i] + h0 * k_[0][i]);
        sys_.rhs(ytmp_, k_[1]);
        double d2 = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double sc = opts_.abs_tol + opts_.rel_tol * std::abs(y_[i]);
            d2 = std::max(d2, std::abs(k_[1][i] - k_[0][i]) / sc);
        }
        d2 /= h0;
        const double h1 = std::max(dd1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                                     : std::pow(0.01 / std::max(dd1, d2), 0.2);
        return std::min(100.0 * h0, h1);
    }

    const CompiledCircuit& sys_;
    SolverOptions opts_;
    std::size_t n_;
    State y_;
    std::array<State, 7> k_;
    State ytmp_, ynew_, err_;
    std::array<State, 5> rcont_;
    double t_ = 0.0;
    double t_old_ = 0.0;
    double h_ = 0.0;
    double h_last_ = 0.0;
    long accepted_ = 0;
    long rejected_ = 0;
};

/// Integrates from t = 0 to `t_end`.  With no sample times every accepted step
/// is recorded; otherwise rows are produced by dense output at exactly the
/// requested times (plus the initial row at t = 0).
///
/// Integrator failures throw integration_error, or with `throw_on_failure`
/// off return the rows reached so far with `failure` set.
inline Trajectory integrate(const CompiledCircuit& circuit, const State& state0, double t_end,
                            const SolverOptions& opts = {}, std::span<const double> sample_times = {},
                            bool throw_on_failure = true)
{
    if (!(t_end > 0.0))
        throw std::invalid_argument("integrate: t_end must be positive");
    for (std::size_t i = 0; i < sample_times.size(); ++i) {
        if (!(sample_times[i] > 0.0) || sample_times[i] > t_end ||
            (i > 0 && !(sample_times[i] > sample_times[i - 1])))
            throw std::invalid_argument("integrate: sample times must increase within (0, t_end]");
    }

    DormandPrince dp(circuit, state0, opts);
    Trajectory traj;
    traj.species = circuit.state_ids();
    traj.times.push_back(0.0);
    traj.states.push_back(state0);

    std::size_t next = 0;
    while (dp.time() < t_end) {
        if (!throw_on_failure) {
            try {
                dp.step(t_end);
            } catch (const integration_error& e) {
                traj.failure = e.what();
                return traj;
            }
        } else {
            dp.step(t_end);
        }
        if (sample_times.empty()) {
            traj.times.push_back(dp.time());
            traj.states.push_back(dp.state());
            continue;
        }
        while (next < sample_times.size() && sample_times[next] <= dp.time()) {
            traj.times.push_back(sample_times[next]);
            traj.states.push_back(sample_times[next] == dp.time() ? dp.state()
                                                                  : dp.dense(sample_times[next]));
            ++next;
        }
    }
    return traj;
}

inline Trajectory integrate(const CircuitModel& model, const State& state0, double t_end,
                            const SolverOptions& opts = {}, std::span<const double> sample_times = {})
{
    return integrate(CompiledCircuit(model), state0, t_end, opts, sample_times);
}

} // namespace gcirc
