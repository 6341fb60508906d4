#pragma once

// Test-side helpers: random states, a finite-difference Jacobian, and
// id-keyed comparison of vector fields between two models.

#include "gcirc/catalog.hpp"
#include "gcirc/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace gtest {

inline std::string source_path(const std::string& rel) { return std::string(GCIRC_SOURCE_DIR) + "/" + rel; }

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<double> linspace(double a, double b, std::size_t n)
{
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

/// Uniform in (0, 2 * max_i(s_i/d_i)] per coordinate.
inline std::vector<gcirc::State> random_states(const gcirc::CompiledCircuit& c, std::size_t n, std::uint64_t seed)
{
    const auto top = c.saturation_levels();
    const double hi = 2.0 * *std::max_element(top.begin(), top.end());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<gcirc::State> out(n, gcirc::State(c.dimension()));
    for (auto& s : out)
        for (auto& x : s)
            x = hi * (1.0 - u(rng));
    return out;
}

/// Log-uniform over [1e-9, 2 * (s/d)_i] per coordinate, so every Hill
/// term is sampled on both sides of its constant.
inline std::vector<gcirc::State> log_random_states(const gcirc::CompiledCircuit& c, std::size_t n,
                                                   std::uint64_t seed)
{
    const auto top = c.saturation_levels();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<gcirc::State> out(n, gcirc::State(c.dimension()));
    for (auto& s : out)
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double lo = std::log(1e-9), hi = std::log(2.0 * top[i]);
            s[i] = std::exp(lo + (hi - lo) * u(rng));
        }
    return out;
}

/// Central differences with step 1e-8 relative to each coordinate.
inline gcirc::Matrix fd_jacobian(const gcirc::CompiledCircuit& c, const gcirc::State& x)
{
    const auto n = static_cast<Eigen::Index>(x.size());
    gcirc::Matrix j(n, n);
    for (Eigen::Index col = 0; col < n; ++col) {
        const auto k = static_cast<std::size_t>(col);
        const double h = 1e-8 * x[k];
        gcirc::State xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        const auto fp = c.rhs(xp), fm = c.rhs(xm);
        for (Eigen::Index row = 0; row < n; ++row) {
            const auto r = static_cast<std::size_t>(row);
            j(row, col) = (fp[r] - fm[r]) / (xp[k] - xm[k]);
        }
    }
    return j;
}

/// Elementwise comparison of an analytic Jacobian with fd_jacobian at x.
struct JacobianCheck {
    double worst = 0.0;        ///< largest relative error
    std::size_t resolved = 0;  ///< entries the differences resolve to better than 1e-5
    std::size_t entries = 0;   ///< entries above the matrix-scale floor
};

/// Relative error per entry, with two floors on the denominator: 1e-7 of
/// the matrix scale, and the rounding resolution of the central difference
/// itself (eps * |terms of f_i| / h_j, scaled up by 1e5 so that an entry
/// the differences cannot resolve to 1e-5 is only held to that resolution).
inline JacobianCheck check_jacobian(const gcirc::CompiledCircuit& c, const gcirc::State& x)
{
    const gcirc::Matrix a = c.jacobian(x), b = fd_jacobian(c, x);
    const auto f = c.rhs(x);
    const auto& d = c.degradation_rates();
    const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    constexpr double eps = std::numeric_limits<double>::epsilon();
    JacobianCheck out;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const auto r = static_cast<std::size_t>(i);
        const double terms = std::abs(f[r] + d[r] * x[r]) + d[r] * x[r];
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            const double h = 1e-8 * x[static_cast<std::size_t>(j)];
            const double noise = 8.0 * eps * terms / (2.0 * h);
            const double mag = std::max(std::abs(a(i, j)), std::abs(b(i, j)));
            if (mag > 1e-7 * scale) {
                ++out.entries;
                if (1e5 * noise < mag)
                    ++out.resolved;
            }
            const double denom = std::max({mag, 1e-7 * scale, 1e5 * noise});
            if (denom > 0.0)
                out.worst = std::max(out.worst, std::abs(a(i, j) - b(i, j)) / denom);
        }
    }
    return out;
}

/// Max absolute difference of dx/dt between two models with the same state
/// species, matching coordinates by id.
inline double vector_field_distance(const gcirc::CircuitModel& ma, const gcirc::CircuitModel& mb,
                                    std::size_t n_states, std::uint64_t seed)
{
    const gcirc::CompiledCircuit a(ma), b(mb);
    if (a.dimension() != b.dimension())
        return INFINITY;
    std::vector<std::size_t> perm(a.dimension());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        const auto idx = b.index_of(a.state_ids()[i]);
        if (!idx)
            return INFINITY;
        perm[i] = *idx;
    }
    double worst = 0.0;
    for (const auto& xa : random_states(a, n_states, seed)) {
        gcirc::State xb(xa.size());
        for (std::size_t i = 0; i < xa.size(); ++i)
            xb[perm[i]] = xa[i];
        const auto fa = a.rhs(xa), fb = b.rhs(xb);
        for (std::size_t i = 0; i < xa.size(); ++i)
            worst = std::max(worst, std::abs(fa[i] - fb[perm[i]]));
    }
    return worst;
}

} // namespace gtest
