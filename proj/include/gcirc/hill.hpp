#pragma once

#include <cmath>
#include <stdexcept>

namespace gcirc {

namespace detail {

inline void check_hill_domain(double x, double k, double h)
{
    if (!(x >= 0.0))
        throw std::domain_error("hill: concentration must be nonnegative");
    if (!(k > 0.0))
        throw std::domain_error("hill: Hill constant must be positive");
    if (!(h >= 1.0))
        throw std::domain_error("hill: Hill coefficient must be >= 1");
}

// (x/k)^h, the dimensionless occupancy ratio.  Working in ratio form keeps
// x^h and k^h from underflowing when k ~ 1e-7 and h >= 2.
inline double occupancy_ratio(double x, double k, double h) noexcept
{
    return std::pow(x / k, h);
}

} // namespace detail

/// Fraction of maximal expression for an activator: x^h / (x^h + k^h).
inline double hill_activation(double x, double k, double h)
{
    detail::check_hill_domain(x, k, h);
    const double r = detail::occupancy_ratio(x, k, h);
    if (std::isinf(r))
        return 1.0;
    return r / (1.0 + r);
}

/// Fraction of maximal expression for a repressor: k^h / (x^h + k^h).
inline double hill_repression(double x, double k, double h)
{
    detail::check_hill_domain(x, k, h);
    return 1.0 / (1.0 + detail::occupancy_ratio(x, k, h));
}

/// d/dx of hill_activation, h k^h x^(h-1) / (x^h + k^h)^2.  The repression
/// derivative is its negation.
inline double hill_activation_slope(double x, double k, double h)
{
    detail::check_hill_domain(x, k, h);
    const double r = detail::occupancy_ratio(x, k, h);
    if (std::isinf(r))
        return 0.0;
    const double denom = 1.0 + r;
    return (h / k) * std::pow(x / k, h - 1.0) / (denom * denom);
}

namespace detail {

// Unchecked variants used on the hot path.  Negative arguments (tiny
// undershoot from an integration stage) are treated as zero.
struct HillValue {
    double value;
    double slope;
};

inline HillValue activation_unchecked(double x, double k, double h) noexcept
{
    const double xr = x > 0.0 ? x / k : 0.0;
    const double r = std::pow(xr, h);
    if (std::isinf(r))
        return {1.0, 0.0};
    const double denom = 1.0 + r;
    return {r / denom, (h / k) * std::pow(xr, h - 1.0) / (denom * denom)};
}

inline HillValue repression_unchecked(double x, double k, double h) noexcept
{
    const double xr = x > 0.0 ? x / k : 0.0;
    const double r = std::pow(xr, h);
    if (std::isinf(r))
        return {0.0, 0.0};
    const double denom = 1.0 + r;
    return {1.0 / denom, -(h / k) * std::pow(xr, h - 1.0) / (denom * denom)};
}

} // namespace detail

} // namespace gcirc
