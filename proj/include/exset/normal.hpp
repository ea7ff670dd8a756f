#pragma once

#include <limits>

namespace exset {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Standard normal CDF, Phi(z) = P(Z <= z). Absolute error below 1e-15;
// Phi(-inf) = 0 and Phi(inf) = 1 exactly.
double normal_cdf(double z);

// Survival function 1 - Phi(z), accurate in the right tail.
double normal_sf(double z);

// Inverse CDF (Wichura's PPND16). Relative error ~1e-15 over (0,1);
// returns -inf/+inf at 0/1.
double normal_quantile(double p);

// Inverse survival function; accurate for tiny s.
double normal_quantile_sf(double s);

// P(lo < Z < hi) for a standard normal, computed tail-aware so that deep
// one-sided intervals keep relative accuracy. Infinite endpoints allowed.
double normal_interval_mass(double lo, double hi);

// Quantile of Z | lo < Z < hi at probability u in (0,1), tail-aware.
// Result is strictly inside (lo, hi). Throws interval_mass_underflow when
// the interval mass is below 1e-300.
double truncated_normal_quantile(double lo, double hi, double u);

}  // namespace exset
