#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rousk/brownian.hpp"
#include "rousk/geometry.hpp"

namespace rousk {

struct McOptions {
    std::size_t n_paths = 100000;
    std::size_t n_steps = 4096;
    double level = 0.99;       // confidence level for all intervals
    unsigned workers = 1;
    std::size_t n_tube_samples = 1024;  // boundary samples for tube construction
};

struct McEstimate {
    std::size_t n = 0;
    double mean = 0.0;
    double half_width = 0.0;
    double level = 0.99;
    std::uint64_t seed = 0;
};

struct BoundVerdict {
    McEstimate estimate;
    double bound = 0.0;
    double allowance = 0.0;      // documented grid-discretization allowance
    double slack = 0.0;          // bound - (mean + half_width)
    bool pass = false;           // slack >= -allowance
    double coarse_mean = 0.0;    // companion estimate at half the step count
    double extrapolated = 0.0;   // Richardson-extrapolated (sqrt(dt) bias model)
    bool refinement_stable = true;
    std::string note;
};

/// Grid infima of staying events are biased upward with a sqrt(dt) barrier
/// shift; the allowance 3.5 * max(0, coarse - fine) + coarse_half_width
/// covers the extrapolated bias of the fine estimate plus companion noise.
double richardson_allowance(double coarse, double fine, double coarse_hw);

/// Verifies P[path from x stays in the closure up to u] against the bound
/// ((d-1)/delta + u^{-1/2}) q(x), with delta the exterior-ball radius at the
/// nearest boundary point (+inf drops the first term).
BoundVerdict verify_staying_bound(const Domain& domain, const Point& x, double u,
                                  const McOptions& opts, std::uint64_t seed);

struct ExitDensityReport {
    std::vector<double> t_grid;
    std::vector<double> cdf;
    std::vector<double> half_widths;
    double c1 = 0.0;  // smallest constant with (upper-CI) CDF slope <= c1 / t
    bool monotone = true;
    std::size_t n = 0;
};

/// Estimates the exit-time CDF from {q > level_r} and calibrates the
/// constant c1 in the envelope slope <= c1 / t (CI-inflated slopes).
ExitDensityReport verify_exit_density(const Domain& domain, const Point& x, double level_r,
                                      const std::vector<double>& t_grid,
                                      const McOptions& opts, std::uint64_t seed);

/// Verifies P[0 <= inf q <= r, tube of radius gamma never hit, up to u]
/// against ((d-1)/gamma + c2 u^{-1/2}) r, where c2 = 4 c1 + 2 comes from
/// the calibrated exit-density constant.
BoundVerdict verify_band_bound(const Domain& domain, const Point& x, double gamma,
                               double r, double u, double c2, const McOptions& opts,
                               std::uint64_t seed);

struct GradientMassReport {
    std::vector<int> m_schedule;
    std::vector<double> estimates;     // m * P(0 <= h <= 1/m, tube avoided)
    std::vector<double> half_widths;   // CI half-widths scaled by m
    double bound = 0.0;                // (k+1)(d-1) + c2 / sqrt(horizon)
    double trend_p = 1.0;              // exact one-sided Mann-Kendall p-value
    bool trend_free = false;           // no increasing trend at 5%
    bool within_bound = false;
    bool pass = false;
};

/// The boundedness witness behind the BV property: the scaled boundary-layer
/// masses m * mu({0 <= h <= 1/m} minus tube hits) stay bounded in m.
GradientMassReport verify_gradient_mass(const Domain& domain, int k,
                                        const std::vector<int>& m_schedule, double horizon,
                                        double c2, const McOptions& opts, std::uint64_t seed);

struct DecayReport {
    std::vector<double> levels;
    std::vector<double> estimates;
    std::vector<double> half_widths;
    std::vector<std::size_t> counts;
    double slope = 0.0;   // log-log fit over levels with enough counts
    std::size_t used = 0;
    bool pass = false;
    std::string note;
};

/// Two-window excursion probability Psi(r): paths that avoid the tube, stay
/// inside, and dip within r of the boundary both before and after the split
/// time. Quadratic decay: fitted log-log slope >= 1.7 passes.
DecayReport verify_excursion_quadratic(const Domain& domain, double split, double horizon,
                                       const std::vector<double>& r_schedule, int l,
                                       const McOptions& opts, std::uint64_t seed);

/// mu(0 <= h <= eps) decay along eps_schedule; linear decay (slope within
/// [0.7, 1.3] in log-log) is the computable surrogate of the boundary paths
/// being a null set.
DecayReport verify_null_boundary(const Domain& domain, const std::vector<double>& eps_schedule,
                                 double horizon, const McOptions& opts, std::uint64_t seed);

}  // namespace rousk
