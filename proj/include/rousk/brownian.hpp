#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rousk/geometry.hpp"
#include "rousk/rng.hpp"

namespace rousk {

struct PathSample {
    int dim = 0;
    double horizon = 0.0;
    std::size_t n_steps = 0;
    std::vector<double> values;  // (n_steps+1) * dim, row major; values[0] = start

    double dt() const { return horizon / static_cast<double>(n_steps); }
    double time(std::size_t k) const { return static_cast<double>(k) * dt(); }
    std::span<const double> point(std::size_t k) const {
        return {values.data() + k * static_cast<std::size_t>(dim),
                static_cast<std::size_t>(dim)};
    }
};

/// d-dimensional Brownian path on a uniform grid. Identical output for
/// identical (seed, stream), regardless of how many paths run in parallel.
PathSample sample_path(int dim, double horizon, std::size_t n_steps,
                       std::span<const double> start, std::uint64_t seed,
                       std::uint64_t stream);

/// Incremental stepper drawing the same increments as sample_path for the
/// same (seed, stream), so hot loops can stop early without changing the law.
class PathWalker {
public:
    PathWalker(int dim, double horizon, std::size_t n_steps, std::span<const double> start,
               std::uint64_t seed, std::uint64_t stream);

    /// Advances one grid step; false once the grid is exhausted.
    bool advance();
    std::span<const double> position() const { return {pos_.data(), pos_.size()}; }
    double time() const { return static_cast<double>(step_) * dt_; }
    std::size_t step() const { return step_; }
    std::size_t n_steps() const { return n_steps_; }

private:
    Rng rng_;
    std::vector<double> pos_;
    double dt_;
    double sigma_;
    std::size_t step_;
    std::size_t n_steps_;
};

/// Law of the first time a standard Brownian motion with superimposed drift
/// C t crosses below -r. Carries a density on (0, inf) plus an atom at
/// infinity of mass 1 - exp(-2 C r).
struct FirstPassageLaw {
    double drift_coeff = 0.0;  // C >= 0
    double barrier = 0.0;      // r > 0
};

double fp_density(const FirstPassageLaw& law, double t);
double fp_atom(const FirstPassageLaw& law);

/// Integral of the density over (lo, inf) by adaptive quadrature with the
/// substitution t = s/(1-s) for the tail; tolerance 1e-8.
double fp_density_integral(const FirstPassageLaw& law, double lo);

/// P(eta > u) = atom + integral of the density over (u, inf).
double fp_survival(const FirstPassageLaw& law, double u);

/// Closed-form survival (reflection principle with drift), used as an
/// independent oracle for fp_survival.
double fp_survival_closed_form(const FirstPassageLaw& law, double u);

/// P(inf_{s<=u} B_s > -r) for driftless standard BM started at 0.
double halfline_stay_prob(double r, double u);

/// P(sup_{s<=u} |x + B_s| < 1) for x in (-1,1), eigenfunction series.
double interval_exit_survival(double x, double u);

/// min over grid points of the signed distance along the path.
double path_min_q(const Domain& domain, const PathSample& path);

/// First grid time the path enters the tube (closed-set hit), if any.
std::optional<double> first_hit_time(const SingularSetApprox& tube, const PathSample& path);

/// First grid time the path leaves {q > level}, if any.
std::optional<double> first_exit_time(const Domain& domain, double level,
                                      const PathSample& path);

}  // namespace rousk
