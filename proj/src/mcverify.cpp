#include "rousk/mcverify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rousk/rng.hpp"
#include "rousk/stats.hpp"

namespace rousk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct WalkOutcome {
    bool exited = false;     // some grid value left the closure
    bool tube_hit = false;   // some grid value entered the tube
    double min_all = kInf;   // min signed distance over the whole grid
    double min_pre = kInf;   // min over grid times <= split
    double min_post = kInf;  // min over grid times >= split
};

// One grid path from x with early exit on leaving the closure or entering
// the tube. The split only matters for the two-window minima.
WalkOutcome walk_path(const Domain& domain, const SingularSetApprox* tube,
                      std::span<const double> x, double horizon, std::size_t n_steps,
                      double split, std::uint64_t seed, std::uint64_t stream) {
    WalkOutcome out;
    PathWalker walker(domain.dim(), horizon, n_steps, x, seed, stream);
    const auto eval = [&](std::span<const double> p, double t) {
        const double q = domain.signed_distance(p);
        out.min_all = std::min(out.min_all, q);
        if (t <= split) out.min_pre = std::min(out.min_pre, q);
        if (t >= split) out.min_post = std::min(out.min_post, q);
        if (q < 0.0) {
            out.exited = true;
            return false;
        }
        if (tube != nullptr && in_tube(*tube, p)) {
            out.tube_hit = true;
            return false;
        }
        return true;
    };
    if (!eval(x, 0.0)) return out;
    while (walker.advance())
        if (!eval(walker.position(), walker.time())) break;
    return out;
}

McEstimate bernoulli_estimate(std::size_t successes, std::size_t n, double level,
                              std::uint64_t seed) {
    McEstimate est;
    est.n = n;
    est.level = level;
    est.seed = seed;
    est.mean = static_cast<double>(successes) / static_cast<double>(n);
    est.half_width = stats::bernoulli_ci(successes, n, level).half_width();
    return est;
}

template <class Event>
std::size_t count_paths(std::size_t n_paths, unsigned workers, const Event& event) {
    std::vector<std::uint8_t> hits(n_paths, 0);
    parallel_for(n_paths, workers, [&](std::size_t i) { hits[i] = event(i) ? 1 : 0; });
    std::size_t total = 0;
    for (std::uint8_t h : hits) total += h;
    return total;
}

}  // namespace

double richardson_allowance(double coarse, double fine, double coarse_hw) {
    return 3.5 * std::max(0.0, coarse - fine) + coarse_hw;
}

namespace {

// Fills the Richardson fields of a verdict from the fine/coarse pair. The
// extrapolation removes the sqrt(dt) barrier-shift bias:
// bias(fine) = (coarse - fine) / (sqrt(2) - 1).
void attach_refinement(BoundVerdict& v, double fine, double coarse, double fine_hw,
                       double coarse_hw) {
    v.coarse_mean = coarse;
    v.allowance = richardson_allowance(coarse, fine, coarse_hw);
    v.extrapolated = fine - (coarse - fine) / (std::sqrt(2.0) - 1.0);
    v.refinement_stable = std::abs(coarse - fine) <= fine_hw + coarse_hw;
    if (!v.refinement_stable)
        v.note += (v.note.empty() ? "" : "; ") +
                  std::string("grid bias exceeds CI width; covered by allowance");
}

}  // namespace

BoundVerdict verify_staying_bound(const Domain& domain, const Point& x, double u,
                                  const McOptions& opts, std::uint64_t seed) {
    if (!(u > 0.0)) throw std::invalid_argument("verify_staying_bound: u must be > 0");
    const double q0 = domain.signed_distance(x);
    if (q0 < -1e-9 * domain.diameter())
        throw std::invalid_argument("verify_staying_bound: start point outside the closure");

    BoundVerdict verdict;
    // nearest boundary point along the outward direction
    double delta = kInf;
    const double step = 1e-5 * domain.diameter();
    const auto outward = outward_direction(domain, x, step);
    if (domain.dim() > 1) {
        if (outward) {
            Point y(x);
            for (int k = 0; k < domain.dim(); ++k) y[k] += std::max(q0, 0.0) * (*outward)[k];
            // refine onto the zero level set before asking for the radius
            for (int it = 0; it < 4; ++it) {
                const double qy = domain.signed_distance(y);
                if (std::abs(qy) <= 1e-9 * domain.diameter()) break;
                const auto dir = outward_direction(domain, y, step);
                if (!dir) break;
                for (int k = 0; k < domain.dim(); ++k) y[k] += qy * (*dir)[k];
            }
            const auto report = exterior_ball_radius(domain, y);
            delta = report.radius;
        } else {
            verdict.note = "outward direction ambiguous at start; exterior-ball term dropped";
        }
    }
    if (delta == 0.0) {
        verdict.note = "exterior-ball radius 0 at nearest boundary point; bound is vacuous";
        verdict.bound = kInf;
    } else {
        const double geom = std::isinf(delta)
                                ? 0.0
                                : static_cast<double>(domain.dim() - 1) / delta;
        verdict.bound = (geom + 1.0 / std::sqrt(u)) * std::max(q0, 0.0);
    }

    const auto run = [&](std::size_t n_steps, std::uint64_t run_seed) {
        return count_paths(opts.n_paths, opts.workers, [&](std::size_t i) {
            const auto out = walk_path(domain, nullptr, x, u, n_steps, -1.0, run_seed, i);
            return !out.exited;
        });
    };
    const std::size_t fine_hits = run(opts.n_steps, seed);
    const std::uint64_t coarse_seed = splitmix64(seed ^ 0xc0a53ULL);
    const std::size_t coarse_hits = run(std::max<std::size_t>(1, opts.n_steps / 2), coarse_seed);

    verdict.estimate = bernoulli_estimate(fine_hits, opts.n_paths, opts.level, seed);
    const auto coarse = bernoulli_estimate(coarse_hits, opts.n_paths, opts.level, coarse_seed);
    attach_refinement(verdict, verdict.estimate.mean, coarse.mean, verdict.estimate.half_width,
                      coarse.half_width);
    verdict.slack = verdict.bound - (verdict.estimate.mean + verdict.estimate.half_width);
    verdict.pass = verdict.slack >= -verdict.allowance;
    return verdict;
}

ExitDensityReport verify_exit_density(const Domain& domain, const Point& x, double level_r,
                                      const std::vector<double>& t_grid,
                                      const McOptions& opts, std::uint64_t seed) {
    if (t_grid.size() < 2) throw std::invalid_argument("verify_exit_density: degenerate grid");
    for (std::size_t j = 1; j < t_grid.size(); ++j)
        if (!(t_grid[j] > t_grid[j - 1]))
            throw std::invalid_argument("verify_exit_density: grid not increasing");
    if (!(t_grid.front() > 0.0))
        throw std::invalid_argument("verify_exit_density: grid must start above 0");
    if (domain.signed_distance(x) <= level_r)
        throw std::invalid_argument("verify_exit_density: start point not inside {q > r}");

    const double horizon = t_grid.back();
    std::vector<double> exit_times(opts.n_paths, kInf);
    parallel_for(opts.n_paths, opts.workers, [&](std::size_t i) {
        PathWalker walker(domain.dim(), horizon, opts.n_steps, x, seed, i);
        while (walker.advance()) {
            if (domain.signed_distance(walker.position()) <= level_r) {
                exit_times[i] = walker.time();
                break;
            }
        }
    });

    ExitDensityReport report;
    report.t_grid = t_grid;
    report.n = opts.n_paths;
    for (double t : t_grid) {
        std::size_t hits = 0;
        for (double e : exit_times)
            if (e <= t) ++hits;
        const auto est = bernoulli_estimate(hits, opts.n_paths, opts.level, seed);
        report.cdf.push_back(est.mean);
        report.half_widths.push_back(est.half_width);
    }
    for (std::size_t j = 1; j < t_grid.size(); ++j) {
        if (report.cdf[j] < report.cdf[j - 1]) report.monotone = false;
        const double dt = t_grid[j] - t_grid[j - 1];
        const double slope_up =
            (report.cdf[j] + report.half_widths[j] -
             (report.cdf[j - 1] - report.half_widths[j - 1])) / dt;
        const double t_mid = 0.5 * (t_grid[j] + t_grid[j - 1]);
        report.c1 = std::max(report.c1, slope_up * t_mid);
    }
    return report;
}

BoundVerdict verify_band_bound(const Domain& domain, const Point& x, double gamma,
                               double r, double u, double c2, const McOptions& opts,
                               std::uint64_t seed) {
    if (!(r > 0.0) || r > gamma)
        throw std::invalid_argument("verify_band_bound: need 0 < r <= gamma");
    if (!(u > 0.0)) throw std::invalid_argument("verify_band_bound: u must be > 0");
    if (domain.signed_distance(x) < 0.0)
        throw std::invalid_argument("verify_band_bound: start point outside the closure");

    const auto tube = singular_set(domain, gamma, opts.n_tube_samples,
                                   splitmix64(seed ^ 0x70be5ULL));
    BoundVerdict verdict;
    verdict.bound = (static_cast<double>(domain.dim() - 1) / gamma + c2 / std::sqrt(u)) * r;

    const auto run = [&](std::size_t n_steps, std::uint64_t run_seed) {
        return count_paths(opts.n_paths, opts.workers, [&](std::size_t i) {
            const auto out = walk_path(domain, &tube, x, u, n_steps, -1.0, run_seed, i);
            return !out.exited && !out.tube_hit && out.min_all <= r;
        });
    };
    const std::size_t fine_hits = run(opts.n_steps, seed);
    const std::uint64_t coarse_seed = splitmix64(seed ^ 0xc0a53ULL);
    const std::size_t coarse_hits = run(std::max<std::size_t>(1, opts.n_steps / 2), coarse_seed);

    verdict.estimate = bernoulli_estimate(fine_hits, opts.n_paths, opts.level, seed);
    const auto coarse = bernoulli_estimate(coarse_hits, opts.n_paths, opts.level, coarse_seed);
    attach_refinement(verdict, verdict.estimate.mean, coarse.mean, verdict.estimate.half_width,
                      coarse.half_width);
    verdict.slack = verdict.bound - (verdict.estimate.mean + verdict.estimate.half_width);
    verdict.pass = verdict.slack >= -verdict.allowance;
    return verdict;
}

GradientMassReport verify_gradient_mass(const Domain& domain, int k,
                                        const std::vector<int>& m_schedule, double horizon,
                                        double c2, const McOptions& opts, std::uint64_t seed) {
    if (k < 0) throw std::invalid_argument("verify_gradient_mass: k must be >= 0");
    if (m_schedule.empty()) throw std::invalid_argument("verify_gradient_mass: empty schedule");
    for (int m : m_schedule)
        if (m < k + 1)
            throw std::invalid_argument("verify_gradient_mass: schedule requires m >= k+1");
    const Point origin(domain.dim(), 0.0);
    if (domain.signed_distance(origin) <= 0.0)
        throw std::invalid_argument("verify_gradient_mass: origin must lie inside the domain");

    const double tube_radius = 1.0 / static_cast<double>(k + 1);
    const auto tube = singular_set(domain, tube_radius, opts.n_tube_samples,
                                   splitmix64(seed ^ 0x70be5ULL));

    GradientMassReport report;
    report.m_schedule = m_schedule;
    report.bound = static_cast<double>((k + 1) * (domain.dim() - 1)) + c2 / std::sqrt(horizon);
    report.within_bound = true;
    for (std::size_t idx = 0; idx < m_schedule.size(); ++idx) {
        const double level = 1.0 / static_cast<double>(m_schedule[idx]);
        const std::uint64_t base = idx * opts.n_paths;  // independent stream block per m
        const std::size_t hits = count_paths(opts.n_paths, opts.workers, [&](std::size_t i) {
            const auto out =
                walk_path(domain, &tube, origin, horizon, opts.n_steps, -1.0, seed, base + i);
            return !out.exited && !out.tube_hit && out.min_all <= level;
        });
        const auto est = bernoulli_estimate(hits, opts.n_paths, opts.level, seed);
        const double m = static_cast<double>(m_schedule[idx]);
        report.estimates.push_back(m * est.mean);
        report.half_widths.push_back(m * est.half_width);
        if (report.estimates.back() + report.half_widths.back() > report.bound)
            report.within_bound = false;
    }
    const auto mk = stats::mann_kendall(report.estimates);
    report.trend_p = mk.p_increasing;
    report.trend_free = !mk.increasing_at(0.05);
    report.pass = report.trend_free && report.within_bound;
    return report;
}

namespace {

DecayReport fit_decay(const std::vector<double>& levels, const std::vector<std::size_t>& hits,
                      const McOptions& opts, std::uint64_t seed) {
    DecayReport report;
    report.levels = levels;
    std::vector<double> log_l, log_p;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const auto est = bernoulli_estimate(hits[i], opts.n_paths, opts.level, seed);
        report.estimates.push_back(est.mean);
        report.half_widths.push_back(est.half_width);
        report.counts.push_back(hits[i]);
        if (hits[i] >= 5) {
            log_l.push_back(std::log(levels[i]));
            log_p.push_back(std::log(est.mean));
        }
    }
    report.used = log_l.size();
    if (report.used < 2) {
        report.note = "censored: too few levels with counts for a slope fit";
        return report;
    }
    if (report.used < levels.size()) report.note = "smallest levels censored (counts < 5)";
    report.slope = stats::fit_line(log_l, log_p).slope;
    return report;
}

}  // namespace

DecayReport verify_excursion_quadratic(const Domain& domain, double split, double horizon,
                                       const std::vector<double>& r_schedule, int l,
                                       const McOptions& opts, std::uint64_t seed) {
    if (!(split > 0.0 && split < horizon))
        throw std::invalid_argument("verify_excursion_quadratic: split must lie in (0, horizon)");
    const double tube_radius = 1.0 / static_cast<double>(l + 1);
    for (double r : r_schedule)
        if (!(r > 0.0) || r > tube_radius)
            throw std::invalid_argument(
                "verify_excursion_quadratic: schedule must lie in (0, 1/(l+1)]");
    const Point origin(domain.dim(), 0.0);
    const auto tube = singular_set(domain, tube_radius, opts.n_tube_samples,
                                   splitmix64(seed ^ 0x70be5ULL));

    std::vector<std::size_t> hits;
    for (std::size_t idx = 0; idx < r_schedule.size(); ++idx) {
        const double r = r_schedule[idx];
        const std::uint64_t base = idx * opts.n_paths;
        hits.push_back(count_paths(opts.n_paths, opts.workers, [&](std::size_t i) {
            const auto out =
                walk_path(domain, &tube, origin, horizon, opts.n_steps, split, seed, base + i);
            return !out.exited && !out.tube_hit && out.min_pre <= r && out.min_post <= r;
        }));
    }
    DecayReport report = fit_decay(r_schedule, hits, opts, seed);
    report.pass = report.used >= 2 && report.slope >= 1.7;
    return report;
}

DecayReport verify_null_boundary(const Domain& domain, const std::vector<double>& eps_schedule,
                                 double horizon, const McOptions& opts, std::uint64_t seed) {
    for (double eps : eps_schedule)
        if (!(eps > 0.0))
            throw std::invalid_argument("verify_null_boundary: levels must be positive");
    const Point origin(domain.dim(), 0.0);
    std::vector<std::size_t> hits;
    for (std::size_t idx = 0; idx < eps_schedule.size(); ++idx) {
        const double eps = eps_schedule[idx];
        const std::uint64_t base = idx * opts.n_paths;
        hits.push_back(count_paths(opts.n_paths, opts.workers, [&](std::size_t i) {
            const auto out = walk_path(domain, nullptr, origin, horizon, opts.n_steps, -1.0,
                                       seed, base + i);
            return !out.exited && out.min_all <= eps;
        }));
    }
    DecayReport report = fit_decay(eps_schedule, hits, opts, seed);
    report.pass = report.used >= 2 && report.slope >= 0.7 && report.slope <= 1.3;
    return report;
}

}  // namespace rousk
