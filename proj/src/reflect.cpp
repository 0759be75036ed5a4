#include "rousk/reflect.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rousk/rng.hpp"
#include "rousk/stats.hpp"

namespace rousk {

double DiscretePathSpace::cm_inner(std::span<const double> h, std::span<const double> k) const {
    if (h.size() != ambient_dim() || k.size() != ambient_dim())
        throw std::invalid_argument("cm_inner: state size mismatch");
    const std::size_t dd = static_cast<std::size_t>(d);
    double sum = 0.0;
    for (std::size_t i = 0; i < n_grid; ++i) {
        for (std::size_t c = 0; c < dd; ++c) {
            const double dh = h[i * dd + c] - (i > 0 ? h[(i - 1) * dd + c] : 0.0);
            const double dk = k[i * dd + c] - (i > 0 ? k[(i - 1) * dd + c] : 0.0);
            sum += dh * dk;
        }
    }
    return sum / dt();
}

double DiscretePathSpace::cm_norm(std::span<const double> h) const {
    return std::sqrt(cm_inner(h, h));
}

bool DiscretePathSpace::satisfies(std::span<const double> state, double tol) const {
    if (state.size() != ambient_dim())
        throw std::invalid_argument("satisfies: state size mismatch");
    if (!domain) return true;
    const std::size_t dd = static_cast<std::size_t>(d);
    for (std::size_t i = 0; i < n_grid; ++i)
        if (domain->signed_distance(state.subspan(i * dd, dd)) < -tol) return false;
    return true;
}

namespace {

// Projection onto {state : value at grid index i lies in the closure} in the
// cm metric. The minimizer corrects grid value i by its Euclidean projection
// offset and drags earlier/later values along the evaluation representer
// min(t_j, t_i)/t_i.
void project_single_constraint(const DiscretePathSpace& space, std::vector<double>& state,
                               std::size_t i) {
    const std::size_t dd = static_cast<std::size_t>(space.d);
    const std::span<const double> value(state.data() + i * dd, dd);
    if (space.domain->signed_distance(value) >= 0.0) return;
    const Point proj = project_to_closure(*space.domain, value);
    const double ti = space.grid_time(i);
    for (std::size_t j = 0; j < space.n_grid; ++j) {
        const double w = std::min(space.grid_time(j), ti) / ti;
        for (std::size_t c = 0; c < dd; ++c)
            state[j * dd + c] += w * (proj[c] - value[c]);
    }
}

}  // namespace

ReflectedTrajectory simulate_rou(const DiscretePathSpace& space,
                                 const std::vector<double>& x0, double t_end, double dt_sim,
                                 std::uint64_t seed, std::uint64_t stream,
                                 const SimulateOptions& opts) {
    if (!(dt_sim > 0.0) || !(t_end > 0.0))
        throw std::invalid_argument("simulate_rou: need positive t_end and dt_sim");
    const std::size_t ambient = space.ambient_dim();
    if (x0.size() != ambient) throw std::invalid_argument("simulate_rou: x0 size mismatch");
    const double tol = opts.constraint_tol > 0.0
                           ? opts.constraint_tol
                           : 1e-9 * (space.domain ? space.domain->diameter() : 1.0);
    if (!space.satisfies(x0, tol))
        throw std::invalid_argument("simulate_rou: x0 violates the constraint");
    for (const auto& l : opts.directions)
        if (l.size() != ambient)
            throw std::invalid_argument("simulate_rou: direction size mismatch");

    const std::size_t n_sim = static_cast<std::size_t>(std::llround(t_end / dt_sim));
    const std::size_t dd = static_cast<std::size_t>(space.d);
    const double inc_sd = std::sqrt(dt_sim * space.dt());

    ReflectedTrajectory traj;
    traj.d = space.d;
    traj.horizon = space.horizon;
    traj.n_grid = space.n_grid;
    traj.dt_sim = dt_sim;
    traj.direction_increments.assign(opts.directions.size(), {});
    for (auto& v : traj.direction_increments) v.reserve(n_sim);
    for (const auto& l : opts.directions)
        traj.direction_norms2.push_back(space.cm_inner(l, l));

    Rng rng(seed, stream);
    std::vector<double> x(x0), proposal(ambient), db(ambient), dw(ambient);
    double a_total = 0.0;
    traj.local_time.reserve(n_sim);
    traj.times.reserve(n_sim);

    for (std::size_t step = 0; step < n_sim; ++step) {
        // discrete Wiener increment: independent Gaussian path increments,
        // cumulatively summed along the grid
        for (std::size_t c = 0; c < dd; ++c) {
            double run = 0.0;
            for (std::size_t i = 0; i < space.n_grid; ++i) {
                double xi = inc_sd * rng.normal();
                if (opts.flip_noise) xi = -xi;
                run += xi;
                db[i * dd + c] = run;
            }
        }
        for (std::size_t j = 0; j < ambient; ++j)
            proposal[j] = x[j] + db[j] - 0.5 * dt_sim * x[j];

        std::vector<double> next(proposal);
        // each boundary crossing within the step becomes its own reflection
        // event with a single-constraint correction direction
        struct StepEvent {
            double da = 0.0;
            std::vector<double> sigma;
            std::vector<double> contact;
        };
        std::vector<StepEvent> step_events;
        const auto record_correction = [&](const std::vector<double>& before,
                                           const std::vector<double>& contact,
                                           const std::vector<double>& after) {
            std::vector<double> corr(ambient);
            for (std::size_t j = 0; j < ambient; ++j) corr[j] = after[j] - before[j];
            const double corr_norm = space.cm_norm(corr);
            if (corr_norm <= 0.0) return;
            StepEvent ev;
            ev.da = 2.0 * corr_norm;
            ev.sigma = corr;
            for (double& v : ev.sigma) v /= corr_norm;
            ev.contact = contact;
            step_events.push_back(std::move(ev));
        };

        if (space.domain && !space.satisfies(next, tol)) {
            if (opts.method == ProjectionMethod::kPointwise) {
                const std::vector<double> before(next);
                for (std::size_t i = 0; i < space.n_grid; ++i) {
                    const std::span<const double> value(next.data() + i * dd, dd);
                    if (space.domain->signed_distance(value) < 0.0) {
                        const Point p = project_to_closure(*space.domain, value);
                        std::copy(p.begin(), p.end(), next.begin() + i * dd);
                    }
                }
                record_correction(before, next, next);
            } else {
                // sequential symmetrized reflections, most-violated grid
                // value first: project onto the single violated constraint
                // in the cm metric, record the boundary contact, and continue
                // from the mirror of the state across the contact so the
                // corrected value lands strictly inside instead of sticking
                // to the boundary
                bool resolved = false;
                for (std::size_t round = 0; round < opts.max_dykstra_iters; ++round) {
                    std::ptrdiff_t worst = -1;
                    double worst_q = -tol;
                    for (std::size_t i = 0; i < space.n_grid; ++i) {
                        const double qi = space.domain->signed_distance(
                            std::span<const double>(next.data() + i * dd, dd));
                        if (qi < worst_q) {
                            worst_q = qi;
                            worst = static_cast<std::ptrdiff_t>(i);
                        }
                    }
                    if (worst < 0) {
                        resolved = true;
                        break;
                    }
                    std::vector<double> contact(next);
                    project_single_constraint(space, contact,
                                              static_cast<std::size_t>(worst));
                    std::vector<double> mirror(ambient);
                    for (std::size_t j = 0; j < ambient; ++j)
                        mirror[j] = 2.0 * contact[j] - next[j];
                    // the mirror must fix the corrected constraint; if the
                    // overshoot violates it again (flat boundary pieces very
                    // close by), settle for the contact point
                    const std::span<const double> mval(
                        mirror.data() + static_cast<std::size_t>(worst) * dd, dd);
                    const bool keep_mirror = space.domain->signed_distance(mval) >= -tol;
                    const std::vector<double>& landing = keep_mirror ? mirror : contact;
                    record_correction(next, contact, landing);
                    next = landing;
                }
                if (!resolved) {
                    // joint fallback: Dykstra's alternating projections in
                    // the cm metric (a single event with a combined direction)
                    const std::vector<double> before(next);
                    std::vector<std::vector<double>> residual(
                        space.n_grid, std::vector<double>(ambient, 0.0));
                    bool converged = false;
                    std::vector<double> work(ambient);
                    for (std::size_t cycle = 0; cycle < opts.max_dykstra_iters; ++cycle) {
                        double moved = 0.0;
                        for (std::size_t i = 0; i < space.n_grid; ++i) {
                            for (std::size_t j = 0; j < ambient; ++j)
                                work[j] = next[j] + residual[i][j];
                            std::vector<double> projected(work);
                            project_single_constraint(space, projected, i);
                            for (std::size_t j = 0; j < ambient; ++j) {
                                residual[i][j] = work[j] - projected[j];
                                moved = std::max(moved, std::abs(projected[j] - next[j]));
                                next[j] = projected[j];
                            }
                        }
                        if (space.satisfies(next, tol) && moved < 1e-13) {
                            converged = true;
                            break;
                        }
                    }
                    if (!converged && !space.satisfies(next, tol)) {
                        traj.completed = false;
                        traj.failure =
                            "cm projection did not converge (non-convex constraint?)";
                        break;
                    }
                    record_correction(before, next, next);
                }
            }
        }

        // W is defined through the decomposition identity and later tested
        // for Brownianity; the applied corrections telescope, so
        // sum_k sigma_k da_k / 2 = next - proposal exactly
        double da_step = 0.0;
        for (const auto& ev : step_events) da_step += ev.da;
        for (std::size_t j = 0; j < ambient; ++j) {
            double corr_j = 0.0;
            for (const auto& ev : step_events) corr_j += 0.5 * ev.sigma[j] * ev.da;
            dw[j] = next[j] - x[j] + 0.5 * dt_sim * x[j] - corr_j;
            traj.identity_error = std::max(traj.identity_error, std::abs(dw[j] - db[j]));
        }
        for (std::size_t k = 0; k < opts.directions.size(); ++k)
            traj.direction_increments[k].push_back(space.cm_inner(opts.directions[k], dw));

        a_total += da_step;
        x = next;
        traj.times.push_back(static_cast<double>(step + 1) * dt_sim);
        traj.local_time.push_back(a_total);
        if (opts.record_events)
            for (auto& sev : step_events) {
                ReflectionEvent ev;
                ev.time = traj.times.back();
                ev.local_increment = sev.da;
                ev.sigma = std::move(sev.sigma);
                ev.state = std::move(sev.contact);
                traj.events.push_back(std::move(ev));
            }
        if (opts.record_states) traj.states.push_back(x);
    }
    traj.final_state = x;
    return traj;
}

DecompositionReport check_decomposition(const ReflectedTrajectory& traj, std::size_t dir,
                                        std::size_t n_blocks) {
    if (dir >= traj.direction_increments.size())
        throw std::invalid_argument("check_decomposition: unknown direction index");
    const auto& inc = traj.direction_increments[dir];
    const double norm2 = traj.direction_norms2[dir];
    if (inc.size() < 2 * n_blocks || n_blocks < 8)
        throw std::invalid_argument("check_decomposition: trajectory too short for the tests");

    DecompositionReport report;
    double qv = 0.0;
    for (double v : inc) qv += v * v;
    const double t_end = static_cast<double>(inc.size()) * traj.dt_sim;
    report.qv_ratio = qv / (t_end * norm2);

    // block increments should be iid centered Gaussians
    std::vector<double> blocks;
    const std::size_t block_len = inc.size() / n_blocks;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        double sum = 0.0;
        for (std::size_t j = b * block_len; j < (b + 1) * block_len; ++j) sum += inc[j];
        blocks.push_back(sum / std::sqrt(static_cast<double>(block_len) * traj.dt_sim * norm2));
    }
    report.blocks = n_blocks;
    report.ad_statistic = stats::anderson_darling_normal(blocks);
    report.normality_ok = report.ad_statistic < stats::kAndersonDarling1pc;
    report.lag1 = stats::autocorr_lag1(blocks);
    report.uncorrelated = std::abs(report.lag1) <= 3.5 / std::sqrt(static_cast<double>(n_blocks));
    report.pass = std::abs(report.qv_ratio - 1.0) <= 0.05 && report.normality_ok &&
                  report.uncorrelated;
    return report;
}

LocusReport check_reflection_locus(const ReflectedTrajectory& traj, const Domain& domain,
                                   double tol) {
    LocusReport report;
    const std::size_t dd = static_cast<std::size_t>(traj.d);
    for (const auto& ev : traj.events) {
        if (ev.state.empty())
            throw std::invalid_argument("check_reflection_locus: events carry no states");
        ++report.events;
        std::size_t touches = 0;
        for (std::size_t i = 0; i < traj.n_grid; ++i) {
            const std::span<const double> value(ev.state.data() + i * dd, dd);
            if (std::abs(domain.signed_distance(value)) <= tol) ++touches;
        }
        if (touches == 1) ++report.single_touch;
    }
    if (report.events > 0)
        report.fraction =
            static_cast<double>(report.single_touch) / static_cast<double>(report.events);
    report.pass = report.fraction >= 0.99;
    return report;
}

}  // namespace rousk
