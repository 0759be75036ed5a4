#include "rousk/brownian.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "rousk/stats.hpp"

namespace rousk {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

PathSample sample_path(int dim, double horizon, std::size_t n_steps,
                       std::span<const double> start, std::uint64_t seed,
                       std::uint64_t stream) {
    if (dim < 1) throw std::invalid_argument("sample_path: dim must be >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("sample_path: horizon must be > 0");
    if (n_steps < 1) throw std::invalid_argument("sample_path: n_steps must be >= 1");
    if (start.size() != static_cast<std::size_t>(dim))
        throw std::invalid_argument("sample_path: start dimension mismatch");
    PathSample path;
    path.dim = dim;
    path.horizon = horizon;
    path.n_steps = n_steps;
    path.values.resize((n_steps + 1) * static_cast<std::size_t>(dim));
    PathWalker walker(dim, horizon, n_steps, start, seed, stream);
    std::copy(start.begin(), start.end(), path.values.begin());
    std::size_t k = 1;
    while (walker.advance()) {
        const auto pos = walker.position();
        std::copy(pos.begin(), pos.end(),
                  path.values.begin() + k * static_cast<std::size_t>(dim));
        ++k;
    }
    return path;
}

PathWalker::PathWalker(int dim, double horizon, std::size_t n_steps,
                       std::span<const double> start, std::uint64_t seed,
                       std::uint64_t stream)
    : rng_(seed, stream),
      pos_(start.begin(), start.end()),
      dt_(horizon / static_cast<double>(n_steps)),
      sigma_(std::sqrt(horizon / static_cast<double>(n_steps))),
      step_(0),
      n_steps_(n_steps) {
    if (dim < 1 || start.size() != static_cast<std::size_t>(dim))
        throw std::invalid_argument("PathWalker: bad dimension");
    if (!(horizon > 0.0) || n_steps < 1)
        throw std::invalid_argument("PathWalker: bad horizon or step count");
}

bool PathWalker::advance() {
    if (step_ >= n_steps_) return false;
    for (double& v : pos_) v += sigma_ * rng_.normal();
    ++step_;
    return true;
}

double fp_density(const FirstPassageLaw& law, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("fp_density: t must be > 0");
    if (!(law.barrier > 0.0)) throw std::invalid_argument("fp_density: barrier must be > 0");
    const double r = law.barrier, c = law.drift_coeff;
    const double arg = r + c * t;
    // evaluated in log space: the direct formula is 0 * inf for tiny t
    const double logv = std::log(r) - 0.5 * std::log(kTwoPi) - 1.5 * std::log(t) -
                        arg * arg / (2.0 * t);
    return std::exp(logv);
}

double fp_atom(const FirstPassageLaw& law) {
    if (!(law.barrier > 0.0)) throw std::invalid_argument("fp_atom: barrier must be > 0");
    return -std::expm1(-2.0 * law.drift_coeff * law.barrier);
}

double fp_density_integral(const FirstPassageLaw& law, double lo) {
    if (lo < 0.0) throw std::invalid_argument("fp_density_integral: lo must be >= 0");
    // t = lo + scale * s/(1-s) maps (0, 1) to (lo, inf); the scale keeps the
    // density mode (near barrier^2 / 3) away from the endpoint
    const double scale = std::max(1.0, law.barrier * law.barrier);
    boost::math::quadrature::tanh_sinh<double> integrator;
    const auto integrand = [&](double s) {
        const double one_minus = 1.0 - s;
        const double t = lo + scale * s / one_minus;
        if (!(t > 0.0) || !std::isfinite(t)) return 0.0;
        return fp_density(law, t) * scale / (one_minus * one_minus);
    };
    double error = 0.0;
    const double value = integrator.integrate(integrand, 0.0, 1.0, 1e-12, &error);
    if (!(error < 1e-8 * std::max(1.0, std::abs(value))))
        throw std::runtime_error("fp_density_integral: quadrature did not converge");
    return value;
}

double fp_survival(const FirstPassageLaw& law, double u) {
    if (!(u > 0.0)) throw std::invalid_argument("fp_survival: u must be > 0");
    return fp_atom(law) + fp_density_integral(law, u);
}

double fp_survival_closed_form(const FirstPassageLaw& law, double u) {
    if (!(u > 0.0)) throw std::invalid_argument("fp_survival_closed_form: u must be > 0");
    const double r = law.barrier, c = law.drift_coeff;
    const double su = std::sqrt(u);
    const double hit = stats::normal_cdf((-r - c * u) / su) +
                       std::exp(-2.0 * c * r) * stats::normal_cdf((-r + c * u) / su);
    return 1.0 - hit;
}

double halfline_stay_prob(double r, double u) {
    if (!(u > 0.0)) throw std::invalid_argument("halfline_stay_prob: u must be > 0");
    if (r <= 0.0) return 0.0;
    return 2.0 * stats::normal_cdf(r / std::sqrt(u)) - 1.0;
}

double interval_exit_survival(double x, double u) {
    if (!(u > 0.0)) throw std::invalid_argument("interval_exit_survival: u must be > 0");
    if (std::abs(x) >= 1.0) return 0.0;
    constexpr double kPi = 3.14159265358979323846;
    double sum = 0.0;
    if (u >= 0.5) {
        // spectral series, fast for large u
        for (int k = 0; k < 50; ++k) {
            const double m = 2.0 * k + 1.0;
            sum += (4.0 / kPi) * ((k % 2 == 0) ? 1.0 : -1.0) / m *
                   std::exp(-m * m * kPi * kPi * u / 8.0) * std::cos(m * kPi * x / 2.0);
        }
    } else {
        // method of images (period 4, sign flip at the reflections), fast for
        // small u where the spectral series converges slowly
        const double su = std::sqrt(u);
        for (int k = -6; k <= 6; ++k) {
            const double s = 4.0 * k;
            sum += stats::normal_cdf((1.0 - x - s) / su) -
                   stats::normal_cdf((-1.0 - x - s) / su) -
                   stats::normal_cdf((x - 1.0 - s) / su) +
                   stats::normal_cdf((x - 3.0 - s) / su);
        }
    }
    return std::min(1.0, std::max(0.0, sum));
}

double path_min_q(const Domain& domain, const PathSample& path) {
    if (path.dim != domain.dim())
        throw std::invalid_argument("path_min_q: dimension mismatch");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= path.n_steps; ++k)
        best = std::min(best, domain.signed_distance(path.point(k)));
    return best;
}

std::optional<double> first_hit_time(const SingularSetApprox& tube, const PathSample& path) {
    if (tube.points.size() == 0) return std::nullopt;
    for (std::size_t k = 0; k <= path.n_steps; ++k)
        if (in_tube(tube, path.point(k))) return path.time(k);
    return std::nullopt;
}

std::optional<double> first_exit_time(const Domain& domain, double level,
                                      const PathSample& path) {
    for (std::size_t k = 0; k <= path.n_steps; ++k)
        if (domain.signed_distance(path.point(k)) <= level) return path.time(k);
    return std::nullopt;
}

}  // namespace rousk
