#include "rousk/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rousk/rng.hpp"
#include "rousk/stats.hpp"

namespace rousk {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double RieszKernel::operator()(double t) const {
    if (t < 0.0) throw std::invalid_argument("RieszKernel: negative distance");
    if (beta == 0.0) {
        if (t == 0.0) return kInf;
        return std::max(std::log(1.0 / t), 1.0);
    }
    if (beta > 0.0 && t == 0.0) return kInf;
    return std::pow(t, -beta);
}

double riesz_energy(const PointCloud& points, const std::vector<double>& weights,
                    const RieszKernel& kernel) {
    const std::size_t n = points.size();
    if (n == 0) throw std::invalid_argument("riesz_energy: empty cloud");
    if (weights.size() != n) throw std::invalid_argument("riesz_energy: weight size mismatch");
    double sum = 0.0, total = 0.0;
    for (double w : weights) {
        if (w < -1e-12) throw std::invalid_argument("riesz_energy: negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("riesz_energy: weights do not sum to 1");
    for (std::size_t i = 0; i < n; ++i) {
        if (weights[i] == 0.0) continue;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (weights[j] == 0.0) continue;
            const double d = dist(points.point(i), points.point(j));
            if (d == 0.0 && kernel.beta >= 0.0) return kInf;
            sum += 2.0 * weights[i] * weights[j] * kernel(d);
        }
    }
    return sum;
}

namespace {

// Dense symmetric kernel matrix with the regularized diagonal. Returns the
// deduplicated point indices so weights can be mapped back.
struct KernelMatrix {
    std::size_t n = 0;
    std::vector<double> k;  // n*n
    std::vector<std::size_t> original_index;
    double diag = 0.0;
    double column(std::size_t i, std::size_t j) const { return k[i * n + j]; }
};

KernelMatrix build_kernel(const PointCloud& points, const RieszKernel& kernel) {
    KernelMatrix km;
    const std::size_t n_all = points.size();
    // drop exact duplicates; they carry no extra information and make the
    // kernel singular
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < n_all; ++i) {
        bool dup = false;
        for (std::size_t j : keep)
            if (dist(points.point(i), points.point(j)) == 0.0) {
                dup = true;
                break;
            }
        if (!dup) keep.push_back(i);
    }
    km.n = keep.size();
    km.original_index = std::move(keep);
    if (km.n < 2) return km;
    double min_d = kInf;
    std::vector<double> d(km.n * km.n, 0.0);
    for (std::size_t a = 0; a < km.n; ++a)
        for (std::size_t b = a + 1; b < km.n; ++b) {
            const double v =
                dist(points.point(km.original_index[a]), points.point(km.original_index[b]));
            d[a * km.n + b] = v;
            d[b * km.n + a] = v;
            min_d = std::min(min_d, v);
        }
    km.diag = kernel(0.5 * min_d);
    km.k.resize(km.n * km.n);
    for (std::size_t a = 0; a < km.n; ++a) {
        km.k[a * km.n + a] = km.diag;
        for (std::size_t b = a + 1; b < km.n; ++b) {
            const double v = kernel(d[a * km.n + b]);
            km.k[a * km.n + b] = v;
            km.k[b * km.n + a] = v;
        }
    }
    return km;
}

}  // namespace

EquilibriumSolution minimize_energy(const PointCloud& points, const RieszKernel& kernel,
                                    const MinimizeOptions& opts) {
    if (points.size() == 0) throw std::invalid_argument("minimize_energy: empty cloud");
    EquilibriumSolution sol;
    const KernelMatrix km = build_kernel(points, kernel);
    if (km.n < 2) {
        // a single distinct point: the off-diagonal surrogate is blind here;
        // the continuum energy of an atom diverges, so capacity is 0
        sol.weights.assign(points.size(), 0.0);
        sol.weights[km.n == 1 ? km.original_index[0] : 0] = 1.0;
        sol.energy = 0.0;
        sol.capacity = 0.0;
        sol.degenerate = true;
        return sol;
    }

    const std::size_t n = km.n;
    std::vector<double> lam(n, 1.0 / static_cast<double>(n));
    std::vector<double> klam(n, 0.0);
    auto refresh = [&]() {
        double e = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += km.k[i * n + j] * lam[j];
            klam[i] = acc;
            e += lam[i] * acc;
        }
        return e;
    };
    double obj = refresh();

    // Away-step conditional gradient: linear minimization over the simplex
    // is index selection, so each iteration is O(n) given K*lambda.
    double gap = kInf;
    std::size_t it = 0;
    for (; it < opts.max_iters; ++it) {
        std::size_t i_fw = 0, i_aw = n;
        double best_fw = kInf, best_aw = -kInf;
        for (std::size_t i = 0; i < n; ++i) {
            if (klam[i] < best_fw) {
                best_fw = klam[i];
                i_fw = i;
            }
            if (lam[i] > 0.0 && klam[i] > best_aw) {
                best_aw = klam[i];
                i_aw = i;
            }
        }
        gap = 2.0 * (obj - best_fw);
        if (gap <= opts.tol * std::max(obj, 1e-300)) break;

        const bool fw_step = (obj - best_fw) >= (best_aw - obj) || i_aw == n;
        if (fw_step) {
            const double a = klam[i_fw];
            const double denom = obj - 2.0 * a + km.diag;
            if (denom <= 0.0) break;
            const double gamma = std::clamp((obj - a) / denom, 0.0, 1.0);
            if (gamma == 0.0) break;
            for (std::size_t i = 0; i < n; ++i) {
                lam[i] *= 1.0 - gamma;
                klam[i] = (1.0 - gamma) * klam[i] + gamma * km.k[i_fw * n + i];
            }
            lam[i_fw] += gamma;
            obj = (1.0 - gamma) * (1.0 - gamma) * obj +
                  2.0 * gamma * (1.0 - gamma) * a + gamma * gamma * km.diag;
        } else {
            const double a = klam[i_aw];
            const double denom = obj - 2.0 * a + km.diag;
            if (denom <= 0.0) break;
            const double gamma_max = lam[i_aw] / (1.0 - lam[i_aw]);
            const double gamma = std::clamp((a - obj) / denom, 0.0, gamma_max);
            if (gamma == 0.0) break;
            for (std::size_t i = 0; i < n; ++i) {
                lam[i] *= 1.0 + gamma;
                klam[i] = (1.0 + gamma) * klam[i] - gamma * km.k[i_aw * n + i];
            }
            lam[i_aw] -= gamma;
            if (lam[i_aw] < 1e-15) lam[i_aw] = 0.0;
            obj = (1.0 + gamma) * (1.0 + gamma) * obj -
                  2.0 * gamma * (1.0 + gamma) * a + gamma * gamma * km.diag;
        }
        if ((it + 1) % 4096 == 0) obj = refresh();  // control numeric drift
    }
    obj = refresh();

    sol.iterations = it;
    sol.gap = gap;
    sol.converged = gap <= opts.tol * std::max(obj, 1e-300);
    sol.objective = obj;
    // renormalize against rounding drift
    double total = 0.0;
    for (double w : lam) total += w;
    for (double& w : lam) w /= total;
    double diag_part = 0.0;
    for (double w : lam) diag_part += w * w;
    sol.energy = obj - km.diag * diag_part;
    sol.capacity = sol.energy > 0.0 ? 1.0 / sol.energy : 0.0;
    sol.weights.assign(points.size(), 0.0);
    for (std::size_t a = 0; a < n; ++a) sol.weights[km.original_index[a]] = lam[a];
    return sol;
}

PointCloud discretize_set(const std::string& set_id, std::size_t resolution) {
    if (set_id == "empty") {
        PointCloud empty;
        empty.dim = 1;
        return empty;
    }
    if (set_id.rfind("csv:", 0) == 0) return load_point_cloud_csv(set_id.substr(4));

    const auto colon = set_id.find(':');
    const std::string name = set_id.substr(0, colon);
    int d = 0;
    double r = 1.0, a = 0.5;
    if (colon != std::string::npos) {
        std::stringstream ss(set_id.substr(colon + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("set id: expected key=value in '" + set_id + "'");
            const std::string key = item.substr(0, eq);
            const double val = std::stod(item.substr(eq + 1));
            if (key == "d") d = static_cast<int>(val);
            else if (key == "r") r = val;
            else if (key == "a") a = val;
            else throw std::invalid_argument("set id: unknown key '" + key + "'");
        }
    }
    if (resolution == 0) throw std::invalid_argument("discretize_set: resolution must be >= 1");

    Rng rng(0x5e7c10dULL ^ splitmix64(resolution), 0);
    PointCloud cloud;
    if (name == "singleton") {
        if (d < 1) throw std::invalid_argument("singleton: need d >= 1");
        cloud.dim = d;
        // blob of shrinking radius 1/resolution around (0,...,0,1): the
        // standard finite surrogate of an atom at that point
        const double h = 1.0 / static_cast<double>(resolution);
        Point p(d);
        for (std::size_t i = 0; i < resolution; ++i) {
            double n2;
            do {
                n2 = 0.0;
                for (int k = 0; k < d; ++k) {
                    p[k] = rng.normal();
                    n2 += p[k] * p[k];
                }
            } while (n2 == 0.0);
            const double radial = h * std::pow(rng.uniform(), 1.0 / d) / std::sqrt(n2);
            for (int k = 0; k < d; ++k) p[k] *= radial;
            p[d - 1] += 1.0;
            cloud.push_back(p);
        }
        return cloud;
    }
    if (name == "sphere") {
        if (d < 2) throw std::invalid_argument("sphere: need d >= 2");
        cloud.dim = d;
        Point p(d);
        for (std::size_t i = 0; i < resolution; ++i) {
            double n2;
            do {
                n2 = 0.0;
                for (int k = 0; k < d; ++k) {
                    p[k] = rng.normal();
                    n2 += p[k] * p[k];
                }
            } while (n2 == 0.0);
            for (int k = 0; k < d; ++k) p[k] *= r / std::sqrt(n2);
            cloud.push_back(p);
        }
        return cloud;
    }
    if (name == "square") {
        if (d < 2) throw std::invalid_argument("square: need d >= 2");
        cloud.dim = d;
        Point p(d, 0.0);
        if (d >= 3) p[2] = 1.0;
        for (std::size_t i = 0; i < resolution; ++i) {
            p[0] = a * (2.0 * rng.uniform() - 1.0);
            p[1] = a * (2.0 * rng.uniform() - 1.0);
            cloud.push_back(p);
        }
        return cloud;
    }
    throw std::invalid_argument("unknown set id '" + set_id + "'");
}

double capacity_value(const std::string& set_id, double beta, std::size_t resolution,
                      const MinimizeOptions& opts) {
    const PointCloud cloud = discretize_set(set_id, resolution);
    if (cloud.size() == 0) return 0.0;
    if (beta < 0.0) return 1.0;
    RieszKernel kernel{beta};
    return minimize_energy(cloud, kernel, opts).capacity;
}

VanishingCapacityReport check_vanishing_capacity(const Domain& domain,
                                                 const std::vector<double>& r_schedule,
                                                 const std::vector<std::size_t>& resolutions,
                                                 std::uint64_t seed,
                                                 const MinimizeOptions& opts) {
    if (r_schedule.size() != resolutions.size() || r_schedule.empty())
        throw std::invalid_argument("check_vanishing_capacity: schedule size mismatch");
    VanishingCapacityReport report;
    report.beta = static_cast<double>(domain.dim() - 4);

    bool all_empty = true;
    for (std::size_t i = 0; i < r_schedule.size(); ++i) {
        const auto approx =
            singular_set(domain, r_schedule[i], resolutions[i], splitmix64(seed + i));
        CapacitySchedulePoint pt;
        pt.r = r_schedule[i];
        pt.resolution = resolutions[i];
        pt.cloud_size = approx.points.size();
        if (approx.points.size() == 0) {
            pt.capacity = 0.0;
        } else if (report.beta < 0.0) {
            pt.capacity = 1.0;
            all_empty = false;
        } else {
            const auto sol = minimize_energy(approx.points, RieszKernel{report.beta}, opts);
            pt.energy = sol.energy;
            pt.capacity = sol.capacity;
            pt.gap = sol.gap;
            all_empty = false;
        }
        report.schedule.push_back(pt);
    }

    if (all_empty) {
        report.verdict = "holds";
        return report;
    }
    if (report.beta < 0.0) {
        // nonempty set with beta < 0 has capacity 1 by definition
        report.verdict = "fails";
        return report;
    }

    const double initial = report.schedule.front().capacity;
    const double final_cap = report.schedule.back().capacity;
    report.threshold = 1e-2 * initial;
    bool nonincreasing = true;
    for (std::size_t i = 1; i < report.schedule.size(); ++i)
        if (report.schedule[i].capacity > report.schedule[i - 1].capacity * 1.05)
            nonincreasing = false;

    if (final_cap <= report.threshold) {
        report.verdict = "holds";
        return report;
    }
    if (!nonincreasing) {
        report.verdict = final_cap > 0.5 * initial ? "fails" : "inconclusive";
        return report;
    }
    // Extrapolate to r -> 0: capacity vs z, with z = r^beta for beta > 0 and
    // z = 1/max(log(1/r),1) for the log kernel; intercept is the limit guess.
    std::vector<double> zs, caps;
    for (const auto& pt : report.schedule) {
        const double z = report.beta > 0.0 ? std::pow(pt.r, report.beta)
                                           : 1.0 / std::max(std::log(1.0 / pt.r), 1.0);
        zs.push_back(z);
        caps.push_back(pt.capacity);
    }
    double intercept;
    if (zs.size() >= 2) {
        intercept = stats::fit_line(zs, caps).intercept;
    } else {
        intercept = final_cap;
    }
    if (intercept <= 0.1 * initial) report.verdict = "holds";
    else if (intercept >= 0.4 * initial) report.verdict = "fails";
    else report.verdict = "inconclusive";
    return report;
}

}  // namespace rousk
