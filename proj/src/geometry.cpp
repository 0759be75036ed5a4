#include "rousk/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rousk/rng.hpp"

namespace rousk {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

double dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

Domain::Domain(int dim, std::string id, bool convex, double diameter)
    : dim_(dim), id_(std::move(id)), convex_(convex), diameter_(diameter) {
    if (dim < 1) throw std::invalid_argument("Domain: dim must be >= 1");
    if (!(diameter > 0.0)) throw std::invalid_argument("Domain: diameter must be > 0");
}

double Domain::signed_distance(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim_)
        throw std::invalid_argument("signed_distance: dimension mismatch for domain " + id_);
    for (double v : x)
        if (!std::isfinite(v)) throw std::invalid_argument("signed_distance: non-finite point");
    return q(x);
}

PointCloud Domain::boundary_sample(std::size_t count, std::uint64_t seed) const {
    // Root-find q = 0 along rays from the origin. Requires q(0) > 0.
    PointCloud cloud;
    cloud.dim = dim_;
    cloud.coords.reserve(count * dim_);
    Point origin(dim_, 0.0);
    const double q0 = q(origin);
    if (!(q0 > 0.0))
        throw std::runtime_error("boundary_sample: origin not interior for domain " + id_);
    Rng rng(seed, 0xb07dULL);
    Point dir(dim_), probe(dim_);
    const double reach = 4.0 * diameter_;
    std::size_t found = 0, attempts = 0;
    while (found < count) {
        if (++attempts > 64 * count + 1024)
            throw std::runtime_error("boundary_sample: ray sampling failed for domain " + id_);
        double n2 = 0.0;
        for (int k = 0; k < dim_; ++k) {
            dir[k] = rng.normal();
            n2 += dir[k] * dir[k];
        }
        const double dn = std::sqrt(n2);
        if (dn == 0.0) continue;
        for (int k = 0; k < dim_; ++k) dir[k] /= dn;
        // march outward until q < 0
        double lo = 0.0, hi = -1.0;
        for (double t = 0.125 * diameter_; t <= reach; t *= 1.6) {
            for (int k = 0; k < dim_; ++k) probe[k] = t * dir[k];
            const double qv = q(probe);
            if (qv > 0.0) {
                lo = t;
            } else {
                hi = t;
                break;
            }
        }
        if (hi < 0.0) continue;  // unbounded in this direction
        for (int it = 0; it < 80 && hi - lo > 1e-13 * diameter_; ++it) {
            const double mid = 0.5 * (lo + hi);
            for (int k = 0; k < dim_; ++k) probe[k] = mid * dir[k];
            (q(probe) > 0.0 ? lo : hi) = mid;
        }
        const double t = 0.5 * (lo + hi);
        for (int k = 0; k < dim_; ++k) probe[k] = t * dir[k];
        cloud.push_back(probe);
        ++found;
    }
    return cloud;
}

// ---------------------------------------------------------------------------
// Catalog domains
// ---------------------------------------------------------------------------

namespace {

class BallDomain final : public Domain {
public:
    BallDomain(int d, double radius)
        : Domain(d, "ball:d=" + std::to_string(d) + ",r=" + std::to_string(radius),
                 /*convex=*/true, 2.0 * radius),
          radius_(radius) {
        if (!(radius > 0.0)) throw std::invalid_argument("ball: radius must be > 0");
    }

    PointCloud boundary_sample(std::size_t count, std::uint64_t seed) const override {
        PointCloud cloud;
        cloud.dim = dim();
        cloud.coords.reserve(count * dim());
        Rng rng(seed, 0xb07dULL);
        Point p(dim());
        for (std::size_t i = 0; i < count; ++i) {
            double n2 = 0.0;
            do {
                n2 = 0.0;
                for (int k = 0; k < dim(); ++k) {
                    p[k] = rng.normal();
                    n2 += p[k] * p[k];
                }
            } while (n2 == 0.0);
            const double scale = radius_ / std::sqrt(n2);
            for (int k = 0; k < dim(); ++k) p[k] *= scale;
            cloud.push_back(p);
        }
        return cloud;
    }

protected:
    double q(std::span<const double> x) const override { return radius_ - norm(x); }

private:
    double radius_;
};

// O = {x_d < c}; the working window for boundary sampling is [-2c', 2c']^{d-1}.
class HalfSpaceDomain final : public Domain {
public:
    HalfSpaceDomain(int d, double c)
        : Domain(d, "halfspace:d=" + std::to_string(d) + ",c=" + std::to_string(c),
                 /*convex=*/true, 4.0 * std::max(1.0, std::abs(c))),
          c_(c) {
        if (!(c > 0.0)) throw std::invalid_argument("halfspace: need c > 0 so that 0 is interior");
    }

    PointCloud boundary_sample(std::size_t count, std::uint64_t seed) const override {
        PointCloud cloud;
        cloud.dim = dim();
        Rng rng(seed, 0xb07dULL);
        Point p(dim());
        const double window = diameter();
        for (std::size_t i = 0; i < count; ++i) {
            for (int k = 0; k + 1 < dim(); ++k) p[k] = window * (2.0 * rng.uniform() - 1.0);
            p[dim() - 1] = c_;
            cloud.push_back(p);
        }
        return cloud;
    }

protected:
    double q(std::span<const double> x) const override { return c_ - x[x.size() - 1]; }

private:
    double c_;
};

class BoxDomain final : public Domain {
public:
    BoxDomain(int d, double half)
        : Domain(d, "box:d=" + std::to_string(d) + ",half=" + std::to_string(half),
                 /*convex=*/true, 2.0 * half * std::sqrt(static_cast<double>(d))),
          half_(half) {
        if (!(half > 0.0)) throw std::invalid_argument("box: half width must be > 0");
    }

    PointCloud boundary_sample(std::size_t count, std::uint64_t seed) const override {
        PointCloud cloud;
        cloud.dim = dim();
        Rng rng(seed, 0xb07dULL);
        Point p(dim());
        for (std::size_t i = 0; i < count; ++i) {
            const int face = static_cast<int>(rng.uniform() * 2 * dim()) % (2 * dim());
            for (int k = 0; k < dim(); ++k) p[k] = half_ * (2.0 * rng.uniform() - 1.0);
            p[face / 2] = (face % 2 == 0) ? half_ : -half_;
            cloud.push_back(p);
        }
        return cloud;
    }

protected:
    double q(std::span<const double> x) const override {
        double inside = kInf;    // distance to nearest face from inside
        double out2 = 0.0;       // squared outward excess
        for (double v : x) {
            const double e = std::abs(v) - half_;
            inside = std::min(inside, -e);
            if (e > 0.0) out2 += e * e;
        }
        return out2 > 0.0 ? -std::sqrt(out2) : inside;
    }

private:
    double half_;
};

double point_segment_dist(double px, double py, double ax, double ay, double bx, double by) {
    const double vx = bx - ax, vy = by - ay;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = px - (ax + t * vx), dy = py - (ay + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

// The paper's example: O = B(0,2) minus the solid spike
// {x_d in [1,2), x_1^2+...+x_{d-1}^2 <= (x_d-1)^2}. In profile coordinates
// (u, s) = (|x_perp|, x_d) the spike is the triangle A=(0,1), B=(0,2),
// C=(1,2), and the spike meets the sphere at the rim point
// R* = ((sqrt7-1)/2, (1+sqrt7)/2). Sigma = {(0,...,0,1)}.
class SpikeDomain final : public Domain {
public:
    explicit SpikeDomain(int d)
        : Domain(d, "example-spike:d=" + std::to_string(d), /*convex=*/false, 4.0) {
        if (d < 2) throw std::invalid_argument("example-spike: need d >= 2");
        s_rim_ = 0.5 * (1.0 + std::sqrt(7.0));
        u_rim_ = s_rim_ - 1.0;
    }

    PointCloud boundary_sample(std::size_t count, std::uint64_t seed) const override {
        // Mixture of the sphere (minus the removed cap) and the lateral cone
        // surface. Half of the lateral draws use an s-uniform law so that the
        // neighbourhood of the tip keeps resolution at desk-scale counts.
        PointCloud cloud;
        cloud.dim = dim();
        Rng rng(seed, 0xb07dULL);
        Point p(dim());
        const int dp = dim() - 1;
        for (std::size_t i = 0; i < count; ++i) {
            const double pick = rng.uniform();
            if (pick < 0.7) {
                // sphere radius 2, reject the cap s >= s_rim
                for (;;) {
                    double n2 = 0.0;
                    for (int k = 0; k < dim(); ++k) {
                        p[k] = rng.normal();
                        n2 += p[k] * p[k];
                    }
                    if (n2 == 0.0) continue;
                    const double scale = 2.0 / std::sqrt(n2);
                    for (int k = 0; k < dim(); ++k) p[k] *= scale;
                    if (p[dim() - 1] < s_rim_) break;
                }
            } else {
                double t = rng.uniform();
                double s;
                if (pick < 0.85) {
                    // area-weighted: density ~ (s-1)^{d-2}
                    s = 1.0 + u_rim_ * std::pow(t, 1.0 / static_cast<double>(dp));
                } else {
                    s = 1.0 + u_rim_ * t;  // uniform in s, oversamples the tip
                }
                const double u = s - 1.0;
                double n2 = 0.0;
                do {
                    n2 = 0.0;
                    for (int k = 0; k < dp; ++k) {
                        p[k] = rng.normal();
                        n2 += p[k] * p[k];
                    }
                } while (n2 == 0.0);
                const double scale = u / std::sqrt(n2);
                for (int k = 0; k < dp; ++k) p[k] *= scale;
                p[dim() - 1] = s;
            }
            cloud.push_back(p);
        }
        return cloud;
    }

protected:
    double q(std::span<const double> x) const override {
        double u2 = 0.0;
        for (std::size_t k = 0; k + 1 < x.size(); ++k) u2 += x[k] * x[k];
        const double u = std::sqrt(u2);
        const double s = x[x.size() - 1];
        const double rad = std::sqrt(u * u + s * s);
        const bool in_tri = (s >= 1.0 && s <= 2.0 && u <= s - 1.0);
        if (rad < 2.0 && !in_tri) {
            // interior: distance to the sphere or to the spike
            return std::min(2.0 - rad, tri_dist(u, s));
        }
        // complement: distance to the closure of O, whose boundary is the
        // sphere minus the removed cap plus the lateral edge A--R*.
        const double d_lateral = point_segment_dist(u, s, 0.0, 1.0, u_rim_, s_rim_);
        double d_arc;
        if (rad > 0.0) {
            const double zs = 2.0 * s / rad;  // s-coordinate of the radial projection
            if (zs > s_rim_) {
                const double du = u - u_rim_, ds = s - s_rim_;
                d_arc = std::sqrt(du * du + ds * ds);
            } else {
                d_arc = std::abs(rad - 2.0);
            }
        } else {
            d_arc = 2.0;
        }
        return -std::min(d_lateral, d_arc);
    }

private:
    double tri_dist(double u, double s) const {
        if (s >= 1.0 && s <= 2.0 && u <= s - 1.0) return 0.0;
        const double d1 = point_segment_dist(u, s, 0.0, 1.0, 1.0, 2.0);  // lateral edge
        const double d2 = point_segment_dist(u, s, 0.0, 2.0, 1.0, 2.0);  // cap edge
        const double d3 = point_segment_dist(u, s, 0.0, 1.0, 0.0, 2.0);  // axis edge
        return std::min({d1, d2, d3});
    }

    double s_rim_;
    double u_rim_;
};

// d = 5 demonstration domain whose singular set is the 2-dimensional square
// {|x_1| <= a, |x_2| <= a, x_3 = 1, x_4 = x_5 = 0}: a cone over the square is
// removed from B(0,2). Signed distance is exact on the O side away from the
// rim and a 1-Lipschitz approximation inside the removed set.
class CubeSpikeDomain final : public Domain {
public:
    CubeSpikeDomain(int d, double a)
        : Domain(d, "cube-spike:d=" + std::to_string(d) + ",a=" + std::to_string(a),
                 /*convex=*/false, 4.0),
          a_(a) {
        if (d < 5) throw std::invalid_argument("cube-spike: need d >= 5");
        if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("cube-spike: need 0 < a < 1");
    }

    PointCloud boundary_sample(std::size_t count, std::uint64_t seed) const override {
        PointCloud cloud;
        cloud.dim = dim();
        Rng rng(seed, 0xb07dULL);
        const std::size_t n_lateral = count / 2;
        Point p(dim(), 0.0);
        for (std::size_t i = 0; i < n_lateral; ++i) {
            const double s = 1.0 + 0.8 * rng.uniform();
            const double ang = 6.283185307179586 * rng.uniform();
            std::fill(p.begin(), p.end(), 0.0);
            p[0] = a_ * (2.0 * rng.uniform() - 1.0);
            p[1] = a_ * (2.0 * rng.uniform() - 1.0);
            p[2] = s;
            p[3] = (s - 1.0) * std::cos(ang);
            p[4] = (s - 1.0) * std::sin(ang);
            cloud.push_back(p);
        }
        PointCloud rays = Domain::boundary_sample(count - n_lateral, seed);
        cloud.coords.insert(cloud.coords.end(), rays.coords.begin(), rays.coords.end());
        return cloud;
    }

protected:
    double q(std::span<const double> x) const override {
        double u2 = 0.0;
        const double e1 = std::max(0.0, std::abs(x[0]) - a_);
        const double e2 = std::max(0.0, std::abs(x[1]) - a_);
        u2 = e1 * e1 + e2 * e2;
        for (std::size_t k = 3; k < x.size(); ++k) u2 += x[k] * x[k];
        const double u = std::sqrt(u2);
        const double s = x[2];
        const double ball = 2.0 - norm(x);
        double spike;
        if (s >= 1.0 && s <= 2.0 && u <= s - 1.0) {
            const double d1 = point_segment_dist(u, s, 0.0, 1.0, 1.0, 2.0);
            const double d2 = point_segment_dist(u, s, 0.0, 2.0, 1.0, 2.0);
            spike = -std::min(d1, d2);
        } else {
            const double d1 = point_segment_dist(u, s, 0.0, 1.0, 1.0, 2.0);
            const double d2 = point_segment_dist(u, s, 0.0, 2.0, 1.0, 2.0);
            const double d3 = point_segment_dist(u, s, 0.0, 1.0, 0.0, 2.0);
            spike = std::min({d1, d2, d3});
        }
        return std::min(ball, spike);
    }

private:
    double a_;
};

// Plane with the closed quadrant {x >= 1, y >= 1} removed. The re-entrant
// corner (1,1) has delta = 0; flat points have finite delta equal to their
// distance to the other edge.
class NotchDomain final : public Domain {
public:
    NotchDomain() : Domain(2, "notch:d=2", /*convex=*/false, 8.0) {}

    PointCloud boundary_sample(std::size_t count, std::uint64_t seed) const override {
        PointCloud cloud;
        cloud.dim = 2;
        Rng rng(seed, 0xb07dULL);
        const double window = diameter();
        Point p(2);
        for (std::size_t i = 0; i < count; ++i) {
            const double t = 1.0 + window * rng.uniform();
            if (rng.uniform() < 0.5) {
                p[0] = t;
                p[1] = 1.0;
            } else {
                p[0] = 1.0;
                p[1] = t;
            }
            cloud.push_back(p);
        }
        return cloud;
    }

protected:
    double q(std::span<const double> x) const override {
        const double px = x[0] - 1.0, py = x[1] - 1.0;
        if (px >= 0.0 && py >= 0.0) return -std::min(px, py);
        if (px < 0.0 && py < 0.0) return std::sqrt(px * px + py * py);
        return px < 0.0 ? -px : -py;
    }
};

class SampledDomain final : public Domain {
public:
    explicit SampledDomain(PointCloud cloud, std::string id)
        : Domain(cloud.dim, std::move(id), /*convex=*/false, sampled_diameter(cloud)),
          cloud_(std::move(cloud)) {}

    PointCloud boundary_sample(std::size_t count, std::uint64_t seed) const override {
        PointCloud out;
        out.dim = dim();
        Rng rng(seed, 0xb07dULL);
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t j =
                std::min(cloud_.size() - 1,
                         static_cast<std::size_t>(rng.uniform() * cloud_.size()));
            out.push_back(cloud_.point(j));
        }
        return out;
    }

protected:
    // Star-shaped reconstruction: the sign is decided by whether x lies on
    // the origin side of the supporting hyperplane at the nearest sample.
    double q(std::span<const double> x) const override {
        double best = kInf;
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < cloud_.size(); ++i) {
            const double d = dist(x, cloud_.point(i));
            if (d < best) {
                best = d;
                best_i = i;
            }
        }
        const auto p = cloud_.point(best_i);
        double pp = 0.0, xp = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            pp += p[k] * p[k];
            xp += x[k] * p[k];
        }
        return (xp <= pp) ? best : -best;
    }

private:
    static double sampled_diameter(const PointCloud& cloud) {
        if (cloud.size() == 0) throw std::invalid_argument("sampled domain: empty cloud");
        double r = 0.0;
        for (std::size_t i = 0; i < cloud.size(); ++i) r = std::max(r, norm(cloud.point(i)));
        return 2.0 * r;
    }
    PointCloud cloud_;
};

class TransformedDomain final : public Domain {
public:
    TransformedDomain(DomainPtr base, std::vector<double> rot, Point shift)
        : Domain(base->dim(), base->id() + "+rigid", base->convex(), base->diameter()),
          base_(std::move(base)),
          rot_(std::move(rot)),
          shift_(std::move(shift)) {
        const std::size_t d = static_cast<std::size_t>(dim());
        if (rot_.size() != d * d || shift_.size() != d)
            throw std::invalid_argument("transformed domain: bad rotation/shift size");
    }

    PointCloud boundary_sample(std::size_t count, std::uint64_t seed) const override {
        PointCloud base_cloud = base_->boundary_sample(count, seed);
        PointCloud out;
        out.dim = dim();
        Point y(dim());
        for (std::size_t i = 0; i < base_cloud.size(); ++i) {
            const auto p = base_cloud.point(i);
            for (int r = 0; r < dim(); ++r) {
                double acc = shift_[r];
                for (int c = 0; c < dim(); ++c) acc += rot_[r * dim() + c] * p[c];
                y[r] = acc;
            }
            out.push_back(y);
        }
        return out;
    }

protected:
    double q(std::span<const double> x) const override {
        Point y(dim());
        for (int r = 0; r < dim(); ++r) {
            double acc = 0.0;
            for (int c = 0; c < dim(); ++c) acc += rot_[c * dim() + r] * (x[c] - shift_[c]);
            y[r] = acc;
        }
        return base_->signed_distance(y);
    }

private:
    DomainPtr base_;
    std::vector<double> rot_;
    Point shift_;
};

std::pair<std::string, std::vector<std::pair<std::string, double>>> parse_id(
    const std::string& id) {
    const auto colon = id.find(':');
    std::string name = id.substr(0, colon);
    std::vector<std::pair<std::string, double>> kv;
    if (colon != std::string::npos) {
        std::stringstream ss(id.substr(colon + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("domain id: expected key=value in '" + id + "'");
            kv.emplace_back(item.substr(0, eq), std::stod(item.substr(eq + 1)));
        }
    }
    return {name, kv};
}

double get_param(const std::vector<std::pair<std::string, double>>& kv, const std::string& key,
                 double fallback, bool required) {
    for (const auto& [k, v] : kv)
        if (k == key) return v;
    if (required) throw std::invalid_argument("domain id: missing parameter '" + key + "'");
    return fallback;
}

}  // namespace

DomainPtr make_domain(const std::string& id) {
    if (id.rfind("csv:", 0) == 0) return make_sampled_domain(id.substr(4));
    const auto [name, kv] = parse_id(id);
    if (name == "ball") {
        const int d = static_cast<int>(get_param(kv, "d", 0, true));
        return std::make_shared<BallDomain>(d, get_param(kv, "r", 1.0, false));
    }
    if (name == "halfspace") {
        const int d = static_cast<int>(get_param(kv, "d", 0, true));
        return std::make_shared<HalfSpaceDomain>(d, get_param(kv, "c", 1.0, false));
    }
    if (name == "box") {
        const int d = static_cast<int>(get_param(kv, "d", 0, true));
        return std::make_shared<BoxDomain>(d, get_param(kv, "half", 1.0, false));
    }
    if (name == "example-spike") {
        return std::make_shared<SpikeDomain>(static_cast<int>(get_param(kv, "d", 4, false)));
    }
    if (name == "cube-spike") {
        return std::make_shared<CubeSpikeDomain>(static_cast<int>(get_param(kv, "d", 5, false)),
                                                 get_param(kv, "a", 0.5, false));
    }
    if (name == "notch") {
        return std::make_shared<NotchDomain>();
    }
    throw std::invalid_argument("unknown domain id '" + id + "'");
}

std::vector<std::string> catalog_ids() {
    return {"ball:d=<dim>,r=<radius>",      "halfspace:d=<dim>,c=<level>",
            "box:d=<dim>,half=<halfwidth>", "example-spike:d=<dim>",
            "cube-spike:d=5,a=<halfwidth>", "notch:d=2",
            "csv:<path>"};
}

PointCloud load_point_cloud_csv(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw std::invalid_argument("cannot open boundary CSV '" + csv_path + "'");
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("boundary CSV '" + csv_path + "' is empty");
    // header row defines the dimension
    int d = 1;
    for (char c : line)
        if (c == ',') ++d;
    PointCloud cloud;
    cloud.dim = d;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        int col = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                cloud.coords.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::invalid_argument("boundary CSV '" + csv_path + "' line " +
                                            std::to_string(lineno) + ": bad float '" + cell + "'");
            }
            ++col;
        }
        if (col != d)
            throw std::invalid_argument("boundary CSV '" + csv_path + "' line " +
                                        std::to_string(lineno) + ": expected " +
                                        std::to_string(d) + " columns");
    }
    if (cloud.size() == 0) throw std::invalid_argument("boundary CSV has no data rows");
    return cloud;
}

DomainPtr make_sampled_domain(const std::string& csv_path) {
    return std::make_shared<SampledDomain>(load_point_cloud_csv(csv_path), "csv:" + csv_path);
}

DomainPtr make_transformed_domain(DomainPtr base, const std::vector<double>& rotation,
                                  const Point& shift) {
    return std::make_shared<TransformedDomain>(std::move(base), rotation, shift);
}

Point project_to_closure(const Domain& domain, std::span<const double> x, double tol) {
    if (tol <= 0.0) tol = 1e-9 * domain.diameter();
    Point p(x.begin(), x.end());
    double qv = domain.signed_distance(p);
    if (qv >= 0.0) return p;
    const int d = domain.dim();
    Point probe(p);
    for (int it = 0; it < 50 && qv < -tol; ++it) {
        const double step = std::max(1e-7 * domain.diameter(), 1e-3 * std::abs(qv));
        double g2 = 0.0;
        Point grad(d);
        for (int k = 0; k < d; ++k) {
            probe[k] = p[k] + step;
            const double qp = domain.signed_distance(probe);
            probe[k] = p[k] - step;
            const double qm = domain.signed_distance(probe);
            probe[k] = p[k];
            grad[k] = (qp - qm) / (2.0 * step);
            g2 += grad[k] * grad[k];
        }
        if (g2 == 0.0) break;
        // Newton step for the level set q = 0
        for (int k = 0; k < d; ++k) {
            p[k] -= qv * grad[k] / g2;
            probe[k] = p[k];
        }
        qv = domain.signed_distance(p);
    }
    if (qv < -tol)
        throw std::runtime_error("project_to_closure: no convergence for domain " + domain.id());
    return p;
}

std::optional<Point> outward_direction(const Domain& domain, std::span<const double> y,
                                       double step) {
    const int d = domain.dim();
    Point probe(y.begin(), y.end());
    Point grad(d);
    for (int k = 0; k < d; ++k) {
        probe[k] = y[k] + step;
        const double qp = domain.signed_distance(probe);
        probe[k] = y[k] - step;
        const double qm = domain.signed_distance(probe);
        probe[k] = y[k];
        grad[k] = (qp - qm) / (2.0 * step);
    }
    const double g = norm(grad);
    if (std::abs(g - 1.0) > 0.2 || g == 0.0) return std::nullopt;
    for (double& v : grad) v /= -g;  // outward = direction of decreasing q
    return grad;
}

namespace {

// True when no sampled boundary point other than y intrudes into the closed
// ball B(z, r) and z itself lies outside O.
bool certify_tangent_ball(const Domain& domain, std::span<const double> y, const Point& z,
                          double r, double tol, const PointCloud& boundary) {
    if (domain.signed_distance(z) > tol) return false;
    const double excl = 10.0 * tol;
    for (std::size_t i = 0; i < boundary.size(); ++i) {
        const auto p = boundary.point(i);
        if (dist(p, y) <= excl) continue;
        if (dist(p, std::span<const double>(z.data(), z.size())) < r - tol) return false;
    }
    return true;
}

}  // namespace

ExteriorBallReport exterior_ball_radius(const Domain& domain, std::span<const double> y,
                                        const ExteriorBallOptions& opts) {
    const double tol = opts.tol > 0.0 ? opts.tol : 1e-6 * domain.diameter();
    const double r_max = opts.r_max > 0.0 ? opts.r_max : 1e3 * domain.diameter();
    if (std::abs(domain.signed_distance(y)) > tol)
        throw std::invalid_argument("exterior_ball_radius: point not on boundary within tol");

    ExteriorBallReport report;
    report.point.assign(y.begin(), y.end());

    const double step = std::max(10.0 * tol, 1e-7 * domain.diameter());
    const auto normal = outward_direction(domain, y, step);
    if (!normal) {
        report.radius = 0.0;  // ambiguous direction: conservative
        return report;
    }

    PointCloud sampled;
    const PointCloud* boundary = opts.boundary_points;
    if (boundary == nullptr || boundary->size() == 0) {
        sampled = domain.boundary_sample(opts.n_boundary, opts.seed);
        boundary = &sampled;
    }

    const int d = domain.dim();
    Point z(d);
    auto candidate = [&](double r) {
        for (int k = 0; k < d; ++k) z[k] = y[k] + r * (*normal)[k];
        return certify_tangent_ball(domain, y, z, r, tol, *boundary);
    };

    if (candidate(r_max)) {
        report.radius = domain.convex() ? kInf : r_max;
        report.witness_center = z;
        return report;
    }
    double lo = 0.0, hi = r_max;
    for (int it = 0; it < 60 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        (candidate(mid) ? lo : hi) = mid;
    }
    report.radius = lo;
    if (lo > 0.0) {
        for (int k = 0; k < d; ++k) z[k] = y[k] + lo * (*normal)[k];
        report.witness_center = z;
    }
    return report;
}

SingularSetApprox singular_set(const Domain& domain, double r, std::size_t n_samples,
                               std::uint64_t seed) {
    if (!(r > 0.0)) throw std::invalid_argument("singular_set: r must be > 0");
    SingularSetApprox approx;
    approx.r = r;
    approx.tube_radius = r;
    approx.points.dim = domain.dim();

    const PointCloud queries = domain.boundary_sample(n_samples, seed);
    const PointCloud certification = domain.boundary_sample(std::max<std::size_t>(4096, n_samples),
                                                            splitmix64(seed ^ 0xce7fULL));
    ExteriorBallOptions opts;
    opts.r_max = r;  // only the comparison delta(y) < r is needed
    opts.boundary_points = &certification;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto y = queries.point(i);
        const auto report = exterior_ball_radius(domain, y, opts);
        if (report.radius < r) approx.points.push_back(y);
    }
    return approx;
}

bool in_tube(const SingularSetApprox& approx, std::span<const double> x) {
    for (std::size_t i = 0; i < approx.points.size(); ++i)
        if (dist(approx.points.point(i), x) <= approx.tube_radius) return true;
    return false;
}

}  // namespace rousk
