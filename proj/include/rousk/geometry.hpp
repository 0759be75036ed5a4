#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rousk {

using Point = std::vector<double>;

struct PointCloud {
    int dim = 0;
    std::vector<double> coords;  // size() * dim, row major

    std::size_t size() const { return dim > 0 ? coords.size() / dim : 0; }
    std::span<const double> point(std::size_t i) const {
        return {coords.data() + i * static_cast<std::size_t>(dim),
                static_cast<std::size_t>(dim)};
    }
    void push_back(std::span<const double> p) {
        coords.insert(coords.end(), p.begin(), p.end());
    }
};

double norm(std::span<const double> x);
double dist(std::span<const double> a, std::span<const double> b);

/// An open set O in R^d exposed through its signed distance
/// q(x) = dist(x, O^c) - dist(x, O) (positive inside) and a boundary sampler.
class Domain {
public:
    virtual ~Domain() = default;

    int dim() const { return dim_; }
    const std::string& id() const { return id_; }
    bool convex() const { return convex_; }
    /// Length scale used for default tolerances. For unbounded domains this
    /// is the working window, not a true diameter.
    double diameter() const { return diameter_; }

    double signed_distance(std::span<const double> x) const;

    /// Deterministic boundary point sample. The default implementation
    /// root-finds q = 0 along random rays from the origin; concrete domains
    /// override it with exact samplers where available.
    virtual PointCloud boundary_sample(std::size_t count, std::uint64_t seed) const;

protected:
    Domain(int dim, std::string id, bool convex, double diameter);
    virtual double q(std::span<const double> x) const = 0;

private:
    int dim_;
    std::string id_;
    bool convex_;
    double diameter_;
};

using DomainPtr = std::shared_ptr<const Domain>;

/// Parses a catalog identifier such as "ball:d=2,r=1" or "example-spike:d=4".
DomainPtr make_domain(const std::string& id);

/// Catalog identifiers recognised by make_domain, for `list`.
std::vector<std::string> catalog_ids();

/// Point cloud from CSV (header row, d float columns, '.' decimal separator).
PointCloud load_point_cloud_csv(const std::string& csv_path);

/// Boundary point cloud from CSV (header row, d float columns, '.' decimal).
/// The reconstructed domain is treated as star-shaped around the origin.
DomainPtr make_sampled_domain(const std::string& csv_path);

/// Rigid motion x -> R x + shift of a base domain (R orthogonal, row major).
DomainPtr make_transformed_domain(DomainPtr base, const std::vector<double>& rotation,
                                  const Point& shift);

struct ExteriorBallReport {
    Point point;
    double radius = 0.0;  // certified lower bound on delta(y); +inf when capped
    std::optional<Point> witness_center;
};

struct ExteriorBallOptions {
    double r_max = -1.0;          // default 1e3 * diameter
    double tol = -1.0;            // default 1e-6 * diameter
    std::size_t n_boundary = 4096;
    std::uint64_t seed = 0x5eedULL;
    // Reusable certification cloud; sampled on demand when empty.
    const PointCloud* boundary_points = nullptr;
};

/// Certified lower bound on the exterior-ball radius delta(y) by bisection
/// over tangent balls centered along the outward normal. Reports +inf when
/// r_max certifies on a convex domain and 0 when the outward direction is
/// ambiguous (|grad q| far from 1).
ExteriorBallReport exterior_ball_radius(const Domain& domain, std::span<const double> y,
                                        const ExteriorBallOptions& opts = {});

struct SingularSetApprox {
    double r = 0.0;
    PointCloud points;
    double tube_radius = 0.0;
};

/// Finite approximation of Sigma_r: boundary samples whose exterior-ball
/// radius falls below r. Deterministic given the seed.
SingularSetApprox singular_set(const Domain& domain, double r, std::size_t n_samples,
                               std::uint64_t seed);

/// Discrete membership test for the tube A_r around Sigma_r.
bool in_tube(const SingularSetApprox& approx, std::span<const double> x);

/// Nearest point of the closure (Euclidean), by damped Newton steps along
/// the finite-difference gradient of q. Exact in one step for true signed
/// distance functions. Throws when the iteration does not land on q >= -tol.
Point project_to_closure(const Domain& domain, std::span<const double> x, double tol = -1.0);

/// Outward direction -grad q / |grad q| by central differences.
/// Returns nullopt when |grad q| deviates from 1 by more than 0.2.
std::optional<Point> outward_direction(const Domain& domain, std::span<const double> y,
                                       double step);

}  // namespace rousk
