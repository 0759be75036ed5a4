#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "rousk/capacity.hpp"
#include "rousk/geometry.hpp"
#include "rousk/rng.hpp"

using namespace rousk;

namespace {

PointCloud cloud_from(int dim, std::initializer_list<double> coords) {
    PointCloud c;
    c.dim = dim;
    c.coords = coords;
    return c;
}

// Exact oracle for 3-point clouds: the regularized quadratic form is
// minimized either at the interior stationary point (K lambda = c 1, solved
// by a closed-form 3x3 inverse) or at an equal-weight pair on the simplex
// boundary.
double exact_three_point_energy(const PointCloud& pts, const RieszKernel& g) {
    const double d01 = dist(pts.point(0), pts.point(1));
    const double d02 = dist(pts.point(0), pts.point(2));
    const double d12 = dist(pts.point(1), pts.point(2));
    const double eta = 0.5 * std::min({d01, d02, d12});
    const double kd = g(eta);
    const double K[3][3] = {{kd, g(d01), g(d02)}, {g(d01), kd, g(d12)}, {g(d02), g(d12), kd}};

    double best_obj = 1e300, best_off = 0.0;
    const auto consider = [&](const double lam[3]) {
        double obj = 0.0, off = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                obj += lam[i] * lam[j] * K[i][j];
                if (i != j) off += lam[i] * lam[j] * K[i][j];
            }
        if (obj < best_obj) {
            best_obj = obj;
            best_off = off;
        }
    };

    // interior stationary point via the adjugate of K
    double adj[3][3];
    adj[0][0] = K[1][1] * K[2][2] - K[1][2] * K[2][1];
    adj[0][1] = K[0][2] * K[2][1] - K[0][1] * K[2][2];
    adj[0][2] = K[0][1] * K[1][2] - K[0][2] * K[1][1];
    adj[1][0] = adj[0][1];
    adj[1][1] = K[0][0] * K[2][2] - K[0][2] * K[2][0];
    adj[1][2] = K[0][2] * K[1][0] - K[0][0] * K[1][2];
    adj[2][0] = adj[0][2];
    adj[2][1] = adj[1][2];
    adj[2][2] = K[0][0] * K[1][1] - K[0][1] * K[1][0];
    double lam[3], total = 0.0;
    for (int i = 0; i < 3; ++i) {
        lam[i] = adj[i][0] + adj[i][1] + adj[i][2];  // K^{-1} 1 up to det
        total += lam[i];
    }
    if (total != 0.0) {
        bool feasible = true;
        for (double& v : lam) {
            v /= total;
            feasible = feasible && v >= 0.0;
        }
        if (feasible) consider(lam);
    }
    // boundary candidates: equal weights on each pair (the 2-point optimum
    // has equal weights since the diagonal dominates)
    for (int drop = 0; drop < 3; ++drop) {
        double pair_lam[3] = {0.5, 0.5, 0.5};
        pair_lam[drop] = 0.0;
        consider(pair_lam);
    }
    return best_off;
}

}  // namespace

TEST_CASE("kernel values") {
    CHECK(RieszKernel{1.0}(0.5) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(RieszKernel{2.0}(2.0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(std::isinf(RieszKernel{1.0}(0.0)));
    // log kernel, truncated at 1
    CHECK(RieszKernel{0.0}(0.1) == doctest::Approx(std::log(10.0)).epsilon(1e-14));
    CHECK(RieszKernel{0.0}(0.9) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(RieszKernel{0.0}(5.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::isinf(RieszKernel{0.0}(0.0)));
    // negative exponent: bounded kernel t^{-beta}
    CHECK(RieszKernel{-1.0}(3.0) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("discrete energy") {
    // two points at distance 2, equal weights: 2 * (1/4) * g(2)
    auto two = cloud_from(1, {0.0, 2.0});
    CHECK(riesz_energy(two, {0.5, 0.5}, RieszKernel{1.0}) ==
          doctest::Approx(0.25).epsilon(1e-14));
    // all mass on one point: no off-diagonal pairs
    CHECK(riesz_energy(two, {1.0, 0.0}, RieszKernel{1.0}) ==
          doctest::Approx(0.0).epsilon(1e-14));
    // coincident weighted points diverge for beta >= 0
    auto dup = cloud_from(1, {1.0, 1.0});
    CHECK(std::isinf(riesz_energy(dup, {0.5, 0.5}, RieszKernel{1.0})));
    // weights must be a probability vector
    CHECK_THROWS(riesz_energy(two, {0.7, 0.7}, RieszKernel{1.0}));
}

TEST_CASE("equilibrium weights on three collinear points: exact oracle") {
    // points {0, 1/2, 1}, beta=1: eta=1/4, diagonal g(eta)=4, K01=K12=2,
    // K02=1. Stationarity with the simplex constraint gives
    // lambda = (0.4, 0.2, 0.4), objective 2.4, off-diagonal energy 0.96.
    auto pts = cloud_from(1, {0.0, 0.5, 1.0});
    auto sol = minimize_energy(pts, RieszKernel{1.0});
    CHECK(sol.converged);
    CHECK(sol.weights[0] == doctest::Approx(0.4).epsilon(1e-4));
    CHECK(sol.weights[1] == doctest::Approx(0.2).epsilon(2e-4));
    CHECK(sol.weights[2] == doctest::Approx(0.4).epsilon(1e-4));
    CHECK(sol.objective == doctest::Approx(2.4).epsilon(1e-7));
    CHECK(sol.energy == doctest::Approx(0.96).epsilon(1e-6));
    CHECK(sol.capacity == doctest::Approx(1.0 / 0.96).epsilon(1e-6));
}

TEST_CASE("solver matches the brute-force oracle on random 3-point clouds") {
    Rng rng(0xcafeULL, 0);
    for (int trial = 0; trial < 5; ++trial) {
        PointCloud pts;
        pts.dim = 2;
        // rejection sample until the points are well separated
        while (pts.size() < 3) {
            Point p{rng.uniform(), rng.uniform()};
            bool ok = true;
            for (std::size_t i = 0; i < pts.size(); ++i)
                ok = ok && dist(pts.point(i), p) > 0.2;
            if (ok) pts.push_back(p);
        }
        const RieszKernel g{1.0};
        auto sol = minimize_energy(pts, g);
        const double oracle = exact_three_point_energy(pts, g);
        INFO("trial ", trial, " solver ", sol.energy, " oracle ", oracle);
        CHECK(sol.converged);
        CHECK(std::fabs(sol.energy - oracle) < 1e-4);
    }
}

TEST_CASE("degenerate clouds") {
    auto one = cloud_from(2, {0.5, 0.5});
    auto sol = minimize_energy(one, RieszKernel{1.0});
    CHECK(sol.degenerate);
    CHECK(sol.capacity == 0.0);
    // duplicates collapse: two coincident points act like one
    auto dup = cloud_from(2, {0.5, 0.5, 0.5, 0.5});
    CHECK(minimize_energy(dup, RieszKernel{1.0}).degenerate);
}

TEST_CASE("set discretizations") {
    auto sphere = discretize_set("sphere:d=3,r=2", 128);
    CHECK(sphere.dim == 3);
    CHECK(sphere.size() == 128);
    for (std::size_t i = 0; i < sphere.size(); ++i)
        CHECK(norm(sphere.point(i)) == doctest::Approx(2.0).epsilon(1e-12));
    // deterministic across calls
    auto again = discretize_set("sphere:d=3,r=2", 128);
    CHECK(sphere.coords == again.coords);

    auto square = discretize_set("square:d=5,a=0.5", 64);
    CHECK(square.dim == 5);
    CHECK(square.size() == 64);
    for (std::size_t i = 0; i < square.size(); ++i) {
        auto p = square.point(i);
        CHECK(std::fabs(p[0]) <= 0.5 + 1e-12);
        CHECK(std::fabs(p[1]) <= 0.5 + 1e-12);
        CHECK(p[2] == doctest::Approx(1.0).epsilon(1e-14));
        for (int k = 3; k < 5; ++k) CHECK(p[k] == 0.0);
    }

    CHECK(discretize_set("empty", 32).size() == 0);
    CHECK(discretize_set("singleton:d=3", 16).size() == 16);
    CHECK_THROWS(discretize_set("hypercube:d=3", 16));
}

TEST_CASE("sphere capacity: quadrature oracle") {
    // kernel 1/t on the unit sphere in R^3: the uniform measure is the
    // equilibrium measure and its energy is exactly 1
    const double cap = capacity_value("sphere:d=3,r=1", 1.0, 512);
    CHECK(std::fabs(cap - 1.0) < 0.02);

    // kernel homogeneity: doubling the radius doubles the capacity exactly
    // at matched discretizations
    const double cap2 = capacity_value("sphere:d=3,r=2", 1.0, 512);
    CHECK(cap2 / cap == doctest::Approx(2.0).epsilon(1e-5));

    // beta < 0 convention
    CHECK(capacity_value("sphere:d=3,r=1", -1.0, 16) == 1.0);
    CHECK(capacity_value("empty", -1.0, 16) == 0.0);
    CHECK(capacity_value("empty", 1.0, 16) == 0.0);
}

TEST_CASE("singleton capacity shrinks with resolution") {
    double prev = 1e300;
    for (std::size_t res : {8, 32, 128}) {
        const double cap = capacity_value("singleton:d=3", 0.0, res);
        CHECK(cap < prev);
        prev = cap;
    }
    CHECK(prev < 0.35);  // log-capacity of a 1/128-size blob is small
}

TEST_CASE("vanishing-capacity verdicts") {
    // smooth convex domain in d=3: every singular-set approximation is
    // empty, so the capacity condition holds outright
    auto ball = make_domain("ball:d=3,r=1");
    auto rep = check_vanishing_capacity(*ball, {0.3, 0.15}, {64, 128}, 11);
    CHECK(rep.verdict == "holds");
    CHECK(rep.beta == doctest::Approx(-1.0));

    // reentrant corner in d=2: beta = -2 < 0, nonempty singular set, so the
    // capacity does not vanish
    auto notch = make_domain("notch:d=2");
    auto bad = check_vanishing_capacity(*notch, {0.3, 0.15}, {256, 256}, 11);
    CHECK(bad.verdict == "fails");
}
