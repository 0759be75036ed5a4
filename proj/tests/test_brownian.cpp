#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "rousk/brownian.hpp"
#include "rousk/geometry.hpp"
#include "rousk/stats.hpp"

using namespace rousk;

TEST_CASE("path sampling is deterministic and walker-consistent") {
    const Point start{0.5, -0.25};
    auto a = sample_path(2, 1.0, 64, start, 77, 3);
    auto b = sample_path(2, 1.0, 64, start, 77, 3);
    CHECK(a.values == b.values);
    CHECK(a.n_steps == 64);
    CHECK(a.values.size() == 65 * 2);
    CHECK(a.point(0)[0] == 0.5);
    CHECK(a.point(0)[1] == -0.25);

    auto c = sample_path(2, 1.0, 64, start, 77, 4);
    CHECK(a.values != c.values);

    // the incremental walker reproduces the same path bit for bit
    PathWalker w(2, 1.0, 64, start, 77, 3);
    std::size_t k = 0;
    CHECK(w.position()[0] == a.point(0)[0]);
    while (w.advance()) {
        ++k;
        CHECK(w.position()[0] == a.point(k)[0]);
        CHECK(w.position()[1] == a.point(k)[1]);
    }
    CHECK(k == 64);
}

TEST_CASE("terminal marginal is centered Gaussian with variance t") {
    const int n_paths = 20000;
    const double horizon = 2.0;
    double sum = 0.0, sum2 = 0.0;
    std::vector<double> scaled;
    scaled.reserve(n_paths);
    for (int i = 0; i < n_paths; ++i) {
        auto p = sample_path(1, horizon, 8, Point{0.0}, 11, static_cast<std::uint64_t>(i));
        const double v = p.point(8)[0];
        sum += v;
        sum2 += v * v;
        if (i < 500) scaled.push_back(v / std::sqrt(horizon));
    }
    const double mean = sum / n_paths;
    const double var = sum2 / n_paths - mean * mean;
    CHECK(std::fabs(mean) < 4.0 * std::sqrt(horizon / n_paths));
    CHECK(std::fabs(var - horizon) < 4.0 * horizon * std::sqrt(2.0 / n_paths));
    CHECK(stats::anderson_darling_normal(scaled) < stats::kAndersonDarling1pc);
}

TEST_CASE("first-passage law: frozen values") {
    CHECK(fp_density({0.0, 1.0}, 1.0) ==
          doctest::Approx(0.24197072451914337).epsilon(1e-12));
    CHECK(fp_atom({1.0, 1.0}) == doctest::Approx(0.8646647167633873).epsilon(1e-12));
    CHECK(fp_atom({0.0, 1.0}) == doctest::Approx(0.0).epsilon(1e-15));
    // total density mass = 1 - atom; for C=1, r=1 that is exp(-2)
    CHECK(fp_density_integral({1.0, 1.0}, 0.0) ==
          doctest::Approx(0.1353352832366127).epsilon(1e-7));
}

TEST_CASE("first-passage law normalizes on the parameter grid") {
    for (double C : {0.0, 0.5, 1.0, 5.0}) {
        for (double r : {0.1, 1.0, 10.0}) {
            const FirstPassageLaw law{C, r};
            INFO("C=", C, " r=", r);
            CHECK(std::fabs(fp_atom(law) + fp_density_integral(law, 0.0) - 1.0) < 1e-6);
        }
    }
}

TEST_CASE("survival agrees with the closed form and is monotone") {
    for (double C : {0.0, 0.5, 1.0, 5.0}) {
        for (double r : {0.1, 1.0, 10.0}) {
            const FirstPassageLaw law{C, r};
            double prev = 1.0 + 1e-12;
            for (double u : {0.01, 0.1, 0.5, 1.0, 4.0, 25.0}) {
                const double s = fp_survival(law, u);
                INFO("C=", C, " r=", r, " u=", u);
                CHECK(std::fabs(s - fp_survival_closed_form(law, u)) < 1e-7);
                CHECK(s <= prev + 1e-9);
                CHECK(s >= fp_atom(law) - 1e-9);
                prev = s;
            }
        }
    }
    // driftless case reduces to the reflection principle
    CHECK(fp_survival({0.0, 1.0}, 1.0) ==
          doctest::Approx(0.6826894921370859).epsilon(1e-7));
    CHECK(halfline_stay_prob(1.0, 1.0) ==
          doctest::Approx(0.6826894921370859).epsilon(1e-12));
}

TEST_CASE("interval exit survival: frozen series values") {
    CHECK(interval_exit_survival(0.0, 1.0) ==
          doctest::Approx(0.37077742979952394).epsilon(1e-12));
    CHECK(interval_exit_survival(0.0, 0.25) ==
          doctest::Approx(0.9089994761536339).epsilon(1e-12));
    CHECK(interval_exit_survival(0.3, 0.5) ==
          doctest::Approx(0.6119465291977892).epsilon(1e-12));
    // the image representation (small u) agrees with the spectral series
    // (large u) at the crossover, up to the true variation over the u gap
    for (double x : {0.0, 0.3, -0.8}) {
        CHECK(interval_exit_survival(x, 0.4999999) ==
              doctest::Approx(interval_exit_survival(x, 0.5000001)).epsilon(1e-6));
    }
    // limits
    CHECK(interval_exit_survival(0.0, 1e-8) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(interval_exit_survival(0.0, 50.0) < 1e-12);
    CHECK(interval_exit_survival(0.999, 1e-8) <= 1.0);
}

TEST_CASE("empirical running maximum matches the interval series") {
    // P(sup_{[0,1]} |B| >= a) = 1 - survival(0, 1/a^2) by Brownian scaling
    const int n_paths = 10000;
    const std::size_t n_steps = 4096;
    std::vector<double> levels{0.5, 1.0, 2.0};
    std::vector<int> hits(levels.size(), 0);
    for (int i = 0; i < n_paths; ++i) {
        auto p = sample_path(1, 1.0, n_steps, Point{0.0}, 5150, static_cast<std::uint64_t>(i));
        double m = 0.0;
        for (std::size_t k = 0; k <= n_steps; ++k) m = std::max(m, std::fabs(p.point(k)[0]));
        for (std::size_t j = 0; j < levels.size(); ++j)
            if (m >= levels[j]) ++hits[j];
    }
    for (std::size_t j = 0; j < levels.size(); ++j) {
        const double a = levels[j];
        const double exact = 1.0 - interval_exit_survival(0.0, 1.0 / (a * a));
        const double est = static_cast<double>(hits[j]) / n_paths;
        const double se = std::sqrt(exact * (1.0 - exact) / n_paths);
        INFO("level ", a, " est ", est, " exact ", exact);
        // grid maxima undershoot the true maximum: one-sided sqrt(dt) allowance
        CHECK(est <= exact + 4.0 * se);
        CHECK(est >= exact - 4.0 * se - 1.5 * std::sqrt(1.0 / n_steps));
    }
}

TEST_CASE("path functionals against a domain") {
    auto ball = make_domain("ball:d=2,r=1");

    PathSample path;
    path.dim = 2;
    path.horizon = 1.0;
    path.n_steps = 2;
    path.values = {0.0, 0.0, 0.5, 0.0, 0.9, 0.0};
    CHECK(path_min_q(*ball, path) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK_FALSE(first_exit_time(*ball, 0.0, path).has_value());
    auto t = first_exit_time(*ball, 0.2, path);
    REQUIRE(t.has_value());
    CHECK(*t == doctest::Approx(1.0).epsilon(1e-14));  // q = 0.1 <= 0.2 at step 2

    PathSample out = path;
    out.values = {0.0, 0.0, 1.5, 0.0, 0.2, 0.0};
    CHECK(path_min_q(*ball, out) == doctest::Approx(-0.5).epsilon(1e-14));
    auto e = first_exit_time(*ball, 0.0, out);
    REQUIRE(e.has_value());
    CHECK(*e == doctest::Approx(0.5).epsilon(1e-14));

    SingularSetApprox tube;
    tube.points.dim = 2;
    tube.tube_radius = 0.2;
    tube.points.push_back(Point{0.5, 0.0});
    auto hit = first_hit_time(tube, path);
    REQUIRE(hit.has_value());
    CHECK(*hit == doctest::Approx(0.5).epsilon(1e-14));
    SingularSetApprox far;
    far.points.dim = 2;
    far.tube_radius = 0.05;
    far.points.push_back(Point{-0.9, 0.0});
    CHECK_FALSE(first_hit_time(far, path).has_value());
}

TEST_CASE("one-dimensional exit time law from an interval") {
    // start at the center of (-1, 1): P(exit by t) = 1 - survival(0, t)
    const int n_paths = 10000;
    const std::size_t n_steps = 4096;
    auto ball = make_domain("ball:d=1,r=1");
    std::vector<double> t_check{0.25, 0.5, 1.0};
    std::vector<int> exited(t_check.size(), 0);
    for (int i = 0; i < n_paths; ++i) {
        auto p = sample_path(1, 1.0, n_steps, Point{0.0}, 90210,
                             static_cast<std::uint64_t>(i));
        auto et = first_exit_time(*ball, 0.0, p);
        if (!et) continue;
        for (std::size_t j = 0; j < t_check.size(); ++j)
            if (*et <= t_check[j]) ++exited[j];
    }
    for (std::size_t j = 0; j < t_check.size(); ++j) {
        const double exact = 1.0 - interval_exit_survival(0.0, t_check[j]);
        const double est = static_cast<double>(exited[j]) / n_paths;
        const double se = std::sqrt(std::max(exact * (1.0 - exact), 1e-4) / n_paths);
        INFO("t ", t_check[j], " est ", est, " exact ", exact);
        CHECK(est <= exact + 4.0 * se);
        CHECK(est >= exact - 4.0 * se - 1.5 * std::sqrt(1.0 / n_steps));
    }
}
