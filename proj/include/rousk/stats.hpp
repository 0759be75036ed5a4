#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace rousk::stats {

double normal_cdf(double x);
double normal_quantile(double p);

// Two-sided z value for the given confidence level (e.g. 0.99).
double z_for_level(double level);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double half_width() const { return 0.5 * (hi - lo); }
};

// Confidence interval for a Bernoulli proportion: Wald when the counts are
// comfortable, Wilson otherwise.
Interval bernoulli_ci(std::size_t successes, std::size_t n, double level);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    std::size_t n = 0;
};

// Ordinary least squares y ~ a + b x.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct MannKendall {
    int s = 0;                 // concordant minus discordant pairs
    double p_increasing = 1.0; // exact one-sided P(S >= s) under no trend
    bool increasing_at(double alpha) const { return p_increasing <= alpha; }
};

// Exact Mann-Kendall trend test (ties counted as neither direction).
// Intended for short sequences (n <= 12); the null distribution of S is
// enumerated exactly via the Mahonian recursion.
MannKendall mann_kendall(const std::vector<double>& seq);

// Anderson-Darling statistic against the standard normal with known
// parameters (case 0). Critical value at the 1% level is 3.857.
double anderson_darling_normal(std::vector<double> sample);

inline constexpr double kAndersonDarling1pc = 3.857;

// Lag-1 sample autocorrelation.
double autocorr_lag1(const std::vector<double>& sample);

}  // namespace rousk::stats
