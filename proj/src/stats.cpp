#include "rousk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rousk::stats {

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / 1.4142135623730950488);
}

// Acklam's rational approximation refined by one Halley step; good to
// near machine precision on (0,1).
double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // One Halley refinement.
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

double z_for_level(double level) {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("z_for_level: level outside (0,1)");
    return normal_quantile(0.5 + 0.5 * level);
}

Interval bernoulli_ci(std::size_t successes, std::size_t n, double level) {
    if (n == 0) throw std::invalid_argument("bernoulli_ci: n == 0");
    const double z = z_for_level(level);
    const double p = static_cast<double>(successes) / static_cast<double>(n);
    const double k = static_cast<double>(successes);
    const double nn = static_cast<double>(n);
    if (k >= 30.0 && nn - k >= 30.0) {
        const double hw = z * std::sqrt(p * (1.0 - p) / nn);
        return {std::max(0.0, p - hw), std::min(1.0, p + hw)};
    }
    // Wilson score interval for sparse counts.
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need >= 2 matching points");
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
    LineFit fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (n > 2) {
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            ss += r * r;
        }
        fit.slope_stderr = std::sqrt(ss / (static_cast<double>(n - 2) * sxx));
    }
    return fit;
}

namespace {

// Counts of permutations of {1..n} by inversion number (Mahonian numbers).
std::vector<double> mahonian_counts(std::size_t n) {
    std::vector<double> counts{1.0};
    for (std::size_t k = 2; k <= n; ++k) {
        std::vector<double> next(counts.size() + k - 1, 0.0);
        // convolve with the uniform block of length k
        double run = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i) {
            if (i < counts.size()) run += counts[i];
            if (i >= k) run -= counts[i - k];
            next[i] = run;
        }
        counts.swap(next);
    }
    return counts;
}

}  // namespace

MannKendall mann_kendall(const std::vector<double>& seq) {
    const std::size_t n = seq.size();
    if (n < 3) throw std::invalid_argument("mann_kendall: need >= 3 points");
    if (n > 12) throw std::invalid_argument("mann_kendall: exact test limited to n <= 12");
    int s = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (seq[j] > seq[i]) ++s;
            else if (seq[j] < seq[i]) --s;
        }
    // Under the null, S = maxS - 2 * (#inversions); enumerate exactly.
    const int max_s = static_cast<int>(n * (n - 1) / 2);
    const auto counts = mahonian_counts(n);
    double total = 0.0, tail = 0.0;
    for (std::size_t inv = 0; inv < counts.size(); ++inv) {
        total += counts[inv];
        const int s_val = max_s - 2 * static_cast<int>(inv);
        if (s_val >= s) tail += counts[inv];
    }
    MannKendall mk;
    mk.s = s;
    mk.p_increasing = tail / total;
    return mk;
}

double anderson_darling_normal(std::vector<double> sample) {
    const std::size_t n = sample.size();
    if (n < 8) throw std::invalid_argument("anderson_darling_normal: need >= 8 points");
    std::sort(sample.begin(), sample.end());
    double a2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double fi = normal_cdf(sample[i]);
        fi = std::min(1.0 - 1e-15, std::max(1e-15, fi));
        double fr = normal_cdf(sample[n - 1 - i]);
        fr = std::min(1.0 - 1e-15, std::max(1e-15, fr));
        a2 += (2.0 * static_cast<double>(i) + 1.0) * (std::log(fi) + std::log1p(-fr));
    }
    return -static_cast<double>(n) - a2 / static_cast<double>(n);
}

double autocorr_lag1(const std::vector<double>& sample) {
    const std::size_t n = sample.size();
    if (n < 3) throw std::invalid_argument("autocorr_lag1: need >= 3 points");
    double mean = 0.0;
    for (double v : sample) mean += v;
    mean /= static_cast<double>(n);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double c = sample[i] - mean;
        den += c * c;
        if (i + 1 < n) num += c * (sample[i + 1] - mean);
    }
    return den > 0.0 ? num / den : 0.0;
}

}  // namespace rousk::stats
