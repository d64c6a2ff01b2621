#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "divq/errors.hpp"

namespace divq {

namespace detail {

// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double beta_cf(double a, double b, double x) {
    constexpr double kTiny = 1e-300;
    constexpr double kEps = 1e-15;
    constexpr int kMaxIter = 300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw numeric_error("incomplete beta: continued fraction did not converge");
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta_reg(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw domain_error("incomplete beta: a, b must be > 0");
    if (x < 0.0 || x > 1.0) throw domain_error("incomplete beta: x must be in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_cf(a, b, x) / a;
    return 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
}

// Student-t CDF via the incomplete beta.
inline double student_t_cdf(double t, double nu) {
    if (nu <= 0.0) throw domain_error("student_t_cdf: nu must be > 0");
    if (t == 0.0) return 0.5;
    const double x = nu / (nu + t * t);
    const double tail = 0.5 * incomplete_beta_reg(0.5 * nu, 0.5, x);
    return t > 0.0 ? 1.0 - tail : tail;
}

struct TTestResult {
    double t = 0.0;   // Welch statistic
    double nu = 0.0;  // Welch-Satterthwaite degrees of freedom
    double p = 1.0;   // two-sided
};

inline double sample_mean(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

// Unbiased (n-1) variance.
inline double sample_variance(std::span<const double> xs) {
    const double m = sample_mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

// Population (n) standard deviation, as used by the standard score.
inline double population_std(std::span<const double> xs) {
    const double m = sample_mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size()));
}

// Two-sample t-test with unequal variances.
inline TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2)
        throw domain_error("welch_t_test: each group needs at least 2 samples");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double va = sample_variance(a) / na;
    const double vb = sample_variance(b) / nb;
    if (va + vb == 0.0) {
        // identical constants in both groups: no evidence either way
        return TTestResult{0.0, na + nb - 2.0, 1.0};
    }
    TTestResult r;
    r.t = (sample_mean(a) - sample_mean(b)) / std::sqrt(va + vb);
    r.nu = (va + vb) * (va + vb) /
           (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    const double cdf = student_t_cdf(-std::fabs(r.t), r.nu);
    r.p = std::min(1.0, 2.0 * cdf);
    return r;
}

// Standard scores against the pooled population (denominator N).
inline std::vector<double> z_scores(std::span<const double> population) {
    if (population.size() < 2) throw domain_error("z_scores: need at least 2 samples");
    const double mu = sample_mean(population);
    const double sigma = population_std(population);
    if (sigma == 0.0) throw domain_error("z_scores: degenerate population (zero variance)");
    std::vector<double> z;
    z.reserve(population.size());
    for (double x : population) z.push_back((x - mu) / sigma);
    return z;
}

struct ScoreSample {
    std::string label;
    std::uint64_t seed = 0;
    double value = 0.0;
};

// Pools every sample into one population, standardizes, then averages the
// z-scores per method label.
inline std::map<std::string, double> averaged_z_scores(const std::vector<ScoreSample>& samples) {
    std::vector<double> pooled;
    pooled.reserve(samples.size());
    for (const ScoreSample& s : samples) pooled.push_back(s.value);
    const std::vector<double> z = z_scores(pooled);
    std::map<std::string, double> sums;
    std::map<std::string, int> counts;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        sums[samples[i].label] += z[i];
        counts[samples[i].label] += 1;
    }
    std::map<std::string, double> out;
    for (auto& [label, sum] : sums) out[label] = sum / counts[label];
    return out;
}

// One-sided sign test: P(X >= successes) for X ~ Binomial(n, 1/2).
inline double sign_test_p(int successes, int n) {
    if (n <= 0 || successes < 0 || successes > n)
        throw domain_error("sign_test_p: invalid counts");
    double p = 0.0;
    for (int k = successes; k <= n; ++k) {
        const double log_term = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                                std::lgamma(n - k + 1.0) -
                                n * 0.69314718055994530941723212145818;
        p += std::exp(log_term);
    }
    return std::min(1.0, p);
}

}  // namespace divq
