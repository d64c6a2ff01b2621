#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "divq/errors.hpp"

namespace divq {

// Dissimilarity measures over the list of per-member squared parameter
// norms, plus their exact partial derivative in the updated member's norm.
// The derivative treats the other members' norms as constants but keeps
// the dependence of the list mean on the updated entry.

enum class Regularizer { none, atkinson, gini, theil, vol, meanvector };

inline const char* to_string(Regularizer r) {
    switch (r) {
        case Regularizer::none: return "none";
        case Regularizer::atkinson: return "atkinson";
        case Regularizer::gini: return "gini";
        case Regularizer::theil: return "theil";
        case Regularizer::vol: return "vol";
        case Regularizer::meanvector: return "meanvector";
    }
    return "none";
}

inline Regularizer regularizer_from_string(const std::string& s) {
    if (s == "none") return Regularizer::none;
    if (s == "atkinson") return Regularizer::atkinson;
    if (s == "gini") return Regularizer::gini;
    if (s == "theil") return Regularizer::theil;
    if (s == "vol") return Regularizer::vol;
    if (s == "meanvector") return Regularizer::meanvector;
    throw domain_error("unknown regularizer: " + s);
}

namespace ineq {

// Norms of a freshly zeroed network would be 0; floor keeps the log/power
// measures out of the singularity.
constexpr double kNormFloor = 1e-12;

inline void check_norm_list(std::span<const double> l) {
    if (l.size() < 2) throw domain_error("norm list needs at least 2 members");
    for (double v : l)
        if (!(v > 0.0) || !std::isfinite(v))
            throw domain_error("norm list entries must be positive and finite");
}

inline double list_mean(std::span<const double> l) {
    double s = 0.0;
    for (double v : l) s += v;
    return s / static_cast<double>(l.size());
}

inline double clamped(double v) { return std::max(v, kNormFloor); }

// All measures are identically zero on an exactly equal list, and the
// update treats ties with subgradient zero. Detecting this case keeps the
// zero exact instead of leaving pow/log round-off residue.
inline bool all_equal(std::span<const double> l) {
    for (double v : l)
        if (v != l[0]) return false;
    return true;
}

// --- Atkinson index ---

inline double atkinson(std::span<const double> l, double eps) {
    check_norm_list(l);
    if (eps < 0.0) throw domain_error("atkinson: eps must be >= 0");
    if (all_equal(l)) return 0.0;
    const double n = static_cast<double>(l.size());
    const double mean = list_mean(l);
    if (eps == 1.0) {
        double log_sum = 0.0;
        for (double v : l) log_sum += std::log(clamped(v));
        return 1.0 - std::exp(log_sum / n) / mean;
    }
    const double q = 1.0 - eps;
    double s = 0.0;
    for (double v : l) s += std::pow(clamped(v), q);
    return 1.0 - std::pow(s / n, 1.0 / q) / mean;
}

// Literal transcription of the paper's eps = 1 branch, which divides the
// product by N before taking the N-th root. Kept selectable for
// comparison; it is discontinuous against the eps -> 1 limit.
inline double atkinson_paper_eps1(std::span<const double> l) {
    check_norm_list(l);
    const double n = static_cast<double>(l.size());
    const double mean = list_mean(l);
    double log_sum = std::log(1.0 / n);
    for (double v : l) log_sum += std::log(clamped(v));
    return 1.0 - std::exp(log_sum / n) / mean;
}

inline double atkinson_grad(std::span<const double> l, std::size_t i, double eps) {
    check_norm_list(l);
    if (i >= l.size()) throw domain_error("atkinson_grad: index out of range");
    if (eps < 0.0) throw domain_error("atkinson: eps must be >= 0");
    if (all_equal(l)) return 0.0;
    const double n = static_cast<double>(l.size());
    const double mean = list_mean(l);
    const double li = clamped(l[i]);
    if (eps == 1.0) {
        double log_sum = 0.0;
        for (double v : l) log_sum += std::log(clamped(v));
        const double g = std::exp(log_sum / n);
        // d/dl_i [1 - g/mean], with dg/dl_i = g/(n l_i), dmean/dl_i = 1/n
        return g / (n * mean * mean) - g / (n * mean * li);
    }
    const double q = 1.0 - eps;
    double s = 0.0;
    for (double v : l) s += std::pow(clamped(v), q);
    const double sq = s / n;
    const double p = std::pow(sq, 1.0 / q);
    // d/dl_i [1 - p/mean]; dp/dl_i = p * l_i^(q-1) / (n sq)
    return p / (n * mean * mean) - p * std::pow(li, q - 1.0) / (mean * n * sq);
}

// --- Gini coefficient ---

inline double gini(std::span<const double> l) {
    check_norm_list(l);
    if (all_equal(l)) return 0.0;
    const double n = static_cast<double>(l.size());
    double s = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i)
        for (std::size_t j = 0; j < l.size(); ++j) s += std::fabs(l[i] - l[j]);
    return s / (2.0 * n * n * list_mean(l));
}

inline double gini_grad(std::span<const double> l, std::size_t i) {
    check_norm_list(l);
    if (i >= l.size()) throw domain_error("gini_grad: index out of range");
    if (all_equal(l)) return 0.0;
    const double n = static_cast<double>(l.size());
    const double mean = list_mean(l);
    double s = 0.0;
    double ds = 0.0;  // d/dl_i of the double sum; sign(0) = 0 at exact ties
    for (std::size_t a = 0; a < l.size(); ++a) {
        for (std::size_t b = 0; b < l.size(); ++b) s += std::fabs(l[a] - l[b]);
        if (a != i) {
            if (l[i] > l[a]) ds += 2.0;
            else if (l[i] < l[a]) ds -= 2.0;
        }
    }
    return ds / (2.0 * n * n * mean) - s / (2.0 * n * n * n * mean * mean);
}

// --- Theil index ---

inline double theil(std::span<const double> l) {
    check_norm_list(l);
    if (all_equal(l)) return 0.0;
    const double mean = list_mean(l);
    double s = 0.0;
    for (double v : l) {
        const double u = clamped(v) / mean;
        s += u * std::log(u);
    }
    return s / static_cast<double>(l.size());
}

inline double theil_grad(std::span<const double> l, std::size_t i) {
    check_norm_list(l);
    if (i >= l.size()) throw domain_error("theil_grad: index out of range");
    if (all_equal(l)) return 0.0;
    const double n = static_cast<double>(l.size());
    const double mean = list_mean(l);
    const double t = theil(l);
    // collapses to (ln(l_i/mean) - T) / (n mean) once the mean-channel
    // terms are summed
    return (std::log(clamped(l[i]) / mean) - t) / (n * mean);
}

// --- Variance of logarithms ---

inline double variance_of_logs(std::span<const double> l) {
    check_norm_list(l);
    if (all_equal(l)) return 0.0;
    const double n = static_cast<double>(l.size());
    double log_sum = 0.0;
    for (double v : l) log_sum += std::log(clamped(v));
    const double log_g = log_sum / n;
    double s = 0.0;
    for (double v : l) {
        const double d = std::log(clamped(v)) - log_g;
        s += d * d;
    }
    return s / n;
}

inline double variance_of_logs_grad(std::span<const double> l, std::size_t i) {
    check_norm_list(l);
    if (i >= l.size()) throw domain_error("vol_grad: index out of range");
    if (all_equal(l)) return 0.0;
    const double n = static_cast<double>(l.size());
    double log_sum = 0.0;
    for (double v : l) log_sum += std::log(clamped(v));
    const double log_g = log_sum / n;
    const double li = clamped(l[i]);
    // the sum of deviations from the log-mean is zero, so only the direct
    // term survives
    return 2.0 * (std::log(li) - log_g) / (n * li);
}

// --- MeanVector (consensus distance) ---

inline double mean_vector(std::span<const double> l, std::size_t i) {
    check_norm_list(l);
    if (i >= l.size()) throw domain_error("mean_vector: index out of range");
    if (all_equal(l)) return 0.0;
    const double d = list_mean(l) - l[i];
    return d * d;
}

inline double mean_vector_grad(std::span<const double> l, std::size_t i) {
    check_norm_list(l);
    if (i >= l.size()) throw domain_error("mean_vector_grad: index out of range");
    if (all_equal(l)) return 0.0;
    const double n = static_cast<double>(l.size());
    return 2.0 * (list_mean(l) - l[i]) * (1.0 / n - 1.0);
}

}  // namespace ineq

struct InequalityOptions {
    double atkinson_eps = 0.5;
    bool atkinson_paper_eps1 = false;
};

inline double inequality_value(Regularizer kind, std::span<const double> l,
                               std::size_t i, const InequalityOptions& opt = {}) {
    switch (kind) {
        case Regularizer::none: return 0.0;
        case Regularizer::atkinson:
            if (opt.atkinson_paper_eps1 && opt.atkinson_eps == 1.0)
                return ineq::atkinson_paper_eps1(l);
            return ineq::atkinson(l, opt.atkinson_eps);
        case Regularizer::gini: return ineq::gini(l);
        case Regularizer::theil: return ineq::theil(l);
        case Regularizer::vol: return ineq::variance_of_logs(l);
        case Regularizer::meanvector: return ineq::mean_vector(l, i);
    }
    return 0.0;
}

inline double inequality_grad(Regularizer kind, std::span<const double> l,
                              std::size_t i, const InequalityOptions& opt = {}) {
    switch (kind) {
        case Regularizer::none: return 0.0;
        case Regularizer::atkinson: {
            if (opt.atkinson_paper_eps1 && opt.atkinson_eps == 1.0) {
                // same derivative structure as the geometric-mean form up
                // to the constant (1/N)^(1/N) factor on the product term
                const double n = static_cast<double>(l.size());
                const double mean = ineq::list_mean(l);
                double log_sum = std::log(1.0 / n);
                for (double v : l) log_sum += std::log(ineq::clamped(v));
                const double g = std::exp(log_sum / n);
                return g / (n * mean * mean) - g / (n * mean * ineq::clamped(l[i]));
            }
            return ineq::atkinson_grad(l, i, opt.atkinson_eps);
        }
        case Regularizer::gini: return ineq::gini_grad(l, i);
        case Regularizer::theil: return ineq::theil_grad(l, i);
        case Regularizer::vol: return ineq::variance_of_logs_grad(l, i);
        case Regularizer::meanvector: return ineq::mean_vector_grad(l, i);
    }
    return 0.0;
}

}  // namespace divq
