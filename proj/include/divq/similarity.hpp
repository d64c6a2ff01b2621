#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "divq/errors.hpp"
#include "divq/nn.hpp"
#include "divq/tensor.hpp"

namespace divq {

// K = X X^T for activations X (n examples x p neurons).
inline Tensor linear_gram(const Tensor& x) {
    if (x.rank() != 2 || x.rows() < 2)
        throw shape_error("linear_gram: need an (n x p) matrix with n >= 2");
    const std::size_t n = x.rows(), p = x.cols();
    Tensor k({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < p; ++c) s += x[i * p + c] * x[j * p + c];
            k[i * n + j] = s;
            k[j * n + i] = s;
        }
    }
    return k;
}

// Empirical HSIC(K, L) = tr(K H L H) / (n-1)^2 with H = I - (1/n) 1 1^T.
// Computed through double centering, which is the same trace.
inline double hsic(const Tensor& k, const Tensor& l) {
    if (k.rank() != 2 || l.rank() != 2 || k.rows() != k.cols() || l.rows() != l.cols() ||
        k.rows() != l.rows())
        throw shape_error("hsic: K and L must be square with equal n");
    const std::size_t n = k.rows();
    if (n < 2) throw shape_error("hsic: n must be >= 2");

    auto centered = [n](const Tensor& m) {
        std::vector<double> row_mean(n, 0.0);
        double grand = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += m[i * n + j];
            row_mean[i] = s / static_cast<double>(n);
            grand += s;
        }
        grand /= static_cast<double>(n) * static_cast<double>(n);
        Tensor out({n, n});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                out[i * n + j] = m[i * n + j] - row_mean[i] - row_mean[j] + grand;
        return out;
    };

    const Tensor kc = centered(k);
    const Tensor lc = centered(l);
    double tr = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) tr += kc[i * n + j] * lc[j * n + i];
    const double d = static_cast<double>(n - 1);
    return tr / (d * d);
}

// Linear-kernel CKA between two activation matrices over the same n
// examples. Throws undefined_similarity_error when either input is
// (numerically) constant across examples.
inline double cka(const Tensor& x, const Tensor& y) {
    if (x.rows() != y.rows()) throw shape_error("cka: row counts differ");
    const Tensor kx = linear_gram(x);
    const Tensor ky = linear_gram(y);
    const double hxx = hsic(kx, kx);
    const double hyy = hsic(ky, ky);
    const double denom = std::sqrt(std::max(hxx, 0.0) * std::max(hyy, 0.0));
    if (denom < 1e-12)
        throw undefined_similarity_error("cka: degenerate activations, denominator " +
                                         std::to_string(denom));
    return hsic(kx, ky) / denom;
}

// All-pairs layer CKA between two networks on a shared probe batch.
// NaN entries mark pairs where CKA is undefined (dead/constant layer).
struct SimilarityHeatmap {
    std::vector<std::string> row_labels;  // layers of network A
    std::vector<std::string> col_labels;  // layers of network B
    Tensor values;                        // (rows x cols), NaN = missing

    bool missing(std::size_t r, std::size_t c) const {
        return std::isnan(values.at(r, c));
    }
};

inline std::vector<Tensor> capture_activations(const Mlp& net, const Tensor& probe) {
    std::vector<Tensor> acts;
    net.forward(probe, acts);
    return acts;
}

inline SimilarityHeatmap cka_heatmap(const Mlp& a, const Mlp& b, const Tensor& probe) {
    SimilarityHeatmap hm;
    hm.row_labels = a.activation_labels();
    hm.col_labels = b.activation_labels();
    const std::vector<Tensor> acts_a = capture_activations(a, probe);
    const std::vector<Tensor> acts_b = capture_activations(b, probe);
    hm.values = Tensor({acts_a.size(), acts_b.size()});
    for (std::size_t i = 0; i < acts_a.size(); ++i) {
        for (std::size_t j = 0; j < acts_b.size(); ++j) {
            try {
                hm.values.at(i, j) = cka(acts_a[i], acts_b[j]);
            } catch (const undefined_similarity_error&) {
                hm.values.at(i, j) = std::numeric_limits<double>::quiet_NaN();
            }
        }
    }
    return hm;
}

// Mean CKA over corresponding layers (the bottom-left/top-right diagonal
// of the paper-style heatmap); missing cells are skipped.
inline double mean_corresponding_cka(const SimilarityHeatmap& hm) {
    const std::size_t n = std::min(hm.row_labels.size(), hm.col_labels.size());
    double s = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (hm.missing(i, i)) continue;
        s += hm.values.at(i, i);
        ++count;
    }
    if (count == 0) throw undefined_similarity_error("heatmap diagonal entirely missing");
    return s / static_cast<double>(count);
}

}  // namespace divq
