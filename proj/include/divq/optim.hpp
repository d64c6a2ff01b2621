#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "divq/errors.hpp"
#include "divq/tensor.hpp"

namespace divq {

inline void zero_grads(const std::vector<Tensor*>& params) {
    for (Tensor* p : params) {
        p->ensure_grad();
        p->zero_grad();
    }
}

inline double global_grad_norm(const std::vector<Tensor*>& params) {
    double s = 0.0;
    for (const Tensor* p : params)
        for (double g : p->grad()) s += g * g;
    return std::sqrt(s);
}

// Rescales all gradients so their global L2 norm is at most max_norm.
inline void clip_grad_norm(const std::vector<Tensor*>& params, double max_norm) {
    const double norm = global_grad_norm(params);
    if (norm <= max_norm || norm == 0.0) return;
    const double scale = max_norm / norm;
    for (Tensor* p : params)
        for (double& g : p->grad()) g *= scale;
}

inline void sgd_step(const std::vector<Tensor*>& params, double lr) {
    for (Tensor* p : params) {
        if (!p->has_grad())
            throw shape_error("sgd_step: parameter has no gradient of matching length");
        auto& w = p->data();
        const auto& g = p->grad();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
    }
}

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction; moment buffers sized on first step.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    const AdamConfig& config() const { return cfg_; }
    long step_count() const { return t_; }

    void step(const std::vector<Tensor*>& params) {
        if (m_.empty()) {
            for (const Tensor* p : params) {
                m_.emplace_back(p->numel(), 0.0);
                v_.emplace_back(p->numel(), 0.0);
            }
        }
        if (m_.size() != params.size())
            throw shape_error("adam_step: parameter list changed size");
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t k = 0; k < params.size(); ++k) {
            Tensor* p = params[k];
            if (!p->has_grad() || m_[k].size() != p->numel())
                throw shape_error("adam_step: gradient/moment shape mismatch");
            auto& w = p->data();
            const auto& g = p->grad();
            auto& m = m_[k];
            auto& v = v_[k];
            for (std::size_t i = 0; i < w.size(); ++i) {
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

private:
    AdamConfig cfg_;
    long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace divq
