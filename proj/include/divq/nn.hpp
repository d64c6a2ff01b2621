#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "divq/autodiff.hpp"
#include "divq/errors.hpp"
#include "divq/rng.hpp"
#include "divq/tensor.hpp"

namespace divq {

// Fully connected ReLU network: input -> hidden... -> linear output.
// Weights are stored (in x out) so a batch forward is X * W + b.
class Mlp {
public:
    Mlp() = default;

    Mlp(std::size_t input_dim, const std::vector<int>& hidden, std::size_t output_dim)
        : input_dim_(input_dim), output_dim_(output_dim) {
        std::size_t in = input_dim;
        for (int h : hidden) {
            if (h <= 0) throw domain_error("mlp: hidden width must be positive");
            layers_.push_back(Layer{Tensor({in, static_cast<std::size_t>(h)}),
                                    Tensor({static_cast<std::size_t>(h)})});
            in = static_cast<std::size_t>(h);
        }
        layers_.push_back(Layer{Tensor({in, output_dim}), Tensor({output_dim})});
    }

    // Kaiming-style uniform fan-in init, one seed per layer. Biases start
    // at zero.
    void init(const std::vector<std::uint64_t>& layer_seeds) {
        if (layer_seeds.size() != layers_.size())
            throw domain_error("mlp init: need one seed per layer");
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            Rng rng(layer_seeds[l]);
            const double bound = std::sqrt(6.0 / static_cast<double>(layers_[l].w.rows()));
            for (double& w : layers_[l].w.data()) w = rng.uniform(-bound, bound);
            for (double& b : layers_[l].b.data()) b = 0.0;
        }
    }

    std::size_t input_dim() const { return input_dim_; }
    std::size_t output_dim() const { return output_dim_; }
    std::size_t layer_count() const { return layers_.size(); }

    std::vector<Tensor*> params() {
        std::vector<Tensor*> out;
        for (Layer& l : layers_) {
            out.push_back(&l.w);
            out.push_back(&l.b);
        }
        return out;
    }

    std::vector<const Tensor*> params() const {
        std::vector<const Tensor*> out;
        for (const Layer& l : layers_) {
            out.push_back(&l.w);
            out.push_back(&l.b);
        }
        return out;
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const Layer& l : layers_) n += l.w.numel() + l.b.numel();
        return n;
    }

    double squared_param_norm() const {
        double s = 0.0;
        for (const Layer& l : layers_) {
            for (double v : l.w.data()) s += v * v;
            for (double v : l.b.data()) s += v * v;
        }
        return s;
    }

    void copy_parameters_from(const Mlp& o) {
        if (o.layers_.size() != layers_.size())
            throw shape_error("mlp copy: architecture mismatch");
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            layers_[l].w.data() = o.layers_[l].w.data();
            layers_[l].b.data() = o.layers_[l].b.data();
        }
    }

    // Plain batched forward; X is (batch x input_dim).
    Tensor forward(const Tensor& x) const { return forward_impl(x, nullptr); }

    // Forward that also captures, in order, the pre-ReLU and post-ReLU
    // activations of each hidden layer followed by the output layer.
    Tensor forward(const Tensor& x, std::vector<Tensor>& activations) const {
        return forward_impl(x, &activations);
    }

    // Labels matching the captured activation list.
    std::vector<std::string> activation_labels() const {
        std::vector<std::string> labels;
        for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
            labels.push_back("h" + std::to_string(l + 1) + "_pre");
            labels.push_back("h" + std::to_string(l + 1) + "_post");
        }
        labels.push_back("out");
        return labels;
    }

    // Per-action values for a single observation.
    std::vector<double> evaluate(const std::vector<double>& obs) const {
        Tensor x({1, obs.size()}, obs);
        return forward(x).data();
    }

    // Records the same computation on a tape; parameters are registered so
    // backward() fills their grad buffers. When param_vars is given, the
    // registered leaves are appended in params() order for reuse by other
    // tape expressions.
    Tape::Var forward_tape(Tape& tape, Tape::Var x,
                           std::vector<Tape::Var>* param_vars = nullptr) {
        Tape::Var h = x;
        for (Layer& layer : layers_) {
            const Tape::Var w = tape.param(layer.w);
            const Tape::Var b = tape.param(layer.b);
            if (param_vars) {
                param_vars->push_back(w);
                param_vars->push_back(b);
            }
            h = tape.add_rowvec(tape.matmul(h, w), b);
            if (&layer != &layers_.back()) h = tape.relu(h);
        }
        return h;
    }

private:
    struct Layer {
        Tensor w;
        Tensor b;
    };

    Tensor forward_impl(const Tensor& x, std::vector<Tensor>* acts) const {
        if (x.rank() != 2 || x.cols() != input_dim_)
            throw shape_error("mlp forward: input must be (batch x " +
                              std::to_string(input_dim_) + "), got " + shape_string(x));
        Tensor h = x;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const Layer& layer = layers_[l];
            const std::size_t m = h.rows(), k = h.cols(), n = layer.w.cols();
            Tensor z({m, n});
            detail::matmul_acc(h.data().data(), layer.w.data().data(), z.data().data(),
                               m, k, n);
            for (std::size_t r = 0; r < m; ++r)
                for (std::size_t c = 0; c < n; ++c) z[r * n + c] += layer.b[c];
            if (l + 1 < layers_.size()) {
                if (acts) acts->push_back(z);  // pre-ReLU
                for (double& v : z.data())
                    if (v < 0.0) v = 0.0;
                if (acts) acts->push_back(z);  // post-ReLU
            } else {
                if (acts) acts->push_back(z);  // output layer
            }
            h = std::move(z);
        }
        return h;
    }

    std::size_t input_dim_ = 0;
    std::size_t output_dim_ = 0;
    std::vector<Layer> layers_;
};

}  // namespace divq
