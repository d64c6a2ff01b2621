#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "divq/errors.hpp"
#include "divq/tensor.hpp"

namespace divq {

namespace detail {

// c = a(m x k) * b(k x n); c must be zeroed by the caller.
inline void matmul_acc(const double* a, const double* b, double* c,
                       std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// c(m x k) += a(m x n) * b(k x n)^T
inline void matmul_nt_acc(const double* a, const double* b, double* c,
                          std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * n;
        double* crow = c + i * k;
        for (std::size_t j = 0; j < k; ++j) {
            const double* brow = b + j * n;
            double s = 0.0;
            for (std::size_t p = 0; p < n; ++p) s += arow[p] * brow[p];
            crow[j] += s;
        }
    }
}

// c(k x n) += a(m x k)^T * b(m x n)
inline void matmul_tn_acc(const double* a, const double* b, double* c,
                          std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* brow = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            double* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace detail

// Eager reverse-mode tape. Ops compute forward values at record time and
// push a backward closure; backward() walks the records in reverse, which
// is a valid topological order because inputs always precede outputs.
class Tape {
public:
    using Var = int;

    // Leaf holding a constant; no gradient is propagated outward.
    Var constant(Tensor t) {
        nodes_.push_back(Node{std::move(t), {}, nullptr, nullptr});
        return last();
    }

    // Leaf bound to an external tensor; backward() accumulates into its
    // grad buffer, so repeated backward calls without zero_grad add up.
    Var param(Tensor& t) {
        t.ensure_grad();
        nodes_.push_back(Node{t, {}, nullptr, &t});
        const Var v = last();
        nodes_[v].backward = [this, v](std::vector<double>& /*unused*/) {
            Node& node = nodes_[v];
            auto& g = node.bound->grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += node.adjoint[i];
        };
        return v;
    }

    const Tensor& value(Var v) const { return nodes_[v].value; }

    // Adjoint of a node after backward(); test hook.
    const std::vector<double>& adjoint(Var v) const { return nodes_[v].adjoint; }

    Var matmul(Var a, Var b) {
        const Tensor& ta = nodes_[a].value;
        const Tensor& tb = nodes_[b].value;
        if (ta.rank() != 2 || tb.rank() != 2 || ta.cols() != tb.rows())
            throw shape_error("matmul: incompatible shapes " + shape_string(ta) +
                              " and " + shape_string(tb));
        const std::size_t m = ta.rows(), k = ta.cols(), n = tb.cols();
        Tensor out({m, n});
        detail::matmul_acc(ta.data().data(), tb.data().data(), out.data().data(), m, k, n);
        return push(std::move(out), [this, a, b, m, k, n](std::vector<double>& up) {
            detail::matmul_nt_acc(up.data(), nodes_[b].value.data().data(),
                                  nodes_[a].adjoint.data(), m, n, k);
            detail::matmul_tn_acc(nodes_[a].value.data().data(), up.data(),
                                  nodes_[b].adjoint.data(), m, k, n);
        });
    }

    Var add(Var a, Var b) {
        check_same_shape(a, b, "add");
        Tensor out = nodes_[a].value;
        const auto& vb = nodes_[b].value.data();
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] += vb[i];
        return push(std::move(out), [this, a, b](std::vector<double>& up) {
            accumulate(a, up);
            accumulate(b, up);
        });
    }

    Var sub(Var a, Var b) {
        check_same_shape(a, b, "sub");
        Tensor out = nodes_[a].value;
        const auto& vb = nodes_[b].value.data();
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= vb[i];
        return push(std::move(out), [this, a, b](std::vector<double>& up) {
            accumulate(a, up);
            auto& gb = nodes_[b].adjoint;
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= up[i];
        });
    }

    // matrix(m x n) + row vector(n), broadcast over rows
    Var add_rowvec(Var m, Var v) {
        const Tensor& tm = nodes_[m].value;
        const Tensor& tv = nodes_[v].value;
        if (tm.rank() != 2 || tv.numel() != tm.cols())
            throw shape_error("add_rowvec: shapes " + shape_string(tm) + " and " +
                              shape_string(tv));
        Tensor out = tm;
        const std::size_t rows = tm.rows(), cols = tm.cols();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += tv[c];
        return push(std::move(out), [this, m, v, rows, cols](std::vector<double>& up) {
            accumulate(m, up);
            auto& gv = nodes_[v].adjoint;
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) gv[c] += up[r * cols + c];
        });
    }

    Var relu(Var a) {
        Tensor out = nodes_[a].value;
        for (std::size_t i = 0; i < out.numel(); ++i)
            if (out[i] < 0.0) out[i] = 0.0;
        // subgradient at 0 is 0: pass only where the input is strictly positive
        return push(std::move(out), [this, a](std::vector<double>& up) {
            auto& ga = nodes_[a].adjoint;
            const auto& va = nodes_[a].value.data();
            for (std::size_t i = 0; i < ga.size(); ++i)
                if (va[i] > 0.0) ga[i] += up[i];
        });
    }

    Var square(Var a) {
        Tensor out = nodes_[a].value;
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= out[i];
        return push(std::move(out), [this, a](std::vector<double>& up) {
            auto& ga = nodes_[a].adjoint;
            const auto& va = nodes_[a].value.data();
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += up[i] * 2.0 * va[i];
        });
    }

    Var scale(Var a, double c) {
        Tensor out = nodes_[a].value;
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= c;
        return push(std::move(out), [this, a, c](std::vector<double>& up) {
            auto& ga = nodes_[a].adjoint;
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += c * up[i];
        });
    }

    Var sum(Var a) {
        double s = 0.0;
        for (double v : nodes_[a].value.data()) s += v;
        return push(Tensor::scalar(s), [this, a](std::vector<double>& up) {
            auto& ga = nodes_[a].adjoint;
            for (double& g : ga) g += up[0];
        });
    }

    Var mean(Var a) {
        const double n = static_cast<double>(nodes_[a].value.numel());
        double s = 0.0;
        for (double v : nodes_[a].value.data()) s += v;
        return push(Tensor::scalar(s / n), [this, a, n](std::vector<double>& up) {
            auto& ga = nodes_[a].adjoint;
            const double g = up[0] / n;
            for (double& gi : ga) gi += g;
        });
    }

    // out[r] = m(r, cols[r]); per-row column gather
    Var pick(Var m, std::vector<std::size_t> cols) {
        const Tensor& tm = nodes_[m].value;
        if (tm.rank() != 2 || cols.size() != tm.rows())
            throw shape_error("pick: need one column index per row");
        const std::size_t n = tm.cols();
        Tensor out({cols.size()});
        for (std::size_t r = 0; r < cols.size(); ++r) {
            if (cols[r] >= n) throw shape_error("pick: column index out of range");
            out[r] = tm[r * n + cols[r]];
        }
        return push(std::move(out),
                    [this, m, n, cols = std::move(cols)](std::vector<double>& up) {
                        auto& gm = nodes_[m].adjoint;
                        for (std::size_t r = 0; r < cols.size(); ++r)
                            gm[r * n + cols[r]] += up[r];
                    });
    }

    // sum over all entries of all parts of w^2; the squared-L2 norm of a
    // parameter list. Backward adds 2w to each part.
    Var squared_l2(const std::vector<Var>& parts) {
        if (parts.empty()) throw domain_error("squared_l2: empty parameter list");
        double s = 0.0;
        for (Var p : parts)
            for (double v : nodes_[p].value.data()) s += v * v;
        return push(Tensor::scalar(s), [this, parts](std::vector<double>& up) {
            for (Var p : parts) {
                auto& gp = nodes_[p].adjoint;
                const auto& vp = nodes_[p].value.data();
                for (std::size_t i = 0; i < gp.size(); ++i)
                    gp[i] += up[0] * 2.0 * vp[i];
            }
        });
    }

    // a + c*b for scalars; used to attach weighted penalty terms.
    Var add_scaled(Var a, Var b, double c) {
        if (!nodes_[a].value.is_scalar() || !nodes_[b].value.is_scalar())
            throw shape_error("add_scaled: scalar operands required");
        Tensor out = Tensor::scalar(nodes_[a].value[0] + c * nodes_[b].value[0]);
        return push(std::move(out), [this, a, b, c](std::vector<double>& up) {
            nodes_[a].adjoint[0] += up[0];
            nodes_[b].adjoint[0] += c * up[0];
        });
    }

    // Scalar node with an externally computed value and local derivative
    // d(value)/d(in). Lets analytic scalar maps (sqrt, the inequality
    // measures) join the tape without dedicated ops.
    Var chain_scalar(Var in, double value, double dvalue_din) {
        if (!nodes_[in].value.is_scalar())
            throw shape_error("chain_scalar: scalar input required");
        return push(Tensor::scalar(value), [this, in, dvalue_din](std::vector<double>& up) {
            nodes_[in].adjoint[0] += dvalue_din * up[0];
        });
    }

    // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. Node
    // adjoints are reset on every call; gradients of bound parameters
    // accumulate across calls.
    void backward(Var loss) {
        Node& ln = nodes_[loss];
        if (!ln.value.is_scalar())
            throw shape_error("backward: loss must be scalar, got " + shape_string(ln.value));
        if (!std::isfinite(ln.value[0]))
            throw numeric_error("backward: loss is not finite");
        for (Node& n : nodes_) n.adjoint.assign(n.value.numel(), 0.0);
        ln.adjoint[0] = 1.0;
        for (Var v = loss; v >= 0; --v)
            if (nodes_[v].backward) nodes_[v].backward(nodes_[v].adjoint);
    }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        std::vector<double> adjoint;
        std::function<void(std::vector<double>&)> backward;
        Tensor* bound = nullptr;
    };

    Var last() const { return static_cast<Var>(nodes_.size()) - 1; }

    Var push(Tensor value, std::function<void(std::vector<double>&)> back) {
        nodes_.push_back(Node{std::move(value), {}, std::move(back), nullptr});
        return last();
    }

    void accumulate(Var v, const std::vector<double>& up) {
        auto& g = nodes_[v].adjoint;
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += up[i];
    }

    void check_same_shape(Var a, Var b, const char* op) {
        if (!nodes_[a].value.same_shape(nodes_[b].value))
            throw shape_error(std::string(op) + ": shape mismatch " +
                              shape_string(nodes_[a].value) + " vs " +
                              shape_string(nodes_[b].value));
    }

    std::vector<Node> nodes_;
};

}  // namespace divq
