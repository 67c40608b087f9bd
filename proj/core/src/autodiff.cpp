#include "tegdet/autodiff.hpp"

#include <cmath>
#include <cstddef>

#include "tegdet/error.hpp"

namespace tegdet {

namespace {

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        fail(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

void check_square(const char* op, const Tensor& a) {
    if (a.rows() != a.cols())
        fail(std::string(op) + ": expected square matrix, got " + a.shape_str());
}

}  // namespace

void TapeNode::accumulate(const Tensor& g) {
    if (grad.empty()) grad = Tensor(value.rows(), value.cols());
    double* dst = grad.data();
    const double* src = g.data();
    for (std::size_t i = 0; i < grad.size(); ++i) dst[i] += src[i];
}

Var Tape::record(Tensor value, std::vector<Var> parents, std::function<void(TapeNode&)> bw) {
    auto node = std::make_shared<TapeNode>();
    node->value = std::move(value);
    node->parents = std::move(parents);
    for (const auto& p : node->parents)
        if (p->requires_grad) node->requires_grad = true;
    if (node->requires_grad) node->backward = std::move(bw);
    nodes_.push_back(node);
    return node;
}

Var Tape::leaf(Tensor value, bool requires_grad) {
    auto node = std::make_shared<TapeNode>();
    node->value = std::move(value);
    node->requires_grad = requires_grad;
    nodes_.push_back(node);
    return node;
}

Var Tape::matmul(const Var& a, const Var& b) {
    if (a->value.cols() != b->value.rows())
        fail("matmul: shape mismatch " + a->value.shape_str() + " vs " + b->value.shape_str());
    Tensor out(a->value.rows(), b->value.cols());
    matmul_acc(a->value, b->value, out);
    return record(std::move(out), {a, b}, [](TapeNode& n) {
        const Var& a = n.parents[0];
        const Var& b = n.parents[1];
        if (a->requires_grad) {
            if (a->grad.empty()) a->grad = Tensor(a->value.rows(), a->value.cols());
            matmul_bt_acc(n.grad, b->value, a->grad);
        }
        if (b->requires_grad) {
            if (b->grad.empty()) b->grad = Tensor(b->value.rows(), b->value.cols());
            matmul_at_acc(a->value, n.grad, b->grad);
        }
    });
}

Var Tape::add(const Var& a, const Var& b) {
    check_same_shape("add", a->value, b->value);
    Tensor out = a->value;
    const double* src = b->value.data();
    double* dst = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) dst[i] += src[i];
    return record(std::move(out), {a, b}, [](TapeNode& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->accumulate(n.grad);
        if (n.parents[1]->requires_grad) n.parents[1]->accumulate(n.grad);
    });
}

Var Tape::sub(const Var& a, const Var& b) {
    check_same_shape("sub", a->value, b->value);
    Tensor out = a->value;
    const double* src = b->value.data();
    double* dst = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) dst[i] -= src[i];
    return record(std::move(out), {a, b}, [](TapeNode& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->accumulate(n.grad);
        if (n.parents[1]->requires_grad) {
            Tensor neg = n.grad;
            for (double& v : neg.raw()) v = -v;
            n.parents[1]->accumulate(neg);
        }
    });
}

Var Tape::hadamard(const Var& a, const Var& b) {
    check_same_shape("hadamard", a->value, b->value);
    Tensor out = a->value;
    const double* src = b->value.data();
    double* dst = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) dst[i] *= src[i];
    return record(std::move(out), {a, b}, [](TapeNode& n) {
        const Var& a = n.parents[0];
        const Var& b = n.parents[1];
        if (a->requires_grad) {
            Tensor g = n.grad;
            double* dst = g.data();
            const double* src = b->value.data();
            for (std::size_t i = 0; i < g.size(); ++i) dst[i] *= src[i];
            a->accumulate(g);
        }
        if (b->requires_grad) {
            Tensor g = n.grad;
            double* dst = g.data();
            const double* src = a->value.data();
            for (std::size_t i = 0; i < g.size(); ++i) dst[i] *= src[i];
            b->accumulate(g);
        }
    });
}

Var Tape::sigmoid(const Var& x) {
    Tensor out = x->value;
    for (double& v : out.raw()) v = 1.0 / (1.0 + std::exp(-v));
    return record(std::move(out), {x}, [](TapeNode& n) {
        Tensor g = n.grad;
        const double* y = n.value.data();
        double* dst = g.data();
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] *= y[i] * (1.0 - y[i]);
        n.parents[0]->accumulate(g);
    });
}

Var Tape::tanh(const Var& x) {
    Tensor out = x->value;
    for (double& v : out.raw()) v = std::tanh(v);
    return record(std::move(out), {x}, [](TapeNode& n) {
        Tensor g = n.grad;
        const double* y = n.value.data();
        double* dst = g.data();
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] *= 1.0 - y[i] * y[i];
        n.parents[0]->accumulate(g);
    });
}

Var Tape::relu(const Var& x) {
    Tensor out = x->value;
    for (double& v : out.raw())
        if (v < 0.0) v = 0.0;
    return record(std::move(out), {x}, [](TapeNode& n) {
        Tensor g = n.grad;
        const double* in = n.parents[0]->value.data();
        double* dst = g.data();
        for (std::size_t i = 0; i < g.size(); ++i)
            if (in[i] <= 0.0) dst[i] = 0.0;
        n.parents[0]->accumulate(g);
    });
}

Var Tape::softmax_rows(const Var& x) {
    Tensor out = x->value;
    const std::size_t rows = out.rows(), cols = out.cols();
    for (std::size_t i = 0; i < rows; ++i) {
        double* r = out.row(i);
        double mx = r[0];
        for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, r[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            r[j] = std::exp(r[j] - mx);
            sum += r[j];
        }
        for (std::size_t j = 0; j < cols; ++j) r[j] /= sum;
    }
    return record(std::move(out), {x}, [](TapeNode& n) {
        const std::size_t rows = n.value.rows(), cols = n.value.cols();
        Tensor g(rows, cols);
        for (std::size_t i = 0; i < rows; ++i) {
            const double* y = n.value.row(i);
            const double* up = n.grad.row(i);
            double dot = 0.0;
            for (std::size_t j = 0; j < cols; ++j) dot += up[j] * y[j];
            double* dst = g.row(i);
            for (std::size_t j = 0; j < cols; ++j) dst[j] = y[j] * (up[j] - dot);
        }
        n.parents[0]->accumulate(g);
    });
}

Var Tape::transpose(const Var& x) {
    const Tensor& v = x->value;
    Tensor out(v.cols(), v.rows());
    for (std::size_t i = 0; i < v.rows(); ++i)
        for (std::size_t j = 0; j < v.cols(); ++j) out(j, i) = v(i, j);
    return record(std::move(out), {x}, [](TapeNode& n) {
        Tensor g(n.grad.cols(), n.grad.rows());
        for (std::size_t i = 0; i < n.grad.rows(); ++i)
            for (std::size_t j = 0; j < n.grad.cols(); ++j) g(j, i) = n.grad(i, j);
        n.parents[0]->accumulate(g);
    });
}

Var Tape::scale(const Var& x, double c) {
    Tensor out = x->value;
    for (double& v : out.raw()) v *= c;
    return record(std::move(out), {x}, [c](TapeNode& n) {
        Tensor g = n.grad;
        for (double& v : g.raw()) v *= c;
        n.parents[0]->accumulate(g);
    });
}

Var Tape::concat_rows(const std::vector<Var>& xs) {
    if (xs.empty()) fail("concat_rows: empty input list");
    const std::size_t cols = xs[0]->value.cols();
    std::size_t rows = 0;
    for (const auto& x : xs) {
        if (x->value.cols() != cols)
            fail("concat_rows: shape mismatch " + xs[0]->value.shape_str() + " vs " +
                 x->value.shape_str());
        rows += x->value.rows();
    }
    Tensor out(rows, cols);
    std::size_t at = 0;
    for (const auto& x : xs) {
        for (std::size_t i = 0; i < x->value.rows(); ++i)
            for (std::size_t j = 0; j < cols; ++j) out(at + i, j) = x->value(i, j);
        at += x->value.rows();
    }
    return record(std::move(out), xs, [](TapeNode& n) {
        std::size_t at = 0;
        for (const auto& p : n.parents) {
            const std::size_t r = p->value.rows(), c = p->value.cols();
            if (p->requires_grad) {
                Tensor g(r, c);
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) g(i, j) = n.grad(at + i, j);
                p->accumulate(g);
            }
            at += r;
        }
    });
}

Var Tape::sum_axis(const Var& x, int axis) {
    const Tensor& v = x->value;
    if (axis == 0) {
        Tensor out(1, v.cols());
        for (std::size_t i = 0; i < v.rows(); ++i)
            for (std::size_t j = 0; j < v.cols(); ++j) out(0, j) += v(i, j);
        return record(std::move(out), {x}, [](TapeNode& n) {
            const Tensor& pv = n.parents[0]->value;
            Tensor g(pv.rows(), pv.cols());
            for (std::size_t i = 0; i < pv.rows(); ++i)
                for (std::size_t j = 0; j < pv.cols(); ++j) g(i, j) = n.grad(0, j);
            n.parents[0]->accumulate(g);
        });
    }
    Tensor out(v.rows(), 1);
    for (std::size_t i = 0; i < v.rows(); ++i)
        for (std::size_t j = 0; j < v.cols(); ++j) out(i, 0) += v(i, j);
    return record(std::move(out), {x}, [](TapeNode& n) {
        const Tensor& pv = n.parents[0]->value;
        Tensor g(pv.rows(), pv.cols());
        for (std::size_t i = 0; i < pv.rows(); ++i)
            for (std::size_t j = 0; j < pv.cols(); ++j) g(i, j) = n.grad(i, 0);
        n.parents[0]->accumulate(g);
    });
}

Var Tape::sum_all(const Var& x) {
    Tensor out(1, 1);
    for (double v : x->value.raw()) out(0, 0) += v;
    return record(std::move(out), {x}, [](TapeNode& n) {
        const Tensor& pv = n.parents[0]->value;
        Tensor g = Tensor::constant(pv.rows(), pv.cols(), n.grad(0, 0));
        n.parents[0]->accumulate(g);
    });
}

Var Tape::mean_rows(const Var& x) {
    return scale(sum_axis(x, 0), 1.0 / static_cast<double>(x->value.rows()));
}

Var Tape::max_rows(const Var& x) {
    const Tensor& v = x->value;
    Tensor out(1, v.cols());
    std::vector<std::size_t> argmax(v.cols(), 0);
    for (std::size_t j = 0; j < v.cols(); ++j) {
        double best = v(0, j);
        for (std::size_t i = 1; i < v.rows(); ++i) {
            if (v(i, j) > best) {
                best = v(i, j);
                argmax[j] = i;
            }
        }
        out(0, j) = best;
    }
    return record(std::move(out), {x}, [argmax](TapeNode& n) {
        const Tensor& pv = n.parents[0]->value;
        Tensor g(pv.rows(), pv.cols());
        for (std::size_t j = 0; j < pv.cols(); ++j) g(argmax[j], j) = n.grad(0, j);
        n.parents[0]->accumulate(g);
    });
}

Var Tape::log(const Var& x) {
    Tensor out = x->value;
    for (double& v : out.raw()) v = std::log(v);
    return record(std::move(out), {x}, [](TapeNode& n) {
        Tensor g = n.grad;
        const double* in = n.parents[0]->value.data();
        double* dst = g.data();
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] /= in[i];
        n.parents[0]->accumulate(g);
    });
}

Var Tape::clamp_min(const Var& x, double lo) {
    Tensor out = x->value;
    for (double& v : out.raw())
        if (v < lo) v = lo;
    return record(std::move(out), {x}, [lo](TapeNode& n) {
        Tensor g = n.grad;
        const double* in = n.parents[0]->value.data();
        double* dst = g.data();
        for (std::size_t i = 0; i < g.size(); ++i)
            if (in[i] < lo) dst[i] = 0.0;
        n.parents[0]->accumulate(g);
    });
}

Var Tape::col_slice(const Var& x, std::size_t n_cols) {
    const Tensor& v = x->value;
    if (n_cols > v.cols())
        fail("col_slice: requested " + std::to_string(n_cols) + " cols from " + v.shape_str());
    Tensor out(v.rows(), n_cols);
    for (std::size_t i = 0; i < v.rows(); ++i)
        for (std::size_t j = 0; j < n_cols; ++j) out(i, j) = v(i, j);
    return record(std::move(out), {x}, [n_cols](TapeNode& n) {
        const Tensor& pv = n.parents[0]->value;
        Tensor g(pv.rows(), pv.cols());
        for (std::size_t i = 0; i < pv.rows(); ++i)
            for (std::size_t j = 0; j < n_cols; ++j) g(i, j) = n.grad(i, j);
        n.parents[0]->accumulate(g);
    });
}

Var Tape::add_identity(const Var& a) {
    check_square("add_identity", a->value);
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.rows(); ++i) out(i, i) += 1.0;
    return record(std::move(out), {a},
                  [](TapeNode& n) { n.parents[0]->accumulate(n.grad); });
}

Var Tape::rsqrt(const Var& x) {
    Tensor out = x->value;
    for (double& v : out.raw()) v = 1.0 / std::sqrt(v);
    return record(std::move(out), {x}, [](TapeNode& n) {
        Tensor g = n.grad;
        const double* y = n.value.data();
        double* dst = g.data();
        // d/dx x^-1/2 = -1/2 x^-3/2 = -1/2 y^3
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] *= -0.5 * y[i] * y[i] * y[i];
        n.parents[0]->accumulate(g);
    });
}

Var Tape::diag(const Var& v) {
    const Tensor& x = v->value;
    if (x.cols() != 1) fail("diag: expected column vector, got " + x.shape_str());
    Tensor out(x.rows(), x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out(i, i) = x(i, 0);
    return record(std::move(out), {v}, [](TapeNode& n) {
        Tensor g(n.parents[0]->value.rows(), 1);
        for (std::size_t i = 0; i < g.rows(); ++i) g(i, 0) = n.grad(i, i);
        n.parents[0]->accumulate(g);
    });
}

Var Tape::normalize_adj(const Var& a) {
    check_square("normalize_adj", a->value);
    Var a_tilde = add_identity(a);
    Var d_inv_sqrt = diag(rsqrt(sum_axis(a_tilde, 1)));
    return matmul(matmul(d_inv_sqrt, a_tilde), d_inv_sqrt);
}

void Tape::backward(const Var& loss) {
    if (loss->value.rows() != 1 || loss->value.cols() != 1)
        fail("backward: loss must be scalar, got " + loss->value.shape_str());
    loss->accumulate(Tensor::constant(1, 1, 1.0));
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        TapeNode& n = **it;
        if (n.requires_grad && n.backward && n.has_grad()) n.backward(n);
    }
}

void Tape::zero_grad() {
    for (auto& n : nodes_) n->grad = Tensor();
}

}  // namespace tegdet
