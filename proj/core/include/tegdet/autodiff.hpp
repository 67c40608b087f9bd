#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "tegdet/tensor.hpp"

namespace tegdet {

class Tape;

// One recorded value in the computation graph. Gradients are allocated
// lazily on first accumulation and share the value's shape.
struct TapeNode {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<TapeNode>> parents;
    std::function<void(TapeNode&)> backward;

    void accumulate(const Tensor& g);
    bool has_grad() const { return !grad.empty(); }
};

using Var = std::shared_ptr<TapeNode>;

// Define-by-run tape. Nodes are recorded in creation order; backward() walks
// them in exact reverse order, so gradient accumulation is deterministic.
// One tape per worker; tapes are never shared across threads.
class Tape {
public:
    Var leaf(Tensor value, bool requires_grad = false);

    Var matmul(const Var& a, const Var& b);
    Var add(const Var& a, const Var& b);
    Var sub(const Var& a, const Var& b);
    Var hadamard(const Var& a, const Var& b);
    Var sigmoid(const Var& x);
    Var tanh(const Var& x);
    Var relu(const Var& x);
    Var softmax_rows(const Var& x);
    Var transpose(const Var& x);
    Var scale(const Var& x, double c);
    Var concat_rows(const std::vector<Var>& xs);
    // Sums along an axis: axis 0 collapses rows (result 1xN), axis 1 collapses
    // columns (result Mx1).
    Var sum_axis(const Var& x, int axis);
    Var sum_rows(const Var& x) { return sum_axis(x, 0); }
    Var sum_all(const Var& x);
    Var mean_rows(const Var& x);
    Var max_rows(const Var& x);
    Var log(const Var& x);
    Var clamp_min(const Var& x, double lo);
    // First n columns of x. Backward scatters into the used columns only.
    Var col_slice(const Var& x, std::size_t n_cols);

    // A_hat = D^-1/2 (A + I) D^-1/2, differentiable in A. Composite of the
    // primitives below, so finite-difference checks cover it end to end.
    Var normalize_adj(const Var& a);

    Var add_identity(const Var& a);
    Var rsqrt(const Var& x);
    Var diag(const Var& v);

    // Seeds d(loss)/d(loss) = 1 and propagates through the tape in reverse
    // creation order. loss must be 1x1.
    void backward(const Var& loss);
    void zero_grad();

    std::size_t size() const { return nodes_.size(); }

private:
    Var record(Tensor value, std::vector<Var> parents, std::function<void(TapeNode&)> bw);
    std::vector<Var> nodes_;
};

}  // namespace tegdet
