#pragma once

#include <functional>
#include <vector>

#include "tegdet/autodiff.hpp"
#include "tegdet/rng.hpp"
#include "tegdet/teg.hpp"
#include "tegdet/tensor.hpp"

namespace testutil {

inline tegdet::Tensor random_tensor(std::size_t rows, std::size_t cols, tegdet::Rng& rng,
                                    double lo = -1.0, double hi = 1.0) {
    tegdet::Tensor t(rows, cols);
    for (auto& v : t.raw()) v = rng.uniform(lo, hi);
    return t;
}

// Random symmetric zero-diagonal adjacency with edge probability p.
inline tegdet::Tensor random_adjacency(std::size_t n, tegdet::Rng& rng, double p = 0.4,
                                       bool binary = true) {
    tegdet::Tensor a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (rng.uniform() < p) {
                const double w = binary ? 1.0 : rng.uniform(0.1, 2.0);
                a(i, j) = w;
                a(j, i) = w;
            }
        }
    return a;
}

// Checks every input's analytic gradient against central finite differences.
// build must map the leaf vars to the op output; the helper contracts the
// output to a scalar with a fixed random weighting so all entries matter.
inline void check_op_gradients(
    std::vector<tegdet::Tensor> inputs,
    const std::function<tegdet::Var(tegdet::Tape&, std::vector<tegdet::Var>&)>& build,
    double tol, std::uint64_t seed, double* max_err_out = nullptr) {
    using namespace tegdet;
    Rng rng(seed);

    Tensor weights;
    auto loss_value = [&](const std::vector<Tensor>& vals) {
        Tape tape;
        std::vector<Var> leaves;
        for (const auto& v : vals) leaves.push_back(tape.leaf(v, true));
        Var out = build(tape, leaves);
        if (weights.empty()) weights = random_tensor(out->value.rows(), out->value.cols(), rng);
        Var loss = tape.sum_all(tape.hadamard(out, tape.leaf(weights)));
        return std::pair<double, Tape>(loss->value(0, 0), std::move(tape));
    };

    // Analytic pass.
    Tape tape;
    std::vector<Var> leaves;
    for (const auto& v : inputs) leaves.push_back(tape.leaf(v, true));
    Var out = build(tape, leaves);
    if (weights.empty()) weights = random_tensor(out->value.rows(), out->value.cols(), rng);
    Var loss = tape.sum_all(tape.hadamard(out, tape.leaf(weights)));
    tape.backward(loss);

    const double eps = 1e-6;
    double max_err = 0.0;
    for (std::size_t which = 0; which < inputs.size(); ++which) {
        for (std::size_t idx = 0; idx < inputs[which].size(); ++idx) {
            const double orig = inputs[which].raw()[idx];
            inputs[which].raw()[idx] = orig + eps;
            const double up = loss_value(inputs).first;
            inputs[which].raw()[idx] = orig - eps;
            const double down = loss_value(inputs).first;
            inputs[which].raw()[idx] = orig;
            const double fd = (up - down) / (2.0 * eps);
            const double analytic =
                leaves[which]->has_grad() ? leaves[which]->grad.raw()[idx] : 0.0;
            const double err =
                std::abs(analytic - fd) / std::max({1.0, std::abs(analytic), std::abs(fd)});
            max_err = std::max(max_err, err);
        }
    }
    if (max_err_out) *max_err_out = max_err;
    if (max_err >= tol) throw std::runtime_error("gradient check failed: max rel err " +
                                                 std::to_string(max_err));
}

}  // namespace testutil
