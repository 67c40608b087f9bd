#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tegdet/autodiff.hpp"
#include "tegdet/teg.hpp"
#include "tegdet/tensor.hpp"

namespace tegdet {

// Full model plus its ablations: sum replaces the learnt time-coefficient
// readout; mean_pool/max_pool replace cluster-assignment pooling with
// column-wise mean/max while keeping the rest of the pipeline identical.
enum class Variant { time_coeff, sum, mean_pool, max_pool };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelConfig {
    std::size_t hidden_dim = 64;  // H
    std::size_t repr_dim = 32;    // d
    std::size_t pool_levels = 2;  // L; the final level always pools to one cluster
    double assign_ratio = 0.25;   // r
    Variant variant = Variant::time_coeff;
    std::size_t mlp_hidden = 32;
    std::size_t classes = 2;
    std::size_t t_slices = 10;   // readout length; TEGs must match
    std::size_t max_nodes = 64;  // cluster-width budget for the assignment GCN

    // Cluster count at each level for a graph of n nodes: level 0 holds n,
    // then repeated shrink by assign_ratio, and the final level reaches 1.
    std::vector<std::size_t> level_sizes(std::size_t n) const;
    void validate() const;
};

struct ModelParams {
    struct EfLevel {
        Tensor w0, w1;              // two-layer GCN weights
        Tensor wz, uz, wr, ur, w, u;  // update gate, reset gate, candidate
    };
    struct PoolLevel {
        Tensor w0, w1;  // assignment GCN; w1 holds max-width columns
    };
    std::vector<EfLevel> ef;
    std::vector<PoolLevel> pool;  // empty for mean/max pooling variants
    Tensor readout_logits;        // 1 x T
    Tensor mlp_w0, mlp_b0, mlp_w1, mlp_b1;

    // Stable iteration order: drives the optimizer layout, checkpoints, and
    // gradient checks.
    void for_each(const std::function<void(const std::string&, Tensor&)>& fn);
    void for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const;
    std::size_t count_scalars() const;
};

// Glorot-style uniform init, seeded; readout logits and biases start at zero.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path, const ModelConfig& config);

// One EF-Extractor step on a slice: a two-layer GCN reads the level input
// x_t, and GRU-style gates blend the result with the level's recurrent state.
//   Z = A_hat relu(A_hat x W0) W1
//   z = sigma(Z Wz + h Uz),  r = sigma(Z Wr + h Ur)
//   h~ = tanh(Z W + (r . h) U)
//   h' = (1 - z) . h + z . h~
Var ef_extract(Tape& tape, const Var& x, const Var& state, const Var& adj,
               const ModelParams::EfLevel& level);

struct PoolResult {
    Var h_pool;
    Var a_pool;
    Var assignment;  // C_t, rows sum to 1
};

// Cluster-assignment pooling: C = softmax_rows(GCN_pool(A, h)), pooled
// features C^T h, pooled adjacency C^T A C.
PoolResult pool(Tape& tape, const Var& h, const Var& adj, const ModelParams::PoolLevel& level,
                std::size_t n_clusters);

struct Prediction {
    Tensor probabilities;  // 1 x 2, sums to 1
    Tensor logits;         // 1 x 2
};

struct ForwardGraph {
    Var probabilities;
    Var logits;
    Var loss;                     // set when a label is supplied
    std::vector<Var> adj_slices;  // per-slice symmetrized adjacency leaves
    std::vector<Var> param_vars;  // parameter leaves in for_each order
};

// Runs the model over all T slices and L levels. When label is given the
// cross-entropy node is attached; when adj_requires_grad is set the per-slice
// adjacency leaves are differentiable (used by the gradient attack).
ForwardGraph build_forward(Tape& tape, const Teg& teg, const ModelParams& params,
                           const ModelConfig& config, std::optional<bool> label = std::nullopt,
                           bool adj_requires_grad = false);

Prediction forward(const Teg& teg, const ModelParams& params, const ModelConfig& config);

// Mean cross-entropy over the batch, with probabilities clamped at 1e-12
// before the log.
double batch_loss(const std::vector<const Teg*>& batch, const std::vector<bool>& labels,
                  const ModelParams& params, const ModelConfig& config);

// Same, but leaves gradients in grads (laid out per for_each order).
double batch_loss_grad(const std::vector<const Teg*>& batch, const std::vector<bool>& labels,
                       const ModelParams& params, const ModelConfig& config,
                       std::vector<Tensor>& grads);

}  // namespace tegdet
