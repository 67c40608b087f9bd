#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tegdet/model.hpp"
#include "tegdet/teg.hpp"
#include "tegdet/train.hpp"

namespace tegdet {

struct CtrAttackConfig {
    double target_ctr = 0.2;
    double slices_fraction = 0.5;  // attack ceil(T * fraction) randomly chosen slices
    std::uint64_t seed = 1;
};

struct GradAttackConfig {
    double modify_rate = 0.1;  // k = round(rate * max node count over the dataset)
    std::uint64_t seed = 1;
};

struct AddedEdge {
    std::size_t slice = 0;
    std::size_t from = 0;
    std::size_t to = 0;
    double amount = 0.0;
};

struct AttackResult {
    Teg teg;
    std::vector<AddedEdge> added;
    std::vector<std::string> warnings;
};

// Inserts transactions between non-central node pairs, one at a time at
// uniformly random eligible (slice, pair) positions, until the recomputed CTR
// drops below the target. Amounts are uniform in (0, max original amount).
// A target at or above the current CTR is a no-op. The per-address RNG
// substream is keyed by (seed, center address).
AttackResult ctr_attack(const Teg& teg, const CtrAttackConfig& config);

// Ranks zero entries of the symmetrized slice adjacencies by descending
// d(loss)/dA and inserts unit transactions at the global top-k positions.
// Requires a labeled TEG and a trained model.
AttackResult grad_attack(const Teg& teg, const ModelParams& params, const ModelConfig& config,
                         const GradAttackConfig& attack, std::size_t dataset_max_nodes);

enum class AttackKind { ctr, grad };

struct VariantModel {
    std::string name;
    ModelParams params;
    ModelConfig config;
};

struct DegradationRow {
    std::string model;
    std::string attack;  // "clean", "ctr", or "grad"
    double level = 0.0;
    Metrics metrics;
    double mean_added_edges = 0.0;
};

// Applies the attack to test-split phishing TEGs only (normals stay clean)
// and evaluates every model at every level; a clean baseline row per model
// comes first.
std::vector<DegradationRow> degradation_curve(const std::vector<const Teg*>& test_set,
                                              const std::vector<bool>& labels,
                                              const std::vector<VariantModel>& models,
                                              AttackKind kind, const std::vector<double>& levels,
                                              std::uint64_t seed, std::size_t dataset_max_nodes);

}  // namespace tegdet
