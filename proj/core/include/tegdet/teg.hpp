#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tegdet/tensor.hpp"
#include "tegdet/txdata.hpp"

namespace tegdet {

enum class BoundaryMode { equal_time, equal_count };
enum class Weighting { binary, amount };

struct SliceSpec {
    std::size_t t_slices = 10;
    BoundaryMode boundary_mode = BoundaryMode::equal_time;
};

// Transaction Evolution Graph: T slices of raw directed transactions over a
// fixed node set, plus the label-based attribute matrix. Adjacency matrices
// are derived views; the raw per-slice edge lists keep direction and
// multiplicity for CTR and the repeat detector.
struct Teg {
    std::string center;
    std::vector<std::string> nodes;  // nodes[0] == center
    std::size_t t_slices = 0;
    Weighting weighting = Weighting::binary;
    std::int64_t tau_min = 0;
    std::int64_t tau_max = 0;
    std::vector<std::vector<EgoSubgraph::Edge>> slices;
    Tensor attrs;  // N x 2, one-hot rows
    std::optional<bool> label;

    std::size_t n() const { return nodes.size(); }
    std::size_t transaction_count() const;
    std::size_t center_transaction_count() const;
    std::size_t nonempty_slice_count() const;

    // Symmetrized per-slice weight matrix (zero diagonal, not normalized).
    // Binary mode: 1 where at least one transaction links the pair. Amount
    // mode: log1p of directed amount sums, row-max scaled, then max(A, A^T).
    Tensor slice_adjacency(std::size_t t) const;
    std::vector<Tensor> adjacency() const;
};

// Assigns the subgraph's transactions to T slices. equal_time partitions the
// subgraph's own [tau_min, tau_max] into equal intervals with the last
// boundary inclusive; a zero-duration span with T > 1 puts everything in
// slice 0 and emits a warning. equal_count gives each slice an equal share of
// the timestamp-ordered transactions.
Teg build_teg(const EgoSubgraph& sub, const std::vector<AddressLabel>& labels,
              const SliceSpec& spec, Weighting weighting,
              std::vector<std::string>* warnings = nullptr);

// Central transaction ratio: transactions incident to the center (either
// direction) over all transactions, counted on the raw pre-aggregation edge
// lists. Throws on zero transactions.
double ctr(const Teg& teg);
double ctr(const EgoSubgraph& sub);

// A_hat = D^-1/2 (A + I) D^-1/2. Isolated nodes come out as identity rows.
Tensor normalize_adj(const Tensor& a);

// On-disk layout: <dir>/meta.json, slice_<t>.csv, attrs.csv. Round-trips
// bit-exactly.
void save_teg(const Teg& teg, const std::filesystem::path& dir);
Teg load_teg(const std::filesystem::path& dir);

}  // namespace tegdet
