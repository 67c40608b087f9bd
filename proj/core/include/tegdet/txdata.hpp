#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tegdet {

// One directed value transfer. Self-loops are filtered at ingestion.
struct TransactionRecord {
    std::string from_addr;
    std::string to_addr;
    double amount = 0.0;
    std::int64_t timestamp = 0;

    bool operator==(const TransactionRecord&) const = default;
};

struct AddressLabel {
    std::string addr;
    bool is_phishing = false;
};

// Two-order transaction neighborhood of a target address. Nodes are ordered
// center first, then first-order neighbors by first-transaction timestamp,
// then second-order likewise; edges reference node indices.
struct EgoSubgraph {
    struct Edge {
        std::size_t from = 0;
        std::size_t to = 0;
        double amount = 0.0;
        std::int64_t timestamp = 0;
    };

    std::string center;
    std::vector<std::string> nodes;  // nodes[0] == center
    std::vector<Edge> edges;
};

enum class TxFormat { csv, jsonl };

struct RowError {
    std::size_t row = 0;  // 1-based line number in the file
    std::string message;
};

struct LoadResult {
    std::vector<TransactionRecord> records;
    std::vector<RowError> errors;
    std::size_t self_loops_dropped = 0;
};

struct LabelLoadResult {
    std::vector<AddressLabel> labels;
    std::vector<RowError> errors;
};

// Parses a transaction file. Malformed rows are collected into the error
// summary with their line numbers; well-formed rows are returned in file
// order. Throws Error if the file cannot be read at all.
LoadResult load_transactions(const std::filesystem::path& path, TxFormat format);

// Label CSV: header `address,is_phishing`, flag in {0,1}. Duplicate
// addresses are reported as row errors.
LabelLoadResult load_labels(const std::filesystem::path& path);

void write_transactions_csv(const std::filesystem::path& path,
                            const std::vector<TransactionRecord>& records);
void write_transactions_jsonl(const std::filesystem::path& path,
                              const std::vector<TransactionRecord>& records);
void write_labels_csv(const std::filesystem::path& path,
                      const std::vector<AddressLabel>& labels);

// Extracts the center's two-order neighborhood. All center-incident
// transactions are retained (CTR needs the complete count); every other node
// may carry at most max_links retained non-center edges, selected by
// descending amount with (earlier timestamp, lexicographic pair) tie-breaks.
EgoSubgraph extract_ego_subgraph(const std::vector<TransactionRecord>& records,
                                 const std::string& center, std::size_t max_links);

}  // namespace tegdet
