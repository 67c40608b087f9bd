#include "tegdet/txdata.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "csv.hpp"
#include "tegdet/error.hpp"

namespace tegdet {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot read file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t pos = text.find('\n', start);
        if (pos == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    return lines;
}

// Validates the shared fields of one parsed row and either appends a record
// or reports why the row is malformed.
void ingest_row(LoadResult& out, std::size_t row, std::string from, std::string to, double amount,
                std::int64_t timestamp) {
    if (from.empty() || to.empty()) {
        out.errors.push_back({row, "empty address"});
        return;
    }
    if (amount < 0.0) {
        out.errors.push_back({row, "negative amount"});
        return;
    }
    if (timestamp < 0) {
        out.errors.push_back({row, "negative timestamp"});
        return;
    }
    if (from == to) {
        ++out.self_loops_dropped;
        return;
    }
    out.records.push_back({std::move(from), std::move(to), amount, timestamp});
}

void load_csv(LoadResult& out, std::string_view text) {
    auto lines = lines_of(text);
    bool header_seen = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = csv::strip_cr(lines[i]);
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != "from,to,amount,timestamp")
                fail("bad transaction CSV header: expected 'from,to,amount,timestamp'");
            header_seen = true;
            continue;
        }
        const std::size_t row = i + 1;
        auto fields = csv::split(line);
        if (fields.size() != 4) {
            out.errors.push_back({row, "expected 4 fields, got " + std::to_string(fields.size())});
            continue;
        }
        auto amount = csv::parse_double(fields[2]);
        if (!amount) {
            out.errors.push_back({row, "non-numeric amount '" + std::string(fields[2]) + "'"});
            continue;
        }
        auto ts = csv::parse_i64(fields[3]);
        if (!ts) {
            out.errors.push_back({row, "non-numeric timestamp '" + std::string(fields[3]) + "'"});
            continue;
        }
        ingest_row(out, row, std::string(fields[0]), std::string(fields[1]), *amount, *ts);
    }
}

void load_jsonl(LoadResult& out, std::string_view text) {
    auto lines = lines_of(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = csv::strip_cr(lines[i]);
        if (line.empty()) continue;
        const std::size_t row = i + 1;
        nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            out.errors.push_back({row, "malformed JSON object"});
            continue;
        }
        if (!obj.contains("from") || !obj.contains("to") || !obj.contains("amount") ||
            !obj.contains("timestamp")) {
            out.errors.push_back({row, "missing one of from/to/amount/timestamp"});
            continue;
        }
        if (!obj["from"].is_string() || !obj["to"].is_string()) {
            out.errors.push_back({row, "from/to must be strings"});
            continue;
        }
        if (!obj["amount"].is_number()) {
            out.errors.push_back({row, "non-numeric amount"});
            continue;
        }
        if (!obj["timestamp"].is_number_integer()) {
            out.errors.push_back({row, "non-numeric timestamp"});
            continue;
        }
        ingest_row(out, row, obj["from"].get<std::string>(), obj["to"].get<std::string>(),
                   obj["amount"].get<double>(), obj["timestamp"].get<std::int64_t>());
    }
}

}  // namespace

LoadResult load_transactions(const std::filesystem::path& path, TxFormat format) {
    LoadResult out;
    std::string text = read_file(path);
    if (format == TxFormat::csv)
        load_csv(out, text);
    else
        load_jsonl(out, text);
    return out;
}

LabelLoadResult load_labels(const std::filesystem::path& path) {
    LabelLoadResult out;
    std::string text = read_file(path);
    auto lines = lines_of(text);
    bool header_seen = false;
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = csv::strip_cr(lines[i]);
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != "address,is_phishing")
                fail("bad label CSV header: expected 'address,is_phishing'");
            header_seen = true;
            continue;
        }
        const std::size_t row = i + 1;
        auto fields = csv::split(line);
        if (fields.size() != 2) {
            out.errors.push_back({row, "expected 2 fields, got " + std::to_string(fields.size())});
            continue;
        }
        if (fields[0].empty()) {
            out.errors.push_back({row, "empty address"});
            continue;
        }
        if (fields[1] != "0" && fields[1] != "1") {
            out.errors.push_back({row, "is_phishing must be 0 or 1"});
            continue;
        }
        std::string addr(fields[0]);
        if (!seen.insert(addr).second) {
            out.errors.push_back({row, "duplicate address '" + addr + "'"});
            continue;
        }
        out.labels.push_back({std::move(addr), fields[1] == "1"});
    }
    return out;
}

void write_transactions_csv(const std::filesystem::path& path,
                            const std::vector<TransactionRecord>& records) {
    std::ofstream outf(path, std::ios::binary);
    if (!outf) fail("cannot write file: " + path.string());
    outf << "from,to,amount,timestamp\n";
    for (const auto& r : records)
        outf << r.from_addr << ',' << r.to_addr << ',' << csv::format_double(r.amount) << ','
             << r.timestamp << '\n';
}

void write_transactions_jsonl(const std::filesystem::path& path,
                              const std::vector<TransactionRecord>& records) {
    std::ofstream outf(path, std::ios::binary);
    if (!outf) fail("cannot write file: " + path.string());
    for (const auto& r : records) {
        nlohmann::ordered_json obj;
        obj["from"] = r.from_addr;
        obj["to"] = r.to_addr;
        obj["amount"] = r.amount;
        obj["timestamp"] = r.timestamp;
        outf << obj.dump() << '\n';
    }
}

void write_labels_csv(const std::filesystem::path& path, const std::vector<AddressLabel>& labels) {
    std::ofstream outf(path, std::ios::binary);
    if (!outf) fail("cannot write file: " + path.string());
    outf << "address,is_phishing\n";
    for (const auto& l : labels) outf << l.addr << ',' << (l.is_phishing ? '1' : '0') << '\n';
}

namespace {

// Ordering used to pick which non-center transactions survive the per-node
// cap: largest amount first, then earliest, then lexicographic pair.
bool retention_less(const std::vector<TransactionRecord>& records, std::size_t a, std::size_t b) {
    const auto& ra = records[a];
    const auto& rb = records[b];
    if (ra.amount != rb.amount) return ra.amount > rb.amount;
    if (ra.timestamp != rb.timestamp) return ra.timestamp < rb.timestamp;
    if (ra.from_addr != rb.from_addr) return ra.from_addr < rb.from_addr;
    if (ra.to_addr != rb.to_addr) return ra.to_addr < rb.to_addr;
    return a < b;
}

}  // namespace

EgoSubgraph extract_ego_subgraph(const std::vector<TransactionRecord>& records,
                                 const std::string& center, std::size_t max_links) {
    std::unordered_map<std::string, std::vector<std::size_t>> by_addr;
    for (std::size_t i = 0; i < records.size(); ++i) {
        by_addr[records[i].from_addr].push_back(i);
        by_addr[records[i].to_addr].push_back(i);
    }
    auto center_it = by_addr.find(center);
    if (center_it == by_addr.end()) fail("unknown address: " + center);

    std::vector<char> retained(records.size(), 0);
    std::unordered_map<std::string, std::size_t> used;  // non-center cap usage

    // All center-incident transactions are kept; they define the first order
    // and the complete CTR denominator contribution of the center.
    std::unordered_map<std::string, std::int64_t> first_ts;
    for (std::size_t idx : center_it->second) {
        if (retained[idx]) continue;
        retained[idx] = 1;
        const auto& r = records[idx];
        const std::string& other = r.from_addr == center ? r.to_addr : r.from_addr;
        auto [it, inserted] = first_ts.emplace(other, r.timestamp);
        if (!inserted) it->second = std::min(it->second, r.timestamp);
    }

    std::vector<std::string> first_order;
    first_order.reserve(first_ts.size());
    for (const auto& [addr, ts] : first_ts) first_order.push_back(addr);
    std::sort(first_order.begin(), first_order.end(),
              [&](const std::string& a, const std::string& b) {
                  if (first_ts[a] != first_ts[b]) return first_ts[a] < first_ts[b];
                  return a < b;
              });

    std::unordered_set<std::string> in_graph;
    in_graph.insert(center);
    for (const auto& a : first_order) in_graph.insert(a);

    auto budget_left = [&](const std::string& addr) {
        auto it = used.find(addr);
        std::size_t u = it == used.end() ? 0 : it->second;
        return u < max_links;
    };

    // Each first-order node selects its strongest transactions; new endpoints
    // become second-order nodes. Every retained non-center transaction counts
    // against both endpoints' caps.
    std::vector<std::string> second_order;
    for (const auto& v : first_order) {
        std::vector<std::size_t> candidates;
        for (std::size_t idx : by_addr[v]) {
            const auto& r = records[idx];
            if (retained[idx]) continue;
            if (r.from_addr == center || r.to_addr == center) continue;
            candidates.push_back(idx);
        }
        std::sort(candidates.begin(), candidates.end(),
                  [&](std::size_t a, std::size_t b) { return retention_less(records, a, b); });
        for (std::size_t idx : candidates) {
            if (retained[idx]) continue;
            if (!budget_left(v)) break;
            const auto& r = records[idx];
            const std::string& other = r.from_addr == v ? r.to_addr : r.from_addr;
            if (!budget_left(other)) continue;
            retained[idx] = 1;
            ++used[v];
            ++used[other];
            if (in_graph.insert(other).second) second_order.push_back(other);
        }
    }

    // Closure pass: transactions between already-included nodes (e.g. two
    // second-order nodes) compete globally for the remaining cap budget.
    {
        std::vector<std::size_t> candidates;
        for (std::size_t idx = 0; idx < records.size(); ++idx) {
            if (retained[idx]) continue;
            const auto& r = records[idx];
            if (r.from_addr == center || r.to_addr == center) continue;
            if (in_graph.count(r.from_addr) && in_graph.count(r.to_addr)) candidates.push_back(idx);
        }
        std::sort(candidates.begin(), candidates.end(),
                  [&](std::size_t a, std::size_t b) { return retention_less(records, a, b); });
        for (std::size_t idx : candidates) {
            const auto& r = records[idx];
            if (!budget_left(r.from_addr) || !budget_left(r.to_addr)) continue;
            retained[idx] = 1;
            ++used[r.from_addr];
            ++used[r.to_addr];
        }
    }

    // Second-order ordering: first retained transaction, then lexicographic.
    std::unordered_set<std::string> second_set(second_order.begin(), second_order.end());
    std::unordered_map<std::string, std::int64_t> second_ts;
    for (std::size_t idx = 0; idx < records.size(); ++idx) {
        if (!retained[idx]) continue;
        const auto& r = records[idx];
        for (const std::string* a : {&r.from_addr, &r.to_addr}) {
            if (!second_set.count(*a)) continue;
            auto [mit, inserted] = second_ts.emplace(*a, r.timestamp);
            if (!inserted) mit->second = std::min(mit->second, r.timestamp);
        }
    }
    std::sort(second_order.begin(), second_order.end(),
              [&](const std::string& a, const std::string& b) {
                  if (second_ts[a] != second_ts[b]) return second_ts[a] < second_ts[b];
                  return a < b;
              });

    EgoSubgraph sub;
    sub.center = center;
    sub.nodes.push_back(center);
    sub.nodes.insert(sub.nodes.end(), first_order.begin(), first_order.end());
    sub.nodes.insert(sub.nodes.end(), second_order.begin(), second_order.end());

    std::unordered_map<std::string, std::size_t> index_of;
    for (std::size_t i = 0; i < sub.nodes.size(); ++i) index_of[sub.nodes[i]] = i;

    for (std::size_t idx = 0; idx < records.size(); ++idx) {
        if (!retained[idx]) continue;
        const auto& r = records[idx];
        sub.edges.push_back(
            {index_of.at(r.from_addr), index_of.at(r.to_addr), r.amount, r.timestamp});
    }
    std::stable_sort(sub.edges.begin(), sub.edges.end(),
                     [](const EgoSubgraph::Edge& a, const EgoSubgraph::Edge& b) {
                         if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                         if (a.from != b.from) return a.from < b.from;
                         if (a.to != b.to) return a.to < b.to;
                         return a.amount < b.amount;
                     });
    return sub;
}

}  // namespace tegdet
