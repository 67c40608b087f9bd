#include "tegdet/teg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "csv.hpp"
#include "tegdet/error.hpp"

namespace tegdet {

std::size_t Teg::transaction_count() const {
    std::size_t n = 0;
    for (const auto& s : slices) n += s.size();
    return n;
}

std::size_t Teg::center_transaction_count() const {
    std::size_t n = 0;
    for (const auto& s : slices)
        for (const auto& e : s)
            if (e.from == 0 || e.to == 0) ++n;
    return n;
}

std::size_t Teg::nonempty_slice_count() const {
    std::size_t n = 0;
    for (const auto& s : slices)
        if (!s.empty()) ++n;
    return n;
}

Tensor Teg::slice_adjacency(std::size_t t) const {
    const std::size_t N = nodes.size();
    Tensor a(N, N);
    if (weighting == Weighting::binary) {
        for (const auto& e : slices[t]) a(e.from, e.to) = 1.0;
    } else {
        for (const auto& e : slices[t]) a(e.from, e.to) += e.amount;
        for (double& v : a.raw()) v = std::log1p(v);
        for (std::size_t i = 0; i < N; ++i) {
            double* r = a.row(i);
            double mx = 0.0;
            for (std::size_t j = 0; j < N; ++j) mx = std::max(mx, r[j]);
            if (mx > 0.0)
                for (std::size_t j = 0; j < N; ++j) r[j] /= mx;
        }
    }
    // Directed weights are symmetrized before normalization; direction stays
    // available in the raw slice lists.
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i + 1; j < N; ++j) {
            double m = std::max(a(i, j), a(j, i));
            a(i, j) = m;
            a(j, i) = m;
        }
    return a;
}

std::vector<Tensor> Teg::adjacency() const {
    std::vector<Tensor> out;
    out.reserve(t_slices);
    for (std::size_t t = 0; t < t_slices; ++t) out.push_back(slice_adjacency(t));
    return out;
}

Teg build_teg(const EgoSubgraph& sub, const std::vector<AddressLabel>& labels,
              const SliceSpec& spec, Weighting weighting, std::vector<std::string>* warnings) {
    if (spec.t_slices < 1) fail("build_teg: t_slices must be >= 1");
    const std::size_t T = spec.t_slices;

    Teg teg;
    teg.center = sub.center;
    teg.nodes = sub.nodes;
    teg.t_slices = T;
    teg.weighting = weighting;
    teg.slices.assign(T, {});

    std::unordered_map<std::string, bool> label_map;
    for (const auto& l : labels) label_map[l.addr] = l.is_phishing;

    teg.attrs = Tensor(sub.nodes.size(), 2);
    for (std::size_t i = 0; i < sub.nodes.size(); ++i) {
        auto it = label_map.find(sub.nodes[i]);
        if (it != label_map.end() && it->second)
            teg.attrs(i, 1) = 1.0;
        else
            teg.attrs(i, 0) = 1.0;
    }
    auto center_label = label_map.find(sub.center);
    if (center_label != label_map.end()) teg.label = center_label->second;

    if (sub.edges.empty()) {
        if (T > 1 && spec.boundary_mode == BoundaryMode::equal_time)
            fail("build_teg: cannot partition an edgeless subgraph into " + std::to_string(T) +
                 " time slices");
        return teg;
    }

    std::int64_t lo = sub.edges[0].timestamp, hi = sub.edges[0].timestamp;
    for (const auto& e : sub.edges) {
        lo = std::min(lo, e.timestamp);
        hi = std::max(hi, e.timestamp);
    }
    teg.tau_min = lo;
    teg.tau_max = hi;

    if (spec.boundary_mode == BoundaryMode::equal_count) {
        std::vector<std::size_t> order(sub.edges.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return sub.edges[a].timestamp < sub.edges[b].timestamp;
        });
        const std::size_t m = order.size();
        for (std::size_t t = 0; t < T; ++t) {
            const std::size_t begin = t * m / T, end = (t + 1) * m / T;
            for (std::size_t i = begin; i < end; ++i) teg.slices[t].push_back(sub.edges[order[i]]);
        }
        return teg;
    }

    if (lo == hi && T > 1) {
        if (warnings)
            warnings->push_back("zero-duration span for " + sub.center +
                                ": all transactions placed in slice 0");
        for (const auto& e : sub.edges) teg.slices[0].push_back(e);
        return teg;
    }

    // boundary_t = lo + (hi - lo) * t / T; slice t owns [b_t, b_{t+1}), the
    // final boundary inclusive.
    const double span = static_cast<double>(hi - lo);
    std::vector<double> bounds(T + 1);
    for (std::size_t t = 0; t <= T; ++t)
        bounds[t] = static_cast<double>(lo) + span * static_cast<double>(t) / static_cast<double>(T);
    for (const auto& e : sub.edges) {
        const double ts = static_cast<double>(e.timestamp);
        std::size_t t = T - 1;
        for (std::size_t i = 1; i <= T; ++i) {
            if (ts < bounds[i]) {
                t = i - 1;
                break;
            }
        }
        teg.slices[t].push_back(e);
    }
    return teg;
}

namespace {

double ctr_of_edges(const std::vector<EgoSubgraph::Edge>& edges, const char* what) {
    if (edges.empty()) fail(std::string("ctr: no transactions in ") + what);
    std::size_t center_incident = 0;
    for (const auto& e : edges)
        if (e.from == 0 || e.to == 0) ++center_incident;
    return static_cast<double>(center_incident) / static_cast<double>(edges.size());
}

}  // namespace

double ctr(const Teg& teg) {
    std::vector<EgoSubgraph::Edge> all;
    all.reserve(teg.transaction_count());
    for (const auto& s : teg.slices) all.insert(all.end(), s.begin(), s.end());
    return ctr_of_edges(all, "TEG");
}

double ctr(const EgoSubgraph& sub) { return ctr_of_edges(sub.edges, "subgraph"); }

Tensor normalize_adj(const Tensor& a) {
    if (a.rows() != a.cols()) fail("normalize_adj: expected square matrix, got " + a.shape_str());
    const std::size_t n = a.rows();
    Tensor a_tilde = a;
    for (std::size_t i = 0; i < n; ++i) a_tilde(i, i) += 1.0;
    std::vector<double> d_inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j) d += a_tilde(i, j);
        d_inv_sqrt[i] = 1.0 / std::sqrt(d);
    }
    Tensor out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out(i, j) = d_inv_sqrt[i] * a_tilde(i, j) * d_inv_sqrt[j];
    return out;
}

void save_teg(const Teg& teg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json meta;
    meta["center"] = teg.center;
    meta["n"] = teg.nodes.size();
    meta["t_slices"] = teg.t_slices;
    meta["weighting"] = teg.weighting == Weighting::binary ? "binary" : "amount";
    meta["tau_min"] = teg.tau_min;
    meta["tau_max"] = teg.tau_max;
    if (teg.label.has_value())
        meta["label"] = *teg.label;
    else
        meta["label"] = nullptr;
    meta["nodes"] = teg.nodes;
    {
        std::ofstream out(dir / "meta.json", std::ios::binary);
        if (!out) fail("cannot write " + (dir / "meta.json").string());
        out << meta.dump(2) << '\n';
    }
    for (std::size_t t = 0; t < teg.t_slices; ++t) {
        std::ofstream out(dir / ("slice_" + std::to_string(t) + ".csv"), std::ios::binary);
        if (!out) fail("cannot write slice file in " + dir.string());
        out << "from,to,amount,timestamp\n";
        for (const auto& e : teg.slices[t])
            out << e.from << ',' << e.to << ',' << csv::format_double(e.amount) << ','
                << e.timestamp << '\n';
    }
    {
        std::ofstream out(dir / "attrs.csv", std::ios::binary);
        if (!out) fail("cannot write " + (dir / "attrs.csv").string());
        out << "x0,x1\n";
        for (std::size_t i = 0; i < teg.attrs.rows(); ++i)
            out << csv::format_double(teg.attrs(i, 0)) << ',' << csv::format_double(teg.attrs(i, 1))
                << '\n';
    }
}

Teg load_teg(const std::filesystem::path& dir) {
    std::ifstream metaf(dir / "meta.json", std::ios::binary);
    if (!metaf) fail("cannot read " + (dir / "meta.json").string());
    nlohmann::json meta = nlohmann::json::parse(metaf);

    Teg teg;
    teg.center = meta.at("center").get<std::string>();
    teg.t_slices = meta.at("t_slices").get<std::size_t>();
    teg.weighting =
        meta.at("weighting").get<std::string>() == "binary" ? Weighting::binary : Weighting::amount;
    teg.tau_min = meta.at("tau_min").get<std::int64_t>();
    teg.tau_max = meta.at("tau_max").get<std::int64_t>();
    if (!meta.at("label").is_null()) teg.label = meta.at("label").get<bool>();
    teg.nodes = meta.at("nodes").get<std::vector<std::string>>();
    if (teg.nodes.empty() || teg.nodes[0] != teg.center)
        fail("corrupt TEG: center must be nodes[0] in " + dir.string());
    if (meta.at("n").get<std::size_t>() != teg.nodes.size())
        fail("corrupt TEG: node count mismatch in " + dir.string());

    teg.slices.assign(teg.t_slices, {});
    for (std::size_t t = 0; t < teg.t_slices; ++t) {
        auto path = dir / ("slice_" + std::to_string(t) + ".csv");
        std::ifstream in(path, std::ios::binary);
        if (!in) fail("cannot read " + path.string());
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            std::string_view sv = csv::strip_cr(line);
            if (sv.empty()) continue;
            auto fields = csv::split(sv);
            if (fields.size() != 4) fail("corrupt slice row in " + path.string());
            auto from = csv::parse_i64(fields[0]);
            auto to = csv::parse_i64(fields[1]);
            auto amount = csv::parse_double(fields[2]);
            auto ts = csv::parse_i64(fields[3]);
            if (!from || !to || !amount || !ts) fail("corrupt slice row in " + path.string());
            if (*from < 0 || *to < 0 || static_cast<std::size_t>(*from) >= teg.nodes.size() ||
                static_cast<std::size_t>(*to) >= teg.nodes.size())
                fail("slice edge references unknown node in " + path.string());
            teg.slices[t].push_back({static_cast<std::size_t>(*from),
                                     static_cast<std::size_t>(*to), *amount, *ts});
        }
    }

    auto attrs_path = dir / "attrs.csv";
    std::ifstream in(attrs_path, std::ios::binary);
    if (!in) fail("cannot read " + attrs_path.string());
    std::string line;
    std::getline(in, line);
    std::vector<std::pair<double, double>> rows;
    while (std::getline(in, line)) {
        std::string_view sv = csv::strip_cr(line);
        if (sv.empty()) continue;
        auto fields = csv::split(sv);
        if (fields.size() != 2) fail("corrupt attrs row in " + attrs_path.string());
        auto x0 = csv::parse_double(fields[0]);
        auto x1 = csv::parse_double(fields[1]);
        if (!x0 || !x1) fail("corrupt attrs row in " + attrs_path.string());
        rows.emplace_back(*x0, *x1);
    }
    if (rows.size() != teg.nodes.size()) fail("attrs row count mismatch in " + dir.string());
    teg.attrs = Tensor(rows.size(), 2);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        teg.attrs(i, 0) = rows[i].first;
        teg.attrs(i, 1) = rows[i].second;
    }
    return teg;
}

}  // namespace tegdet
