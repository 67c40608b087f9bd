#include "tegdet/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "tegdet/error.hpp"
#include "tegdet/rng.hpp"

namespace tegdet {

namespace {

constexpr std::int64_t kSliceWidth = 1000;  // seconds per nominal slice

struct Archetype {
    double second_order_frac;
    double center_repeat_frac;
    bool early_burst;       // concentrate center activity in the earliest active slices
    bool repeated_pairs;    // emit ~3 transactions per non-central pair
    double center_amount_lo, center_amount_hi;
    double other_amount_lo, other_amount_hi;
    double inbound_prob;    // probability a center transaction flows into the center
};

const Archetype kPhishing{0.10, 0.15, true, false, 0.5, 5.0, 0.01, 0.3, 0.8};
const Archetype kNormal{0.35, 0.30, false, true, 0.05, 0.5, 0.1, 1.0, 0.5};

void validate(const SynthConfig& c) {
    auto ordered = [](auto r) { return r.first <= r.second; };
    if (!ordered(c.phishing_ctr_range) || !ordered(c.normal_ctr_range) ||
        !ordered(c.nodes_range) || !ordered(c.slices_active_range))
        fail("synthgen: range bounds must satisfy low <= high");
    for (auto r : {c.phishing_ctr_range, c.normal_ctr_range})
        if (r.first <= 0.0 || r.second > 1.0) fail("synthgen: CTR ranges must lie in (0, 1]");
    if (c.n_phishing + c.n_normal < 1) fail("synthgen: need at least one address");
    if (c.nodes_range.first < 2) fail("synthgen: nodes_range minimum must be >= 2");
    if (c.t_slices < 1) fail("synthgen: t_slices must be >= 1");
    if (c.slices_active_range.first < 1 || c.slices_active_range.second > c.t_slices)
        fail("synthgen: slices_active_range must lie in [1, t_slices]");
    if (c.amount_scale <= 0.0) fail("synthgen: amount_scale must be positive");
}

// Integer window of non-central transaction counts that realizes
// center_tx / (center_tx + k) within [lo, hi].
std::pair<std::int64_t, std::int64_t> ctr_window(std::int64_t m, double lo, double hi) {
    auto k_min = static_cast<std::int64_t>(
        std::ceil(static_cast<double>(m) * (1.0 - hi) / hi - 1e-9));
    auto k_max = static_cast<std::int64_t>(
        std::floor(static_cast<double>(m) * (1.0 - lo) / lo + 1e-9));
    k_min = std::max<std::int64_t>(k_min, 0);
    return {k_min, k_max};
}

bool ctr_in_range(std::int64_t m, std::int64_t k, double lo, double hi) {
    const double r = static_cast<double>(m) / static_cast<double>(m + k);
    return r >= lo && r <= hi;
}

struct PendingTx {
    std::string from, to;
    double amount;
    std::size_t slice;       // nominal slice index
    std::int64_t timestamp;  // filled once slices are final
};

void generate_address(const SynthConfig& cfg, std::size_t index, bool phishing,
                      std::vector<TransactionRecord>& records,
                      std::vector<AddressLabel>& labels) {
    const Archetype& arch = phishing ? kPhishing : kNormal;
    const auto [ctr_lo, ctr_hi] = phishing ? cfg.phishing_ctr_range : cfg.normal_ctr_range;
    Rng rng = Rng::substream(cfg.seed, index);

    char buf[32];
    std::snprintf(buf, sizeof(buf), "%c%04zu", phishing ? 'p' : 'n', index);
    const std::string center(buf);
    labels.push_back({center, phishing});

    const auto n = static_cast<std::size_t>(
        rng.range(static_cast<std::int64_t>(cfg.nodes_range.first),
                  static_cast<std::int64_t>(cfg.nodes_range.second)));
    const std::int64_t q = static_cast<std::int64_t>(n) - 1;

    auto n2 = static_cast<std::int64_t>(std::llround(arch.second_order_frac * static_cast<double>(q)));
    std::int64_t n1 = q - n2;
    if (n1 < 1) {
        n1 = 1;
        n2 = q - 1;
    }

    auto center_tx_for = [&](std::int64_t first_order) {
        return first_order +
               static_cast<std::int64_t>(std::llround(arch.center_repeat_frac *
                                                      static_cast<double>(first_order)));
    };
    std::int64_t m = center_tx_for(n1);
    auto [k_min, k_max] = ctr_window(m, ctr_lo, ctr_hi);
    if (n2 > k_max) {
        // Second-order anchors are non-central transactions; shrink their
        // count to what the CTR window can pay for.
        n2 = std::max<std::int64_t>(k_max, 0);
        n1 = q - n2;
        m = center_tx_for(n1);
        std::tie(k_min, k_max) = ctr_window(m, ctr_lo, ctr_hi);
    }
    if (k_min > k_max) {
        // The drawn center count admits no integer split; look for a nearby
        // feasible one before giving up.
        bool found = false;
        for (std::int64_t delta = 1; delta <= 4 * static_cast<std::int64_t>(n) && !found; ++delta) {
            for (std::int64_t cand : {m + delta, m - delta}) {
                if (cand < n1) continue;
                auto w = ctr_window(cand, ctr_lo, ctr_hi);
                if (w.first <= w.second && w.second >= n2) {
                    m = cand;
                    k_min = w.first;
                    k_max = w.second;
                    found = true;
                    break;
                }
            }
        }
        if (!found)
            fail("synthgen: infeasible CTR range [" + std::to_string(ctr_lo) + ", " +
                 std::to_string(ctr_hi) + "] for address " + center);
    }

    const double ctr_target = rng.uniform(ctr_lo, ctr_hi);
    auto k = static_cast<std::int64_t>(
        std::llround(static_cast<double>(m) * (1.0 - ctr_target) / ctr_target));
    k = std::clamp(k, std::max(k_min, n2), k_max);
    if (std::max(k_min, n2) > k_max)
        fail("synthgen: CTR range cannot fund required non-central edges for " + center);
    while (k > std::max(k_min, n2) && !ctr_in_range(m, k, ctr_lo, ctr_hi)) --k;
    while (k < k_max && !ctr_in_range(m, k, ctr_lo, ctr_hi)) ++k;
    if (!ctr_in_range(m, k, ctr_lo, ctr_hi))
        fail("synthgen: could not realize CTR in range for " + center);

    const std::size_t total_tx = static_cast<std::size_t>(m + k);
    auto active = static_cast<std::size_t>(
        rng.range(static_cast<std::int64_t>(cfg.slices_active_range.first),
                  static_cast<std::int64_t>(cfg.slices_active_range.second)));
    if (total_tx < active)
        fail("synthgen: fewer transactions (" + std::to_string(total_tx) +
             ") than required active slices (" + std::to_string(active) + ") for " + center);

    const std::size_t T = cfg.t_slices;
    std::vector<std::size_t> active_slices;
    if (active >= 2 && T >= 2) {
        std::vector<std::size_t> middle;
        for (std::size_t s = 1; s + 1 < T; ++s) middle.push_back(s);
        rng.shuffle(middle);
        active_slices.push_back(0);
        for (std::size_t i = 0; i + 2 < active && i < middle.size(); ++i)
            active_slices.push_back(middle[i]);
        active_slices.push_back(T - 1);
        std::sort(active_slices.begin(), active_slices.end());
    } else {
        active_slices.push_back(0);
    }

    auto node_name = [&](char klass, std::int64_t j) {
        char nb[48];
        std::snprintf(nb, sizeof(nb), "%s_%c%03lld", center.c_str(), klass,
                      static_cast<long long>(j));
        return std::string(nb);
    };
    std::vector<std::string> first_order;
    for (std::int64_t j = 0; j < n1; ++j) first_order.push_back(node_name('f', j));
    std::vector<std::string> second_order;
    for (std::int64_t j = 0; j < n2; ++j) second_order.push_back(node_name('s', j));
    std::vector<std::string> non_central = first_order;
    non_central.insert(non_central.end(), second_order.begin(), second_order.end());

    auto pick_slice_uniform = [&] {
        return active_slices[rng.below(active_slices.size())];
    };
    auto pick_slice_center = [&] {
        if (arch.early_burst && active_slices.size() > 1 && rng.uniform() < 0.7) {
            const std::size_t burst = std::max<std::size_t>(1, (active_slices.size() + 2) / 3);
            return active_slices[rng.below(burst)];
        }
        return pick_slice_uniform();
    };

    std::vector<PendingTx> txs;
    txs.reserve(total_tx);

    auto center_amount = [&] { return cfg.amount_scale * rng.uniform(arch.center_amount_lo, arch.center_amount_hi); };
    auto other_amount = [&] { return cfg.amount_scale * rng.uniform(arch.other_amount_lo, arch.other_amount_hi); };
    auto add_center_tx = [&](const std::string& counterparty) {
        bool inbound = rng.uniform() < arch.inbound_prob;
        txs.push_back({inbound ? counterparty : center, inbound ? center : counterparty,
                       center_amount(), pick_slice_center(), 0});
    };

    for (const auto& f : first_order) add_center_tx(f);
    for (std::int64_t j = 0; j < m - n1; ++j)
        add_center_tx(first_order[rng.below(first_order.size())]);

    // Anchors tie each second-order node to a first-order one.
    for (const auto& s : second_order) {
        const std::string& anchor = first_order[rng.below(first_order.size())];
        bool inbound = rng.uniform() < 0.5;
        txs.push_back({inbound ? s : anchor, inbound ? anchor : s, other_amount(),
                       pick_slice_uniform(), 0});
    }

    std::int64_t remaining = k - n2;
    if (remaining > 0) {
        auto random_pair = [&] {
            std::size_t a = rng.below(non_central.size());
            std::size_t b = rng.below(non_central.size() - 1);
            if (b >= a) ++b;
            return std::pair<std::string, std::string>(non_central[a], non_central[b]);
        };
        if (arch.repeated_pairs) {
            const auto pool_size = static_cast<std::size_t>(std::max<std::int64_t>(
                1, (remaining + 2) / 3));
            std::vector<std::pair<std::string, std::string>> pool;
            for (std::size_t i = 0; i < pool_size; ++i) pool.push_back(random_pair());
            for (std::int64_t j = 0; j < remaining; ++j) {
                const auto& pr = pool[static_cast<std::size_t>(j) % pool.size()];
                txs.push_back({pr.first, pr.second, other_amount(), pick_slice_uniform(), 0});
            }
        } else {
            for (std::int64_t j = 0; j < remaining; ++j) {
                auto pr = random_pair();
                txs.push_back({pr.first, pr.second, other_amount(), pick_slice_uniform(), 0});
            }
        }
    }

    // Every chosen slice must be hit at least once: move transactions out of
    // crowded slices into empty ones.
    std::vector<std::size_t> count_per_slice(T, 0);
    for (const auto& t : txs) ++count_per_slice[t.slice];
    for (std::size_t s : active_slices) {
        while (count_per_slice[s] == 0) {
            std::size_t victim = rng.below(txs.size());
            if (count_per_slice[txs[victim].slice] < 2) continue;
            --count_per_slice[txs[victim].slice];
            txs[victim].slice = s;
            ++count_per_slice[s];
        }
    }

    const std::int64_t t0 =
        static_cast<std::int64_t>(index + 1) * static_cast<std::int64_t>(T) * kSliceWidth * 10;
    if (active_slices.size() == 1) {
        // Degenerate single-period address: a zero-duration span keeps every
        // transaction in one slice after per-TEG relative slicing.
        for (auto& t : txs) t.timestamp = t0;
    } else {
        for (auto& t : txs)
            t.timestamp = t0 + static_cast<std::int64_t>(t.slice) * kSliceWidth +
                          static_cast<std::int64_t>(rng.below(kSliceWidth));
        bool pinned_lo = false, pinned_hi = false;
        for (auto& t : txs) {
            if (!pinned_lo && t.slice == 0) {
                t.timestamp = t0;
                pinned_lo = true;
            } else if (!pinned_hi && t.slice == T - 1) {
                t.timestamp = t0 + static_cast<std::int64_t>(T) * kSliceWidth - 1;
                pinned_hi = true;
            }
        }
    }

    std::stable_sort(txs.begin(), txs.end(),
                     [](const PendingTx& a, const PendingTx& b) { return a.timestamp < b.timestamp; });
    for (const auto& t : txs) records.push_back({t.from, t.to, t.amount, t.timestamp});
}

}  // namespace

SynthDataset generate(const SynthConfig& config) {
    validate(config);
    SynthDataset out;
    const std::size_t total = config.n_phishing + config.n_normal;
    for (std::size_t i = 0; i < total; ++i)
        generate_address(config, i, i < config.n_phishing, out.records, out.labels);
    return out;
}

}  // namespace tegdet
