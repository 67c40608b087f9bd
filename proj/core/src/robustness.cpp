#include "tegdet/robustness.hpp"

#include <algorithm>
#include <cmath>

#include "tegdet/autodiff.hpp"
#include "tegdet/error.hpp"
#include "tegdet/rng.hpp"

namespace tegdet {

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Rng address_rng(std::uint64_t seed, const std::string& addr) {
    return Rng::substream(seed, fnv1a(addr));
}

// Midpoint timestamp of slice t under the TEG's own span; inserted edges only
// need a timestamp consistent with their slice.
std::int64_t slice_mid_timestamp(const Teg& teg, std::size_t t) {
    const double span = static_cast<double>(teg.tau_max - teg.tau_min);
    const double mid = static_cast<double>(teg.tau_min) +
                       span * (2.0 * static_cast<double>(t) + 1.0) /
                           (2.0 * static_cast<double>(teg.t_slices));
    return static_cast<std::int64_t>(std::llround(mid));
}

}  // namespace

AttackResult ctr_attack(const Teg& teg, const CtrAttackConfig& config) {
    if (config.target_ctr <= 0.0 || config.target_ctr >= 1.0)
        fail("ctr_attack: target_ctr must lie in (0, 1)");
    if (config.slices_fraction <= 0.0 || config.slices_fraction > 1.0)
        fail("ctr_attack: slices_fraction must lie in (0, 1]");

    AttackResult result;
    result.teg = teg;

    const double current = ctr(teg);
    if (config.target_ctr >= current) return result;  // nothing to disguise

    const std::size_t n = teg.n();
    if (n < 3) {
        fail("ctr_attack: no non-central pairs available; achievable minimum CTR is " +
             std::to_string(current));
    }

    Rng rng = address_rng(config.seed, teg.center);

    const auto n_attacked = static_cast<std::size_t>(std::ceil(
        config.slices_fraction * static_cast<double>(teg.t_slices)));
    std::vector<std::size_t> slots(teg.t_slices);
    for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
    rng.shuffle(slots);
    slots.resize(std::max<std::size_t>(1, n_attacked));

    double max_amount = 0.0;
    for (const auto& s : teg.slices)
        for (const auto& e : s) max_amount = std::max(max_amount, e.amount);

    std::size_t center_tx = teg.center_transaction_count();
    std::size_t total_tx = teg.transaction_count();

    while (static_cast<double>(center_tx) / static_cast<double>(total_tx) >= config.target_ctr) {
        const std::size_t t = slots[rng.below(slots.size())];
        const std::size_t u = 1 + static_cast<std::size_t>(rng.below(n - 1));
        std::size_t v = 1 + static_cast<std::size_t>(rng.below(n - 2));
        if (v >= u) ++v;
        const double amount = rng.uniform(0.0, max_amount);
        const std::int64_t ts = slice_mid_timestamp(teg, t);
        result.teg.slices[t].push_back({u, v, amount, ts});
        result.added.push_back({t, u, v, amount});
        ++total_tx;
    }
    return result;
}

AttackResult grad_attack(const Teg& teg, const ModelParams& params, const ModelConfig& config,
                         const GradAttackConfig& attack, std::size_t dataset_max_nodes) {
    if (attack.modify_rate < 0.0 || attack.modify_rate > 0.5)
        fail("grad_attack: modify_rate must lie in [0, 0.5]");
    if (!teg.label.has_value()) fail("grad_attack: TEG must carry its true label");

    AttackResult result;
    result.teg = teg;

    const auto k = static_cast<std::size_t>(
        std::llround(attack.modify_rate * static_cast<double>(dataset_max_nodes)));
    if (k == 0) return result;

    Tape tape;
    auto graph = build_forward(tape, teg, params, config, teg.label, /*adj_requires_grad=*/true);
    tape.backward(graph.loss);

    struct Candidate {
        double score;
        std::size_t slice, i, j;
    };
    std::vector<Candidate> candidates;
    const std::size_t n = teg.n();
    for (std::size_t t = 0; t < teg.t_slices; ++t) {
        const Tensor& a = graph.adj_slices[t]->value;
        const Tensor& g = graph.adj_slices[t]->grad;
        if (g.empty()) continue;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                if (a(i, j) != 0.0) continue;
                // The edge is inserted symmetrically, so its first-order loss
                // effect is the sum of both triangle gradients.
                candidates.push_back({g(i, j) + g(j, i), t, i, j});
            }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.slice != b.slice) return a.slice < b.slice;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });

    if (candidates.size() < k)
        result.warnings.push_back("grad_attack: only " + std::to_string(candidates.size()) +
                                  " insertable positions for requested " + std::to_string(k));
    const std::size_t take = std::min(k, candidates.size());
    for (std::size_t c = 0; c < take; ++c) {
        const auto& cand = candidates[c];
        const std::int64_t ts = slice_mid_timestamp(teg, cand.slice);
        result.teg.slices[cand.slice].push_back({cand.i, cand.j, 1.0, ts});
        result.added.push_back({cand.slice, cand.i, cand.j, 1.0});
    }
    return result;
}

std::vector<DegradationRow> degradation_curve(const std::vector<const Teg*>& test_set,
                                              const std::vector<bool>& labels,
                                              const std::vector<VariantModel>& models,
                                              AttackKind kind, const std::vector<double>& levels,
                                              std::uint64_t seed, std::size_t dataset_max_nodes) {
    if (test_set.size() != labels.size()) fail("degradation_curve: size mismatch");

    std::vector<DegradationRow> rows;
    for (const auto& model : models) {
        DegradationRow clean;
        clean.model = model.name;
        clean.attack = "clean";
        clean.metrics = evaluate(model.params, model.config, test_set, labels);
        rows.push_back(clean);

        for (std::size_t li = 0; li < levels.size(); ++li) {
            const double level = levels[li];
            const std::uint64_t level_seed = Rng::substream(seed, li).next_u64();

            std::vector<Teg> perturbed;
            perturbed.reserve(test_set.size());
            std::size_t attacked = 0, added_total = 0;
            for (std::size_t i = 0; i < test_set.size(); ++i) {
                if (!labels[i]) {
                    perturbed.push_back(*test_set[i]);
                    continue;
                }
                AttackResult r;
                if (kind == AttackKind::ctr) {
                    CtrAttackConfig cfg;
                    cfg.target_ctr = level;
                    cfg.seed = level_seed;
                    r = ctr_attack(*test_set[i], cfg);
                } else {
                    GradAttackConfig cfg;
                    cfg.modify_rate = level;
                    cfg.seed = level_seed;
                    r = grad_attack(*test_set[i], model.params, model.config, cfg,
                                    dataset_max_nodes);
                }
                added_total += r.added.size();
                ++attacked;
                perturbed.push_back(std::move(r.teg));
            }

            std::vector<const Teg*> view;
            view.reserve(perturbed.size());
            for (const auto& t : perturbed) view.push_back(&t);

            DegradationRow row;
            row.model = model.name;
            row.attack = kind == AttackKind::ctr ? "ctr" : "grad";
            row.level = level;
            row.metrics = evaluate(model.params, model.config, view, labels);
            row.mean_added_edges =
                attacked == 0 ? 0.0
                              : static_cast<double>(added_total) / static_cast<double>(attacked);
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace tegdet
