#include "tegdet/detectors.hpp"

#include <chrono>
#include <cmath>
#include <set>

#include "tegdet/error.hpp"

namespace tegdet {

const char* verdict_source_name(VerdictSource s) {
    switch (s) {
        case VerdictSource::fd: return "fd";
        case VerdictSource::density: return "density";
        case VerdictSource::repeat: return "repeat";
        case VerdictSource::model: return "model";
        case VerdictSource::pipeline: return "pipeline";
    }
    return "?";
}

Verdict fd_detect(const Teg& teg, const FdConfig& config) {
    if (config.ctr_threshold < 0.0 || config.ctr_threshold > 1.0)
        fail("fd_detect: threshold must lie in [0, 1]");
    const double score = ctr(teg);
    return {teg.center, score > config.ctr_threshold, score, VerdictSource::fd};
}

Verdict density_detect(const Teg& teg) {
    if (teg.t_slices < 1) fail("density_detect: TEG has no slices");
    const double score = static_cast<double>(teg.nonempty_slice_count()) /
                         static_cast<double>(teg.t_slices);
    return {teg.center, score > 0.5, score, VerdictSource::density};
}

Verdict repeat_detect(const Teg& teg, double split_ratio) {
    if (teg.t_slices < 2) fail("repeat_detect: needs at least 2 slices");
    const auto train_slices = static_cast<std::size_t>(
        std::ceil(split_ratio * static_cast<double>(teg.t_slices)));
    if (train_slices < 1) fail("repeat_detect: no training slices at ratio " +
                               std::to_string(split_ratio));
    if (train_slices >= teg.t_slices)
        fail("repeat_detect: no test slices at ratio " + std::to_string(split_ratio));

    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::size_t train_tx = 0;
    for (std::size_t t = 0; t < train_slices; ++t)
        for (const auto& e : teg.slices[t]) {
            seen.insert({e.from, e.to});
            ++train_tx;
        }
    if (train_tx == 0) fail("repeat_detect: no transactions in training slices");

    std::size_t test_tx = 0, repeated = 0;
    for (std::size_t t = train_slices; t < teg.t_slices; ++t)
        for (const auto& e : teg.slices[t]) {
            ++test_tx;
            if (seen.count({e.from, e.to})) ++repeated;
        }
    if (test_tx == 0) fail("repeat_detect: no test transactions");

    const double score = static_cast<double>(repeated) / static_cast<double>(test_tx);
    return {teg.center, score > 0.1, score, VerdictSource::repeat};
}

Verdict model_detect(const Teg& teg, const ModelParams& params, const ModelConfig& config) {
    const auto pred = forward(teg, params, config);
    const double score = pred.probabilities(0, 1);
    return {teg.center, score > 0.5, score, VerdictSource::model};
}

PipelineReport pipeline_detect(const std::vector<const Teg*>& tegs, const FdConfig& fd_config,
                               const ModelParams& params, const ModelConfig& model_config) {
    using clock = std::chrono::steady_clock;
    PipelineReport report;
    report.verdicts.resize(tegs.size());

    std::vector<std::size_t> suspicious;
    const auto fd_start = clock::now();
    for (std::size_t i = 0; i < tegs.size(); ++i) {
        Verdict v = fd_detect(*tegs[i], fd_config);
        if (v.predicted_phishing)
            suspicious.push_back(i);
        else
            report.verdicts[i] = v;  // screened out as normal
    }
    report.fd_seconds = std::chrono::duration<double>(clock::now() - fd_start).count();

    const auto model_start = clock::now();
    for (std::size_t i : suspicious) {
        report.verdicts[i] = model_detect(*tegs[i], params, model_config);
        ++report.model_invocations;
    }
    report.model_seconds = std::chrono::duration<double>(clock::now() - model_start).count();
    return report;
}

Metrics verdict_metrics(const std::vector<Verdict>& verdicts, const std::vector<bool>& labels) {
    if (verdicts.size() != labels.size()) fail("verdict_metrics: size mismatch");
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        const bool pred = verdicts[i].predicted_phishing;
        if (pred && labels[i]) ++tp;
        else if (pred && !labels[i]) ++fp;
        else if (!pred && labels[i]) ++fn;
        else ++tn;
    }
    return metrics_from_counts(tp, fp, fn, tn);
}

}  // namespace tegdet
