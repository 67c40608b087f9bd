#pragma once

#include <string>
#include <vector>

#include "tegdet/model.hpp"
#include "tegdet/teg.hpp"
#include "tegdet/train.hpp"

namespace tegdet {

struct FdConfig {
    double ctr_threshold = 0.6;
};

enum class VerdictSource { fd, density, repeat, model, pipeline };

const char* verdict_source_name(VerdictSource s);

// Score semantics by source: fd = CTR, density = nonempty-slice ratio,
// repeat = repetition ratio, model/pipeline = phishing probability (pipeline
// verdicts filtered by FD carry the CTR instead).
struct Verdict {
    std::string addr;
    bool predicted_phishing = false;
    double score = 0.0;
    VerdictSource source = VerdictSource::model;
};

// Phishing iff CTR strictly exceeds the threshold.
Verdict fd_detect(const Teg& teg, const FdConfig& config);

// Phishing iff the ratio of nonempty slices strictly exceeds 0.5.
Verdict density_detect(const Teg& teg);

// The first ceil(split_ratio * T) slices are training slices. A test
// transaction is repeated iff its directed address pair appears in any
// training slice; phishing iff the repetition ratio strictly exceeds 0.1.
Verdict repeat_detect(const Teg& teg, double split_ratio);

Verdict model_detect(const Teg& teg, const ModelParams& params, const ModelConfig& config);

struct PipelineReport {
    std::vector<Verdict> verdicts;
    std::size_t model_invocations = 0;
    double fd_seconds = 0.0;
    double model_seconds = 0.0;
};

// FD screens first: addresses at or below the CTR threshold are verdicted
// normal and never reach the model; the rest are classified by TEGDetector.
PipelineReport pipeline_detect(const std::vector<const Teg*>& tegs, const FdConfig& fd_config,
                               const ModelParams& params, const ModelConfig& model_config);

// Confusion-matrix metrics for a verdict list against ground-truth labels.
Metrics verdict_metrics(const std::vector<Verdict>& verdicts, const std::vector<bool>& labels);

}  // namespace tegdet
