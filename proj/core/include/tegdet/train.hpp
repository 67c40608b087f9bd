#pragma once

#include <cstdint>
#include <vector>

#include "tegdet/model.hpp"
#include "tegdet/teg.hpp"

namespace tegdet {

enum class Optimizer { sgd, adam };

struct TrainConfig {
    std::size_t epochs = 100;
    double learning_rate = 1e-3;
    std::size_t batch_size = 16;
    double train_ratio = 0.7;
    std::uint64_t seed = 1;
    std::size_t repeats = 5;
    Optimizer optimizer = Optimizer::adam;
};

struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f_score = 0.0;
    double accuracy = 0.0;
};

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

struct SplitResult {
    std::vector<std::size_t> train;  // ascending indices into the dataset
    std::vector<std::size_t> test;
};

// Stratified by label, deterministic under the seed. Throws if a class has
// no members.
SplitResult split(const std::vector<bool>& labels, double train_ratio, std::uint64_t seed);

struct FitResult {
    ModelParams params;
    std::vector<double> loss_curve;  // mean sample loss per epoch
};

// Adam-style (default) or SGD minimization of the mean cross-entropy.
// Deterministic under the seed: parameter init, epoch shuffling, and the
// in-batch accumulation order are all fixed.
FitResult fit(const std::vector<const Teg*>& train_set, const std::vector<bool>& labels,
              const ModelConfig& model_config, const TrainConfig& train_config);

// Threshold 0.5 on the phishing probability; phishing is the positive class.
Metrics evaluate(const ModelParams& params, const ModelConfig& config,
                 const std::vector<const Teg*>& test_set, const std::vector<bool>& labels);

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation
};

MeanStd mean_std(const std::vector<double>& values);

}  // namespace tegdet
