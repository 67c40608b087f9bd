#include "tegdet/train.hpp"

#include <algorithm>
#include <cmath>

#include "tegdet/error.hpp"
#include "tegdet/rng.hpp"

namespace tegdet {

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
    Metrics m;
    if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (m.precision + m.recall > 0.0)
        m.f_score = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    const std::size_t total = tp + fp + fn + tn;
    if (total > 0) m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(total);
    return m;
}

SplitResult split(const std::vector<bool>& labels, double train_ratio, std::uint64_t seed) {
    if (labels.empty()) fail("split: empty dataset");
    if (train_ratio <= 0.0 || train_ratio >= 1.0) fail("split: train_ratio must lie in (0, 1)");

    std::vector<std::size_t> phishing, normal;
    for (std::size_t i = 0; i < labels.size(); ++i)
        (labels[i] ? phishing : normal).push_back(i);
    if (phishing.empty()) fail("split: no phishing samples");
    if (normal.empty()) fail("split: no normal samples");

    SplitResult out;
    std::size_t klass = 0;
    for (auto* group : {&normal, &phishing}) {
        Rng rng = Rng::substream(seed, klass++);
        rng.shuffle(*group);
        const auto n_train = static_cast<std::size_t>(
            std::llround(train_ratio * static_cast<double>(group->size())));
        for (std::size_t i = 0; i < group->size(); ++i)
            (i < n_train ? out.train : out.test).push_back((*group)[i]);
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

namespace {

class AdamState {
public:
    AdamState(const std::vector<Tensor>& shapes) {
        for (const auto& t : shapes) {
            m_.emplace_back(t.rows(), t.cols());
            v_.emplace_back(t.rows(), t.cols());
        }
    }

    void step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads, double lr) {
        ++t_;
        const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            double* p = params[i]->data();
            const double* g = grads[i].data();
            double* m = m_[i].data();
            double* v = v_[i].data();
            for (std::size_t j = 0; j < params[i]->size(); ++j) {
                m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * g[j];
                v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * g[j] * g[j];
                p[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + kEps);
            }
        }
    }

private:
    static constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    std::vector<Tensor> m_, v_;
    std::size_t t_ = 0;
};

}  // namespace

FitResult fit(const std::vector<const Teg*>& train_set, const std::vector<bool>& labels,
              const ModelConfig& model_config, const TrainConfig& train_config) {
    if (train_set.empty()) fail("fit: empty training set");
    if (train_set.size() != labels.size()) fail("fit: label count mismatch");
    if (train_config.epochs < 1) fail("fit: epochs must be >= 1");
    if (train_config.batch_size < 1) fail("fit: batch_size must be >= 1");

    FitResult result;
    result.params = init_params(model_config, train_config.seed);

    std::vector<Tensor*> flat;
    result.params.for_each([&flat](const std::string&, Tensor& t) { flat.push_back(&t); });
    std::vector<Tensor> shapes;
    for (auto* t : flat) shapes.emplace_back(t->rows(), t->cols());
    AdamState adam(shapes);

    Rng shuffle_rng = Rng::substream(train_config.seed, 0x5f0f1eULL);
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<Tensor> grads;
    for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += train_config.batch_size) {
            const std::size_t end = std::min(order.size(), begin + train_config.batch_size);
            std::vector<const Teg*> batch;
            std::vector<bool> batch_labels;
            for (std::size_t i = begin; i < end; ++i) {
                batch.push_back(train_set[order[i]]);
                batch_labels.push_back(labels[order[i]]);
            }
            const double loss =
                batch_loss_grad(batch, batch_labels, result.params, model_config, grads);
            if (!std::isfinite(loss))
                fail("fit: loss diverged at epoch " + std::to_string(epoch));
            epoch_loss += loss * static_cast<double>(batch.size());

            if (train_config.optimizer == Optimizer::adam) {
                adam.step(flat, grads, train_config.learning_rate);
            } else {
                for (std::size_t i = 0; i < flat.size(); ++i) {
                    double* p = flat[i]->data();
                    const double* g = grads[i].data();
                    for (std::size_t j = 0; j < flat[i]->size(); ++j)
                        p[j] -= train_config.learning_rate * g[j];
                }
            }
        }
        result.loss_curve.push_back(epoch_loss / static_cast<double>(train_set.size()));
    }
    return result;
}

Metrics evaluate(const ModelParams& params, const ModelConfig& config,
                 const std::vector<const Teg*>& test_set, const std::vector<bool>& labels) {
    if (test_set.empty()) fail("evaluate: empty test set");
    if (test_set.size() != labels.size()) fail("evaluate: label count mismatch");
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < test_set.size(); ++i) {
        const auto pred = forward(*test_set[i], params, config);
        const bool phishing = pred.probabilities(0, 1) > 0.5;
        if (phishing && labels[i]) ++tp;
        else if (phishing && !labels[i]) ++fp;
        else if (!phishing && labels[i]) ++fn;
        else ++tn;
    }
    return metrics_from_counts(tp, fp, fn, tn);
}

MeanStd mean_std(const std::vector<double>& values) {
    MeanStd out;
    if (values.empty()) return out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return out;
}

}  // namespace tegdet
