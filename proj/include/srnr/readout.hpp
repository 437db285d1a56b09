#pragma once

// Spike-count features and the trainable readouts: a softmax layer trained
// online by the delta rule, and a one-vs-rest linear SVM baseline.

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "srnr/encoding.hpp"
#include "srnr/matrix.hpp"

namespace srnr {

/// Per-row, per-bin spike counts flattened row-major: counts[r * n_bins + b].
struct FeatureVector {
    std::vector<std::uint32_t> counts;
    std::size_t n_bins = 1;
    int label = 0;
};

/// Throws ConfigError unless n_bins >= 1 divides the raster length.
FeatureVector bin_spike_counts(const SpikeRaster& raster, std::size_t n_bins, int label = 0);

/// Dense design matrix used by the trainers; one row per sample.
struct Dataset {
    Matrix<double> x;
    std::vector<int> y;
    std::size_t n_classes = 0;

    std::size_t size() const noexcept { return y.size(); }
    std::size_t dim() const noexcept { return x.cols(); }
};

/// Counts are multiplied by `scale` (1 for raw counts, 1/steps_per_bin for rates).
Dataset make_dataset(std::span<const FeatureVector> features, std::size_t n_classes,
                     double scale = 1.0);

/// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> z);

/// Cross-entropy -log p[label].
double cross_entropy(std::span<const double> probs, int label);

struct SoftmaxModel {
    Matrix<double> weights;  // [K x D]
    std::vector<double> bias;
    double alpha = 0.005;

    SoftmaxModel() = default;
    SoftmaxModel(std::size_t classes, std::size_t dim, double alpha)
        : weights(classes, dim, 0.0), bias(classes, 0.0), alpha(alpha) {}

    std::size_t classes() const noexcept { return weights.rows(); }
    std::size_t dim() const noexcept { return weights.cols(); }

    friend bool operator==(const SoftmaxModel&, const SoftmaxModel&) = default;
};

std::vector<double> logits(const SoftmaxModel& model, std::span<const double> x);

/// Argmax of softmax(Wx + b), ties to the lowest class. Throws ConfigError on
/// a dimension mismatch.
int predict(const SoftmaxModel& model, std::span<const double> x);

/// W += alpha (y - p) x^T and b += alpha (y - p) with p = softmax(Wx + b).
/// Returns the cross-entropy of the pre-update prediction.
double delta_update(SoftmaxModel& model, std::span<const double> x, int label);

struct TrainOptions {
    int epochs = 200;
    double alpha = 0.005;
    std::size_t batch = 1;
    std::uint64_t seed = 0;
};

struct EpochStats {
    double mean_loss = 0.0;
    double train_accuracy = 0.0;
};

struct DeltaTrainResult {
    SoftmaxModel model;
    std::vector<EpochStats> curve;
};

/// Optional per-epoch callback, e.g. to track held-out accuracy.
using EpochHook = void (*)(const SoftmaxModel&, int epoch, void* user);

/// Online training, samples shuffled per epoch by seed. With batch > 1 the
/// updates of a minibatch are averaged and applied together. Throws DataError
/// if a class has no training sample.
DeltaTrainResult train_delta_softmax(const Dataset& train, const TrainOptions& opts,
                                     EpochHook hook = nullptr, void* hook_user = nullptr);

struct LinearSvmModel {
    Matrix<double> weights;  // [K x D]
    std::vector<double> bias;
    double reg_c = 1.0;

    std::size_t classes() const noexcept { return weights.rows(); }
};

struct SvmOptions {
    double reg_c = 1.0;
    int epochs = 50;
    std::uint64_t seed = 0;
};

/// One-vs-rest hinge loss, L2 regularized with lambda = 1 / (C n), trained by
/// seeded stochastic subgradient descent with step eta0 / (1 + lambda eta0 t),
/// returning the iterate averaged over the final epoch.
LinearSvmModel train_linear_svm(const Dataset& train, const SvmOptions& opts);

std::vector<double> decision_scores(const LinearSvmModel& model, std::span<const double> x);
int predict(const LinearSvmModel& model, std::span<const double> x);

template <class Model>
std::vector<int> predict_all(const Model& model, const Dataset& data) {
    std::vector<int> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = predict(model, data.x.row(i));
    return out;
}

double accuracy(std::span<const int> predictions, std::span<const int> truths);

nlohmann::json to_json(const SoftmaxModel& model, std::uint64_t config_hash);
SoftmaxModel softmax_model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LinearSvmModel& model, std::uint64_t config_hash);
LinearSvmModel svm_model_from_json(const nlohmann::json& j);

}  // namespace srnr
