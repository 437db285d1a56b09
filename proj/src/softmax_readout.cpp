#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "srnr/error.hpp"
#include "srnr/readout.hpp"

namespace srnr {
namespace {

void check_dim(const SoftmaxModel& model, std::size_t n) {
    if (n != model.dim())
        throw ConfigError("softmax model expects " + std::to_string(model.dim()) +
                          " features, got " + std::to_string(n));
}

void check_classes_present(const Dataset& train) {
    std::vector<std::size_t> seen(train.n_classes, 0);
    for (int y : train.y) {
        if (y < 0 || static_cast<std::size_t>(y) >= train.n_classes)
            throw DataError("training label " + std::to_string(y) + " out of range");
        ++seen[static_cast<std::size_t>(y)];
    }
    std::string missing;
    for (std::size_t k = 0; k < seen.size(); ++k)
        if (seen[k] == 0) missing += (missing.empty() ? "" : ", ") + std::to_string(k);
    if (!missing.empty()) throw DataError("training set has no samples of class " + missing);
}

}  // namespace

std::vector<double> softmax(std::span<const double> z) {
    std::vector<double> p(z.size());
    if (z.empty()) return p;
    const double peak = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) sum += p[i] = std::exp(z[i] - peak);
    for (double& v : p) v /= sum;
    return p;
}

double cross_entropy(std::span<const double> probs, int label) {
    return -std::log(std::max(probs[static_cast<std::size_t>(label)], 1e-300));
}

std::vector<double> logits(const SoftmaxModel& model, std::span<const double> x) {
    check_dim(model, x.size());
    const auto& k = simd::kernels();
    std::vector<double> z(model.classes());
    for (std::size_t c = 0; c < z.size(); ++c)
        z[c] = k.dot(model.weights.row(c).data(), x.data(), x.size()) + model.bias[c];
    return z;
}

int predict(const SoftmaxModel& model, std::span<const double> x) {
    // softmax is monotone, so the argmax of the logits is the argmax of P.
    const auto z = logits(model, x);
    return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

double delta_update(SoftmaxModel& model, std::span<const double> x, int label) {
    const auto p = softmax(logits(model, x));
    const auto& k = simd::kernels();
    for (std::size_t c = 0; c < p.size(); ++c) {
        const double err = (static_cast<int>(c) == label ? 1.0 : 0.0) - p[c];
        const double step = model.alpha * err;
        if (step == 0.0) continue;
        k.axpy(step, x.data(), model.weights.row(c).data(), x.size());
        model.bias[c] += step;
    }
    return cross_entropy(p, label);
}

DeltaTrainResult train_delta_softmax(const Dataset& train, const TrainOptions& opts,
                                     EpochHook hook, void* hook_user) {
    if (opts.epochs < 0) throw ConfigError("train_delta_softmax: epochs must be non-negative");
    if (opts.batch < 1) throw ConfigError("train_delta_softmax: batch must be at least 1");
    check_classes_present(train);

    DeltaTrainResult result{SoftmaxModel(train.n_classes, train.dim(), opts.alpha), {}};
    SoftmaxModel& model = result.model;
    std::mt19937_64 rng(opts.seed);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    const auto& k = simd::kernels();

    Matrix<double> grad_w;
    std::vector<double> grad_b;
    if (opts.batch > 1) {
        grad_w = Matrix<double>(model.classes(), model.dim());
        grad_b.assign(model.classes(), 0.0);
    }

    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += opts.batch) {
            const std::size_t stop = std::min(order.size(), start + opts.batch);
            if (opts.batch == 1) {
                const auto x = train.x.row(order[start]);
                const int y = train.y[order[start]];
                correct += predict(model, x) == y;
                loss += delta_update(model, x, y);
                continue;
            }
            std::fill(grad_w.flat().begin(), grad_w.flat().end(), 0.0);
            std::fill(grad_b.begin(), grad_b.end(), 0.0);
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (std::size_t s = start; s < stop; ++s) {
                const auto x = train.x.row(order[s]);
                const int y = train.y[order[s]];
                const auto z = logits(model, x);
                correct += static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin()) == y;
                const auto p = softmax(z);
                loss += cross_entropy(p, y);
                for (std::size_t c = 0; c < p.size(); ++c) {
                    const double err = ((static_cast<int>(c) == y) ? 1.0 : 0.0) - p[c];
                    k.axpy(err * inv, x.data(), grad_w.row(c).data(), x.size());
                    grad_b[c] += err * inv;
                }
            }
            k.axpy(model.alpha, grad_w.data(), model.weights.data(), grad_w.size());
            for (std::size_t c = 0; c < grad_b.size(); ++c) model.bias[c] += model.alpha * grad_b[c];
        }
        const double n = static_cast<double>(std::max<std::size_t>(1, order.size()));
        result.curve.push_back({loss / n, 100.0 * static_cast<double>(correct) / n});
        if (hook) hook(model, epoch, hook_user);
    }
    return result;
}

nlohmann::json to_json(const SoftmaxModel& model, std::uint64_t config_hash) {
    nlohmann::json w = nlohmann::json::array();
    for (std::size_t c = 0; c < model.classes(); ++c) {
        const auto row = model.weights.row(c);
        w.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return {{"kind", "delta-softmax"},
            {"classes", model.classes()},
            {"dim", model.dim()},
            {"alpha", model.alpha},
            {"weights", w},
            {"bias", model.bias},
            {"config_hash", config_hash}};
}

SoftmaxModel softmax_model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("kind").get<std::string>() != "delta-softmax")
            throw DataError("model file is not a delta-softmax model");
        SoftmaxModel m(j.at("classes").get<std::size_t>(), j.at("dim").get<std::size_t>(),
                       j.at("alpha").get<double>());
        const auto& w = j.at("weights");
        if (w.size() != m.classes()) throw DataError("model weights: wrong row count");
        for (std::size_t c = 0; c < m.classes(); ++c) {
            const auto row = w[c].get<std::vector<double>>();
            if (row.size() != m.dim()) throw DataError("model weights: wrong row length");
            std::copy(row.begin(), row.end(), m.weights.row(c).begin());
        }
        m.bias = j.at("bias").get<std::vector<double>>();
        if (m.bias.size() != m.classes()) throw DataError("model bias: wrong length");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("softmax model: ") + e.what());
    }
}

}  // namespace srnr
