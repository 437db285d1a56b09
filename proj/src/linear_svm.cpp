#include <algorithm>
#include <numeric>
#include <random>

#include "srnr/error.hpp"
#include "srnr/readout.hpp"

namespace srnr {

LinearSvmModel train_linear_svm(const Dataset& train, const SvmOptions& opts) {
    if (!(opts.reg_c > 0.0)) throw ConfigError("train_linear_svm: reg_c must be positive");
    if (opts.epochs < 0) throw ConfigError("train_linear_svm: epochs must be non-negative");
    std::vector<std::size_t> seen(train.n_classes, 0);
    for (int y : train.y) {
        if (y < 0 || static_cast<std::size_t>(y) >= train.n_classes)
            throw DataError("training label " + std::to_string(y) + " out of range");
        ++seen[static_cast<std::size_t>(y)];
    }
    for (std::size_t c = 0; c < seen.size(); ++c)
        if (seen[c] == 0) throw DataError("training set has no samples of class " + std::to_string(c));

    const std::size_t k_classes = train.n_classes;
    const std::size_t dim = train.dim();
    const double n = static_cast<double>(train.size());
    const double lambda = 1.0 / (opts.reg_c * n);
    // Step size eta_t = eta0 / (1 + lambda eta0 t): bounded early steps, 1/(lambda t) tail.
    constexpr double eta0 = 0.05;

    LinearSvmModel model{Matrix<double>(k_classes, dim, 0.0), std::vector<double>(k_classes, 0.0),
                         opts.reg_c};
    // Averaged iterate over the final epoch smooths the subgradient noise.
    Matrix<double> avg_w(k_classes, dim, 0.0);
    std::vector<double> avg_b(k_classes, 0.0);
    std::size_t avg_count = 0;

    std::mt19937_64 rng(opts.seed);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    const auto& k = simd::kernels();
    std::uint64_t t = 0;

    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        const bool last = epoch + 1 == opts.epochs;
        for (std::size_t idx : order) {
            const auto x = train.x.row(idx);
            const int label = train.y[idx];
            const double eta = eta0 / (1.0 + lambda * eta0 * static_cast<double>(t++));
            const double shrink = 1.0 - eta * lambda;
            for (std::size_t c = 0; c < k_classes; ++c) {
                auto w = model.weights.row(c);
                const double y = static_cast<int>(c) == label ? 1.0 : -1.0;
                const double margin = y * (k.dot(w.data(), x.data(), dim) + model.bias[c]);
                for (double& v : w) v *= shrink;
                if (margin < 1.0) {
                    k.axpy(eta * y, x.data(), w.data(), dim);
                    model.bias[c] += eta * y;
                }
            }
            if (last) {
                k.axpy(1.0, model.weights.data(), avg_w.data(), avg_w.size());
                for (std::size_t c = 0; c < k_classes; ++c) avg_b[c] += model.bias[c];
                ++avg_count;
            }
        }
    }
    if (avg_count > 0) {
        const double inv = 1.0 / static_cast<double>(avg_count);
        for (double& v : avg_w.flat()) v *= inv;
        for (double& v : avg_b) v *= inv;
        model.weights = std::move(avg_w);
        model.bias = std::move(avg_b);
    }
    return model;
}

std::vector<double> decision_scores(const LinearSvmModel& model, std::span<const double> x) {
    if (x.size() != model.weights.cols())
        throw ConfigError("svm model expects " + std::to_string(model.weights.cols()) +
                          " features, got " + std::to_string(x.size()));
    const auto& k = simd::kernels();
    std::vector<double> s(model.classes());
    for (std::size_t c = 0; c < s.size(); ++c)
        s[c] = k.dot(model.weights.row(c).data(), x.data(), x.size()) + model.bias[c];
    return s;
}

int predict(const LinearSvmModel& model, std::span<const double> x) {
    const auto s = decision_scores(model, x);
    return static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
}

nlohmann::json to_json(const LinearSvmModel& model, std::uint64_t config_hash) {
    nlohmann::json w = nlohmann::json::array();
    for (std::size_t c = 0; c < model.classes(); ++c) {
        const auto row = model.weights.row(c);
        w.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return {{"kind", "linear-svm"},
            {"classes", model.classes()},
            {"dim", model.weights.cols()},
            {"reg_c", model.reg_c},
            {"weights", w},
            {"bias", model.bias},
            {"config_hash", config_hash}};
}

LinearSvmModel svm_model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("kind").get<std::string>() != "linear-svm")
            throw DataError("model file is not a linear-svm model");
        const auto classes = j.at("classes").get<std::size_t>();
        const auto dim = j.at("dim").get<std::size_t>();
        LinearSvmModel m{Matrix<double>(classes, dim), j.at("bias").get<std::vector<double>>(),
                         j.at("reg_c").get<double>()};
        const auto& w = j.at("weights");
        if (w.size() != classes || m.bias.size() != classes)
            throw DataError("svm model: wrong class count");
        for (std::size_t c = 0; c < classes; ++c) {
            const auto row = w[c].get<std::vector<double>>();
            if (row.size() != dim) throw DataError("svm model: wrong row length");
            std::copy(row.begin(), row.end(), m.weights.row(c).begin());
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("svm model: ") + e.what());
    }
}

}  // namespace srnr
