#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "srnr/error.hpp"
#include "srnr/readout.hpp"

using namespace srnr;

namespace {

Dataset blobs(std::size_t per_class, std::size_t classes, std::size_t dim, double spread, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, spread);
    Dataset d;
    d.n_classes = classes;
    d.x = Matrix<double>(per_class * classes, dim, 0.0);
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t i = 0; i < per_class; ++i) {
            const std::size_t row = c * per_class + i;
            for (std::size_t k = 0; k < dim; ++k) d.x(row, k) = (k % classes == c ? 4.0 : 0.0) + noise(rng);
            d.y.push_back(static_cast<int>(c));
        }
    return d;
}

double ce_of(const SoftmaxModel& m, std::span<const double> x, int y) {
    return cross_entropy(softmax(logits(m, x)), y);
}

}  // namespace

TEST_CASE("bin_spike_counts examples") {
    SpikeRaster zero{Matrix<std::uint8_t>(480, 400, 0), 1e-3, RowMeaning::reservoir_neuron};
    const FeatureVector z = bin_spike_counts(zero, 1);
    CHECK(z.counts.size() == 480);
    CHECK(std::all_of(z.counts.begin(), z.counts.end(), [](auto c) { return c == 0; }));
    SpikeRaster ones{Matrix<std::uint8_t>(480, 400, 1), 1e-3, RowMeaning::reservoir_neuron};
    const FeatureVector o = bin_spike_counts(ones, 1, 7);
    CHECK(o.label == 7);
    CHECK(std::all_of(o.counts.begin(), o.counts.end(), [](auto c) { return c == 400; }));
    CHECK_THROWS_AS(bin_spike_counts(ones, 3), ConfigError);
    CHECK_THROWS_AS(bin_spike_counts(ones, 0), ConfigError);
}

TEST_CASE("bin_spike_counts matches a brute-force count and sums to the total") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t rows = 1 + rng() % 30;
        const std::size_t bins = 1 + rng() % 5;
        const std::size_t steps = bins * (1 + rng() % 40);
        SpikeRaster r{Matrix<std::uint8_t>(rows, steps), 1e-3, RowMeaning::encoder_channel};
        for (auto& b : r.spikes.flat()) b = rng() % 2;
        const FeatureVector f = bin_spike_counts(r, bins);
        std::uint64_t sum = 0;
        for (std::size_t row = 0; row < rows; ++row)
            for (std::size_t b = 0; b < bins; ++b) {
                std::uint32_t expect = 0;
                for (std::size_t t = b * steps / bins; t < (b + 1) * steps / bins; ++t) expect += r.spikes(row, t);
                CHECK(f.counts[row * bins + b] == expect);
                sum += expect;
            }
        CHECK(sum == r.total_spikes());
    }
}

TEST_CASE("softmax examples and invariants") {
    const std::vector<double> uniform(50, 3.0);
    for (double p : softmax(uniform)) CHECK(p == doctest::Approx(0.02));
    const auto big = softmax(std::vector<double>{1000.0, 0.0});
    CHECK(std::isfinite(big[0]));
    CHECK(big[0] == doctest::Approx(1.0));
    CHECK(big[1] == doctest::Approx(0.0));

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-30.0, 30.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> z(1 + rng() % 20);
        for (double& v : z) v = u(rng);
        const auto p = softmax(z);
        CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        for (double v : p) CHECK(v >= 0.0);
        std::vector<double> shifted(z);
        for (double& v : shifted) v += 123.0;
        const auto q = softmax(shifted);
        for (std::size_t i = 0; i < p.size(); ++i) CHECK(q[i] == doctest::Approx(p[i]).epsilon(1e-9));
        // Order preserving.
        const auto zi = std::max_element(z.begin(), z.end()) - z.begin();
        const auto pi = std::max_element(p.begin(), p.end()) - p.begin();
        CHECK(zi == pi);
    }
}

TEST_CASE("predict: ties go to the lowest class; bias selects a class") {
    SoftmaxModel m(4, 3, 0.005);
    const std::vector<double> x(3, 0.0);
    CHECK(predict(m, x) == 0);
    m.bias[2] += 10.0;
    CHECK(predict(m, x) == 2);
    m.bias[1] += 10.0;
    CHECK(predict(m, x) == 1);
    CHECK_THROWS_AS(predict(m, std::vector<double>(2, 0.0)), ConfigError);
}

TEST_CASE("delta_update example: p = [0, 1] on true class 0") {
    SoftmaxModel m(2, 2, 0.005);
    m.bias = {-1000.0, 1000.0};  // p = softmax(b) = [0, 1] to double precision
    const SoftmaxModel before = m;
    delta_update(m, std::vector<double>{1.0, 0.0}, 0);
    CHECK(m.weights(0, 0) - before.weights(0, 0) == doctest::Approx(0.005));
    CHECK(m.weights(0, 1) == 0.0);
    CHECK(m.weights(1, 0) - before.weights(1, 0) == doctest::Approx(-0.005));
    CHECK(m.weights(1, 1) == 0.0);
}

TEST_CASE("delta_update fixed point when p equals y") {
    SoftmaxModel m(2, 2, 0.5);
    m.bias = {1000.0, 0.0};
    const SoftmaxModel before = m;
    const double loss = delta_update(m, std::vector<double>{0.3, 0.7}, 0);
    CHECK(loss == doctest::Approx(0.0));
    CHECK(m == before);
}

TEST_CASE("delta step is the negative cross-entropy gradient") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t k = 2 + rng() % 5, d = 1 + rng() % 6;
        SoftmaxModel m(k, d, 1.0);
        for (double& w : m.weights.flat()) w = g(rng);
        for (double& b : m.bias) b = g(rng);
        std::vector<double> x(d);
        for (double& v : x) v = g(rng);
        const int y = static_cast<int>(rng() % k);

        // Central differences of the loss over every weight and bias.
        const double h = 1e-6;
        std::vector<double> fd, analytic;
        SoftmaxModel updated = m;
        delta_update(updated, x, y);  // alpha = 1: update = -gradient
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t j = 0; j <= d; ++j) {
                SoftmaxModel plus = m, minus = m;
                double& wp = j < d ? plus.weights(c, j) : plus.bias[c];
                double& wm = j < d ? minus.weights(c, j) : minus.bias[c];
                wp += h;
                wm -= h;
                fd.push_back((ce_of(plus, x, y) - ce_of(minus, x, y)) / (2 * h));
                analytic.push_back(j < d ? m.weights(c, j) - updated.weights(c, j) : m.bias[c] - updated.bias[c]);
            }
        }
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < fd.size(); ++i) {
            num += (fd[i] - analytic[i]) * (fd[i] - analytic[i]);
            den += fd[i] * fd[i] + analytic[i] * analytic[i];
        }
        CHECK(std::sqrt(num) / std::max(std::sqrt(den), 1e-12) < 1e-6);
    }
}

TEST_CASE("separable blobs: SVM oracle separates them, delta rule reaches 100% within 50 epochs") {
    const Dataset d = blobs(40, 3, 6, 0.5, 10);
    const LinearSvmModel svm = train_linear_svm(d, {1.0, 50, 1});
    const auto svm_pred = predict_all(svm, d);
    REQUIRE(accuracy(svm_pred, d.y) == 100.0);

    TrainOptions opts;
    opts.epochs = 50;
    opts.alpha = 0.005;
    opts.seed = 3;
    const DeltaTrainResult r = train_delta_softmax(d, opts);
    REQUIRE(r.curve.size() == 50);
    const auto pred = predict_all(r.model, d);
    CHECK(accuracy(pred, d.y) == 100.0);
    CHECK(r.curve.back().mean_loss < r.curve.front().mean_loss);
}

TEST_CASE("alpha = 0 leaves the model unchanged with a flat loss curve") {
    const Dataset d = blobs(10, 3, 4, 0.5, 11);
    TrainOptions opts;
    opts.epochs = 5;
    opts.alpha = 0.0;
    const DeltaTrainResult r = train_delta_softmax(d, opts);
    CHECK(r.model == SoftmaxModel(3, 4, 0.0));
    for (const auto& e : r.curve) CHECK(e.mean_loss == r.curve.front().mean_loss);
    CHECK(r.curve.front().mean_loss == doctest::Approx(std::log(3.0)));
}

TEST_CASE("training is deterministic for a seed; minibatches train too") {
    const Dataset d = blobs(20, 4, 8, 1.0, 12);
    TrainOptions opts;
    opts.epochs = 20;
    opts.seed = 9;
    CHECK(train_delta_softmax(d, opts).model == train_delta_softmax(d, opts).model);
    opts.batch = 8;
    opts.alpha = 0.05;
    const auto r = train_delta_softmax(d, opts);
    CHECK(r.model == train_delta_softmax(d, opts).model);
    CHECK(accuracy(predict_all(r.model, d), d.y) > 90.0);
}

TEST_CASE("missing class in the training set is an error") {
    Dataset d = blobs(5, 3, 3, 0.1, 1);
    d.n_classes = 4;
    CHECK_THROWS_AS(train_delta_softmax(d, {}), DataError);
    CHECK_THROWS_AS(train_linear_svm(d, {}), DataError);
}

TEST_CASE("epoch hook sees every epoch") {
    const Dataset d = blobs(5, 2, 2, 0.1, 1);
    TrainOptions opts;
    opts.epochs = 7;
    std::vector<int> seen;
    train_delta_softmax(
        d, opts, [](const SoftmaxModel&, int epoch, void* user) { static_cast<std::vector<int>*>(user)->push_back(epoch); },
        &seen);
    CHECK(seen == std::vector<int>{0, 1, 2, 3, 4, 5, 6});
}

TEST_CASE("linear SVM: 1-D separable classes and label permutation") {
    Dataset d;
    d.n_classes = 2;
    d.x = Matrix<double>(20, 1);
    for (std::size_t i = 0; i < 20; ++i) {
        d.x(i, 0) = i < 10 ? -1.0 - 0.1 * static_cast<double>(i) : 1.0 + 0.1 * static_cast<double>(i);
        d.y.push_back(i < 10 ? 0 : 1);
    }
    const LinearSvmModel m = train_linear_svm(d, {1.0, 50, 2});
    CHECK(accuracy(predict_all(m, d), d.y) == 100.0);

    const Dataset b = blobs(15, 3, 6, 0.5, 13);
    Dataset p = b;
    const int perm[3] = {2, 0, 1};
    for (int& y : p.y) y = perm[y];
    const auto pb = predict_all(train_linear_svm(b, {1.0, 30, 4}), b);
    const auto pp = predict_all(train_linear_svm(p, {1.0, 30, 4}), p);
    for (std::size_t i = 0; i < pb.size(); ++i) CHECK(pp[i] == perm[pb[i]]);
}

TEST_CASE("model JSON round trip") {
    const Dataset d = blobs(10, 3, 4, 0.5, 14);
    TrainOptions opts;
    opts.epochs = 3;
    const SoftmaxModel m = train_delta_softmax(d, opts).model;
    const auto j = to_json(m, 0xabcdef);
    CHECK(j["config_hash"] == 0xabcdef);
    CHECK(softmax_model_from_json(j) == m);
    const LinearSvmModel s = train_linear_svm(d, {1.0, 5, 0});
    const LinearSvmModel back = svm_model_from_json(to_json(s, 1));
    CHECK(back.weights == s.weights);
    CHECK(back.bias == s.bias);
}

TEST_CASE("make_dataset scales counts and checks labels") {
    std::vector<FeatureVector> f{{{1, 2}, 1, 0}, {{3, 4}, 1, 1}};
    const Dataset d = make_dataset(f, 2, 0.5);
    CHECK(d.x(1, 1) == 2.0);
    CHECK(d.y == std::vector<int>{0, 1});
    CHECK_THROWS_AS(make_dataset(f, 1), DataError);
}
