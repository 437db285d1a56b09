#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "srnr/error.hpp"
#include "srnr/signal.hpp"

using namespace srnr;

namespace {

RawRecording constant_recording(std::size_t channels, std::size_t samples, double rate, int gesture,
                                int rep) {
    RawRecording r;
    r.sample_rate = rate;
    r.samples = Matrix<double>(channels, samples, 0.0);
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t t = 0; t < samples; ++t) r.samples(c, t) = static_cast<double>(t % 17) + c;
    r.gesture.assign(samples, gesture);
    r.repetition.assign(samples, rep);
    return r;
}

RawRecording concat(const std::vector<RawRecording>& parts) {
    RawRecording out;
    out.sample_rate = parts.front().sample_rate;
    std::size_t total = 0;
    for (const auto& p : parts) total += p.length();
    out.samples = Matrix<double>(parts.front().channels(), total);
    std::size_t t0 = 0;
    for (const auto& p : parts) {
        for (std::size_t c = 0; c < p.channels(); ++c)
            for (std::size_t t = 0; t < p.length(); ++t) out.samples(c, t0 + t) = p.samples(c, t);
        out.gesture.insert(out.gesture.end(), p.gesture.begin(), p.gesture.end());
        out.repetition.insert(out.repetition.end(), p.repetition.begin(), p.repetition.end());
        t0 += p.length();
    }
    return out;
}

}  // namespace

TEST_CASE("min_max_normalize examples") {
    const std::vector<double> a{1, 3, 5}, b{7, 7, 7}, c{-2, 0, 2};
    CHECK(min_max_normalize(a) == std::vector<double>{0, 0.5, 1});
    CHECK(min_max_normalize(b) == std::vector<double>{0, 0, 0});
    CHECK(min_max_normalize(c) == std::vector<double>{0, 0.5, 1});
    CHECK_THROWS_AS(min_max_normalize(std::vector<double>{}), DataError);
}

TEST_CASE("normalization is idempotent and bounded for non-constant input") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x(1 + rng() % 300);
        for (auto& v : x) v = g(rng);
        x.push_back(x.front() + 1.0);  // non-constant
        const auto once = min_max_normalize(x);
        const auto twice = min_max_normalize(once);
        for (std::size_t i = 0; i < x.size(); ++i) {
            REQUIRE(once[i] >= 0.0);
            REQUIRE(once[i] <= 1.0);
            REQUIRE(twice[i] == doctest::Approx(once[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("normalize_channels scales each channel over the whole recording") {
    RawRecording r = constant_recording(2, 100, 2000, 1, 1);
    r.samples(1, 5) = 1000.0;
    normalize_channels(r);
    for (std::size_t c = 0; c < 2; ++c) {
        const auto row = r.samples.row(c);
        CHECK(*std::min_element(row.begin(), row.end()) == 0.0);
        CHECK(*std::max_element(row.begin(), row.end()) == 1.0);
    }
}

TEST_CASE("trim_repetition") {
    const RawRecording rep = constant_recording(2, 10000, 2000, 3, 4);  // 5000 ms
    const RawRecording trimmed = trim_repetition(rep, 600);
    CHECK(trimmed.duration_ms() == doctest::Approx(3800));
    CHECK(trimmed.length() == 7600);
    CHECK(trimmed.samples(1, 0) == rep.samples(1, 1200));
    CHECK(std::all_of(trimmed.gesture.begin(), trimmed.gesture.end(), [](int g) { return g == 3; }));

    const RawRecording same = trim_repetition(rep, 0);
    CHECK(same.samples == rep.samples);
    CHECK(same.gesture == rep.gesture);

    const RawRecording short_rep = constant_recording(1, 2000, 2000, 3, 9);  // 1000 ms
    try {
        trim_repetition(short_rep, 600);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("repetition 9") != std::string::npos);
    }
}

TEST_CASE("segment_windows: 3800 ms at 2 kHz gives 19 windows of 400 samples") {
    const RawRecording seg = constant_recording(12, 7600, 2000, 2, 1);
    const auto windows = segment_windows(seg, 200.0, 7);
    REQUIRE(windows.size() == 19);
    for (const auto& w : windows) {
        CHECK(w.samples.rows() == 12);
        CHECK(w.samples.cols() == 400);
        CHECK(w.label == 2);
        CHECK(w.subject_id == 7);
    }
    CHECK(windows[3].samples(5, 0) == seg.samples(5, 1200));

    const RawRecording tiny = constant_recording(1, 399, 2000, 1, 1);
    CHECK(segment_windows(tiny, 200.0).empty());
    CHECK_THROWS_AS(segment_windows(seg, 200.25), ConfigError);
}

TEST_CASE("segment_windows truncates every class to the smallest count") {
    // Brute-force oracle: count whole windows per class segment by segment.
    const std::vector<RawRecording> segments{constant_recording(1, 21 * 400 + 123, 2000, 1, 1),
                                             constant_recording(1, 19 * 400 + 399, 2000, 2, 1)};
    std::map<int, std::size_t> brute;
    for (const auto& s : segments) brute[s.gesture.front()] += s.length() / 400;
    REQUIRE(brute[1] == 21);
    REQUIRE(brute[2] == 19);

    const auto windows = segment_windows(segments, 200.0);
    std::map<int, std::size_t> got;
    for (const auto& w : windows) ++got[w.label];
    CHECK(got[1] == 19);
    CHECK(got[2] == 19);
}

TEST_CASE("window count is floor(S/L) before label filtering; mixed windows dropped") {
    for (std::size_t samples : {0u, 399u, 400u, 401u, 1999u, 4000u}) {
        if (samples == 0) continue;
        const RawRecording r = constant_recording(1, samples, 2000, 1, 1);
        CHECK(segment_windows(r, 200.0).size() == samples / 400);
    }
    // A gesture boundary at sample 1000 spoils window [800, 1200).
    RawRecording r = constant_recording(1, 2000, 2000, 1, 1);
    std::fill(r.gesture.begin() + 1000, r.gesture.end(), 2);
    const auto w = segment_windows(r, 200.0);
    std::map<int, int> per;
    for (const auto& x : w) ++per[x.label];
    CHECK(per[1] == 2);
    CHECK(per[2] == 2);
}

TEST_CASE("split_repetitions separates runs and drops rest on request") {
    const RawRecording r = concat({constant_recording(1, 100, 2000, 1, 1), constant_recording(1, 50, 2000, 0, 1),
                                   constant_recording(1, 100, 2000, 1, 2), constant_recording(1, 50, 2000, 0, 2)});
    CHECK(split_repetitions(r, true).size() == 4);
    const auto moving = split_repetitions(r, false);
    REQUIRE(moving.size() == 2);
    CHECK(moving[1].repetition.front() == 2);
}

TEST_CASE("split_train_test examples") {
    std::vector<int> labels;
    for (int c = 0; c < 5; ++c)
        for (int i = 0; i < 20; ++i) labels.push_back(c);

    SplitSpec one{0.8, 1, 42, FoldMode::disjoint};
    const auto folds = split_train_test(labels, one);
    REQUIRE(folds.size() == 1);
    CHECK(folds[0].train.size() == 80);
    CHECK(folds[0].test.size() == 20);

    const auto again = split_train_test(labels, one);
    CHECK(again[0].train == folds[0].train);
    CHECK(again[0].test == folds[0].test);
    SplitSpec other = one;
    other.rng_seed = 43;
    CHECK(split_train_test(labels, other)[0].test != folds[0].test);
}

TEST_CASE("5 disjoint folds cover every window in some test set") {
    std::vector<int> labels;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 50; ++i) labels.push_back(c);
    const auto folds = split_train_test(labels, {0.8, 5, 9, FoldMode::disjoint});
    std::vector<int> tested(labels.size(), 0);
    for (const auto& f : folds) {
        std::set<std::size_t> train(f.train.begin(), f.train.end());
        for (std::size_t i : f.test) {
            CHECK_FALSE(train.count(i));
            ++tested[i];
        }
        CHECK(f.train.size() + f.test.size() == labels.size());
    }
    CHECK(std::all_of(tested.begin(), tested.end(), [](int n) { return n >= 1; }));
}

TEST_CASE("stratified split keeps the per-class ratio within one window") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> labels;
        const int classes = 2 + static_cast<int>(rng() % 6);
        std::map<int, int> n;
        for (int c = 0; c < classes; ++c) {
            n[c] = 5 + static_cast<int>(rng() % 40);
            for (int i = 0; i < n[c]; ++i) labels.push_back(c);
        }
        std::shuffle(labels.begin(), labels.end(), rng);
        const double frac = 0.5 + 0.4 * static_cast<double>(rng() % 100) / 100.0;
        const FoldMode mode = trial % 2 ? FoldMode::disjoint : FoldMode::reshuffled;
        const int n_folds = mode == FoldMode::disjoint ? 5 : 1 + static_cast<int>(rng() % 4);
        const double test_frac = mode == FoldMode::disjoint ? 1.0 / n_folds : 1.0 - frac;
        const auto folds = split_train_test(labels, {frac, n_folds, rng(), mode});
        for (const auto& f : folds) {
            std::map<int, int> tested;
            for (std::size_t i : f.test) ++tested[labels[i]];
            for (const auto& [c, total] : n) REQUIRE(std::abs(tested[c] - test_frac * total) < 1.0);
        }
    }
}

TEST_CASE("split rejects classes with too few windows") {
    const std::vector<int> labels{0, 0, 0, 0, 0, 1, 1, 1, 2, 2};
    try {
        split_train_test(labels, {0.8, 1, 0, FoldMode::disjoint});
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("1 (3)") != std::string::npos);
        CHECK(msg.find("2 (2)") != std::string::npos);
    }
    CHECK_THROWS_AS(split_train_test(labels, {1.0, 1, 0, FoldMode::disjoint}), ConfigError);
}
