#include "srnr/signal.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "srnr/error.hpp"

namespace srnr {

void validate(const RawRecording& rec) {
    if (rec.sample_rate <= 0.0) throw DataError("recording: sample_rate must be positive");
    if (rec.channels() == 0) throw DataError("recording: at least one channel required");
    if (rec.gesture.size() != rec.length() || rec.repetition.size() != rec.length())
        throw DataError("recording: label streams must have one entry per sample");
}

std::vector<double> min_max_normalize(std::span<const double> signal) {
    if (signal.empty()) throw DataError("min_max_normalize: empty signal");
    const auto [lo, hi] = std::minmax_element(signal.begin(), signal.end());
    const double min = *lo;
    const double range = *hi - *lo;
    std::vector<double> out(signal.size(), 0.0);
    if (range > 0.0) {
        for (std::size_t i = 0; i < signal.size(); ++i) {
            // Clamp guards the top end against (x - min) / range rounding past 1.
            out[i] = std::min(1.0, (signal[i] - min) / range);
        }
    }
    return out;
}

void normalize_channels(RawRecording& rec) {
    for (std::size_t c = 0; c < rec.channels(); ++c) {
        auto row = rec.samples.row(c);
        const auto scaled = min_max_normalize(row);
        std::copy(scaled.begin(), scaled.end(), row.begin());
    }
}

namespace {

RawRecording slice(const RawRecording& rec, std::size_t begin, std::size_t end) {
    RawRecording out;
    out.sample_rate = rec.sample_rate;
    out.samples = Matrix<double>(rec.channels(), end - begin);
    for (std::size_t c = 0; c < rec.channels(); ++c) {
        const auto src = rec.samples.row(c);
        std::copy(src.begin() + static_cast<std::ptrdiff_t>(begin),
                  src.begin() + static_cast<std::ptrdiff_t>(end), out.samples.row(c).begin());
    }
    out.gesture.assign(rec.gesture.begin() + static_cast<std::ptrdiff_t>(begin),
                       rec.gesture.begin() + static_cast<std::ptrdiff_t>(end));
    out.repetition.assign(rec.repetition.begin() + static_cast<std::ptrdiff_t>(begin),
                          rec.repetition.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
}

}  // namespace

RawRecording trim_repetition(const RawRecording& segment, double trim_ms) {
    validate(segment);
    if (trim_ms < 0.0) throw ConfigError("trim_repetition: trim_ms must be non-negative");
    const auto trim = static_cast<std::size_t>(std::llround(trim_ms * segment.sample_rate / 1000.0));
    if (segment.length() <= 2 * trim) {
        std::ostringstream msg;
        msg << "trim_repetition: repetition "
            << (segment.repetition.empty() ? -1 : segment.repetition.front()) << " lasts "
            << segment.duration_ms() << " ms, not longer than 2 x " << trim_ms << " ms";
        throw DataError(msg.str());
    }
    return slice(segment, trim, segment.length() - trim);
}

std::vector<RawRecording> split_repetitions(const RawRecording& rec, bool keep_rest) {
    validate(rec);
    std::vector<RawRecording> out;
    std::size_t begin = 0;
    for (std::size_t t = 1; t <= rec.length(); ++t) {
        const bool boundary = t == rec.length() || rec.gesture[t] != rec.gesture[begin] ||
                              rec.repetition[t] != rec.repetition[begin];
        if (!boundary) continue;
        if (keep_rest || rec.gesture[begin] != 0) out.push_back(slice(rec, begin, t));
        begin = t;
    }
    return out;
}

std::size_t window_samples(double window_len_ms, double sample_rate) {
    const double exact = window_len_ms * sample_rate;
    const double rounded = std::round(exact);
    if (window_len_ms <= 0.0 || std::abs(exact - rounded) > 1e-9 * std::max(1.0, exact) ||
        std::fmod(rounded, 1000.0) != 0.0) {
        std::ostringstream msg;
        msg << "window of " << window_len_ms << " ms at " << sample_rate
            << " Hz is not a whole number of samples";
        throw ConfigError(msg.str());
    }
    return static_cast<std::size_t>(rounded / 1000.0);
}

std::vector<Window> segment_windows(std::span<const RawRecording> segments, double window_len_ms,
                                    int subject_id) {
    std::vector<Window> all;
    for (const auto& seg : segments) {
        validate(seg);
        const std::size_t len = window_samples(window_len_ms, seg.sample_rate);
        for (std::size_t start = 0; start + len <= seg.length(); start += len) {
            const auto first = seg.gesture.begin() + static_cast<std::ptrdiff_t>(start);
            const bool uniform = std::all_of(first, first + static_cast<std::ptrdiff_t>(len),
                                             [&](int g) { return g == *first; });
            if (!uniform) continue;
            Window w;
            w.label = *first;
            w.subject_id = subject_id;
            w.window_len_ms = window_len_ms;
            w.samples = Matrix<double>(seg.channels(), len);
            for (std::size_t c = 0; c < seg.channels(); ++c) {
                const auto src = seg.samples.row(c);
                std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(start), len,
                            w.samples.row(c).begin());
            }
            all.push_back(std::move(w));
        }
    }

    std::map<int, std::size_t> per_class;
    for (const auto& w : all) ++per_class[w.label];
    if (per_class.empty()) return all;
    std::size_t keep = SIZE_MAX;
    for (const auto& [label, n] : per_class) keep = std::min(keep, n);

    std::map<int, std::size_t> taken;
    std::vector<Window> balanced;
    balanced.reserve(keep * per_class.size());
    for (auto& w : all) {
        if (taken[w.label]++ < keep) balanced.push_back(std::move(w));
    }
    return balanced;
}

std::vector<Window> segment_windows(const RawRecording& rec, double window_len_ms,
                                    int subject_id) {
    return segment_windows(std::span<const RawRecording>(&rec, 1), window_len_ms, subject_id);
}

std::vector<Fold> split_train_test(std::span<const int> labels, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw ConfigError("split: train_fraction must lie in (0, 1)");
    if (spec.n_folds < 1) throw ConfigError("split: n_folds must be at least 1");

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    const std::size_t minimum = std::max<std::size_t>(5, static_cast<std::size_t>(spec.n_folds));
    std::ostringstream short_classes;
    bool any_short = false;
    for (const auto& [label, idx] : by_class) {
        if (idx.size() < minimum) {
            short_classes << (any_short ? ", " : "") << label << " (" << idx.size() << ")";
            any_short = true;
        }
    }
    if (any_short)
        throw DataError("split: classes with fewer than " + std::to_string(minimum) +
                        " windows: " + short_classes.str());
    if (by_class.empty()) throw DataError("split: no windows");

    const auto folds = static_cast<std::size_t>(spec.n_folds);
    std::vector<Fold> out(folds);
    std::mt19937_64 rng(spec.rng_seed);

    for (auto& [label, idx] : by_class) {
        const std::size_t n = idx.size();
        if (spec.mode == FoldMode::disjoint && folds > 1) {
            std::shuffle(idx.begin(), idx.end(), rng);
            for (std::size_t f = 0; f < folds; ++f) {
                const std::size_t lo = f * n / folds;
                const std::size_t hi = (f + 1) * n / folds;
                for (std::size_t k = 0; k < n; ++k)
                    (k >= lo && k < hi ? out[f].test : out[f].train).push_back(idx[k]);
            }
        } else {
            const auto n_test = static_cast<std::size_t>(
                std::llround((1.0 - spec.train_fraction) * static_cast<double>(n)));
            for (std::size_t f = 0; f < folds; ++f) {
                std::vector<std::size_t> order = idx;
                std::shuffle(order.begin(), order.end(), rng);
                for (std::size_t k = 0; k < n; ++k)
                    (k < n_test ? out[f].test : out[f].train).push_back(order[k]);
            }
        }
    }
    for (auto& fold : out) {
        std::sort(fold.train.begin(), fold.train.end());
        std::sort(fold.test.begin(), fold.test.end());
    }
    return out;
}

std::vector<Fold> split_train_test(std::span<const Window> windows, const SplitSpec& spec) {
    std::vector<int> labels;
    labels.reserve(windows.size());
    for (const auto& w : windows) labels.push_back(w.label);
    return split_train_test(labels, spec);
}

}  // namespace srnr
