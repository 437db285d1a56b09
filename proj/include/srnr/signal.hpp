#pragma once

// Multichannel recordings and the preprocessing protocol: min-max
// normalization, repetition trimming, windowing and stratified splitting.

#include <cstdint>
#include <span>
#include <vector>

#include "srnr/matrix.hpp"

namespace srnr {

/// Multichannel sampled signal with per-sample gesture and repetition labels.
/// Gesture label 0 is rest.
struct RawRecording {
    Matrix<double> samples;  // [channels x T]
    double sample_rate = 0.0;
    std::vector<int> gesture;
    std::vector<int> repetition;

    std::size_t channels() const noexcept { return samples.rows(); }
    std::size_t length() const noexcept { return samples.cols(); }
    double duration_ms() const noexcept {
        return 1000.0 * static_cast<double>(length()) / sample_rate;
    }
};

/// Throws DataError if the label streams or rate are inconsistent.
void validate(const RawRecording& rec);

struct Window {
    Matrix<double> samples;  // [channels x window_len]
    int label = 0;
    int subject_id = 0;
    double window_len_ms = 0.0;
};

enum class FoldMode {
    disjoint,     // stratified k-fold: every window is tested exactly once
    reshuffled,   // n independent stratified shuffles at train_fraction
};

struct SplitSpec {
    double train_fraction = 0.8;
    int n_folds = 5;
    std::uint64_t rng_seed = 0;
    FoldMode mode = FoldMode::disjoint;
};

/// One fold, as indices into the window list passed to split_train_test.
struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// (x - min) / (max - min); constant input maps to all zeros.
std::vector<double> min_max_normalize(std::span<const double> signal);

/// Normalizes every channel over the full recording, in place.
void normalize_channels(RawRecording& rec);

/// Cuts trim_ms from both ends. Throws DataError naming the repetition if the
/// segment is not longer than 2*trim_ms.
RawRecording trim_repetition(const RawRecording& segment, double trim_ms);

/// Splits a recording into maximal runs of constant (gesture, repetition).
/// Rest runs are dropped unless keep_rest is set.
std::vector<RawRecording> split_repetitions(const RawRecording& rec, bool keep_rest);

/// Number of samples in a window; throws ConfigError unless
/// window_len_ms * sample_rate is a multiple of 1000.
std::size_t window_samples(double window_len_ms, double sample_rate);

/// Non-overlapping windows over each segment independently (no window spans
/// two segments). Trailing partial windows and mixed-label windows are
/// dropped, then every class is truncated to the smallest per-class count.
std::vector<Window> segment_windows(std::span<const RawRecording> segments,
                                    double window_len_ms, int subject_id = 0);

std::vector<Window> segment_windows(const RawRecording& rec, double window_len_ms,
                                    int subject_id = 0);

/// Stratified per-class split. Deterministic given spec.rng_seed. Throws
/// DataError listing every class with fewer than max(5, n_folds) windows.
std::vector<Fold> split_train_test(std::span<const int> labels, const SplitSpec& spec);

std::vector<Fold> split_train_test(std::span<const Window> windows, const SplitSpec& spec);

}  // namespace srnr
