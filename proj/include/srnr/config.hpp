#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "srnr/encoding.hpp"
#include "srnr/signal.hpp"

namespace srnr {

enum class Classifier { delta_softmax, linear_svm };
enum class FeatureScale { counts, rates };

/// Which encoder rows share one calibrated input gain.
enum class GainScope {
    subject,  // one gain for all rows of a subject
    band,     // one gain per filter band, shared by that band's channels
};

/// How the reservoir clock relates to the encoder raster.
enum class ReservoirClock {
    aligned,  // reservoir dt = raster dt, tau = RC preserved
    ms1,      // rasters ORed pairwise to 1 ms and stepped with dt = 1 ms
};

struct PipelineConfig {
    std::uint64_t seed = 0;
    double window_ms = 200.0;
    double trim_ms = 600.0;
    bool include_rest = true;

    struct Bands {
        std::vector<double> cutoffs{0.0, 100.0, 250.0, 500.0, 1000.0};
        int order = 4;
    } bands;

    struct Encoder {
        LifParams neuron{};  // dt is replaced by the sampling period
        double rate_cap = 300.0;
        bool calibrate = true;
        GainScope gain_scope = GainScope::band;
    } encoder;

    struct Reservoir {
        std::size_t n_neurons = 10;
        double density = 0.5;
        double spike_current = 1.0;
        bool shared_mask = false;
        ReservoirClock clock = ReservoirClock::aligned;
        LifParams neuron = LifParams::defaults();
    } reservoir;

    struct Readout {
        Classifier classifier = Classifier::delta_softmax;
        double alpha = 0.005;
        std::size_t batch = 1;
        int epochs = 200;
        std::size_t n_bins = 1;
        FeatureScale scale = FeatureScale::counts;
        double svm_c = 1.0;
        int svm_epochs = 50;
        bool track_test_curve = true;
    } readout;

    struct Split {
        double train_fraction = 0.8;
        int folds = 5;
        FoldMode mode = FoldMode::disjoint;
    } split;

    int workers = 1;
};

/// Throws ConfigError describing every invalid field.
void validate(const PipelineConfig& cfg);

nlohmann::json to_json(const PipelineConfig& cfg);

/// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& j);

/// Loads `.toml` or `.json`; TOML is converted to the equivalent JSON first.
PipelineConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64 of the canonical JSON dump.
std::uint64_t config_hash(const PipelineConfig& cfg);

std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;

/// Independent stream seed derived from a run seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

std::string to_string(Classifier c);
std::string to_string(ReservoirClock c);
std::string to_string(GainScope s);

}  // namespace srnr
