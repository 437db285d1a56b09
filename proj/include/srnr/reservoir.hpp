#pragma once

// Spiking rotating-neuron reservoir: banks of LIF neurons on a ring whose
// input connections rotate by one position per time step.

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "srnr/encoding.hpp"

namespace srnr {

struct InputMask {
    std::vector<std::uint8_t> weights;  // binary, at least one 1
    std::uint64_t rng_seed = 0;
    double density = 0.5;

    std::size_t size() const noexcept { return weights.size(); }
    friend bool operator==(const InputMask&, const InputMask&) = default;
};

struct ReservoirConfig {
    std::size_t n_neurons = 10;
    InputMask mask;
    LifParams neuron;  // reservoir neurons use input_gain 1
    double spike_current = 1.0;

    friend bool operator==(const ReservoirConfig&, const ReservoirConfig&) = default;
};

/// Throws ConfigError if the mask size, mask content or neuron parameters are
/// inconsistent.
void validate(const ReservoirConfig& cfg);

/// Rotation offset at step t: t mod n.
inline std::size_t rotation_offset(std::uint64_t t, std::size_t n) noexcept {
    return static_cast<std::size_t>(t % n);
}

struct ReservoirBankState {
    std::vector<LifState> neurons;
    std::uint64_t t = 0;
};

ReservoirBankState initial_state(const ReservoirConfig& cfg);

/// I.i.d. Bernoulli(density) entries, redrawn until at least one is set.
InputMask init_mask(std::size_t n, double density, std::uint64_t seed);

/// Mask entry presented to neuron i at step t: mask[(i - t) mod N]. The ring
/// rotates toward higher neuron indices, so entry j reaches neuron j + t.
std::uint8_t effective_weight(const InputMask& mask, std::size_t neuron, std::uint64_t t);

/// Advances one bank by one step; writes N output spikes.
void bank_step(ReservoirBankState& state, std::uint8_t in_spike, const ReservoirConfig& cfg,
               std::span<std::uint8_t> out);

/// Runs one bank per input row from zero state. Output rows are bank-major:
/// bank b occupies rows [offset_b, offset_b + N_b). Throws ConfigError if the
/// row count differs from the number of configs.
SpikeRaster run_parallel_reservoirs(const SpikeRaster& input,
                                    std::span<const ReservoirConfig> configs);

/// Per-bank configs with masks drawn from seeds derived from run_seed. With
/// shared_mask every bank uses the first bank's mask.
std::vector<ReservoirConfig> make_bank_configs(std::size_t n_banks, std::size_t n_neurons,
                                               double density, std::uint64_t run_seed,
                                               const LifParams& neuron, double spike_current,
                                               bool shared_mask = false);

/// ORs consecutive pairs of steps; used to run the reservoir at twice the raster dt.
SpikeRaster downsample_or(const SpikeRaster& raster, std::size_t factor);

nlohmann::json to_json(const ReservoirConfig& cfg);
ReservoirConfig reservoir_config_from_json(const nlohmann::json& j);

}  // namespace srnr
