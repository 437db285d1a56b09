#include "srnr/reservoir.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "srnr/error.hpp"

namespace srnr {

void validate(const ReservoirConfig& cfg) {
    if (cfg.n_neurons < 1) throw ConfigError("reservoir: n_neurons must be at least 1");
    if (cfg.mask.size() != cfg.n_neurons)
        throw ConfigError("reservoir: mask has " + std::to_string(cfg.mask.size()) +
                          " entries for " + std::to_string(cfg.n_neurons) + " neurons");
    if (std::none_of(cfg.mask.weights.begin(), cfg.mask.weights.end(),
                     [](std::uint8_t w) { return w == 1; }))
        throw ConfigError("reservoir: mask must connect at least one neuron");
    if (std::any_of(cfg.mask.weights.begin(), cfg.mask.weights.end(),
                    [](std::uint8_t w) { return w > 1; }))
        throw ConfigError("reservoir: mask must be binary");
    validate(cfg.neuron);
}

ReservoirBankState initial_state(const ReservoirConfig& cfg) {
    return {std::vector<LifState>(cfg.n_neurons, LifState{cfg.neuron.v_rest}), 0};
}

InputMask init_mask(std::size_t n, double density, std::uint64_t seed) {
    if (n < 1) throw ConfigError("init_mask: n must be at least 1");
    if (!(density > 0.0 && density <= 1.0)) throw ConfigError("init_mask: density must lie in (0, 1]");
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(density);
    InputMask mask{std::vector<std::uint8_t>(n), seed, density};
    do {
        for (auto& w : mask.weights) w = coin(rng) ? 1 : 0;
    } while (std::none_of(mask.weights.begin(), mask.weights.end(),
                          [](std::uint8_t w) { return w != 0; }));
    return mask;
}

std::uint8_t effective_weight(const InputMask& mask, std::size_t neuron, std::uint64_t t) {
    const std::size_t n = mask.size();
    const std::size_t shift = rotation_offset(t, n);
    return mask.weights[(neuron % n + n - shift) % n];
}

void bank_step(ReservoirBankState& state, std::uint8_t in_spike, const ReservoirConfig& cfg,
               std::span<std::uint8_t> out) {
    const std::size_t n = cfg.n_neurons;
    std::vector<double> v(n), current(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = state.neurons[i].v;
        current[i] = static_cast<double>(effective_weight(cfg.mask, i, state.t) * in_spike) *
                     cfg.spike_current;
    }
    simd::kernels().lif_step(v.data(), current.data(), out.data(), n, cfg.neuron.coeffs());
    for (std::size_t i = 0; i < n; ++i) state.neurons[i].v = v[i];
    ++state.t;
}

SpikeRaster run_parallel_reservoirs(const SpikeRaster& input,
                                    std::span<const ReservoirConfig> configs) {
    if (input.rows() != configs.size()) {
        std::ostringstream msg;
        msg << "run_parallel_reservoirs: input has " << input.rows() << " rows but "
            << configs.size() << " bank configs were given";
        throw ConfigError(msg.str());
    }
    std::vector<std::size_t> offset(configs.size() + 1, 0);
    for (std::size_t b = 0; b < configs.size(); ++b) {
        validate(configs[b]);
        offset[b + 1] = offset[b] + configs[b].n_neurons;
    }
    const std::size_t total = offset.back();
    const std::size_t steps = input.steps();

    // Banks sharing neuron parameters are stepped as one contiguous group.
    struct Group {
        std::size_t first_bank, last_bank;
    };
    std::vector<Group> groups;
    for (std::size_t b = 0; b < configs.size(); ++b) {
        if (!groups.empty() && configs[groups.back().first_bank].neuron == configs[b].neuron)
            groups.back().last_bank = b + 1;
        else
            groups.push_back({b, b + 1});
    }

    std::vector<double> v(total);
    for (std::size_t b = 0; b < configs.size(); ++b)
        std::fill(v.begin() + static_cast<std::ptrdiff_t>(offset[b]),
                  v.begin() + static_cast<std::ptrdiff_t>(offset[b + 1]), configs[b].neuron.v_rest);
    std::vector<double> current(total);
    Matrix<std::uint8_t> fired(steps, total);
    const auto& k = simd::kernels();

    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t b = 0; b < configs.size(); ++b) {
            const auto& cfg = configs[b];
            const std::size_t n = cfg.n_neurons;
            double* cur = current.data() + offset[b];
            if (input.spikes(b, t) == 0) {
                std::fill(cur, cur + n, 0.0);
                continue;
            }
            const std::size_t shift = rotation_offset(t, n);
            for (std::size_t i = 0; i < n; ++i)
                cur[i] = static_cast<double>(cfg.mask.weights[(i + n - shift) % n]) *
                         cfg.spike_current;
        }
        auto out = fired.row(t);
        for (const auto& g : groups) {
            const std::size_t lo = offset[g.first_bank];
            const std::size_t hi = offset[g.last_bank];
            k.lif_step(v.data() + lo, current.data() + lo, out.data() + lo, hi - lo,
                       configs[g.first_bank].neuron.coeffs());
        }
    }
    return SpikeRaster{transposed(fired), input.dt, RowMeaning::reservoir_neuron};
}

std::vector<ReservoirConfig> make_bank_configs(std::size_t n_banks, std::size_t n_neurons,
                                               double density, std::uint64_t run_seed,
                                               const LifParams& neuron, double spike_current,
                                               bool shared_mask) {
    std::seed_seq seq{run_seed, static_cast<std::uint64_t>(0x5eed)};
    std::vector<std::uint64_t> seeds(n_banks);
    {
        std::vector<std::uint32_t> words(2 * n_banks);
        seq.generate(words.begin(), words.end());
        for (std::size_t b = 0; b < n_banks; ++b)
            seeds[b] = (static_cast<std::uint64_t>(words[2 * b]) << 32) | words[2 * b + 1];
    }
    std::vector<ReservoirConfig> out;
    out.reserve(n_banks);
    for (std::size_t b = 0; b < n_banks; ++b) {
        const std::uint64_t seed = shared_mask ? seeds.front() : seeds[b];
        out.push_back({n_neurons, init_mask(n_neurons, density, seed), neuron, spike_current});
    }
    return out;
}

SpikeRaster downsample_or(const SpikeRaster& raster, std::size_t factor) {
    if (factor < 1) throw ConfigError("downsample_or: factor must be at least 1");
    const std::size_t steps = raster.steps() / factor;
    SpikeRaster out{Matrix<std::uint8_t>(raster.rows(), steps), raster.dt * static_cast<double>(factor),
                    raster.row_meaning};
    for (std::size_t r = 0; r < raster.rows(); ++r)
        for (std::size_t t = 0; t < steps; ++t) {
            std::uint8_t any = 0;
            for (std::size_t k = 0; k < factor; ++k) any |= raster.spikes(r, t * factor + k);
            out.spikes(r, t) = any;
        }
    return out;
}

nlohmann::json to_json(const ReservoirConfig& cfg) {
    std::string bits;
    for (auto w : cfg.mask.weights) bits.push_back(w ? '1' : '0');
    return {{"n_neurons", cfg.n_neurons},
            {"mask", {{"bits", bits}, {"seed", cfg.mask.rng_seed}, {"density", cfg.mask.density}}},
            {"neuron", to_json(cfg.neuron)},
            {"spike_current", cfg.spike_current}};
}

ReservoirConfig reservoir_config_from_json(const nlohmann::json& j) {
    try {
        ReservoirConfig cfg;
        cfg.n_neurons = j.at("n_neurons").get<std::size_t>();
        const auto& m = j.at("mask");
        for (char ch : m.at("bits").get<std::string>()) {
            if (ch != '0' && ch != '1') throw ConfigError("reservoir mask bits must be 0 or 1");
            cfg.mask.weights.push_back(ch == '1');
        }
        cfg.mask.rng_seed = m.value("seed", std::uint64_t{0});
        cfg.mask.density = m.value("density", 0.5);
        cfg.neuron = lif_params_from_json(j.at("neuron"));
        cfg.spike_current = j.value("spike_current", 1.0);
        validate(cfg);
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("reservoir config: ") + e.what());
    }
}

}  // namespace srnr
