#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "srnr/error.hpp"
#include "srnr/reservoir.hpp"

using namespace srnr;

namespace {

ReservoirConfig make_cfg(std::vector<std::uint8_t> bits, LifParams neuron = LifParams::defaults()) {
    const std::size_t n = bits.size();
    return {n, InputMask{std::move(bits), 0, 0.5}, neuron, 1.0};
}

SpikeRaster random_input(std::size_t rows, std::size_t steps, double p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(p);
    SpikeRaster r{Matrix<std::uint8_t>(rows, steps), 1e-3, RowMeaning::encoder_channel};
    for (auto& b : r.spikes.flat()) b = coin(rng) ? 1 : 0;
    return r;
}

// Reference in a co-rotating frame: the mask is fixed and the neuron ring is
// shifted by an explicit 0/1 permutation matrix after every update.
Matrix<std::uint8_t> rotating_frame_reference(const ReservoirConfig& cfg, std::span<const std::uint8_t> input) {
    const std::size_t n = cfg.n_neurons;
    const std::size_t steps = input.size();
    Matrix<double> ring(n, n, 0.0);  // (P x)_j = x_{j+1}
    for (std::size_t j = 0; j < n; ++j) ring(j, (j + 1) % n) = 1.0;
    const auto c = cfg.neuron;
    std::vector<double> u(n, c.v_rest), next(n);
    std::vector<double> fired_frame(n);
    Matrix<std::uint8_t> out(n, steps, 0);
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t j = 0; j < n; ++j) {
            const double cur = cfg.mask.weights[j] * input[t] * cfg.spike_current;
            double v = u[j] + c.dt * (-(u[j] - c.v_rest) / c.tau() + (c.input_gain * cur) / c.c);
            fired_frame[j] = 0.0;
            if (v >= c.v_thr) {
                v = c.v_reset;
                fired_frame[j] = 1.0;
            }
            u[j] = v;
        }
        // Virtual neuron j is physical neuron (j + t) mod n.
        for (std::size_t j = 0; j < n; ++j)
            if (fired_frame[j] != 0.0) out((j + t) % n, t) = 1;
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += ring(j, k) * u[k];
            next[j] = acc;
        }
        u.swap(next);
    }
    return out;
}

}  // namespace

TEST_CASE("init_mask: deterministic, binary, never all zero") {
    const InputMask a = init_mask(10, 0.5, 42);
    const InputMask b = init_mask(10, 0.5, 42);
    CHECK(a == b);
    CHECK(a.size() == 10);
    CHECK(a.rng_seed == 42);
    for (auto w : a.weights) CHECK((w == 0 || w == 1));
    for (std::uint64_t s = 0; s < 2000; ++s) {
        const InputMask m = init_mask(1, 0.1, s);
        CHECK(m.weights[0] == 1);
    }
    CHECK_THROWS_AS(init_mask(0, 0.5, 1), ConfigError);
    CHECK_THROWS_AS(init_mask(10, 0.0, 1), ConfigError);
}

TEST_CASE("init_mask: mean popcount over many seeds is near N p") {
    double total = 0.0;
    const int trials = 10000;
    for (int s = 0; s < trials; ++s) {
        const InputMask m = init_mask(10, 0.5, static_cast<std::uint64_t>(s));
        total += static_cast<double>(std::count(m.weights.begin(), m.weights.end(), 1));
    }
    const double mean = total / trials;
    CHECK(mean >= 4.5);
    CHECK(mean <= 5.5);
}

TEST_CASE("effective_weight rotates by one position per step") {
    const InputMask m{{1, 0, 0, 1, 0}, 0, 0.5};
    CHECK(effective_weight(m, 0, 0) == 1);
    CHECK(effective_weight(m, 1, 1) == 1);  // entry 0 moved to neuron 1
    CHECK(effective_weight(m, 4, 1) == 1);  // entry 3 moved to neuron 4
    CHECK(effective_weight(m, 0, 1) == 0);
    CHECK(effective_weight(m, 0, 2) == 1);  // entry 3 wrapped to neuron 0
    for (std::uint64_t t = 0; t < 40; ++t)
        for (std::size_t i = 0; i < 5; ++i) CHECK(effective_weight(m, i, t) == effective_weight(m, i, t + 5));
    for (std::uint64_t t = 0; t < 10; ++t) {
        int pop = 0;
        for (std::size_t i = 0; i < 5; ++i) pop += effective_weight(m, i, t);
        CHECK(pop == 2);
    }
    CHECK(rotation_offset(13, 5) == 3);
}

TEST_CASE("bank_step: silent input decays the membrane by 1 - dt/tau") {
    ReservoirConfig cfg = make_cfg({1, 1, 1, 1});
    ReservoirBankState st = initial_state(cfg);
    for (auto& n : st.neurons) n.v = 0.4;
    std::vector<std::uint8_t> out(4);
    const double factor = 1.0 - cfg.neuron.dt / cfg.neuron.tau();
    double expect = 0.4;
    for (int k = 0; k < 30; ++k) {
        bank_step(st, 0, cfg, out);
        expect *= factor;
        for (auto& n : st.neurons) CHECK(n.v == doctest::Approx(expect).epsilon(1e-12));
        CHECK(std::count(out.begin(), out.end(), 1) == 0);
    }
    CHECK(st.t == 30);
}

TEST_CASE("bank_step: one input spike lifts connected neurons by dt I / C") {
    ReservoirConfig cfg = make_cfg({1, 0, 1, 0});
    ReservoirBankState st = initial_state(cfg);
    std::vector<std::uint8_t> out(4);
    bank_step(st, 1, cfg, out);
    const double jump = cfg.neuron.dt * cfg.spike_current / cfg.neuron.c;
    CHECK(jump == doctest::Approx(1.0 / 3.0));
    CHECK(st.neurons[0].v == doctest::Approx(jump));
    CHECK(st.neurons[1].v == 0.0);
    CHECK(st.neurons[2].v == doctest::Approx(jump));
    CHECK(st.neurons[3].v == 0.0);
    // Second spike: the mask has rotated by one, so neurons 1 and 3 receive it.
    bank_step(st, 1, cfg, out);
    CHECK(st.neurons[1].v == doctest::Approx(jump));
    CHECK(st.neurons[0].v == doctest::Approx(jump * (1.0 - 1.0 / 15.0)));
}

TEST_CASE("full mask with uniform state keeps all neurons in phase") {
    ReservoirConfig cfg = make_cfg(std::vector<std::uint8_t>(8, 1));
    const SpikeRaster in = random_input(1, 500, 0.6, 9);
    const SpikeRaster out = run_parallel_reservoirs(in, std::span(&cfg, 1));
    REQUIRE(out.total_spikes() > 0);
    for (std::size_t t = 0; t < 500; ++t)
        for (std::size_t i = 1; i < 8; ++i) CHECK(out.spikes(i, t) == out.spikes(0, t));
}

TEST_CASE("run_parallel_reservoirs: shape, zero input, mismatched banks") {
    const LifParams lp = LifParams::defaults();
    const auto cfgs = make_bank_configs(48, 10, 0.5, 7, lp, 1.0);
    const SpikeRaster zero{Matrix<std::uint8_t>(48, 400, 0), 1e-3, RowMeaning::encoder_channel};
    const SpikeRaster out = run_parallel_reservoirs(zero, cfgs);
    CHECK(out.rows() == 480);
    CHECK(out.steps() == 400);
    CHECK(out.row_meaning == RowMeaning::reservoir_neuron);
    CHECK(out.total_spikes() == 0);
    CHECK_THROWS_AS(run_parallel_reservoirs(random_input(47, 10, 0.5, 1), cfgs), ConfigError);
}

TEST_CASE("run_parallel_reservoirs: banks are independent and permute with their inputs") {
    const LifParams lp = LifParams::defaults();
    const auto cfgs = make_bank_configs(6, 10, 0.5, 11, lp, 1.0);
    const SpikeRaster in = random_input(6, 300, 0.5, 12);
    const SpikeRaster out = run_parallel_reservoirs(in, cfgs);

    // Each bank alone matches its slice of the joint run.
    for (std::size_t b = 0; b < 6; ++b) {
        SpikeRaster one{Matrix<std::uint8_t>(1, 300), in.dt, in.row_meaning};
        std::copy(in.spikes.row(b).begin(), in.spikes.row(b).end(), one.spikes.row(0).begin());
        const SpikeRaster solo = run_parallel_reservoirs(one, std::span(&cfgs[b], 1));
        for (std::size_t i = 0; i < 10; ++i)
            for (std::size_t t = 0; t < 300; ++t) CHECK(solo.spikes(i, t) == out.spikes(b * 10 + i, t));
    }

    // Permuting (input row, config) pairs permutes the output blocks.
    std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
    SpikeRaster pin{Matrix<std::uint8_t>(6, 300), in.dt, in.row_meaning};
    std::vector<ReservoirConfig> pcfg;
    for (std::size_t k = 0; k < 6; ++k) {
        std::copy(in.spikes.row(perm[k]).begin(), in.spikes.row(perm[k]).end(), pin.spikes.row(k).begin());
        pcfg.push_back(cfgs[perm[k]]);
    }
    const SpikeRaster pout = run_parallel_reservoirs(pin, pcfg);
    for (std::size_t k = 0; k < 6; ++k)
        for (std::size_t i = 0; i < 10; ++i)
            for (std::size_t t = 0; t < 300; ++t) CHECK(pout.spikes(k * 10 + i, t) == out.spikes(perm[k] * 10 + i, t));

    // Changing one bank's input leaves the others untouched.
    SpikeRaster alt = in;
    for (auto& b : alt.spikes.row(2)) b ^= 1;
    const SpikeRaster aout = run_parallel_reservoirs(alt, cfgs);
    for (std::size_t r = 0; r < 60; ++r) {
        if (r / 10 == 2) continue;
        for (std::size_t t = 0; t < 300; ++t) CHECK(aout.spikes(r, t) == out.spikes(r, t));
    }
}

TEST_CASE("rotating mask equals a fixed mask in a co-rotating neuron frame") {
    std::mt19937_64 rng(101);
    for (std::size_t n : {1u, 2u, 5u, 10u, 17u}) {
        for (int trial = 0; trial < 4; ++trial) {
            ReservoirConfig cfg{n, init_mask(n, 0.5, rng()), LifParams::defaults(), 1.0};
            const SpikeRaster in = random_input(1, 257, 0.55, rng());
            const SpikeRaster got = run_parallel_reservoirs(in, std::span(&cfg, 1));
            const auto ref = rotating_frame_reference(cfg, in.spikes.row(0));
            CHECK(got.spikes == ref);
        }
    }
}

TEST_CASE("bank_step agrees with run_parallel_reservoirs") {
    const auto cfgs = make_bank_configs(3, 7, 0.5, 5, LifParams::defaults(), 1.0);
    const SpikeRaster in = random_input(3, 200, 0.5, 6);
    const SpikeRaster joint = run_parallel_reservoirs(in, cfgs);
    for (std::size_t b = 0; b < 3; ++b) {
        ReservoirBankState st = initial_state(cfgs[b]);
        std::vector<std::uint8_t> out(7);
        for (std::size_t t = 0; t < 200; ++t) {
            bank_step(st, in.spikes(b, t), cfgs[b], out);
            for (std::size_t i = 0; i < 7; ++i) CHECK(out[i] == joint.spikes(b * 7 + i, t));
        }
    }
}

TEST_CASE("make_bank_configs: seeded, distinct per bank, shared option") {
    const LifParams lp = LifParams::defaults();
    const auto a = make_bank_configs(48, 10, 0.5, 1, lp, 1.0);
    const auto b = make_bank_configs(48, 10, 0.5, 1, lp, 1.0);
    const auto c = make_bank_configs(48, 10, 0.5, 2, lp, 1.0);
    CHECK(a == b);
    CHECK(a != c);
    std::size_t distinct = 0;
    for (std::size_t i = 1; i < a.size(); ++i) distinct += a[i].mask.weights != a[0].mask.weights;
    CHECK(distinct > 30);
    const auto s = make_bank_configs(48, 10, 0.5, 1, lp, 1.0, true);
    for (const auto& cfg : s) CHECK(cfg.mask == s[0].mask);
}

TEST_CASE("reservoir config validation and JSON round trip") {
    ReservoirConfig cfg{10, init_mask(10, 0.5, 3), LifParams::defaults(), 1.0};
    CHECK_NOTHROW(validate(cfg));
    CHECK(reservoir_config_from_json(to_json(cfg)) == cfg);
    ReservoirConfig bad = cfg;
    bad.mask.weights.pop_back();
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = cfg;
    std::fill(bad.mask.weights.begin(), bad.mask.weights.end(), 0);
    CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("downsample_or merges consecutive steps") {
    SpikeRaster r{Matrix<std::uint8_t>(1, 7, 0), 0.5e-3, RowMeaning::encoder_channel};
    r.spikes(0, 1) = 1;
    r.spikes(0, 4) = 1;
    r.spikes(0, 5) = 1;
    const SpikeRaster d = downsample_or(r, 2);
    CHECK(d.steps() == 3);
    CHECK(d.dt == doctest::Approx(1e-3));
    CHECK(d.spikes(0, 0) == 1);
    CHECK(d.spikes(0, 1) == 0);
    CHECK(d.spikes(0, 2) == 1);
}

TEST_CASE("mask and rotation corner cases") {
    const InputMask full = init_mask(10, 1.0, 4);
    CHECK(std::count(full.weights.begin(), full.weights.end(), 1) == 10);
    const InputMask onehot{{1, 0, 0, 0, 0, 0, 0, 0, 0, 0}, 0, 0.1};
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(effective_weight(onehot, i, 3) == (i == 3 ? 1 : 0));
        CHECK(effective_weight(onehot, i, 0) == onehot.weights[i]);
        CHECK(effective_weight(onehot, i, 10) == effective_weight(onehot, i, 0));
    }
}

TEST_CASE("single subthreshold spike: no output, then geometric decay") {
    ReservoirConfig cfg = make_cfg({1, 1, 1});
    cfg.spike_current = 1.0;  // jump of 1/3 < v_thr
    ReservoirBankState st = initial_state(cfg);
    std::vector<std::uint8_t> out(3);
    bank_step(st, 1, cfg, out);
    CHECK(std::count(out.begin(), out.end(), 1) == 0);
    double expect = st.neurons[0].v;
    for (int k = 0; k < 50; ++k) {
        bank_step(st, 0, cfg, out);
        CHECK(std::count(out.begin(), out.end(), 1) == 0);
        expect = expect + cfg.neuron.dt * (-expect / cfg.neuron.tau());
        CHECK(st.neurons[0].v == expect);
    }
}

TEST_CASE("full mask under sustained input spikes: in phase at the charging-curve period") {
    ReservoirConfig cfg = make_cfg(std::vector<std::uint8_t>(10, 1));
    SpikeRaster in{Matrix<std::uint8_t>(1, 200, 1), 1e-3, RowMeaning::encoder_channel};
    const SpikeRaster out = run_parallel_reservoirs(in, std::span(&cfg, 1));
    // Per-step drive I = 1 gives I R = 5; V(t) = IR (1 - e^{-t/tau}) reaches 0.5 at tau ln(10/9).
    const double t_cont = cfg.neuron.tau() * std::log(5.0 / 4.5);
    std::size_t first = 0;
    while (out.spikes(0, first) == 0) ++first;
    CHECK(std::abs(static_cast<double>(first + 1) * cfg.neuron.dt - t_cont) <= cfg.neuron.dt);
    for (std::size_t i = 1; i < 10; ++i) CHECK(out.spikes.row(i)[first] == 1);
    for (std::size_t t = 0; t < 200; ++t)
        for (std::size_t i = 1; i < 10; ++i) CHECK(out.spikes(i, t) == out.spikes(0, t));
}
