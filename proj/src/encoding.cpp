#include "srnr/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "srnr/error.hpp"

namespace srnr {

void validate(const LifParams& p) {
    std::ostringstream msg;
    if (!(p.r > 0.0 && p.c > 0.0)) msg << "r and c must be positive; ";
    if (!(p.dt > 0.0)) msg << "dt must be positive; ";
    if (!(p.v_thr > p.v_reset)) msg << "v_thr must exceed v_reset; ";
    if (p.r > 0.0 && p.c > 0.0 && !(p.dt / p.tau() < 1.0)) msg << "dt/tau must be below 1; ";
    if (!(p.input_gain >= 0.0)) msg << "input_gain must be non-negative; ";
    if (!msg.str().empty()) throw ConfigError("LIF parameters: " + msg.str());
}

std::uint64_t SpikeRaster::total_spikes() const noexcept {
    return simd::kernels().count_ones(spikes.data(), spikes.size());
}

std::uint8_t lif_step(LifState& state, double current, const LifParams& params) {
    std::uint8_t spike = 0;
    const auto c = params.coeffs();
    simd::scalar_kernels().lif_step(&state.v, &current, &spike, 1, c);
    return spike;
}

std::vector<std::uint8_t> encode_channel(std::span<const double> signal, const LifParams& params) {
    validate(params);
    for (std::size_t i = 0; i < signal.size(); ++i) {
        if (signal[i] < 0.0) {
            throw DataError("encode_channel: negative sample " + std::to_string(signal[i]) +
                            " at index " + std::to_string(i) + " (input must be rectified)");
        }
    }
    std::vector<std::uint8_t> out(signal.size());
    LifState state{params.v_rest};
    for (std::size_t t = 0; t < signal.size(); ++t) out[t] = lif_step(state, signal[t], params);
    return out;
}

SpikeRaster encode_window(const Matrix<double>& rectified, const LifParams& params) {
    const std::size_t rows = rectified.rows();
    const std::size_t steps = rectified.cols();
    const Matrix<double> time_major = transposed(rectified);
    const auto coeffs = params.coeffs();
    const auto& k = simd::kernels();

    std::vector<double> v(rows, params.v_rest);
    Matrix<std::uint8_t> fired(steps, rows);
    for (std::size_t t = 0; t < steps; ++t)
        k.lif_step(v.data(), time_major.row(t).data(), fired.row(t).data(), rows, coeffs);

    return SpikeRaster{transposed(fired), params.dt, RowMeaning::encoder_channel};
}

SpikeRaster encode_window(const Matrix<double>& rectified, std::span<const LifParams> group_params) {
    const std::size_t groups = group_params.size();
    const std::size_t rows = rectified.rows();
    if (groups == 0 || rows % groups != 0)
        throw ConfigError("encode_window: " + std::to_string(groups) + " parameter groups for " +
                          std::to_string(rows) + " rows");
    for (const auto& p : group_params)
        if (p.dt != group_params.front().dt) throw ConfigError("encode_window: groups differ in dt");
    if (groups == 1) return encode_window(rectified, group_params.front());

    const std::size_t block = rows / groups;
    const std::size_t steps = rectified.cols();
    const Matrix<double> time_major = transposed(rectified);
    const auto& k = simd::kernels();
    std::vector<simd::LifCoeffs> coeffs;
    std::vector<double> v(rows);
    for (std::size_t g = 0; g < groups; ++g) {
        coeffs.push_back(group_params[g].coeffs());
        std::fill_n(v.begin() + static_cast<std::ptrdiff_t>(g * block), block, group_params[g].v_rest);
    }
    Matrix<std::uint8_t> fired(steps, rows);
    for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t g = 0; g < groups; ++g)
            k.lif_step(v.data() + g * block, time_major.row(t).data() + g * block,
                       fired.row(t).data() + g * block, block, coeffs[g]);
    return SpikeRaster{transposed(fired), group_params.front().dt, RowMeaning::encoder_channel};
}

double firing_rate(std::span<const std::uint8_t> train, double dt) {
    if (train.empty()) throw DataError("firing_rate: empty spike train");
    const auto count = simd::kernels().count_ones(train.data(), train.size());
    return static_cast<double>(count) / (static_cast<double>(train.size()) * dt);
}

double peak_rate(std::span<const Matrix<double>> corpus, const LifParams& params) {
    double peak = 0.0;
    for (const auto& window : corpus) {
        if (window.cols() == 0) continue;
        const SpikeRaster r = encode_window(window, params);
        for (std::size_t row = 0; row < r.rows(); ++row)
            peak = std::max(peak, firing_rate(r.spikes.row(row), params.dt));
    }
    return peak;
}

CalibrationResult calibrate_encoder(std::span<const Matrix<double>> corpus, LifParams params,
                                    double rate_cap) {
    validate(params);
    if (corpus.empty()) throw DataError("calibrate_encoder: empty corpus");
    if (!(rate_cap > 0.0)) throw ConfigError("calibrate_encoder: rate_cap must be positive");

    CalibrationResult result;
    const bool all_zero = std::all_of(corpus.begin(), corpus.end(), [](const Matrix<double>& m) {
        return std::all_of(m.flat().begin(), m.flat().end(), [](double x) { return x == 0.0; });
    });
    if (all_zero) {
        result.params = params;
        result.all_zero_corpus = true;
        return result;
    }

    constexpr double kTolerance = 5.0;
    constexpr int kMaxBisections = 40;
    constexpr int kMaxBracketSteps = 64;

    auto rate_at = [&](double gain) {
        LifParams p = params;
        p.input_gain = gain;
        return peak_rate(corpus, p);
    };

    // Bracket: rate(lo) <= cap < rate(hi), or hi == 0 when the cap is never exceeded.
    double lo = 0.0, lo_rate = 0.0, hi = 0.0;
    double g = params.input_gain > 0.0 ? params.input_gain : 1.0;
    double rate = rate_at(g);
    ++result.iterations;
    if (rate <= rate_cap) {
        lo = g;
        lo_rate = rate;
        for (int i = 0; i < kMaxBracketSteps && hi == 0.0; ++i) {
            g *= 2.0;
            rate = rate_at(g);
            ++result.iterations;
            if (rate > rate_cap) {
                hi = g;
            } else {
                lo = g;
                lo_rate = rate;
            }
        }
    } else {
        hi = g;
        for (int i = 0; i < kMaxBracketSteps; ++i) {
            g *= 0.5;
            rate = rate_at(g);
            ++result.iterations;
            if (rate <= rate_cap) {
                lo = g;
                lo_rate = rate;
                break;
            }
            hi = g;
        }
    }

    if (hi > 0.0) {
        for (int i = 0; i < kMaxBisections && rate_cap - lo_rate > kTolerance; ++i) {
            const double mid = 0.5 * (lo + hi);
            rate = rate_at(mid);
            ++result.iterations;
            if (rate <= rate_cap) {
                lo = mid;
                lo_rate = rate;
            } else {
                hi = mid;
            }
        }
    }

    result.params = params;
    result.params.input_gain = lo;
    result.max_rate = lo_rate;
    result.reached_lower_band = lo_rate > rate_cap / 2.0;
    return result;
}

std::string to_string(RowMeaning m) {
    return m == RowMeaning::encoder_channel ? "encoder-channel" : "reservoir-neuron";
}

RowMeaning row_meaning_from_string(const std::string& s) {
    if (s == "encoder-channel") return RowMeaning::encoder_channel;
    if (s == "reservoir-neuron") return RowMeaning::reservoir_neuron;
    throw DataError("unknown raster row_meaning '" + s + "'");
}

nlohmann::json to_json(const LifParams& p) {
    return {{"r", p.r},          {"c", p.c},           {"dt", p.dt},
            {"v_thr", p.v_thr},  {"v_reset", p.v_reset}, {"v_rest", p.v_rest},
            {"input_gain", p.input_gain}};
}

LifParams lif_params_from_json(const nlohmann::json& j, LifParams p) {
    p.r = j.value("r", p.r);
    p.c = j.value("c", p.c);
    p.dt = j.value("dt", p.dt);
    p.v_thr = j.value("v_thr", p.v_thr);
    p.v_reset = j.value("v_reset", p.v_reset);
    p.v_rest = j.value("v_rest", p.v_rest);
    p.input_gain = j.value("input_gain", p.input_gain);
    return p;
}

nlohmann::json to_json(const CalibrationResult& r) {
    return {{"input_gain", r.params.input_gain},
            {"max_rate", r.max_rate},
            {"iterations", r.iterations},
            {"all_zero_corpus", r.all_zero_corpus},
            {"reached_lower_band", r.reached_lower_band}};
}

}  // namespace srnr
