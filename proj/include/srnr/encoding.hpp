#pragma once

// LIF spike encoding of rectified band signals, with gain calibration that
// holds per-channel firing rates under a cap.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "srnr/matrix.hpp"
#include "srnr/simd/kernels.hpp"

namespace srnr {

/// Leaky integrate-and-fire constants. tau = r * c.
struct LifParams {
    double r = 5.0;
    double c = 3e-3;
    double dt = 1e-3;
    double v_thr = 0.5;
    double v_reset = 0.0;
    double v_rest = 0.0;
    double input_gain = 1.0;

    double tau() const noexcept { return r * c; }

    /// R=5, C=3e-3 F, dt=1 ms, threshold 0.5 V.
    static LifParams defaults() { return {}; }

    /// Encoder defaults: the reference membrane with dt equal to the sampling period.
    static LifParams encoder(double sample_rate) {
        LifParams p;
        p.dt = 1.0 / sample_rate;
        return p;
    }

    simd::LifCoeffs coeffs() const noexcept {
        return {dt, tau(), c, input_gain, v_rest, v_thr, v_reset};
    }

    friend bool operator==(const LifParams&, const LifParams&) = default;
};

/// Throws ConfigError unless tau > 0, dt > 0, v_thr > v_reset and dt/tau < 1.
void validate(const LifParams& p);

struct LifState {
    double v = 0.0;
};

enum class RowMeaning { encoder_channel, reservoir_neuron };

/// Binary spike matrix, one byte per entry (0 or 1).
struct SpikeRaster {
    Matrix<std::uint8_t> spikes;  // [rows x steps]
    double dt = 0.0;
    RowMeaning row_meaning = RowMeaning::encoder_channel;

    std::size_t rows() const noexcept { return spikes.rows(); }
    std::size_t steps() const noexcept { return spikes.cols(); }
    std::uint64_t total_spikes() const noexcept;

    friend bool operator==(const SpikeRaster&, const SpikeRaster&) = default;
};

/// One explicit-Euler step with hard reset. Returns the emitted spike.
std::uint8_t lif_step(LifState& state, double current, const LifParams& params);

/// Iterates lif_step from v_rest. Throws DataError on a negative sample.
std::vector<std::uint8_t> encode_channel(std::span<const double> signal, const LifParams& params);

/// Encodes every row of a rectified band matrix in parallel lanes.
SpikeRaster encode_window(const Matrix<double>& rectified, const LifParams& params);

/// Encodes G equal contiguous row blocks, block g with group_params[g]. Throws
/// ConfigError unless G divides the row count and every group has the same dt.
SpikeRaster encode_window(const Matrix<double>& rectified, std::span<const LifParams> group_params);

/// count / (len * dt). Throws DataError for an empty train.
double firing_rate(std::span<const std::uint8_t> train, double dt);

struct CalibrationResult {
    LifParams params;
    double max_rate = 0.0;       // peak per-window, per-channel rate at the returned gain
    int iterations = 0;
    bool all_zero_corpus = false;  // gain left unchanged
    bool reached_lower_band = false;  // max_rate > rate_cap / 2
};

/// Peak firing rate over all rows of all windows for the given parameters.
double peak_rate(std::span<const Matrix<double>> corpus, const LifParams& params);

/// Bisects the shared input gain so the peak per-window per-channel rate over
/// the corpus is <= rate_cap, stopping within 5 Hz of the cap or after 40
/// bisection steps. Throws DataError for an empty corpus.
CalibrationResult calibrate_encoder(std::span<const Matrix<double>> corpus, LifParams params,
                                    double rate_cap);

// Raster serialization. The binary layout is:
//   8 bytes  magic "SRNRSPK1"
//   4 bytes  header length n, little endian
//   n bytes  JSON header {"dt", "rows", "steps", "row_meaning"}
//   ceil(rows*steps/8) bytes of spikes, row-major, bit k of the stream in
//   byte k/8 at position k%8 (LSB first)
void write_raster(std::ostream& out, const SpikeRaster& raster);
SpikeRaster read_raster(std::istream& in);
void write_raster_csv(std::ostream& out, const SpikeRaster& raster);

std::string to_string(RowMeaning m);
RowMeaning row_meaning_from_string(const std::string& s);

nlohmann::json to_json(const LifParams& p);
nlohmann::json to_json(const CalibrationResult& r);
LifParams lif_params_from_json(const nlohmann::json& j, LifParams defaults = {});

}  // namespace srnr
