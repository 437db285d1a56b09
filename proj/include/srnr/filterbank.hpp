#pragma once

// Butterworth band filters realized as cascaded second-order sections, and the
// rectifying filterbank that expands C channels to 4*C band envelopes.

#include <complex>
#include <span>
#include <vector>

#include "json.hpp"

#include "srnr/matrix.hpp"
#include "srnr/simd/kernels.hpp"

namespace srnr {

/// One band. low_cut == 0 designs a lowpass at high_cut; high_cut equal to
/// Nyquist designs a highpass at low_cut. order counts poles and must be even.
struct BandSpec {
    double low_cut = 0.0;
    double high_cut = 0.0;
    int order = 4;
    double sample_rate = 2000.0;
};

enum class BandKind { lowpass, bandpass, highpass };

struct BiquadCascade {
    BandKind kind = BandKind::bandpass;
    std::vector<simd::Biquad> sections;

    /// Digital poles of every section (both roots of 1 + a1 z^-1 + a2 z^-2).
    std::vector<std::complex<double>> poles() const;

    /// Complex response at frequency f (Hz) for sampling rate fs.
    std::complex<double> response(double f, double fs) const;
};

/// Bands split at {0, 100, 250, 500, 1000} Hz for a 2 kHz recording.
std::vector<BandSpec> default_bands(double sample_rate = 2000.0);

/// Throws ConfigError for an invalid spec (edges out of order, high_cut above
/// Nyquist, odd order, or a 0..Nyquist band).
BiquadCascade design_butterworth(const BandSpec& spec);

/// Causal filtering from zero state.
std::vector<double> apply_filter(const BiquadCascade& cascade, std::span<const double> signal);

std::vector<double> full_wave_rectify(std::span<const double> signal);

/// Row (b * channels + c) holds |filter_b(channel c)|. Filter state starts at
/// zero for every call.
Matrix<double> expand_channels(const Matrix<double>& window,
                               std::span<const BiquadCascade> bands);

nlohmann::json to_json(const BiquadCascade& cascade, const BandSpec& spec);

}  // namespace srnr
