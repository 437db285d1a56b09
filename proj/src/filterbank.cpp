#include "srnr/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "srnr/error.hpp"

namespace srnr {
namespace {

using cplx = std::complex<double>;

cplx bilinear(cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

double prewarp(double f, double fs) { return 2.0 * fs * std::tan(std::numbers::pi * f / fs); }

/// Analog Butterworth lowpass prototype poles (unit cutoff), upper half plane
/// first of each conjugate pair; a real pole is returned once.
std::vector<cplx> prototype_poles(int n) {
    std::vector<cplx> poles;
    for (int k = 0; k < n; ++k) {
        const double theta = std::numbers::pi * (2.0 * k + n + 1) / (2.0 * n);
        poles.push_back(std::polar(1.0, theta));
    }
    return poles;
}

/// Groups digital poles into conjugate pairs for second-order sections.
std::vector<std::pair<cplx, cplx>> conjugate_pairs(std::vector<cplx> poles) {
    std::vector<std::pair<cplx, cplx>> pairs;
    std::vector<cplx> reals;
    std::vector<cplx> uppers;
    for (const cplx& p : poles) {
        if (std::abs(p.imag()) < 1e-12 * std::max(1.0, std::abs(p)))
            reals.push_back({p.real(), 0.0});
        else if (p.imag() > 0.0)
            uppers.push_back(p);
    }
    for (const cplx& p : uppers) pairs.emplace_back(p, std::conj(p));
    std::sort(reals.begin(), reals.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
    for (std::size_t i = 0; i + 1 < reals.size(); i += 2) pairs.emplace_back(reals[i], reals[i + 1]);
    return pairs;
}

simd::Biquad section(std::pair<cplx, cplx> poles, double zero_a, double zero_b) {
    // Numerator (1 - zero_a z^-1)(1 - zero_b z^-1), denominator from poles.
    const cplx sum = poles.first + poles.second;
    const cplx prod = poles.first * poles.second;
    return simd::Biquad{1.0, -(zero_a + zero_b), zero_a * zero_b, -sum.real(), prod.real()};
}

void normalize_gain(BiquadCascade& cascade, double f, double fs) {
    const double g = std::abs(cascade.response(f, fs));
    // Spread the scale evenly so no section carries a tiny or huge gain.
    const double per_section = std::pow(g, -1.0 / static_cast<double>(cascade.sections.size()));
    for (auto& s : cascade.sections) {
        s.b0 *= per_section;
        s.b1 *= per_section;
        s.b2 *= per_section;
    }
}

}  // namespace

std::vector<cplx> BiquadCascade::poles() const {
    std::vector<cplx> out;
    for (const auto& s : sections) {
        // z^2 + a1 z + a2 = 0
        const cplx disc = std::sqrt(cplx(s.a1 * s.a1 - 4.0 * s.a2, 0.0));
        out.push_back((-s.a1 + disc) / 2.0);
        out.push_back((-s.a1 - disc) / 2.0);
    }
    return out;
}

cplx BiquadCascade::response(double f, double fs) const {
    const cplx zinv = std::polar(1.0, -2.0 * std::numbers::pi * f / fs);
    cplx h = 1.0;
    for (const auto& s : sections) {
        const cplx num = s.b0 + zinv * (s.b1 + zinv * s.b2);
        const cplx den = 1.0 + zinv * (s.a1 + zinv * s.a2);
        h *= num / den;
    }
    return h;
}

std::vector<BandSpec> default_bands(double sample_rate) {
    const double nyquist = sample_rate / 2.0;
    const double edges[] = {0.0, 100.0, 250.0, 500.0, nyquist};
    std::vector<BandSpec> bands;
    for (int b = 0; b < 4; ++b) bands.push_back({edges[b], edges[b + 1], 4, sample_rate});
    return bands;
}

BiquadCascade design_butterworth(const BandSpec& spec) {
    const double fs = spec.sample_rate;
    const double nyquist = fs / 2.0;
    std::ostringstream where;
    where << "band (" << spec.low_cut << ", " << spec.high_cut << ") Hz @ " << fs << " Hz: ";
    if (fs <= 0.0) throw ConfigError(where.str() + "sample rate must be positive");
    if (spec.order < 2 || spec.order % 2 != 0)
        throw ConfigError(where.str() + "order must be even and at least 2");
    if (!(spec.low_cut >= 0.0 && spec.low_cut < spec.high_cut))
        throw ConfigError(where.str() + "need 0 <= low_cut < high_cut");
    if (spec.high_cut > nyquist) throw ConfigError(where.str() + "high_cut exceeds Nyquist");
    if (spec.low_cut == 0.0 && spec.high_cut == nyquist)
        throw ConfigError(where.str() + "band covers 0..Nyquist, nothing to filter");

    BiquadCascade cascade;
    std::vector<cplx> digital;
    double zero_at = 0.0;  // +1 (DC) or -1 (Nyquist) zeros, bandpass uses both
    double norm_freq = 0.0;

    if (spec.low_cut == 0.0) {
        cascade.kind = BandKind::lowpass;
        const double wc = prewarp(spec.high_cut, fs);
        for (const cplx& p : prototype_poles(spec.order)) digital.push_back(bilinear(p * wc, fs));
        zero_at = -1.0;
        norm_freq = 0.0;
    } else if (spec.high_cut == nyquist) {
        cascade.kind = BandKind::highpass;
        const double wc = prewarp(spec.low_cut, fs);
        for (const cplx& p : prototype_poles(spec.order)) digital.push_back(bilinear(wc / p, fs));
        zero_at = 1.0;
        norm_freq = nyquist;
    } else {
        cascade.kind = BandKind::bandpass;
        const double w1 = prewarp(spec.low_cut, fs);
        const double w2 = prewarp(spec.high_cut, fs);
        const double bw = w2 - w1;
        const double w0sq = w1 * w2;
        for (const cplx& p : prototype_poles(spec.order / 2)) {
            const cplx half = p * bw / 2.0;
            const cplx root = std::sqrt(half * half - w0sq);
            digital.push_back(bilinear(half + root, fs));
            digital.push_back(bilinear(half - root, fs));
        }
        // The analog center sqrt(w1 w2) maps back to this digital frequency.
        norm_freq = fs / std::numbers::pi * std::atan(std::sqrt(w0sq) / (2.0 * fs));
    }

    for (const auto& pair : conjugate_pairs(digital)) {
        if (cascade.kind == BandKind::bandpass)
            cascade.sections.push_back(section(pair, 1.0, -1.0));
        else
            cascade.sections.push_back(section(pair, zero_at, zero_at));
    }
    normalize_gain(cascade, norm_freq, fs);
    return cascade;
}

std::vector<double> apply_filter(const BiquadCascade& cascade, std::span<const double> signal) {
    std::vector<double> out(signal.begin(), signal.end());
    std::vector<double> state(cascade.sections.size() * 2, 0.0);
    simd::kernels().biquad_lanes(cascade.sections.data(), cascade.sections.size(), state.data(),
                                 out.data(), out.size(), 1);
    return out;
}

std::vector<double> full_wave_rectify(std::span<const double> signal) {
    std::vector<double> out(signal.size());
    std::transform(signal.begin(), signal.end(), out.begin(), [](double x) { return std::abs(x); });
    return out;
}

Matrix<double> expand_channels(const Matrix<double>& window,
                               std::span<const BiquadCascade> bands) {
    const std::size_t channels = window.rows();
    const std::size_t steps = window.cols();
    const Matrix<double> time_major = transposed(window);
    Matrix<double> out(bands.size() * channels, steps);
    Matrix<double> work;
    std::vector<double> state;

    for (std::size_t b = 0; b < bands.size(); ++b) {
        const auto& sections = bands[b].sections;
        work = time_major;
        state.assign(sections.size() * 2 * channels, 0.0);
        simd::kernels().biquad_lanes(sections.data(), sections.size(), state.data(), work.data(),
                                     steps, channels);
        for (std::size_t t = 0; t < steps; ++t)
            for (std::size_t c = 0; c < channels; ++c)
                out(b * channels + c, t) = std::abs(work(t, c));
    }
    return out;
}

nlohmann::json to_json(const BiquadCascade& cascade, const BandSpec& spec) {
    nlohmann::json sections = nlohmann::json::array();
    for (const auto& s : cascade.sections)
        sections.push_back({{"b", {s.b0, s.b1, s.b2}}, {"a", {1.0, s.a1, s.a2}}});
    const char* kind = cascade.kind == BandKind::lowpass    ? "lowpass"
                       : cascade.kind == BandKind::highpass ? "highpass"
                                                            : "bandpass";
    return {{"kind", kind},
            {"low_cut", spec.low_cut},
            {"high_cut", spec.high_cut},
            {"order", spec.order},
            {"sample_rate", spec.sample_rate},
            {"sections", sections}};
}

}  // namespace srnr
