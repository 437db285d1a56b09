#pragma once

// Data-parallel inner loops behind the filterbank, the LIF encoder, the
// reservoir banks and the readout. Each kernel has a scalar reference and an
// AVX2 variant; one table is selected at runtime.
//
// Elementwise kernels (lif_step, biquad_lanes, axpy, count_ones) produce
// bit-identical results across variants. Reductions (dot) may differ in the
// last bits because the vector variant reassociates the sum.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace srnr::simd {

/// Explicit-Euler LIF constants. tau and cap are kept separate (not folded
/// into one factor) so every variant evaluates the same expression tree.
struct LifCoeffs {
    double dt;
    double tau;
    double cap;
    double gain;
    double v_rest;
    double v_thr;
    double v_reset;
};

/// Second-order section, transposed direct form II, a0 normalized to 1.
struct Biquad {
    double b0, b1, b2, a1, a2;
};

struct KernelTable {
    const char* name;

    /// v[i] <- v[i] + dt*(-(v[i]-v_rest)/tau + gain*current[i]/cap);
    /// spikes[i] = v[i] >= v_thr, in which case v[i] <- v_reset.
    void (*lif_step)(double* v, const double* current, std::uint8_t* spikes,
                     std::size_t n, const LifCoeffs& c);

    /// Filters `lanes` independent signals stored time-major in `data`
    /// ([steps x lanes], in place) through the same cascade. `state` holds
    /// 2 registers per section per lane: state[(s*2 + k)*lanes + lane].
    void (*biquad_lanes)(const Biquad* sections, std::size_t n_sections, double* state,
                         double* data, std::size_t steps, std::size_t lanes);

    double (*dot)(const double* a, const double* b, std::size_t n);

    /// y += a*x
    void (*axpy)(double a, const double* x, double* y, std::size_t n);

    /// Number of nonzero bytes.
    std::uint64_t (*count_ones)(const std::uint8_t* bits, std::size_t n);
};

enum class Isa { scalar, avx2 };

const KernelTable& scalar_kernels() noexcept;

/// Nullptr when the AVX2 translation unit was not built or the CPU lacks AVX2.
const KernelTable* avx2_kernels() noexcept;

/// Active table. Defaults to the best supported ISA, overridable with the
/// SRNR_KERNEL environment variable ("scalar" or "avx2") or select_isa().
const KernelTable& kernels() noexcept;

/// Returns false (and leaves the selection unchanged) if `isa` is unsupported.
bool select_isa(Isa isa) noexcept;

/// Parses "scalar" / "avx2" / "auto" and selects; false on unknown names.
bool select_isa(std::string_view name) noexcept;

std::string_view active_isa_name() noexcept;

}  // namespace srnr::simd
