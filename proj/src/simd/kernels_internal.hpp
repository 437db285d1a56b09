#pragma once

#include "srnr/simd/kernels.hpp"

namespace srnr::simd::detail {

// Shared scalar bodies so the vector variants can finish remainders with
// exactly the reference arithmetic.

inline std::uint8_t lif_update(double& v, double current, const LifCoeffs& c) noexcept {
    const double leak = -(v - c.v_rest) / c.tau;
    const double drive = (c.gain * current) / c.cap;
    v = v + c.dt * (leak + drive);
    if (v >= c.v_thr) {
        v = c.v_reset;
        return 1;
    }
    return 0;
}

inline double biquad_tick(const Biquad& s, double& z1, double& z2, double x) noexcept {
    const double y = s.b0 * x + z1;
    z1 = (s.b1 * x - s.a1 * y) + z2;
    z2 = s.b2 * x - s.a2 * y;
    return y;
}

void scalar_biquad_lanes(const Biquad* sections, std::size_t n_sections, double* state,
                         double* data, std::size_t steps, std::size_t lanes,
                         std::size_t lane_begin) noexcept;

const KernelTable* avx2_table() noexcept;

}  // namespace srnr::simd::detail
