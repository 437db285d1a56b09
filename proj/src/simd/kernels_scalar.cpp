#include "kernels_internal.hpp"

namespace srnr::simd {
namespace detail {

void scalar_biquad_lanes(const Biquad* sections, std::size_t n_sections, double* state,
                         double* data, std::size_t steps, std::size_t lanes,
                         std::size_t lane_begin) noexcept {
    for (std::size_t lane = lane_begin; lane < lanes; ++lane) {
        for (std::size_t t = 0; t < steps; ++t) {
            double x = data[t * lanes + lane];
            for (std::size_t s = 0; s < n_sections; ++s) {
                double& z1 = state[(s * 2 + 0) * lanes + lane];
                double& z2 = state[(s * 2 + 1) * lanes + lane];
                x = biquad_tick(sections[s], z1, z2, x);
            }
            data[t * lanes + lane] = x;
        }
    }
}

}  // namespace detail

namespace {

void lif_step_scalar(double* v, const double* current, std::uint8_t* spikes, std::size_t n,
                     const LifCoeffs& c) {
    for (std::size_t i = 0; i < n; ++i) spikes[i] = detail::lif_update(v[i], current[i], c);
}

void biquad_lanes_scalar(const Biquad* sections, std::size_t n_sections, double* state,
                         double* data, std::size_t steps, std::size_t lanes) {
    detail::scalar_biquad_lanes(sections, n_sections, state, data, steps, lanes, 0);
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

std::uint64_t count_ones_scalar(const std::uint8_t* bits, std::size_t n) {
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < n; ++i) total += bits[i] != 0;
    return total;
}

constexpr KernelTable kScalar{
    "scalar", lif_step_scalar, biquad_lanes_scalar, dot_scalar, axpy_scalar, count_ones_scalar,
};

}  // namespace

const KernelTable& scalar_kernels() noexcept { return kScalar; }

}  // namespace srnr::simd
