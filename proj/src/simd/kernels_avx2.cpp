#include "kernels_internal.hpp"

#if defined(SRNR_HAVE_AVX2_TU) && defined(__AVX2__)

#include <immintrin.h>

namespace srnr::simd {
namespace {

void lif_step_avx2(double* v, const double* current, std::uint8_t* spikes, std::size_t n,
                   const LifCoeffs& c) {
    const __m256d dt = _mm256_set1_pd(c.dt);
    const __m256d tau = _mm256_set1_pd(c.tau);
    const __m256d cap = _mm256_set1_pd(c.cap);
    const __m256d gain = _mm256_set1_pd(c.gain);
    const __m256d v_rest = _mm256_set1_pd(c.v_rest);
    const __m256d v_thr = _mm256_set1_pd(c.v_thr);
    const __m256d v_reset = _mm256_set1_pd(c.v_reset);
    const __m256d sign = _mm256_set1_pd(-0.0);

    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vv = _mm256_loadu_pd(v + i);
        const __m256d cur = _mm256_loadu_pd(current + i);
        const __m256d leak = _mm256_div_pd(_mm256_xor_pd(_mm256_sub_pd(vv, v_rest), sign), tau);
        const __m256d drive = _mm256_div_pd(_mm256_mul_pd(gain, cur), cap);
        vv = _mm256_add_pd(vv, _mm256_mul_pd(dt, _mm256_add_pd(leak, drive)));
        const __m256d fired = _mm256_cmp_pd(vv, v_thr, _CMP_GE_OQ);
        vv = _mm256_blendv_pd(vv, v_reset, fired);
        _mm256_storeu_pd(v + i, vv);
        const int m = _mm256_movemask_pd(fired);
        spikes[i + 0] = static_cast<std::uint8_t>(m & 1);
        spikes[i + 1] = static_cast<std::uint8_t>((m >> 1) & 1);
        spikes[i + 2] = static_cast<std::uint8_t>((m >> 2) & 1);
        spikes[i + 3] = static_cast<std::uint8_t>((m >> 3) & 1);
    }
    for (; i < n; ++i) spikes[i] = detail::lif_update(v[i], current[i], c);
}

void biquad_lanes_avx2(const Biquad* sections, std::size_t n_sections, double* state,
                       double* data, std::size_t steps, std::size_t lanes) {
    std::size_t lane = 0;
    for (; lane + 4 <= lanes; lane += 4) {
        for (std::size_t t = 0; t < steps; ++t) {
            __m256d x = _mm256_loadu_pd(data + t * lanes + lane);
            for (std::size_t s = 0; s < n_sections; ++s) {
                const Biquad& q = sections[s];
                double* z1p = state + (s * 2 + 0) * lanes + lane;
                double* z2p = state + (s * 2 + 1) * lanes + lane;
                const __m256d z1 = _mm256_loadu_pd(z1p);
                const __m256d z2 = _mm256_loadu_pd(z2p);
                const __m256d y = _mm256_add_pd(_mm256_mul_pd(_mm256_set1_pd(q.b0), x), z1);
                const __m256d n1 = _mm256_add_pd(
                    _mm256_sub_pd(_mm256_mul_pd(_mm256_set1_pd(q.b1), x),
                                  _mm256_mul_pd(_mm256_set1_pd(q.a1), y)),
                    z2);
                const __m256d n2 = _mm256_sub_pd(_mm256_mul_pd(_mm256_set1_pd(q.b2), x),
                                                 _mm256_mul_pd(_mm256_set1_pd(q.a2), y));
                _mm256_storeu_pd(z1p, n1);
                _mm256_storeu_pd(z2p, n2);
                x = y;
            }
            _mm256_storeu_pd(data + t * lanes + lane, x);
        }
    }
    detail::scalar_biquad_lanes(sections, n_sections, state, data, steps, lanes, lane);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
        acc1 = _mm256_add_pd(acc1,
                             _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
    double acc = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d r = _mm256_add_pd(_mm256_loadu_pd(y + i),
                                        _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, r);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

std::uint64_t count_ones_avx2(const std::uint8_t* bits, std::size_t n) {
    const __m256i zero = _mm256_setzero_si256();
    std::uint64_t total = 0;
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(bits + i));
        const unsigned zeros =
            static_cast<unsigned>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(v, zero)));
        total += 32u - static_cast<unsigned>(__builtin_popcount(zeros));
    }
    for (; i < n; ++i) total += bits[i] != 0;
    return total;
}

constexpr KernelTable kAvx2{
    "avx2", lif_step_avx2, biquad_lanes_avx2, dot_avx2, axpy_avx2, count_ones_avx2,
};

}  // namespace

namespace detail {
const KernelTable* avx2_table() noexcept { return &kAvx2; }
}  // namespace detail

}  // namespace srnr::simd

#else

namespace srnr::simd::detail {
const KernelTable* avx2_table() noexcept { return nullptr; }
}  // namespace srnr::simd::detail

#endif
