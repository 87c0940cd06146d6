// Compiled with -mavx2 on x86 targets only; reached through avx2_kernels()
// after a runtime CPU check.

#include "ppgsleep/kernels/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

namespace ppgsleep::kernels {
namespace {

inline double combine_lanes(__m256d acc) {
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double sum(std::span<const double> x) {
    const std::size_t n = x.size();
    const std::size_t body = n - n % 4;
    const double* p = x.data();
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(p + i));
    double s = combine_lanes(acc);
    for (std::size_t i = body; i < n; ++i) s += p[i];
    return s;
}

double sum_sq_dev(std::span<const double> x, double mean) {
    const std::size_t n = x.size();
    const std::size_t body = n - n % 4;
    const double* p = x.data();
    const __m256d m = _mm256_set1_pd(mean);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(p + i), m);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    double s = combine_lanes(acc);
    for (std::size_t i = body; i < n; ++i) {
        const double d = p[i] - mean;
        s += d * d;
    }
    return s;
}

double index_dot(std::span<const double> x) {
    const std::size_t n = x.size();
    const std::size_t body = n - n % 4;
    const double* p = x.data();
    __m256d idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
    const __m256d step = _mm256_set1_pd(4.0);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_mul_pd(idx, _mm256_loadu_pd(p + i)));
        idx = _mm256_add_pd(idx, step);
    }
    double s = combine_lanes(acc);
    for (std::size_t i = body; i < n; ++i) s += static_cast<double>(i) * p[i];
    return s;
}

void subtract_line(std::span<double> x, double intercept, double slope) {
    const std::size_t n = x.size();
    const std::size_t body = n - n % 4;
    double* p = x.data();
    const __m256d a = _mm256_set1_pd(intercept);
    const __m256d b = _mm256_set1_pd(slope);
    __m256d idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
    const __m256d step = _mm256_set1_pd(4.0);
    for (std::size_t i = 0; i < body; i += 4) {
        const __m256d line = _mm256_add_pd(a, _mm256_mul_pd(b, idx));
        _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), line));
        idx = _mm256_add_pd(idx, step);
    }
    for (std::size_t i = body; i < n; ++i) {
        const double t = slope * static_cast<double>(i);
        p[i] = p[i] - (intercept + t);
    }
}

void clamp(std::span<double> x, double lo, double hi) {
    const std::size_t n = x.size();
    const std::size_t body = n - n % 4;
    double* p = x.data();
    const __m256d vlo = _mm256_set1_pd(lo);
    const __m256d vhi = _mm256_set1_pd(hi);
    for (std::size_t i = 0; i < body; i += 4) {
        const __m256d v = _mm256_max_pd(_mm256_loadu_pd(p + i), vlo);
        _mm256_storeu_pd(p + i, _mm256_min_pd(v, vhi));
    }
    for (std::size_t i = body; i < n; ++i) {
        const double v = p[i] > lo ? p[i] : lo;
        p[i] = v < hi ? v : hi;
    }
}

void standardize(std::span<double> x, double mean, double scale) {
    const std::size_t n = x.size();
    const std::size_t body = n - n % 4;
    double* p = x.data();
    const __m256d m = _mm256_set1_pd(mean);
    const __m256d s = _mm256_set1_pd(scale);
    for (std::size_t i = 0; i < body; i += 4)
        _mm256_storeu_pd(p + i, _mm256_div_pd(_mm256_sub_pd(_mm256_loadu_pd(p + i), m), s));
    for (std::size_t i = body; i < n; ++i) p[i] = (p[i] - mean) / scale;
}

inline int maxima_mask(const double* p, std::size_t i, std::size_t k) {
    const __m256d c = _mm256_loadu_pd(p + i);
    const __m256d gl = _mm256_cmp_pd(c, _mm256_loadu_pd(p + i - k), _CMP_GT_OQ);
    const __m256d gr = _mm256_cmp_pd(c, _mm256_loadu_pd(p + i + k), _CMP_GT_OQ);
    return _mm256_movemask_pd(_mm256_and_pd(gl, gr));
}

std::size_t count_scale_maxima(std::span<const double> x, std::size_t k) {
    const std::size_t n = x.size();
    if (k == 0 || 2 * k >= n) return 0;
    const double* p = x.data();
    const std::size_t end = n - k;
    std::size_t i = k;
    std::size_t count = 0;
    for (; i + 4 <= end; i += 4) count += static_cast<std::size_t>(__builtin_popcount(maxima_mask(p, i, k)));
    for (; i < end; ++i) count += (p[i] > p[i - k]) & (p[i] > p[i + k]);
    return count;
}

void and_scale_maxima(std::span<const double> x, std::size_t k, std::span<std::uint8_t> alive) {
    const std::size_t n = x.size();
    if (k == 0 || 2 * k >= n) {
        for (auto& a : alive) a = 0;
        return;
    }
    const double* p = x.data();
    std::uint8_t* out = alive.data();
    for (std::size_t i = 0; i < k; ++i) out[i] = 0;
    const std::size_t end = n - k;
    std::size_t i = k;
    for (; i + 4 <= end; i += 4) {
        const int m = maxima_mask(p, i, k);
        out[i] &= static_cast<std::uint8_t>(m & 1);
        out[i + 1] &= static_cast<std::uint8_t>((m >> 1) & 1);
        out[i + 2] &= static_cast<std::uint8_t>((m >> 2) & 1);
        out[i + 3] &= static_cast<std::uint8_t>((m >> 3) & 1);
    }
    for (; i < end; ++i) out[i] &= static_cast<std::uint8_t>((p[i] > p[i - k]) & (p[i] > p[i + k]));
    for (std::size_t j = end; j < n; ++j) out[j] = 0;
}

constexpr KernelTable kAvx2{
    Backend::Avx2, sum, sum_sq_dev, index_dot, subtract_line, clamp, standardize,
    count_scale_maxima, and_scale_maxima,
};

}  // namespace

const KernelTable* avx2_kernels() noexcept {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") ? &kAvx2 : nullptr;
}

}  // namespace ppgsleep::kernels

#else

namespace ppgsleep::kernels {
const KernelTable* avx2_kernels() noexcept { return nullptr; }
}  // namespace ppgsleep::kernels

#endif
