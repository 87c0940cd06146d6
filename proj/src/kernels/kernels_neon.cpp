// AArch64 NEON variants. Advanced SIMD is mandatory on AArch64, so no
// runtime probe is needed once the file is compiled in.

#include "ppgsleep/kernels/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

namespace ppgsleep::kernels {
namespace {

// Two float64x2 registers hold lanes {0,1} and {2,3}.
struct Acc4 {
    float64x2_t lo = vdupq_n_f64(0.0);
    float64x2_t hi = vdupq_n_f64(0.0);

    double combine() const {
        const double l0 = vgetq_lane_f64(lo, 0), l1 = vgetq_lane_f64(lo, 1);
        const double l2 = vgetq_lane_f64(hi, 0), l3 = vgetq_lane_f64(hi, 1);
        return (l0 + l1) + (l2 + l3);
    }
};

double sum(std::span<const double> x) {
    const std::size_t n = x.size();
    const std::size_t body = n - n % 4;
    const double* p = x.data();
    Acc4 acc;
    for (std::size_t i = 0; i < body; i += 4) {
        acc.lo = vaddq_f64(acc.lo, vld1q_f64(p + i));
        acc.hi = vaddq_f64(acc.hi, vld1q_f64(p + i + 2));
    }
    double s = acc.combine();
    for (std::size_t i = body; i < n; ++i) s += p[i];
    return s;
}

double sum_sq_dev(std::span<const double> x, double mean) {
    const std::size_t n = x.size();
    const std::size_t body = n - n % 4;
    const double* p = x.data();
    const float64x2_t m = vdupq_n_f64(mean);
    Acc4 acc;
    for (std::size_t i = 0; i < body; i += 4) {
        const float64x2_t d0 = vsubq_f64(vld1q_f64(p + i), m);
        const float64x2_t d1 = vsubq_f64(vld1q_f64(p + i + 2), m);
        // Separate multiply and add: a fused vfmaq would break bit-equality.
        acc.lo = vaddq_f64(acc.lo, vmulq_f64(d0, d0));
        acc.hi = vaddq_f64(acc.hi, vmulq_f64(d1, d1));
    }
    double s = acc.combine();
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
    const double init_lo[2] = {0.0, 1.0};
    const double init_hi[2] = {2.0, 3.0};
    float64x2_t idx_lo = vld1q_f64(init_lo);
    float64x2_t idx_hi = vld1q_f64(init_hi);
    const float64x2_t step = vdupq_n_f64(4.0);
    Acc4 acc;
    for (std::size_t i = 0; i < body; i += 4) {
        acc.lo = vaddq_f64(acc.lo, vmulq_f64(idx_lo, vld1q_f64(p + i)));
        acc.hi = vaddq_f64(acc.hi, vmulq_f64(idx_hi, vld1q_f64(p + i + 2)));
        idx_lo = vaddq_f64(idx_lo, step);
        idx_hi = vaddq_f64(idx_hi, step);
    }
    double s = acc.combine();
    for (std::size_t i = body; i < n; ++i) s += static_cast<double>(i) * p[i];
    return s;
}

void subtract_line(std::span<double> x, double intercept, double slope) {
    const std::size_t n = x.size();
    const std::size_t body = n - n % 2;
    double* p = x.data();
    const float64x2_t a = vdupq_n_f64(intercept);
    const float64x2_t b = vdupq_n_f64(slope);
    const double init[2] = {0.0, 1.0};
    float64x2_t idx = vld1q_f64(init);
    const float64x2_t step = vdupq_n_f64(2.0);
    for (std::size_t i = 0; i < body; i += 2) {
        const float64x2_t line = vaddq_f64(a, vmulq_f64(b, idx));
        vst1q_f64(p + i, vsubq_f64(vld1q_f64(p + i), line));
        idx = vaddq_f64(idx, step);
    }
    for (std::size_t i = body; i < n; ++i) {
        const double t = slope * static_cast<double>(i);
        p[i] = p[i] - (intercept + t);
    }
}

void clamp(std::span<double> x, double lo, double hi) {
    const std::size_t n = x.size();
    const std::size_t body = n - n % 2;
    double* p = x.data();
    const float64x2_t vlo = vdupq_n_f64(lo);
    const float64x2_t vhi = vdupq_n_f64(hi);
    for (std::size_t i = 0; i < body; i += 2) {
        const float64x2_t v = vld1q_f64(p + i);
        // Select-based max/min to keep the scalar tie semantics (vmaxq differs on signed zeros).
        const float64x2_t up = vbslq_f64(vcgtq_f64(v, vlo), v, vlo);
        vst1q_f64(p + i, vbslq_f64(vcltq_f64(up, vhi), up, vhi));
    }
    for (std::size_t i = body; i < n; ++i) {
        const double v = p[i] > lo ? p[i] : lo;
        p[i] = v < hi ? v : hi;
    }
}

void standardize(std::span<double> x, double mean, double scale) {
    const std::size_t n = x.size();
    const std::size_t body = n - n % 2;
    double* p = x.data();
    const float64x2_t m = vdupq_n_f64(mean);
    const float64x2_t s = vdupq_n_f64(scale);
    for (std::size_t i = 0; i < body; i += 2) vst1q_f64(p + i, vdivq_f64(vsubq_f64(vld1q_f64(p + i), m), s));
    for (std::size_t i = body; i < n; ++i) p[i] = (p[i] - mean) / scale;
}

inline uint64x2_t maxima_mask(const double* p, std::size_t i, std::size_t k) {
    const float64x2_t c = vld1q_f64(p + i);
    return vandq_u64(vcgtq_f64(c, vld1q_f64(p + i - k)), vcgtq_f64(c, vld1q_f64(p + i + k)));
}

std::size_t count_scale_maxima(std::span<const double> x, std::size_t k) {
    const std::size_t n = x.size();
    if (k == 0 || 2 * k >= n) return 0;
    const double* p = x.data();
    const std::size_t end = n - k;
    std::size_t i = k;
    std::size_t count = 0;
    for (; i + 2 <= end; i += 2) {
        const uint64x2_t m = vshrq_n_u64(maxima_mask(p, i, k), 63);
        count += static_cast<std::size_t>(vgetq_lane_u64(m, 0) + vgetq_lane_u64(m, 1));
    }
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
    for (; i + 2 <= end; i += 2) {
        const uint64x2_t m = vshrq_n_u64(maxima_mask(p, i, k), 63);
        out[i] &= static_cast<std::uint8_t>(vgetq_lane_u64(m, 0));
        out[i + 1] &= static_cast<std::uint8_t>(vgetq_lane_u64(m, 1));
    }
    for (; i < end; ++i) out[i] &= static_cast<std::uint8_t>((p[i] > p[i - k]) & (p[i] > p[i + k]));
    for (std::size_t j = end; j < n; ++j) out[j] = 0;
}

constexpr KernelTable kNeon{
    Backend::Neon, sum, sum_sq_dev, index_dot, subtract_line, clamp, standardize,
    count_scale_maxima, and_scale_maxima,
};

}  // namespace

const KernelTable* neon_kernels() noexcept { return &kNeon; }

}  // namespace ppgsleep::kernels

#else

namespace ppgsleep::kernels {
const KernelTable* neon_kernels() noexcept { return nullptr; }
}  // namespace ppgsleep::kernels

#endif
