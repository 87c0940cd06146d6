#pragma once

// Data-parallel inner loops used by preprocessing, peak detection and the
// feature statistics. Every kernel has a scalar reference implementation and
// optional vector variants; the active table is chosen once at runtime from
// the CPU's capabilities (override with PPGSLEEP_SIMD=scalar|avx2|neon).
//
// All variants are bit-identical to the scalar reference. Reductions
// accumulate in four interleaved lanes (element i goes to lane i % 4), the
// lanes are combined as (l0 + l1) + (l2 + l3) and the tail is added in order,
// which is exactly what a 4 x double register does.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace ppgsleep::kernels {

enum class Backend : std::uint8_t { Scalar, Avx2, Neon };

struct KernelTable {
    Backend backend;

    // sum of x
    double (*sum)(std::span<const double> x);
    // sum of (x - mean)^2
    double (*sum_sq_dev)(std::span<const double> x, double mean);
    // sum of i * x[i]
    double (*index_dot)(std::span<const double> x);
    // x[i] -= intercept + slope * i
    void (*subtract_line)(std::span<double> x, double intercept, double slope);
    // x[i] = min(max(x[i], lo), hi)
    void (*clamp)(std::span<double> x, double lo, double hi);
    // x[i] = (x[i] - mean) / scale
    void (*standardize)(std::span<double> x, double mean, double scale);
    // Number of i in [k, n - k) with x[i] > x[i - k] and x[i] > x[i + k].
    std::size_t (*count_scale_maxima)(std::span<const double> x, std::size_t k);
    // alive[i] &= (x[i] > x[i - k] && x[i] > x[i + k]); indices outside
    // [k, n - k) are cleared.
    void (*and_scale_maxima)(std::span<const double> x, std::size_t k, std::span<std::uint8_t> alive);
};

const KernelTable& scalar_kernels() noexcept;
// nullptr when the variant was not compiled in or the CPU lacks it.
const KernelTable* avx2_kernels() noexcept;
const KernelTable* neon_kernels() noexcept;

// Table selected for this process (best available unless overridden).
const KernelTable& active() noexcept;

std::string_view backend_name(Backend b) noexcept;

}  // namespace ppgsleep::kernels
