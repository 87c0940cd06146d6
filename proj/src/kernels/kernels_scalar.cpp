#include "ppgsleep/kernels/kernels.hpp"

namespace ppgsleep::kernels {
namespace {

// Vector max/min semantics: return the first operand only when strictly
// greater (smaller). Matches maxpd/minpd and vmaxq/vminq on non-NaN input.
inline double vmax(double a, double b) { return a > b ? a : b; }
inline double vmin(double a, double b) { return a < b ? a : b; }

double sum(std::span<const double> x) {
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t n = x.size();
    const std::size_t body = n - n % 4;
    for (std::size_t i = 0; i < body; i += 4) {
        lane[0] += x[i];
        lane[1] += x[i + 1];
        lane[2] += x[i + 2];
        lane[3] += x[i + 3];
    }
    double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
    for (std::size_t i = body; i < n; ++i) s += x[i];
    return s;
}

double sum_sq_dev(std::span<const double> x, double mean) {
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t n = x.size();
    const std::size_t body = n - n % 4;
    for (std::size_t i = 0; i < body; i += 4) {
        for (std::size_t j = 0; j < 4; ++j) {
            const double d = x[i + j] - mean;
            lane[j] += d * d;
        }
    }
    double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
    for (std::size_t i = body; i < n; ++i) {
        const double d = x[i] - mean;
        s += d * d;
    }
    return s;
}

double index_dot(std::span<const double> x) {
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t n = x.size();
    const std::size_t body = n - n % 4;
    for (std::size_t i = 0; i < body; i += 4) {
        for (std::size_t j = 0; j < 4; ++j) lane[j] += static_cast<double>(i + j) * x[i + j];
    }
    double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
    for (std::size_t i = body; i < n; ++i) s += static_cast<double>(i) * x[i];
    return s;
}

void subtract_line(std::span<double> x, double intercept, double slope) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = slope * static_cast<double>(i);
        x[i] = x[i] - (intercept + t);
    }
}

void clamp(std::span<double> x, double lo, double hi) {
    for (double& v : x) v = vmin(vmax(v, lo), hi);
}

void standardize(std::span<double> x, double mean, double scale) {
    for (double& v : x) v = (v - mean) / scale;
}

std::size_t count_scale_maxima(std::span<const double> x, std::size_t k) {
    const std::size_t n = x.size();
    if (k == 0 || 2 * k >= n) return 0;
    std::size_t count = 0;
    for (std::size_t i = k; i < n - k; ++i) count += (x[i] > x[i - k]) & (x[i] > x[i + k]);
    return count;
}

void and_scale_maxima(std::span<const double> x, std::size_t k, std::span<std::uint8_t> alive) {
    const std::size_t n = x.size();
    if (k == 0 || 2 * k >= n) {
        for (auto& a : alive) a = 0;
        return;
    }
    for (std::size_t i = 0; i < k; ++i) alive[i] = 0;
    for (std::size_t i = k; i < n - k; ++i)
        alive[i] &= static_cast<std::uint8_t>((x[i] > x[i - k]) & (x[i] > x[i + k]));
    for (std::size_t i = n - k; i < n; ++i) alive[i] = 0;
}

constexpr KernelTable kScalar{
    Backend::Scalar, sum, sum_sq_dev, index_dot, subtract_line, clamp, standardize,
    count_scale_maxima, and_scale_maxima,
};

}  // namespace

const KernelTable& scalar_kernels() noexcept { return kScalar; }

}  // namespace ppgsleep::kernels
