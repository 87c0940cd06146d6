#include "ppgsleep/stats.hpp"

#include <cmath>

#include "ppgsleep/kernels/kernels.hpp"

namespace ppgsleep {

MeanStd mean_std(std::span<const double> x) noexcept {
    if (x.empty()) return {};
    const auto& k = kernels::active();
    const double n = static_cast<double>(x.size());
    const double mean = k.sum(x) / n;
    return {mean, std::sqrt(k.sum_sq_dev(x, mean) / n)};
}

}  // namespace ppgsleep
