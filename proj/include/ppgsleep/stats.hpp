#pragma once

#include <span>

namespace ppgsleep {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // population (divide by n)
};

// Two-pass mean and population standard deviation. Empty input -> {0, 0}.
MeanStd mean_std(std::span<const double> x) noexcept;

}  // namespace ppgsleep
