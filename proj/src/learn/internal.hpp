#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "ppgsleep/error.hpp"
#include "ppgsleep/learn.hpp"

namespace ppgsleep::learn_detail {

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + e^z)
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct ClassCounts {
    std::size_t sleep = 0;
    std::size_t wake = 0;
};

// Arity, finiteness and length checks shared by every trainer.
inline ClassCounts check_training_input(const DesignMatrix& X, std::span<const SleepWake> y, const TrainConfig& config,
                                        std::size_t min_rows) {
    config.validate();
    if (X.cols() != kFeatureCount)
        throw ValidationError("expected " + std::to_string(kFeatureCount) + " feature columns, got " +
                              std::to_string(X.cols()));
    if (X.rows() != y.size()) throw ValidationError("feature rows and labels differ in length");
    if (X.rows() < min_rows) throw ValidationError("need at least " + std::to_string(min_rows) + " training rows");
    for (std::size_t i = 0; i < X.rows(); ++i)
        for (std::size_t j = 0; j < kFeatureCount; ++j)
            if (!std::isfinite(X.at(i, j)))
                throw ValidationError("non-finite training feature at row " + std::to_string(i));
    ClassCounts c;
    for (SleepWake v : y) (v == SleepWake::Sleep ? c.sleep : c.wake)++;
    return c;
}

inline void require_both_classes(const ClassCounts& c) {
    if (c.sleep == 0 || c.wake == 0) throw ValidationError("training labels contain a single class");
}

inline std::vector<int> active_columns(const TrainConfig& config) {
    std::vector<int> cols;
    for (std::size_t j = 0; j < kFeatureCount; ++j)
        if (config.columns[j]) cols.push_back(static_cast<int>(j));
    return cols;
}

// Indices 0..n-1 sorted by column j (ties by index, so the order is total).
inline std::vector<std::uint32_t> sorted_by_column(const DesignMatrix& X, int j) {
    std::vector<std::uint32_t> idx(X.rows());
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return X.at(a, j) < X.at(b, j); });
    return idx;
}

// Midpoint threshold t with a < t <= b, so "x < t" sends a left and b right.
inline double split_point(double a, double b) {
    const double mid = a + (b - a) / 2.0;
    return a < mid ? mid : b;
}

// Split a node's per-feature sorted index lists into left/right lists,
// preserving order. goes_left is indexed by sample.
inline void partition_lists(const std::vector<std::vector<std::uint32_t>>& lists, const std::vector<std::uint8_t>& goes_left,
                            std::vector<std::vector<std::uint32_t>>& left, std::vector<std::vector<std::uint32_t>>& right) {
    left.assign(lists.size(), {});
    right.assign(lists.size(), {});
    for (std::size_t f = 0; f < lists.size(); ++f) {
        for (std::uint32_t i : lists[f]) (goes_left[i] ? left[f] : right[f]).push_back(i);
    }
}

}  // namespace ppgsleep::learn_detail
