#include "ppgsleep/peaks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ppgsleep/error.hpp"
#include "ppgsleep/kernels/kernels.hpp"

namespace ppgsleep {
namespace {

void detrend(std::vector<double>& x) {
    const auto& k = kernels::active();
    const double n = static_cast<double>(x.size());
    // Least-squares line over t = 0..n-1.
    const double st = n * (n - 1.0) / 2.0;
    const double stt = (n - 1.0) * n * (2.0 * n - 1.0) / 6.0;
    const double sx = k.sum(x);
    const double stx = k.index_dot(x);
    const double denom = n * stt - st * st;
    const double slope = (n * stx - st * sx) / denom;
    const double intercept = (sx - slope * st) / n;
    k.subtract_line(x, intercept, slope);
}

}  // namespace

PeakList detect_peaks(std::span<const double> window, std::size_t max_scale, double fs_hz) {
    const std::size_t n = window.size();
    if (n < 8) throw ValidationError("peak detection needs at least 8 samples, got " + std::to_string(n));
    if (max_scale < 1) throw ValidationError("max_scale must be >= 1");

    std::vector<double> x(window.begin(), window.end());
    detrend(x);

    const auto& k = kernels::active();
    const std::size_t half = (n + 1) / 2;  // ceil(n / 2)
    const std::size_t scales = std::min(max_scale, half - 1);

    std::size_t best_scale = 1;
    std::size_t best_count = 0;
    for (std::size_t s = 1; s <= scales; ++s) {
        const std::size_t c = k.count_scale_maxima(x, s);
        if (c > best_count) {
            best_count = c;
            best_scale = s;
        }
    }

    PeakList out;
    out.fs_hz = fs_hz;
    if (best_count == 0) return out;

    std::vector<std::uint8_t> alive(n, 1);
    for (std::size_t s = 1; s <= best_scale; ++s) k.and_scale_maxima(x, s, alive);
    for (std::size_t i = 0; i < n; ++i) {
        if (alive[i]) out.indices.push_back(i);
    }
    return out;
}

std::size_t default_max_scale(double fs_hz) {
    return static_cast<std::size_t>(std::llround(2.0 * fs_hz));
}

PeakList detect_peaks_in_window(std::span<const double> signal, std::size_t begin, std::size_t end,
                                std::size_t max_scale, std::size_t context, double fs_hz) {
    if (begin >= end || end > signal.size()) throw ValidationError("window outside signal");
    const std::size_t lo = begin > context ? begin - context : 0;
    const std::size_t hi = std::min(signal.size(), end + context);
    const PeakList wide = detect_peaks(signal.subspan(lo, hi - lo), max_scale, fs_hz);

    PeakList out;
    out.fs_hz = fs_hz;
    for (std::size_t idx : wide.indices) {
        const std::size_t abs = idx + lo;
        if (abs >= begin && abs < end) out.indices.push_back(abs - begin);
    }
    return out;
}

std::vector<std::size_t> detect_peaks_windowed(std::span<const double> signal, std::size_t window_len,
                                               std::size_t max_scale, std::size_t context, double fs_hz) {
    if (window_len == 0) throw ValidationError("window length must be positive");
    std::vector<std::size_t> out;
    for (std::size_t begin = 0; begin + window_len <= signal.size(); begin += window_len) {
        const PeakList p = detect_peaks_in_window(signal, begin, begin + window_len, max_scale, context, fs_hz);
        for (std::size_t i : p.indices) out.push_back(begin + i);
    }
    return out;
}

BeatMatch match_beats(std::span<const double> truth_positions, std::span<const std::size_t> detected, double tolerance) {
    struct Candidate {
        double distance;
        std::size_t beat, det;
    };
    std::vector<Candidate> candidates;
    std::size_t first = 0;
    for (std::size_t b = 0; b < truth_positions.size(); ++b) {
        const double t = truth_positions[b];
        while (first < detected.size() && static_cast<double>(detected[first]) < t - tolerance) ++first;
        for (std::size_t d = first; d < detected.size() && static_cast<double>(detected[d]) <= t + tolerance; ++d)
            candidates.push_back({std::abs(static_cast<double>(detected[d]) - t), b, d});
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.distance < b.distance; });

    std::vector<std::uint8_t> beat_used(truth_positions.size(), 0), det_used(detected.size(), 0);
    BeatMatch m;
    m.truth = truth_positions.size();
    m.detected = detected.size();
    for (const auto& c : candidates) {
        if (beat_used[c.beat] || det_used[c.det]) continue;
        beat_used[c.beat] = det_used[c.det] = 1;
        ++m.matched;
    }
    std::vector<std::uint8_t> counted(detected.size(), 0);
    for (const auto& c : candidates) {
        if (!det_used[c.det] && beat_used[c.beat] && !counted[c.det]) {
            counted[c.det] = 1;
            ++m.duplicates;
        }
    }
    return m;
}

}  // namespace ppgsleep
