#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ppgsleep/types.hpp"

namespace ppgsleep {

/// Multiscale local-maxima peak detection over one window.
///
/// The window is linearly detrended, then for every scale k = 1..L with
/// L = min(max_scale, ceil(n/2) - 1) the number of samples that exceed both
/// neighbours k samples away is counted (samples with a neighbour out of range
/// never qualify). The busiest scale lambda (smallest on ties) fixes the
/// neighbourhood, and a peak is a sample that qualifies at every scale
/// 1..lambda. Only per-index survival flags are kept, so memory is O(n) and
/// time O(n L).
///
/// Throws ValidationError when n < 8 or max_scale < 1. A window without peaks
/// yields an empty list.
PeakList detect_peaks(std::span<const double> window, std::size_t max_scale, double fs_hz);

// round(2 s * fs): the scale cap matching a 30 bpm floor.
std::size_t default_max_scale(double fs_hz);

/// Runs detect_peaks on [begin - context, end + context) clipped to the
/// signal and keeps peaks inside [begin, end), returned relative to begin.
/// Beats near a window edge are otherwise unreachable because their
/// neighbours at larger scales fall outside the window.
PeakList detect_peaks_in_window(std::span<const double> signal, std::size_t begin, std::size_t end,
                                std::size_t max_scale, std::size_t context, double fs_hz);

// detect_peaks_in_window over consecutive windows of `window_len` samples
// (a trailing partial window is skipped); absolute indices.
std::vector<std::size_t> detect_peaks_windowed(std::span<const double> signal, std::size_t window_len,
                                               std::size_t max_scale, std::size_t context, double fs_hz);

struct BeatMatch {
    std::size_t truth = 0;       // reference beats considered
    std::size_t detected = 0;    // detections considered
    std::size_t matched = 0;     // one-to-one pairs within tolerance
    std::size_t duplicates = 0;  // unpaired detections within tolerance of a paired beat

    double recall() const noexcept { return truth ? static_cast<double>(matched) / static_cast<double>(truth) : 1.0; }
};

/// Greedy nearest-neighbour pairing: candidate (beat, detection) pairs within
/// `tolerance` samples are taken in order of increasing distance, each beat
/// and each detection used at most once. Both inputs must be sorted.
BeatMatch match_beats(std::span<const double> truth_positions, std::span<const std::size_t> detected,
                      double tolerance);

}  // namespace ppgsleep
