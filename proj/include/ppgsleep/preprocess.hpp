#pragma once

#include <complex>
#include <span>
#include <vector>

#include "ppgsleep/types.hpp"

namespace ppgsleep {

inline constexpr int kFilterOrder = 8;
inline constexpr double kStopbandEdgeHz = 8.0;
inline constexpr double kStopbandAttenuationDb = 40.0;
inline constexpr double kRawFsHz = 256.0;
inline constexpr double kTargetFsHz = 34.0;
inline constexpr double kClipSigma = 3.0;

/// Digital Chebyshev type II low-pass as a cascade of second-order sections.
///
/// The analog prototype (equiripple stopband at -stopband_atten_db beyond the
/// normalized edge, monotone passband) is scaled to the prewarped edge
/// 2 fs tan(pi f / fs) and mapped through the bilinear transform, so the
/// digital response reaches exactly -stopband_atten_db at stopband_edge_hz.
/// Conjugate pole pairs are matched with conjugate zero pairs and sections are
/// ordered by increasing pole radius. Numerators are monic; gain() carries the
/// factor that makes |H(0)| = 1.
///
/// Throws DesignError for odd/non-positive order, edge outside (0, fs/2) or
/// non-positive attenuation.
FilterCoefficients design_cheby2_lowpass(int order = kFilterOrder, double stopband_edge_hz = kStopbandEdgeHz,
                                         double stopband_atten_db = kStopbandAttenuationDb,
                                         double fs_hz = kRawFsHz);

// H(e^{j 2 pi f / fs}) of the cascade, gain included.
std::complex<double> frequency_response(const FilterCoefficients& coeffs, double f_hz, double fs_hz);

// Single forward pass from a zero initial state (used by tests to obtain an
// impulse response).
std::vector<double> filter_forward(std::span<const double> signal, const FilterCoefficients& coeffs);

/// Forward-backward filtering. The signal is extended by 3 x order samples of
/// odd reflection at both ends, each pass starts from the steady-state section
/// states for the first sample, and the padding is removed afterwards. Net
/// phase is zero and the magnitude response is |H|^2.
///
/// Throws ValidationError when the signal is not longer than 3 x order.
std::vector<double> filter_zero_phase(std::span<const double> signal, const FilterCoefficients& coeffs);

// floor((n - 1) * to_hz / from_hz) + 1
std::size_t resampled_length(std::size_t n, double from_hz, double to_hz);

/// Output sample j is the linear interpolation of the input at time j / to_hz.
/// Throws ValidationError on empty input or when not from_hz > to_hz > 0.
std::vector<double> resample_linear(std::span<const double> signal, double from_hz, double to_hz);

struct ClipBounds {
    double lo;
    double hi;
};

// [mean - k sd, mean + k sd] of the signal (population sd). sd = 0 gives
// lo == hi == mean.
ClipBounds clip_bounds(std::span<const double> signal, double k = kClipSigma);

// Clamp into fixed bounds.
std::vector<double> clip_to(std::span<const double> signal, ClipBounds bounds);

// Clamp values beyond k population standard deviations of the signal's own
// mean; identity when the signal is constant.
std::vector<double> clip_outliers(std::span<const double> signal, double k = kClipSigma);

// (x - mean) / sd with population sd; constant input maps to all zeros.
std::vector<double> zscore(std::span<const double> signal);

/// Whole-record chain: low-pass at the record's rate -> linear resampling to
/// 34 Hz -> 3 sigma clipping -> z-score. The returned record is at 34 Hz.
PpgRecord preprocess_record(const PpgRecord& record);

}  // namespace ppgsleep
