#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppgsleep/types.hpp"

namespace ppgsleep {

inline constexpr double kMaxHeartRateBpm = 180.0;
inline constexpr double kHrvBandSigma = 2.0;

struct Window {
    std::int64_t epoch_index;
    std::span<const double> samples;
};

/// Consecutive non-overlapping 30 s windows over a 34 Hz record; a trailing
/// partial window is dropped. Throws ValidationError for any other rate.
std::vector<Window> segment_windows(const PpgRecord& record);
// Same tiling over bare 34 Hz samples; fewer than 1020 samples gives none.
std::vector<Window> segment_windows(std::span<const double> samples_34hz);

struct WindowFeatures {
    std::int64_t epoch_index = 0;
    double mean_ibi_s = 0.0;
    double hr_bpm = 0.0;
    double hrv_s = 0.0;  // population std of the inter-beat intervals
    double act = 0.0;
    SleepWake label = SleepWake::Wake;

    FeatureRow row() const { return {hr_bpm, hrv_s, act}; }
};

/// HR and HRV from one window's peaks. nullopt when fewer than two
/// intervals are available.
std::optional<WindowFeatures> window_features(const PeakList& peaks, double act, SleepWake label,
                                              std::int64_t epoch_index = 0);

// All defined windows of one subject, in epoch order.
struct SubjectWindows {
    std::string subject_id;
    Demographics demographics;
    std::vector<WindowFeatures> windows;
};

struct ExtractionStats {
    std::size_t epochs = 0;
    std::size_t unscored = 0;       // no ground truth
    std::size_t undefined = 0;      // fewer than 3 peaks
};

/// preprocess -> segment -> per-window peaks -> features, joined with the
/// subject's activity counts and merged labels. Unscored epochs are skipped.
SubjectWindows extract_subject_windows(const SubjectRecord& record, ExtractionStats* stats = nullptr);

// Cohort statistics behind the rejection pass. Fitted once on a cohort (or
// on the training subjects of a fold) and applied unchanged elsewhere.
struct RejectionRule {
    double hrv_mean = 0.0;
    double hrv_std = 0.0;
    double max_hr_bpm = kMaxHeartRateBpm;
    double band_sigma = kHrvBandSigma;

    bool keeps(const WindowFeatures& w) const noexcept;
};

struct RejectionStats {
    std::size_t windows_in = 0;
    std::size_t dropped_hr = 0;   // hr > max_hr_bpm
    std::size_t dropped_hrv = 0;  // passed the HR rule but outside the HRV band
    std::size_t subjects_in = 0;
    std::size_t subjects_dropped = 0;
    std::vector<std::string> dropped_subject_ids;

    std::size_t windows_kept() const noexcept { return windows_in - dropped_hr - dropped_hrv; }
    RejectionStats& operator+=(const RejectionStats& other);
};

// Pass 1: mean and population std of HRV over every window of the cohort.
// Throws ValidationError when the cohort holds no windows.
RejectionRule fit_rejection(std::span<const SubjectWindows> cohort);

// Pass 2 with a fixed rule. Subjects left without windows are removed.
std::vector<SubjectWindows> apply_rejection(std::span<const SubjectWindows> cohort, const RejectionRule& rule,
                                            RejectionStats* stats = nullptr);

struct RejectionResult {
    std::vector<SubjectWindows> retained;
    RejectionRule rule;
    RejectionStats stats;
};

// fit_rejection + apply_rejection over the same cohort.
RejectionResult reject_windows(std::span<const SubjectWindows> cohort);

/// n x 3 matrix (HR, HRV, ACT) with labels and epoch indices. Returns
/// nullopt for a subject with no retained windows (the subject is dropped).
std::optional<FeatureMatrix> assemble_matrix(const SubjectWindows& subject);

// Inverse of assemble_matrix, used when feature tables are read back.
SubjectWindows windows_from_matrix(const FeatureMatrix& matrix);

}  // namespace ppgsleep
