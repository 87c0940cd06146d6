#include "ppgsleep/features.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "ppgsleep/error.hpp"
#include "ppgsleep/peaks.hpp"
#include "ppgsleep/preprocess.hpp"
#include "ppgsleep/stats.hpp"

namespace ppgsleep {

std::vector<Window> segment_windows(const PpgRecord& record) {
    if (record.fs_hz() != kTargetFsHz)
        throw ValidationError(record.subject_id() + ": windowing expects a 34 Hz record, got " +
                              std::to_string(record.fs_hz()) + " Hz");
    return segment_windows(record.samples());
}

std::vector<Window> segment_windows(std::span<const double> samples) {
    const std::size_t len = static_cast<std::size_t>(kEpochSeconds * kTargetFsHz);
    std::vector<Window> out;
    out.reserve(samples.size() / len);
    for (std::size_t start = 0; start + len <= samples.size(); start += len)
        out.push_back({static_cast<std::int64_t>(start / len), samples.subspan(start, len)});
    return out;
}

std::optional<WindowFeatures> window_features(const PeakList& peaks, double act, SleepWake label,
                                              std::int64_t epoch_index) {
    if (peaks.size() < 3 || !(peaks.fs_hz > 0.0)) return std::nullopt;
    std::vector<double> ibi;
    ibi.reserve(peaks.size() - 1);
    for (std::size_t j = 0; j + 1 < peaks.size(); ++j)
        ibi.push_back(static_cast<double>(peaks.indices[j + 1] - peaks.indices[j]) / peaks.fs_hz);

    const MeanStd ms = mean_std(ibi);
    WindowFeatures w;
    w.epoch_index = epoch_index;
    w.mean_ibi_s = ms.mean;
    w.hr_bpm = 60.0 / ms.mean;
    w.hrv_s = ms.std;
    w.act = act;
    w.label = label;
    return w;
}

SubjectWindows extract_subject_windows(const SubjectRecord& record, ExtractionStats* stats) {
    const PpgRecord prepared = preprocess_record(record.ppg());
    const auto windows = segment_windows(prepared);
    const std::size_t scale = default_max_scale(kTargetFsHz);
    const std::size_t len = static_cast<std::size_t>(kEpochSeconds * kTargetFsHz);

    SubjectWindows out{record.subject_id(), record.demographics(), {}};
    ExtractionStats local;
    const std::size_t epochs = std::min(windows.size(), record.epoch_count());
    local.epochs = epochs;
    for (std::size_t e = 0; e < epochs; ++e) {
        const auto label = map_stage(record.stages()[e]);
        if (!label) {
            ++local.unscored;
            continue;
        }
        const std::size_t begin = e * len;
        const PeakList peaks = detect_peaks_in_window(prepared.samples(), begin, begin + len, scale, scale,
                                                      prepared.fs_hz());
        auto w = window_features(peaks, record.activity()[e], *label, static_cast<std::int64_t>(e));
        if (!w) {
            ++local.undefined;
            continue;
        }
        out.windows.push_back(*w);
    }
    if (stats) *stats = local;
    return out;
}

bool RejectionRule::keeps(const WindowFeatures& w) const noexcept {
    return w.hr_bpm <= max_hr_bpm && std::abs(w.hrv_s - hrv_mean) <= band_sigma * hrv_std;
}

RejectionStats& RejectionStats::operator+=(const RejectionStats& other) {
    windows_in += other.windows_in;
    dropped_hr += other.dropped_hr;
    dropped_hrv += other.dropped_hrv;
    subjects_in += other.subjects_in;
    subjects_dropped += other.subjects_dropped;
    dropped_subject_ids.insert(dropped_subject_ids.end(), other.dropped_subject_ids.begin(),
                               other.dropped_subject_ids.end());
    return *this;
}

RejectionRule fit_rejection(std::span<const SubjectWindows> cohort) {
    std::vector<double> hrv;
    for (const auto& s : cohort)
        for (const auto& w : s.windows) hrv.push_back(w.hrv_s);
    if (hrv.empty()) throw ValidationError("cannot fit window rejection on an empty cohort");
    const MeanStd ms = mean_std(hrv);
    RejectionRule rule;
    rule.hrv_mean = ms.mean;
    rule.hrv_std = ms.std;
    return rule;
}

std::vector<SubjectWindows> apply_rejection(std::span<const SubjectWindows> cohort, const RejectionRule& rule,
                                            RejectionStats* stats) {
    std::vector<SubjectWindows> retained;
    RejectionStats local;
    for (const auto& s : cohort) {
        ++local.subjects_in;
        SubjectWindows kept{s.subject_id, s.demographics, {}};
        for (const auto& w : s.windows) {
            ++local.windows_in;
            if (!(w.hr_bpm <= rule.max_hr_bpm)) {
                ++local.dropped_hr;
            } else if (!rule.keeps(w)) {
                ++local.dropped_hrv;
            } else {
                kept.windows.push_back(w);
            }
        }
        if (kept.windows.empty()) {
            ++local.subjects_dropped;
            local.dropped_subject_ids.push_back(s.subject_id);
        } else {
            retained.push_back(std::move(kept));
        }
    }
    if (stats) *stats = std::move(local);
    return retained;
}

RejectionResult reject_windows(std::span<const SubjectWindows> cohort) {
    RejectionResult r;
    r.rule = fit_rejection(cohort);
    r.retained = apply_rejection(cohort, r.rule, &r.stats);
    return r;
}

std::optional<FeatureMatrix> assemble_matrix(const SubjectWindows& subject) {
    if (subject.windows.empty()) return std::nullopt;
    FeatureMatrix m(subject.subject_id, subject.demographics);
    for (const auto& w : subject.windows) m.add_row(w.epoch_index, w.row(), w.label);
    return m;
}

SubjectWindows windows_from_matrix(const FeatureMatrix& matrix) {
    SubjectWindows s{matrix.subject_id(), matrix.demographics().value_or(Demographics{}), {}};
    s.windows.reserve(matrix.rows());
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        WindowFeatures w;
        w.epoch_index = matrix.epoch_indices()[i];
        w.hr_bpm = matrix.values()[i][0];
        w.hrv_s = matrix.values()[i][1];
        w.act = matrix.values()[i][2];
        w.mean_ibi_s = 60.0 / w.hr_bpm;
        w.label = matrix.labels()[i];
        s.windows.push_back(w);
    }
    return s;
}

}  // namespace ppgsleep
