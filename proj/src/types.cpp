#include "ppgsleep/types.hpp"

#include <cmath>
#include <utility>

#include "ppgsleep/error.hpp"

namespace ppgsleep {

std::optional<SleepWake> map_stage(StageLabel label) noexcept {
    switch (label) {
        case StageLabel::W:
            return SleepWake::Wake;
        case StageLabel::N1:
        case StageLabel::N2:
        case StageLabel::N3:
        case StageLabel::REM:
            return SleepWake::Sleep;
        case StageLabel::Unscored:
            break;
    }
    return std::nullopt;
}

std::string_view to_string(StageLabel label) noexcept {
    switch (label) {
        case StageLabel::W: return "W";
        case StageLabel::N1: return "N1";
        case StageLabel::N2: return "N2";
        case StageLabel::N3: return "N3";
        case StageLabel::REM: return "REM";
        case StageLabel::Unscored: return "U";
    }
    return "U";
}

std::optional<StageLabel> parse_stage(std::string_view text) noexcept {
    if (text == "W") return StageLabel::W;
    if (text == "N1") return StageLabel::N1;
    if (text == "N2") return StageLabel::N2;
    if (text == "N3") return StageLabel::N3;
    if (text == "REM") return StageLabel::REM;
    if (text == "U") return StageLabel::Unscored;
    return std::nullopt;
}

char to_char(SleepWake label) noexcept { return label == SleepWake::Sleep ? 'S' : 'W'; }

std::string_view to_string(Gender gender) noexcept {
    switch (gender) {
        case Gender::Male: return "male";
        case Gender::Female: return "female";
        case Gender::Unspecified: return "unspecified";
    }
    return "unspecified";
}

std::optional<Gender> parse_gender(std::string_view text) noexcept {
    if (text == "male") return Gender::Male;
    if (text == "female") return Gender::Female;
    if (text == "unspecified") return Gender::Unspecified;
    return std::nullopt;
}

Demographics::Demographics(int age_years, Gender g) : age(age_years), gender(g) {
    if (age < 0) throw ValidationError("age must be >= 0, got " + std::to_string(age));
}

PpgRecord::PpgRecord(std::string subject_id, double fs_hz, std::vector<double> samples)
    : subject_id_(std::move(subject_id)), fs_hz_(fs_hz), samples_(std::move(samples)) {
    if (!(fs_hz_ > 0.0) || !std::isfinite(fs_hz_))
        throw ValidationError(subject_id_ + ": fs_hz must be positive");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        if (!std::isfinite(samples_[i]))
            throw ValidationError(subject_id_ + ": non-finite PPG sample at index " + std::to_string(i));
    }
    if (static_cast<double>(samples_.size()) < kEpochSeconds * fs_hz_ - 1e-9)
        throw ValidationError(subject_id_ + ": PPG shorter than one 30 s epoch (" +
                              std::to_string(samples_.size()) + " samples)");
}

ActivitySeries::ActivitySeries(std::vector<double> counts) : counts_(std::move(counts)) {
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        if (!std::isfinite(counts_[i]) || counts_[i] < 0.0)
            throw ValidationError("activity count at epoch " + std::to_string(i) +
                                  " must be finite and >= 0");
    }
}

SubjectRecord::SubjectRecord(PpgRecord ppg, ActivitySeries activity, std::vector<StageLabel> stages,
                             Demographics demographics)
    : ppg_(std::move(ppg)), activity_(std::move(activity)), stages_(std::move(stages)),
      demographics_(demographics) {
    if (activity_.size() != stages_.size())
        throw ValidationError(subject_id() + ": activity has " + std::to_string(activity_.size()) +
                              " epochs but stages has " + std::to_string(stages_.size()));
    // Allow the last epoch to be one sample period short.
    const double needed = static_cast<double>(stages_.size()) * kEpochSeconds - 1.0 / ppg_.fs_hz();
    if (ppg_.duration_s() < needed - 1e-9)
        throw ValidationError(subject_id() + ": PPG covers " + std::to_string(ppg_.duration_s()) +
                              " s, stages need " + std::to_string(needed) + " s");
}

FeatureMatrix::FeatureMatrix(std::string subject_id, std::optional<Demographics> demographics)
    : subject_id_(std::move(subject_id)), demographics_(demographics) {}

void FeatureMatrix::add_row(std::int64_t epoch_index, const FeatureRow& row, SleepWake label) {
    for (double v : row) {
        if (!std::isfinite(v))
            throw ValidationError(subject_id_ + ": non-finite feature at epoch " +
                                  std::to_string(epoch_index));
    }
    if (epoch_index < 0)
        throw ValidationError(subject_id_ + ": negative epoch index");
    if (!epochs_.empty() && epoch_index <= epochs_.back())
        throw ValidationError(subject_id_ + ": epoch indices must strictly increase (" +
                              std::to_string(epochs_.back()) + " then " + std::to_string(epoch_index) + ")");
    rows_.push_back(row);
    epochs_.push_back(epoch_index);
    labels_.push_back(label);
}

bool Biquad::stable() const noexcept {
    // Roots of z^2 + a1 z + a2 inside the unit circle.
    return std::isfinite(a1) && std::isfinite(a2) && std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2;
}

FilterCoefficients::FilterCoefficients(std::vector<Biquad> sections, double gain)
    : sections_(std::move(sections)), gain_(gain) {
    if (!std::isfinite(gain_)) throw DesignError("filter gain is not finite");
    for (std::size_t i = 0; i < sections_.size(); ++i) {
        if (!sections_[i].stable())
            throw DesignError("second-order section " + std::to_string(i) + " is unstable");
    }
}

}  // namespace ppgsleep
