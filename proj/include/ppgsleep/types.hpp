#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ppgsleep {

inline constexpr double kEpochSeconds = 30.0;
inline constexpr std::size_t kFeatureCount = 3;

// Column order of every feature row and of every serialized model.
enum class Feature : std::uint8_t { HeartRate = 0, Hrv = 1, Activity = 2 };

enum class StageLabel : std::uint8_t { W, N1, N2, N3, REM, Unscored };

enum class SleepWake : std::uint8_t { Wake = 0, Sleep = 1 };

enum class Gender : std::uint8_t { Male, Female, Unspecified };

/// W -> Wake; N1/N2/N3/REM -> Sleep; Unscored -> nullopt (epoch carries no
/// ground truth and is dropped from training and scoring).
std::optional<SleepWake> map_stage(StageLabel label) noexcept;

std::string_view to_string(StageLabel label) noexcept;
std::optional<StageLabel> parse_stage(std::string_view text) noexcept;

// "S" / "W", the encoding used in feature tables.
char to_char(SleepWake label) noexcept;
std::string_view to_string(Gender gender) noexcept;
std::optional<Gender> parse_gender(std::string_view text) noexcept;

struct Demographics {
    int age = 0;
    Gender gender = Gender::Unspecified;

    Demographics() = default;
    Demographics(int age_years, Gender g);

    bool operator==(const Demographics&) const = default;
};

class PpgRecord {
public:
    // Throws ValidationError on fs_hz <= 0, non-finite samples (with the
    // offending index) or a recording shorter than one epoch.
    PpgRecord(std::string subject_id, double fs_hz, std::vector<double> samples);

    const std::string& subject_id() const noexcept { return subject_id_; }
    double fs_hz() const noexcept { return fs_hz_; }
    std::span<const double> samples() const noexcept { return samples_; }
    double duration_s() const noexcept { return static_cast<double>(samples_.size()) / fs_hz_; }

private:
    std::string subject_id_;
    double fs_hz_;
    std::vector<double> samples_;
};

class ActivitySeries {
public:
    ActivitySeries() = default;
    explicit ActivitySeries(std::vector<double> counts);

    std::span<const double> counts() const noexcept { return counts_; }
    std::size_t size() const noexcept { return counts_.size(); }
    double operator[](std::size_t i) const { return counts_[i]; }

private:
    std::vector<double> counts_;
};

class SubjectRecord {
public:
    SubjectRecord(PpgRecord ppg, ActivitySeries activity, std::vector<StageLabel> stages,
                  Demographics demographics);

    const std::string& subject_id() const noexcept { return ppg_.subject_id(); }
    const PpgRecord& ppg() const noexcept { return ppg_; }
    const ActivitySeries& activity() const noexcept { return activity_; }
    std::span<const StageLabel> stages() const noexcept { return stages_; }
    const Demographics& demographics() const noexcept { return demographics_; }
    std::size_t epoch_count() const noexcept { return stages_.size(); }

private:
    PpgRecord ppg_;
    ActivitySeries activity_;
    std::vector<StageLabel> stages_;
    Demographics demographics_;
};

using FeatureRow = std::array<double, kFeatureCount>;

/// Per-subject feature matrix: one (HR bpm, HRV s, ACT) row per retained
/// epoch, with the epoch index and the sleep/wake label of each row.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    explicit FeatureMatrix(std::string subject_id, std::optional<Demographics> demographics = {});

    // Rejects NaN/Inf entries and epoch indices that do not strictly increase.
    void add_row(std::int64_t epoch_index, const FeatureRow& row, SleepWake label);

    const std::string& subject_id() const noexcept { return subject_id_; }
    const std::optional<Demographics>& demographics() const noexcept { return demographics_; }
    void set_demographics(std::optional<Demographics> d) { demographics_ = d; }

    std::size_t rows() const noexcept { return rows_.size(); }
    static constexpr std::size_t cols() noexcept { return kFeatureCount; }
    bool empty() const noexcept { return rows_.empty(); }

    std::span<const FeatureRow> values() const noexcept { return rows_; }
    std::span<const std::int64_t> epoch_indices() const noexcept { return epochs_; }
    std::span<const SleepWake> labels() const noexcept { return labels_; }

    bool operator==(const FeatureMatrix&) const = default;

private:
    std::string subject_id_;
    std::optional<Demographics> demographics_;
    std::vector<FeatureRow> rows_;
    std::vector<std::int64_t> epochs_;
    std::vector<SleepWake> labels_;
};

// Direct form II transposed biquad, a0 normalized to 1.
struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0;
    double a1 = 0, a2 = 0;

    // Both poles strictly inside the unit circle (Jury conditions).
    bool stable() const noexcept;
};

class FilterCoefficients {
public:
    // Throws DesignError when any section is unstable.
    FilterCoefficients(std::vector<Biquad> sections, double gain);

    std::span<const Biquad> sections() const noexcept { return sections_; }
    double gain() const noexcept { return gain_; }
    std::size_t order() const noexcept { return 2 * sections_.size(); }

private:
    std::vector<Biquad> sections_;
    double gain_;
};

struct PeakList {
    std::vector<std::size_t> indices;
    double fs_hz = 0.0;

    std::size_t size() const noexcept { return indices.size(); }
    bool empty() const noexcept { return indices.empty(); }
};

}  // namespace ppgsleep
