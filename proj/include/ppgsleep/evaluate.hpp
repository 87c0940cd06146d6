#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ppgsleep/features.hpp"
#include "ppgsleep/learn.hpp"
#include "ppgsleep/types.hpp"

namespace ppgsleep {

// Sleep is the positive class.
struct ConfusionCounts {
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
    // Same counts with Wake as the positive class.
    ConfusionCounts transposed() const noexcept { return {tn, fn, tp, fp}; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept;
    bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(std::span<const SleepWake> truth, std::span<const SleepWake> predicted);

// A metric whose denominator is zero is nullopt ("undefined"), never 0.
struct MetricSet {
    std::optional<double> accuracy, sensitivity, specificity, f1, kappa;
};

MetricSet metrics(const ConfusionCounts& c);

inline constexpr std::array<const char*, 5> kMetricNames{"accuracy", "sensitivity", "specificity", "f1", "kappa"};
std::array<std::optional<double>, 5> metric_values(const MetricSet& m);

struct FoldAssignment {
    int k = 0;
    std::map<std::string, int> fold_of;

    // Subject ids of one fold, sorted.
    std::vector<std::string> members(int fold) const;
};

/// Sorts the ids, shuffles them with the seed and deals them round-robin.
/// Throws ProtocolError with fewer subjects than folds or k < 2 and
/// ValidationError on duplicate ids.
FoldAssignment grouped_kfold(std::span<const std::string> subject_ids, int k, std::uint64_t seed);

enum class FoldAggregation { Pooled, PerSubject };

struct CvOptions {
    int k = 10;
    std::uint64_t seed = 0;
    // Fit the rejection rule on each fold's training subjects and apply it to
    // both sides. Off when the input has already been filtered.
    bool fold_rejection = true;
    FoldAggregation aggregation = FoldAggregation::Pooled;
    unsigned jobs = 1;
};

struct FoldResult {
    int fold = 0;
    std::size_t train_subjects = 0, test_subjects = 0;
    std::size_t train_windows = 0, test_windows = 0;
    RejectionStats train_rejection, test_rejection;
    ConfusionCounts counts;
    MetricSet metrics;
};

// Held-out predictions of one subject, in epoch order.
struct SubjectPrediction {
    std::string subject_id;
    Demographics demographics;
    int fold = 0;
    std::vector<std::int64_t> epochs;
    std::vector<SleepWake> truth;
    std::vector<SleepWake> predicted;
    std::vector<double> proba;
};

struct MetricSummary {
    std::optional<double> mean, std;  // population std across folds
    std::size_t defined_folds = 0;
};

struct CvResult {
    FoldAssignment assignment;
    std::vector<FoldResult> folds;
    std::array<MetricSummary, 5> summary;  // in kMetricNames order
    std::vector<SubjectPrediction> subjects;  // sorted by subject id
};

/// Grouped k-fold cross-validation. Throws ProtocolError naming the fold when
/// a fold's training labels hold a single class or it has nothing to score.
CvResult cross_validate(std::span<const SubjectWindows> cohort, const TrainConfig& config, const CvOptions& options);

std::array<MetricSummary, 5> summarize(std::span<const MetricSet> per_fold);

struct SubjectScore {
    std::string subject_id;
    Demographics demographics;
    std::optional<double> f1;
};

std::vector<SubjectScore> subject_scores(std::span<const SubjectPrediction> predictions);

struct StratumRow {
    std::string group;    // "age" or "gender"
    std::string stratum;  // "54-65", ..., "86+", "male", "female", "other"
    std::size_t subjects = 0;
    std::size_t undefined = 0;  // subjects whose F1 is undefined
    std::optional<double> f1_mean, f1_std;
};

// Age bin label of one subject: "54-65", "66-75", "76-85", "86+" or "other".
std::string age_bin(int age);

std::vector<StratumRow> stratified_report(std::span<const SubjectScore> scores);

struct SleepSummary {
    std::size_t epochs = 0;
    double tst_s = 0.0;
    double wake_s = 0.0;
    std::optional<double> latency_s;
    double efficiency = 0.0;
    std::optional<double> waso_s;
};

SleepSummary sleep_summary(std::span<const SleepWake> hypnogram, double epoch_s = kEpochSeconds);

// Report tables (format ppgsleep-report/1). `header` lines are emitted as
// "# key=value" before the column header of every table.
using ReportHeader = std::vector<std::pair<std::string, std::string>>;

std::string format_folds_table(const CvResult& cv, const ReportHeader& header);
std::string format_summary_table(const CvResult& cv, const ReportHeader& header);
std::string format_stratified_table(std::span<const StratumRow> rows, const ReportHeader& header);
std::string format_sleep_summary_table(std::span<const SubjectPrediction> subjects, const ReportHeader& header);
std::string format_summary_text(const CvResult& cv, std::span<const StratumRow> strata, const ReportHeader& header);

}  // namespace ppgsleep
