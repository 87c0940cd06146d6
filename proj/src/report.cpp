// Report tables, format ppgsleep-report/1. Each table starts with the
// caller's "# key=value" header, then "# table=<name>", then a column header.
// Undefined metrics are written as "undefined".

#include <cstdio>

#include "ppgsleep/evaluate.hpp"
#include "ppgsleep/text_format.hpp"

namespace ppgsleep {
namespace {

constexpr const char* kReportFormat = "ppgsleep-report/1";

std::string begin(const ReportHeader& header, const char* table) {
    std::string out = "# format=";
    out += kReportFormat;
    out += '\n';
    for (const auto& [k, v] : header) out += "# " + k + "=" + v + "\n";
    out += "# table=";
    out += table;
    out += '\n';
    return out;
}

std::string opt(const std::optional<double>& v) { return v ? text::format_double(*v) : "undefined"; }

std::string fixed(const std::optional<double>& v, int digits, double scale = 1.0) {
    if (!v) return "undefined";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, *v * scale);
    return buf;
}

}  // namespace

std::string format_folds_table(const CvResult& cv, const ReportHeader& header) {
    std::string out = begin(header, "folds");
    out += "fold,train_subjects,test_subjects,train_windows,test_windows,tp,fp,tn,fn,"
           "accuracy,sensitivity,specificity,f1,kappa\n";
    for (const auto& f : cv.folds) {
        out += std::to_string(f.fold) + "," + std::to_string(f.train_subjects) + "," + std::to_string(f.test_subjects) +
               "," + std::to_string(f.train_windows) + "," + std::to_string(f.test_windows) + "," +
               std::to_string(f.counts.tp) + "," + std::to_string(f.counts.fp) + "," + std::to_string(f.counts.tn) +
               "," + std::to_string(f.counts.fn);
        for (const auto& v : metric_values(f.metrics)) out += "," + opt(v);
        out += '\n';
    }
    return out;
}

std::string format_summary_table(const CvResult& cv, const ReportHeader& header) {
    std::string out = begin(header, "summary");
    out += "metric,mean,std,defined_folds\n";
    for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
        const auto& s = cv.summary[m];
        out += std::string(kMetricNames[m]) + "," + opt(s.mean) + "," + opt(s.std) + "," +
               std::to_string(s.defined_folds) + "\n";
    }
    // Kappa once more on the percent scale.
    const auto& k = cv.summary[4];
    const auto pct = [](const std::optional<double>& v) -> std::optional<double> {
        if (!v) return std::nullopt;
        return *v * 100.0;
    };
    out += "kappa_pct," + opt(pct(k.mean)) + "," + opt(pct(k.std)) + "," + std::to_string(k.defined_folds) + "\n";
    return out;
}

std::string format_stratified_table(std::span<const StratumRow> rows, const ReportHeader& header) {
    std::string out = begin(header, "stratified_f1");
    out += "group,stratum,subjects,undefined,f1_mean,f1_std\n";
    for (const auto& r : rows)
        out += r.group + "," + r.stratum + "," + std::to_string(r.subjects) + "," + std::to_string(r.undefined) + "," +
               opt(r.f1_mean) + "," + opt(r.f1_std) + "\n";
    return out;
}

std::string format_sleep_summary_table(std::span<const SubjectPrediction> subjects, const ReportHeader& header) {
    std::string out = begin(header, "sleep_summary");
    out += "subject_id,fold,epochs,tst_s,wake_s,latency_s,efficiency,waso_s,true_tst_s,true_efficiency\n";
    for (const auto& p : subjects) {
        if (p.predicted.empty()) continue;
        const SleepSummary s = sleep_summary(p.predicted);
        const SleepSummary t = sleep_summary(p.truth);
        out += p.subject_id + "," + std::to_string(p.fold) + "," + std::to_string(s.epochs) + "," +
               text::format_double(s.tst_s) + "," + text::format_double(s.wake_s) + "," + opt(s.latency_s) + "," +
               text::format_double(s.efficiency) + "," + opt(s.waso_s) + "," + text::format_double(t.tst_s) + "," +
               text::format_double(t.efficiency) + "\n";
    }
    return out;
}

std::string format_summary_text(const CvResult& cv, std::span<const StratumRow> strata, const ReportHeader& header) {
    std::string out;
    for (const auto& [k, v] : header) out += k + ": " + v + "\n";
    out += "\nCross-validated metrics over " + std::to_string(cv.folds.size()) + " folds (mean +/- std)\n";
    static constexpr const char* labels[] = {"Accuracy (%)", "Sensitivity (%)", "Specificity (%)", "F1 (%)"};
    char line[160];
    for (std::size_t m = 0; m < 4; ++m) {
        std::snprintf(line, sizeof line, "  %-16s %s +/- %s\n", labels[m], fixed(cv.summary[m].mean, 2, 100.0).c_str(),
                      fixed(cv.summary[m].std, 2, 100.0).c_str());
        out += line;
    }
    std::snprintf(line, sizeof line, "  %-16s %s +/- %s  (%s +/- %s %%)\n", "Kappa", fixed(cv.summary[4].mean, 3).c_str(),
                  fixed(cv.summary[4].std, 3).c_str(), fixed(cv.summary[4].mean, 2, 100.0).c_str(),
                  fixed(cv.summary[4].std, 2, 100.0).c_str());
    out += line;
    for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
        if (cv.summary[m].defined_folds < cv.folds.size()) {
            out += "  note: " + std::string(kMetricNames[m]) + " undefined in " +
                   std::to_string(cv.folds.size() - cv.summary[m].defined_folds) + " fold(s)\n";
        }
    }
    out += "\nStratified subject F1 (mean +/- std)\n";
    for (const auto& r : strata) {
        std::snprintf(line, sizeof line, "  %-7s %-7s n=%-4zu %s +/- %s\n", r.group.c_str(), r.stratum.c_str(), r.subjects,
                      fixed(r.f1_mean, 4).c_str(), fixed(r.f1_std, 4).c_str());
        out += line;
    }
    return out;
}

}  // namespace ppgsleep
