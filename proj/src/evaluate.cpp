#include "ppgsleep/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ppgsleep/error.hpp"
#include "ppgsleep/parallel.hpp"
#include "ppgsleep/random.hpp"

namespace ppgsleep {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
}

ConfusionCounts confusion(std::span<const SleepWake> truth, std::span<const SleepWake> predicted) {
    if (truth.size() != predicted.size())
        throw ValidationError("confusion: " + std::to_string(truth.size()) + " labels vs " +
                              std::to_string(predicted.size()) + " predictions");
    if (truth.empty()) throw ValidationError("confusion: empty label sequence");
    ConfusionCounts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool t = truth[i] == SleepWake::Sleep;
        const bool p = predicted[i] == SleepWake::Sleep;
        if (t && p) ++c.tp;
        else if (!t && p) ++c.fp;
        else if (!t && !p) ++c.tn;
        else ++c.fn;
    }
    return c;
}

MetricSet metrics(const ConfusionCounts& c) {
    const double n = static_cast<double>(c.total());
    if (c.total() == 0) throw ValidationError("metrics: confusion matrix is empty");
    const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
    const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
    const auto ratio = [](double num, double den) -> std::optional<double> {
        if (den == 0.0) return std::nullopt;
        return num / den;
    };
    MetricSet m;
    m.accuracy = (tp + tn) / n;
    m.sensitivity = ratio(tp, tp + fn);
    m.specificity = ratio(tn, tn + fp);
    m.f1 = ratio(2.0 * tp, 2.0 * tp + fp + fn);
    const double pe = ((tp + fn) * (tp + fp) + (tn + fp) * (tn + fn)) / (n * n);
    m.kappa = ratio(*m.accuracy - pe, 1.0 - pe);
    return m;
}

std::array<std::optional<double>, 5> metric_values(const MetricSet& m) {
    return {m.accuracy, m.sensitivity, m.specificity, m.f1, m.kappa};
}

std::vector<std::string> FoldAssignment::members(int fold) const {
    std::vector<std::string> out;
    for (const auto& [id, f] : fold_of)
        if (f == fold) out.push_back(id);
    return out;
}

FoldAssignment grouped_kfold(std::span<const std::string> subject_ids, int k, std::uint64_t seed) {
    if (k < 2) throw ProtocolError("need at least 2 folds, got " + std::to_string(k));
    std::vector<std::string> ids(subject_ids.begin(), subject_ids.end());
    std::sort(ids.begin(), ids.end());
    if (const auto dup = std::adjacent_find(ids.begin(), ids.end()); dup != ids.end())
        throw ValidationError("subject id '" + *dup + "' appears more than once");
    if (ids.size() < static_cast<std::size_t>(k))
        throw ProtocolError(std::to_string(ids.size()) + " subjects cannot fill " + std::to_string(k) + " folds");

    Rng rng(seed);
    for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
    FoldAssignment a;
    a.k = k;
    for (std::size_t i = 0; i < ids.size(); ++i) a.fold_of[ids[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    return a;
}

std::array<MetricSummary, 5> summarize(std::span<const MetricSet> per_fold) {
    std::array<MetricSummary, 5> out;
    for (std::size_t m = 0; m < out.size(); ++m) {
        std::vector<double> v;
        for (const auto& f : per_fold)
            if (const auto x = metric_values(f)[m]) v.push_back(*x);
        out[m].defined_folds = v.size();
        if (v.empty()) continue;
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        out[m].mean = mean;
        out[m].std = std::sqrt(ss / static_cast<double>(v.size()));
    }
    return out;
}

namespace {

struct FoldOutput {
    FoldResult result;
    std::vector<SubjectPrediction> subjects;
};

FoldOutput run_fold(std::span<const SubjectWindows> cohort, const FoldAssignment& a, int fold,
                    const TrainConfig& config, const CvOptions& options) {
    const std::string name = "fold " + std::to_string(fold);
    std::vector<SubjectWindows> train, test;
    for (const auto& s : cohort) (a.fold_of.at(s.subject_id) == fold ? test : train).push_back(s);

    FoldOutput out;
    FoldResult& r = out.result;
    r.fold = fold;
    if (options.fold_rejection) {
        const RejectionRule rule = fit_rejection(train);
        train = apply_rejection(train, rule, &r.train_rejection);
        test = apply_rejection(test, rule, &r.test_rejection);
    }
    r.train_subjects = train.size();
    r.test_subjects = test.size();

    std::vector<FeatureRow> rows;
    std::vector<SleepWake> y;
    for (const auto& s : train)
        for (const auto& w : s.windows) {
            rows.push_back(w.row());
            y.push_back(w.label);
        }
    r.train_windows = rows.size();
    const bool has_sleep = std::find(y.begin(), y.end(), SleepWake::Sleep) != y.end();
    const bool has_wake = std::find(y.begin(), y.end(), SleepWake::Wake) != y.end();
    if (!has_sleep || !has_wake)
        throw ProtocolError(name + ": training labels contain a single class (" +
                            std::to_string(rows.size()) + " windows)");

    const TrainedModel model = ppgsleep::train(DesignMatrix(rows), y, config);

    std::vector<SleepWake> truth_all, pred_all;
    std::vector<MetricSet> per_subject;
    for (const auto& s : test) {
        SubjectPrediction p;
        p.subject_id = s.subject_id;
        p.demographics = s.demographics;
        p.fold = fold;
        std::vector<FeatureRow> xs;
        for (const auto& w : s.windows) {
            xs.push_back(w.row());
            p.epochs.push_back(w.epoch_index);
            p.truth.push_back(w.label);
        }
        p.proba = predict_proba(model, DesignMatrix(xs));
        p.predicted = labels_from_proba(p.proba, config.threshold);
        truth_all.insert(truth_all.end(), p.truth.begin(), p.truth.end());
        pred_all.insert(pred_all.end(), p.predicted.begin(), p.predicted.end());
        per_subject.push_back(metrics(confusion(p.truth, p.predicted)));
        out.subjects.push_back(std::move(p));
    }
    r.test_windows = truth_all.size();
    if (truth_all.empty()) throw ProtocolError(name + ": no held-out windows left to score");
    r.counts = confusion(truth_all, pred_all);
    if (options.aggregation == FoldAggregation::Pooled) {
        r.metrics = metrics(r.counts);
    } else {
        const auto s = summarize(per_subject);
        r.metrics = {s[0].mean, s[1].mean, s[2].mean, s[3].mean, s[4].mean};
    }
    return out;
}

}  // namespace

CvResult cross_validate(std::span<const SubjectWindows> cohort, const TrainConfig& config, const CvOptions& options) {
    config.validate();
    std::vector<std::string> ids;
    for (const auto& s : cohort) ids.push_back(s.subject_id);

    CvResult cv;
    cv.assignment = grouped_kfold(ids, options.k, options.seed);
    std::vector<FoldOutput> outputs(static_cast<std::size_t>(options.k));
    parallel_for(outputs.size(), options.jobs, [&](std::size_t f) {
        outputs[f] = run_fold(cohort, cv.assignment, static_cast<int>(f), config, options);
    });

    std::vector<MetricSet> per_fold;
    for (auto& o : outputs) {
        per_fold.push_back(o.result.metrics);
        cv.folds.push_back(std::move(o.result));
        for (auto& s : o.subjects) cv.subjects.push_back(std::move(s));
    }
    cv.summary = summarize(per_fold);
    std::sort(cv.subjects.begin(), cv.subjects.end(),
              [](const SubjectPrediction& a, const SubjectPrediction& b) { return a.subject_id < b.subject_id; });
    return cv;
}

std::vector<SubjectScore> subject_scores(std::span<const SubjectPrediction> predictions) {
    std::vector<SubjectScore> out;
    out.reserve(predictions.size());
    for (const auto& p : predictions) out.push_back({p.subject_id, p.demographics, metrics(confusion(p.truth, p.predicted)).f1});
    return out;
}

std::string age_bin(int age) {
    if (age >= 54 && age <= 65) return "54-65";
    if (age >= 66 && age <= 75) return "66-75";
    if (age >= 76 && age <= 85) return "76-85";
    if (age >= 86) return "86+";
    return "other";
}

std::vector<StratumRow> stratified_report(std::span<const SubjectScore> scores) {
    std::vector<StratumRow> rows;
    const auto add = [&](const std::string& group, const std::string& stratum, auto&& member) {
        StratumRow r;
        r.group = group;
        r.stratum = stratum;
        std::vector<double> f1;
        for (const auto& s : scores) {
            if (!member(s)) continue;
            ++r.subjects;
            if (s.f1) f1.push_back(*s.f1);
            else ++r.undefined;
        }
        if (!f1.empty()) {
            double mean = 0.0;
            for (double v : f1) mean += v;
            mean /= static_cast<double>(f1.size());
            double ss = 0.0;
            for (double v : f1) ss += (v - mean) * (v - mean);
            r.f1_mean = mean;
            r.f1_std = std::sqrt(ss / static_cast<double>(f1.size()));
        }
        rows.push_back(std::move(r));
    };
    for (const char* bin : {"54-65", "66-75", "76-85", "86+", "other"})
        add("age", bin, [&](const SubjectScore& s) { return age_bin(s.demographics.age) == bin; });
    add("gender", "male", [](const SubjectScore& s) { return s.demographics.gender == Gender::Male; });
    add("gender", "female", [](const SubjectScore& s) { return s.demographics.gender == Gender::Female; });
    add("gender", "other", [](const SubjectScore& s) { return s.demographics.gender == Gender::Unspecified; });
    return rows;
}

SleepSummary sleep_summary(std::span<const SleepWake> hypnogram, double epoch_s) {
    if (hypnogram.empty()) throw ValidationError("sleep summary: empty hypnogram");
    SleepSummary s;
    s.epochs = hypnogram.size();
    std::size_t sleep = 0, waso = 0;
    std::optional<std::size_t> onset;
    for (std::size_t i = 0; i < hypnogram.size(); ++i) {
        if (hypnogram[i] == SleepWake::Sleep) {
            ++sleep;
            if (!onset) onset = i;
        } else if (onset) {
            ++waso;
        }
    }
    s.tst_s = epoch_s * static_cast<double>(sleep);
    s.wake_s = epoch_s * static_cast<double>(hypnogram.size() - sleep);
    s.efficiency = static_cast<double>(sleep) / static_cast<double>(hypnogram.size());
    if (onset) {
        s.latency_s = epoch_s * static_cast<double>(*onset);
        s.waso_s = epoch_s * static_cast<double>(waso);
    }
    return s;
}

}  // namespace ppgsleep
