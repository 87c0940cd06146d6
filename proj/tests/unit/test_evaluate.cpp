#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "ppgsleep/error.hpp"
#include "ppgsleep/evaluate.hpp"
#include "ppgsleep/random.hpp"

using namespace ppgsleep;

namespace {

constexpr auto S = SleepWake::Sleep;
constexpr auto W = SleepWake::Wake;

std::vector<SubjectWindows> cohort(std::uint64_t seed, std::size_t subjects, std::size_t windows) {
    Rng rng(seed);
    std::vector<SubjectWindows> out;
    for (std::size_t s = 0; s < subjects; ++s) {
        SubjectWindows sw;
        sw.subject_id = "P" + std::to_string(100 + s);
        sw.demographics = Demographics(54 + static_cast<int>(rng.below(40)), rng.bernoulli(0.5) ? Gender::Male : Gender::Female);
        for (std::size_t e = 0; e < windows; ++e) {
            const bool sleep = rng.bernoulli(0.6);
            WindowFeatures w;
            w.epoch_index = static_cast<std::int64_t>(e);
            w.hr_bpm = rng.normal(sleep ? 58.0 : 75.0, 6.0);
            w.mean_ibi_s = 60.0 / w.hr_bpm;
            w.hrv_s = std::abs(rng.normal(0.05, 0.01));
            w.act = sleep ? 0.0 : rng.uniform(0.0, 100.0);
            w.label = sleep ? S : W;
            sw.windows.push_back(w);
        }
        out.push_back(std::move(sw));
    }
    return out;
}

TrainConfig quick(ModelKind kind) {
    TrainConfig c;
    c.kind = kind;
    c.gbdt.n_rounds = 20;
    c.gbdt.max_depth = 3;
    c.forest.n_trees = 20;
    return c;
}

}  // namespace

TEST_CASE("confusion examples") {
    const std::vector<SleepWake> all(10, S);
    CHECK(confusion(all, all) == ConfusionCounts{10, 0, 0, 0});
    const std::vector<SleepWake> t{S, S, W, W}, p{S, W, S, W};
    CHECK(confusion(t, p) == ConfusionCounts{1, 1, 1, 1});
    CHECK_THROWS_AS(confusion(std::vector<SleepWake>{}, std::vector<SleepWake>{}), ValidationError);
    CHECK_THROWS_AS(confusion(t, all), ValidationError);
}

TEST_CASE("metric examples") {
    SUBCASE("perfect") {
        const MetricSet m = metrics({30, 0, 20, 0});
        CHECK(*m.accuracy == 1.0);
        CHECK(*m.sensitivity == 1.0);
        CHECK(*m.specificity == 1.0);
        CHECK(*m.f1 == 1.0);
        CHECK(*m.kappa == 1.0);
    }
    SUBCASE("hand-computed case") {
        ConfusionCounts c;
        c.tp = 40;
        c.fn = 10;
        c.fp = 20;
        c.tn = 30;
        const MetricSet m = metrics(c);
        CHECK(std::abs(*m.accuracy - 0.70) < 1e-12);
        CHECK(std::abs(*m.sensitivity - 0.80) < 1e-12);
        CHECK(std::abs(*m.specificity - 0.60) < 1e-12);
        CHECK(std::abs(*m.f1 - 0.7273) < 1e-4);
        CHECK(std::abs(*m.kappa - 0.40) < 1e-12);
    }
    SUBCASE("predict all Sleep on a balanced set") {
        const MetricSet m = metrics({50, 50, 0, 0});
        CHECK(*m.kappa == 0.0);
        CHECK(*m.specificity == 0.0);
    }
    SUBCASE("zero denominators are undefined") {
        const MetricSet m = metrics({0, 0, 10, 0});
        CHECK(*m.accuracy == 1.0);
        CHECK_FALSE(m.sensitivity);
        CHECK_FALSE(m.f1);
        CHECK(*m.specificity == 1.0);
        CHECK_FALSE(m.kappa);  // p_e = 1
        CHECK_THROWS_AS(metrics({}), ValidationError);
    }
}

TEST_CASE("property: kappa never exceeds accuracy") {
    Rng rng(1);
    int checked = 0;
    for (int i = 0; i < 100000; ++i) {
        ConfusionCounts c{rng.below(60), rng.below(60), rng.below(60), rng.below(60)};
        if (rng.bernoulli(0.05)) c.fp = 0;
        if (c.total() == 0) continue;
        const MetricSet m = metrics(c);
        if (!m.kappa) continue;
        ++checked;
        CHECK(*m.kappa <= *m.accuracy + 1e-15);
        CHECK(*m.kappa <= 1.0);
    }
    CHECK(checked > 99000);
}

TEST_CASE("property: swapping the positive class") {
    Rng rng(2);
    for (int i = 0; i < 2000; ++i) {
        const ConfusionCounts c{1 + rng.below(50), 1 + rng.below(50), 1 + rng.below(50), 1 + rng.below(50)};
        const MetricSet a = metrics(c), b = metrics(c.transposed());
        CHECK(*a.accuracy == doctest::Approx(*b.accuracy).epsilon(1e-14));
        CHECK(*a.kappa == doctest::Approx(*b.kappa).epsilon(1e-12));
        CHECK(*a.sensitivity == doctest::Approx(*b.specificity).epsilon(1e-14));
        CHECK(*a.specificity == doctest::Approx(*b.sensitivity).epsilon(1e-14));
    }
}

TEST_CASE("grouped_kfold") {
    std::vector<std::string> ids;
    for (int i = 0; i < 20; ++i) ids.push_back("id" + std::to_string(i));
    const FoldAssignment a = grouped_kfold(ids, 10, 5);
    for (int f = 0; f < 10; ++f) CHECK(a.members(f).size() == 2);
    CHECK(a.fold_of == grouped_kfold(ids, 10, 5).fold_of);

    // Input order does not matter.
    std::vector<std::string> rev(ids.rbegin(), ids.rend());
    CHECK(a.fold_of == grouped_kfold(rev, 10, 5).fold_of);

    const std::vector<std::string> nine(ids.begin(), ids.begin() + 9);
    CHECK_THROWS_AS(grouped_kfold(nine, 10, 0), ProtocolError);
    CHECK_THROWS_AS(grouped_kfold(ids, 1, 0), ProtocolError);

    // Leakage probe: a subject's windows copied under the same id.
    std::vector<std::string> dup = ids;
    dup.push_back("id3");
    CHECK_THROWS_AS(grouped_kfold(dup, 10, 0), ValidationError);
}

TEST_CASE("property: folds partition subjects with balanced counts") {
    Rng rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = 2 + static_cast<int>(rng.below(10));
        const std::size_t n = static_cast<std::size_t>(k) + rng.below(60);
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < n; ++i) ids.push_back("s" + std::to_string(rng.next() % 1000000) + "_" + std::to_string(i));
        const FoldAssignment a = grouped_kfold(ids, k, rng.next());
        CHECK(a.fold_of.size() == n);
        std::size_t lo = n, hi = 0, sum = 0;
        std::set<std::string> seen;
        for (int f = 0; f < k; ++f) {
            const auto m = a.members(f);
            lo = std::min(lo, m.size());
            hi = std::max(hi, m.size());
            sum += m.size();
            for (const auto& id : m) CHECK(seen.insert(id).second);
        }
        CHECK(sum == n);
        CHECK(hi - lo <= 1);
    }
}

TEST_CASE("cross_validate keeps subjects out of their own training folds") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto c = cohort(seed, 13, 30);
        CvOptions o;
        o.k = 5;
        o.seed = seed;
        o.fold_rejection = false;
        const CvResult cv = cross_validate(c, quick(ModelKind::Logistic), o);
        REQUIRE(cv.folds.size() == 5);
        std::size_t windows = 0;
        for (const auto& f : cv.folds) {
            CHECK(f.train_subjects + f.test_subjects == 13);
            CHECK(f.train_windows + f.test_windows == 13 * 30);
            windows += f.test_windows;
        }
        CHECK(windows == 13 * 30);
        REQUIRE(cv.subjects.size() == 13);
        for (const auto& p : cv.subjects) {
            CHECK(cv.assignment.fold_of.at(p.subject_id) == p.fold);
            CHECK(p.truth.size() == 30);
            CHECK(p.predicted.size() == 30);
        }
        CHECK(std::is_sorted(cv.subjects.begin(), cv.subjects.end(),
                             [](const auto& a, const auto& b) { return a.subject_id < b.subject_id; }));
    }
}

TEST_CASE("cross_validate learns a separable cohort") {
    const auto c = cohort(9, 20, 60);
    CvOptions o;
    o.k = 10;
    for (ModelKind k : {ModelKind::Logistic, ModelKind::RandomForest, ModelKind::Gbdt}) {
        const CvResult cv = cross_validate(c, quick(k), o);
        CHECK(*cv.summary[3].mean >= 0.9);
        CHECK(cv.summary[3].defined_folds == 10);
    }
}

TEST_CASE("label permutation gives chance-level kappa") {
    auto c = cohort(21, 30, 100);
    Rng rng(77);
    std::vector<SleepWake*> labels;
    for (auto& s : c)
        for (auto& w : s.windows) labels.push_back(&w.label);
    for (std::size_t i = labels.size(); i > 1; --i) std::swap(*labels[i - 1], *labels[rng.below(i)]);
    CvOptions o;
    o.seed = 4;
    const CvResult cv = cross_validate(c, quick(ModelKind::Gbdt), o);
    CHECK(std::abs(*cv.summary[4].mean) <= 0.05);
}

TEST_CASE("cross_validate options") {
    const auto c = cohort(5, 12, 40);
    CvOptions o;
    o.k = 4;
    o.aggregation = FoldAggregation::PerSubject;
    const CvResult per = cross_validate(c, quick(ModelKind::Logistic), o);
    o.aggregation = FoldAggregation::Pooled;
    o.jobs = 3;
    const CvResult pooled = cross_validate(c, quick(ModelKind::Logistic), o);
    for (std::size_t f = 0; f < 4; ++f) CHECK(per.folds[f].counts == pooled.folds[f].counts);
    o.jobs = 1;
    const CvResult serial = cross_validate(c, quick(ModelKind::Logistic), o);
    CHECK(format_folds_table(serial, {}) == format_folds_table(pooled, {}));

    auto one_class = c;
    for (auto& s : one_class)
        for (auto& w : s.windows) w.label = S;
    try {
        cross_validate(one_class, quick(ModelKind::Gbdt), o);
        FAIL("expected a protocol error");
    } catch (const ProtocolError& e) {
        CHECK(std::string(e.what()).find("fold") != std::string::npos);
    }
}

TEST_CASE("fold-frozen rejection uses training statistics only") {
    auto c = cohort(8, 10, 30);
    // One subject with wild HRV: rejected when it is held out, but it also
    // widens the band whenever it is in the training set.
    for (auto& w : c[0].windows) w.hrv_s = 0.5;
    CvOptions o;
    o.k = 5;
    const CvResult cv = cross_validate(c, quick(ModelKind::Logistic), o);
    const int f0 = cv.assignment.fold_of.at(c[0].subject_id);
    CHECK(cv.folds[static_cast<std::size_t>(f0)].test_rejection.subjects_dropped == 1);
    CHECK(std::none_of(cv.subjects.begin(), cv.subjects.end(),
                       [&](const SubjectPrediction& p) { return p.subject_id == c[0].subject_id; }));
}

TEST_CASE("summaries use the population std") {
    std::vector<MetricSet> folds(2);
    folds[0].accuracy = 0.6;
    folds[1].accuracy = 0.8;
    folds[0].kappa = 0.2;
    const auto s = summarize(folds);
    CHECK(*s[0].mean == doctest::Approx(0.7));
    CHECK(*s[0].std == doctest::Approx(0.1));
    CHECK(s[4].defined_folds == 1);
    CHECK(*s[4].std == 0.0);
    CHECK_FALSE(s[1].mean);
}

TEST_CASE("stratified report") {
    CHECK(age_bin(54) == "54-65");
    CHECK(age_bin(65) == "54-65");
    CHECK(age_bin(66) == "66-75");
    CHECK(age_bin(75) == "66-75");
    CHECK(age_bin(76) == "76-85");
    CHECK(age_bin(86) == "86+");
    CHECK(age_bin(53) == "other");

    SUBCASE("single populated cell") {
        std::vector<SubjectScore> s{{"a", Demographics(60, Gender::Female), 0.9},
                                    {"b", Demographics(60, Gender::Female), 0.7}};
        const auto rows = stratified_report(s);
        for (const auto& r : rows) {
            const bool populated = r.stratum == "54-65" || r.stratum == "female";
            CHECK(r.subjects == (populated ? 2u : 0u));
            CHECK(r.f1_mean.has_value() == populated);
        }
    }
    SUBCASE("identical scores in two groups") {
        std::vector<SubjectScore> s{{"a", Demographics(60, Gender::Male), 0.8},
                                    {"b", Demographics(70, Gender::Female), 0.8},
                                    {"c", Demographics(30, Gender::Unspecified), std::nullopt}};
        const auto rows = stratified_report(s);
        const auto get = [&](const std::string& g, const std::string& st) {
            return *std::find_if(rows.begin(), rows.end(),
                                 [&](const StratumRow& r) { return r.group == g && r.stratum == st; });
        };
        CHECK(*get("gender", "male").f1_mean == *get("gender", "female").f1_mean);
        CHECK(*get("gender", "male").f1_std == 0.0);
        CHECK(get("age", "other").subjects == 1);
        CHECK(get("age", "other").undefined == 1);
        CHECK_FALSE(get("age", "other").f1_mean);
        CHECK(get("gender", "other").subjects == 1);
    }
    SUBCASE("uniform ages fill every bin") {
        Rng rng(3);
        std::vector<SubjectScore> s;
        for (int i = 0; i < 50; ++i)
            s.push_back({"x", Demographics(54 + static_cast<int>(rng.below(37)), Gender::Male), 0.5});
        for (const auto& r : stratified_report(s))
            if (r.group == "age" && r.stratum != "other") CHECK(r.subjects > 0);
    }
}

TEST_CASE("sleep summary examples") {
    SUBCASE("all sleep") {
        const std::vector<SleepWake> h(480, S);
        const SleepSummary s = sleep_summary(h);
        CHECK(s.tst_s == 14400.0);
        CHECK(*s.latency_s == 0.0);
        CHECK(s.efficiency == 1.0);
        CHECK(*s.waso_s == 0.0);
    }
    SUBCASE("hand count") {
        const SleepSummary s = sleep_summary(std::vector<SleepWake>{W, W, S, S, W, S});
        CHECK(*s.latency_s == 60.0);
        CHECK(s.tst_s == 90.0);
        CHECK(*s.waso_s == 30.0);
        CHECK(s.efficiency == 0.5);
        CHECK(s.wake_s == 90.0);
    }
    SUBCASE("all wake") {
        const SleepSummary s = sleep_summary(std::vector<SleepWake>(10, W));
        CHECK(s.tst_s == 0.0);
        CHECK_FALSE(s.latency_s);
        CHECK_FALSE(s.waso_s);
    }
    CHECK_THROWS_AS(sleep_summary(std::vector<SleepWake>{}), ValidationError);
}

TEST_CASE("property: sleep summary identities") {
    Rng rng(12);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<SleepWake> h(1 + rng.below(600));
        const double p = rng.uniform();
        for (auto& v : h) v = rng.bernoulli(p) ? S : W;
        const SleepSummary s = sleep_summary(h);
        const double duration = 30.0 * static_cast<double>(h.size());
        CHECK(s.tst_s + s.wake_s == duration);
        CHECK(s.efficiency == s.tst_s / duration);
        if (s.waso_s) {
            CHECK(*s.waso_s <= s.wake_s);
            CHECK(*s.latency_s + *s.waso_s == s.wake_s);
        }
    }
}

TEST_CASE("report tables") {
    const auto c = cohort(14, 6, 20);
    CvOptions o;
    o.k = 3;
    const CvResult cv = cross_validate(c, quick(ModelKind::Logistic), o);
    const ReportHeader h{{"model", "logistic"}};
    const std::string folds = format_folds_table(cv, h);
    CHECK(folds.rfind("# format=ppgsleep-report/1\n# model=logistic\n# table=folds\nfold,", 0) == 0);
    CHECK(std::count(folds.begin(), folds.end(), '\n') == 4 + 3);
    const std::string summary = format_summary_table(cv, h);
    CHECK(summary.find("\nkappa,") != std::string::npos);
    CHECK(summary.find("\nkappa_pct,") != std::string::npos);

    const std::vector<StratumRow> rows = stratified_report(subject_scores(cv.subjects));
    const std::string strat = format_stratified_table(rows, h);
    CHECK(strat.find("age,other,0,0,undefined,undefined") != std::string::npos);
    const std::string sleep = format_sleep_summary_table(cv.subjects, h);
    CHECK(std::count(sleep.begin(), sleep.end(), '\n') == 4 + 6);
    const std::string text = format_summary_text(cv, rows, h);
    CHECK(text.find("Kappa") != std::string::npos);
}
