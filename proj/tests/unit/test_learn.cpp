#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "helpers.hpp"
#include "ppgsleep/error.hpp"
#include "ppgsleep/learn.hpp"
#include "ppgsleep/random.hpp"

using namespace ppgsleep;

namespace {

struct Data {
    std::vector<FeatureRow> rows;
    std::vector<SleepWake> y;
    DesignMatrix X() const { return DesignMatrix(rows); }
};

SleepWake label(bool sleep) { return sleep ? SleepWake::Sleep : SleepWake::Wake; }

// Overlapping classes in all three columns.
Data noisy_cohort(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    Data d;
    for (std::size_t i = 0; i < n; ++i) {
        const bool s = rng.bernoulli(0.6);
        d.rows.push_back({rng.normal(s ? 58.0 : 75.0, 7.0), std::abs(rng.normal(s ? 0.04 : 0.07, 0.02)),
                          s ? (rng.bernoulli(0.8) ? 0.0 : rng.uniform(0, 20)) : rng.uniform(0, 200)});
        d.y.push_back(label(s));
    }
    return d;
}

TrainConfig config_for(ModelKind kind) {
    TrainConfig c;
    c.kind = kind;
    c.seed = 17;
    c.forest.n_trees = 40;
    c.gbdt.n_rounds = 30;
    return c;
}

double sigmoid(double m) { return 1.0 / (1.0 + std::exp(-m)); }

double accuracy(const TrainedModel& m, const Data& d) {
    const auto pred = predict(m, d.X(), 0.5);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == d.y[i];
    return static_cast<double>(ok) / static_cast<double>(pred.size());
}

}  // namespace

TEST_CASE("model kind names") {
    for (ModelKind k : {ModelKind::Logistic, ModelKind::RandomForest, ModelKind::Gbdt})
        CHECK(parse_model_kind(to_string(k)) == k);
    CHECK(to_string(ModelKind::RandomForest) == "rf");
    CHECK_FALSE(parse_model_kind("xgboost"));
}

TEST_CASE("config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.threshold = 1.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.threshold = 0.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.forest.n_trees = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.gbdt.n_rounds = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.columns = {false, false, false};
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("logistic: separable toy set") {
    Data d;
    for (int i = 0; i < 100; ++i) {
        d.rows.push_back({-1.0, 0.0, 0.0});
        d.y.push_back(SleepWake::Wake);
        d.rows.push_back({1.0, 0.0, 0.0});
        d.y.push_back(SleepWake::Sleep);
    }
    TrainConfig c = config_for(ModelKind::Logistic);
    c.logistic.lambda = 1e-4;
    const auto m = train_logistic(d.X(), d.y, c);
    CHECK(accuracy(m, d) == 1.0);
    CHECK(m.weights[0] > 0.0);
}

TEST_CASE("logistic: symmetric data gives zero intercept") {
    Rng rng(5);
    Data d;
    for (int i = 0; i < 50; ++i) {
        const double x = rng.uniform(0.1, 3.0);
        const bool flip = rng.bernoulli(0.2);
        d.rows.push_back({x, 0.0, 0.0});
        d.y.push_back(label(!flip));
        d.rows.push_back({-x, 0.0, 0.0});
        d.y.push_back(label(flip));
    }
    const auto m = train_logistic(d.X(), d.y, config_for(ModelKind::Logistic));
    CHECK(std::abs(m.intercept) < 1e-6);
}

TEST_CASE("logistic: grid-search oracle on 20 points") {
    Rng rng(8);
    Data d;
    for (int i = 0; i < 20; ++i) {
        const double x = rng.uniform(-2.0, 2.0);
        d.rows.push_back({x, rng.normal(), rng.normal()});
        d.y.push_back(label(rng.uniform() < sigmoid(1.5 * x + 0.4)));
    }
    TrainConfig c = config_for(ModelKind::Logistic);
    c.columns = {true, false, false};
    const auto m = train_logistic(d.X(), d.y, c);

    const DesignMatrix X = d.X();
    const auto f = [&](double w, double b) { return detail::logistic_objective(X, d.y, c, {b, w, 0.0, 0.0}); };
    // Coarse grid, then successively finer grids around the incumbent.
    double bw = 0.0, bb = 0.0, best = f(0.0, 0.0);
    double step = 0.05, radius = 10.0;
    double cw = 0.0, cb = 0.0;
    for (int level = 0; level < 4; ++level) {
        const int k = static_cast<int>(std::lround(radius / step));
        for (int i = -k; i <= k; ++i)
            for (int j = -k; j <= k; ++j) {
                const double w = cw + i * step, b = cb + j * step;
                const double v = f(w, b);
                if (v < best) {
                    best = v;
                    bw = w;
                    bb = b;
                }
            }
        cw = bw;
        cb = bb;
        radius = 2.0 * step;
        step /= 10.0;
    }
    CHECK(std::abs(m.weights[0] - bw) < 1e-3);
    CHECK(std::abs(m.intercept - bb) < 1e-3);
    CHECK(m.weights[1] == 0.0);
    CHECK(m.weights[2] == 0.0);
}

TEST_CASE("logistic: gradient matches finite differences and vanishes at the optimum") {
    const Data d = noisy_cohort(21, 200);
    const DesignMatrix X = d.X();
    TrainConfig c = config_for(ModelKind::Logistic);
    c.positive_weight = 1.7;
    c.logistic.lambda = 1e-3;
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const std::array<double, 4> beta{rng.normal(0, 2), rng.normal(0, 0.05), rng.normal(0, 10), rng.normal(0, 0.02)};
        const auto g = detail::logistic_gradient(X, d.y, c, beta);
        for (std::size_t j = 0; j < 4; ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(beta[j]));
            auto up = beta, down = beta;
            up[j] += h;
            down[j] -= h;
            const double fd = (detail::logistic_objective(X, d.y, c, up) - detail::logistic_objective(X, d.y, c, down)) /
                              (2.0 * h);
            CHECK(std::abs(fd - g[j]) <= 1e-4 * std::max(1.0, std::abs(g[j])));
        }
    }
    const auto m = train_logistic(X, d.y, c);
    const auto g = detail::logistic_gradient(X, d.y, c, {m.intercept, m.weights[0], m.weights[1], m.weights[2]});
    for (double v : g) CHECK(std::abs(v) < 1e-6);
}

TEST_CASE("input errors") {
    Data one;
    for (int i = 0; i < 5; ++i) {
        one.rows.push_back({60.0 + i, 0.05, 1.0});
        one.y.push_back(SleepWake::Sleep);
    }
    CHECK_THROWS_AS(train_logistic(one.X(), one.y, config_for(ModelKind::Logistic)), ValidationError);
    CHECK_THROWS_AS(train_gbdt(one.X(), one.y, config_for(ModelKind::Gbdt)), ValidationError);

    Data bad = noisy_cohort(1, 10);
    bad.rows[3][1] = std::numeric_limits<double>::quiet_NaN();
    for (ModelKind k : {ModelKind::Logistic, ModelKind::RandomForest, ModelKind::Gbdt})
        CHECK_THROWS_AS(train(bad.X(), bad.y, config_for(k)), ValidationError);

    const Data ok = noisy_cohort(1, 10);
    std::vector<SleepWake> short_y(ok.y.begin(), ok.y.end() - 1);
    CHECK_THROWS_AS(train(ok.X(), short_y, config_for(ModelKind::Gbdt)), ValidationError);
}

TEST_CASE("random forest: pure class") {
    Data d = noisy_cohort(3, 30);
    std::fill(d.y.begin(), d.y.end(), SleepWake::Wake);
    const auto m = train_random_forest(d.X(), d.y, config_for(ModelKind::RandomForest));
    REQUIRE_FALSE(m.trees.empty());
    for (const auto& t : m.trees) {
        CHECK(t.nodes.size() == 1);
        CHECK(t.nodes[0].leaf());
    }
    for (double p : predict_proba(m, d.X())) CHECK(p == 0.0);
}

TEST_CASE("random forest: XOR is learnable with axis-aligned splits") {
    Rng rng(9);
    Data d;
    for (int i = 0; i < 400; ++i) {
        const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
        d.rows.push_back({a, b, 0.0});
        d.y.push_back(label((a > 0) != (b > 0)));
    }
    TrainConfig c = config_for(ModelKind::RandomForest);
    c.forest.n_trees = 100;
    const auto m = train_random_forest(d.X(), d.y, c);
    CHECK(accuracy(m, d) > 0.95);
}

TEST_CASE("determinism: same seed, same model") {
    const Data d = noisy_cohort(4, 300);
    for (ModelKind k : {ModelKind::Logistic, ModelKind::RandomForest, ModelKind::Gbdt}) {
        const auto a = train(d.X(), d.y, config_for(k));
        const auto b = train(d.X(), d.y, config_for(k));
        CHECK(a == b);
        CHECK(predict_proba(a, d.X()) == predict_proba(b, d.X()));
    }
    TrainConfig other = config_for(ModelKind::RandomForest);
    other.seed = 18;
    CHECK_FALSE(train(d.X(), d.y, other) == train(d.X(), d.y, config_for(ModelKind::RandomForest)));
}

TEST_CASE("gbdt: single depth-1 round matches the exhaustive-threshold oracle") {
    Rng rng(77);
    int splits = 0;
    for (int trial = 0; trial < 200; ++trial) {
        Data d;
        std::size_t pos = 0;
        for (int i = 0; i < 6; ++i) {
            d.rows.push_back({std::round(rng.uniform(0, 20)), rng.normal(), 3.0});
            const bool s = rng.bernoulli(0.5);
            pos += s;
            d.y.push_back(label(s));
        }
        if (pos == 0 || pos == 6) continue;
        TrainConfig c = config_for(ModelKind::Gbdt);
        c.gbdt.n_rounds = 1;
        c.gbdt.max_depth = 1;
        c.gbdt.min_child_weight = 0.0;
        c.gbdt.lambda = rng.uniform(0.0, 2.0);
        const auto m = train_gbdt(d.X(), d.y, c);
        const double lambda = c.gbdt.lambda;

        const double prior = static_cast<double>(pos) / 6.0;
        CHECK(std::abs(m.base_score - std::log(prior / (1.0 - prior))) < 1e-12);
        std::array<double, 6> g{}, h{};
        for (std::size_t i = 0; i < 6; ++i) {
            g[i] = prior - (d.y[i] == SleepWake::Sleep ? 1.0 : 0.0);
            h[i] = prior * (1.0 - prior);
        }
        // Every threshold between consecutive distinct values of every column.
        struct Cand {
            int feature;
            double thr, gain, wl, wr;
        };
        std::vector<Cand> cands;
        for (int f = 0; f < 3; ++f) {
            std::vector<double> vals;
            for (const auto& r : d.rows) vals.push_back(r[static_cast<std::size_t>(f)]);
            std::sort(vals.begin(), vals.end());
            vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
            for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
                const double thr = vals[k] + (vals[k + 1] - vals[k]) / 2.0;
                double GL = 0, HL = 0, GR = 0, HR = 0;
                for (std::size_t i = 0; i < 6; ++i) {
                    if (d.rows[i][static_cast<std::size_t>(f)] < thr) {
                        GL += g[i];
                        HL += h[i];
                    } else {
                        GR += g[i];
                        HR += h[i];
                    }
                }
                const double gain = 0.5 * (GL * GL / (HL + lambda) + GR * GR / (HR + lambda) -
                                           (GL + GR) * (GL + GR) / (HL + HR + lambda));
                cands.push_back({f, thr, gain, -GL / (HL + lambda), -GR / (HR + lambda)});
            }
        }
        double best = 0.0;
        for (const auto& cd : cands) best = std::max(best, cd.gain);

        REQUIRE(m.trees.size() == 1);
        const Tree& t = m.trees[0];
        if (best <= 1e-12) {
            CHECK(t.nodes.size() == 1);
            continue;
        }
        REQUIRE(t.nodes.size() == 3);
        ++splits;
        // Label patterns can tie exactly; any of the maximal candidates is
        // a correct answer, and the leaves must match that candidate.
        const auto chosen = std::find_if(cands.begin(), cands.end(), [&](const Cand& cd) {
            return cd.feature == t.nodes[0].feature && cd.thr == t.nodes[0].threshold;
        });
        REQUIRE(chosen != cands.end());
        CHECK(std::abs(chosen->gain - best) <= 1e-10);
        CHECK(std::abs(t.nodes[1].value - chosen->wl) <= 1e-10);
        CHECK(std::abs(t.nodes[static_cast<std::size_t>(t.nodes[0].right)].value - chosen->wr) <= 1e-10);
        CHECK(t.nodes[0].feature != 2);  // constant column never splits
    }
    CHECK(splits >= 100);
}

TEST_CASE("gbdt: leaf weight minimizes the second-order objective") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const double G = rng.normal(0, 5), H = rng.uniform(0.01, 10), lambda = rng.uniform(0, 3);
        const auto obj = [&](double w) { return G * w + 0.5 * (H + lambda) * w * w; };
        // Golden-section search on a bracket that surely holds the minimum.
        double lo = -1e3, hi = 1e3;
        const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
        for (int it = 0; it < 200; ++it) {
            const double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
            (obj(a) < obj(b) ? hi : lo) = (obj(a) < obj(b) ? b : a);
        }
        CHECK(std::abs((lo + hi) / 2.0 - (-G / (H + lambda))) < 1e-6);
    }
}

TEST_CASE("gbdt: training loss never increases") {
    const Data d = noisy_cohort(12, 500);
    TrainConfig c = config_for(ModelKind::Gbdt);
    c.gbdt.n_rounds = 100;
    std::vector<double> loss;
    train_gbdt(d.X(), d.y, c, &loss);
    REQUIRE(loss.size() == 100);
    double pos = 0;
    for (auto s : d.y) pos += s == SleepWake::Sleep;
    const double p = pos / static_cast<double>(d.y.size());
    const double prior_loss = -(p * std::log(p) + (1 - p) * std::log(1 - p));
    CHECK(loss[0] <= prior_loss + 1e-12);
    for (std::size_t r = 1; r < loss.size(); ++r) CHECK(loss[r] <= loss[r - 1] + 1e-12);
}

TEST_CASE("gbdt: identical rows predict the prior") {
    Data d;
    for (int i = 0; i < 10; ++i) {
        d.rows.push_back({60.0, 0.05, 3.0});
        d.y.push_back(label(i < 7));
    }
    const auto m = train_gbdt(d.X(), d.y, config_for(ModelKind::Gbdt));
    for (double p : predict_proba(m, d.X())) CHECK(std::abs(p - 0.7) < 1e-12);
}

TEST_CASE("prediction contract") {
    CHECK(labels_from_proba(std::vector<double>{0.49, 0.5, 0.51}, 0.5) ==
          std::vector<SleepWake>{SleepWake::Wake, SleepWake::Sleep, SleepWake::Sleep});

    TrainedModel prior;
    prior.kind = ModelKind::Logistic;
    prior.intercept = std::log(0.6 / 0.4);
    const Data d = noisy_cohort(6, 20);
    for (auto s : predict(prior, d.X(), 0.5)) CHECK(s == SleepWake::Sleep);

    const DesignMatrix two(2, {1.0, 2.0, 3.0, 4.0});
    CHECK_THROWS_AS(predict_proba(prior, two), ValidationError);
    const DesignMatrix nan(3, {1.0, std::numeric_limits<double>::infinity(), 3.0});
    CHECK_THROWS_AS(predict_proba(prior, nan), ValidationError);

    for (ModelKind k : {ModelKind::Logistic, ModelKind::RandomForest, ModelKind::Gbdt}) {
        const auto m = train(d.X(), d.y, config_for(k));
        for (double p : predict_proba(m, noisy_cohort(7, 200).X())) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
    }
}

TEST_CASE("property: raising the threshold never adds Sleep predictions") {
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> p(50);
        for (double& v : p) v = rng.bernoulli(0.1) ? 0.5 : rng.uniform();
        double t1 = rng.uniform(0.01, 0.99), t2 = rng.uniform(0.01, 0.99);
        if (t1 > t2) std::swap(t1, t2);
        const auto count = [](const std::vector<SleepWake>& v) { return std::count(v.begin(), v.end(), SleepWake::Sleep); };
        CHECK(count(labels_from_proba(p, t2)) <= count(labels_from_proba(p, t1)));
    }
}

TEST_CASE("property: tree models ignore strictly monotone feature transforms") {
    const Data d = noisy_cohort(15, 150);
    Data t = d;
    for (auto& r : t.rows) r[2] = std::cbrt(r[2]) * 3.0 + 1.0;
    for (ModelKind k : {ModelKind::RandomForest, ModelKind::Gbdt}) {
        const auto a = predict(train(d.X(), d.y, config_for(k)), d.X(), 0.5);
        const auto b = predict(train(t.X(), t.y, config_for(k)), t.X(), 0.5);
        CHECK(a == b);
    }
}

TEST_CASE("model serialization round trip") {
    testutil::TempDir dir;
    const Data d = noisy_cohort(10, 200);
    for (ModelKind k : {ModelKind::Logistic, ModelKind::RandomForest, ModelKind::Gbdt}) {
        TrainConfig c = config_for(k);
        c.positive_weight = 1.25;
        c.columns = {true, false, true};
        const auto m = train(d.X(), d.y, c);
        const std::string text = format_model(m);
        const TrainedModel back = parse_model(text);
        CHECK(back == m);
        CHECK(format_model(back) == text);
        const auto path = dir / (std::string(to_string(k)) + ".model");
        save_model(m, path);
        const TrainedModel loaded = load_model(path);
        CHECK(predict_proba(loaded, d.X()) == predict_proba(m, d.X()));
    }
    CHECK_THROWS(parse_model("format=something-else\n"));
    CHECK_THROWS(load_model(dir / "missing.model"));
}
