#include <cmath>
#include <cstdint>
#include <vector>

#include "internal.hpp"

namespace ppgsleep {
namespace {

using Lists = std::vector<std::vector<std::uint32_t>>;

struct Builder {
    const DesignMatrix& X;
    const GbdtParams& p;
    const std::vector<int>& features;
    const std::vector<double>& g;
    const std::vector<double>& h;
    std::vector<std::uint8_t> goes_left;

    double score(double G, double H) const { return G * G / (H + p.lambda); }

    void node(const Lists& lists, int depth, Tree& t) {
        double G = 0.0, H = 0.0;
        for (std::uint32_t i : lists[0]) {
            G += g[i];
            H += h[i];
        }
        const std::size_t at = t.nodes.size();
        t.nodes.push_back({});
        t.nodes[at].value = -G / (H + p.lambda);
        if (depth >= p.max_depth) return;

        double best = 0.0;
        std::size_t best_f = 0;
        double best_thr = 0.0;
        bool found = false;
        const double parent = score(G, H);
        for (std::size_t f = 0; f < features.size(); ++f) {
            const int col = features[f];
            const auto& list = lists[f];
            double GL = 0.0, HL = 0.0;
            for (std::size_t k = 0; k + 1 < list.size(); ++k) {
                GL += g[list[k]];
                HL += h[list[k]];
                const double a = X.at(list[k], col);
                const double b = X.at(list[k + 1], col);
                if (!(a < b)) continue;
                const double GR = G - GL, HR = H - HL;
                if (HL < p.min_child_weight || HR < p.min_child_weight) continue;
                const double gain = 0.5 * (score(GL, HL) + score(GR, HR) - parent) - p.gamma;
                if (gain > best) {
                    best = gain;
                    best_f = f;
                    best_thr = learn_detail::split_point(a, b);
                    found = true;
                }
            }
        }
        if (!found) return;

        const int col = features[best_f];
        for (std::uint32_t i : lists[best_f]) goes_left[i] = X.at(i, col) < best_thr;
        Lists left, right;
        learn_detail::partition_lists(lists, goes_left, left, right);

        t.nodes[at].feature = col;
        t.nodes[at].threshold = best_thr;
        t.nodes[at].value = 0.0;
        node(left, depth + 1, t);
        t.nodes[at].right = static_cast<std::int32_t>(t.nodes.size());
        node(right, depth + 1, t);
    }
};

}  // namespace

TrainedModel train_gbdt(const DesignMatrix& X, std::span<const SleepWake> y, const TrainConfig& config,
                        std::vector<double>* train_loss) {
    const auto counts = learn_detail::check_training_input(X, y, config, 2);
    learn_detail::require_both_classes(counts);
    const GbdtParams& p = config.gbdt;
    const std::size_t n = X.rows();

    std::vector<double> w(n), target(n);
    double pos = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool sleep = y[i] == SleepWake::Sleep;
        w[i] = sleep ? config.positive_weight : 1.0;
        target[i] = sleep ? 1.0 : 0.0;
        total += w[i];
        if (sleep) pos += w[i];
    }

    TrainedModel m;
    m.kind = ModelKind::Gbdt;
    m.config = config;
    m.base_score = std::log(pos / (total - pos));
    m.learning_rate = p.learning_rate;

    const std::vector<int> features = learn_detail::active_columns(config);
    Lists sorted;
    for (int col : features) sorted.push_back(learn_detail::sorted_by_column(X, col));

    std::vector<double> margin(n, m.base_score), g(n), h(n);
    Builder b{X, p, features, g, h, std::vector<std::uint8_t>(n, 0)};
    if (train_loss) train_loss->clear();
    m.trees.reserve(static_cast<std::size_t>(p.n_rounds));
    for (int round = 0; round < p.n_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double q = learn_detail::sigmoid(margin[i]);
            g[i] = w[i] * (q - target[i]);
            h[i] = w[i] * q * (1.0 - q);
        }
        Tree t;
        b.node(sorted, 0, t);
        for (std::size_t i = 0; i < n; ++i) margin[i] += p.learning_rate * t.eval(X.row(i));
        m.trees.push_back(std::move(t));
        if (train_loss) {
            double loss = 0.0;
            for (std::size_t i = 0; i < n; ++i) loss += learn_detail::softplus(margin[i]) - target[i] * margin[i];
            train_loss->push_back(loss / static_cast<double>(n));
        }
    }
    return m;
}

}  // namespace ppgsleep
