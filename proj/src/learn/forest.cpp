#include <cstdint>
#include <vector>

#include "internal.hpp"
#include "ppgsleep/random.hpp"

namespace ppgsleep {
namespace {

using learn_detail::partition_lists;
using Lists = std::vector<std::vector<std::uint32_t>>;

struct ForestData {
    const DesignMatrix& X;
    std::span<const SleepWake> y;
    const TrainConfig& config;
    std::vector<int> features;  // active columns
};

class TreeGrower {
public:
    TreeGrower(const ForestData& data, std::vector<std::uint32_t> draws, Rng& rng)
        : d_(data), draws_(std::move(draws)), rng_(rng), goes_left_(data.X.rows(), 0) {}

    Tree grow(const std::vector<std::vector<std::uint32_t>>& sorted) {
        Lists root(d_.features.size());
        for (std::size_t f = 0; f < d_.features.size(); ++f)
            for (std::uint32_t i : sorted[f])
                if (draws_[i]) root[f].push_back(i);
        Tree t;
        node(root, 0, t);
        return t;
    }

private:
    struct Stats {
        double pos = 0.0;  // weighted Sleep mass
        double neg = 0.0;
        std::uint64_t n = 0;  // bootstrap draws
    };

    double weight(std::uint32_t i) const {
        return draws_[i] * (d_.y[i] == SleepWake::Sleep ? d_.config.positive_weight : 1.0);
    }

    void add(Stats& s, std::uint32_t i) const {
        (d_.y[i] == SleepWake::Sleep ? s.pos : s.neg) += weight(i);
        s.n += draws_[i];
    }

    static double purity_score(const Stats& s) {
        const double w = s.pos + s.neg;
        return w > 0.0 ? (s.pos * s.pos + s.neg * s.neg) / w : 0.0;
    }

    void node(const Lists& lists, int depth, Tree& t) {
        Stats total;
        for (std::uint32_t i : lists[0]) add(total, i);

        const std::size_t at = t.nodes.size();
        t.nodes.push_back({});
        const auto& fp = d_.config.forest;
        const bool pure = total.pos == 0.0 || total.neg == 0.0;
        const bool depth_cap = fp.max_depth > 0 && depth >= fp.max_depth;
        if (pure || depth_cap || total.n < 2 * static_cast<std::uint64_t>(fp.min_leaf) || !split(lists, total, t, at, depth)) {
            t.nodes[at].value = total.pos / (total.pos + total.neg);
        }
    }

    // Returns false when no admissible split improves the Gini impurity.
    bool split(const Lists& lists, const Stats& total, Tree& t, std::size_t at, int depth) {
        const auto& fp = d_.config.forest;
        const std::uint64_t min_leaf = static_cast<std::uint64_t>(fp.min_leaf);

        // Visit features in random order; the first `mtry` that vary in this
        // node are candidates.
        std::vector<std::size_t> order(d_.features.size());
        for (std::size_t f = 0; f < order.size(); ++f) order[f] = f;
        for (std::size_t f = order.size(); f > 1; --f) std::swap(order[f - 1], order[rng_.below(f)]);

        const double parent = purity_score(total);
        double best_gain = 0.0;
        std::size_t best_f = 0;
        double best_thr = 0.0;
        int tried = 0;
        for (std::size_t f : order) {
            if (tried >= fp.mtry) break;
            const int col = d_.features[f];
            const auto& list = lists[f];
            if (!(d_.X.at(list.front(), col) < d_.X.at(list.back(), col))) continue;
            ++tried;

            Stats left;
            for (std::size_t k = 0; k + 1 < list.size(); ++k) {
                add(left, list[k]);
                const double a = d_.X.at(list[k], col);
                const double b = d_.X.at(list[k + 1], col);
                if (!(a < b)) continue;
                if (left.n < min_leaf || total.n - left.n < min_leaf) continue;
                const Stats right{total.pos - left.pos, total.neg - left.neg, total.n - left.n};
                const double gain = purity_score(left) + purity_score(right) - parent;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_f = f;
                    best_thr = learn_detail::split_point(a, b);
                }
            }
        }
        if (!(best_gain > 1e-12 * (total.pos + total.neg))) return false;

        const int col = d_.features[best_f];
        for (std::uint32_t i : lists[best_f]) goes_left_[i] = d_.X.at(i, col) < best_thr;
        Lists left, right;
        partition_lists(lists, goes_left_, left, right);

        t.nodes[at].feature = col;
        t.nodes[at].threshold = best_thr;
        node(left, depth + 1, t);
        t.nodes[at].right = static_cast<std::int32_t>(t.nodes.size());
        node(right, depth + 1, t);
        return true;
    }

    const ForestData& d_;
    std::vector<std::uint32_t> draws_;
    Rng& rng_;
    std::vector<std::uint8_t> goes_left_;
};

}  // namespace

TrainedModel train_random_forest(const DesignMatrix& X, std::span<const SleepWake> y, const TrainConfig& config) {
    const auto counts = learn_detail::check_training_input(X, y, config, 1);

    TrainedModel m;
    m.kind = ModelKind::RandomForest;
    m.config = config;
    if (counts.sleep == 0 || counts.wake == 0) {
        // Constant model: one leaf per tree would be identical, keep a single one.
        Tree leaf;
        leaf.nodes.push_back({-1, 0.0, -1, counts.sleep > 0 ? 1.0 : 0.0});
        m.trees.push_back(leaf);
        return m;
    }

    const ForestData data{X, y, config, learn_detail::active_columns(config)};
    std::vector<std::vector<std::uint32_t>> sorted;
    for (int col : data.features) sorted.push_back(learn_detail::sorted_by_column(X, col));

    const std::size_t n = X.rows();
    m.trees.reserve(static_cast<std::size_t>(config.forest.n_trees));
    for (int t = 0; t < config.forest.n_trees; ++t) {
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(t)));
        std::vector<std::uint32_t> draws(n, config.forest.bootstrap ? 0u : 1u);
        if (config.forest.bootstrap)
            for (std::size_t k = 0; k < n; ++k) ++draws[rng.below(n)];
        TreeGrower grower(data, std::move(draws), rng);
        m.trees.push_back(grower.grow(sorted));
    }
    return m;
}

}  // namespace ppgsleep
