// Model text format, version ppgsleep-model/1:
//
//   # format=ppgsleep-model/1
//   # kind=logistic|rf|gbdt
//   # <hyperparameter>=<value>     (every TrainConfig field)
//   # intercept= / weights=a;b;c   (logistic)
//   # base_score= / learning_rate= (gbdt)
//   tree,node,feature,threshold,right,value
//
// One row per tree node in preorder. Leaves have feature -1 and right -1;
// doubles use the shortest round-trip representation.

#include <charconv>
#include <string>

#include "ppgsleep/error.hpp"
#include "ppgsleep/learn.hpp"
#include "ppgsleep/text_format.hpp"

namespace ppgsleep {
namespace {

constexpr std::string_view kFormat = "ppgsleep-model/1";
constexpr std::string_view kWhat = "model file";

void meta(std::string& out, std::string_view key, const std::string& value) {
    out += "# ";
    out += key;
    out += '=';
    out += value;
    out += '\n';
}

std::string num(double v) { return text::format_double(v); }

std::string columns_string(const std::array<bool, kFeatureCount>& cols) {
    static constexpr std::string_view names[] = {"hr", "hrv", "act"};
    std::string s;
    for (std::size_t j = 0; j < kFeatureCount; ++j)
        if (cols[j]) s += (s.empty() ? "" : ";") + std::string(names[j]);
    return s;
}

double get_double(const text::Table& t, std::string_view key) {
    const auto v = text::parse_double(t.require(key, kWhat));
    if (!v) throw ParseError(std::string(kWhat) + ": bad number for '" + std::string(key) + "'", 0);
    return *v;
}

std::int64_t get_int(const text::Table& t, std::string_view key) {
    const auto v = text::parse_int(t.require(key, kWhat));
    if (!v) throw ParseError(std::string(kWhat) + ": bad integer for '" + std::string(key) + "'", 0);
    return *v;
}

}  // namespace

std::string format_model(const TrainedModel& model) {
    const TrainConfig& c = model.config;
    std::string out;
    meta(out, "format", std::string(kFormat));
    meta(out, "kind", std::string(to_string(model.kind)));
    meta(out, "seed", std::to_string(c.seed));
    meta(out, "threshold", num(c.threshold));
    meta(out, "positive_weight", num(c.positive_weight));
    meta(out, "columns", columns_string(c.columns));
    meta(out, "lr_lambda", num(c.logistic.lambda));
    meta(out, "lr_max_iter", std::to_string(c.logistic.max_iter));
    meta(out, "lr_grad_tol", num(c.logistic.grad_tol));
    meta(out, "rf_trees", std::to_string(c.forest.n_trees));
    meta(out, "rf_mtry", std::to_string(c.forest.mtry));
    meta(out, "rf_min_leaf", std::to_string(c.forest.min_leaf));
    meta(out, "rf_bootstrap", c.forest.bootstrap ? "true" : "false");
    meta(out, "rf_max_depth", std::to_string(c.forest.max_depth));
    meta(out, "gbdt_rounds", std::to_string(c.gbdt.n_rounds));
    meta(out, "gbdt_max_depth", std::to_string(c.gbdt.max_depth));
    meta(out, "gbdt_learning_rate", num(c.gbdt.learning_rate));
    meta(out, "gbdt_lambda", num(c.gbdt.lambda));
    meta(out, "gbdt_gamma", num(c.gbdt.gamma));
    meta(out, "gbdt_min_child_weight", num(c.gbdt.min_child_weight));
    meta(out, "intercept", num(model.intercept));
    meta(out, "weights", num(model.weights[0]) + ";" + num(model.weights[1]) + ";" + num(model.weights[2]));
    meta(out, "base_score", num(model.base_score));
    meta(out, "learning_rate", num(model.learning_rate));
    out += "tree,node,feature,threshold,right,value\n";
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        const auto& nodes = model.trees[t].nodes;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const TreeNode& n = nodes[i];
            out += std::to_string(t);
            out += ',';
            out += std::to_string(i);
            out += ',';
            out += std::to_string(n.feature);
            out += ',';
            text::append_double(out, n.threshold);
            out += ',';
            out += std::to_string(n.right);
            out += ',';
            text::append_double(out, n.value);
            out += '\n';
        }
    }
    return out;
}

TrainedModel parse_model(std::string_view content) {
    TrainedModel m;
    std::vector<std::pair<std::size_t, std::vector<std::string_view>>> rows;
    const text::Table t =
        text::scan_table(content, kWhat, std::vector<std::string_view>{"tree", "node", "feature", "threshold", "right", "value"},
                         [&](std::size_t line, const std::vector<std::string_view>& f) { rows.emplace_back(line, f); });
    if (t.require("format", kWhat) != kFormat)
        throw ParseError(std::string(kWhat) + ": unsupported format '" + t.require("format", kWhat) + "'", 0);
    const auto kind = parse_model_kind(t.require("kind", kWhat));
    if (!kind) throw ParseError(std::string(kWhat) + ": unknown kind '" + t.require("kind", kWhat) + "'", 0);
    m.kind = *kind;

    TrainConfig& c = m.config;
    c.kind = m.kind;
    {
        const std::string& v = t.require("seed", kWhat);
        const auto r = std::from_chars(v.data(), v.data() + v.size(), c.seed);
        if (r.ec != std::errc() || r.ptr != v.data() + v.size())
            throw ParseError(std::string(kWhat) + ": bad integer for 'seed'", 0);
    }
    c.threshold = get_double(t, "threshold");
    c.positive_weight = get_double(t, "positive_weight");
    c.columns = {false, false, false};
    for (auto name : text::split(t.require("columns", kWhat), ';')) {
        if (name == "hr") c.columns[0] = true;
        else if (name == "hrv") c.columns[1] = true;
        else if (name == "act") c.columns[2] = true;
        else throw ParseError(std::string(kWhat) + ": unknown column '" + std::string(name) + "'", 0);
    }
    c.logistic.lambda = get_double(t, "lr_lambda");
    c.logistic.max_iter = static_cast<int>(get_int(t, "lr_max_iter"));
    c.logistic.grad_tol = get_double(t, "lr_grad_tol");
    c.forest.n_trees = static_cast<int>(get_int(t, "rf_trees"));
    c.forest.mtry = static_cast<int>(get_int(t, "rf_mtry"));
    c.forest.min_leaf = static_cast<int>(get_int(t, "rf_min_leaf"));
    c.forest.bootstrap = t.require("rf_bootstrap", kWhat) == "true";
    c.forest.max_depth = static_cast<int>(get_int(t, "rf_max_depth"));
    c.gbdt.n_rounds = static_cast<int>(get_int(t, "gbdt_rounds"));
    c.gbdt.max_depth = static_cast<int>(get_int(t, "gbdt_max_depth"));
    c.gbdt.learning_rate = get_double(t, "gbdt_learning_rate");
    c.gbdt.lambda = get_double(t, "gbdt_lambda");
    c.gbdt.gamma = get_double(t, "gbdt_gamma");
    c.gbdt.min_child_weight = get_double(t, "gbdt_min_child_weight");
    c.validate();

    m.intercept = get_double(t, "intercept");
    const auto w = text::split(t.require("weights", kWhat), ';');
    if (w.size() != kFeatureCount) throw ParseError(std::string(kWhat) + ": weights need 3 entries", 0);
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        const auto v = text::parse_double(w[j]);
        if (!v) throw ParseError(std::string(kWhat) + ": bad weight", 0);
        m.weights[j] = *v;
    }
    m.base_score = get_double(t, "base_score");
    m.learning_rate = get_double(t, "learning_rate");

    for (const auto& [line, f] : rows) {
        const auto tree = text::parse_int(f[0]);
        const auto node = text::parse_int(f[1]);
        const auto feature = text::parse_int(f[2]);
        const auto thr = text::parse_double(f[3]);
        const auto right = text::parse_int(f[4]);
        const auto value = text::parse_double(f[5]);
        if (!tree || !node || !feature || !thr || !right || !value)
            throw ParseError(std::string(kWhat) + ": malformed node row", line);
        if (*tree == static_cast<std::int64_t>(m.trees.size())) m.trees.emplace_back();
        if (m.trees.empty() || *tree != static_cast<std::int64_t>(m.trees.size()) - 1 ||
            *node != static_cast<std::int64_t>(m.trees.back().nodes.size()))
            throw ParseError(std::string(kWhat) + ": nodes out of order", line);
        if (*feature >= static_cast<std::int64_t>(kFeatureCount))
            throw ParseError(std::string(kWhat) + ": feature index out of range", line);
        m.trees.back().nodes.push_back(
            {static_cast<int>(*feature < 0 ? -1 : *feature), *thr, static_cast<std::int32_t>(*right), *value});
    }
    // Every split must point at a later node inside its own tree, so
    // evaluation terminates.
    for (const Tree& tree : m.trees) {
        const auto n = static_cast<std::int64_t>(tree.nodes.size());
        for (std::int64_t i = 0; i < n; ++i) {
            const TreeNode& nd = tree.nodes[static_cast<std::size_t>(i)];
            if (!nd.leaf() && (i + 1 >= n || nd.right <= i + 1 || nd.right >= n))
                throw ParseError(std::string(kWhat) + ": malformed tree structure", 0);
        }
    }
    if (m.kind != ModelKind::Logistic && m.trees.empty()) throw ParseError(std::string(kWhat) + ": no trees", 0);
    return m;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    text::write_file(path, format_model(model));
}

TrainedModel load_model(const std::filesystem::path& path) { return parse_model(text::read_file(path)); }

}  // namespace ppgsleep
