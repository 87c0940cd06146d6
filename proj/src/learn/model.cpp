#include <cmath>
#include <string>

#include "ppgsleep/error.hpp"
#include "ppgsleep/learn.hpp"

namespace ppgsleep {

std::string_view to_string(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::Logistic: return "logistic";
        case ModelKind::RandomForest: return "rf";
        case ModelKind::Gbdt: return "gbdt";
    }
    return "logistic";
}

std::optional<ModelKind> parse_model_kind(std::string_view s) noexcept {
    if (s == "logistic") return ModelKind::Logistic;
    if (s == "rf") return ModelKind::RandomForest;
    if (s == "gbdt") return ModelKind::Gbdt;
    return std::nullopt;
}

void TrainConfig::validate() const {
    if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("threshold must lie in (0, 1)");
    if (!(positive_weight > 0.0) || !std::isfinite(positive_weight))
        throw ValidationError("positive-class weight must be positive");
    if (!columns[0] && !columns[1] && !columns[2]) throw ValidationError("at least one feature column is required");
    if (!(logistic.lambda >= 0.0) || logistic.max_iter < 1 || !(logistic.grad_tol > 0.0))
        throw ValidationError("invalid logistic regression parameters");
    if (forest.n_trees < 1 || forest.mtry < 1 || forest.min_leaf < 1 || forest.max_depth < 0)
        throw ValidationError("random forest counts must be >= 1");
    if (gbdt.n_rounds < 1 || gbdt.max_depth < 1 || !(gbdt.learning_rate > 0.0) || !(gbdt.lambda >= 0.0) ||
        !(gbdt.gamma >= 0.0) || !(gbdt.min_child_weight >= 0.0))
        throw ValidationError("invalid gradient boosting parameters");
}

DesignMatrix::DesignMatrix(std::size_t cols, std::vector<double> values) : cols_(cols), values_(std::move(values)) {
    if (cols_ == 0 || values_.size() % cols_ != 0)
        throw ValidationError("design matrix values do not fill whole rows");
}

DesignMatrix::DesignMatrix(std::span<const FeatureRow> rows) : cols_(kFeatureCount) {
    values_.reserve(rows.size() * kFeatureCount);
    for (const auto& r : rows) values_.insert(values_.end(), r.begin(), r.end());
}

double Tree::eval(const double* x) const noexcept {
    std::size_t i = 0;
    while (!nodes[i].leaf()) {
        const TreeNode& n = nodes[i];
        i = x[n.feature] < n.threshold ? i + 1 : static_cast<std::size_t>(n.right);
    }
    return nodes[i].value;
}

TrainedModel train(const DesignMatrix& X, std::span<const SleepWake> y, const TrainConfig& config) {
    switch (config.kind) {
        case ModelKind::Logistic: return train_logistic(X, y, config);
        case ModelKind::RandomForest: return train_random_forest(X, y, config);
        case ModelKind::Gbdt: return train_gbdt(X, y, config);
    }
    throw ValidationError("unknown model kind");
}

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void check_input(const DesignMatrix& X) {
    if (X.cols() != kFeatureCount)
        throw ValidationError("expected " + std::to_string(kFeatureCount) + " feature columns, got " +
                              std::to_string(X.cols()));
    for (std::size_t i = 0; i < X.rows(); ++i)
        for (std::size_t j = 0; j < kFeatureCount; ++j)
            if (!std::isfinite(X.at(i, j)))
                throw ValidationError("non-finite feature at row " + std::to_string(i));
}

}  // namespace

std::vector<double> predict_proba(const TrainedModel& model, const DesignMatrix& X) {
    check_input(X);
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const double* x = X.row(i);
        switch (model.kind) {
            case ModelKind::Logistic: {
                double z = model.intercept;
                for (std::size_t j = 0; j < kFeatureCount; ++j)
                    if (model.config.columns[j]) z += model.weights[j] * x[j];
                out[i] = sigmoid(z);
                break;
            }
            case ModelKind::RandomForest: {
                double s = 0.0;
                for (const Tree& t : model.trees) s += t.eval(x);
                out[i] = model.trees.empty() ? 0.0 : s / static_cast<double>(model.trees.size());
                break;
            }
            case ModelKind::Gbdt: {
                double f = model.base_score;
                for (const Tree& t : model.trees) f += model.learning_rate * t.eval(x);
                out[i] = sigmoid(f);
                break;
            }
        }
    }
    return out;
}

std::vector<SleepWake> labels_from_proba(std::span<const double> proba, double threshold) {
    std::vector<SleepWake> out(proba.size());
    for (std::size_t i = 0; i < proba.size(); ++i) out[i] = proba[i] >= threshold ? SleepWake::Sleep : SleepWake::Wake;
    return out;
}

std::vector<SleepWake> predict(const TrainedModel& model, const DesignMatrix& X, double threshold) {
    return labels_from_proba(predict_proba(model, X), threshold);
}

double mean_log_loss(std::span<const double> proba, std::span<const SleepWake> y) {
    if (proba.size() != y.size() || proba.empty()) throw ValidationError("log-loss needs equal non-empty inputs");
    double s = 0.0;
    for (std::size_t i = 0; i < proba.size(); ++i) {
        const double p = y[i] == SleepWake::Sleep ? proba[i] : 1.0 - proba[i];
        s -= std::log(std::max(p, 1e-300));
    }
    return s / static_cast<double>(proba.size());
}

}  // namespace ppgsleep
