#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ppgsleep/types.hpp"

namespace ppgsleep {

enum class ModelKind : std::uint8_t { Logistic, RandomForest, Gbdt };

std::string_view to_string(ModelKind kind) noexcept;  // logistic | rf | gbdt
std::optional<ModelKind> parse_model_kind(std::string_view s) noexcept;

struct LogisticParams {
    double lambda = 1e-4;  // L2 strength on the weights (intercept unpenalized)
    int max_iter = 100;
    double grad_tol = 1e-8;

    bool operator==(const LogisticParams&) const = default;
};

struct ForestParams {
    int n_trees = 500;
    int mtry = 1;
    int min_leaf = 5;
    bool bootstrap = true;
    int max_depth = 0;  // 0 = unbounded

    bool operator==(const ForestParams&) const = default;
};

struct GbdtParams {
    int n_rounds = 100;
    int max_depth = 6;
    double learning_rate = 0.3;
    double lambda = 1.0;
    double gamma = 0.0;
    double min_child_weight = 1.0;

    bool operator==(const GbdtParams&) const = default;
};

struct TrainConfig {
    ModelKind kind = ModelKind::Gbdt;
    std::uint64_t seed = 0;
    double threshold = 0.5;
    // Multiplier on the loss of Sleep (positive) samples.
    double positive_weight = 1.0;
    // Which of (HR, HRV, ACT) the model may use.
    std::array<bool, kFeatureCount> columns{true, true, true};
    LogisticParams logistic;
    ForestParams forest;
    GbdtParams gbdt;

    // Throws ValidationError on threshold outside (0,1), counts < 1, no columns, ...
    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

// Row-major matrix with a runtime column count, so callers holding
// arbitrary tables get an arity error instead of a silent misread.
class DesignMatrix {
public:
    DesignMatrix() = default;
    DesignMatrix(std::size_t cols, std::vector<double> values);
    explicit DesignMatrix(std::span<const FeatureRow> rows);

    std::size_t rows() const noexcept { return cols_ ? values_.size() / cols_ : 0; }
    std::size_t cols() const noexcept { return cols_; }
    const double* row(std::size_t i) const noexcept { return values_.data() + i * cols_; }
    double at(std::size_t i, std::size_t j) const noexcept { return values_[i * cols_ + j]; }

private:
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

// Preorder node list: the left child of node i is i + 1, the right child is
// `right`. Leaves have feature < 0. Samples with x[feature] < threshold go left.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    std::int32_t right = -1;
    double value = 0.0;

    bool leaf() const noexcept { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct Tree {
    std::vector<TreeNode> nodes;

    double eval(const double* x) const noexcept;
    bool operator==(const Tree&) const = default;
};

struct TrainedModel {
    ModelKind kind = ModelKind::Logistic;
    TrainConfig config;
    // logistic
    std::array<double, kFeatureCount> weights{0.0, 0.0, 0.0};
    double intercept = 0.0;
    // forest: averaged leaf probabilities; gbdt: raw leaf weights
    std::vector<Tree> trees;
    // gbdt
    double base_score = 0.0;
    double learning_rate = 0.0;

    bool operator==(const TrainedModel&) const = default;
};

/// Damped Newton on the mean weighted negative log-likelihood plus
/// (lambda/2)|w|^2. Stops when the gradient max-norm drops below grad_tol or
/// after max_iter iterations. Throws ValidationError for single-class labels,
/// non-finite features or fewer than two rows.
TrainedModel train_logistic(const DesignMatrix& X, std::span<const SleepWake> y, const TrainConfig& config);

/// Bagged Gini trees; each split considers `mtry` of the usable features,
/// children hold at least `min_leaf` bootstrap draws. A single-class training
/// set yields the constant model.
TrainedModel train_random_forest(const DesignMatrix& X, std::span<const SleepWake> y, const TrainConfig& config);

/// Second-order boosting of depth-bounded trees on the logistic loss with
/// exact greedy split search. `train_loss` receives the mean training
/// log-loss after every round when non-null.
TrainedModel train_gbdt(const DesignMatrix& X, std::span<const SleepWake> y, const TrainConfig& config,
                        std::vector<double>* train_loss = nullptr);

// Dispatches on config.kind.
TrainedModel train(const DesignMatrix& X, std::span<const SleepWake> y, const TrainConfig& config);

// P(Sleep) per row. Throws ValidationError when X does not have 3 columns
// or holds non-finite values.
std::vector<double> predict_proba(const TrainedModel& model, const DesignMatrix& X);

// Sleep iff probability >= threshold.
std::vector<SleepWake> predict(const TrainedModel& model, const DesignMatrix& X, double threshold);
std::vector<SleepWake> labels_from_proba(std::span<const double> proba, double threshold);

double mean_log_loss(std::span<const double> proba, std::span<const SleepWake> y);

std::string format_model(const TrainedModel& model);
TrainedModel parse_model(std::string_view content);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

namespace detail {

// Objective and gradient of the logistic fit, exposed for finite-difference
// checks. beta = (intercept, w_HR, w_HRV, w_ACT); inactive columns ignored.
double logistic_objective(const DesignMatrix& X, std::span<const SleepWake> y, const TrainConfig& config,
                          const std::array<double, kFeatureCount + 1>& beta);
std::array<double, kFeatureCount + 1> logistic_gradient(const DesignMatrix& X, std::span<const SleepWake> y,
                                                        const TrainConfig& config,
                                                        const std::array<double, kFeatureCount + 1>& beta);

}  // namespace detail

}  // namespace ppgsleep
