#include <array>
#include <cmath>

#include "internal.hpp"

namespace ppgsleep {
namespace {

using learn_detail::sigmoid;
using learn_detail::softplus;

constexpr std::size_t kParams = kFeatureCount + 1;
using Vec = std::array<double, kParams>;
using Mat = std::array<std::array<double, kParams>, kParams>;

struct Problem {
    const DesignMatrix& X;
    std::span<const SleepWake> y;
    const TrainConfig& config;
    double total_weight = 0.0;

    double weight(std::size_t i) const { return y[i] == SleepWake::Sleep ? config.positive_weight : 1.0; }

    // Design row with a leading 1; inactive columns are zeroed.
    Vec design(std::size_t i) const {
        Vec z{1.0, 0.0, 0.0, 0.0};
        for (std::size_t j = 0; j < kFeatureCount; ++j)
            if (config.columns[j]) z[j + 1] = X.at(i, j);
        return z;
    }

    double margin(std::size_t i, const Vec& beta) const {
        const Vec z = design(i);
        double m = 0.0;
        for (std::size_t j = 0; j < kParams; ++j) m += beta[j] * z[j];
        return m;
    }

    double objective(const Vec& beta) const {
        double s = 0.0;
        for (std::size_t i = 0; i < X.rows(); ++i) {
            const double m = margin(i, beta);
            const double yi = y[i] == SleepWake::Sleep ? 1.0 : 0.0;
            s += weight(i) * (softplus(m) - yi * m);
        }
        double reg = 0.0;
        for (std::size_t j = 1; j < kParams; ++j) reg += beta[j] * beta[j];
        return s / total_weight + 0.5 * config.logistic.lambda * reg;
    }

    void gradient_hessian(const Vec& beta, Vec& g, Mat* h) const {
        g.fill(0.0);
        if (h)
            for (auto& r : *h) r.fill(0.0);
        for (std::size_t i = 0; i < X.rows(); ++i) {
            const Vec z = design(i);
            double m = 0.0;
            for (std::size_t j = 0; j < kParams; ++j) m += beta[j] * z[j];
            const double p = sigmoid(m);
            const double yi = y[i] == SleepWake::Sleep ? 1.0 : 0.0;
            const double w = weight(i);
            for (std::size_t j = 0; j < kParams; ++j) g[j] += w * (p - yi) * z[j];
            if (h) {
                const double c = w * p * (1.0 - p);
                for (std::size_t a = 0; a < kParams; ++a)
                    for (std::size_t b = 0; b < kParams; ++b) (*h)[a][b] += c * z[a] * z[b];
            }
        }
        for (std::size_t j = 0; j < kParams; ++j) g[j] /= total_weight;
        for (std::size_t j = 1; j < kParams; ++j) {
            const bool active = config.columns[j - 1];
            g[j] = active ? g[j] + config.logistic.lambda * beta[j] : 0.0;
        }
        if (h) {
            for (auto& r : *h)
                for (double& v : r) v /= total_weight;
            for (std::size_t j = 1; j < kParams; ++j) {
                if (config.columns[j - 1]) {
                    (*h)[j][j] += config.logistic.lambda;
                } else {
                    // Pin inactive weights at zero.
                    for (std::size_t k = 0; k < kParams; ++k) (*h)[j][k] = (*h)[k][j] = 0.0;
                    (*h)[j][j] = 1.0;
                }
            }
        }
    }
};

// Solves H d = rhs by Gaussian elimination with partial pivoting. Returns
// false when H is numerically singular.
bool solve(Mat h, Vec rhs, Vec& out) {
    for (std::size_t c = 0; c < kParams; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < kParams; ++r)
            if (std::abs(h[r][c]) > std::abs(h[piv][c])) piv = r;
        if (!(std::abs(h[piv][c]) > 1e-300)) return false;
        std::swap(h[c], h[piv]);
        std::swap(rhs[c], rhs[piv]);
        for (std::size_t r = c + 1; r < kParams; ++r) {
            const double f = h[r][c] / h[c][c];
            for (std::size_t k = c; k < kParams; ++k) h[r][k] -= f * h[c][k];
            rhs[r] -= f * rhs[c];
        }
    }
    for (std::size_t c = kParams; c-- > 0;) {
        double s = rhs[c];
        for (std::size_t k = c + 1; k < kParams; ++k) s -= h[c][k] * out[k];
        out[c] = s / h[c][c];
    }
    return true;
}

double max_abs(const Vec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

Problem make_problem(const DesignMatrix& X, std::span<const SleepWake> y, const TrainConfig& config) {
    Problem p{X, y, config};
    for (std::size_t i = 0; i < X.rows(); ++i) p.total_weight += p.weight(i);
    return p;
}

}  // namespace

TrainedModel train_logistic(const DesignMatrix& X, std::span<const SleepWake> y, const TrainConfig& config) {
    const auto counts = learn_detail::check_training_input(X, y, config, 2);
    learn_detail::require_both_classes(counts);
    const Problem prob = make_problem(X, y, config);

    Vec beta{0.0, 0.0, 0.0, 0.0};
    // Start the intercept at the weighted prior log-odds.
    {
        double pos = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            if (y[i] == SleepWake::Sleep) pos += prob.weight(i);
        beta[0] = std::log(pos / (prob.total_weight - pos));
    }

    double f = prob.objective(beta);
    for (int iter = 0; iter < config.logistic.max_iter; ++iter) {
        Vec g;
        Mat h;
        prob.gradient_hessian(beta, g, &h);
        if (max_abs(g) < config.logistic.grad_tol) break;

        Vec step;
        Vec neg_g;
        for (std::size_t j = 0; j < kParams; ++j) neg_g[j] = -g[j];
        if (!solve(h, neg_g, step)) step = neg_g;  // fall back to steepest descent

        double slope = 0.0;
        for (std::size_t j = 0; j < kParams; ++j) slope += g[j] * step[j];
        if (!(slope < 0.0)) {
            step = neg_g;
            slope = 0.0;
            for (std::size_t j = 0; j < kParams; ++j) slope += g[j] * step[j];
        }

        // Armijo backtracking.
        double t = 1.0;
        Vec trial = beta;
        double ft = f;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t j = 0; j < kParams; ++j) trial[j] = beta[j] + t * step[j];
            ft = prob.objective(trial);
            // Near the optimum the decrease drops below rounding of f; a full
            // Newton step is then taken as long as f does not visibly grow.
            const bool rounding_level = ls == 0 && ft <= f + 8.0 * 2.220446049250313e-16 * std::abs(f);
            if (ft <= f + 1e-4 * t * slope || rounding_level) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;  // no further progress representable
        beta = trial;
        f = ft;
    }

    TrainedModel m;
    m.kind = ModelKind::Logistic;
    m.config = config;
    m.intercept = beta[0];
    for (std::size_t j = 0; j < kFeatureCount; ++j) m.weights[j] = config.columns[j] ? beta[j + 1] : 0.0;
    return m;
}

namespace detail {

double logistic_objective(const DesignMatrix& X, std::span<const SleepWake> y, const TrainConfig& config,
                          const std::array<double, kFeatureCount + 1>& beta) {
    return make_problem(X, y, config).objective(beta);
}

std::array<double, kFeatureCount + 1> logistic_gradient(const DesignMatrix& X, std::span<const SleepWake> y,
                                                        const TrainConfig& config,
                                                        const std::array<double, kFeatureCount + 1>& beta) {
    Vec g;
    make_problem(X, y, config).gradient_hessian(beta, g, nullptr);
    return g;
}

}  // namespace detail
}  // namespace ppgsleep
