#pragma once
// Softmax-linear stochastic classifiers pi_theta and the behavior model.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core_data.hpp"
#include "errors.hpp"

namespace elf {

/// theta is an L x (d+1) row-major matrix: row l holds the weights for label l
/// followed by its bias. Any finite theta yields strictly positive
/// probabilities for every label.
class StochasticLinearClassifier {
public:
    StochasticLinearClassifier() = default;
    StochasticLinearClassifier(int num_labels, std::size_t d)
        : num_labels_(num_labels), d_(d), theta_(static_cast<std::size_t>(num_labels) * (d + 1), 0.0) {
        if (num_labels < 2) throw std::invalid_argument("classifier needs at least two labels");
    }
    StochasticLinearClassifier(int num_labels, std::size_t d, std::vector<double> theta)
        : num_labels_(num_labels), d_(d), theta_(std::move(theta)) {
        if (num_labels < 2) throw std::invalid_argument("classifier needs at least two labels");
        if (theta_.size() != static_cast<std::size_t>(num_labels) * (d + 1)) {
            throw std::invalid_argument("theta has wrong size");
        }
        for (double v : theta_) {
            if (!std::isfinite(v)) throw std::invalid_argument("theta must be finite");
        }
    }

    int num_labels() const noexcept { return num_labels_; }
    std::size_t dim() const noexcept { return d_; }
    std::size_t num_params() const noexcept { return theta_.size(); }
    const std::vector<double>& theta() const noexcept { return theta_; }

    double score(std::span<const double> x, int label) const {
        const double* row = theta_.data() + static_cast<std::size_t>(label) * (d_ + 1);
        double s = row[d_];
        for (std::size_t k = 0; k < d_; ++k) s += row[k] * x[k];
        return s;
    }

    /// Softmax of the affine scores, with max-score subtraction. Entries are
    /// clamped into [DBL_MIN, 1 - eps] so full support survives underflow of
    /// very negative scores.
    void predict_proba(std::span<const double> x, std::span<double> out) const {
        if (x.size() != d_) throw std::invalid_argument("feature vector has wrong dimension");
        double top = -std::numeric_limits<double>::infinity();
        for (int l = 0; l < num_labels_; ++l) {
            out[l] = score(x, l);
            top = std::max(top, out[l]);
        }
        double total = 0.0;
        for (int l = 0; l < num_labels_; ++l) {
            out[l] = std::exp(out[l] - top);
            total += out[l];
        }
        for (int l = 0; l < num_labels_; ++l) {
            out[l] = clamp_probability(out[l] / total);
        }
    }

    std::vector<double> predict_proba(std::span<const double> x) const {
        std::vector<double> p(static_cast<std::size_t>(num_labels_));
        predict_proba(x, p);
        return p;
    }

    double probability(std::span<const double> x, int label) const {
        if (num_labels_ == 2) {
            // Same value as the general path, one exp instead of two.
            const double z = score(x, 1 - label) - score(x, label);
            const double p = z > 0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
            return clamp_probability(p);
        }
        return predict_proba(x)[static_cast<std::size_t>(label)];
    }

    template <class Rng>
    int sample_prediction(std::span<const double> x, Rng& rng) const {
        const auto p = predict_proba(x);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double r = u(rng);
        for (int l = 0; l + 1 < num_labels_; ++l) {
            r -= p[static_cast<std::size_t>(l)];
            if (r < 0.0) return l;
        }
        return num_labels_ - 1;
    }

    friend bool operator==(const StochasticLinearClassifier&, const StochasticLinearClassifier&) = default;

private:
    static double clamp_probability(double p) noexcept {
        return std::clamp(p, std::numeric_limits<double>::min(), 1.0 - std::numeric_limits<double>::epsilon());
    }

    int num_labels_ = 2;
    std::size_t d_ = 0;
    std::vector<double> theta_;
};

/// Expected 0/1 loss of the stochastic classifier: 1 - mean prob of the true label.
inline double expected_loss(const StochasticLinearClassifier& clf, const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("expected_loss on empty dataset");
    double correct = 0.0;
    for (const auto& ex : data) correct += clf.probability(ex.x, ex.y);
    return 1.0 - correct / static_cast<double>(data.size());
}

inline double accuracy(const StochasticLinearClassifier& clf, const Dataset& data) {
    return 1.0 - expected_loss(clf, data);
}

/// Mean negative log-likelihood of the true labels.
inline double negative_log_likelihood(const StochasticLinearClassifier& clf, const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("negative_log_likelihood on empty dataset");
    double nll = 0.0;
    for (const auto& ex : data) nll -= std::log(clf.probability(ex.x, ex.y));
    return nll / static_cast<double>(data.size());
}

/// Gradient of the mean NLL with respect to theta (same layout as theta).
inline std::vector<double> nll_gradient(const StochasticLinearClassifier& clf, const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("nll_gradient on empty dataset");
    const std::size_t d = clf.dim();
    const auto L = static_cast<std::size_t>(clf.num_labels());
    std::vector<double> grad(clf.num_params(), 0.0);
    std::vector<double> p(L);
    for (const auto& ex : data) {
        clf.predict_proba(ex.x, p);
        for (std::size_t l = 0; l < L; ++l) {
            const double r = p[l] - (static_cast<int>(l) == ex.y ? 1.0 : 0.0);
            double* row = grad.data() + l * (d + 1);
            for (std::size_t k = 0; k < d; ++k) row[k] += r * ex.x[k];
            row[d] += r;
        }
    }
    const double scale = 1.0 / static_cast<double>(data.size());
    for (double& g : grad) g *= scale;
    return grad;
}

struct BehaviorTraining {
    int steps = 2000;
    double learning_rate = 0.1;
    std::uint64_t seed = 0;
};

/// Full-batch gradient descent on the NLL from a zero initialization. The
/// procedure is deterministic; the seed is kept for API symmetry with the
/// other trainers and recorded in serialized configs.
inline StochasticLinearClassifier fit_behavior_model(const Dataset& data, const BehaviorTraining& cfg = {}) {
    if (data.empty()) throw std::invalid_argument("cannot fit behavior model on empty dataset");
    if (cfg.steps < 0) throw std::invalid_argument("steps must be non-negative");
    std::vector<double> theta(static_cast<std::size_t>(data.num_labels()) * (data.dim() + 1), 0.0);
    for (int step = 0; step < cfg.steps; ++step) {
        StochasticLinearClassifier clf(data.num_labels(), data.dim(), theta);
        const auto grad = nll_gradient(clf, data);
        for (std::size_t k = 0; k < theta.size(); ++k) {
            theta[k] -= cfg.learning_rate * grad[k];
            if (!std::isfinite(grad[k]) || !std::isfinite(theta[k])) {
                throw NumericError("behavior training diverged (non-finite gradient or parameter)");
            }
        }
    }
    return StochasticLinearClassifier(data.num_labels(), data.dim(), std::move(theta));
}

// {"L": 2, "d": 5, "theta": [row-major]}
inline nlohmann::json to_json(const StochasticLinearClassifier& clf) {
    return nlohmann::json{{"L", clf.num_labels()}, {"d", clf.dim()}, {"theta", clf.theta()}};
}

inline StochasticLinearClassifier classifier_from_json(const nlohmann::json& j) {
    return StochasticLinearClassifier(j.at("L").get<int>(), j.at("d").get<std::size_t>(),
                                      j.at("theta").get<std::vector<double>>());
}

inline void save_classifier(const std::string& path, const StochasticLinearClassifier& clf) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << std::setprecision(17) << to_json(clf).dump(2) << '\n';
}

inline StochasticLinearClassifier load_classifier(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return classifier_from_json(nlohmann::json::parse(is));
}

}  // namespace elf
