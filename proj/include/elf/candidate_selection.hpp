#pragma once
// Candidate-selection cost (predicted safety-test outcome plus loss) and its minimizer.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "classifier.hpp"
#include "cmaes.hpp"
#include "confidence_bounds.hpp"
#include "core_data.hpp"
#include "di_estimation.hpp"

namespace elf {

enum class LossKind {
    Expected01,  // 1 - mean pi(x, y)
    NLL,         // 1 - exp(-mean NLL), a monotone map of the NLL into [0, 1)
};

struct CostConfig {
    std::vector<DIConstraint> constraints;
    double xi = 0.01;
    double lambda = 2.0;
    std::size_t n_future = 0;
    LossKind loss_kind = LossKind::Expected01;
    // Analytic sup of either loss over all theta.
    double loss_max = 1.0;

    void validate() const {
        if (!(xi > 0.0)) throw std::invalid_argument("xi must be positive");
        if (n_future < 2) throw std::invalid_argument("n_future must be at least 2");
        for (const auto& c : constraints) c.validate();
    }
};

/// Per-constraint view of a cost evaluation.
struct CostBreakdown {
    double cost = 0.0;
    double loss = 0.0;
    bool predicted_pass = false;
    std::vector<double> upper;  // U+ per constraint; +inf when it could not be computed
};

/// Candidate-set data laid out for repeated cost evaluation: behavior
/// probabilities and predicate membership are fixed, only theta changes.
class CostFunction {
public:
    CostFunction(const Dataset& candidate, const StochasticLinearClassifier& beta, CostConfig cfg)
        : data_(candidate), cfg_(std::move(cfg)), num_labels_(candidate.num_labels()), d_(candidate.dim()) {
        if (candidate.empty()) throw std::invalid_argument("candidate set is empty");
        if (beta.dim() != d_ || beta.num_labels() != num_labels_) {
            throw std::invalid_argument("behavior model does not match dataset dimensions");
        }
        cfg_.validate();
        beta_logged_.reserve(candidate.size());
        for (const auto& ex : candidate) beta_logged_.push_back(beta.probability(ex.x, ex.y_hat_beta));
        members_.resize(cfg_.constraints.size());
        for (std::size_t j = 0; j < cfg_.constraints.size(); ++j) {
            for (std::size_t i = 0; i < candidate.size(); ++i) {
                if (evaluate_predicate(cfg_.constraints[j].predicate, candidate[i])) members_[j].push_back(i);
            }
        }
        features_.reserve(candidate.size() * (d_ + 1));
        for (const auto& ex : candidate) {
            features_.insert(features_.end(), ex.x.begin(), ex.x.end());
            features_.push_back(1.0);
        }
        pi_logged_.resize(candidate.size());
        pi_label_.resize(candidate.size());
    }

    const CostConfig& config() const noexcept { return cfg_; }
    std::size_t num_params() const noexcept { return static_cast<std::size_t>(num_labels_) * (d_ + 1); }

    double operator()(const std::vector<double>& theta) const { return evaluate(theta).cost; }

    CostBreakdown evaluate(const std::vector<double>& theta) const {
        for (double v : theta) {
            if (!std::isfinite(v)) return {std::numeric_limits<double>::infinity(), 1.0, false, {}};
        }
        fill_probabilities(theta);
        double loss_sum = 0.0;
        for (std::size_t i = 0; i < data_.size(); ++i) {
            loss_sum += cfg_.loss_kind == LossKind::NLL ? -std::log(pi_label_[i]) : pi_label_[i];
        }
        const double m = static_cast<double>(data_.size());
        CostBreakdown out;
        out.loss = cfg_.loss_kind == LossKind::NLL ? 1.0 - std::exp(-loss_sum / m) : 1.0 - loss_sum / m;

        bool all_pass = true;
        double penalty = 0.0;
        std::vector<double> g;
        for (std::size_t j = 0; j < cfg_.constraints.size(); ++j) {
            const auto& c = cfg_.constraints[j];
            g.clear();
            for (std::size_t i : members_[j]) {
                g.push_back(g_entry(c, pi_logged_[i], beta_logged_[i], data_[i].i_beta, pi_label_[i]));
            }
            double u = std::numeric_limits<double>::infinity();
            if (g.size() >= min_samples(c.bound)) {
                try {
                    u = inflated_upper({g, c.delta, c.bound, true, cfg_.lambda, cfg_.n_future});
                } catch (const std::domain_error&) {
                    // Estimate outside the declared Hoeffding range.
                }
            }
            out.upper.push_back(u);
            if (!(u <= -cfg_.xi / 4.0)) all_pass = false;
            // No usable bound: charge one extra loss_max.
            penalty += std::isfinite(u) ? std::max(u, 0.0) : cfg_.loss_max;
        }
        out.predicted_pass = all_pass;
        out.cost = all_pass ? out.loss : cfg_.loss_max + penalty;
        return out;
    }

private:
    void fill_probabilities(const std::vector<double>& theta) const {
        const std::size_t row = d_ + 1;
        if (num_labels_ != 2) {
            const StochasticLinearClassifier pi(num_labels_, d_, theta);
            for (std::size_t i = 0; i < data_.size(); ++i) {
                const auto& ex = data_[i];
                pi_label_[i] = pi.probability(ex.x, ex.y);
                pi_logged_[i] = pi.probability(ex.x, ex.y_hat_beta);
            }
            return;
        }
        // Binary: pi(x, 1) = logistic((theta_1 - theta_0) . [x; 1]).
        diff_.resize(row);
        for (std::size_t k = 0; k < row; ++k) diff_[k] = theta[row + k] - theta[k];
        const double lo = std::numeric_limits<double>::min();
        const double hi = 1.0 - std::numeric_limits<double>::epsilon();
        for (std::size_t i = 0; i < data_.size(); ++i) {
            const double* f = features_.data() + i * row;
            double z = 0.0;
            for (std::size_t k = 0; k < row; ++k) z += diff_[k] * f[k];
            const double e = std::exp(-std::fabs(z));
            const double p_hi = 1.0 / (1.0 + e);
            const double p_lo = e / (1.0 + e);
            const double p1 = std::clamp(z >= 0 ? p_hi : p_lo, lo, hi);
            const double p0 = std::clamp(z >= 0 ? p_lo : p_hi, lo, hi);
            const auto& ex = data_[i];
            pi_label_[i] = ex.y == 1 ? p1 : p0;
            pi_logged_[i] = ex.y_hat_beta == 1 ? p1 : p0;
        }
    }

    const Dataset& data_;
    CostConfig cfg_;
    int num_labels_;
    std::size_t d_;
    std::vector<double> beta_logged_;
    std::vector<std::vector<std::size_t>> members_;
    std::vector<double> features_;  // rows of [x; 1]
    mutable std::vector<double> diff_;
    mutable std::vector<double> pi_logged_;
    mutable std::vector<double> pi_label_;
};

/// Single evaluation of the candidate-selection cost.
inline double cost(const std::vector<double>& theta, const Dataset& candidate, const CostConfig& cfg,
                   const StochasticLinearClassifier& beta) {
    return CostFunction(candidate, beta, cfg)(theta);
}

/// Minimizes the cost over theta with CMA-ES from theta = 0.
inline StochasticLinearClassifier select_candidate(const Dataset& candidate, const CostConfig& cfg,
                                                   const SearchConfig& search,
                                                   const StochasticLinearClassifier& beta) {
    const CostFunction f(candidate, beta, cfg);
    const std::vector<double> start(f.num_params(), 0.0);
    const auto result = cmaes_minimize([&](const std::vector<double>& theta) { return f(theta); }, start, search);
    return StochasticLinearClassifier(candidate.num_labels(), candidate.dim(), result.best);
}

}  // namespace elf
