#pragma once
// Importance-sampling estimates of delayed-impact objectives g(theta) = tau - E[I^pi | c].

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "classifier.hpp"
#include "confidence_bounds.hpp"
#include "core_data.hpp"

namespace elf {

enum class ConstraintKind {
    DelayedImpact,  // g = tau - E[I^pi | c], estimated by importance sampling
    Accuracy,       // g = tau - E[ACC_pi | c], estimated from labels directly
};

struct DIConstraint {
    ConditionalPredicate predicate = ConditionalPredicate::always();
    double tau = 0.0;
    double delta = 0.1;
    BoundMethod bound = TTest{};
    ConstraintKind kind = ConstraintKind::DelayedImpact;
    std::string name;

    void validate() const {
        check_delta(delta);
        if (!std::isfinite(tau)) throw std::invalid_argument("constraint tolerance must be finite");
        if (const auto* h = std::get_if<Hoeffding>(&bound); h && !(h->a < h->b)) {
            throw std::invalid_argument("Hoeffding range needs a < b");
        }
    }
};

struct GEstimateVector {
    std::vector<double> values;
    const DIConstraint* constraint = nullptr;
};

inline double importance_weight(double pi_prob, double beta_prob) {
    if (!(beta_prob >= 1e-300)) throw std::underflow_error("behavior probability underflow in importance weight");
    return pi_prob / beta_prob;
}

inline double importance_weight(const StochasticLinearClassifier& pi, const StochasticLinearClassifier& beta,
                                std::span<const double> x, int y_hat_beta) {
    return importance_weight(pi.probability(x, y_hat_beta), beta.probability(x, y_hat_beta));
}

/// One unbiased estimate of g for a logged example (shared by every code path
/// that builds g estimates so the fairness test and candidate selection agree).
inline double g_entry(const DIConstraint& c, double pi_at_logged, double beta_at_logged, double i_beta,
                      double pi_at_label) {
    if (c.kind == ConstraintKind::Accuracy) return c.tau - pi_at_label;
    return c.tau - importance_weight(pi_at_logged, beta_at_logged) * i_beta;
}

/// g estimates for every example of `data` matching the constraint's predicate, in dataset order.
inline GEstimateVector g_estimates(const StochasticLinearClassifier& pi, const StochasticLinearClassifier& beta,
                                   const Dataset& data, const DIConstraint& c) {
    if (data.empty()) throw std::invalid_argument("g_estimates on empty dataset");
    GEstimateVector out;
    out.constraint = &c;
    for (const auto& ex : data) {
        if (!evaluate_predicate(c.predicate, ex)) continue;
        const double pi_logged = pi.probability(ex.x, ex.y_hat_beta);
        const double beta_logged = beta.probability(ex.x, ex.y_hat_beta);
        const double pi_label = c.kind == ConstraintKind::Accuracy ? pi.probability(ex.x, ex.y) : 0.0;
        out.values.push_back(g_entry(c, pi_logged, beta_logged, ex.i_beta, pi_label));
    }
    return out;
}

/// Closed-form delayed-impact law E[I | y_hat, t] = alpha * y_hat + (1 - alpha) * mu_t.
struct DelayedImpactLaw {
    double alpha = 0.0;
    std::vector<double> group_means;
};

/// Ground-truth g(pi) over a population drawn from a world with a known
/// delayed-impact law, averaging the conditional expectation over the
/// predicate-matching members. Binary labels only.
inline double true_g_oracle(const StochasticLinearClassifier& pi, const Dataset& population, const DIConstraint& c,
                            const DelayedImpactLaw& law) {
    if (pi.num_labels() != 2) throw std::invalid_argument("true_g_oracle supports binary classifiers only");
    double total = 0.0;
    std::size_t matched = 0;
    for (const auto& ex : population) {
        if (!evaluate_predicate(c.predicate, ex)) continue;
        if (c.kind == ConstraintKind::Accuracy) {
            total += pi.probability(ex.x, ex.y);
        } else {
            const double mu = law.group_means.at(static_cast<std::size_t>(ex.t));
            total += law.alpha * pi.probability(ex.x, 1) + (1.0 - law.alpha) * mu;
        }
        ++matched;
    }
    if (matched == 0) throw std::invalid_argument("true_g_oracle: no population member matches the predicate");
    return c.tau - total / static_cast<double>(matched);
}

// {"name": ..., "kind": "delayed_impact"|"accuracy", "predicate": ..., "tau": x, "delta": x, "bound": ...}
inline void to_json(nlohmann::json& j, const DIConstraint& c) {
    j = nlohmann::json{{"name", c.name},
                       {"kind", c.kind == ConstraintKind::Accuracy ? "accuracy" : "delayed_impact"},
                       {"predicate", c.predicate},
                       {"tau", c.tau},
                       {"delta", c.delta},
                       {"bound", c.bound}};
}

inline void from_json(const nlohmann::json& j, DIConstraint& c) {
    c = DIConstraint{};
    c.name = j.value("name", std::string{});
    const auto kind = j.value("kind", std::string{"delayed_impact"});
    if (kind == "accuracy") {
        c.kind = ConstraintKind::Accuracy;
    } else if (kind == "delayed_impact") {
        c.kind = ConstraintKind::DelayedImpact;
    } else {
        throw std::invalid_argument("unknown constraint kind: " + kind);
    }
    if (j.contains("predicate")) c.predicate = j.at("predicate").get<ConditionalPredicate>();
    c.tau = j.at("tau").get<double>();
    c.delta = j.value("delta", 0.1);
    if (j.contains("bound")) c.bound = j.at("bound").get<BoundMethod>();
    c.validate();
}

}  // namespace elf
