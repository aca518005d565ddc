#pragma once
// Synthetic delayed-impact world with a known ground truth.
//
// Features are per-group Gaussian clusters (identity covariance); the true
// label is Bernoulli(logistic(w.x + b + v*t)); the delayed impact of a
// prediction y_hat for a member of group t is
//     I = alpha * y_hat + (1 - alpha) * N(mu_t, sigma_t^2)
// with (mu_0, sigma_0^2) = (2, 0.5) and (mu_1, sigma_1^2) = (1, 1).

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "classifier.hpp"
#include "core_data.hpp"
#include "di_estimation.hpp"
#include "seeding.hpp"

namespace elf {

struct NoiseLaw {
    double mean = 0.0;
    double variance = 1.0;
};

struct WorldConfig {
    double alpha = 0.9;
    std::size_t d = 5;
    std::vector<double> group_proportions{0.5, 0.5};
    std::vector<std::vector<double>> feature_means{{0.5, 0.0, 0.5, 0.0, 0.0}, {-0.5, 0.0, -0.5, 0.0, 0.0}};
    std::vector<double> label_weights{1.5, -1.0, 1.0, 0.8, -0.6};
    double label_bias = 1.5;
    double label_group_coef = 2.0;
    std::vector<NoiseLaw> di_noise{{2.0, 0.5}, {1.0, 1.0}};
    // Behavior model: logistic regression fit on a labelled sample of this size.
    std::size_t behavior_train_size = 1000;
    BehaviorTraining behavior_training{};
    std::uint64_t seed = 0;

    int num_groups() const { return static_cast<int>(group_proportions.size()); }

    void validate() const {
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
        if (d == 0) throw std::invalid_argument("feature dimension must be positive");
        if (group_proportions.empty()) throw std::invalid_argument("need at least one group");
        double total = 0.0;
        for (double p : group_proportions) {
            if (!(p >= 0.0)) throw std::invalid_argument("group proportions must be non-negative");
            total += p;
        }
        if (std::fabs(total - 1.0) > 1e-9) throw std::invalid_argument("group proportions must sum to 1");
        if (feature_means.size() != group_proportions.size() || di_noise.size() != group_proportions.size()) {
            throw std::invalid_argument("feature_means and di_noise need one entry per group");
        }
        for (const auto& m : feature_means) {
            if (m.size() != d) throw std::invalid_argument("feature mean has wrong dimension");
        }
        if (label_weights.size() != d) throw std::invalid_argument("label_weights has wrong dimension");
        for (const auto& n : di_noise) {
            if (!(n.variance > 0.0)) throw std::invalid_argument("noise variances must be positive");
        }
    }

    DelayedImpactLaw di_law() const {
        DelayedImpactLaw law{alpha, {}};
        for (const auto& n : di_noise) law.group_means.push_back(n.mean);
        return law;
    }
};

template <class Rng>
double draw_delayed_impact(const WorldConfig& cfg, int y_hat, int t, Rng& rng) {
    const auto& noise = cfg.di_noise.at(static_cast<std::size_t>(t));
    std::normal_distribution<double> gauss(noise.mean, std::sqrt(noise.variance));
    return cfg.alpha * static_cast<double>(y_hat) + (1.0 - cfg.alpha) * gauss(rng);
}

inline double label_probability(const WorldConfig& cfg, std::span<const double> x, int t) {
    double z = cfg.label_bias + cfg.label_group_coef * static_cast<double>(t);
    for (std::size_t k = 0; k < cfg.d; ++k) z += cfg.label_weights[k] * x[k];
    return 1.0 / (1.0 + std::exp(-z));
}

/// Draws (x, y, t) only; the logged prediction and impact fields are zero.
template <class Rng>
LabeledExample draw_individual(const WorldConfig& cfg, Rng& rng) {
    std::discrete_distribution<int> group(cfg.group_proportions.begin(), cfg.group_proportions.end());
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    LabeledExample ex;
    ex.t = group(rng);
    ex.x.resize(cfg.d);
    const auto& mean = cfg.feature_means[static_cast<std::size_t>(ex.t)];
    for (std::size_t k = 0; k < cfg.d; ++k) ex.x[k] = mean[k] + gauss(rng);
    ex.y = u(rng) < label_probability(cfg, ex.x, ex.t) ? 1 : 0;
    return ex;
}

inline Dataset draw_population(const WorldConfig& cfg, std::size_t n, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    Dataset out(cfg.d, 2, cfg.num_groups());
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.add(draw_individual(cfg, rng));
    return out;
}

/// Logistic regression on a fresh labelled sample from the world.
inline StochasticLinearClassifier train_behavior_model(const WorldConfig& cfg, std::uint64_t seed) {
    const auto sample = draw_population(cfg, cfg.behavior_train_size, derive_seed(seed, std::uint64_t{0xbe}));
    return fit_behavior_model(sample, cfg.behavior_training);
}

/// n logged examples: the behavior model's sampled prediction and the delayed impact it caused.
inline Dataset generate_behavior_dataset(const WorldConfig& cfg, std::size_t n, const StochasticLinearClassifier& beta,
                                         std::uint64_t seed) {
    cfg.validate();
    if (n < 1) throw std::invalid_argument("n must be at least 1");
    if (beta.dim() != cfg.d || beta.num_labels() != 2) throw std::invalid_argument("behavior model does not match world");
    std::mt19937_64 rng(seed);
    Dataset out(cfg.d, 2, cfg.num_groups());
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto ex = draw_individual(cfg, rng);
        ex.y_hat_beta = beta.sample_prediction(ex.x, rng);
        ex.i_beta = draw_delayed_impact(cfg, ex.y_hat_beta, ex.t, rng);
        out.add(std::move(ex));
    }
    return out;
}

/// Per-group mean logged delayed impact, one entry per group.
inline std::vector<double> compute_tolerances(const Dataset& data) {
    const auto G = static_cast<std::size_t>(data.num_groups());
    std::vector<double> sum(G, 0.0);
    std::vector<std::size_t> count(G, 0);
    for (const auto& ex : data) {
        sum[static_cast<std::size_t>(ex.t)] += ex.i_beta;
        ++count[static_cast<std::size_t>(ex.t)];
    }
    for (std::size_t t = 0; t < G; ++t) {
        if (count[t] == 0) throw std::invalid_argument("group " + std::to_string(t) + " has no examples");
        sum[t] /= static_cast<double>(count[t]);
    }
    return sum;
}

// ---------------------------------------------------------------------------
// JSON. Every field is optional and falls back to the defaults above.
// ---------------------------------------------------------------------------

inline void from_json(const nlohmann::json& j, WorldConfig& w) {
    w = WorldConfig{};
    w.alpha = j.value("alpha", w.alpha);
    w.d = j.value("d", w.d);
    w.group_proportions = j.value("group_proportions", w.group_proportions);
    w.feature_means = j.value("feature_means", w.feature_means);
    w.label_weights = j.value("label_weights", w.label_weights);
    w.label_bias = j.value("label_bias", w.label_bias);
    w.label_group_coef = j.value("label_group_coef", w.label_group_coef);
    if (j.contains("di_noise")) {
        w.di_noise.clear();
        for (const auto& n : j.at("di_noise")) w.di_noise.push_back({n.at("mean").get<double>(), n.at("variance").get<double>()});
    }
    w.behavior_train_size = j.value("behavior_train_size", w.behavior_train_size);
    w.behavior_training.steps = j.value("behavior_steps", w.behavior_training.steps);
    w.behavior_training.learning_rate = j.value("behavior_learning_rate", w.behavior_training.learning_rate);
    w.seed = j.value("seed", w.seed);
    w.validate();
}

inline void to_json(nlohmann::json& j, const WorldConfig& w) {
    nlohmann::json noise = nlohmann::json::array();
    for (const auto& n : w.di_noise) noise.push_back({{"mean", n.mean}, {"variance", n.variance}});
    j = nlohmann::json{{"alpha", w.alpha},
                       {"d", w.d},
                       {"group_proportions", w.group_proportions},
                       {"feature_means", w.feature_means},
                       {"label_weights", w.label_weights},
                       {"label_bias", w.label_bias},
                       {"label_group_coef", w.label_group_coef},
                       {"di_noise", noise},
                       {"behavior_train_size", w.behavior_train_size},
                       {"behavior_steps", w.behavior_training.steps},
                       {"behavior_learning_rate", w.behavior_training.learning_rate},
                       {"seed", w.seed}};
}

}  // namespace elf
