#pragma once
// End-to-end ELF: partition, candidate selection on D_c, safety test on D_f.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "candidate_selection.hpp"
#include "classifier.hpp"
#include "cmaes.hpp"
#include "core_data.hpp"
#include "di_estimation.hpp"
#include "fairness_test.hpp"
#include "seeding.hpp"

namespace elf {

struct ElfConfig {
    std::vector<DIConstraint> constraints;
    double candidate_fraction = 0.6;
    // constraints and n_future are filled in by run_elf.
    CostConfig cost;
    // search.seed is replaced by a stream derived from `seed`.
    SearchConfig search;
    std::uint64_t seed = 0;
};

inline ElfOutcome run_elf(const Dataset& data, const StochasticLinearClassifier& beta, const ElfConfig& cfg) {
    for (const auto& c : cfg.constraints) c.validate();
    if (data.size() < 4) return ElfOutcome::no_solution("dataset has fewer than 4 examples");
    for (std::size_t j = 0; j < cfg.constraints.size(); ++j) {
        const auto& pred = cfg.constraints[j].predicate;
        const bool any = std::any_of(data.begin(), data.end(),
                                     [&](const LabeledExample& ex) { return evaluate_predicate(pred, ex); });
        if (!any) return ElfOutcome::no_solution("no example matches constraint " + std::to_string(j));
    }

    Partition parts;
    try {
        parts = stratified_partition(data, cfg.candidate_fraction, derive_seed(cfg.seed, std::uint64_t{1}));
    } catch (const std::invalid_argument& e) {
        return ElfOutcome::no_solution(std::string("partition failed: ") + e.what());
    }
    if (parts.safety.size() < 2) return ElfOutcome::no_solution("safety set too small");

    CostConfig cost_cfg = cfg.cost;
    cost_cfg.constraints = cfg.constraints;
    cost_cfg.n_future = parts.safety.size();
    SearchConfig search = cfg.search;
    search.seed = derive_seed(cfg.seed, std::uint64_t{2});

    const auto candidate = select_candidate(parts.candidate, cost_cfg, search, beta);
    return fairness_test(candidate, parts.safety, cfg.constraints, beta);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline void from_json(const nlohmann::json& j, SearchConfig& s) {
    s = SearchConfig{};
    s.population_size = j.value("population_size", s.population_size);
    s.generations = j.value("generations", s.generations);
    s.initial_step = j.value("initial_step", s.initial_step);
    s.seed = j.value("seed", s.seed);
}

inline void to_json(nlohmann::json& j, const SearchConfig& s) {
    j = nlohmann::json{{"population_size", s.population_size},
                       {"generations", s.generations},
                       {"initial_step", s.initial_step}};
}

inline LossKind loss_kind_from_string(const std::string& s) {
    if (s == "expected01") return LossKind::Expected01;
    if (s == "nll") return LossKind::NLL;
    throw std::invalid_argument("unknown loss kind: " + s);
}

/// Reads an ElfConfig. Constraint tolerances may be the string
/// "behavior_mean", resolved against `data` as the mean logged delayed impact
/// over the predicate-matching examples.
inline ElfConfig elf_config_from_json(const nlohmann::json& j, const Dataset* data = nullptr) {
    ElfConfig cfg;
    for (auto c : j.at("constraints")) {
        if (c.contains("tau") && c.at("tau").is_string()) {
            if (c.at("tau").get<std::string>() != "behavior_mean") {
                throw std::invalid_argument("tau must be a number or \"behavior_mean\"");
            }
            if (data == nullptr) throw std::invalid_argument("tau \"behavior_mean\" needs a dataset");
            const auto pred = c.contains("predicate") ? c.at("predicate").get<ConditionalPredicate>()
                                                      : ConditionalPredicate::always();
            double total = 0.0;
            std::size_t count = 0;
            for (const auto& ex : *data) {
                if (evaluate_predicate(pred, ex)) {
                    total += ex.i_beta;
                    ++count;
                }
            }
            if (count == 0) throw std::invalid_argument("tau \"behavior_mean\": no matching examples");
            c["tau"] = total / static_cast<double>(count);
        }
        cfg.constraints.push_back(c.get<DIConstraint>());
    }
    cfg.candidate_fraction = j.value("candidate_fraction", cfg.candidate_fraction);
    cfg.cost.xi = j.value("xi", cfg.cost.xi);
    cfg.cost.lambda = j.value("lambda", cfg.cost.lambda);
    cfg.cost.loss_kind = loss_kind_from_string(j.value("loss", std::string{"expected01"}));
    if (j.contains("search")) cfg.search = j.at("search").get<SearchConfig>();
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

}  // namespace elf
