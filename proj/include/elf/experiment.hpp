#pragma once
// Seeded alpha x n sweeps over the synthetic world: failure rate, probability
// of returning a solution and accuracy, judged against the analytic ground truth.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "elf.hpp"
#include "seeding.hpp"
#include "synthetic_world.hpp"

namespace elf {

struct SweepConfig {
    WorldConfig world;
    std::vector<double> alphas{0.0, 0.5, 0.9};
    std::vector<std::size_t> ns{128, 256, 512, 1024, 2048, 4096, 8192, 16384};
    int trials = 100;
    double delta_di = 0.1;
    double accuracy_floor = 0.75;
    double delta_acc = 0.1;
    std::size_t eval_population_size = 100000;
    std::uint64_t base_seed = 0;

    double candidate_fraction = 0.6;
    double xi = 0.01;
    double lambda = 2.0;
    SearchConfig search;

    void validate() const {
        world.validate();
        if (trials < 1) throw std::invalid_argument("trials must be at least 1");
        if (alphas.empty() || ns.empty()) throw std::invalid_argument("alphas and ns must be nonempty");
        for (std::size_t i = 1; i < ns.size(); ++i) {
            if (ns[i] <= ns[i - 1]) throw std::invalid_argument("ns must be increasing");
        }
        for (double a : alphas) {
            if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
        }
        check_delta(delta_di);
        check_delta(delta_acc);
        if (eval_population_size < 1) throw std::invalid_argument("eval_population_size must be positive");
    }
};

struct SweepRecord {
    double alpha = 0.0;
    std::size_t n = 0;
    int trial = 0;
    bool returned = false;
    bool fail_g0 = false;
    bool fail_g1 = false;
    bool fail_acc = false;
    double accuracy = std::numeric_limits<double>::quiet_NaN();
    double u0 = std::numeric_limits<double>::quiet_NaN();
    double u1 = std::numeric_limits<double>::quiet_NaN();
    // Ground-truth values of the returned model (NaN for NSF).
    double true_g0 = std::numeric_limits<double>::quiet_NaN();
    double true_g1 = std::numeric_limits<double>::quiet_NaN();
    std::optional<std::string> error;
};

inline std::uint64_t trial_seed(std::uint64_t base_seed, double alpha, std::size_t n, int trial) {
    return derive_seed(derive_seed(derive_seed(base_seed, alpha), static_cast<std::uint64_t>(n)),
                       static_cast<std::uint64_t>(trial));
}

/// The two per-group delayed-impact constraints plus the accuracy floor.
inline std::vector<DIConstraint> protocol_constraints(const std::vector<double>& tau, const SweepConfig& cfg) {
    std::vector<DIConstraint> cs;
    for (int t = 0; t < 2; ++t) {
        DIConstraint c;
        c.name = "g" + std::to_string(t);
        c.predicate = ConditionalPredicate::group_equals(t);
        c.tau = tau.at(static_cast<std::size_t>(t));
        c.delta = cfg.delta_di;
        cs.push_back(c);
    }
    DIConstraint acc;
    acc.name = "accuracy";
    acc.kind = ConstraintKind::Accuracy;
    acc.tau = cfg.accuracy_floor;
    acc.delta = cfg.delta_acc;
    cs.push_back(acc);
    return cs;
}

inline ElfConfig protocol_elf_config(const std::vector<DIConstraint>& constraints, const SweepConfig& cfg,
                                     std::uint64_t seed) {
    ElfConfig ec;
    ec.constraints = constraints;
    ec.candidate_fraction = cfg.candidate_fraction;
    ec.cost.xi = cfg.xi;
    ec.cost.lambda = cfg.lambda;
    ec.search = cfg.search;
    ec.seed = seed;
    return ec;
}

struct GroundTruth {
    double g0 = 0.0;
    double g1 = 0.0;
    double accuracy = 0.0;
};

/// True g_0, g_1 and accuracy of `model` over a fresh population of the world.
inline GroundTruth evaluate_ground_truth(const StochasticLinearClassifier& model, const WorldConfig& world,
                                         const std::vector<double>& tau, std::size_t population_size,
                                         std::uint64_t seed) {
    const auto population = draw_population(world, population_size, seed);
    const auto law = world.di_law();
    SweepConfig dummy;
    const auto cs = protocol_constraints(tau, dummy);
    GroundTruth gt;
    gt.g0 = true_g_oracle(model, population, cs[0], law);
    gt.g1 = true_g_oracle(model, population, cs[1], law);
    gt.accuracy = accuracy(model, population);
    return gt;
}

inline SweepRecord run_trial(double alpha, std::size_t n, int trial, std::uint64_t seed, const SweepConfig& cfg) {
    SweepRecord rec;
    rec.alpha = alpha;
    rec.n = n;
    rec.trial = trial;
    try {
        WorldConfig world = cfg.world;
        world.alpha = alpha;
        world.seed = seed;
        const auto beta = train_behavior_model(world, derive_seed(seed, std::uint64_t{11}));
        const auto data = generate_behavior_dataset(world, n, beta, derive_seed(seed, std::uint64_t{12}));
        std::vector<double> tau;
        try {
            tau = compute_tolerances(data);
        } catch (const std::invalid_argument&) {
            // A group absent from the data: nothing can be certified for it.
            return rec;
        }
        const auto constraints = protocol_constraints(tau, cfg);
        const auto outcome = run_elf(data, beta, protocol_elf_config(constraints, cfg, derive_seed(seed, std::uint64_t{13})));
        if (outcome.upper_bounds.size() >= 2) {
            rec.u0 = outcome.upper_bounds[0];
            rec.u1 = outcome.upper_bounds[1];
        }
        if (outcome.found()) {
            rec.returned = true;
            const auto gt = evaluate_ground_truth(outcome.model(), world, tau, cfg.eval_population_size,
                                                  derive_seed(seed, std::uint64_t{14}));
            rec.true_g0 = gt.g0;
            rec.true_g1 = gt.g1;
            rec.accuracy = gt.accuracy;
            rec.fail_g0 = gt.g0 > 0.0;
            rec.fail_g1 = gt.g1 > 0.0;
            rec.fail_acc = gt.accuracy < cfg.accuracy_floor;
        }
    } catch (const std::exception& e) {
        rec.error = e.what();
    }
    return rec;
}

/// Runs every (alpha, n, trial) cell. Records come back in
/// alpha-major, then n, then trial order regardless of `jobs`.
inline std::vector<SweepRecord> run_sweep(const SweepConfig& cfg, unsigned jobs = 0) {
    cfg.validate();
    struct Task {
        double alpha;
        std::size_t n;
        int trial;
    };
    std::vector<Task> tasks;
    for (double a : cfg.alphas) {
        for (std::size_t n : cfg.ns) {
            for (int k = 0; k < cfg.trials; ++k) tasks.push_back({a, n, k});
        }
    }
    std::vector<SweepRecord> out(tasks.size());
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(tasks.size()));

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            const auto& t = tasks[i];
            out[i] = run_trial(t.alpha, t.n, t.trial, trial_seed(cfg.base_seed, t.alpha, t.n, t.trial), cfg);
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(worker);
    }
    return out;
}

struct AggregateRow {
    double alpha = 0.0;
    std::size_t n = 0;
    int trials = 0;
    double failrate_g0 = 0.0, se_g0 = 0.0;
    double failrate_g1 = 0.0, se_g1 = 0.0;
    double failrate_acc = 0.0, se_acc_fail = 0.0;
    double solution_rate = 0.0, se_sol = 0.0;
    std::optional<double> mean_acc;
    std::optional<double> se_acc;
    int errors = 0;
};

inline double binomial_se(double p, int trials) {
    return trials > 0 ? std::sqrt(p * (1.0 - p) / static_cast<double>(trials)) : 0.0;
}

/// One row per (alpha, n) cell, ordered by alpha then n. Error records are
/// counted in `errors` and excluded from every rate. Accuracy is averaged
/// over returned trials only.
inline std::vector<AggregateRow> aggregate(const std::vector<SweepRecord>& records) {
    if (records.empty()) throw std::invalid_argument("aggregate needs at least one record");
    std::map<std::pair<double, std::size_t>, std::vector<const SweepRecord*>> cells;
    for (const auto& r : records) cells[{r.alpha, r.n}].push_back(&r);

    std::vector<AggregateRow> rows;
    for (const auto& [key, recs] : cells) {
        AggregateRow row;
        row.alpha = key.first;
        row.n = key.second;
        int g0 = 0, g1 = 0, acc_fail = 0, returned = 0;
        std::vector<double> accs;
        for (const auto* r : recs) {
            if (r->error) {
                ++row.errors;
                continue;
            }
            ++row.trials;
            g0 += r->fail_g0;
            g1 += r->fail_g1;
            acc_fail += r->fail_acc;
            if (r->returned) {
                ++returned;
                accs.push_back(r->accuracy);
            }
        }
        if (row.trials > 0) {
            const double T = row.trials;
            row.failrate_g0 = g0 / T;
            row.failrate_g1 = g1 / T;
            row.failrate_acc = acc_fail / T;
            row.solution_rate = returned / T;
            row.se_g0 = binomial_se(row.failrate_g0, row.trials);
            row.se_g1 = binomial_se(row.failrate_g1, row.trials);
            row.se_acc_fail = binomial_se(row.failrate_acc, row.trials);
            row.se_sol = binomial_se(row.solution_rate, row.trials);
        }
        if (!accs.empty()) {
            row.mean_acc = sample_mean(accs);
            row.se_acc = accs.size() >= 2 ? sample_sd(accs) / std::sqrt(static_cast<double>(accs.size())) : 0.0;
        }
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

/// Shortest round-trip decimal; empty for NaN.
inline std::string format_real(double v) {
    if (std::isnan(v)) return {};
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline constexpr const char* kRecordHeader = "alpha,n,trial,returned,fail_g0,fail_g1,fail_acc,accuracy,u0,u1";
inline constexpr const char* kAggregateHeader =
    "alpha,n,trials,failrate_g0,se_g0,failrate_g1,se_g1,solution_rate,se_sol,mean_acc,se_acc";

/// Error records are skipped; they are reported separately by the caller.
inline void write_records_csv(std::ostream& os, const std::vector<SweepRecord>& records) {
    os << kRecordHeader << '\n';
    for (const auto& r : records) {
        if (r.error) continue;
        os << format_real(r.alpha) << ',' << r.n << ',' << r.trial << ',' << int(r.returned) << ',' << int(r.fail_g0)
           << ',' << int(r.fail_g1) << ',' << int(r.fail_acc) << ',' << format_real(r.accuracy) << ','
           << format_real(r.u0) << ',' << format_real(r.u1) << '\n';
    }
}

inline void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
    os << kAggregateHeader << '\n';
    for (const auto& r : rows) {
        os << format_real(r.alpha) << ',' << r.n << ',' << r.trials << ',' << format_real(r.failrate_g0) << ','
           << format_real(r.se_g0) << ',' << format_real(r.failrate_g1) << ',' << format_real(r.se_g1) << ','
           << format_real(r.solution_rate) << ',' << format_real(r.se_sol) << ','
           << (r.mean_acc ? format_real(*r.mean_acc) : "") << ',' << (r.se_acc ? format_real(*r.se_acc) : "") << '\n';
    }
}

inline void from_json(const nlohmann::json& j, SweepConfig& s) {
    s = SweepConfig{};
    if (j.contains("world")) s.world = j.at("world").get<WorldConfig>();
    s.alphas = j.value("alphas", s.alphas);
    s.ns = j.value("ns", s.ns);
    s.trials = j.value("trials", s.trials);
    s.delta_di = j.value("delta_di", s.delta_di);
    s.accuracy_floor = j.value("accuracy_floor", s.accuracy_floor);
    s.delta_acc = j.value("delta_acc", s.delta_acc);
    s.eval_population_size = j.value("eval_population_size", s.eval_population_size);
    s.base_seed = j.value("base_seed", s.base_seed);
    s.candidate_fraction = j.value("candidate_fraction", s.candidate_fraction);
    s.xi = j.value("xi", s.xi);
    s.lambda = j.value("lambda", s.lambda);
    if (j.contains("search")) s.search = j.at("search").get<SearchConfig>();
    s.validate();
}

}  // namespace elf
