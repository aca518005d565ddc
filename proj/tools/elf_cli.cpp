// elf: command-line front end for data generation, behavior training,
// single ELF runs, sweeps and ground-truth evaluation.
//
// Exit status: 0 on success (NSF included), 1 on config/IO errors,
// 2 on numeric failures.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "elf/elf.hpp"
#include "elf/errors.hpp"
#include "elf/experiment.hpp"
#include "elf/synthetic_world.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned jobs = 0;
};

struct Config {
    json doc;
    fs::path dir;

    // Paths inside a config are relative to the config file.
    std::string path(const std::string& key) const {
        const fs::path p = doc.at(key).get<std::string>();
        return (p.is_absolute() ? p : dir / p).string();
    }
};

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    Config cfg;
    cfg.doc = json::parse(in);
    if (!cfg.doc.is_object()) throw std::invalid_argument("config must be a JSON object");
    cfg.dir = fs::path(path).parent_path();
    return cfg;
}

std::uint64_t seed_of(const Config& cfg, const Options& opt, const char* key = "seed") {
    return opt.seed ? *opt.seed : cfg.doc.value(key, std::uint64_t{0});
}

elf::WorldConfig world_of(const Config& cfg) {
    return cfg.doc.contains("world") ? cfg.doc.at("world").get<elf::WorldConfig>() : elf::WorldConfig{};
}

void ensure_parent(const std::string& path) {
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

// {"world": {...}, "n": 1000, "seed": 0, "behavior_model": path?, "behavior_out": path?}
// Without a behavior model one is trained from the world, using the same seed
// streams as a sweep trial with that seed.
int cmd_gen_data(const Options& opt) {
    const auto cfg = load_config(opt.config);
    const auto world = world_of(cfg);
    const auto seed = seed_of(cfg, opt);
    const auto n = cfg.doc.at("n").get<std::size_t>();
    const auto beta = cfg.doc.contains("behavior_model")
                          ? elf::load_classifier(cfg.path("behavior_model"))
                          : elf::train_behavior_model(world, elf::derive_seed(seed, std::uint64_t{11}));
    const auto data = elf::generate_behavior_dataset(world, n, beta, elf::derive_seed(seed, std::uint64_t{12}));
    const std::string out = opt.out.empty() ? "data.csv" : opt.out;
    ensure_parent(out);
    elf::write_csv(out, data);
    if (cfg.doc.contains("behavior_out")) {
        const auto beta_out = cfg.path("behavior_out");
        ensure_parent(beta_out);
        elf::save_classifier(beta_out, beta);
    }
    std::cout << out << '\n';
    return 0;
}

// Either {"dataset": path, "num_groups"?, "steps"?, "learning_rate"?} (fit on its labels)
// or {"world": {...}, "seed": 0} (fit on a fresh sample from the world).
int cmd_train_behavior(const Options& opt) {
    const auto cfg = load_config(opt.config);
    elf::StochasticLinearClassifier beta;
    if (cfg.doc.contains("dataset")) {
        const auto data = elf::read_csv(cfg.path("dataset"), 2, cfg.doc.value("num_groups", 0));
        elf::BehaviorTraining training;
        training.steps = cfg.doc.value("steps", training.steps);
        training.learning_rate = cfg.doc.value("learning_rate", training.learning_rate);
        beta = elf::fit_behavior_model(data, training);
    } else {
        beta = elf::train_behavior_model(world_of(cfg), elf::derive_seed(seed_of(cfg, opt), std::uint64_t{11}));
    }
    const std::string out = opt.out.empty() ? "behavior.json" : opt.out;
    ensure_parent(out);
    elf::save_classifier(out, beta);
    std::cout << out << '\n';
    return 0;
}

// {"dataset": path, "behavior_model": path, "constraints": [...], "xi"?, "lambda"?,
//  "loss"?, "search"?, "candidate_fraction"?, "seed"?, "num_groups"?}
int cmd_run(const Options& opt) {
    const auto cfg = load_config(opt.config);
    const auto beta = elf::load_classifier(cfg.path("behavior_model"));
    const auto data = elf::read_csv(cfg.path("dataset"), beta.num_labels(), cfg.doc.value("num_groups", 0));
    auto ec = elf::elf_config_from_json(cfg.doc, &data);
    if (opt.seed) ec.seed = *opt.seed;
    const auto outcome = elf::run_elf(data, beta, ec);
    if (outcome.is_nsf()) {
        if (!outcome.reason.empty()) std::cerr << "no solution: " << outcome.reason << '\n';
        std::cout << "NSF\n";
        return 0;
    }
    const std::string out = opt.out.empty() ? "model.json" : opt.out;
    ensure_parent(out);
    elf::save_classifier(out, outcome.model());
    std::cout << out << '\n';
    return 0;
}

// SweepConfig JSON; --out is a directory receiving records.csv and aggregate.csv.
int cmd_sweep(const Options& opt) {
    const auto cfg = load_config(opt.config);
    auto sweep = cfg.doc.get<elf::SweepConfig>();
    if (opt.seed) sweep.base_seed = *opt.seed;
    const auto records = elf::run_sweep(sweep, opt.jobs);
    const fs::path dir = opt.out.empty() ? fs::path(".") : fs::path(opt.out);
    fs::create_directories(dir);

    int errors = 0;
    for (const auto& r : records) {
        if (r.error) {
            ++errors;
            std::cerr << "trial alpha=" << r.alpha << " n=" << r.n << " trial=" << r.trial << " failed: " << *r.error
                      << '\n';
        }
    }
    const auto records_path = dir / "records.csv";
    const auto aggregate_path = dir / "aggregate.csv";
    std::ofstream rec(records_path);
    std::ofstream agg(aggregate_path);
    if (!rec || !agg) throw std::runtime_error("cannot write sweep output in " + dir.string());
    elf::write_records_csv(rec, records);
    elf::write_aggregate_csv(agg, elf::aggregate(records));
    std::cout << records_path.string() << '\n' << aggregate_path.string() << '\n';
    if (errors > 0) std::cerr << errors << " trial(s) ended in an error and were excluded\n";
    return 0;
}

// {"world": {...}, "model": path, "tau": [t0, t1] | "dataset": path,
//  "population_size"?, "seed"?}
int cmd_eval(const Options& opt) {
    const auto cfg = load_config(opt.config);
    const auto world = world_of(cfg);
    const auto model = elf::load_classifier(cfg.path("model"));
    std::vector<double> tau;
    if (cfg.doc.contains("tau")) {
        tau = cfg.doc.at("tau").get<std::vector<double>>();
    } else {
        tau = elf::compute_tolerances(elf::read_csv(cfg.path("dataset"), 2, world.num_groups()));
    }
    if (tau.size() != 2) throw std::invalid_argument("tau needs one entry per group (2)");
    const auto size = cfg.doc.value("population_size", std::size_t{100000});
    const auto gt = elf::evaluate_ground_truth(model, world, tau, size,
                                               elf::derive_seed(seed_of(cfg, opt), std::uint64_t{14}));
    std::cout << json{{"g0", gt.g0}, {"g1", gt.g1}, {"accuracy", gt.accuracy}}.dump() << '\n';
    return 0;
}

bool is_numeric_failure(const std::exception& e) {
    return dynamic_cast<const elf::NumericError*>(&e) || dynamic_cast<const std::domain_error*>(&e) ||
           dynamic_cast<const std::range_error*>(&e) || dynamic_cast<const std::underflow_error*>(&e) ||
           dynamic_cast<const std::overflow_error*>(&e);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ELF: Seldonian classification with delayed-impact constraints"};
    app.require_subcommand(1);
    Options opt;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "JSON config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "output path");
        sub->add_option("--seed", seed, "override the config seed");
        return sub;
    };
    auto* gen = add_common(app.add_subcommand("gen-data", "generate a logged behavior dataset (CSV)"));
    auto* train = add_common(app.add_subcommand("train-behavior", "fit a behavior model (JSON)"));
    auto* run = add_common(app.add_subcommand("run", "run ELF once; prints the model path or NSF"));
    auto* sweep = add_common(app.add_subcommand("sweep", "alpha x n sweep; writes records.csv and aggregate.csv"));
    sweep->add_option("--jobs", opt.jobs, "worker threads (default: available parallelism)");
    auto* eval = add_common(app.add_subcommand("eval", "ground-truth g and accuracy of a model, as JSON"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    for (auto* sub : {gen, train, run, sweep, eval}) {
        if (sub->parsed() && sub->count("--seed") > 0) opt.seed = seed;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(opt);
        if (train->parsed()) return cmd_train_behavior(opt);
        if (run->parsed()) return cmd_run(opt);
        if (sweep->parsed()) return cmd_sweep(opt);
        if (eval->parsed()) return cmd_eval(opt);
    } catch (const std::exception& e) {
        std::cerr << "elf: error: " << e.what() << '\n';
        return is_numeric_failure(e) ? 2 : 1;
    }
    return 1;
}
