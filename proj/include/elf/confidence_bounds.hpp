#pragma once
// High-confidence upper bounds on the mean of a sample of g estimates.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "student_t.hpp"

namespace elf {

struct TTest {
    friend bool operator==(const TTest&, const TTest&) = default;
};

/// Every sample is assumed to lie in [a, b].
struct Hoeffding {
    double a = 0.0;
    double b = 1.0;
    friend bool operator==(const Hoeffding&, const Hoeffding&) = default;
};

using BoundMethod = std::variant<TTest, Hoeffding>;

inline std::size_t min_samples(const BoundMethod& method) {
    return std::holds_alternative<TTest>(method) ? 2 : 1;
}

inline double sample_mean(std::span<const double> z) {
    double s = 0.0;
    for (double v : z) s += v;
    return s / static_cast<double>(z.size());
}

/// Sample standard deviation with Bessel's correction.
inline double sample_sd(std::span<const double> z) {
    if (z.size() < 2) throw std::invalid_argument("sample standard deviation needs at least two samples");
    const double mean = sample_mean(z);
    double ss = 0.0;
    for (double v : z) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(z.size() - 1));
}

/// Exact test for zero spread; rounding in the mean and sd would otherwise
/// leave a spurious offset on constant samples.
inline bool all_equal(std::span<const double> z) {
    for (double v : z) {
        if (v != z.front()) return false;
    }
    return true;
}

inline void check_delta(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
}

/// mean + sd / sqrt(m) * t_{1-delta, m-1}
inline double ttest_upper(std::span<const double> samples, double delta) {
    check_delta(delta);
    if (samples.size() < 2) throw std::invalid_argument("t-test bound needs at least two samples");
    if (all_equal(samples)) return samples.front();
    const double mean = sample_mean(samples);
    const double sd = sample_sd(samples);
    if (sd == 0.0) return mean;
    const auto m = static_cast<double>(samples.size());
    return mean + sd / std::sqrt(m) * stats::student_t_quantile(1.0 - delta, m - 1.0);
}

inline void check_hoeffding_range(std::span<const double> samples, double a, double b) {
    if (!(a < b)) throw std::invalid_argument("Hoeffding range needs a < b");
    for (double v : samples) {
        if (v < a || v > b) {
            throw std::domain_error("sample " + std::to_string(v) + " outside Hoeffding range [" + std::to_string(a) +
                                    ", " + std::to_string(b) + "]");
        }
    }
}

/// mean + (b - a) * sqrt(log(1/delta) / (2m))
inline double hoeffding_upper(std::span<const double> samples, double delta, double a, double b) {
    check_delta(delta);
    if (samples.empty()) throw std::invalid_argument("Hoeffding bound needs at least one sample");
    check_hoeffding_range(samples, a, b);
    const auto m = static_cast<double>(samples.size());
    return sample_mean(samples) + (b - a) * std::sqrt(std::log(1.0 / delta) / (2.0 * m));
}

inline double upper_bound(std::span<const double> samples, double delta, const BoundMethod& method) {
    if (const auto* h = std::get_if<Hoeffding>(&method)) return hoeffding_upper(samples, delta, h->a, h->b);
    return ttest_upper(samples, delta);
}

struct BoundRequest {
    std::span<const double> samples;
    double delta = 0.1;
    BoundMethod method = TTest{};
    bool inflated = false;
    double lambda = 2.0;
    std::size_t n_future = 0;
};

/// Candidate-selection prediction of the safety-test bound: the candidate
/// sample mean plus lambda times the confidence offset evaluated with the
/// future safety-set size in place of the sample count (both in the sqrt
/// and in the t degrees of freedom). The sample sd still comes from the
/// candidate samples.
inline double inflated_upper(const BoundRequest& req) {
    check_delta(req.delta);
    const auto& z = req.samples;
    if (!req.inflated) return upper_bound(z, req.delta, req.method);

    const auto nf = static_cast<double>(req.n_future);
    if (const auto* h = std::get_if<Hoeffding>(&req.method)) {
        if (z.empty()) throw std::invalid_argument("Hoeffding bound needs at least one sample");
        if (req.n_future < 1) throw std::invalid_argument("inflated Hoeffding bound needs n_future >= 1");
        check_hoeffding_range(z, h->a, h->b);
        return sample_mean(z) + req.lambda * (h->b - h->a) * std::sqrt(std::log(1.0 / req.delta) / (2.0 * nf));
    }
    if (z.size() < 2) throw std::invalid_argument("t-test bound needs at least two samples");
    if (req.n_future < 2) throw std::invalid_argument("inflated t-test bound needs n_future >= 2");
    if (all_equal(z)) return z.front();
    const double mean = sample_mean(z);
    const double sd = sample_sd(z);
    if (sd == 0.0 || req.lambda == 0.0) return mean;
    return mean + req.lambda * sd / std::sqrt(nf) * stats::student_t_quantile(1.0 - req.delta, nf - 1.0);
}

// "ttest" or {"hoeffding": [a, b]}
inline void to_json(nlohmann::json& j, const BoundMethod& m) {
    if (const auto* h = std::get_if<Hoeffding>(&m)) {
        j = nlohmann::json{{"hoeffding", {h->a, h->b}}};
    } else {
        j = "ttest";
    }
}

inline void from_json(const nlohmann::json& j, BoundMethod& m) {
    if (j.is_string() && j.get<std::string>() == "ttest") {
        m = TTest{};
    } else if (j.is_object() && j.contains("hoeffding")) {
        const auto range = j.at("hoeffding").get<std::vector<double>>();
        if (range.size() != 2 || !(range[0] < range[1])) throw std::invalid_argument("hoeffding needs [a, b] with a < b");
        m = Hoeffding{range[0], range[1]};
    } else {
        throw std::invalid_argument("unknown bound method: " + j.dump());
    }
}

}  // namespace elf
