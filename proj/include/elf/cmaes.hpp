#pragma once
// (mu/mu_w, lambda)-CMA-ES minimizer with rank-one and rank-mu covariance updates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace elf {

struct SearchConfig {
    int population_size = 0;  // 0 selects 4 + floor(3 ln dim)
    int generations = 150;
    double initial_step = 0.5;
    std::uint64_t seed = 0;

    int resolved_population(std::size_t dim) const {
        if (population_size > 0) return population_size;
        return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(std::max<std::size_t>(dim, 1)))));
    }

    void validate(std::size_t dim) const {
        if (resolved_population(dim) < 4) throw std::invalid_argument("population_size must be at least 4");
        if (generations < 1) throw std::invalid_argument("generations must be at least 1");
        if (!(initial_step > 0.0)) throw std::invalid_argument("initial_step must be positive");
    }
};

struct SearchResult {
    std::vector<double> best;
    double best_cost = std::numeric_limits<double>::infinity();
    int evaluations = 0;
};

/// Minimizes `cost` starting from `initial_mean`. Non-finite costs count as
/// +inf; the best sampled point over the whole run is returned.
inline SearchResult cmaes_minimize(const std::function<double(const std::vector<double>&)>& cost,
                                   const std::vector<double>& initial_mean, const SearchConfig& cfg) {
    using Eigen::MatrixXd;
    using Eigen::VectorXd;

    const auto n = static_cast<Eigen::Index>(initial_mean.size());
    if (n == 0) throw std::invalid_argument("cannot search an empty parameter vector");
    cfg.validate(initial_mean.size());

    const int lambda = cfg.resolved_population(initial_mean.size());
    const int mu = lambda / 2;
    const double dn = static_cast<double>(n);

    VectorXd weights(mu);
    for (int i = 0; i < mu; ++i) weights[i] = std::log(mu + 0.5) - std::log(i + 1.0);
    weights /= weights.sum();
    const double mu_eff = 1.0 / weights.squaredNorm();

    const double cc = (4.0 + mu_eff / dn) / (dn + 4.0 + 2.0 * mu_eff / dn);
    const double cs = (mu_eff + 2.0) / (dn + mu_eff + 5.0);
    const double c1 = 2.0 / ((dn + 1.3) * (dn + 1.3) + mu_eff);
    const double cmu = std::min(1.0 - c1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((dn + 2.0) * (dn + 2.0) + mu_eff));
    const double damps = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff - 1.0) / (dn + 1.0)) - 1.0) + cs;
    const double chi_n = std::sqrt(dn) * (1.0 - 1.0 / (4.0 * dn) + 1.0 / (21.0 * dn * dn));

    VectorXd mean = Eigen::Map<const VectorXd>(initial_mean.data(), n);
    double sigma = cfg.initial_step;
    VectorXd pc = VectorXd::Zero(n);
    VectorXd ps = VectorXd::Zero(n);
    MatrixXd C = MatrixXd::Identity(n, n);
    MatrixXd B = MatrixXd::Identity(n, n);
    VectorXd D = VectorXd::Ones(n);
    MatrixXd inv_sqrt_C = MatrixXd::Identity(n, n);

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    SearchResult result;
    std::vector<VectorXd> xs(static_cast<std::size_t>(lambda), VectorXd(n));
    std::vector<double> costs(static_cast<std::size_t>(lambda));
    std::vector<int> order(static_cast<std::size_t>(lambda));
    std::vector<double> candidate(static_cast<std::size_t>(n));

    for (int gen = 0; gen < cfg.generations; ++gen) {
        for (int k = 0; k < lambda; ++k) {
            VectorXd z(n);
            for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
            auto& x = xs[static_cast<std::size_t>(k)];
            x = mean + sigma * (B * D.asDiagonal() * z);
            double c = std::numeric_limits<double>::infinity();
            if (x.allFinite()) {
                std::copy(x.data(), x.data() + n, candidate.begin());
                c = cost(candidate);
                ++result.evaluations;
                if (!std::isfinite(c)) c = std::numeric_limits<double>::infinity();
            }
            costs[static_cast<std::size_t>(k)] = c;
            if (c < result.best_cost || result.best.empty()) {
                if (x.allFinite()) {
                    result.best_cost = c;
                    result.best.assign(x.data(), x.data() + n);
                }
            }
        }

        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return costs[static_cast<std::size_t>(a)] < costs[static_cast<std::size_t>(b)];
        });

        const VectorXd old_mean = mean;
        mean.setZero();
        for (int i = 0; i < mu; ++i) mean += weights[i] * xs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];

        const VectorXd step = (mean - old_mean) / sigma;
        ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mu_eff) * (inv_sqrt_C * step);
        const double ps_norm = ps.norm();
        const double hsig_lhs = ps_norm / std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * (gen + 1)));
        const bool hsig = hsig_lhs < (1.4 + 2.0 / (dn + 1.0)) * chi_n;
        pc = (1.0 - cc) * pc + (hsig ? std::sqrt(cc * (2.0 - cc) * mu_eff) : 0.0) * step;

        MatrixXd rank_mu = MatrixXd::Zero(n, n);
        for (int i = 0; i < mu; ++i) {
            const VectorXd y = (xs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] - old_mean) / sigma;
            rank_mu += weights[i] * y * y.transpose();
        }
        const double hsig_correction = hsig ? 0.0 : cc * (2.0 - cc);
        C = (1.0 - c1 - cmu) * C + c1 * (pc * pc.transpose() + hsig_correction * C) + cmu * rank_mu;

        sigma *= std::exp((cs / damps) * (ps_norm / chi_n - 1.0));
        if (!std::isfinite(sigma) || sigma <= 0.0) break;
        sigma = std::min(sigma, 1e6);

        C = 0.5 * (C + C.transpose());
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(C);
        if (eig.info() != Eigen::Success) break;
        B = eig.eigenvectors();
        D = eig.eigenvalues().cwiseMax(1e-20).cwiseSqrt();
        inv_sqrt_C = B * D.cwiseInverse().asDiagonal() * B.transpose();
        if (D.maxCoeff() * sigma < 1e-14) break;
    }
    return result;
}

}  // namespace elf
