// Closed-form and numeric solutions of the two sample-allocation optimality
// conditions, the convergence-rate constants they induce, Gaussian KL
// divergence, and exact pairwise false-selection probabilities. Everything
// here is a pure function of its inputs; the empirical runs are validated
// against this layer.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "ocba/instance.hpp"

namespace ocba::theory {

inline constexpr double kMinGap = 1e-12;

/// Standard normal CDF via the complementary error function.
/// Absolute error bounded by a few ULP of erfc, well below 1e-12.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * M_SQRT1_2);
}

/// Lower bound on the tail Phi(-x), x > 0.
inline double gordon_tail_lower(double x) {
    if (x <= 0.0) throw std::invalid_argument("gordon_tail_lower: x must be positive");
    return x / (std::sqrt(2.0 * M_PI) * (1.0 + x * x)) * std::exp(-0.5 * x * x);
}

/// Upper bound on the tail Phi(-x), x > 0.
inline double gordon_tail_upper(double x) {
    if (x <= 0.0) throw std::invalid_argument("gordon_tail_upper: x must be positive");
    return std::exp(-0.5 * x * x) / (std::sqrt(2.0 * M_PI) * x);
}

/// KL divergence between N(mu_i, sigma_i^2) and N(mu_b, sigma_b^2).
inline double gaussian_kl(double mu_i, double sigma_i, double mu_b, double sigma_b) {
    if (sigma_i <= 0.0 || sigma_b <= 0.0) {
        throw std::invalid_argument("gaussian_kl: sigma must be positive");
    }
    const double d = mu_i - mu_b;
    return (d * d + sigma_i * sigma_i) / (2.0 * sigma_b * sigma_b) +
           std::log(sigma_b / sigma_i) - 0.5;
}

namespace detail {

inline void check_allocation_inputs(std::span<const double> mu, std::span<const double> sigma,
                                    std::size_t best) {
    if (mu.size() != sigma.size() || mu.size() < 2) {
        throw std::invalid_argument("allocation: need matching mu/sigma with k >= 2");
    }
    if (best >= mu.size()) {
        throw std::invalid_argument("allocation: best index out of range");
    }
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (sigma[i] <= 0.0) {
            throw std::invalid_argument("allocation: sigma must be positive");
        }
        if (i != best && mu[best] - mu[i] < kMinGap) {
            throw std::invalid_argument("allocation: mean gap below 1e-12, best not unique");
        }
    }
}

}  // namespace detail

/// Closed-form allocation: alpha_i proportional to beta_i with
/// beta_j = sigma_j^2 / gap_j^2 for non-best j and
/// beta_b = sigma_b * sqrt(sum_j sigma_j^2 / gap_j^4).
inline std::vector<double> ocba1_allocation(std::span<const double> mu,
                                            std::span<const double> sigma, std::size_t best) {
    detail::check_allocation_inputs(mu, sigma, best);
    const std::size_t k = mu.size();
    std::vector<double> beta(k, 0.0);
    double sum_fourth = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        if (j == best) continue;
        const double gap = mu[best] - mu[j];
        beta[j] = sigma[j] * sigma[j] / (gap * gap);
        sum_fourth += sigma[j] * sigma[j] / (gap * gap * gap * gap);
    }
    beta[best] = sigma[best] * std::sqrt(sum_fourth);
    const double total = std::accumulate(beta.begin(), beta.end(), 0.0);
    for (double& b : beta) b /= total;
    return beta;
}

/// Max relative residual of the closed-form optimality conditions (count
/// balance plus pairwise allocation ratios) under the given allocation.
inline double ocba1_residual(std::span<const double> mu, std::span<const double> sigma,
                             std::size_t best, std::span<const double> alpha) {
    const std::size_t k = mu.size();
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (i == best) continue;
        sum_sq += alpha[i] * alpha[i] / (sigma[i] * sigma[i]);
    }
    const double bal_lhs = alpha[best] * alpha[best] / (sigma[best] * sigma[best]);
    double res = std::fabs(bal_lhs - sum_sq) / std::max(bal_lhs, sum_sq);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            if (i == best || j == best) continue;
            const double gi = mu[best] - mu[i];
            const double gj = mu[best] - mu[j];
            const double lhs = alpha[i] * sigma[j] * sigma[j] * gi * gi;
            const double rhs = alpha[j] * sigma[i] * sigma[i] * gj * gj;
            res = std::max(res, std::fabs(lhs - rhs) / std::max(lhs, rhs));
        }
    }
    return res;
}

/// Max relative residual of the variance-balance equation, the pairwise rate
/// equalization, and the simplex constraint under the given allocation.
inline double ocba2_residual(std::span<const double> mu, std::span<const double> sigma,
                             std::size_t best, std::span<const double> alpha) {
    const std::size_t k = mu.size();
    double sum_sq = 0.0;
    double sum_alpha = 0.0;
    double rate_min = std::numeric_limits<double>::infinity();
    double rate_max = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sum_alpha += alpha[i];
        if (i == best) continue;
        sum_sq += alpha[i] * alpha[i] / (sigma[i] * sigma[i]);
        const double gap = mu[best] - mu[i];
        const double rate = gap * gap / (sigma[i] * sigma[i] / alpha[i] +
                                         sigma[best] * sigma[best] / alpha[best]);
        rate_min = std::min(rate_min, rate);
        rate_max = std::max(rate_max, rate);
    }
    const double bal_lhs = alpha[best] * alpha[best] / (sigma[best] * sigma[best]);
    double res = std::fabs(bal_lhs - sum_sq) / std::max(bal_lhs, sum_sq);
    if (k > 2) {
        res = std::max(res, (rate_max - rate_min) / rate_max);
    }
    res = std::max(res, std::fabs(sum_alpha - 1.0));
    return res;
}

/// Allocation solving the variance-balance plus rate-equalization system.
///
/// Solved by nested bisection: the outer level searches the best design's
/// share alpha_b (the balance equation changes sign exactly once, at the
/// unique solution); the inner level searches the common rate gamma so the
/// non-best shares fill 1 - alpha_b. Given (gamma, alpha_b) each non-best
/// share follows in closed form since the rate equation is linear in
/// 1/alpha_i. Iteration caps: 200 outer, 100 inner.
inline std::vector<double> ocba2_allocation(std::span<const double> mu,
                                            std::span<const double> sigma, std::size_t best,
                                            double tol = 1e-10) {
    detail::check_allocation_inputs(mu, sigma, best);
    if (tol <= 0.0) throw std::invalid_argument("ocba2_allocation: tol must be positive");
    const std::size_t k = mu.size();
    const double sb2 = sigma[best] * sigma[best];

    std::vector<double> alpha(k, 0.0);
    // Non-best shares for a candidate (gamma, alpha_b); false when gamma is
    // past the feasible range.
    auto fill_others = [&](double gamma, double ab) -> bool {
        for (std::size_t i = 0; i < k; ++i) {
            if (i == best) continue;
            const double gap = mu[best] - mu[i];
            const double denom = gap * gap / gamma - sb2 / ab;
            if (denom <= 0.0) return false;
            alpha[i] = sigma[i] * sigma[i] / denom;
        }
        return true;
    };

    auto solve_gamma = [&](double ab) {
        double gamma_max = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < k; ++i) {
            if (i == best) continue;
            const double gap = mu[best] - mu[i];
            gamma_max = std::min(gamma_max, gap * gap * ab / sb2);
        }
        double lo = 0.0;
        double hi = gamma_max;
        for (int iter = 0; iter < 100; ++iter) {
            const double mid = 0.5 * (lo + hi);
            double sum = std::numeric_limits<double>::infinity();
            if (fill_others(mid, ab)) {
                sum = 0.0;
                for (std::size_t i = 0; i < k; ++i) {
                    if (i != best) sum += alpha[i];
                }
            }
            if (sum < 1.0 - ab) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    };

    auto balance = [&](double ab) {
        fill_others(solve_gamma(ab), ab);
        double sum_sq = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            if (i != best) sum_sq += alpha[i] * alpha[i] / (sigma[i] * sigma[i]);
        }
        return ab * ab / sb2 - sum_sq;
    };

    double lo = 1e-12;
    double hi = 1.0 - 1e-12;
    if (!(balance(lo) < 0.0 && balance(hi) > 0.0)) {
        throw std::runtime_error("ocba2_allocation: balance equation not bracketed");
    }
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (balance(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double ab = 0.5 * (lo + hi);
    fill_others(solve_gamma(ab), ab);
    alpha[best] = ab;
    const double total = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    for (double& a : alpha) a /= total;

    if (ocba2_residual(mu, sigma, best, alpha) > tol) {
        throw std::runtime_error("ocba2_allocation: no convergence within iteration caps");
    }
    return alpha;
}

/// Decay-rate constant eta for a positive allocation: the smallest pairwise
/// rate (gap^2 * delta) / (sigma_i^2/alpha_i + sigma_b^2/alpha_b) over
/// non-best designs.
inline double rate_constant(const ProblemInstance& inst, std::span<const double> alpha,
                            int delta) {
    if (alpha.size() != inst.k()) {
        throw std::invalid_argument("rate_constant: allocation size mismatch");
    }
    if (delta < 1) throw std::invalid_argument("rate_constant: delta must be >= 1");
    for (double a : alpha) {
        if (a <= 0.0) throw std::invalid_argument("rate_constant: allocation must be positive");
    }
    double eta = std::numeric_limits<double>::infinity();
    const std::size_t b = inst.best;
    for (std::size_t i = 0; i < inst.k(); ++i) {
        if (i == b) continue;
        const double gap = inst.gap(i);
        const double denom = inst.sigma[i] * inst.sigma[i] / alpha[i] +
                             inst.sigma[b] * inst.sigma[b] / alpha[b];
        eta = std::min(eta, gap * gap * static_cast<double>(delta) / denom);
    }
    return eta;
}

struct UmConstants {
    double h_star = 0.0;
    double rho_star = 0.0;
    double lai_robbins_const = 0.0;
};

/// Constants governing the logarithmic cumulative-regret regime:
/// lai_robbins_const = sum of gap/kl over non-best designs, h_star rescales it
/// by the closed-form allocation's mean regret, rho_star is the polynomial
/// false-selection exponent h_star / sum(beta).
inline UmConstants um_constants(const ProblemInstance& inst) {
    const std::size_t b = inst.best;
    const auto alpha = ocba1_allocation(inst.mu, inst.sigma, b);
    double lai = 0.0;
    double weighted_gap = 0.0;
    double beta_sum = 0.0;
    double sum_fourth = 0.0;
    for (std::size_t i = 0; i < inst.k(); ++i) {
        if (i == b) continue;
        const double gap = inst.gap(i);
        lai += gap / gaussian_kl(inst.mu[i], inst.sigma[i], inst.mu[b], inst.sigma[b]);
        weighted_gap += alpha[i] * gap;
        beta_sum += inst.sigma[i] * inst.sigma[i] / (gap * gap);
        sum_fourth += inst.sigma[i] * inst.sigma[i] / (gap * gap * gap * gap);
    }
    beta_sum += inst.sigma[b] * std::sqrt(sum_fourth);
    UmConstants out;
    out.lai_robbins_const = lai;
    out.h_star = lai / weighted_gap;
    out.rho_star = out.h_star / beta_sum;
    return out;
}

/// Probability that design i's sample mean exceeds the best design's, for
/// independent Gaussians at the given counts: Phi(-gap / sqrt(si^2/ni + sb^2/nb)).
inline double pairwise_false_prob(double gap, double sigma_i, double sigma_b, std::int64_t n_i,
                                  std::int64_t n_b) {
    if (n_i < 1 || n_b < 1) {
        throw std::invalid_argument("pairwise_false_prob: counts must be >= 1");
    }
    if (sigma_i <= 0.0 || sigma_b <= 0.0) {
        throw std::invalid_argument("pairwise_false_prob: sigma must be positive");
    }
    const double scale = std::sqrt(sigma_i * sigma_i / static_cast<double>(n_i) +
                                   sigma_b * sigma_b / static_cast<double>(n_b));
    return normal_cdf(-gap / scale);
}

struct PfsBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// Union-bound sandwich on the false-selection probability at fixed counts:
/// the worst pairwise probability from below, (k-1) times it from above.
inline PfsBounds pfs_bounds(const ProblemInstance& inst, std::span<const std::int64_t> counts) {
    if (counts.size() != inst.k()) {
        throw std::invalid_argument("pfs_bounds: counts size mismatch");
    }
    for (std::int64_t n : counts) {
        if (n < 1) throw std::invalid_argument("pfs_bounds: counts must be >= 1");
    }
    const std::size_t b = inst.best;
    double worst = 0.0;
    for (std::size_t i = 0; i < inst.k(); ++i) {
        if (i == b) continue;
        worst = std::max(worst, pairwise_false_prob(inst.gap(i), inst.sigma[i], inst.sigma[b],
                                                    counts[i], counts[b]));
    }
    return PfsBounds{worst, static_cast<double>(inst.k() - 1) * worst};
}

// Diagnostic targets for one instance; what the empirical metric series are
// checked against.
struct TheoryReport {
    std::vector<double> alpha_star;
    std::vector<double> alpha_star2;
    double eta_star = 0.0;
    double eta_star2 = 0.0;
    std::vector<double> kl;  // over non-best designs, ascending index
    double h_star = 0.0;
    double rho_star = 0.0;
    double lai_robbins_const = 0.0;
};

inline TheoryReport make_theory_report(const ProblemInstance& inst, int delta = 1) {
    TheoryReport report;
    report.alpha_star = ocba1_allocation(inst.mu, inst.sigma, inst.best);
    report.alpha_star2 = ocba2_allocation(inst.mu, inst.sigma, inst.best);
    report.eta_star = rate_constant(inst, report.alpha_star, delta);
    report.eta_star2 = rate_constant(inst, report.alpha_star2, delta);
    for (std::size_t i = 0; i < inst.k(); ++i) {
        if (i == inst.best) continue;
        report.kl.push_back(
            gaussian_kl(inst.mu[i], inst.sigma[i], inst.mu[inst.best], inst.sigma[inst.best]));
    }
    const UmConstants um = um_constants(inst);
    report.h_star = um.h_star;
    report.rho_star = um.rho_star;
    report.lai_robbins_const = um.lai_robbins_const;
    return report;
}

inline void to_json(nlohmann::json& j, const TheoryReport& r) {
    j = nlohmann::json{{"alpha_star", r.alpha_star},
                       {"alpha_star2", r.alpha_star2},
                       {"eta_star", r.eta_star},
                       {"eta_star2", r.eta_star2},
                       {"kl", r.kl},
                       {"h_star", r.h_star},
                       {"rho_star", r.rho_star},
                       {"lai_robbins_const", r.lai_robbins_const}};
}

}  // namespace ocba::theory
