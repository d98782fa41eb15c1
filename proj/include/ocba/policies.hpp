// The six sequential sampling policies behind one stepping interface. Every
// step function is a pure function of (state, sigma, draws): callers supply
// uniform draws so the decision itself stays replayable.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocba/random.hpp"
#include "ocba/state.hpp"
#include "ocba/theory.hpp"

namespace ocba::policies {

enum class PolicyKind { Ocba1, Ocba2, Ocba1Um, Ocba2Um, EpsGreedy, Ucb1Normal };

struct PolicyConfig {
    PolicyKind kind = PolicyKind::Ocba1;
    int delta = 1;             // samples committed per decision
    double gap_floor = 1e-12;  // clamp for estimated mean gaps
};

inline bool is_um(PolicyKind kind) {
    return kind == PolicyKind::Ocba1Um || kind == PolicyKind::Ocba2Um;
}

inline void validate(const PolicyConfig& cfg) {
    if (cfg.delta < 1) throw std::invalid_argument("policy: delta must be >= 1");
    if (cfg.gap_floor <= 0.0) throw std::invalid_argument("policy: gap_floor must be positive");
    if (is_um(cfg.kind) && cfg.delta != 1) {
        throw std::invalid_argument("policy: delta must be 1 for the -um variants");
    }
}

inline const char* kind_name(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Ocba1: return "ocba1";
        case PolicyKind::Ocba2: return "ocba2";
        case PolicyKind::Ocba1Um: return "ocba1-um";
        case PolicyKind::Ocba2Um: return "ocba2-um";
        case PolicyKind::EpsGreedy: return "eps-greedy";
        case PolicyKind::Ucb1Normal: return "ucb1-normal";
    }
    return "unknown";
}

inline PolicyKind parse_kind(const std::string& name) {
    if (name == "ocba1") return PolicyKind::Ocba1;
    if (name == "ocba2") return PolicyKind::Ocba2;
    if (name == "ocba1-um") return PolicyKind::Ocba1Um;
    if (name == "ocba2-um") return PolicyKind::Ocba2Um;
    if (name == "eps-greedy") return PolicyKind::EpsGreedy;
    if (name == "ucb1-normal") return PolicyKind::Ucb1Normal;
    throw std::invalid_argument("unknown policy kind '" + name + "'");
}

// Which rule produced a decision.
enum class Branch { Balance, Rate, Exploit, Explore, Uniform, Forced };

struct StepDecision {
    std::size_t design = 0;
    Branch branch = Branch::Rate;
    int batch = 1;
};

namespace detail {

inline std::vector<double> sample_means(const AllocationState& state) {
    std::vector<double> means(state.k());
    for (std::size_t i = 0; i < state.k(); ++i) {
        means[i] = state.mean(i);
    }
    return means;
}

// Plug-in closed-form allocation at the current sample means. Gaps are
// clamped below by gap_floor so finite-precision ties cannot divide by zero.
inline std::vector<double> plugin_allocation(std::span<const double> means,
                                             std::span<const double> sigma, std::size_t bhat,
                                             double gap_floor) {
    const std::size_t k = means.size();
    std::vector<double> beta(k, 0.0);
    double sum_fourth = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        if (j == bhat) continue;
        const double gap = std::max(means[bhat] - means[j], gap_floor);
        beta[j] = sigma[j] * sigma[j] / (gap * gap);
        sum_fourth += sigma[j] * sigma[j] / (gap * gap * gap * gap);
    }
    beta[bhat] = sigma[bhat] * std::sqrt(sum_fourth);
    double total = 0.0;
    for (double b : beta) total += b;
    for (double& b : beta) b /= total;
    return beta;
}

}  // namespace detail

/// Sample the design with the largest deficit against the plug-in target
/// counts alpha_hat * (1 + total). Ties resolve to the lowest index.
inline StepDecision ocba1_step(const AllocationState& state, std::span<const double> sigma,
                               int delta, double gap_floor = 1e-12) {
    const auto means = detail::sample_means(state);
    const std::size_t bhat = estimated_best(state);
    const auto alpha = detail::plugin_allocation(means, sigma, bhat, gap_floor);
    const double target_total = 1.0 + static_cast<double>(state.total);
    std::size_t pick = 0;
    double best_deficit = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < state.k(); ++i) {
        const double deficit = alpha[i] * target_total - static_cast<double>(state.counts[i]);
        if (deficit > best_deficit) {
            best_deficit = deficit;
            pick = i;
        }
    }
    return StepDecision{pick, Branch::Rate, delta};
}

/// Sample the estimated best while its squared count-to-sigma ratio trails
/// the non-best sum; otherwise sample the non-best design with the smallest
/// pairwise rate.
inline StepDecision ocba2_step(const AllocationState& state, std::span<const double> sigma,
                               int delta = 1) {
    const auto means = detail::sample_means(state);
    const std::size_t bhat = estimated_best(state);
    const double nb = static_cast<double>(state.counts[bhat]);
    double balance = nb * nb / (sigma[bhat] * sigma[bhat]);
    for (std::size_t i = 0; i < state.k(); ++i) {
        if (i == bhat) continue;
        const double ni = static_cast<double>(state.counts[i]);
        balance -= ni * ni / (sigma[i] * sigma[i]);
    }
    if (balance < 0.0) {
        return StepDecision{bhat, Branch::Balance, delta};
    }
    std::size_t pick = 0;
    double min_rate = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < state.k(); ++i) {
        if (i == bhat) continue;
        const double gap = means[bhat] - means[i];
        const double rate = gap * gap / (sigma[i] * sigma[i] / static_cast<double>(state.counts[i]) +
                                         sigma[bhat] * sigma[bhat] / nb);
        if (rate < min_rate) {
            min_rate = rate;
            pick = i;
        }
    }
    return StepDecision{pick, Branch::Rate, delta};
}

/// Exploration probability min(h_t / t, 1). h_t re-weights the estimated
/// gap-over-KL sum by the current non-best sample distribution; estimated KL
/// values are floored at 1e-9 and estimated gaps at gap_floor.
inline double exploration_prob(const AllocationState& state, std::span<const double> sigma,
                               double gap_floor = 1e-12) {
    constexpr double kKlFloor = 1e-9;
    if (state.t < 1) {
        throw std::invalid_argument("exploration_prob: iteration index must be >= 1");
    }
    const auto means = detail::sample_means(state);
    const std::size_t bhat = estimated_best(state);
    double gap_over_kl = 0.0;
    double count_sum = 0.0;
    double weighted_count_sum = 0.0;
    for (std::size_t i = 0; i < state.k(); ++i) {
        if (i == bhat) continue;
        const double gap = std::max(means[bhat] - means[i], gap_floor);
        const double kl = std::max(
            theory::gaussian_kl(means[i], sigma[i], means[bhat], sigma[bhat]), kKlFloor);
        gap_over_kl += gap / kl;
        count_sum += static_cast<double>(state.counts[i]);
        weighted_count_sum += gap * static_cast<double>(state.counts[i]);
    }
    const double h = gap_over_kl * count_sum / weighted_count_sum;
    return std::min(h / static_cast<double>(state.t), 1.0);
}

/// With probability eps_t run the deficit rule, otherwise exploit the
/// estimated best. Batch is always 1.
inline StepDecision ocba1um_step(const AllocationState& state, std::span<const double> sigma,
                                 double uniform_draw, double gap_floor = 1e-12) {
    const double eps = exploration_prob(state, sigma, gap_floor);
    if (uniform_draw <= eps) {
        StepDecision d = ocba1_step(state, sigma, 1, gap_floor);
        d.branch = Branch::Explore;
        return d;
    }
    return StepDecision{estimated_best(state), Branch::Exploit, 1};
}

/// With probability eps_t run the balance/rate rule (the inner branch tag is
/// kept), otherwise exploit the estimated best. Batch is always 1.
inline StepDecision ocba2um_step(const AllocationState& state, std::span<const double> sigma,
                                 double uniform_draw, double gap_floor = 1e-12) {
    const double eps = exploration_prob(state, sigma, gap_floor);
    if (uniform_draw <= eps) {
        return ocba2_step(state, sigma, 1);
    }
    return StepDecision{estimated_best(state), Branch::Exploit, 1};
}

/// With probability eps_t sample a uniformly chosen design, otherwise exploit
/// the estimated best.
inline StepDecision eps_greedy_step(const AllocationState& state, std::span<const double> sigma,
                                    double uniform_draw, double uniform_design_draw,
                                    double gap_floor = 1e-12) {
    const double eps = exploration_prob(state, sigma, gap_floor);
    if (uniform_draw <= eps) {
        const auto k = static_cast<double>(state.k());
        const auto design = std::min(static_cast<std::size_t>(uniform_design_draw * k),
                                     state.k() - 1);
        return StepDecision{design, Branch::Uniform, 1};
    }
    return StepDecision{estimated_best(state), Branch::Exploit, 1};
}

/// UCB1-Normal baseline: force any design sampled fewer than ceil(8 log t)
/// times (lowest index first), otherwise maximize the index
/// mean + sqrt(16 * sample_var * log(t-1) / n). The log factor is clamped at
/// 0 so the first two iterations fall back to the greedy choice.
inline StepDecision ucb1_normal_step(const AllocationState& state) {
    if (state.t < 1) {
        throw std::invalid_argument("ucb1_normal_step: iteration index must be >= 1");
    }
    const double t = static_cast<double>(state.t);
    const double forced_floor = std::ceil(8.0 * std::log(t));
    for (std::size_t i = 0; i < state.k(); ++i) {
        if (static_cast<double>(state.counts[i]) < forced_floor) {
            return StepDecision{i, Branch::Forced, 1};
        }
    }
    const double log_factor = std::max(std::log(t - 1.0), 0.0);
    std::size_t pick = 0;
    double best_index = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < state.k(); ++i) {
        const auto n = static_cast<double>(state.counts[i]);
        if (state.counts[i] < 2) {
            throw std::invalid_argument("ucb1_normal_step: needs at least 2 samples per design");
        }
        const double mean = state.mean(i);
        const double var = std::max((state.sum_squares[i] - n * mean * mean) / (n - 1.0), 0.0);
        const double index = mean + std::sqrt(16.0 * var * log_factor / n);
        if (index > best_index) {
            best_index = index;
            pick = i;
        }
    }
    return StepDecision{pick, Branch::Exploit, 1};
}

// Dispatcher bound to one instance's sigmas. Uniform draws are always taken
// in a fixed number per call (one for the -um variants, two for eps-greedy,
// none otherwise) so stream consumption is deterministic.
class Policy {
public:
    Policy(PolicyConfig cfg, const ProblemInstance& inst)
        : cfg_(cfg), sigma_(inst.sigma) {
        validate(cfg_);
    }

    const PolicyConfig& config() const { return cfg_; }

    StepDecision decide(const AllocationState& state, RandomStream& stream) const {
        switch (cfg_.kind) {
            case PolicyKind::Ocba1:
                return ocba1_step(state, sigma_, cfg_.delta, cfg_.gap_floor);
            case PolicyKind::Ocba2:
                return ocba2_step(state, sigma_, cfg_.delta);
            case PolicyKind::Ocba1Um: {
                const double u = stream.next_uniform();
                return ocba1um_step(state, sigma_, u, cfg_.gap_floor);
            }
            case PolicyKind::Ocba2Um: {
                const double u = stream.next_uniform();
                return ocba2um_step(state, sigma_, u, cfg_.gap_floor);
            }
            case PolicyKind::EpsGreedy: {
                const double u = stream.next_uniform();
                const double ud = stream.next_uniform();
                return eps_greedy_step(state, sigma_, u, ud, cfg_.gap_floor);
            }
            case PolicyKind::Ucb1Normal:
                return ucb1_normal_step(state);
        }
        throw std::logic_error("policy: unreachable kind");
    }

private:
    PolicyConfig cfg_;
    std::vector<double> sigma_;
};

}  // namespace ocba::policies
