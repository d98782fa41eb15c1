#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ocba {

// A selection problem: Gaussian designs with known standard deviations and a
// unique best mean. `best` is always derived from `mu`.
struct ProblemInstance {
    std::vector<double> mu;
    std::vector<double> sigma;
    std::size_t best = 0;

    std::size_t k() const { return mu.size(); }

    /// Mean gap of design i to the best design (0 for i == best).
    double gap(std::size_t i) const { return mu[best] - mu[i]; }
};

inline ProblemInstance make_instance(std::vector<double> mu, std::vector<double> sigma) {
    if (mu.size() != sigma.size()) {
        throw std::invalid_argument("make_instance: mu and sigma lengths differ");
    }
    if (mu.size() < 2) {
        throw std::invalid_argument("make_instance: need at least 2 designs");
    }
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (!std::isfinite(mu[i]) || !std::isfinite(sigma[i])) {
            throw std::invalid_argument("make_instance: non-finite parameter at design " +
                                        std::to_string(i));
        }
        if (sigma[i] <= 0.0) {
            throw std::invalid_argument("make_instance: sigma must be positive at design " +
                                        std::to_string(i));
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < mu.size(); ++i) {
        if (mu[i] > mu[best]) {
            best = i;
        }
    }
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (i != best && mu[i] == mu[best]) {
            throw std::invalid_argument("make_instance: tied maximum mean, best design not unique");
        }
    }
    return ProblemInstance{std::move(mu), std::move(sigma), best};
}

}  // namespace ocba
