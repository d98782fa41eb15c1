#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocba/instance.hpp"
#include "ocba/random.hpp"

namespace ocba {

// Per-design sampling bookkeeping shared by all policies. Means are stored as
// (count, sum) pairs so that state serialization and replay are exact.
// `sum_squares` is carried only for the UCB1-Normal baseline's variance term.
struct AllocationState {
    std::vector<std::int64_t> counts;
    std::vector<double> sums;
    std::vector<double> sum_squares;
    std::int64_t t = 0;      // policy iterations completed since initialization
    std::int64_t total = 0;  // invariant: equals the sum of counts

    std::size_t k() const { return counts.size(); }

    double mean(std::size_t i) const {
        if (counts.at(i) < 1) {
            throw std::logic_error("AllocationState::mean: design " + std::to_string(i) +
                                   " has no samples");
        }
        return sums[i] / static_cast<double>(counts[i]);
    }
};

inline double draw_sample(const ProblemInstance& inst, std::size_t design, RandomStream& stream) {
    if (design >= inst.k()) {
        throw std::out_of_range("draw_sample: design index out of range");
    }
    return stream.next_gaussian(inst.mu[design], inst.sigma[design]);
}

inline void observe(AllocationState& state, std::size_t design, double value) {
    state.counts.at(design) += 1;
    state.sums[design] += value;
    state.sum_squares[design] += value * value;
    state.total += 1;
}

/// Collect n0 samples per design, in design order. t starts at 0.
inline AllocationState init_state(const ProblemInstance& inst, int n0, RandomStream& stream) {
    if (n0 < 2) {
        throw std::invalid_argument("init_state: n0 must be at least 2");
    }
    AllocationState state;
    state.counts.assign(inst.k(), 0);
    state.sums.assign(inst.k(), 0.0);
    state.sum_squares.assign(inst.k(), 0.0);
    for (std::size_t i = 0; i < inst.k(); ++i) {
        for (int r = 0; r < n0; ++r) {
            observe(state, i, draw_sample(inst, i, stream));
        }
    }
    return state;
}

/// Design with the largest sample mean; ties resolve to the lowest index.
inline std::size_t estimated_best(const AllocationState& state) {
    std::size_t best = 0;
    double best_mean = state.mean(0);
    for (std::size_t i = 1; i < state.k(); ++i) {
        const double m = state.mean(i);
        if (m > best_mean) {
            best_mean = m;
            best = i;
        }
    }
    return best;
}

}  // namespace ocba
