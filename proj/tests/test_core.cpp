#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ocba/instance.hpp"
#include "ocba/random.hpp"
#include "ocba/state.hpp"

using namespace ocba;

namespace {

std::vector<double> iota(double from, double to, double step) {
    std::vector<double> v;
    for (double x = from; step > 0 ? x <= to : x >= to; x += step) v.push_back(x);
    return v;
}

}  // namespace

TEST_CASE("make_instance derives the best design from the means") {
    const auto inc = make_instance(iota(1, 10, 1), iota(1, 10, 1));
    CHECK(inc.best == 9);
    const auto dec = make_instance(iota(1, 10, 1), iota(10, 1, -1));
    CHECK(dec.best == 9);
    const auto two = make_instance({0.0, 1.0}, {1.0, 1.0});
    CHECK(two.best == 1);
    CHECK(two.gap(0) == 1.0);
}

TEST_CASE("make_instance rejects malformed problems") {
    CHECK_THROWS_AS(make_instance({0.0, 1.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(make_instance({0.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(make_instance({0.0, 1.0}, {1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(make_instance({0.0, 1.0}, {1.0, -2.0}), std::invalid_argument);
    CHECK_THROWS_AS(make_instance({1.0, 1.0}, {1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(make_instance({1.0, 2.0, 2.0}, {1.0, 1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("draw_sample validates the design index and replays exactly") {
    const auto inst = make_instance({0.0, 1.0}, {1.0, 2.0});
    RandomStream s(SeedSpec{5, 0});
    CHECK_THROWS_AS(draw_sample(inst, 2, s), std::out_of_range);

    RandomStream a(SeedSpec{5, 1});
    RandomStream b(SeedSpec{5, 1});
    for (int i = 0; i < 100; ++i) {
        REQUIRE(draw_sample(inst, i % 2, a) == draw_sample(inst, i % 2, b));
    }
}

TEST_CASE("init_state fills n0 samples per design") {
    const auto inst = make_instance(iota(1, 10, 1), iota(1, 10, 1));
    RandomStream s(SeedSpec{11, 0});
    const auto state = init_state(inst, 5, s);
    CHECK(state.total == 50);
    CHECK(state.t == 0);
    for (std::size_t i = 0; i < inst.k(); ++i) {
        CHECK(state.counts[i] == 5);
    }

    const auto small = make_instance({0.0, 1.0}, {1.0, 1.0});
    RandomStream s2(SeedSpec{11, 0});
    const auto st2 = init_state(small, 2, s2);
    CHECK(st2.total == 4);
    CHECK(std::isfinite(st2.mean(0)));
    CHECK(std::isfinite(st2.mean(1)));

    RandomStream s3(SeedSpec{11, 1});
    RandomStream s4(SeedSpec{11, 1});
    const auto a = init_state(inst, 5, s3);
    const auto b = init_state(inst, 5, s4);
    CHECK(a.sums == b.sums);

    RandomStream s5(SeedSpec{11, 0});
    CHECK_THROWS_AS(init_state(inst, 1, s5), std::invalid_argument);
}

TEST_CASE("estimated_best takes the largest sample mean, lowest index on ties") {
    AllocationState st;
    st.counts = {10, 10, 10};
    st.sums = {1.0, 9.0, 5.0};
    st.sum_squares = {0.0, 0.0, 0.0};
    st.total = 30;
    CHECK(estimated_best(st) == 1);

    st.counts = {2, 2};
    st.sums = {1.0, 1.0};
    st.sum_squares = {0, 0};
    st.total = 4;
    CHECK(estimated_best(st) == 0);

    st.counts = {0, 2};
    CHECK_THROWS_AS(estimated_best(st), std::logic_error);
}

TEST_CASE("observe conserves the count/total bookkeeping") {
    const auto inst = make_instance(iota(1, 5, 1), {1, 1, 1, 1, 1});
    RandomStream s(SeedSpec{3, 0});
    auto state = init_state(inst, 2, s);
    RandomStream picks(SeedSpec{4, 0});
    for (int step = 0; step < 2000; ++step) {
        const auto design = static_cast<std::size_t>(picks.next_uniform() * inst.k());
        const auto before = state.counts;
        const auto total_before = state.total;
        observe(state, design, draw_sample(inst, design, s));
        REQUIRE(state.total == total_before + 1);
        std::int64_t sum = 0;
        for (std::size_t i = 0; i < inst.k(); ++i) {
            sum += state.counts[i];
            if (i != design) REQUIRE(state.counts[i] == before[i]);
        }
        REQUIRE(state.counts[design] == before[design] + 1);
        REQUIRE(sum == state.total);
    }
}

TEST_CASE("round-robin sample means converge to the true means") {
    const auto inst = make_instance({1.0, 2.0, 3.0}, {0.5, 2.0, 7.0});
    RandomStream s(SeedSpec{21, 0});
    auto state = init_state(inst, 2, s);
    const int per_design = 100000;
    for (int r = 0; r < per_design - 2; ++r) {
        for (std::size_t i = 0; i < inst.k(); ++i) {
            observe(state, i, draw_sample(inst, i, s));
        }
    }
    for (std::size_t i = 0; i < inst.k(); ++i) {
        CHECK(std::fabs(state.mean(i) - inst.mu[i]) <
              5.0 * inst.sigma[i] / std::sqrt(static_cast<double>(per_design)));
    }
}
