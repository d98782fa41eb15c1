#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ocba/instance.hpp"
#include "ocba/metrics.hpp"

using namespace ocba;
using namespace ocba::metrics;

namespace {

AllocationState state_at(std::vector<std::int64_t> counts, std::vector<double> means) {
    AllocationState st;
    st.counts = std::move(counts);
    st.sums.resize(st.counts.size());
    st.sum_squares.assign(st.counts.size(), 0.0);
    for (std::size_t i = 0; i < st.counts.size(); ++i) {
        st.sums[i] = means[i] * static_cast<double>(st.counts[i]);
        st.total += st.counts[i];
    }
    return st;
}

// Trace with one snapshot per grid point, fixed winner and regret.
ReplicationTrace synthetic_trace(const std::vector<std::int64_t>& grid, std::size_t winner,
                                 double regret_step) {
    ReplicationTrace trace;
    double regret = 0.0;
    for (std::int64_t g : grid) {
        CheckpointSnapshot snap;
        snap.total = g;
        snap.estimated_best = winner;
        snap.counts = {g / 2, g - g / 2};
        regret += regret_step;
        snap.regret_sum = regret;
        trace.snapshots.push_back(snap);
    }
    return trace;
}

}  // namespace

TEST_CASE("record_checkpoint: regret accounting example") {
    const auto inst = make_instance({0.0, 1.0}, {1.0, 1.0});
    ReplicationTrace trace;

    auto st = state_at({4, 4}, {0.0, 1.0});
    record_checkpoint(trace, st, 0.0);  // sampling only the best: zero regret
    CHECK(trace.snapshots.back().regret_sum == 0.0);
    CHECK(trace.snapshots.back().estimated_best == 1);

    // one step of batch 3 on design 0 adds gap * batch
    auto st2 = state_at({7, 4}, {0.0, 1.0});
    record_checkpoint(trace, st2, inst.gap(0) * 3);
    CHECK(trace.snapshots.back().regret_sum == 3.0);

    // 100 alternating steps on a two-design problem: half hit the non-best
    double regret = 0.0;
    auto st3 = st2;
    for (int s = 0; s < 100; ++s) {
        const std::size_t design = s % 2;
        observe(st3, design, inst.mu[design]);
        regret += inst.gap(design);
    }
    record_checkpoint(trace, st3, trace.snapshots.back().regret_sum + regret);
    CHECK(regret == 50.0);
}

TEST_CASE("record_checkpoint rejects out-of-order snapshots") {
    ReplicationTrace trace;
    auto st = state_at({5, 5}, {0.0, 1.0});
    record_checkpoint(trace, st, 1.0);
    CHECK_THROWS_AS(record_checkpoint(trace, st, 2.0), std::logic_error);  // same total
    auto st2 = state_at({6, 5}, {0.0, 1.0});
    CHECK_THROWS_AS(record_checkpoint(trace, st2, 0.5), std::logic_error);  // regret drop
    record_checkpoint(trace, st2, 1.5);
    CHECK(trace.snapshots.size() == 2);
}

TEST_CASE("aggregate counts false selections and averages the rest") {
    const auto inst = make_instance({0.0, 2.0}, {1.0, 1.0});
    const std::vector<std::int64_t> grid{10, 20};

    std::vector<ReplicationTrace> traces;
    for (int r = 0; r < 500; ++r) {
        traces.push_back(synthetic_trace(grid, r < 50 ? 0 : 1, r < 50 ? 2.0 : 0.0));
    }
    const auto series = aggregate(traces, inst);
    CHECK(series.reps == 500);
    CHECK(series.pfs[0] == doctest::Approx(0.1));
    CHECK(series.eoc[0] == doctest::Approx(0.2));  // 10% wrong with gap 2
    CHECK(series.cr[1] == doctest::Approx(0.1 * 4.0));
    CHECK(series.pfs_rate[0] == doctest::Approx(-std::log(0.1) / 10.0));

    // all-correct checkpoint: transforms for pfs/eoc go missing
    std::vector<ReplicationTrace> perfect{synthetic_trace(grid, 1, 0.0)};
    const auto clean = aggregate(perfect, inst);
    CHECK(clean.pfs[0] == 0.0);
    CHECK(clean.eoc[0] == 0.0);
    CHECK(std::isnan(clean.pfs_rate[0]));
    CHECK(std::isnan(clean.eoc_rate[0]));

    // single wrong replication: pfs is the indicator
    std::vector<ReplicationTrace> one{synthetic_trace(grid, 0, 1.0)};
    const auto single = aggregate(one, inst);
    CHECK(single.pfs[0] == 1.0);
    CHECK(single.eoc[0] == doctest::Approx(2.0));
}

TEST_CASE("aggregate rejects mismatched grids") {
    const auto inst = make_instance({0.0, 2.0}, {1.0, 1.0});
    std::vector<ReplicationTrace> traces{synthetic_trace({10, 20}, 1, 0.0),
                                         synthetic_trace({10, 30}, 1, 0.0)};
    CHECK_THROWS_AS(aggregate(traces, inst), std::invalid_argument);
    std::vector<ReplicationTrace> short_one{synthetic_trace({10, 20}, 1, 0.0),
                                            synthetic_trace({10}, 1, 0.0)};
    CHECK_THROWS_AS(aggregate(short_one, inst), std::invalid_argument);
}

TEST_CASE("slope_fit recovers exact exponential and logarithmic series") {
    MetricSeries series;
    for (std::int64_t t = 10; t <= 200; t += 10) {
        const double td = static_cast<double>(t);
        series.t.push_back(t);
        series.pfs.push_back(std::exp(-0.3 * td));
        series.eoc.push_back(1.0);
        series.cr.push_back(4.0 * std::log(td));
        series.alloc_mean.push_back({1.0});
        series.pfs_rate.push_back(0.3);
        series.eoc_rate.push_back(0.0);
        series.cr_per_t.push_back(series.cr.back() / td);
        series.cr_per_logt.push_back(4.0);
    }
    CHECK(slope_fit(series, MetricField::Pfs, 10, 200) == doctest::Approx(-0.3).epsilon(1e-9));
    CHECK(slope_fit(series, MetricField::Eoc, 10, 200) == doctest::Approx(0.0));
    CHECK(slope_fit(series, MetricField::Cr, 10, 200) == doctest::Approx(4.0).epsilon(1e-9));
    // a window with fewer than 3 usable points is an error
    CHECK_THROWS_AS(slope_fit(series, MetricField::Pfs, 10, 25), std::invalid_argument);
}

TEST_CASE("slope_fit skips zero-valued checkpoints") {
    MetricSeries series;
    for (std::int64_t t = 10; t <= 100; t += 10) {
        series.t.push_back(t);
        series.pfs.push_back(t <= 30 ? std::exp(-0.1 * t) : 0.0);
        series.eoc.push_back(0.0);
        series.cr.push_back(0.0);
        series.alloc_mean.push_back({1.0});
        series.pfs_rate.push_back(0.0);
        series.eoc_rate.push_back(0.0);
        series.cr_per_t.push_back(0.0);
        series.cr_per_logt.push_back(0.0);
    }
    CHECK(slope_fit(series, MetricField::Pfs, 10, 100) == doctest::Approx(-0.1).epsilon(1e-9));
    CHECK_THROWS_AS(slope_fit(series, MetricField::Eoc, 10, 100), std::invalid_argument);
}

TEST_CASE("csv output: fixed header, empty cells for missing transforms") {
    const auto inst = make_instance({0.0, 2.0}, {1.0, 1.0});
    std::vector<ReplicationTrace> traces{synthetic_trace({10, 20}, 1, 0.0)};
    const auto series = aggregate(traces, inst);
    const std::string csv = to_csv(series);
    CHECK(csv.rfind("t,pfs,eoc,cr,pfs_rate,eoc_rate,cr_per_t,cr_per_logt,alloc_mean_1,"
                    "alloc_mean_2\n", 0) == 0);
    // pfs = 0 -> pfs_rate cell is empty
    CHECK(csv.find("\n10,0,0,0,,,0,0,") != std::string::npos);
    CHECK(to_csv(series) == csv);
}

TEST_CASE("cumulative regret is monotone across checkpoints") {
    const auto inst = make_instance({0.0, 2.0}, {1.0, 1.0});
    std::vector<ReplicationTrace> traces;
    for (int r = 0; r < 20; ++r) {
        traces.push_back(synthetic_trace({10, 20, 40, 80}, 1, 0.25 * r));
    }
    const auto series = aggregate(traces, inst);
    for (std::size_t c = 1; c < series.cr.size(); ++c) {
        CHECK(series.cr[c] >= series.cr[c - 1]);
    }
}
