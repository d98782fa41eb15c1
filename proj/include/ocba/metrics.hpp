// Per-replication trace recording and cross-replication aggregation of the
// false-selection rate, opportunity cost, cumulative regret, and allocation
// fractions, plus the rate transforms used to compare runs against theory.
#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocba/instance.hpp"
#include "ocba/state.hpp"

namespace ocba::metrics {

struct CheckpointSnapshot {
    std::int64_t total = 0;
    std::size_t estimated_best = 0;
    std::vector<std::int64_t> counts;
    double regret_sum = 0.0;  // sum over steps of (mu_best - mu_sampled) * batch
};

struct ReplicationTrace {
    std::vector<CheckpointSnapshot> snapshots;
};

/// Append a snapshot of `state`. Totals must be strictly increasing and the
/// regret sum non-decreasing across calls.
inline void record_checkpoint(ReplicationTrace& trace, const AllocationState& state,
                              double regret_sum) {
    if (!trace.snapshots.empty()) {
        const auto& last = trace.snapshots.back();
        if (state.total <= last.total) {
            throw std::logic_error("record_checkpoint: totals must be strictly increasing");
        }
        if (regret_sum < last.regret_sum) {
            throw std::logic_error("record_checkpoint: regret sum decreased");
        }
    }
    trace.snapshots.push_back(
        CheckpointSnapshot{state.total, estimated_best(state), state.counts, regret_sum});
}

// Cross-replication aggregates per checkpoint. Transforms that are undefined
// at a checkpoint (a zero metric inside a log) are stored as NaN and written
// as empty CSV cells.
struct MetricSeries {
    std::vector<std::int64_t> t;
    std::vector<double> pfs;
    std::vector<double> eoc;
    std::vector<double> cr;
    std::vector<std::vector<double>> alloc_mean;  // [checkpoint][design]
    std::size_t reps = 0;
    std::vector<double> pfs_rate;    // -(1/t) log pfs
    std::vector<double> eoc_rate;    // -(1/t) log eoc
    std::vector<double> cr_per_t;    // cr / t
    std::vector<double> cr_per_logt; // cr / log t
};

inline MetricSeries aggregate(std::span<const ReplicationTrace> traces,
                              const ProblemInstance& inst) {
    if (traces.empty()) {
        throw std::invalid_argument("aggregate: no traces");
    }
    const std::size_t n_checkpoints = traces.front().snapshots.size();
    for (const auto& trace : traces) {
        if (trace.snapshots.size() != n_checkpoints) {
            throw std::invalid_argument("aggregate: traces disagree on checkpoint grid");
        }
        for (std::size_t c = 0; c < n_checkpoints; ++c) {
            if (trace.snapshots[c].total != traces.front().snapshots[c].total) {
                throw std::invalid_argument("aggregate: traces disagree on checkpoint grid");
            }
        }
    }

    const auto reps = static_cast<double>(traces.size());
    MetricSeries series;
    series.reps = traces.size();
    for (std::size_t c = 0; c < n_checkpoints; ++c) {
        const std::int64_t total = traces.front().snapshots[c].total;
        double wrong = 0.0;
        double gap_sum = 0.0;
        double regret = 0.0;
        std::vector<double> alloc(inst.k(), 0.0);
        for (const auto& trace : traces) {
            const auto& snap = trace.snapshots[c];
            if (snap.estimated_best != inst.best) {
                wrong += 1.0;
                gap_sum += inst.gap(snap.estimated_best);
            }
            regret += snap.regret_sum;
            for (std::size_t i = 0; i < inst.k(); ++i) {
                alloc[i] += static_cast<double>(snap.counts[i]) / static_cast<double>(snap.total);
            }
        }
        for (double& a : alloc) a /= reps;
        const double pfs = wrong / reps;
        const double eoc = gap_sum / reps;
        const double cr = regret / reps;
        const double td = static_cast<double>(total);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        series.t.push_back(total);
        series.pfs.push_back(pfs);
        series.eoc.push_back(eoc);
        series.cr.push_back(cr);
        series.alloc_mean.push_back(std::move(alloc));
        series.pfs_rate.push_back(pfs > 0.0 ? -std::log(pfs) / td : nan);
        series.eoc_rate.push_back(eoc > 0.0 ? -std::log(eoc) / td : nan);
        series.cr_per_t.push_back(cr / td);
        series.cr_per_logt.push_back(total > 1 ? cr / std::log(td) : nan);
    }
    return series;
}

enum class MetricField { Pfs, Eoc, Cr };

/// Least-squares slope over checkpoints with t in [t_lo, t_hi]:
/// log(metric) against t for the exponentially decaying measures, metric
/// against log(t) for cumulative regret. Requires >= 3 usable points.
inline double slope_fit(const MetricSeries& series, MetricField field, std::int64_t t_lo,
                        std::int64_t t_hi) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int n = 0;
    for (std::size_t c = 0; c < series.t.size(); ++c) {
        if (series.t[c] < t_lo || series.t[c] > t_hi) continue;
        double x = 0.0, y = 0.0;
        const double td = static_cast<double>(series.t[c]);
        switch (field) {
            case MetricField::Pfs:
                if (!(series.pfs[c] > 0.0)) continue;
                x = td;
                y = std::log(series.pfs[c]);
                break;
            case MetricField::Eoc:
                if (!(series.eoc[c] > 0.0)) continue;
                x = td;
                y = std::log(series.eoc[c]);
                break;
            case MetricField::Cr:
                if (!std::isfinite(series.cr[c])) continue;
                x = std::log(td);
                y = series.cr[c];
                break;
        }
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 3) {
        throw std::invalid_argument("slope_fit: fewer than 3 finite points in window");
    }
    const double nd = static_cast<double>(n);
    return (nd * sxy - sx * sy) / (nd * sxx - sx * sx);
}

namespace detail {

inline void append_number(std::string& out, double v) {
    if (std::isnan(v)) {
        return;  // missing value -> empty cell
    }
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

}  // namespace detail

/// CSV columns: t, pfs, eoc, cr, pfs_rate, eoc_rate, cr_per_t, cr_per_logt,
/// alloc_mean_1..k. Missing transforms become empty cells. Numbers use the
/// shortest round-trip representation, so identical series give identical
/// bytes.
inline std::string to_csv(const MetricSeries& series) {
    std::string out = "t,pfs,eoc,cr,pfs_rate,eoc_rate,cr_per_t,cr_per_logt";
    const std::size_t k = series.alloc_mean.empty() ? 0 : series.alloc_mean.front().size();
    for (std::size_t i = 1; i <= k; ++i) {
        out += ",alloc_mean_" + std::to_string(i);
    }
    out += '\n';
    for (std::size_t c = 0; c < series.t.size(); ++c) {
        out += std::to_string(series.t[c]);
        for (double v : {series.pfs[c], series.eoc[c], series.cr[c], series.pfs_rate[c],
                         series.eoc_rate[c], series.cr_per_t[c], series.cr_per_logt[c]}) {
            out += ',';
            detail::append_number(out, v);
        }
        for (double v : series.alloc_mean[c]) {
            out += ',';
            detail::append_number(out, v);
        }
        out += '\n';
    }
    return out;
}

}  // namespace ocba::metrics
