// Experiment orchestration: built-in instances, policy-by-budget sweeps with
// per-replication seeding, parallel execution, and file outputs. Outputs are
// a pure function of the configuration: replication r always runs on the
// stream derived from (master_seed, r) and aggregation folds traces in
// replication order, so serial and parallel runs give identical bytes.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ocba/instance.hpp"
#include "ocba/metrics.hpp"
#include "ocba/policies.hpp"
#include "ocba/random.hpp"
#include "ocba/state.hpp"
#include "ocba/theory.hpp"

#ifndef OCBA_GIT_DESCRIBE
#define OCBA_GIT_DESCRIBE "unknown"
#endif

namespace ocba::harness {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline ProblemInstance builtin_instance(const std::string& name) {
    if (name == "instance1") {
        std::vector<double> mu, sigma;
        for (int i = 1; i <= 10; ++i) {
            mu.push_back(i);
            sigma.push_back(i);
        }
        return make_instance(std::move(mu), std::move(sigma));
    }
    if (name == "instance2") {
        std::vector<double> mu, sigma;
        for (int i = 1; i <= 10; ++i) {
            mu.push_back(i);
            sigma.push_back(11 - i);
        }
        return make_instance(std::move(mu), std::move(sigma));
    }
    throw ConfigError("unknown instance '" + name + "'");
}

inline std::vector<std::string> builtin_instance_names() {
    return {"instance1", "instance2"};
}

struct CheckpointSpec {
    std::vector<std::int64_t> explicit_grid;  // used verbatim when non-empty
    int count = 50;
    std::int64_t min = 0;  // 0 -> 10 * k
};

struct ExperimentConfig {
    std::string instance_name = "instance1";
    std::optional<ProblemInstance> inline_instance;
    std::vector<policies::PolicyConfig> policies;
    std::int64_t budget = 0;  // 0 -> instance default (20000 / 2000)
    int n0 = 5;
    int replications = 500;
    std::uint64_t master_seed = 1;
    CheckpointSpec checkpoints;
    std::string output_dir = "out";
    int workers = 0;  // 0 -> hardware concurrency
};

inline ProblemInstance resolve_instance(const ExperimentConfig& config) {
    if (config.inline_instance) {
        return *config.inline_instance;
    }
    return builtin_instance(config.instance_name);
}

inline std::int64_t resolve_budget(const ExperimentConfig& config) {
    if (config.budget > 0) return config.budget;
    return config.instance_name == "instance2" ? 2000 : 20000;
}

inline void validate(const ExperimentConfig& config, const ProblemInstance& inst) {
    const std::int64_t budget = resolve_budget(config);
    if (config.n0 < 2) throw ConfigError("n0 must be at least 2");
    if (budget <= config.n0 * static_cast<std::int64_t>(inst.k())) {
        throw ConfigError("budget must exceed n0 * k");
    }
    if (config.replications < 1) throw ConfigError("replications must be at least 1");
    if (config.policies.empty()) throw ConfigError("at least one policy is required");
    for (const auto& p : config.policies) {
        try {
            policies::validate(p);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        for (const auto& q : config.policies) {
            if (&p != &q && p.kind == q.kind && p.delta == q.delta) {
                throw ConfigError(std::string("duplicate policy entry '") +
                                  policies::kind_name(p.kind) + "' with equal delta");
            }
        }
    }
    if (config.checkpoints.count < 1) throw ConfigError("checkpoints.count must be at least 1");
    if (config.workers < 0) throw ConfigError("workers must be non-negative");
}

/// Log-spaced checkpoint totals, snapped onto the totals a run with this
/// batch size actually visits (n0*k + m*delta) and deduplicated.
inline std::vector<std::int64_t> checkpoint_grid(const CheckpointSpec& spec, std::size_t k,
                                                 int n0, std::int64_t budget, int delta) {
    const std::int64_t start_total = static_cast<std::int64_t>(k) * n0;
    std::vector<std::int64_t> raw;
    if (!spec.explicit_grid.empty()) {
        raw = spec.explicit_grid;
    } else {
        const double lo =
            static_cast<double>(std::max<std::int64_t>(spec.min > 0 ? spec.min : 10 * k,
                                                       start_total + 1));
        const double hi = static_cast<double>(budget);
        const int count = spec.count;
        for (int i = 0; i < count; ++i) {
            const double f = count == 1 ? 1.0 : static_cast<double>(i) / (count - 1);
            raw.push_back(static_cast<std::int64_t>(
                std::llround(lo * std::exp(f * (std::log(hi) - std::log(lo))))));
        }
    }
    std::vector<std::int64_t> grid;
    for (std::int64_t g : raw) {
        if (g > budget + delta - 1) {
            throw ConfigError("checkpoint beyond reachable budget");
        }
        std::int64_t snapped = g;
        if (g > start_total) {
            const std::int64_t steps = (g - start_total + delta - 1) / delta;
            snapped = start_total + steps * delta;
        } else {
            snapped = start_total;
        }
        if (grid.empty() || snapped > grid.back()) {
            grid.push_back(snapped);
        } else if (snapped < grid.back()) {
            throw ConfigError("checkpoint grid must be ascending");
        }
    }
    return grid;
}

inline metrics::ReplicationTrace run_replication(const ProblemInstance& inst,
                                                 const policies::Policy& policy,
                                                 std::int64_t budget, int n0, SeedSpec seed,
                                                 std::span<const std::int64_t> grid) {
    RandomStream stream(seed);
    AllocationState state = init_state(inst, n0, stream);
    metrics::ReplicationTrace trace;
    double regret = 0.0;
    std::size_t next = 0;
    while (next < grid.size() && grid[next] <= state.total) {
        metrics::record_checkpoint(trace, state, regret);
        ++next;
    }
    while (state.total < budget) {
        state.t += 1;
        const policies::StepDecision d = policy.decide(state, stream);
        for (int j = 0; j < d.batch; ++j) {
            observe(state, d.design, draw_sample(inst, d.design, stream));
        }
        regret += inst.gap(d.design) * d.batch;
        while (next < grid.size() && state.total >= grid[next]) {
            metrics::record_checkpoint(trace, state, regret);
            ++next;
        }
    }
    return trace;
}

/// Run all replications of one policy and aggregate. Replications execute on
/// up to `workers` threads; results land in per-replication slots and are
/// reduced in index order.
inline metrics::MetricSeries run_policy(const ProblemInstance& inst,
                                        const policies::PolicyConfig& cfg, std::int64_t budget,
                                        int n0, int replications, std::uint64_t master_seed,
                                        std::span<const std::int64_t> grid, int workers = 0) {
    const policies::Policy policy(cfg, inst);
    std::vector<metrics::ReplicationTrace> traces(replications);

    int n_workers = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
    n_workers = std::max(1, std::min(n_workers, replications));

    std::atomic<int> next_rep{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto body = [&]() {
        try {
            for (int r = next_rep.fetch_add(1); r < replications; r = next_rep.fetch_add(1)) {
                traces[r] = run_replication(
                    inst, policy, budget, n0,
                    SeedSpec{master_seed, static_cast<std::uint64_t>(r)}, grid);
            }
        } catch (...) {
            const std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };
    if (n_workers == 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(body);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    return metrics::aggregate(traces, inst);
}

inline nlohmann::json config_to_json(const ExperimentConfig& config) {
    nlohmann::json j;
    if (config.inline_instance) {
        j["instance"] = {{"name", config.instance_name},
                         {"mu", config.inline_instance->mu},
                         {"sigma", config.inline_instance->sigma}};
    } else {
        j["instance"] = config.instance_name;
    }
    j["policies"] = nlohmann::json::array();
    for (const auto& p : config.policies) {
        j["policies"].push_back({{"kind", policies::kind_name(p.kind)},
                                 {"delta", p.delta},
                                 {"gap_floor", p.gap_floor}});
    }
    j["budget"] = resolve_budget(config);
    j["n0"] = config.n0;
    j["replications"] = config.replications;
    j["master_seed"] = config.master_seed;
    if (!config.checkpoints.explicit_grid.empty()) {
        j["checkpoints"] = config.checkpoints.explicit_grid;
    } else {
        j["checkpoints"] = {{"count", config.checkpoints.count}, {"min", config.checkpoints.min}};
    }
    j["output_dir"] = config.output_dir;
    j["workers"] = config.workers;
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig config;
    try {
        if (j.contains("instance")) {
            const auto& inst = j.at("instance");
            if (inst.is_string()) {
                config.instance_name = inst.get<std::string>();
            } else {
                config.instance_name = inst.value("name", "custom");
                config.inline_instance = make_instance(
                    inst.at("mu").get<std::vector<double>>(),
                    inst.at("sigma").get<std::vector<double>>());
            }
        }
        if (j.contains("policies")) {
            for (const auto& p : j.at("policies")) {
                policies::PolicyConfig cfg;
                cfg.kind = policies::parse_kind(p.at("kind").get<std::string>());
                cfg.delta = p.value("delta", 1);
                cfg.gap_floor = p.value("gap_floor", 1e-12);
                config.policies.push_back(cfg);
            }
        }
        config.budget = j.value("budget", std::int64_t{0});
        config.n0 = j.value("n0", 5);
        config.replications = j.value("replications", 500);
        config.master_seed = j.value("master_seed", std::uint64_t{1});
        if (j.contains("checkpoints")) {
            const auto& c = j.at("checkpoints");
            if (c.is_array()) {
                config.checkpoints.explicit_grid = c.get<std::vector<std::int64_t>>();
            } else {
                config.checkpoints.count = c.value("count", 50);
                config.checkpoints.min = c.value("min", std::int64_t{0});
            }
        }
        config.output_dir = j.value("output_dir", "out");
        config.workers = j.value("workers", 0);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return config;
}

inline ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid config JSON: ") + e.what());
    }
    return config_from_json(j);
}

namespace detail {

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

inline std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write output file '" + path.string() + "'");
    }
    out << contents;
}

}  // namespace detail

struct PolicyRun {
    policies::PolicyConfig config;
    metrics::MetricSeries series;
    std::string csv_path;
};

struct ExperimentResult {
    ProblemInstance instance;
    theory::TheoryReport theory;
    std::vector<PolicyRun> runs;
    std::string manifest_path;
    std::string theory_path;
};

inline ExperimentResult run_experiment(const ExperimentConfig& config) {
    const ProblemInstance inst = resolve_instance(config);
    validate(config, inst);
    const std::int64_t budget = resolve_budget(config);

    namespace fs = std::filesystem;
    const fs::path out_dir(config.output_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw std::runtime_error("cannot create output directory '" + out_dir.string() + "'");
    }

    ExperimentResult result;
    result.instance = inst;
    result.theory = theory::make_theory_report(inst);

    const nlohmann::json theory_json = result.theory;
    const fs::path theory_path = out_dir / (config.instance_name + "_theory.json");
    detail::write_file(theory_path, theory_json.dump(2) + "\n");
    result.theory_path = theory_path.string();

    std::vector<std::string> output_files{theory_path.filename().string()};
    for (const auto& pcfg : config.policies) {
        const auto grid =
            checkpoint_grid(config.checkpoints, inst.k(), config.n0, budget, pcfg.delta);
        metrics::MetricSeries series =
            run_policy(inst, pcfg, budget, config.n0, config.replications, config.master_seed,
                       grid, config.workers);
        const std::string filename = config.instance_name + "_" +
                                     policies::kind_name(pcfg.kind) + "_d" +
                                     std::to_string(pcfg.delta) + ".csv";
        const fs::path csv_path = out_dir / filename;
        detail::write_file(csv_path, metrics::to_csv(series));
        output_files.push_back(filename);
        result.runs.push_back(PolicyRun{pcfg, std::move(series), csv_path.string()});
    }

    const nlohmann::json config_echo = config_to_json(config);
    nlohmann::json manifest{{"config", config_echo},
                            {"config_hash", detail::hex64(detail::fnv1a64(config_echo.dump()))},
                            {"master_seed", config.master_seed},
                            {"git_describe", OCBA_GIT_DESCRIBE},
                            {"timestamp", detail::utc_timestamp()},
                            {"outputs", output_files}};
    const fs::path manifest_path = out_dir / "manifest.json";
    detail::write_file(manifest_path, manifest.dump(2) + "\n");
    result.manifest_path = manifest_path.string();
    return result;
}

}  // namespace ocba::harness
