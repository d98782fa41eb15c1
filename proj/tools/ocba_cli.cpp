// Command line front end: `run` executes a replicated experiment from a JSON
// config (flags override individual fields), `theory` prints the diagnostic
// constants for an instance, `list` names the built-in instances.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error. Errors are
// written to stderr as one line with the prefix "error: <code>:".

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ocba/harness.hpp"

namespace {

struct RunFlags {
    std::string config_path;
    std::string instance;
    std::vector<std::string> policies;
    std::int64_t budget = 0;
    int n0 = 0;
    int delta = 0;
    int reps = 0;
    std::uint64_t seed = 0;
    std::string out;
    int workers = -1;
};

int do_run(const RunFlags& flags, const CLI::App& cmd) {
    ocba::harness::ExperimentConfig config;
    if (!flags.config_path.empty()) {
        config = ocba::harness::load_config_file(flags.config_path);
    }
    if (cmd.count("--instance")) {
        config.instance_name = flags.instance;
        config.inline_instance.reset();
    }
    if (cmd.count("--policy")) {
        config.policies.clear();
        for (const auto& name : flags.policies) {
            ocba::policies::PolicyConfig pcfg;
            pcfg.kind = ocba::policies::parse_kind(name);
            config.policies.push_back(pcfg);
        }
    }
    if (cmd.count("--delta")) {
        for (auto& pcfg : config.policies) pcfg.delta = flags.delta;
    }
    if (cmd.count("--budget")) config.budget = flags.budget;
    if (cmd.count("--n0")) config.n0 = flags.n0;
    if (cmd.count("--reps")) config.replications = flags.reps;
    if (cmd.count("--seed")) config.master_seed = flags.seed;
    if (cmd.count("--out")) config.output_dir = flags.out;
    if (cmd.count("--workers")) config.workers = flags.workers;
    if (config.policies.empty()) {
        throw ocba::harness::ConfigError("no policies given (config file or --policy)");
    }

    const auto result = ocba::harness::run_experiment(config);
    for (const auto& run : result.runs) {
        std::cout << run.csv_path << "\n";
    }
    std::cout << result.theory_path << "\n" << result.manifest_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequential sampling policies for best-design selection"};
    app.require_subcommand(1);

    RunFlags flags;
    CLI::App* run = app.add_subcommand("run", "Run a replicated experiment");
    run->add_option("config", flags.config_path, "JSON config file");
    run->add_option("--instance", flags.instance, "Built-in instance name");
    run->add_option("--policy", flags.policies,
                    "Policy kind (repeatable): ocba1, ocba2, ocba1-um, ocba2-um, eps-greedy, "
                    "ucb1-normal");
    run->add_option("--budget", flags.budget, "Total sampling budget");
    run->add_option("--n0", flags.n0, "Initial samples per design");
    run->add_option("--delta", flags.delta, "Batch size per decision");
    run->add_option("--reps", flags.reps, "Number of replications");
    run->add_option("--seed", flags.seed, "Master seed");
    run->add_option("--out", flags.out, "Output directory");
    run->add_option("--workers", flags.workers, "Worker threads (0 = hardware)");

    std::string theory_instance;
    int theory_delta = 1;
    CLI::App* theory = app.add_subcommand("theory", "Print diagnostic constants as JSON");
    theory->add_option("--instance", theory_instance, "Built-in instance name")->required();
    theory->add_option("--delta", theory_delta, "Batch size used for the decay constants");

    CLI::App* list = app.add_subcommand("list", "List built-in instances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 1;
    }

    try {
        if (run->parsed()) {
            return do_run(flags, *run);
        }
        if (theory->parsed()) {
            const auto inst = ocba::harness::builtin_instance(theory_instance);
            const nlohmann::json j = ocba::theory::make_theory_report(inst, theory_delta);
            std::cout << j.dump(2) << "\n";
            return 0;
        }
        if (list->parsed()) {
            for (const auto& name : ocba::harness::builtin_instance_names()) {
                std::cout << name << "\n";
            }
            return 0;
        }
    } catch (const ocba::harness::ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: runtime: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
