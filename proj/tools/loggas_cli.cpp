/**
 * @brief Command-line front end for the log-gas laboratory.
 *
 * Subcommands: sample, simulate, analyze, palm, version.
 * Every run is fully determined by the config file (plus --seed
 * override) and the tool version; see experiment.hpp for the seed
 * splitting and determinism contract.
 *
 * Exit codes: 0 success, 2 config error, 3 runtime/numerical error,
 * 4 I/O error.
 */
#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>
#include <loggas/experiment.hpp>

namespace {

struct CommonArgs {
    std::string config_path;
    std::string output_dir;
    unsigned threads = 1;
    std::uint64_t seed_override = 0;
    bool has_seed_override = false;
    bool dry_run = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config) {
    auto* config = cmd->add_option("--config", args.config_path,
                                   "Experiment config JSON");
    if (needs_config) config->required();
    cmd->add_option("--output", args.output_dir,
                    "Output directory (overrides config output_dir)");
    cmd->add_option("--threads", args.threads, "Worker threads")
        ->check(CLI::PositiveNumber);
    cmd->add_option_function<std::uint64_t>(
        "--seed",
        [&args](std::uint64_t s) {
            args.seed_override = s;
            args.has_seed_override = true;
        },
        "Base seed (overrides config seed)");
    cmd->add_flag("--dry-run", args.dry_run,
                  "Print the resolved config and write nothing");
}

loggas::ExperimentConfig resolve(const CommonArgs& args) {
    loggas::ExperimentConfig config =
        loggas::ExperimentConfig::load(args.config_path);
    if (args.has_seed_override) config.seed = args.seed_override;
    if (!args.output_dir.empty()) config.output_dir = args.output_dir;
    if (config.output_dir.empty())
        throw loggas::ConfigError(
            "no output directory: set config output_dir or pass --output");
    return config;
}

/// Shared by all data-producing subcommands: resolve, honor --dry-run,
/// then run the driver.
template <typename Driver>
int run(const CommonArgs& args, Driver&& driver) {
    const loggas::ExperimentConfig config = resolve(args);
    if (args.dry_run) {
        loggas::io::json j = config.to_json();
        j["output_dir"] = config.output_dir;
        std::printf("%s\n", j.dump(2).c_str());
        return 0;
    }
    return driver(config, std::filesystem::path(config.output_dir),
                  args.threads);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"loggas: 2D log-gas sampling, dynamics and analysis"};
    app.require_subcommand(1);

    CommonArgs sample_args, simulate_args, analyze_args, palm_args;
    auto* sample =
        app.add_subcommand("sample", "Draw an ensemble of configurations");
    add_common(sample, sample_args, true);
    auto* simulate = app.add_subcommand(
        "simulate", "Integrate interacting Brownian replicas");
    add_common(simulate, simulate_args, true);
    auto* analyze = app.add_subcommand(
        "analyze", "Compute requested observables over a data directory");
    add_common(analyze, analyze_args, true);
    auto* palm = app.add_subcommand(
        "palm", "Palm density-ratio stabilization curves");
    add_common(palm, palm_args, true);
    auto* version = app.add_subcommand("version", "Print tool version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (version->parsed()) {
            std::printf("%s %s\n", loggas::kToolName, loggas::kToolVersion);
            return 0;
        }
        if (sample->parsed())
            return run(sample_args, [](const auto& c, const auto& dir,
                                       unsigned t) {
                loggas::cmd_sample(c, dir, t);
                std::printf("sample: wrote %zu configurations to %s\n",
                            c.ensemble_size, dir.c_str());
                return 0;
            });
        if (simulate->parsed())
            return run(simulate_args, [](const auto& c, const auto& dir,
                                         unsigned t) {
                const bool complete = loggas::cmd_simulate(c, dir, t);
                std::printf("simulate: wrote %zu replicas to %s%s\n",
                            c.ensemble_size, dir.c_str(),
                            complete ? "" : " (incomplete replicas)");
                return complete ? 0 : 3;
            });
        if (analyze->parsed())
            return run(analyze_args, [](const auto& c, const auto& dir,
                                        unsigned t) {
                loggas::cmd_analyze(c, dir, t);
                std::printf("analyze: wrote summary.json to %s\n",
                            dir.c_str());
                return 0;
            });
        if (palm->parsed())
            return run(palm_args, [](const auto& c, const auto& dir,
                                     unsigned t) {
                loggas::cmd_palm(c, dir, t);
                std::printf("palm: wrote palm.csv to %s\n", dir.c_str());
                return 0;
            });
    } catch (const loggas::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const loggas::IOError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 4;
    } catch (const loggas::NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 2;
}
