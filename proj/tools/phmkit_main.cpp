// phmkit command line: run experiments from JSON configs, replay recorded
// runs, and audit their leakage records.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "phmkit/runner.hpp"

namespace {

int exit_code_for(const phmkit::Error& e) {
    if (e.category() == "leakage") {
        return 3;
    }
    if (e.category() == "schema" || e.category() == "spec") {
        return 2;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"phmkit - leakage-safe evaluation runs for multi-unit time series"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string cache_dir;
    bool no_cache = false;
    std::uint64_t seed = 0;

    CLI::App* run_cmd = app.add_subcommand("run", "Execute a run from a config file");
    run_cmd->add_option("config", config_path, "JSON run configuration")->required();
    run_cmd->add_option("--out", out_dir, "Run artifact directory");
    run_cmd->add_option("--cache", cache_dir, "Cache directory (overrides config and "
                                              "PHM_CACHE_DIR)");
    run_cmd->add_flag("--no-cache", no_cache, "Disable the preprocessing cache");
    CLI::Option* seed_option = run_cmd->add_option("--seed", seed, "Override the config seed");

    std::string run_dir;
    bool allow_code_drift = false;
    CLI::App* replay_cmd = app.add_subcommand("replay", "Re-execute a recorded run and compare "
                                                        "metric digests");
    replay_cmd->add_option("run_dir", run_dir, "Run artifact directory")->required();
    replay_cmd->add_flag("--allow-code-drift", allow_code_drift,
                         "Proceed even if the code fingerprint changed");

    std::string audit_dir;
    CLI::App* audit_cmd = app.add_subcommand("audit", "Check a recorded run for leakage-policy "
                                                      "violations");
    audit_cmd->add_option("run_dir", audit_dir, "Run artifact directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            phmkit::RunConfig config = phmkit::parse_config_file(config_path);
            phmkit::RunOptions options;
            if (!out_dir.empty()) {
                options.out_dir = out_dir;
            } else {
                options.out_dir = std::filesystem::path("runs") /
                                  (config.resolved["seed"].dump() + "-" +
                                   std::to_string(std::time(nullptr)));
            }
            if (!cache_dir.empty()) {
                options.cache_dir = cache_dir;
            }
            options.no_cache = no_cache;
            if (seed_option->count() > 0) {
                options.seed_override = seed;
            }

            phmkit::RunResult result = phmkit::execute_run(config, options);
            std::cout << "run complete\n";
            std::cout << "  artifacts: " << result.out_dir.string() << "\n";
            std::cout << "  config digest: " << result.config_digest << "\n";
            std::cout << "  metric digest: " << result.metric_digest << "\n";
            for (const auto& [name, value] : result.test_report.metrics) {
                std::cout << "  test " << name << " = " << value << "\n";
            }
            return 0;
        }

        if (replay_cmd->parsed()) {
            phmkit::ReplayResult verdict = phmkit::replay(run_dir, allow_code_drift);
            std::cout << "recorded digest: " << verdict.recorded_digest << "\n";
            std::cout << "replayed digest: " << verdict.replayed_digest << "\n";
            std::cout << "verdict: " << (verdict.identical ? "identical" : "different") << "\n";
            return verdict.identical ? 0 : 1;
        }

        if (audit_cmd->parsed()) {
            std::vector<std::string> violations = phmkit::audit_run(audit_dir);
            if (violations.empty()) {
                std::cout << "audit clean: no leakage-policy violations\n";
                return 0;
            }
            for (const auto& v : violations) {
                std::cout << "violation: " << v << "\n";
            }
            return 3;
        }
    } catch (const phmkit::Error& e) {
        std::cerr << "error (" << e.category() << "): " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
