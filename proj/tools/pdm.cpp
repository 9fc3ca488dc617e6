// pdm: predictive-maintenance RL pipeline.
//
//   pdm ingest    --out runs/            health indicators + degradation fits
//   pdm train     --variant pddqn_pn     train one agent, write log + checkpoint
//   pdm eval      --out runs/            replacement statistics per engine set
//   pdm predict   --data new.txt         per-engine replacement points
//   pdm benchmark --config bench.json    all variants, learning curves
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pdm/config.hpp"
#include "pdm/error.hpp"
#include "pdm/harness.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Predictive-maintenance reinforcement learning toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> variant;
    std::optional<std::string> out;
    std::optional<std::string> data;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--seed", seed, "root seed (overrides config)");
    app.add_option("--variant", variant, "random | dqn_vanilla | ddqn_per | pddqn_pn");
    app.add_option("--out", out, "output directory");
    app.add_option("--data", data, "C-MAPSS text file, or a health CSV from `ingest`");

    auto* ingest = app.add_subcommand("ingest", "derive health trajectories and degradation fits");
    auto* train = app.add_subcommand("train", "train an agent; writes TrainLog CSV and checkpoint");
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on train/validation engines");
    auto* predict = app.add_subcommand("predict", "replacement point per engine from a checkpoint");
    auto* benchmark = app.add_subcommand("benchmark", "train every variant and compare learning curves");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        pdm::config::RunConfig config =
            config_path.empty() ? pdm::config::RunConfig{} : pdm::config::load_config(config_path);
        pdm::config::Overrides overrides;
        overrides.seed = seed;
        overrides.variant = variant;
        if (out) overrides.out = *out;
        if (data) overrides.data = *data;
        pdm::config::apply_overrides(config, overrides);
        config.validate();

        if (ingest->parsed()) return pdm::harness::cmd_ingest(config, std::cout);
        if (train->parsed()) return pdm::harness::cmd_train(config, std::cout);
        if (eval->parsed()) return pdm::harness::cmd_eval(config, std::cout);
        if (predict->parsed()) return pdm::harness::cmd_predict(config, std::cout);
        if (benchmark->parsed()) return pdm::harness::cmd_benchmark(config, std::cout);
    } catch (const pdm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const pdm::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const pdm::ParseError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
