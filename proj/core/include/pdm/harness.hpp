#pragma once

// Pipeline commands behind the `pdm` CLI. Each command validates its config,
// does the work, and writes its outputs under config.out with
// temp-then-rename, so an interrupted run never leaves a truncated file.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdm/agent.hpp"
#include "pdm/cmapss.hpp"
#include "pdm/config.hpp"
#include "pdm/env.hpp"

namespace pdm::harness {

/// y0 = x0; y_t = factor x_t + (1 - factor) y_{t-1}. Throws UsageError unless
/// factor lies in (0, 1].
std::vector<double> ema_smooth(std::span<const double> series, double factor);

struct IngestResult {
    std::vector<cmapss::Trajectory> raw;
    std::vector<std::size_t> sensors;  // selected, 0-based
    cmapss::PrincipalComponent component;
    std::vector<cmapss::HealthTrajectory> health;
    std::vector<std::optional<cmapss::DegradationFit>> fits;  // nullopt = skipped (too short)
    std::vector<std::string> warnings;
};

/// parse (or synthesize) -> normalize -> select -> PCA -> rescale -> fit.
IngestResult run_pipeline(const config::RunConfig& config);

/// Health trajectories for the env: from a health CSV when configured,
/// otherwise through run_pipeline (without the degradation fits).
std::vector<cmapss::HealthTrajectory> load_health(const config::RunConfig& config);

/// Dataset env config over the configured training engines. Throws
/// ConfigError when an engine index is out of range.
env::DatasetEnvConfig dataset_config(const config::RunConfig& config,
                                     const std::vector<cmapss::HealthTrajectory>& health);

/// Greedy-policy evaluator used during training (score = fraction of the DP
/// oracle's return on the training engines). For the random variant the score
/// is the exact expected return of the uniform policy.
agent::Evaluator make_evaluator(const config::RunConfig& config, const env::DatasetEnvConfig& train,
                                const std::vector<cmapss::HealthTrajectory>& all);

/// Runs agent::train on the configured env without writing files.
agent::TrainResult run_training(const config::RunConfig& config);

/// CSV rows t,state,temp,budget,action,reward,done for one episode.
std::string episode_trace_csv(env::Environment& environment, const agent::Policy& policy, int max_steps);

struct BenchmarkRun {
    agent::Variant variant;
    std::uint64_t seed = 0;
    std::vector<agent::EvalSnapshot> snapshots;
    std::optional<std::size_t> steps_to_threshold;
    double final_score = 0.0;
    double final_median_health = 0.0;
};

struct BenchmarkResult {
    std::vector<std::size_t> steps;                  // snapshot steps shared by all runs
    std::vector<std::vector<double>> smoothed;       // per variant: EMA of the seed-mean score
    std::vector<BenchmarkRun> runs;
};

BenchmarkResult run_benchmark(const config::RunConfig& config, std::ostream& log);

/// The CLI subcommands. Return the process exit code; errors propagate as
/// exceptions (ConfigError/UsageError -> 2, others -> 1, mapped by the CLI).
int cmd_ingest(const config::RunConfig& config, std::ostream& log);
int cmd_train(const config::RunConfig& config, std::ostream& log);
int cmd_eval(const config::RunConfig& config, std::ostream& log);
int cmd_predict(const config::RunConfig& config, std::ostream& log);
int cmd_benchmark(const config::RunConfig& config, std::ostream& log);

}  // namespace pdm::harness
