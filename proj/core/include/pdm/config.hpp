#pragma once

// Run configuration: one JSON document with a section per module. Every key
// is optional; missing keys keep the defaults below. Unknown keys are errors
// so typos do not silently fall back to defaults.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pdm/agent.hpp"
#include "pdm/cmapss.hpp"
#include "pdm/env.hpp"

namespace pdm::config {

enum class DataSource { Synthetic, Cmapss, HealthCsv };
enum class EnvKind { Dataset, Synthetic };

std::string to_string(DataSource source);
std::string to_string(EnvKind kind);

struct DataConfig {
    DataSource source = DataSource::Synthetic;
    std::filesystem::path path;  // C-MAPSS text file or health CSV
    std::uint64_t synth_seed_offset = 0;
    cmapss::SynthSensorConfig synthetic{};
    double min_abs_t_statistic = 4.0;
};

struct EnvConfig {
    EnvKind kind = EnvKind::Dataset;
    int bins = 20;
    int window = 1;
    env::SamplingMode mode = env::SamplingMode::RandomStart;
    std::vector<std::size_t> train_engines{75};  // 0-based; empty = all engines
    env::SyntheticEnvConfig synthetic{};
    int eval_episodes = 100;  // synthetic env evaluation
};

struct BenchmarkConfig {
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::vector<agent::Variant> variants{agent::Variant::Random, agent::Variant::DqnVanilla,
                                         agent::Variant::DdqnPer, agent::Variant::PddqnPn};
    double ema = 0.18;
    double threshold = 0.9;  // fraction of the oracle's return
};

struct RunConfig {
    std::uint64_t seed = 7;
    std::filesystem::path out = "runs";
    std::filesystem::path checkpoint;  // empty = <out>/<variant>/checkpoint.json
    DataConfig data{};
    EnvConfig env{};
    env::RewardConfig reward{};
    agent::AgentConfig agent{};
    BenchmarkConfig benchmark{};

    /// Checks every section against its module's invariants and that
    /// referenced input files exist. Throws ConfigError.
    void validate() const;

    std::filesystem::path checkpoint_path() const;
};

/// Throws ConfigError on malformed JSON, wrong types, or unknown keys.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
/// Full effective config (every key written) as pretty JSON.
std::string dump_config(const RunConfig& config);

/// Command-line overrides; unset fields leave the config unchanged.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> variant;
    std::optional<std::filesystem::path> out;
    std::optional<std::filesystem::path> data;
};

/// --data switches the source to C-MAPSS text, or to a health CSV when the
/// file name ends in ".csv".
void apply_overrides(RunConfig& config, const Overrides& overrides);

}  // namespace pdm::config
