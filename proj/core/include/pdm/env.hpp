#pragma once

// Maintenance MDPs.
//
// SyntheticEnv: discrete sensor-state degradation with a hazard-driven
// advance, a two-mode temperature chain, and Replace / Repair(type) / Hold
// under a maintenance budget.
//
// DatasetEnv: walks a health-indicator trajectory; the agent either holds
// (advance one cycle) or replaces (episode ends).

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pdm/cmapss.hpp"
#include "pdm/rng.hpp"

namespace pdm::env {

enum class ActionKind { Hold, Replace, Repair };

/// Action index layout shared by both envs: 0 = Hold, 1 = Replace,
/// 2 + type = Repair(type).
struct Action {
    ActionKind kind = ActionKind::Hold;
    int repair_type = -1;  // >= 0 iff kind == Repair

    static constexpr Action hold() { return {ActionKind::Hold, -1}; }
    static constexpr Action replace() { return {ActionKind::Replace, -1}; }
    static constexpr Action repair(int type) { return {ActionKind::Repair, type}; }

    int index() const;
    static Action from_index(int index);

    friend bool operator==(const Action&, const Action&) = default;
};

std::string to_string(const Action& action);

/// floor(x * bins) clamped to [0, bins - 1]. x must lie in [0, 1] (+-1e-9).
int discretize(double x, int bins);

struct RewardConfig {
    double hold_runtime = 1.0;  // per surviving Hold step (uptime)
    double replace = 10.0;
    double repair = 5.0;
    double explore = 0.5;  // first visit to a state bin this episode
    double frugal = 40.0;  // maintenance at or below frugal_threshold health
    double frugal_threshold = 0.2;
    double penalty = -100.0;  // failure or budget violation

    void validate() const;
};

/// What happened in one transition, as seen by the reward function.
struct RewardEvent {
    ActionKind action = ActionKind::Hold;
    bool valid = true;         // budget covered the action
    bool failed = false;       // equipment reached the failure state
    bool first_visit = false;  // next state's bin not yet seen this episode
    double health_before = 1.0;
};

/// Base branch (exactly one of runtime / replace / repair / penalty) plus the
/// additive explore and frugal bonuses.
double reward_of(const RewardEvent& event, const RewardConfig& config);

struct StepInfo {
    bool failure = false;
    bool valid = true;
    bool horizon = false;
    bool truncated = false;  // episode cut for bookkeeping only; the learner keeps bootstrapping
    double budget_after = 0.0;
};

struct StepOutcome {
    Eigen::VectorXd observation;
    double reward = 0.0;
    bool done = false;
    StepInfo info;
};

/// One row of an episode trace (t,state,temp,budget,action,reward,done).
struct TraceRow {
    int t = 0;
    double state = 0.0;
    int temp = 0;
    double budget = 0.0;
    int action = 0;
    double reward = 0.0;
    bool done = false;
};

class Environment {
public:
    virtual ~Environment() = default;

    virtual std::size_t observation_dim() const = 0;
    virtual std::size_t action_count() const = 0;
    virtual Eigen::VectorXd reset() = 0;
    virtual StepOutcome step(int action) = 0;
    virtual std::unique_ptr<Environment> clone() const = 0;

    /// Current (state, temp, budget) for trace export.
    virtual TraceRow trace_state() const = 0;
};

// --- synthetic degradation env -----------------------------------------------

/// Which cost regime the budget rule validates against.
enum class CostRegime {
    ReplaceDominant,  // C_replace >= 2 C_repair[type] for all types, budget >= C_replace
    RepairDominant,   // C_replace <= C_repair[type] / 2 for all types, budget >= max C_repair
};

struct SyntheticEnvConfig {
    int s_max = 10;              // failure state index
    double hazard_rate = 0.1;    // lambda: P(advance) = 1 - exp(-lambda) per Hold
    double p_low_to_high = 0.05;
    double p_high_to_low = 0.2;
    int high_temp_skip_min = 2;  // advance magnitude range in the high-temperature mode
    int high_temp_skip_max = 4;
    std::vector<int> repair_effects{2, 5, 8};
    double cost_replace = 10.0;
    std::vector<double> cost_repair{2.0, 3.0, 4.0};
    double budget_init = 100.0;
    int horizon = 200;
    CostRegime regime = CostRegime::ReplaceDominant;
    RewardConfig reward{};

    int repair_types() const { return static_cast<int>(repair_effects.size()); }
    /// 2x2 row-stochastic temperature transition matrix.
    std::array<std::array<double, 2>, 2> temp_chain() const;
    void validate() const;
};

struct EnvState {
    int sensor_state = 0;
    int temp = 0;
    double budget = 0.0;
    int t = 0;
    bool terminal = false;
    std::vector<bool> visited;  // per sensor state, this episode
};

EnvState synthetic_reset(const SyntheticEnvConfig& config, Rng& rng);
inline EnvState synthetic_reset(const SyntheticEnvConfig& config, std::uint64_t seed) {
    Rng rng(stream_seed(seed, "env"));
    return synthetic_reset(config, rng);
}

struct SyntheticStep {
    EnvState next;
    double reward = 0.0;
    bool done = false;
    StepInfo info;
};

/// Throws UsageError on a terminal state or an out-of-range repair type.
SyntheticStep synthetic_step(const EnvState& state, const Action& action, const SyntheticEnvConfig& config,
                             Rng& rng);

/// Observation features: (S / s_max, temp, budget / budget_init, t / horizon).
Eigen::VectorXd synthetic_features(const EnvState& state, const SyntheticEnvConfig& config);

class SyntheticEnv final : public Environment {
public:
    SyntheticEnv(SyntheticEnvConfig config, std::uint64_t seed);

    std::size_t observation_dim() const override { return 4; }
    std::size_t action_count() const override { return 2 + config_.repair_effects.size(); }
    Eigen::VectorXd reset() override;
    StepOutcome step(int action) override;
    std::unique_ptr<Environment> clone() const override { return std::make_unique<SyntheticEnv>(*this); }
    TraceRow trace_state() const override;

    const EnvState& state() const { return state_; }
    const SyntheticEnvConfig& config() const { return config_; }

private:
    SyntheticEnvConfig config_;
    Rng rng_;
    EnvState state_;
};

// --- dataset (health trajectory) env -----------------------------------------

enum class SamplingMode { Sequential, RandomEngine, RandomStart };

std::string to_string(SamplingMode mode);
SamplingMode sampling_mode_from_string(const std::string& name);

struct DatasetEnvConfig {
    int bins = 20;
    int window = 1;  // K most recent health values in the observation
    std::vector<cmapss::HealthTrajectory> trajectories;
    RewardConfig reward{};
    SamplingMode mode = SamplingMode::RandomStart;

    void validate() const;
};

struct DatasetObservation {
    std::size_t engine = 0;
    std::size_t index = 0;     // current cycle (0-based) within the trajectory
    std::vector<int> bins;     // last K discretized health values, oldest first
    Eigen::VectorXd features;  // last K raw health values, oldest first
};

/// The last decision point of a trajectory is index size() - 2; holding there
/// reaches the failure cycle (size() - 1) and ends the episode with the penalty.
class DatasetEnv final : public Environment {
public:
    static constexpr int kHold = 0;
    static constexpr int kReplace = 1;

    DatasetEnv(DatasetEnvConfig config, std::uint64_t seed);

    std::size_t observation_dim() const override { return static_cast<std::size_t>(config_.window); }
    std::size_t action_count() const override { return 2; }
    Eigen::VectorXd reset() override;
    StepOutcome step(int action) override;
    std::unique_ptr<Environment> clone() const override { return std::make_unique<DatasetEnv>(*this); }
    TraceRow trace_state() const override;

    /// Reset with a fresh seed for the sampling stream.
    DatasetObservation reset(std::uint64_t seed);
    /// Deterministic reset to (engine, start index).
    DatasetObservation reset_to(std::size_t engine, std::size_t start);
    /// Throws UsageError for Repair, or when the episode is over.
    StepOutcome step(const Action& action);

    DatasetObservation observation() const;
    double current_health() const;
    std::size_t engine() const { return engine_; }
    std::size_t index() const { return index_; }
    const DatasetEnvConfig& config() const { return config_; }

private:
    DatasetObservation begin_episode(std::size_t engine, std::size_t start);
    const std::vector<double>& health() const { return config_.trajectories[engine_].health; }

    DatasetEnvConfig config_;
    Rng rng_;
    std::size_t engine_ = 0;
    std::size_t index_ = 0;
    std::size_t next_sequential_ = 0;
    int steps_ = 0;
    bool done_ = true;
    std::vector<bool> visited_;
};

/// Health-only feature vector the dataset env emits at (trajectory, index).
Eigen::VectorXd dataset_features(std::span<const double> health, std::size_t index, int window);

}  // namespace pdm::env
