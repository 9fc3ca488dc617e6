#pragma once

// DQN-family agents over the maintenance environments.
//
// Variants share one training loop; they differ only in the TD target, the
// replay prioritization, and whether exploration perturbs the parameters:
//
//   random       uniform actions, no learning
//   dqn_vanilla  max-target, uniform replay
//   ddqn_per     online-argmax / target-value, prioritized replay
//   pddqn_pn     ddqn_per plus per-episode parameter noise

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pdm/cmapss.hpp"
#include "pdm/env.hpp"
#include "pdm/neural.hpp"
#include "pdm/replay.hpp"
#include "pdm/rng.hpp"

namespace pdm::agent {

enum class Variant { Random, DqnVanilla, DdqnPer, PddqnPn };

std::string to_string(Variant variant);
/// Throws ConfigError on an unknown name.
Variant variant_from_string(const std::string& name);
inline constexpr Variant kAllVariants[] = {Variant::Random, Variant::DqnVanilla, Variant::DdqnPer, Variant::PddqnPn};

bool uses_double_q(Variant variant);
bool uses_priorities(Variant variant);
bool uses_parameter_noise(Variant variant);

struct AgentConfig {
    Variant variant = Variant::PddqnPn;
    double gamma = 0.95;
    std::size_t batch = 32;
    std::size_t target_sync = 250;  // L^-: steps between target copies
    std::size_t warmup = 5000;      // random-policy steps before learning
    std::size_t total_steps = 20000;
    double exploration_fraction = 0.8;
    double epsilon_start = 1.0;
    double epsilon_end = 0.02;
    double noise_epsilon = 0.02;     // residual epsilon kept by pddqn_pn
    std::size_t eval_interval = 500;  // 0 disables evaluation snapshots
    nn::NetConfig net{};
    nn::AdamConfig adam{};
    nn::LossConfig loss{};
    nn::NoiseConfig noise{};
    replay::PERConfig replay{};

    void validate() const;
};

/// Epsilon for the behavior policy at `step`. Linear from epsilon_start to
/// epsilon_end over exploration_fraction * total_steps; pddqn_pn uses the
/// constant noise_epsilon; random always 1.
double epsilon_at(const AgentConfig& config, std::size_t step);

/// Dense view of a replay batch.
struct TdBatch {
    Eigen::MatrixXd states;       // batch x obs_dim
    std::vector<int> actions;
    Eigen::VectorXd rewards;
    Eigen::MatrixXd next_states;  // batch x obs_dim
    std::vector<char> done;
};

TdBatch gather(std::span<const replay::Transition* const> transitions);

/// y = r + gamma * max_a Q_target(s', a); y = r on terminal transitions.
Eigen::VectorXd td_target_dqn(const TdBatch& batch, const nn::DenseNet& target, double gamma);

/// a* = argmax_a Q_online(s', a); y = r + gamma * Q_target(s', a*); y = r on
/// terminal transitions.
Eigen::VectorXd td_target_ddqn(const TdBatch& batch, const nn::DenseNet& online, const nn::DenseNet& target,
                               double gamma);

/// Epsilon-greedy over `policy_net`; pddqn_pn callers pass the episode's
/// perturbed copy. The random variant ignores the network.
int select_action(const nn::DenseNet& policy_net, const Eigen::VectorXd& observation, double epsilon,
                  Variant variant, int action_count, Rng& rng);

struct LogRow {
    std::size_t step = 0;
    std::size_t episode = 0;
    double reward = 0.0;
    double episodic_return = 0.0;  // running return of the current episode
    double epsilon = 0.0;
    double sigma_noise = 0.0;
    double b = 0.0;
    bool done = false;
};

struct EvalSnapshot {
    std::size_t step = 0;
    double score = 0.0;        // evaluator-defined (e.g. fraction of oracle return)
    double mean_return = 0.0;
    double median_replacement_health = 0.0;
};

/// Greedy-policy evaluator called every eval_interval steps (and at the end).
using Evaluator = std::function<EvalSnapshot(const nn::DenseNet&)>;

struct TrainLog {
    std::size_t warmup = 0;
    double exploration_fraction = 0.0;
    std::string variant;
    std::uint64_t seed = 0;
    std::vector<LogRow> rows;
    std::vector<double> episode_returns;
    std::vector<EvalSnapshot> snapshots;
    double wall_seconds = 0.0;  // not written to CSV

    /// Header comment lines ("# warmup=5000" ...) then
    /// step,episode,reward,episodic_return,epsilon,sigma_noise,b.
    std::string csv() const;
    /// step,score,mean_return,median_replacement_health.
    std::string snapshots_csv() const;
};

struct TrainResult {
    TrainLog log;
    nn::Checkpoint checkpoint;
};

/// Algorithm loop: warmup with random actions, then act (epsilon-greedy on the
/// online or perturbed net), store with max priority, sample, compute targets,
/// take one IS-weighted gradient step per env step, write back |delta|
/// priorities, adapt noise, and copy the target every target_sync steps.
/// Throws UsageError if the env's observation size differs from the network.
TrainResult train(env::Environment& environment, const AgentConfig& config, std::uint64_t seed,
                  const Evaluator& evaluator = {});

// --- evaluation on health trajectories ---------------------------------------

using Policy = std::function<int(const Eigen::VectorXd& observation)>;

Policy greedy_policy(const nn::DenseNet& net);
/// Uniform Hold/Replace; draws from `rng`, which must outlive the policy.
Policy random_policy(Rng& rng);

struct ReplacementPoint {
    std::size_t cycle = 0;  // 0-based index of the Replace decision (or failure index)
    double health = 0.0;
    bool failed = false;  // never replaced before the failure cycle
};

/// Roll the policy along the trajectory from `start`; first Replace wins.
ReplacementPoint predict_replacement_point(const Policy& policy, const cmapss::HealthTrajectory& trajectory,
                                           int window, std::size_t start = 0);
ReplacementPoint predict_replacement_point(const nn::DenseNet& net, const cmapss::HealthTrajectory& trajectory,
                                           int window, std::size_t start = 0);

struct PolicySummary {
    std::vector<ReplacementPoint> points;
    double mean_return = 0.0;  // undiscounted, from start 0
    double median_health = 0.0;
    double std_health = 0.0;  // population std
    std::size_t failures = 0;
};

/// Rolls one episode per trajectory from start 0 through DatasetEnv so the
/// returns use the env's reward semantics. Throws UsageError on empty input.
PolicySummary evaluate_policy(const Policy& policy, const env::DatasetEnvConfig& config);
PolicySummary evaluate_policy(const nn::DenseNet& net, const env::DatasetEnvConfig& config);

double median(std::vector<double> values);
double population_std(std::span<const double> values);

}  // namespace pdm::agent
