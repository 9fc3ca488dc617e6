#pragma once

// Finite MDPs solved exactly: value iteration, exact policy evaluation, brute
// force over deterministic policies, and sampled Q-learning. Used as oracles
// for the neural agent on a small abstraction of the synthetic environment.

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "pdm/env.hpp"
#include "pdm/rng.hpp"

namespace pdm::agent {

struct TabularMDP {
    int states = 0;
    int actions = 0;
    std::vector<double> transition;  // P(s, a, s'), index (s * actions + a) * states + s'
    std::vector<double> reward;      // R(s, a), expected immediate reward, index s * actions + a
    double gamma = 0.9;

    TabularMDP() = default;
    TabularMDP(int n_states, int n_actions, double discount);

    double& p(int s, int a, int s_next) { return transition[idx(s, a) * states + s_next]; }
    double p(int s, int a, int s_next) const { return transition[idx(s, a) * states + s_next]; }
    double& r(int s, int a) { return reward[idx(s, a)]; }
    double r(int s, int a) const { return reward[idx(s, a)]; }

    /// Throws ConfigError unless every P(s, a, .) is a distribution (1e-9).
    void validate() const;

private:
    std::size_t idx(int s, int a) const { return static_cast<std::size_t>(s * actions + a); }
};

using TabularPolicy = std::vector<int>;

/// Q(s, a) = R(s, a) + gamma * sum_s' P(s, a, s') V(s').
Eigen::MatrixXd q_from_values(const TabularMDP& mdp, const Eigen::VectorXd& values);

/// Lowest action index within `tie_tolerance` of the row maximum.
TabularPolicy greedy_from_q(const Eigen::MatrixXd& q, double tie_tolerance = 1e-9);

struct ValueIterationResult {
    Eigen::VectorXd values;
    Eigen::MatrixXd q;
    TabularPolicy policy;
    int iterations = 0;
    std::vector<double> sup_changes;  // ||V_{k+1} - V_k||_inf per sweep
};

/// Bellman optimality sweeps until the a-posteriori bound
/// gamma / (1 - gamma) * ||V_{k+1} - V_k|| falls below `tolerance`.
/// Throws NumericError if gamma >= 1 or max_iterations is exhausted.
ValueIterationResult tabular_value_iteration(const TabularMDP& mdp, double tolerance = 1e-9,
                                             int max_iterations = 1000000);

/// Exact V^pi from the linear system (I - gamma P_pi) V = R_pi.
Eigen::VectorXd evaluate_policy_exact(const TabularMDP& mdp, const TabularPolicy& policy);

struct EnumerationResult {
    Eigen::VectorXd values;
    TabularPolicy policy;  // lexicographically first optimal policy
    std::size_t policies_checked = 0;
};

/// Evaluate every deterministic policy exactly; keep the best. Throws
/// UsageError when actions^states exceeds `limit`.
EnumerationResult enumerate_policies(const TabularMDP& mdp, std::size_t limit = 1u << 20);

/// Q(s,a) <- (1 - alpha) Q(s,a) + alpha (r + gamma max_a' Q(s',a')); the
/// bootstrap term is dropped when `terminal`.
void tabular_q_update(Eigen::MatrixXd& q, int s, int a, double r, int s_next, double alpha, double gamma,
                      bool terminal = false);

/// How q_learning draws s' ~ P(s, a, .): i.i.d. uniforms, or a golden-ratio
/// rotation per pair (same marginal law, much lower discrepancy).
enum class QSampler { Iid, Rotation };

struct QLearningConfig {
    std::size_t sweeps = 4000000;  // each sweep updates every (s, a) once
    double step_exponent = 1.0;   // alpha_n = 1 / (1 + (1 - gamma) n)^omega
    QSampler sampler = QSampler::Rotation;
};

/// Synchronous Q-learning: every sweep samples s' for each pair by inverse
/// CDF and applies tabular_q_update with a decaying step size.
Eigen::MatrixXd q_learning(const TabularMDP& mdp, const QLearningConfig& config, Rng& rng);

/// Finite abstraction of the synthetic env: states 0..s_max, s_max absorbing
/// (failed, zero reward); low temperature only; unlimited budget; no explore
/// bonus. Actions follow the env layout (Hold, Replace, Repair(type)...).
TabularMDP synthetic_abstraction(const env::SyntheticEnvConfig& config, double gamma);

/// Environment that samples a TabularMDP and emits one-hot observations.
/// Episodes start uniformly in `start_states`; reaching an absorbing state
/// ends the episode; `horizon` truncates (bootstrapping continues).
class TabularEnv final : public env::Environment {
public:
    TabularEnv(TabularMDP mdp, std::vector<int> start_states, std::vector<int> absorbing, int horizon,
               std::uint64_t seed);

    std::size_t observation_dim() const override { return static_cast<std::size_t>(mdp_.states); }
    std::size_t action_count() const override { return static_cast<std::size_t>(mdp_.actions); }
    Eigen::VectorXd reset() override;
    env::StepOutcome step(int action) override;
    std::unique_ptr<env::Environment> clone() const override { return std::make_unique<TabularEnv>(*this); }
    env::TraceRow trace_state() const override;

    int state() const { return state_; }
    static Eigen::VectorXd one_hot(int state, int states);

private:
    bool absorbing(int s) const;

    TabularMDP mdp_;
    std::vector<int> start_states_;
    std::vector<int> absorbing_;
    int horizon_;
    Rng rng_;
    int state_ = 0;
    int t_ = 0;
};

}  // namespace pdm::agent
