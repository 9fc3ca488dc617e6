#pragma once

// Exact solutions for the dataset environment.
//
// From a fixed start the only choice is when to replace, and the path to that
// point is fully determined by the trajectory, so backward induction over the
// remaining indices is exact. First-visit bonuses are resolved per start.

#include <cstddef>
#include <span>
#include <vector>

#include "pdm/agent.hpp"
#include "pdm/cmapss.hpp"
#include "pdm/env.hpp"
#include "pdm/neural.hpp"

namespace pdm::oracle {

struct StartSolution {
    double value = 0.0;              // optimal discounted return from this start
    std::size_t replace_index = 0;   // first index where the optimal plan replaces
    bool replaces = true;            // false only if running to failure is optimal
};

/// Optimal plan from `start` (decision indices start..size()-2) under `gamma`.
/// Ties between Hold and Replace resolve to Replace.
StartSolution solve_from(std::span<const double> health, std::size_t start, const env::RewardConfig& reward,
                         int bins, double gamma);

/// solve_from for every start 0..size()-2.
std::vector<StartSolution> solve_all_starts(std::span<const double> health, const env::RewardConfig& reward,
                                            int bins, double gamma);

/// Discounted return from `start` when the action at index i is actions[i]
/// (indices 0..size()-2). Same reward semantics as DatasetEnv.
double plan_value(std::span<const double> health, std::span<const int> actions, std::size_t start,
                  const env::RewardConfig& reward, int bins, double gamma);

/// Exact discounted return from `start` of the policy that replaces with
/// probability p_replace at every decision index (0.5 = uniform random).
double random_policy_value(std::span<const double> health, std::size_t start, const env::RewardConfig& reward,
                           int bins, double gamma, double p_replace = 0.5);

/// Greedy action of `net` at every decision index of a trajectory.
std::vector<int> greedy_actions(const nn::DenseNet& net, std::span<const double> health, int window);

struct OracleComparison {
    double policy_value = 0.0;   // mean over all starts and trajectories
    double optimal_value = 0.0;  // same average for the oracle
    double ratio() const { return policy_value / optimal_value; }
};

/// Averages over every (trajectory, start) pair, i.e. the expected return
/// under the random-start reset distribution.
OracleComparison compare_to_oracle(const nn::DenseNet& net, const env::DatasetEnvConfig& config, double gamma);
OracleComparison compare_to_oracle(std::span<const std::vector<int>> actions, const env::DatasetEnvConfig& config,
                                   double gamma);

/// Evaluator for agent::train: score = fraction of the oracle's return on
/// `train_config`; replacement statistics from start 0 on `eval_trajectories`
/// (falls back to the training set when empty).
agent::Evaluator oracle_evaluator(const env::DatasetEnvConfig& train_config, double gamma,
                                  std::vector<cmapss::HealthTrajectory> eval_trajectories = {});

/// |bin(agent) - bin(oracle)| <= 1.
bool within_band(double agent_health, double oracle_health, int bins);

}  // namespace pdm::oracle
