#include "pdm/oracle.hpp"

#include <cmath>
#include <cstdlib>

#include "pdm/error.hpp"

namespace pdm::oracle {

namespace {

void check_trajectory(std::span<const double> health, std::size_t start) {
    if (health.size() < 2) throw UsageError("oracle: trajectory needs at least 2 cycles");
    if (start + 1 >= health.size()) throw UsageError("oracle: start must precede the failure cycle");
}

double replace_reward(double health, const env::RewardConfig& r) {
    return r.replace + (health <= r.frugal_threshold ? r.frugal : 0.0);
}

/// bonus[i] = explore reward for arriving at index i on the path from start.
std::vector<double> explore_bonus(std::span<const double> health, std::size_t start,
                                  const env::RewardConfig& reward, int bins) {
    std::vector<char> seen(static_cast<std::size_t>(bins), 0);
    std::vector<double> bonus(health.size(), 0.0);
    seen[static_cast<std::size_t>(env::discretize(health[start], bins))] = 1;
    for (std::size_t i = start + 1; i + 1 < health.size(); ++i) {
        auto& s = seen[static_cast<std::size_t>(env::discretize(health[i], bins))];
        if (!s) bonus[i] = reward.explore;
        s = 1;
    }
    return bonus;
}

}  // namespace

StartSolution solve_from(std::span<const double> health, std::size_t start, const env::RewardConfig& reward,
                         int bins, double gamma) {
    check_trajectory(health, start);
    const auto bonus = explore_bonus(health, start, reward, bins);
    const std::size_t last = health.size() - 2;
    // Backward pass: value[i] for i in [start, last]; replace_at[i] is the
    // optimal choice at i.
    std::vector<double> value(health.size(), 0.0);
    std::vector<char> replace_at(health.size(), 0);
    for (std::size_t i = last + 1; i-- > start;) {
        const double q_replace = replace_reward(health[i], reward);
        const double q_hold =
            i == last ? reward.penalty : reward.hold_runtime + bonus[i + 1] + gamma * value[i + 1];
        replace_at[i] = q_replace >= q_hold;
        value[i] = std::max(q_replace, q_hold);
    }
    StartSolution sol;
    sol.value = value[start];
    sol.replaces = false;
    sol.replace_index = health.size() - 1;
    for (std::size_t i = start; i <= last; ++i) {
        if (replace_at[i]) {
            sol.replace_index = i;
            sol.replaces = true;
            break;
        }
    }
    return sol;
}

std::vector<StartSolution> solve_all_starts(std::span<const double> health, const env::RewardConfig& reward,
                                            int bins, double gamma) {
    check_trajectory(health, 0);
    std::vector<StartSolution> out;
    out.reserve(health.size() - 1);
    for (std::size_t s = 0; s + 1 < health.size(); ++s) out.push_back(solve_from(health, s, reward, bins, gamma));
    return out;
}

double plan_value(std::span<const double> health, std::span<const int> actions, std::size_t start,
                  const env::RewardConfig& reward, int bins, double gamma) {
    check_trajectory(health, start);
    if (actions.size() + 1 < health.size()) throw UsageError("plan_value: need an action per decision index");
    const auto bonus = explore_bonus(health, start, reward, bins);
    double total = 0.0;
    double discount = 1.0;
    for (std::size_t i = start; i + 1 < health.size(); ++i) {
        if (actions[i] == env::DatasetEnv::kReplace) return total + discount * replace_reward(health[i], reward);
        if (i + 2 == health.size()) return total + discount * reward.penalty;
        total += discount * (reward.hold_runtime + bonus[i + 1]);
        discount *= gamma;
    }
    return total;
}

double random_policy_value(std::span<const double> health, std::size_t start, const env::RewardConfig& reward,
                           int bins, double gamma, double p_replace) {
    check_trajectory(health, start);
    if (!(p_replace >= 0.0 && p_replace <= 1.0)) throw UsageError("random_policy_value: p_replace must lie in [0, 1]");
    const auto bonus = explore_bonus(health, start, reward, bins);
    const double p_hold = 1.0 - p_replace;
    double total = 0.0;
    double reach = 1.0;  // P(still running at i) * gamma^(i - start)
    for (std::size_t i = start; i + 1 < health.size(); ++i) {
        const double hold = i + 2 == health.size() ? reward.penalty : reward.hold_runtime + bonus[i + 1];
        total += reach * (p_replace * replace_reward(health[i], reward) + p_hold * hold);
        reach *= p_hold * gamma;
    }
    return total;
}

std::vector<int> greedy_actions(const nn::DenseNet& net, std::span<const double> health, int window) {
    if (health.size() < 2) throw UsageError("greedy_actions: trajectory needs at least 2 cycles");
    const std::size_t n = health.size() - 1;
    Eigen::MatrixXd obs(static_cast<Eigen::Index>(n), window);
    for (std::size_t i = 0; i < n; ++i) {
        obs.row(static_cast<Eigen::Index>(i)) = env::dataset_features(health, i, window).transpose();
    }
    const Eigen::MatrixXd q = net.forward(obs);
    std::vector<int> actions(n);
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Index best = 0;
        q.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
        actions[i] = static_cast<int>(best);
    }
    return actions;
}

OracleComparison compare_to_oracle(std::span<const std::vector<int>> actions, const env::DatasetEnvConfig& config,
                                   double gamma) {
    if (actions.size() != config.trajectories.size()) throw UsageError("compare_to_oracle: one plan per trajectory");
    OracleComparison cmp;
    std::size_t count = 0;
    for (std::size_t e = 0; e < config.trajectories.size(); ++e) {
        const auto& h = config.trajectories[e].health;
        for (std::size_t s = 0; s + 1 < h.size(); ++s) {
            cmp.policy_value += plan_value(h, actions[e], s, config.reward, config.bins, gamma);
            cmp.optimal_value += solve_from(h, s, config.reward, config.bins, gamma).value;
            ++count;
        }
    }
    cmp.policy_value /= static_cast<double>(count);
    cmp.optimal_value /= static_cast<double>(count);
    return cmp;
}

OracleComparison compare_to_oracle(const nn::DenseNet& net, const env::DatasetEnvConfig& config, double gamma) {
    std::vector<std::vector<int>> plans;
    for (const auto& t : config.trajectories) plans.push_back(greedy_actions(net, t.health, config.window));
    return compare_to_oracle(plans, config, gamma);
}

agent::Evaluator oracle_evaluator(const env::DatasetEnvConfig& train_config, double gamma,
                                  std::vector<cmapss::HealthTrajectory> eval_trajectories) {
    env::DatasetEnvConfig eval_config = train_config;
    if (!eval_trajectories.empty()) eval_config.trajectories = std::move(eval_trajectories);
    // Oracle values do not depend on the policy; solve them once.
    double optimal = 0.0;
    std::size_t count = 0;
    for (const auto& t : train_config.trajectories) {
        for (const auto& sol : solve_all_starts(t.health, train_config.reward, train_config.bins, gamma)) {
            optimal += sol.value;
            ++count;
        }
    }
    optimal /= static_cast<double>(count);
    return [train_config, eval_config, gamma, optimal, count](const nn::DenseNet& net) {
        double value = 0.0;
        for (const auto& t : train_config.trajectories) {
            const auto plan = greedy_actions(net, t.health, train_config.window);
            for (std::size_t s = 0; s + 1 < t.health.size(); ++s) {
                value += plan_value(t.health, plan, s, train_config.reward, train_config.bins, gamma);
            }
        }
        // Batched greedy plans; equivalent to agent::evaluate_policy from start 0.
        std::vector<double> healths;
        double total = 0.0;
        for (const auto& t : eval_config.trajectories) {
            const auto plan = greedy_actions(net, t.health, eval_config.window);
            total += plan_value(t.health, plan, 0, eval_config.reward, eval_config.bins, 1.0);
            double h = t.health.back();
            for (std::size_t i = 0; i < plan.size(); ++i) {
                if (plan[i] == env::DatasetEnv::kReplace) {
                    h = t.health[i];
                    break;
                }
            }
            healths.push_back(h);
        }
        agent::EvalSnapshot snap;
        snap.score = value / static_cast<double>(count) / optimal;
        snap.mean_return = total / static_cast<double>(eval_config.trajectories.size());
        snap.median_replacement_health = agent::median(std::move(healths));
        return snap;
    };
}

bool within_band(double agent_health, double oracle_health, int bins) {
    return std::abs(env::discretize(agent_health, bins) - env::discretize(oracle_health, bins)) <= 1;
}

}  // namespace pdm::oracle
