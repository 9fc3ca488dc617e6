#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "pdm/error.hpp"
#include "pdm/tabular.hpp"

namespace {

using namespace pdm::agent;

// The five-state abstraction used across the tabular tests: equal base
// rewards, so only the frugal bonus and the failure penalty shape the policy.
pdm::env::SyntheticEnvConfig five_state_config() {
    pdm::env::SyntheticEnvConfig c;
    c.s_max = 4;
    c.hazard_rate = 0.3;
    c.repair_effects = {1, 3};
    c.cost_repair = {2.0, 3.0};
    c.reward.hold_runtime = 1.0;
    c.reward.repair = 1.0;
    c.reward.replace = 1.0;
    c.reward.frugal = 40.0;
    c.reward.frugal_threshold = 0.3;
    c.reward.explore = 0.0;
    return c;
}

TEST(TabularMDP, ValidateRejectsNonStochasticRows) {
    TabularMDP m(2, 1, 0.9);
    m.p(0, 0, 0) = 0.5;
    m.p(1, 0, 1) = 1.0;
    EXPECT_THROW(m.validate(), pdm::ConfigError);
    m.p(0, 0, 1) = 0.5;
    EXPECT_NO_THROW(m.validate());
}

TEST(ValueIteration, TwoStateClosedForm) {
    // One action: s0 -> s1 (r = 1), s1 -> s1 (r = 2). V1 = 2 / (1 - g), V0 = 1 + g V1.
    TabularMDP m(2, 1, 0.8);
    m.p(0, 0, 1) = 1.0;
    m.p(1, 0, 1) = 1.0;
    m.r(0, 0) = 1.0;
    m.r(1, 0) = 2.0;
    const auto vi = tabular_value_iteration(m, 1e-12);
    EXPECT_NEAR(vi.values(1), 10.0, 1e-10);
    EXPECT_NEAR(vi.values(0), 9.0, 1e-10);
    for (std::size_t k = 1; k < vi.sup_changes.size(); ++k) {
        EXPECT_LE(vi.sup_changes[k], 0.8 * vi.sup_changes[k - 1] + 1e-12);
    }
}

TEST(ValueIteration, MatchesEnumerationOnFiveStates) {
    const auto mdp = synthetic_abstraction(five_state_config(), 0.9);
    ASSERT_EQ(mdp.states, 5);
    ASSERT_EQ(mdp.actions, 4);
    const auto vi = tabular_value_iteration(mdp, 1e-12);
    const auto en = enumerate_policies(mdp);
    EXPECT_EQ(en.policies_checked, 1024u);
    EXPECT_LT((vi.values - en.values).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_EQ(vi.policy, en.policy);
    // Frugal maintenance at the last working state, hold while healthy.
    EXPECT_NE(vi.policy[3], 0);
}

TEST(PolicyEvaluation, MatchesIterativeEvaluation) {
    const auto mdp = synthetic_abstraction(five_state_config(), 0.9);
    const TabularPolicy pi{0, 0, 2, 1, 0};
    const auto exact = evaluate_policy_exact(mdp, pi);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(5);
    for (int it = 0; it < 2000; ++it) {
        Eigen::VectorXd next(5);
        for (int s = 0; s < 5; ++s) {
            const int a = pi[static_cast<std::size_t>(s)];
            double ev = 0.0;
            for (int k = 0; k < 5; ++k) ev += mdp.p(s, a, k) * v(k);
            next(s) = mdp.r(s, a) + 0.9 * ev;
        }
        v = next;
    }
    EXPECT_LT((v - exact).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Enumeration, LimitGuard) {
    pdm::env::SyntheticEnvConfig c;  // 11 states x 5 actions
    const auto mdp = synthetic_abstraction(c, 0.9);
    EXPECT_THROW(enumerate_policies(mdp, 1000), pdm::UsageError);
}

TEST(GreedyFromQ, LowestIndexWinsTies) {
    Eigen::MatrixXd q(2, 3);
    q << 1.0, 2.0, 2.0, 3.0, 3.0 + 1e-12, 0.0;
    EXPECT_EQ(greedy_from_q(q), (TabularPolicy{1, 0}));
}

TEST(QUpdate, HandComputed) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(2, 2);
    q(1, 0) = 4.0;
    q(1, 1) = 6.0;
    tabular_q_update(q, 0, 1, 2.0, 1, 0.5, 0.9);
    EXPECT_DOUBLE_EQ(q(0, 1), 0.5 * (2.0 + 0.9 * 6.0));
    tabular_q_update(q, 0, 0, 2.0, 1, 1.0, 0.9, true);
    EXPECT_DOUBLE_EQ(q(0, 0), 2.0);
}

TEST(QLearning, ConvergesToValueIterationQ) {
    const auto mdp = synthetic_abstraction(five_state_config(), 0.9);
    const auto vi = tabular_value_iteration(mdp, 1e-12);
    pdm::Rng rng(1);
    const auto q = q_learning(mdp, {}, rng);
    EXPECT_LT((q - vi.q).cwiseAbs().maxCoeff(), 1e-3);
    EXPECT_EQ(greedy_from_q(q, 1e-6), vi.policy);
}

TEST(QLearning, IidSamplerIsUnbiasedButNoisier) {
    const auto mdp = synthetic_abstraction(five_state_config(), 0.9);
    const auto vi = tabular_value_iteration(mdp, 1e-12);
    pdm::Rng rng(2);
    QLearningConfig cfg;
    cfg.sweeps = 200000;
    cfg.sampler = QSampler::Iid;
    const auto q = q_learning(mdp, cfg, rng);
    EXPECT_LT((q - vi.q).cwiseAbs().maxCoeff(), 0.5);
}

TEST(TabularEnv, EmitsOneHotAndTerminatesAtAbsorbing) {
    const auto mdp = synthetic_abstraction(five_state_config(), 0.9);
    TabularEnv env(mdp, {3}, {4}, 100, 1);
    const auto obs = env.reset();
    EXPECT_EQ(obs, TabularEnv::one_hot(3, 5));
    // Hold at state 3 either stays or fails.
    for (;;) {
        const auto out = env.step(0);
        EXPECT_DOUBLE_EQ(out.reward, mdp.r(3, 0));
        if (out.done) {
            EXPECT_TRUE(out.info.failure);
            EXPECT_FALSE(out.info.truncated);
            EXPECT_EQ(env.state(), 4);
            break;
        }
    }
}

TEST(TabularEnv, HorizonTruncates) {
    const auto mdp = synthetic_abstraction(five_state_config(), 0.9);
    TabularEnv env(mdp, {0}, {4}, 3, 1);
    env.reset();
    pdm::env::StepOutcome out;
    for (int k = 0; k < 3; ++k) out = env.step(2);  // repair at 0 stays at 0
    EXPECT_TRUE(out.done);
    EXPECT_TRUE(out.info.truncated);
    EXPECT_THROW(TabularEnv(mdp, {4}, {4}, 3, 1), pdm::ConfigError);
}

}  // namespace
