#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "pdm/agent.hpp"
#include "pdm/error.hpp"
#include "pdm/tabular.hpp"

namespace {

using namespace pdm::agent;
using pdm::nn::DenseNet;

// Q(s, a) = table(s, a) for one-hot inputs: a single linear layer.
DenseNet table_net(const Eigen::MatrixXd& table) {
    pdm::nn::Layer l{table.transpose(), Eigen::VectorXd::Zero(table.cols()), pdm::nn::Activation::Identity};
    return DenseNet({l});
}

Eigen::VectorXd one_hot(int s) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(2);
    v(s) = 1.0;
    return v;
}

// All 16 (s, a, s', done) combinations with r = s + 2a + s'/4.
std::vector<pdm::replay::Transition> fixture_transitions() {
    std::vector<pdm::replay::Transition> out;
    for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a)
            for (int sn = 0; sn < 2; ++sn)
                for (int d = 0; d < 2; ++d) out.push_back({one_hot(s), a, s + 2.0 * a + 0.25 * sn, one_hot(sn), d == 1});
    return out;
}

TdBatch fixture_batch(const std::vector<pdm::replay::Transition>& ts) {
    std::vector<const pdm::replay::Transition*> ptrs;
    for (const auto& t : ts) ptrs.push_back(&t);
    return gather(ptrs);
}

TEST(TdTargets, DoubleQMatchesHandEnumeration) {
    Eigen::MatrixXd on(2, 2), tg(2, 2);
    on << 1, 3,   // argmax at s0: action 1
        5, 2;     // argmax at s1: action 0
    tg << 10, 20,
        30, 40;
    const auto ts = fixture_transitions();
    const auto batch = fixture_batch(ts);
    // s' = 0 bootstraps 0.5 * tg(0, 1) = 10; s' = 1 bootstraps 0.5 * tg(1, 0) = 15.
    const double expected[16] = {10, 0, 15.25, 0.25, 12, 2, 17.25, 2.25,
                                 11, 1, 16.25, 1.25, 13, 3, 18.25, 3.25};
    const auto y = td_target_ddqn(batch, table_net(on), table_net(tg), 0.5);
    for (int i = 0; i < 16; ++i) EXPECT_EQ(y(i), expected[i]) << i;

    // Target values at actions the online net does not pick are never read.
    Eigen::MatrixXd tg2 = tg;
    tg2(0, 0) = 1000.0;
    tg2(1, 1) = -1000.0;
    const auto y2 = td_target_ddqn(batch, table_net(on), table_net(tg2), 0.5);
    EXPECT_EQ(y2, y);
    // Whereas the max target does read them.
    EXPECT_NE(td_target_dqn(batch, table_net(tg2), 0.5), td_target_dqn(batch, table_net(tg), 0.5));
}

TEST(TdTargets, MaxTargetMatchesHandEnumeration) {
    Eigen::MatrixXd tg(2, 2);
    tg << 10, 20,
        30, 40;
    const auto ts = fixture_transitions();
    const double expected[16] = {10, 0, 20.25, 0.25, 12, 2, 22.25, 2.25,
                                 11, 1, 21.25, 1.25, 13, 3, 23.25, 3.25};
    const auto y = td_target_dqn(fixture_batch(ts), table_net(tg), 0.5);
    for (int i = 0; i < 16; ++i) EXPECT_EQ(y(i), expected[i]) << i;
}

TEST(Epsilon, Schedules) {
    AgentConfig c;
    c.variant = Variant::DdqnPer;
    c.total_steps = 1000;
    c.exploration_fraction = 0.5;
    EXPECT_DOUBLE_EQ(epsilon_at(c, 0), 1.0);
    EXPECT_NEAR(epsilon_at(c, 250), 0.51, 1e-12);
    EXPECT_DOUBLE_EQ(epsilon_at(c, 500), 0.02);
    EXPECT_DOUBLE_EQ(epsilon_at(c, 900), 0.02);
    c.variant = Variant::PddqnPn;
    EXPECT_DOUBLE_EQ(epsilon_at(c, 0), c.noise_epsilon);
    c.variant = Variant::Random;
    EXPECT_DOUBLE_EQ(epsilon_at(c, 900), 1.0);
}

TEST(Variants, NamesRoundTrip) {
    for (Variant v : kAllVariants) EXPECT_EQ(variant_from_string(to_string(v)), v);
    EXPECT_THROW(variant_from_string("dqn"), pdm::ConfigError);
    EXPECT_FALSE(uses_double_q(Variant::DqnVanilla));
    EXPECT_TRUE(uses_priorities(Variant::PddqnPn));
    EXPECT_FALSE(uses_parameter_noise(Variant::DdqnPer));
}

TEST(SelectAction, GreedyAndUniform) {
    Eigen::MatrixXd t(2, 3);
    t << 0, 5, 1,
        0, 0, 0;
    const auto net = table_net(t);
    pdm::Rng rng(1);
    for (int k = 0; k < 20; ++k) EXPECT_EQ(select_action(net, one_hot(0), 0.0, Variant::DdqnPer, 3, rng), 1);
    std::vector<int> counts(3, 0);
    for (int k = 0; k < 30000; ++k) ++counts[static_cast<std::size_t>(select_action(net, one_hot(0), 1.0, Variant::DdqnPer, 3, rng))];
    for (int c : counts) EXPECT_NEAR(c / 30000.0, 1.0 / 3.0, 0.015);
    EXPECT_THROW(select_action(net, one_hot(0), 1.5, Variant::DdqnPer, 3, rng), pdm::UsageError);
}

TEST(Statistics, MedianAndStd) {
    EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
    EXPECT_DOUBLE_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
    EXPECT_THROW(median({}), pdm::UsageError);
    const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
    EXPECT_DOUBLE_EQ(population_std(v), 2.0);
}

pdm::env::DatasetEnvConfig two_engines() {
    pdm::env::DatasetEnvConfig c;
    c.trajectories = {{1, {1.0, 0.8, 0.6, 0.4, 0.25, 0.15, 0.05, 0.0}}, {2, {1.0, 0.7, 0.3, 0.1, 0.0}}};
    return c;
}

TEST(Evaluation, ThresholdPolicyReplacementPoints) {
    const auto c = two_engines();
    const Policy below_02 = [](const Eigen::VectorXd& obs) { return obs(0) <= 0.2 ? 1 : 0; };
    const auto p = predict_replacement_point(below_02, c.trajectories[0], 1);
    EXPECT_EQ(p.cycle, 5u);
    EXPECT_DOUBLE_EQ(p.health, 0.15);
    EXPECT_FALSE(p.failed);
    const auto summary = evaluate_policy(below_02, c);
    EXPECT_DOUBLE_EQ(summary.median_health, (0.15 + 0.1) / 2.0);
    EXPECT_EQ(summary.failures, 0u);
    const pdm::env::RewardConfig r;
    // Engine 1: five holds (bins 16, 12, 8, 5, 3 are all new) then a frugal replace.
    const double e1 = 5 * (r.hold_runtime + r.explore) + r.replace + r.frugal;
    const double e2 = 3 * (r.hold_runtime + r.explore) + r.replace + r.frugal;
    EXPECT_DOUBLE_EQ(summary.mean_return, (e1 + e2) / 2.0);
}

TEST(Evaluation, NeverReplacingFails) {
    const auto c = two_engines();
    const Policy hold = [](const Eigen::VectorXd&) { return 0; };
    const auto summary = evaluate_policy(hold, c);
    EXPECT_EQ(summary.failures, 2u);
    EXPECT_DOUBLE_EQ(summary.median_health, 0.0);
}

TEST(TrainLog, CsvLayout) {
    TrainLog log;
    log.variant = "ddqn_per";
    log.seed = 3;
    log.warmup = 10;
    log.exploration_fraction = 0.8;
    log.rows.push_back({0, 0, 1.5, 1.5, 1.0, 0.0, 0.4, false});
    const std::string csv = log.csv();
    EXPECT_NE(csv.find("# variant=ddqn_per"), std::string::npos);
    EXPECT_NE(csv.find("step,episode,reward,episodic_return,epsilon,sigma_noise,b"), std::string::npos);
    EXPECT_NE(csv.find("0,0,1.5,1.5,1,0,0.4"), std::string::npos);
}

AgentConfig small_agent(Variant v) {
    AgentConfig c;
    c.variant = v;
    c.total_steps = 1500;
    c.warmup = 200;
    c.eval_interval = 0;
    c.net.hidden = {16};
    return c;
}

TEST(Train, IdenticalSeedsGiveIdenticalLogs) {
    for (Variant v : kAllVariants) {
        pdm::env::DatasetEnv a(two_engines(), 5), b(two_engines(), 5);
        const auto ra = train(a, small_agent(v), 5);
        const auto rb = train(b, small_agent(v), 5);
        EXPECT_EQ(ra.log.csv(), rb.log.csv()) << to_string(v);
        EXPECT_TRUE(ra.checkpoint.online == rb.checkpoint.online);
    }
}

TEST(Train, DifferentSeedsDiffer) {
    pdm::env::DatasetEnv a(two_engines(), 5), b(two_engines(), 6);
    EXPECT_NE(train(a, small_agent(Variant::PddqnPn), 5).log.csv(),
              train(b, small_agent(Variant::PddqnPn), 6).log.csv());
}

TEST(Train, RandomVariantDoesNotLearn) {
    pdm::env::DatasetEnv env(two_engines(), 1);
    const auto r = train(env, small_agent(Variant::Random), 1);
    pdm::Rng init = pdm::make_rng(1, "init");
    const int hidden[] = {16};
    EXPECT_TRUE(r.checkpoint.online == DenseNet::make(1, hidden, 2, init));
}

TEST(Train, NoiseScaleIsLoggedOnlyForParameterNoise) {
    pdm::env::DatasetEnv env(two_engines(), 1);
    const auto pn = train(env, small_agent(Variant::PddqnPn), 1);
    EXPECT_GT(pn.log.rows.back().sigma_noise, 0.0);
    EXPECT_NE(pn.log.rows.back().sigma_noise, pn.log.rows.front().sigma_noise);
    const auto dq = train(env, small_agent(Variant::DdqnPer), 1);
    EXPECT_EQ(dq.log.rows.back().sigma_noise, 0.0);
}

TEST(Train, RejectsInvalidConfig) {
    AgentConfig c = small_agent(Variant::DdqnPer);
    c.warmup = 5000;  // above total_steps
    pdm::env::DatasetEnv env(two_engines(), 1);
    EXPECT_THROW(train(env, c, 1), pdm::ConfigError);
}

TEST(Train, DoubleQLearnsTabularOptimalPolicy) {
    pdm::env::SyntheticEnvConfig sc;
    sc.s_max = 4;
    sc.hazard_rate = 0.3;
    sc.repair_effects = {1, 3};
    sc.cost_repair = {2.0, 3.0};
    sc.reward.hold_runtime = 1.0;
    sc.reward.repair = 1.0;
    sc.reward.replace = 1.0;
    sc.reward.frugal = 40.0;
    sc.reward.frugal_threshold = 0.3;
    sc.reward.explore = 0.0;
    const auto mdp = synthetic_abstraction(sc, 0.9);
    const auto vi = tabular_value_iteration(mdp);

    TabularEnv env(mdp, {0, 1, 2, 3}, {4}, 50, 3);
    AgentConfig c;
    c.variant = Variant::DdqnPer;
    c.gamma = 0.9;
    c.total_steps = 30000;
    c.warmup = 2000;
    c.eval_interval = 0;
    c.net.hidden = {32};
    const auto r = train(env, c, 3);
    for (int s = 0; s < 4; ++s) {
        EXPECT_EQ(r.checkpoint.online.greedy_action(TabularEnv::one_hot(s, 5)), vi.policy[static_cast<std::size_t>(s)])
            << "state " << s << " q " << r.checkpoint.online.q_values(TabularEnv::one_hot(s, 5)).transpose();
    }
}

}  // namespace
