#include "pdm/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pdm/error.hpp"

namespace pdm::agent {

TabularMDP::TabularMDP(int n_states, int n_actions, double discount)
    : states(n_states), actions(n_actions), gamma(discount) {
    if (n_states < 1 || n_actions < 1) throw ConfigError("tabular MDP: need at least one state and action");
    transition.assign(static_cast<std::size_t>(n_states * n_actions * n_states), 0.0);
    reward.assign(static_cast<std::size_t>(n_states * n_actions), 0.0);
}

void TabularMDP::validate() const {
    if (states < 1 || actions < 1) throw ConfigError("tabular MDP: need at least one state and action");
    if (transition.size() != static_cast<std::size_t>(states * actions * states) ||
        reward.size() != static_cast<std::size_t>(states * actions)) {
        throw ConfigError("tabular MDP: tensor sizes do not match state/action counts");
    }
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("tabular MDP: gamma must lie in [0, 1]");
    for (int s = 0; s < states; ++s) {
        for (int a = 0; a < actions; ++a) {
            double sum = 0.0;
            for (int n = 0; n < states; ++n) {
                const double pr = p(s, a, n);
                if (!(pr >= 0.0)) throw ConfigError("tabular MDP: negative transition probability");
                sum += pr;
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                throw ConfigError("tabular MDP: P(" + std::to_string(s) + ", " + std::to_string(a) +
                                  ", .) sums to " + std::to_string(sum));
            }
            if (!std::isfinite(r(s, a))) throw ConfigError("tabular MDP: non-finite reward");
        }
    }
}

Eigen::MatrixXd q_from_values(const TabularMDP& mdp, const Eigen::VectorXd& values) {
    Eigen::MatrixXd q(mdp.states, mdp.actions);
    for (int s = 0; s < mdp.states; ++s) {
        for (int a = 0; a < mdp.actions; ++a) {
            double expect = 0.0;
            for (int n = 0; n < mdp.states; ++n) expect += mdp.p(s, a, n) * values(n);
            q(s, a) = mdp.r(s, a) + mdp.gamma * expect;
        }
    }
    return q;
}

TabularPolicy greedy_from_q(const Eigen::MatrixXd& q, double tie_tolerance) {
    TabularPolicy policy(static_cast<std::size_t>(q.rows()));
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
        const double best = q.row(s).maxCoeff();
        for (Eigen::Index a = 0; a < q.cols(); ++a) {
            if (q(s, a) >= best - tie_tolerance) {
                policy[static_cast<std::size_t>(s)] = static_cast<int>(a);
                break;
            }
        }
    }
    return policy;
}

ValueIterationResult tabular_value_iteration(const TabularMDP& mdp, double tolerance, int max_iterations) {
    mdp.validate();
    if (!(mdp.gamma < 1.0)) throw NumericError("value iteration: gamma must be < 1 to guarantee convergence");
    ValueIterationResult out;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(mdp.states);
    const double scale = mdp.gamma / (1.0 - mdp.gamma);
    for (int k = 0; k < max_iterations; ++k) {
        const Eigen::VectorXd next = q_from_values(mdp, v).rowwise().maxCoeff();
        const double change = (next - v).cwiseAbs().maxCoeff();
        out.sup_changes.push_back(change);
        v = next;
        out.iterations = k + 1;
        if (scale * change < tolerance) {
            out.values = v;
            out.q = q_from_values(mdp, v);
            out.policy = greedy_from_q(out.q);
            return out;
        }
    }
    throw NumericError("value iteration did not converge in " + std::to_string(max_iterations) + " sweeps");
}

Eigen::VectorXd evaluate_policy_exact(const TabularMDP& mdp, const TabularPolicy& policy) {
    mdp.validate();
    if (policy.size() != static_cast<std::size_t>(mdp.states)) throw UsageError("policy size != state count");
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(mdp.states, mdp.states);
    Eigen::VectorXd b(mdp.states);
    for (int s = 0; s < mdp.states; ++s) {
        const int act = policy[static_cast<std::size_t>(s)];
        if (act < 0 || act >= mdp.actions) throw UsageError("policy action out of range");
        b(s) = mdp.r(s, act);
        for (int n = 0; n < mdp.states; ++n) a(s, n) -= mdp.gamma * mdp.p(s, act, n);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) throw NumericError("policy evaluation: singular system (gamma = 1 without absorption?)");
    return lu.solve(b);
}

EnumerationResult enumerate_policies(const TabularMDP& mdp, std::size_t limit) {
    mdp.validate();
    double count = std::pow(static_cast<double>(mdp.actions), mdp.states);
    if (count > static_cast<double>(limit)) throw UsageError("enumerate_policies: too many policies");
    const auto total = static_cast<std::size_t>(count);

    std::vector<Eigen::VectorXd> values;
    std::vector<TabularPolicy> policies;
    values.reserve(total);
    TabularPolicy policy(static_cast<std::size_t>(mdp.states), 0);
    for (std::size_t k = 0; k < total; ++k) {
        // Odometer with state 0 most significant: lexicographic order.
        std::size_t code = k;
        for (int s = mdp.states - 1; s >= 0; --s) {
            policy[static_cast<std::size_t>(s)] = static_cast<int>(code % static_cast<std::size_t>(mdp.actions));
            code /= static_cast<std::size_t>(mdp.actions);
        }
        values.push_back(evaluate_policy_exact(mdp, policy));
        policies.push_back(policy);
    }
    // The optimal value is the pointwise maximum over deterministic policies.
    Eigen::VectorXd best = values.front();
    for (const auto& v : values) best = best.cwiseMax(v);

    EnumerationResult out;
    out.policies_checked = total;
    for (std::size_t k = 0; k < total; ++k) {
        if ((values[k] - best).maxCoeff() >= -1e-9 && (best - values[k]).maxCoeff() <= 1e-9) {
            out.values = values[k];
            out.policy = policies[k];
            return out;
        }
    }
    throw NumericError("enumerate_policies: no policy attains the pointwise maximum");
}

void tabular_q_update(Eigen::MatrixXd& q, int s, int a, double r, int s_next, double alpha, double gamma,
                      bool terminal) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw UsageError("tabular_q_update: alpha must lie in (0, 1]");
    if (s < 0 || s >= q.rows() || s_next < 0 || s_next >= q.rows() || a < 0 || a >= q.cols()) {
        throw UsageError("tabular_q_update: index out of range");
    }
    const double target = r + (terminal ? 0.0 : gamma * q.row(s_next).maxCoeff());
    q(s, a) = (1.0 - alpha) * q(s, a) + alpha * target;
}

Eigen::MatrixXd q_learning(const TabularMDP& mdp, const QLearningConfig& config, Rng& rng) {
    mdp.validate();
    if (!(config.step_exponent > 0.5 && config.step_exponent <= 1.0)) {
        throw UsageError("q_learning: step exponent must lie in (0.5, 1]");
    }
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(mdp.states, mdp.actions);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    // Golden-ratio rotation per pair, from a random phase.
    constexpr double kGolden = 0.6180339887498949;
    std::vector<double> phase(static_cast<std::size_t>(mdp.states * mdp.actions));
    if (config.sampler == QSampler::Rotation) {
        for (double& p : phase) p = unit(rng);
    }
    for (std::size_t n = 0; n < config.sweeps; ++n) {
        const double alpha =
            1.0 / std::pow(1.0 + (1.0 - mdp.gamma) * static_cast<double>(n), config.step_exponent);
        for (int s = 0; s < mdp.states; ++s) {
            for (int a = 0; a < mdp.actions; ++a) {
                double u;
                if (config.sampler == QSampler::Rotation) {
                    double& p = phase[static_cast<std::size_t>(s * mdp.actions + a)];
                    p += kGolden;
                    if (p >= 1.0) p -= 1.0;
                    u = p;
                } else {
                    u = unit(rng);
                }
                int next = mdp.states - 1;
                for (int k = 0; k < mdp.states; ++k) {
                    u -= mdp.p(s, a, k);
                    if (u < 0.0) {
                        next = k;
                        break;
                    }
                }
                tabular_q_update(q, s, a, mdp.r(s, a), next, alpha, mdp.gamma);
            }
        }
    }
    return q;
}

TabularMDP synthetic_abstraction(const env::SyntheticEnvConfig& config, double gamma) {
    config.validate();
    const int n = config.s_max + 1;
    const int actions = 2 + config.repair_types();
    TabularMDP mdp(n, actions, gamma);
    const double advance = 1.0 - std::exp(-config.hazard_rate);
    const auto& rw = config.reward;
    auto maintenance_bonus = [&](int s) {
        return 1.0 - static_cast<double>(s) / config.s_max <= rw.frugal_threshold ? rw.frugal : 0.0;
    };
    const int failed = config.s_max;
    for (int a = 0; a < actions; ++a) mdp.p(failed, a, failed) = 1.0;

    for (int s = 0; s < failed; ++s) {
        // Hold
        mdp.p(s, 0, s) += 1.0 - advance;
        mdp.p(s, 0, s + 1) += advance;
        mdp.r(s, 0) = (1.0 - advance) * rw.hold_runtime + advance * (s + 1 == failed ? rw.penalty : rw.hold_runtime);
        // Replace: fresh state uniform over {0, 1, 2}
        for (int k = 0; k < 3; ++k) mdp.p(s, 1, k) += 1.0 / 3.0;
        mdp.r(s, 1) = rw.replace + maintenance_bonus(s);
        for (int type = 0; type < config.repair_types(); ++type) {
            const int a = 2 + type;
            mdp.p(s, a, std::max(0, s - config.repair_effects[static_cast<std::size_t>(type)])) = 1.0;
            mdp.r(s, a) = rw.repair + maintenance_bonus(s);
        }
    }
    mdp.validate();
    return mdp;
}

TabularEnv::TabularEnv(TabularMDP mdp, std::vector<int> start_states, std::vector<int> absorbing, int horizon,
                       std::uint64_t seed)
    : mdp_(std::move(mdp)),
      start_states_(std::move(start_states)),
      absorbing_(std::move(absorbing)),
      horizon_(horizon),
      rng_(stream_seed(seed, "env")) {
    mdp_.validate();
    if (start_states_.empty()) throw ConfigError("TabularEnv: no start states");
    for (int s : start_states_) {
        if (s < 0 || s >= mdp_.states || this->absorbing(s)) throw ConfigError("TabularEnv: invalid start state");
    }
    if (horizon_ < 1) throw ConfigError("TabularEnv: horizon must be positive");
}

bool TabularEnv::absorbing(int s) const {
    return std::find(absorbing_.begin(), absorbing_.end(), s) != absorbing_.end();
}

Eigen::VectorXd TabularEnv::one_hot(int state, int states) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(states);
    v(state) = 1.0;
    return v;
}

Eigen::VectorXd TabularEnv::reset() {
    std::uniform_int_distribution<std::size_t> pick(0, start_states_.size() - 1);
    state_ = start_states_[pick(rng_)];
    t_ = 0;
    return one_hot(state_, mdp_.states);
}

env::StepOutcome TabularEnv::step(int action) {
    if (action < 0 || action >= mdp_.actions) throw UsageError("TabularEnv: action index out of range");
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    int next = mdp_.states - 1;
    for (int k = 0; k < mdp_.states; ++k) {
        u -= mdp_.p(state_, action, k);
        if (u < 0.0) {
            next = k;
            break;
        }
    }
    env::StepOutcome out;
    // Expected reward: same Q* as the sampled one, lower variance.
    out.reward = mdp_.r(state_, action);
    state_ = next;
    ++t_;
    out.info.failure = absorbing(next);
    out.info.truncated = !out.info.failure && t_ >= horizon_;
    out.info.horizon = out.info.truncated;
    out.done = out.info.failure || out.info.truncated;
    out.observation = one_hot(next, mdp_.states);
    return out;
}

env::TraceRow TabularEnv::trace_state() const {
    env::TraceRow row;
    row.t = t_;
    row.state = state_;
    return row;
}

}  // namespace pdm::agent
