#include "pdm/agent.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "pdm/error.hpp"
#include "pdm/io.hpp"

namespace pdm::agent {

std::string to_string(Variant variant) {
    switch (variant) {
        case Variant::Random: return "random";
        case Variant::DqnVanilla: return "dqn_vanilla";
        case Variant::DdqnPer: return "ddqn_per";
        case Variant::PddqnPn: return "pddqn_pn";
    }
    return "?";
}

Variant variant_from_string(const std::string& name) {
    for (Variant v : kAllVariants) {
        if (to_string(v) == name) return v;
    }
    throw ConfigError("unknown variant '" + name + "' (random, dqn_vanilla, ddqn_per, pddqn_pn)");
}

bool uses_double_q(Variant variant) { return variant == Variant::DdqnPer || variant == Variant::PddqnPn; }
bool uses_priorities(Variant variant) { return variant == Variant::DdqnPer || variant == Variant::PddqnPn; }
bool uses_parameter_noise(Variant variant) { return variant == Variant::PddqnPn; }

void AgentConfig::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("agent: gamma must lie in [0, 1]");
    if (batch == 0) throw ConfigError("agent: batch must be positive");
    if (target_sync == 0) throw ConfigError("agent: target_sync must be positive");
    if (total_steps == 0) throw ConfigError("agent: total_steps must be positive");
    if (warmup > total_steps) throw ConfigError("agent: warmup must not exceed total_steps");
    if (!(exploration_fraction > 0.0 && exploration_fraction <= 1.0)) {
        throw ConfigError("agent: exploration_fraction must lie in (0, 1]");
    }
    for (double e : {epsilon_start, epsilon_end, noise_epsilon}) {
        if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("agent: epsilon values must lie in [0, 1]");
    }
    for (int w : net.hidden) {
        if (w < 1) throw ConfigError("agent: hidden widths must be positive");
    }
    if (!(adam.learning_rate > 0.0)) throw ConfigError("agent: learning rate must be positive");
    if (!(noise.initial_sigma > 0.0)) throw ConfigError("agent: initial noise sigma must be positive");
    if (!(noise.adapt_factor > 1.0)) throw ConfigError("agent: noise adapt_factor must exceed 1");
    if (!(noise.target_divergence >= 0.0 && noise.target_divergence <= 1.0)) {
        throw ConfigError("agent: noise target divergence must lie in [0, 1]");
    }
    if (!(loss.huber_delta > 0.0)) throw ConfigError("agent: huber threshold must be positive");
    replay.validate();
}

double epsilon_at(const AgentConfig& config, std::size_t step) {
    if (config.variant == Variant::Random) return 1.0;
    if (uses_parameter_noise(config.variant)) return config.noise_epsilon;
    const double horizon = config.exploration_fraction * static_cast<double>(config.total_steps);
    if (static_cast<double>(step) >= horizon) return config.epsilon_end;
    const double frac = static_cast<double>(step) / horizon;
    return config.epsilon_start + frac * (config.epsilon_end - config.epsilon_start);
}

TdBatch gather(std::span<const replay::Transition* const> transitions) {
    if (transitions.empty()) throw UsageError("gather: empty batch");
    const auto n = static_cast<Eigen::Index>(transitions.size());
    const auto dim = transitions.front()->state.size();
    TdBatch b;
    b.states.resize(n, dim);
    b.next_states.resize(n, dim);
    b.rewards.resize(n);
    b.actions.resize(transitions.size());
    b.done.resize(transitions.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& t = *transitions[static_cast<std::size_t>(i)];
        b.states.row(i) = t.state.transpose();
        b.next_states.row(i) = t.next_state.transpose();
        b.rewards(i) = t.reward;
        b.actions[static_cast<std::size_t>(i)] = t.action;
        b.done[static_cast<std::size_t>(i)] = t.done ? 1 : 0;
    }
    return b;
}

namespace {

void check_targets_input(const TdBatch& batch) {
    if (batch.rewards.size() == 0) throw UsageError("td target: empty batch");
    if (batch.next_states.rows() != batch.rewards.size() ||
        static_cast<Eigen::Index>(batch.done.size()) != batch.rewards.size()) {
        throw UsageError("td target: inconsistent batch shapes");
    }
}

}  // namespace

Eigen::VectorXd td_target_dqn(const TdBatch& batch, const nn::DenseNet& target, double gamma) {
    check_targets_input(batch);
    const Eigen::MatrixXd q_next = target.forward(batch.next_states);
    Eigen::VectorXd y = batch.rewards;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!batch.done[static_cast<std::size_t>(i)]) y(i) += gamma * q_next.row(i).maxCoeff();
    }
    return y;
}

Eigen::VectorXd td_target_ddqn(const TdBatch& batch, const nn::DenseNet& online, const nn::DenseNet& target,
                               double gamma) {
    check_targets_input(batch);
    const Eigen::MatrixXd q_online = online.forward(batch.next_states);
    const Eigen::MatrixXd q_target = target.forward(batch.next_states);
    Eigen::VectorXd y = batch.rewards;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (batch.done[static_cast<std::size_t>(i)]) continue;
        Eigen::Index best = 0;
        q_online.row(i).maxCoeff(&best);
        y(i) += gamma * q_target(i, best);
    }
    return y;
}

int select_action(const nn::DenseNet& policy_net, const Eigen::VectorXd& observation, double epsilon,
                  Variant variant, int action_count, Rng& rng) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw UsageError("select_action: epsilon must lie in [0, 1]");
    if (action_count < 1) throw UsageError("select_action: no actions");
    std::uniform_int_distribution<int> uniform(0, action_count - 1);
    if (variant == Variant::Random) return uniform(rng);
    // Always draw the coin so the stream position does not depend on epsilon.
    const double coin = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (coin < epsilon) return uniform(rng);
    return policy_net.greedy_action(observation);
}

std::string TrainLog::csv() const {
    std::string out = "# variant=" + variant + "\r\n# seed=" + std::to_string(seed) + "\r\n# warmup=" +
                      std::to_string(warmup) + "\r\n# exploration_fraction=" +
                      io::format_double(exploration_fraction) + "\r\n";
    io::CsvTable table({"step", "episode", "reward", "episodic_return", "epsilon", "sigma_noise", "b"});
    for (const auto& r : rows) {
        table.row({std::to_string(r.step), std::to_string(r.episode), io::format_double(r.reward),
                   io::format_double(r.episodic_return), io::format_double(r.epsilon),
                   io::format_double(r.sigma_noise), io::format_double(r.b)});
    }
    return out + table.str();
}

std::string TrainLog::snapshots_csv() const {
    io::CsvTable table({"step", "score", "mean_return", "median_replacement_health"});
    for (const auto& s : snapshots) {
        table.row({std::to_string(s.step), io::format_double(s.score), io::format_double(s.mean_return),
                   io::format_double(s.median_replacement_health)});
    }
    return table.str();
}

TrainResult train(env::Environment& environment, const AgentConfig& config, std::uint64_t seed,
                  const Evaluator& evaluator) {
    config.validate();
    const auto start_time = std::chrono::steady_clock::now();
    const int obs_dim = static_cast<int>(environment.observation_dim());
    const int n_actions = static_cast<int>(environment.action_count());
    const Variant variant = config.variant;

    Rng init_rng = make_rng(seed, "init");
    Rng rng = make_rng(seed, "agent");
    Rng noise_rng = make_rng(seed, "noise");

    nn::DenseNet online = nn::DenseNet::make(obs_dim, config.net.hidden, n_actions, init_rng);
    nn::DenseNet target = nn::sync_target(online);
    nn::AdamState adam = nn::AdamState::for_net(online, config.adam);
    nn::NoiseState noise = nn::NoiseState::from(config.noise);

    replay::PERConfig per = config.replay;
    if (!uses_priorities(variant)) per.alpha = 0.0;
    // b reaches b_end at the end of training.
    per.b_anneal_steps = config.total_steps;
    replay::PrioritizedReplay buffer(per);

    const bool noisy = uses_parameter_noise(variant);
    nn::DenseNet perturbed = noisy ? nn::perturb(online, noise.sigma, noise_rng) : nn::DenseNet{};

    TrainResult result;
    TrainLog& log = result.log;
    log.warmup = config.warmup;
    log.exploration_fraction = config.exploration_fraction;
    log.variant = to_string(variant);
    log.seed = seed;
    log.rows.reserve(config.total_steps);

    Eigen::VectorXd obs = environment.reset();
    if (obs.size() != obs_dim) {
        throw UsageError("train: observation dimension " + std::to_string(obs.size()) +
                         " does not match network input " + std::to_string(obs_dim));
    }

    auto snapshot = [&](std::size_t step) {
        EvalSnapshot snap = evaluator(online);
        snap.step = step;
        log.snapshots.push_back(snap);
    };

    std::size_t episode = 0;
    double episode_return = 0.0;
    const Eigen::VectorXd all_ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(config.batch));
    std::uniform_int_distribution<int> uniform_action(0, n_actions - 1);

    for (std::size_t step = 0; step < config.total_steps; ++step) {
        const bool warm = step < config.warmup;
        const double epsilon = warm ? 1.0 : epsilon_at(config, step);
        int action = 0;
        if (warm) {
            action = uniform_action(rng);
        } else {
            action = select_action(noisy ? perturbed : online, obs, epsilon, variant, n_actions, rng);
        }

        env::StepOutcome out = environment.step(action);
        if (!std::isfinite(out.reward)) throw NumericError("train: non-finite reward from environment");
        const bool terminal = out.done && !out.info.truncated;
        buffer.push({obs, action, out.reward, out.observation, terminal});
        episode_return += out.reward;

        if (variant != Variant::Random && !warm && buffer.size() >= config.batch) {
            const auto sampled = buffer.sample(config.batch, step, rng);
            const TdBatch tb = gather(sampled.transitions);
            const Eigen::VectorXd y = uses_double_q(variant) ? td_target_ddqn(tb, online, target, config.gamma)
                                                             : td_target_dqn(tb, target, config.gamma);
            const auto grad = nn::backward(online, tb.states, tb.actions, y,
                                           uses_priorities(variant) ? sampled.weights : all_ones, config.loss);
            nn::adam_step(online, grad.gradients, adam);
            if (!online.all_finite()) throw NumericError("train: network parameters diverged");
            if (uses_priorities(variant)) {
                buffer.update_priorities(sampled.indices,
                                         std::span<const double>(grad.abs_td.data(),
                                                                 static_cast<std::size_t>(grad.abs_td.size())));
            }
            if (noisy) {
                const nn::DenseNet probe = nn::perturb(online, noise.sigma, noise_rng);
                nn::adapt_noise(noise, nn::action_disagreement(online, probe, tb.states));
            }
        }
        if ((step + 1) % config.target_sync == 0) target = nn::sync_target(online);

        log.rows.push_back({step, episode, out.reward, episode_return, epsilon, noisy ? noise.sigma : 0.0,
                            anneal_b(per, step), out.done});

        if (out.done) {
            log.episode_returns.push_back(episode_return);
            ++episode;
            episode_return = 0.0;
            obs = environment.reset();
            if (noisy) perturbed = nn::perturb(online, noise.sigma, noise_rng);
        } else {
            obs = std::move(out.observation);
        }

        if (evaluator && config.eval_interval > 0 && (step + 1) % config.eval_interval == 0) snapshot(step + 1);
    }
    if (evaluator && (config.eval_interval == 0 || config.total_steps % config.eval_interval != 0)) {
        snapshot(config.total_steps);
    }

    std::ostringstream rng_text;
    rng_text << rng;
    result.checkpoint = {online, target, adam, noise, rng_text.str(), log.variant,
                         static_cast<std::int64_t>(config.total_steps)};
    log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
    return result;
}

// --- evaluation ----------------------------------------------------------------

Policy greedy_policy(const nn::DenseNet& net) {
    return [&net](const Eigen::VectorXd& obs) { return net.greedy_action(obs); };
}

Policy random_policy(Rng& rng) {
    return [&rng](const Eigen::VectorXd&) { return std::uniform_int_distribution<int>(0, 1)(rng); };
}

ReplacementPoint predict_replacement_point(const Policy& policy, const cmapss::HealthTrajectory& trajectory,
                                           int window, std::size_t start) {
    const auto& h = trajectory.health;
    if (h.size() < 2) throw UsageError("predict_replacement_point: trajectory needs at least 2 cycles");
    if (start + 1 >= h.size()) throw UsageError("predict_replacement_point: start must precede the failure cycle");
    for (std::size_t i = start; i + 1 < h.size(); ++i) {
        if (policy(env::dataset_features(h, i, window)) == env::DatasetEnv::kReplace) return {i, h[i], false};
    }
    return {h.size() - 1, h.back(), true};
}

ReplacementPoint predict_replacement_point(const nn::DenseNet& net, const cmapss::HealthTrajectory& trajectory,
                                           int window, std::size_t start) {
    return predict_replacement_point(greedy_policy(net), trajectory, window, start);
}

double median(std::vector<double> values) {
    if (values.empty()) throw UsageError("median of an empty set");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

double population_std(std::span<const double> values) {
    if (values.empty()) return 0.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size()));
}

PolicySummary evaluate_policy(const Policy& policy, const env::DatasetEnvConfig& config) {
    if (config.trajectories.empty()) throw UsageError("evaluate_policy: no trajectories");
    env::DatasetEnv environment(config, 0);
    PolicySummary summary;
    std::vector<double> healths;
    double total = 0.0;
    for (std::size_t e = 0; e < config.trajectories.size(); ++e) {
        auto obs = environment.reset_to(e, 0);
        Eigen::VectorXd features = obs.features;
        ReplacementPoint point;
        double ret = 0.0;
        for (;;) {
            const std::size_t index = environment.index();
            const double health = environment.current_health();
            const int action = policy(features);
            const auto out = environment.step(action);
            ret += out.reward;
            if (out.done) {
                if (out.info.failure) {
                    point = {environment.index(), environment.current_health(), true};
                } else {
                    point = {index, health, false};
                }
                break;
            }
            features = out.observation;
        }
        total += ret;
        summary.failures += point.failed ? 1 : 0;
        healths.push_back(point.health);
        summary.points.push_back(point);
    }
    summary.mean_return = total / static_cast<double>(config.trajectories.size());
    summary.median_health = median(healths);
    summary.std_health = population_std(healths);
    return summary;
}

PolicySummary evaluate_policy(const nn::DenseNet& net, const env::DatasetEnvConfig& config) {
    return evaluate_policy(greedy_policy(net), config);
}

}  // namespace pdm::agent
