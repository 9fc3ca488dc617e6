#include "pdm/env.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pdm/error.hpp"

namespace pdm::env {

int Action::index() const {
    switch (kind) {
        case ActionKind::Hold: return 0;
        case ActionKind::Replace: return 1;
        case ActionKind::Repair: return 2 + repair_type;
    }
    return 0;
}

Action Action::from_index(int index) {
    if (index < 0) throw UsageError("negative action index");
    if (index == 0) return hold();
    if (index == 1) return replace();
    return repair(index - 2);
}

std::string to_string(const Action& action) {
    switch (action.kind) {
        case ActionKind::Hold: return "hold";
        case ActionKind::Replace: return "replace";
        case ActionKind::Repair: return "repair" + std::to_string(action.repair_type);
    }
    return "?";
}

int discretize(double x, int bins) {
    if (bins < 2) throw UsageError("discretize: bins must be >= 2");
    if (!(x >= -1e-9 && x <= 1.0 + 1e-9)) {
        throw UsageError("discretize: value " + std::to_string(x) + " outside [0, 1]");
    }
    const double scaled = std::floor(x * bins);
    return static_cast<int>(std::clamp(scaled, 0.0, static_cast<double>(bins - 1)));
}

void RewardConfig::validate() const {
    if (!(penalty < 0.0)) throw ConfigError("reward: penalty must be negative");
    if (!(hold_runtime > 0.0)) throw ConfigError("reward: hold_runtime must be positive");
    if (!(hold_runtime <= repair && repair <= replace)) {
        throw ConfigError("reward: need hold_runtime <= repair <= replace");
    }
    if (!(frugal_threshold > 0.0 && frugal_threshold < 1.0)) {
        throw ConfigError("reward: frugal_threshold must lie in (0, 1)");
    }
    if (!std::isfinite(explore) || !std::isfinite(frugal)) throw ConfigError("reward: non-finite bonus");
}

double reward_of(const RewardEvent& event, const RewardConfig& config) {
    if (event.failed || !event.valid) return config.penalty;
    switch (event.action) {
        case ActionKind::Hold:
            return config.hold_runtime + (event.first_visit ? config.explore : 0.0);
        case ActionKind::Replace:
            return config.replace + (event.health_before <= config.frugal_threshold ? config.frugal : 0.0);
        case ActionKind::Repair:
            return config.repair + (event.health_before <= config.frugal_threshold ? config.frugal : 0.0);
    }
    return 0.0;
}

// --- synthetic ---------------------------------------------------------------

std::array<std::array<double, 2>, 2> SyntheticEnvConfig::temp_chain() const {
    return {{{1.0 - p_low_to_high, p_low_to_high}, {p_high_to_low, 1.0 - p_high_to_low}}};
}

void SyntheticEnvConfig::validate() const {
    if (s_max < 3) throw ConfigError("synthetic env: s_max must be >= 3 (resets draw from {0,1,2})");
    if (!(hazard_rate >= 0.0) || !std::isfinite(hazard_rate)) {
        throw ConfigError("synthetic env: hazard rate must be finite and >= 0");
    }
    for (double p : {p_low_to_high, p_high_to_low}) {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("synthetic env: temperature probabilities must lie in [0, 1]");
    }
    if (high_temp_skip_min < 1 || high_temp_skip_min > high_temp_skip_max) {
        throw ConfigError("synthetic env: high-temperature skip range is empty");
    }
    if (repair_effects.size() != cost_repair.size()) {
        throw ConfigError("synthetic env: repair_effects and cost_repair differ in length");
    }
    for (int phi : repair_effects) {
        if (phi < 0) throw ConfigError("synthetic env: repair effect must be >= 0");
    }
    if (!(cost_replace > 0.0)) throw ConfigError("synthetic env: replace cost must be positive");
    for (double c : cost_repair) {
        if (!(c > 0.0)) throw ConfigError("synthetic env: repair costs must be positive");
    }
    if (!(budget_init > 0.0)) throw ConfigError("synthetic env: initial budget must be positive");
    if (horizon < 1) throw ConfigError("synthetic env: horizon must be positive");

    const double max_repair = cost_repair.empty() ? 0.0 : *std::max_element(cost_repair.begin(), cost_repair.end());
    if (regime == CostRegime::ReplaceDominant) {
        for (double c : cost_repair) {
            if (cost_replace < 2.0 * c) {
                throw ConfigError("synthetic env: cost constraint violated (replace cost must be >= 2x every repair cost)");
            }
        }
        if (budget_init < cost_replace) throw ConfigError("synthetic env: initial budget below replace cost");
    } else {
        for (double c : cost_repair) {
            if (cost_replace > c / 2.0) {
                throw ConfigError("synthetic env: cost constraint violated (replace cost must be <= half of every repair cost)");
            }
        }
        if (budget_init < max_repair) throw ConfigError("synthetic env: initial budget below repair cost");
    }
    reward.validate();
}

namespace {

int draw_fresh_state(Rng& rng) { return std::uniform_int_distribution<int>(0, 2)(rng); }

double synthetic_health(int sensor_state, int s_max) {
    return 1.0 - static_cast<double>(sensor_state) / static_cast<double>(s_max);
}

}  // namespace

EnvState synthetic_reset(const SyntheticEnvConfig& config, Rng& rng) {
    config.validate();
    EnvState s;
    s.sensor_state = draw_fresh_state(rng);
    s.temp = 0;
    s.budget = config.budget_init;
    s.t = 0;
    s.visited.assign(static_cast<std::size_t>(config.s_max) + 1, false);
    s.visited[static_cast<std::size_t>(s.sensor_state)] = true;
    return s;
}

SyntheticStep synthetic_step(const EnvState& state, const Action& action, const SyntheticEnvConfig& config,
                             Rng& rng) {
    if (state.terminal) throw UsageError("synthetic_step: episode already terminated");
    if (action.kind == ActionKind::Repair &&
        (action.repair_type < 0 || action.repair_type >= config.repair_types())) {
        throw UsageError("synthetic_step: unknown repair type " + std::to_string(action.repair_type));
    }

    SyntheticStep out;
    out.next = state;
    EnvState& next = out.next;
    if (next.visited.size() != static_cast<std::size_t>(config.s_max) + 1) {
        next.visited.assign(static_cast<std::size_t>(config.s_max) + 1, false);
    }

    RewardEvent event;
    event.action = action.kind;
    event.health_before = synthetic_health(state.sensor_state, config.s_max);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    switch (action.kind) {
        case ActionKind::Hold: {
            if (unit(rng) < 1.0 - std::exp(-config.hazard_rate)) {
                const int jump = state.temp == 0 ? 1
                                                 : std::uniform_int_distribution<int>(config.high_temp_skip_min,
                                                                                      config.high_temp_skip_max)(rng);
                next.sensor_state = std::min(state.sensor_state + jump, config.s_max);
            }
            break;
        }
        case ActionKind::Replace: {
            if (state.budget >= config.cost_replace) {
                next.sensor_state = draw_fresh_state(rng);
                next.budget = state.budget - config.cost_replace;
            } else {
                event.valid = false;
            }
            break;
        }
        case ActionKind::Repair: {
            const auto type = static_cast<std::size_t>(action.repair_type);
            if (state.budget >= config.cost_repair[type]) {
                next.sensor_state = std::max(0, state.sensor_state - config.repair_effects[type]);
                next.budget = state.budget - config.cost_repair[type];
            } else {
                event.valid = false;
            }
            break;
        }
    }

    // Temperature mode evolves every step.
    const auto chain = config.temp_chain();
    next.temp = unit(rng) < chain[static_cast<std::size_t>(state.temp)][1] ? 1 : 0;
    next.t = state.t + 1;

    event.failed = next.sensor_state >= config.s_max;
    const auto bin = static_cast<std::size_t>(next.sensor_state);
    event.first_visit = !next.visited[bin];
    next.visited[bin] = true;

    out.reward = reward_of(event, config.reward);
    out.info.failure = event.failed;
    out.info.valid = event.valid;
    out.info.horizon = !event.failed && next.t >= config.horizon;
    out.info.budget_after = next.budget;
    out.done = out.info.failure || out.info.horizon;
    next.terminal = out.done;
    return out;
}

Eigen::VectorXd synthetic_features(const EnvState& state, const SyntheticEnvConfig& config) {
    Eigen::VectorXd f(4);
    f << static_cast<double>(state.sensor_state) / config.s_max, static_cast<double>(state.temp),
        state.budget / config.budget_init, static_cast<double>(state.t) / config.horizon;
    return f;
}

SyntheticEnv::SyntheticEnv(SyntheticEnvConfig config, std::uint64_t seed)
    : config_(std::move(config)), rng_(stream_seed(seed, "env")) {
    config_.validate();
    state_.terminal = true;
}

Eigen::VectorXd SyntheticEnv::reset() {
    state_ = synthetic_reset(config_, rng_);
    return synthetic_features(state_, config_);
}

StepOutcome SyntheticEnv::step(int action) {
    if (action < 0 || static_cast<std::size_t>(action) >= action_count()) {
        throw UsageError("SyntheticEnv: action index out of range");
    }
    auto result = synthetic_step(state_, Action::from_index(action), config_, rng_);
    state_ = std::move(result.next);
    return {synthetic_features(state_, config_), result.reward, result.done, result.info};
}

TraceRow SyntheticEnv::trace_state() const {
    TraceRow row;
    row.t = state_.t;
    row.state = state_.sensor_state;
    row.temp = state_.temp;
    row.budget = state_.budget;
    return row;
}

// --- dataset -------------------------------------------------------------------

std::string to_string(SamplingMode mode) {
    switch (mode) {
        case SamplingMode::Sequential: return "sequential";
        case SamplingMode::RandomEngine: return "random-engine";
        case SamplingMode::RandomStart: return "random-start";
    }
    return "?";
}

SamplingMode sampling_mode_from_string(const std::string& name) {
    if (name == "sequential") return SamplingMode::Sequential;
    if (name == "random-engine") return SamplingMode::RandomEngine;
    if (name == "random-start") return SamplingMode::RandomStart;
    throw ConfigError("unknown sampling mode '" + name + "'");
}

void DatasetEnvConfig::validate() const {
    if (bins < 2) throw ConfigError("dataset env: bins must be >= 2");
    if (window < 1) throw ConfigError("dataset env: window must be >= 1");
    if (trajectories.empty()) throw ConfigError("dataset env: no trajectories");
    for (const auto& traj : trajectories) {
        if (traj.health.size() < 2) {
            throw ConfigError("dataset env: trajectory " + std::to_string(traj.unit_id) + " shorter than 2 cycles");
        }
        for (double h : traj.health) {
            if (!(h >= 0.0 && h <= 1.0)) {
                throw ConfigError("dataset env: trajectory " + std::to_string(traj.unit_id) +
                                  " has health outside [0, 1]");
            }
        }
    }
    reward.validate();
}

Eigen::VectorXd dataset_features(std::span<const double> health, std::size_t index, int window) {
    Eigen::VectorXd f(window);
    for (int k = 0; k < window; ++k) {
        const auto offset = static_cast<std::ptrdiff_t>(index) - (window - 1 - k);
        f(k) = health[offset < 0 ? 0 : static_cast<std::size_t>(offset)];
    }
    return f;
}

DatasetEnv::DatasetEnv(DatasetEnvConfig config, std::uint64_t seed)
    : config_(std::move(config)), rng_(stream_seed(seed, "env")) {
    config_.validate();
}

DatasetObservation DatasetEnv::begin_episode(std::size_t engine, std::size_t start) {
    if (engine >= config_.trajectories.size()) throw UsageError("DatasetEnv: engine index out of range");
    const auto& h = config_.trajectories[engine].health;
    if (start + 1 >= h.size()) throw UsageError("DatasetEnv: start must precede the failure cycle");
    engine_ = engine;
    index_ = start;
    steps_ = 0;
    done_ = false;
    visited_.assign(static_cast<std::size_t>(config_.bins), false);
    visited_[static_cast<std::size_t>(discretize(h[start], config_.bins))] = true;
    return observation();
}

DatasetObservation DatasetEnv::reset(std::uint64_t seed) {
    rng_.seed(stream_seed(seed, "env"));
    next_sequential_ = 0;
    reset();
    return observation();
}

Eigen::VectorXd DatasetEnv::reset() {
    const std::size_t n = config_.trajectories.size();
    std::size_t engine = 0;
    std::size_t start = 0;
    switch (config_.mode) {
        case SamplingMode::Sequential:
            engine = next_sequential_;
            next_sequential_ = (next_sequential_ + 1) % n;
            break;
        case SamplingMode::RandomEngine:
            engine = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
            break;
        case SamplingMode::RandomStart: {
            engine = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
            const std::size_t len = config_.trajectories[engine].health.size();
            start = std::uniform_int_distribution<std::size_t>(0, len - 2)(rng_);
            break;
        }
    }
    return begin_episode(engine, start).features;
}

DatasetObservation DatasetEnv::reset_to(std::size_t engine, std::size_t start) { return begin_episode(engine, start); }

DatasetObservation DatasetEnv::observation() const {
    DatasetObservation obs;
    obs.engine = engine_;
    obs.index = index_;
    obs.features = dataset_features(health(), index_, config_.window);
    obs.bins.resize(static_cast<std::size_t>(config_.window));
    for (int k = 0; k < config_.window; ++k) {
        obs.bins[static_cast<std::size_t>(k)] = discretize(obs.features(k), config_.bins);
    }
    return obs;
}

double DatasetEnv::current_health() const { return health()[index_]; }

StepOutcome DatasetEnv::step(int action) {
    if (action != kHold && action != kReplace) throw UsageError("DatasetEnv: action index out of range");
    return step(Action::from_index(action));
}

StepOutcome DatasetEnv::step(const Action& action) {
    if (action.kind == ActionKind::Repair) {
        throw UsageError("DatasetEnv: repair is not supported on the dataset environment");
    }
    if (done_) throw UsageError("DatasetEnv: episode already terminated");

    const auto& h = health();
    const std::size_t failure_index = h.size() - 1;
    RewardEvent event;
    event.action = action.kind;
    event.health_before = h[index_];

    StepOutcome out;
    if (action.kind == ActionKind::Replace) {
        out.done = true;
    } else {
        ++index_;
        if (index_ >= failure_index) {
            event.failed = true;
            out.done = true;
        } else {
            const auto bin = static_cast<std::size_t>(discretize(h[index_], config_.bins));
            event.first_visit = !visited_[bin];
            visited_[bin] = true;
        }
    }
    ++steps_;
    done_ = out.done;
    out.reward = reward_of(event, config_.reward);
    out.info.failure = event.failed;
    out.info.valid = true;
    out.observation = dataset_features(h, index_, config_.window);
    return out;
}

TraceRow DatasetEnv::trace_state() const {
    TraceRow row;
    row.t = steps_;
    row.state = current_health();
    return row;
}

}  // namespace pdm::env
