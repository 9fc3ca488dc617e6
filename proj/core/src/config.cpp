#include "pdm/config.hpp"

#include <set>
#include <type_traits>

#include <json.hpp>

#include "pdm/error.hpp"
#include "pdm/io.hpp"

namespace pdm::config {

using nlohmann::json;

std::string to_string(DataSource source) {
    switch (source) {
        case DataSource::Synthetic: return "synthetic";
        case DataSource::Cmapss: return "cmapss";
        case DataSource::HealthCsv: return "health-csv";
    }
    return "?";
}

std::string to_string(EnvKind kind) { return kind == EnvKind::Dataset ? "dataset" : "synthetic"; }

namespace {

DataSource source_from_string(const std::string& s) {
    if (s == "synthetic") return DataSource::Synthetic;
    if (s == "cmapss") return DataSource::Cmapss;
    if (s == "health-csv") return DataSource::HealthCsv;
    throw ConfigError("data.source: unknown source '" + s + "' (synthetic, cmapss, health-csv)");
}

EnvKind env_kind_from_string(const std::string& s) {
    if (s == "dataset") return EnvKind::Dataset;
    if (s == "synthetic") return EnvKind::Synthetic;
    throw ConfigError("env.kind: unknown kind '" + s + "' (dataset, synthetic)");
}

std::string regime_name(env::CostRegime r) {
    return r == env::CostRegime::ReplaceDominant ? "replace-dominant" : "repair-dominant";
}

env::CostRegime regime_from_string(const std::string& s) {
    if (s == "replace-dominant") return env::CostRegime::ReplaceDominant;
    if (s == "repair-dominant") return env::CostRegime::RepairDominant;
    throw ConfigError("env.synthetic.regime: unknown regime '" + s + "'");
}

/// Reads known keys from one JSON object and rejects the rest.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    template <class T>
    void read(const char* key, T& dst) {
        known_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return;
        const std::string where = path_ + "." + key;
        if constexpr (std::is_same_v<T, bool>) {
            if (!it->is_boolean()) throw ConfigError(where + ": expected a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!it->is_number_integer()) throw ConfigError(where + ": expected an integer");
            if constexpr (std::is_unsigned_v<T>) {
                if (it->is_number_integer() && !it->is_number_unsigned()) {
                    throw ConfigError(where + ": expected a non-negative integer");
                }
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!it->is_number()) throw ConfigError(where + ": expected a number");
        }
        try {
            dst = it->get<T>();
        } catch (const json::exception&) {
            throw ConfigError(where + ": wrong type");
        }
    }

    void read_path(const char* key, std::filesystem::path& dst) {
        std::string s = dst.string();
        read(key, s);
        dst = s;
    }

    template <class Convert, class T>
    void read_enum(const char* key, T& dst, Convert convert) {
        known_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return;
        if (!it->is_string()) throw ConfigError(path_ + "." + key + ": expected a string");
        dst = convert(it->get<std::string>());
    }

    const json* child(const char* key) {
        known_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string path(const char* key) const { return path_ + "." + key; }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!known_.contains(item.key())) throw ConfigError(path_ + ": unknown key '" + item.key() + "'");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> known_;
};

void read_synth(const json& j, cmapss::SynthSensorConfig& c) {
    Section s(j, "data.synthetic");
    s.read("n_engines", c.health.n_engines);
    s.read("min_length", c.health.min_length);
    s.read("max_length", c.health.max_length);
    s.read("noise_sigma", c.health.noise_sigma);
    s.read("d_min", c.health.d_min);
    s.read("d_max", c.health.d_max);
    s.read("b_min", c.health.b_min);
    s.read("b_max", c.health.b_max);
    s.read("sensor_noise", c.sensor_noise);
    s.finish();
}

void read_data(const json& j, DataConfig& c) {
    Section s(j, "data");
    s.read_enum("source", c.source, source_from_string);
    s.read_path("path", c.path);
    s.read("synth_seed_offset", c.synth_seed_offset);
    s.read("min_abs_t_statistic", c.min_abs_t_statistic);
    if (const auto* sub = s.child("synthetic")) read_synth(*sub, c.synthetic);
    s.finish();
}

void read_synthetic_env(const json& j, env::SyntheticEnvConfig& c) {
    Section s(j, "env.synthetic");
    s.read("s_max", c.s_max);
    s.read("hazard_rate", c.hazard_rate);
    s.read("p_low_to_high", c.p_low_to_high);
    s.read("p_high_to_low", c.p_high_to_low);
    s.read("high_temp_skip_min", c.high_temp_skip_min);
    s.read("high_temp_skip_max", c.high_temp_skip_max);
    s.read("repair_effects", c.repair_effects);
    s.read("cost_replace", c.cost_replace);
    s.read("cost_repair", c.cost_repair);
    s.read("budget_init", c.budget_init);
    s.read("horizon", c.horizon);
    s.read_enum("regime", c.regime, regime_from_string);
    s.finish();
}

void read_env(const json& j, EnvConfig& c) {
    Section s(j, "env");
    s.read_enum("kind", c.kind, env_kind_from_string);
    s.read("bins", c.bins);
    s.read("window", c.window);
    s.read_enum("mode", c.mode, env::sampling_mode_from_string);
    s.read("train_engines", c.train_engines);
    s.read("eval_episodes", c.eval_episodes);
    if (const auto* sub = s.child("synthetic")) read_synthetic_env(*sub, c.synthetic);
    s.finish();
}

void read_reward(const json& j, env::RewardConfig& c) {
    Section s(j, "reward");
    s.read("hold_runtime", c.hold_runtime);
    s.read("replace", c.replace);
    s.read("repair", c.repair);
    s.read("explore", c.explore);
    s.read("frugal", c.frugal);
    s.read("frugal_threshold", c.frugal_threshold);
    s.read("penalty", c.penalty);
    s.finish();
}

void read_replay(const json& j, replay::PERConfig& c) {
    Section s(j, "replay");
    s.read("capacity", c.capacity);
    s.read("alpha", c.alpha);
    s.read("b_start", c.b_start);
    s.read("b_end", c.b_end);
    s.read("priority_epsilon", c.priority_epsilon);
    s.finish();
}

void read_network(const json& j, agent::AgentConfig& c) {
    Section s(j, "network");
    s.read("hidden", c.net.hidden);
    s.read("learning_rate", c.adam.learning_rate);
    s.read("beta1", c.adam.beta1);
    s.read("beta2", c.adam.beta2);
    s.read("adam_epsilon", c.adam.epsilon);
    s.read("huber", c.loss.huber);
    s.read("huber_delta", c.loss.huber_delta);
    s.read("noise_sigma", c.noise.initial_sigma);
    s.read("noise_target_divergence", c.noise.target_divergence);
    s.read("noise_adapt_factor", c.noise.adapt_factor);
    s.finish();
}

void read_agent(const json& j, agent::AgentConfig& c) {
    Section s(j, "agent");
    s.read_enum("variant", c.variant, agent::variant_from_string);
    s.read("gamma", c.gamma);
    s.read("batch", c.batch);
    s.read("target_sync", c.target_sync);
    s.read("warmup", c.warmup);
    s.read("total_steps", c.total_steps);
    s.read("exploration_fraction", c.exploration_fraction);
    s.read("epsilon_start", c.epsilon_start);
    s.read("epsilon_end", c.epsilon_end);
    s.read("noise_epsilon", c.noise_epsilon);
    s.read("eval_interval", c.eval_interval);
    s.finish();
}

void read_benchmark(const json& j, BenchmarkConfig& c) {
    Section s(j, "benchmark");
    s.read("seeds", c.seeds);
    s.read("ema", c.ema);
    s.read("threshold", c.threshold);
    if (const auto* v = s.child("variants")) {
        if (!v->is_array()) throw ConfigError("benchmark.variants: expected an array of names");
        c.variants.clear();
        for (const auto& name : *v) {
            if (!name.is_string()) throw ConfigError("benchmark.variants: expected an array of names");
            c.variants.push_back(agent::variant_from_string(name.get<std::string>()));
        }
    }
    s.finish();
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    RunConfig c;
    Section s(j, "config");
    s.read("seed", c.seed);
    s.read_path("out", c.out);
    s.read_path("checkpoint", c.checkpoint);
    if (const auto* sub = s.child("data")) read_data(*sub, c.data);
    if (const auto* sub = s.child("env")) read_env(*sub, c.env);
    if (const auto* sub = s.child("reward")) read_reward(*sub, c.reward);
    if (const auto* sub = s.child("replay")) read_replay(*sub, c.agent.replay);
    if (const auto* sub = s.child("network")) read_network(*sub, c.agent);
    if (const auto* sub = s.child("agent")) read_agent(*sub, c.agent);
    if (const auto* sub = s.child("benchmark")) read_benchmark(*sub, c.benchmark);
    s.finish();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("config file '" + path.string() + "' does not exist");
    return parse_config(io::read_file(path));
}

std::string dump_config(const RunConfig& c) {
    const auto& h = c.data.synthetic.health;
    const auto& se = c.env.synthetic;
    const auto& a = c.agent;
    json variants = json::array();
    for (auto v : c.benchmark.variants) variants.push_back(agent::to_string(v));
    json j = {
        {"seed", c.seed},
        {"out", c.out.string()},
        {"checkpoint", c.checkpoint.string()},
        {"data",
         {{"source", to_string(c.data.source)},
          {"path", c.data.path.string()},
          {"synth_seed_offset", c.data.synth_seed_offset},
          {"min_abs_t_statistic", c.data.min_abs_t_statistic},
          {"synthetic",
           {{"n_engines", h.n_engines},
            {"min_length", h.min_length},
            {"max_length", h.max_length},
            {"noise_sigma", h.noise_sigma},
            {"d_min", h.d_min},
            {"d_max", h.d_max},
            {"b_min", h.b_min},
            {"b_max", h.b_max},
            {"sensor_noise", c.data.synthetic.sensor_noise}}}}},
        {"env",
         {{"kind", to_string(c.env.kind)},
          {"bins", c.env.bins},
          {"window", c.env.window},
          {"mode", env::to_string(c.env.mode)},
          {"train_engines", c.env.train_engines},
          {"eval_episodes", c.env.eval_episodes},
          {"synthetic",
           {{"s_max", se.s_max},
            {"hazard_rate", se.hazard_rate},
            {"p_low_to_high", se.p_low_to_high},
            {"p_high_to_low", se.p_high_to_low},
            {"high_temp_skip_min", se.high_temp_skip_min},
            {"high_temp_skip_max", se.high_temp_skip_max},
            {"repair_effects", se.repair_effects},
            {"cost_replace", se.cost_replace},
            {"cost_repair", se.cost_repair},
            {"budget_init", se.budget_init},
            {"horizon", se.horizon},
            {"regime", regime_name(se.regime)}}}}},
        {"reward",
         {{"hold_runtime", c.reward.hold_runtime},
          {"replace", c.reward.replace},
          {"repair", c.reward.repair},
          {"explore", c.reward.explore},
          {"frugal", c.reward.frugal},
          {"frugal_threshold", c.reward.frugal_threshold},
          {"penalty", c.reward.penalty}}},
        {"replay",
         {{"capacity", a.replay.capacity},
          {"alpha", a.replay.alpha},
          {"b_start", a.replay.b_start},
          {"b_end", a.replay.b_end},
          {"priority_epsilon", a.replay.priority_epsilon}}},
        {"network",
         {{"hidden", a.net.hidden},
          {"learning_rate", a.adam.learning_rate},
          {"beta1", a.adam.beta1},
          {"beta2", a.adam.beta2},
          {"adam_epsilon", a.adam.epsilon},
          {"huber", a.loss.huber},
          {"huber_delta", a.loss.huber_delta},
          {"noise_sigma", a.noise.initial_sigma},
          {"noise_target_divergence", a.noise.target_divergence},
          {"noise_adapt_factor", a.noise.adapt_factor}}},
        {"agent",
         {{"variant", agent::to_string(a.variant)},
          {"gamma", a.gamma},
          {"batch", a.batch},
          {"target_sync", a.target_sync},
          {"warmup", a.warmup},
          {"total_steps", a.total_steps},
          {"exploration_fraction", a.exploration_fraction},
          {"epsilon_start", a.epsilon_start},
          {"epsilon_end", a.epsilon_end},
          {"noise_epsilon", a.noise_epsilon},
          {"eval_interval", a.eval_interval}}},
        {"benchmark",
         {{"seeds", c.benchmark.seeds},
          {"variants", variants},
          {"ema", c.benchmark.ema},
          {"threshold", c.benchmark.threshold}}},
    };
    return j.dump(2) + "\n";
}

void RunConfig::validate() const {
    switch (data.source) {
        case DataSource::Synthetic:
            cmapss::validate(data.synthetic.health);
            if (!(data.synthetic.sensor_noise >= 0.0)) throw ConfigError("data.synthetic.sensor_noise must be >= 0");
            break;
        case DataSource::Cmapss:
        case DataSource::HealthCsv:
            if (data.path.empty()) throw ConfigError("data.path is required for source " + to_string(data.source));
            if (!std::filesystem::is_regular_file(data.path)) {
                throw ConfigError("data.path '" + data.path.string() + "' does not exist");
            }
            break;
    }
    if (!(data.min_abs_t_statistic > 0.0)) throw ConfigError("data.min_abs_t_statistic must be positive");
    if (env.bins < 2) throw ConfigError("env.bins must be >= 2");
    if (env.window < 1) throw ConfigError("env.window must be >= 1");
    if (env.eval_episodes < 1) throw ConfigError("env.eval_episodes must be >= 1");
    env::SyntheticEnvConfig synth = env.synthetic;
    synth.reward = reward;
    synth.validate();
    reward.validate();
    agent.validate();
    if (benchmark.seeds.empty()) throw ConfigError("benchmark.seeds must not be empty");
    if (benchmark.variants.empty()) throw ConfigError("benchmark.variants must not be empty");
    if (!(benchmark.ema > 0.0 && benchmark.ema <= 1.0)) throw ConfigError("benchmark.ema must lie in (0, 1]");
    if (!(benchmark.threshold > 0.0 && benchmark.threshold <= 1.0)) {
        throw ConfigError("benchmark.threshold must lie in (0, 1]");
    }
}

std::filesystem::path RunConfig::checkpoint_path() const {
    if (!checkpoint.empty()) return checkpoint;
    return out / agent::to_string(agent.variant) / "checkpoint.json";
}

void apply_overrides(RunConfig& config, const Overrides& o) {
    if (o.seed) config.seed = *o.seed;
    if (o.variant) config.agent.variant = agent::variant_from_string(*o.variant);
    if (o.out) config.out = *o.out;
    if (o.data) {
        config.data.path = *o.data;
        config.data.source = o.data->extension() == ".csv" ? DataSource::HealthCsv : DataSource::Cmapss;
    }
}

}  // namespace pdm::config
