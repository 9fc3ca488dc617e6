#include "pdm/harness.hpp"

#include <algorithm>
#include <ostream>
#include <random>

#include "pdm/error.hpp"
#include "pdm/io.hpp"
#include "pdm/oracle.hpp"
#include "pdm/tabular.hpp"

namespace pdm::harness {

using config::RunConfig;

std::vector<double> ema_smooth(std::span<const double> series, double factor) {
    if (!(factor > 0.0 && factor <= 1.0)) throw UsageError("ema_smooth: factor must lie in (0, 1]");
    std::vector<double> out;
    out.reserve(series.size());
    for (double x : series) out.push_back(out.empty() ? x : factor * x + (1.0 - factor) * out.back());
    return out;
}

IngestResult run_pipeline(const RunConfig& config) {
    config.validate();
    IngestResult r;
    switch (config.data.source) {
        case config::DataSource::Cmapss:
            r.raw = cmapss::parse_cmapss_file(config.data.path);
            break;
        case config::DataSource::Synthetic:
            r.raw = cmapss::synth_cmapss(config.data.synthetic,
                                         stream_seed(config.seed, "data") + config.data.synth_seed_offset);
            break;
        case config::DataSource::HealthCsv:
            throw ConfigError("ingest needs raw sensor data (source cmapss or synthetic), not a health CSV");
    }
    const auto normalized = cmapss::zscore_normalize(r.raw);
    r.sensors = cmapss::select_informative_sensors(normalized.trajectories, normalized.stats,
                                                   {config.data.min_abs_t_statistic});
    auto hi = cmapss::pca_health_indicator(normalized.trajectories, r.sensors);
    r.component = std::move(hi.component);
    r.health = std::move(hi.trajectories);
    for (const auto& h : r.health) {
        if (h.health.size() < cmapss::FitOptions{}.min_length) {
            r.warnings.push_back("unit " + std::to_string(h.unit_id) + ": " + std::to_string(h.health.size()) +
                                 " cycles, degradation fit skipped");
            r.fits.emplace_back(std::nullopt);
        } else {
            r.fits.emplace_back(cmapss::fit_degradation_model(h));
        }
    }
    return r;
}

std::vector<cmapss::HealthTrajectory> load_health(const RunConfig& config) {
    config.validate();
    if (config.data.source == config::DataSource::HealthCsv) {
        return io::parse_health_csv(io::read_file(config.data.path));
    }
    std::vector<cmapss::Trajectory> raw =
        config.data.source == config::DataSource::Cmapss
            ? cmapss::parse_cmapss_file(config.data.path)
            : cmapss::synth_cmapss(config.data.synthetic,
                                   stream_seed(config.seed, "data") + config.data.synth_seed_offset);
    const auto normalized = cmapss::zscore_normalize(raw);
    const auto sensors = cmapss::select_informative_sensors(normalized.trajectories, normalized.stats,
                                                            {config.data.min_abs_t_statistic});
    return cmapss::pca_health_indicator(normalized.trajectories, sensors).trajectories;
}

env::DatasetEnvConfig dataset_config(const RunConfig& config, const std::vector<cmapss::HealthTrajectory>& health) {
    env::DatasetEnvConfig d;
    d.bins = config.env.bins;
    d.window = config.env.window;
    d.reward = config.reward;
    d.mode = config.env.mode;
    if (config.env.train_engines.empty()) {
        d.trajectories = health;
    } else {
        for (std::size_t e : config.env.train_engines) {
            if (e >= health.size()) {
                throw ConfigError("env.train_engines: engine index " + std::to_string(e) + " but only " +
                                  std::to_string(health.size()) + " engines loaded");
            }
            d.trajectories.push_back(health[e]);
        }
    }
    d.validate();
    return d;
}

agent::Evaluator make_evaluator(const RunConfig& config, const env::DatasetEnvConfig& train,
                                const std::vector<cmapss::HealthTrajectory>& all) {
    const double gamma = config.agent.gamma;
    if (config.agent.variant != agent::Variant::Random) return oracle::oracle_evaluator(train, gamma, all);

    double random_value = 0.0;
    double optimal = 0.0;
    for (const auto& t : train.trajectories) {
        for (std::size_t s = 0; s + 1 < t.health.size(); ++s) {
            random_value += oracle::random_policy_value(t.health, s, train.reward, train.bins, gamma);
            optimal += oracle::solve_from(t.health, s, train.reward, train.bins, gamma).value;
        }
    }
    env::DatasetEnvConfig eval = train;
    eval.trajectories = all;
    const std::uint64_t seed = stream_seed(config.seed, "eval");
    const double score = random_value / optimal;
    return [eval, seed, score](const nn::DenseNet&) {
        Rng rng(seed);
        const auto summary = agent::evaluate_policy(agent::random_policy(rng), eval);
        agent::EvalSnapshot snap;
        snap.score = score;
        snap.mean_return = summary.mean_return;
        snap.median_replacement_health = summary.median_health;
        return snap;
    };
}

namespace {

agent::Evaluator synthetic_evaluator(const RunConfig& config) {
    env::SyntheticEnvConfig cfg = config.env.synthetic;
    cfg.reward = config.reward;
    const int episodes = config.env.eval_episodes;
    const std::uint64_t seed = stream_seed(config.seed, "eval");
    return [cfg, episodes, seed](const nn::DenseNet& net) {
        env::SyntheticEnv environment(cfg, seed);
        double total = 0.0;
        for (int e = 0; e < episodes; ++e) {
            Eigen::VectorXd obs = environment.reset();
            for (;;) {
                const auto out = environment.step(net.greedy_action(obs));
                total += out.reward;
                if (out.done) break;
                obs = out.observation;
            }
        }
        agent::EvalSnapshot snap;
        snap.mean_return = total / episodes;
        snap.score = snap.mean_return;
        return snap;
    };
}

}  // namespace

agent::TrainResult run_training(const RunConfig& config) {
    config.validate();
    if (config.env.kind == config::EnvKind::Synthetic) {
        env::SyntheticEnvConfig cfg = config.env.synthetic;
        cfg.reward = config.reward;
        env::SyntheticEnv environment(cfg, config.seed);
        return agent::train(environment, config.agent, config.seed, synthetic_evaluator(config));
    }
    const auto health = load_health(config);
    const auto train_cfg = dataset_config(config, health);
    env::DatasetEnv environment(train_cfg, config.seed);
    return agent::train(environment, config.agent, config.seed, make_evaluator(config, train_cfg, health));
}

std::string episode_trace_csv(env::Environment& environment, const agent::Policy& policy, int max_steps) {
    io::CsvTable table({"t", "state", "temp", "budget", "action", "reward", "done"});
    Eigen::VectorXd obs = environment.reset();
    for (int k = 0; k < max_steps; ++k) {
        const auto before = environment.trace_state();
        const int action = policy(obs);
        const auto out = environment.step(action);
        table.row({std::to_string(before.t), io::format_double(before.state), std::to_string(before.temp),
                   io::format_double(before.budget), std::to_string(action), io::format_double(out.reward),
                   out.done ? "1" : "0"});
        if (out.done) break;
        obs = out.observation;
    }
    return table.str();
}

BenchmarkResult run_benchmark(const RunConfig& config, std::ostream& log) {
    config.validate();
    if (config.env.kind != config::EnvKind::Dataset) {
        throw ConfigError("benchmark runs on the dataset environment (env.kind = dataset)");
    }
    if (config.agent.eval_interval == 0) throw ConfigError("benchmark needs agent.eval_interval > 0");
    const auto health = load_health(config);
    const auto train_cfg = dataset_config(config, health);

    BenchmarkResult result;
    for (agent::Variant v : config.benchmark.variants) {
        std::vector<std::vector<double>> per_seed;
        for (std::uint64_t seed : config.benchmark.seeds) {
            RunConfig run = config;
            run.seed = seed;
            run.agent.variant = v;
            env::DatasetEnv environment(train_cfg, seed);
            auto trained = agent::train(environment, run.agent, seed, make_evaluator(run, train_cfg, health));
            BenchmarkRun br;
            br.variant = v;
            br.seed = seed;
            br.snapshots = trained.log.snapshots;
            std::vector<double> scores;
            for (const auto& s : br.snapshots) {
                scores.push_back(s.score);
                if (!br.steps_to_threshold && s.score >= config.benchmark.threshold) br.steps_to_threshold = s.step;
            }
            br.final_score = br.snapshots.back().score;
            br.final_median_health = br.snapshots.back().median_replacement_health;
            if (result.steps.empty()) {
                for (const auto& s : br.snapshots) result.steps.push_back(s.step);
            }
            log << "benchmark " << agent::to_string(v) << " seed " << seed << ": final score " << br.final_score
                << ", steps to threshold "
                << (br.steps_to_threshold ? std::to_string(*br.steps_to_threshold) : std::string("not reached"))
                << " (" << trained.log.wall_seconds << " s)\n";
            per_seed.push_back(std::move(scores));
            result.runs.push_back(std::move(br));
        }
        std::vector<double> mean(result.steps.size(), 0.0);
        for (const auto& s : per_seed) {
            for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += s[i] / static_cast<double>(per_seed.size());
        }
        result.smoothed.push_back(ema_smooth(mean, config.benchmark.ema));
    }
    return result;
}

// --- commands ---------------------------------------------------------------

namespace {

std::string fmt(double v) { return io::format_double(v); }

std::vector<cmapss::HealthTrajectory> subset(const std::vector<cmapss::HealthTrajectory>& all,
                                             const std::vector<std::size_t>& engines, bool complement) {
    std::vector<cmapss::HealthTrajectory> out;
    for (std::size_t i = 0; i < all.size(); ++i) {
        const bool listed = std::find(engines.begin(), engines.end(), i) != engines.end();
        if (listed != complement) out.push_back(all[i]);
    }
    return out;
}

nn::Checkpoint load_matching_checkpoint(const RunConfig& config, std::size_t obs_dim, std::size_t actions) {
    const auto path = config.checkpoint_path();
    if (!std::filesystem::is_regular_file(path)) {
        throw ConfigError("checkpoint '" + path.string() + "' does not exist (run `train` first)");
    }
    auto cp = nn::load_checkpoint(path);
    if (static_cast<std::size_t>(cp.online.input_dim()) != obs_dim ||
        static_cast<std::size_t>(cp.online.output_dim()) != actions) {
        throw ConfigError("checkpoint network is " + std::to_string(cp.online.input_dim()) + " -> " +
                          std::to_string(cp.online.output_dim()) + " but the configured env needs " +
                          std::to_string(obs_dim) + " -> " + std::to_string(actions));
    }
    return cp;
}

}  // namespace

int cmd_ingest(const RunConfig& config, std::ostream& log) {
    const auto r = run_pipeline(config);
    for (const auto& w : r.warnings) log << "warning: " << w << '\n';
    io::write_file_atomic(config.out / "health.csv", io::health_csv(r.health));
    for (const auto& h : r.health) {
        char name[32];
        std::snprintf(name, sizeof(name), "unit_%03d.csv", h.unit_id);
        io::write_file_atomic(config.out / "health" / name, io::health_csv(std::span(&h, 1)));
    }
    io::CsvTable fits({"unit_id", "a", "b", "d", "sse", "linear_sse", "degenerate"});
    std::size_t better = 0;
    std::size_t fitted = 0;
    for (std::size_t i = 0; i < r.health.size(); ++i) {
        if (!r.fits[i]) continue;
        const auto& f = *r.fits[i];
        const double lin = cmapss::linear_fit_sse(r.health[i].health);
        ++fitted;
        better += f.residual_sse <= lin ? 1 : 0;
        fits.row({std::to_string(r.health[i].unit_id), fmt(f.a), fmt(f.b), fmt(f.d), fmt(f.residual_sse), fmt(lin),
                  f.degenerate ? "1" : "0"});
    }
    fits.save(config.out / "fits.csv");
    io::CsvTable sensors({"sensor", "loading"});
    for (std::size_t k = 0; k < r.sensors.size(); ++k) {
        sensors.row({std::to_string(r.sensors[k] + 1), fmt(r.component.direction(static_cast<Eigen::Index>(k)))});
    }
    sensors.save(config.out / "sensors.csv");
    log << "ingest: " << r.health.size() << " engines, " << r.sensors.size() << " informative sensors, model fit beats"
        << " a straight line on " << better << "/" << fitted << " engines -> " << config.out.string() << '\n';
    return 0;
}

int cmd_train(const RunConfig& config, std::ostream& log) {
    const auto result = run_training(config);
    const auto dir = config.out / agent::to_string(config.agent.variant);
    io::write_file_atomic(dir / "train_log.csv", result.log.csv());
    io::write_file_atomic(dir / "eval_snapshots.csv", result.log.snapshots_csv());
    io::write_file_atomic(dir / "config.json", config::dump_config(config));
    nn::save_checkpoint(result.checkpoint, config.checkpoint_path());
    const auto& last = result.log.snapshots.back();
    log << "train " << result.log.variant << ": " << result.log.rows.size() << " steps, "
        << result.log.episode_returns.size() << " episodes, final score " << last.score
        << ", median replacement health " << last.median_replacement_health << " -> " << dir.string() << '\n';
    return 0;
}

int cmd_eval(const RunConfig& config, std::ostream& log) {
    config.validate();
    if (config.env.kind == config::EnvKind::Synthetic) {
        env::SyntheticEnvConfig cfg = config.env.synthetic;
        cfg.reward = config.reward;
        const auto cp = load_matching_checkpoint(config, 4, 2 + cfg.repair_effects.size());
        const auto snap = synthetic_evaluator(config)(cp.online);
        io::CsvTable table({"policy", "episodes", "mean_return"});
        table.row({cp.variant, std::to_string(config.env.eval_episodes), fmt(snap.mean_return)});
        table.save(config.out / "eval_summary.csv");
        env::SyntheticEnv environment(cfg, stream_seed(config.seed, "trace"));
        io::write_file_atomic(config.out / "trace.csv",
                              episode_trace_csv(environment, agent::greedy_policy(cp.online), cfg.horizon));
        log << "eval " << cp.variant << ": mean return " << snap.mean_return << '\n';
        return 0;
    }
    const auto health = load_health(config);
    const auto train_cfg = dataset_config(config, health);
    const auto cp = load_matching_checkpoint(config, static_cast<std::size_t>(config.env.window), 2);

    io::CsvTable summary({"set", "policy", "engines", "median_health", "std_health", "mean_return", "failures"});
    io::CsvTable points({"set", "engine", "replace_cycle", "replace_health", "failed"});
    const std::vector<std::pair<std::string, std::vector<cmapss::HealthTrajectory>>> sets = {
        {"train", train_cfg.trajectories},
        {"validation", subset(health, config.env.train_engines, true)},
        {"all", health}};
    for (const auto& [name, trajectories] : sets) {
        if (trajectories.empty()) continue;
        env::DatasetEnvConfig cfg = train_cfg;
        cfg.trajectories = trajectories;
        Rng rng(stream_seed(config.seed, "eval"));
        const auto greedy = agent::evaluate_policy(cp.online, cfg);
        const auto random = agent::evaluate_policy(agent::random_policy(rng), cfg);
        std::vector<double> oracle_h;
        for (const auto& t : trajectories) {
            const auto sol = oracle::solve_from(t.health, 0, cfg.reward, cfg.bins, config.agent.gamma);
            oracle_h.push_back(t.health[sol.replace_index]);
        }
        summary.row({name, cp.variant, std::to_string(trajectories.size()), fmt(greedy.median_health),
                     fmt(greedy.std_health), fmt(greedy.mean_return), std::to_string(greedy.failures)});
        summary.row({name, "random", std::to_string(trajectories.size()), fmt(random.median_health),
                     fmt(random.std_health), fmt(random.mean_return), std::to_string(random.failures)});
        summary.row({name, "oracle", std::to_string(trajectories.size()), fmt(agent::median(oracle_h)),
                     fmt(agent::population_std(oracle_h)), "", "0"});
        for (std::size_t i = 0; i < trajectories.size(); ++i) {
            const auto& p = greedy.points[i];
            points.row({name, std::to_string(trajectories[i].unit_id), std::to_string(p.cycle + 1), fmt(p.health),
                        p.failed ? "1" : "0"});
        }
        log << "eval " << name << ": " << cp.variant << " median " << greedy.median_health << " (std "
            << greedy.std_health << "), random median " << random.median_health << '\n';
    }
    summary.save(config.out / "eval_summary.csv");
    points.save(config.out / "eval.csv");
    env::DatasetEnvConfig trace_cfg = train_cfg;
    env::DatasetEnv environment(trace_cfg, stream_seed(config.seed, "trace"));
    io::write_file_atomic(config.out / "trace.csv",
                          episode_trace_csv(environment, agent::greedy_policy(cp.online), 100000));
    return 0;
}

int cmd_predict(const RunConfig& config, std::ostream& log) {
    config.validate();
    if (config.env.kind != config::EnvKind::Dataset) {
        throw ConfigError("predict works on health trajectories (env.kind = dataset)");
    }
    const auto health = load_health(config);
    const auto cp = load_matching_checkpoint(config, static_cast<std::size_t>(config.env.window), 2);
    io::CsvTable table({"engine", "replace_cycle", "replace_health", "failed"});
    std::vector<double> hs;
    for (const auto& t : health) {
        const auto p = agent::predict_replacement_point(cp.online, t, config.env.window);
        hs.push_back(p.health);
        table.row({std::to_string(t.unit_id), std::to_string(p.cycle + 1), fmt(p.health), p.failed ? "1" : "0"});
    }
    table.save(config.out / "predictions.csv");
    log << "predict: " << health.size() << " engines, median replacement health " << agent::median(hs) << " (std "
        << agent::population_std(hs) << ")\n";
    return 0;
}

int cmd_benchmark(const RunConfig& config, std::ostream& log) {
    const auto result = run_benchmark(config, log);
    std::vector<std::string> header{"step"};
    for (auto v : config.benchmark.variants) header.push_back(agent::to_string(v));
    io::CsvTable curves(header);
    for (std::size_t i = 0; i < result.steps.size(); ++i) {
        std::vector<std::string> row{std::to_string(result.steps[i])};
        for (const auto& series : result.smoothed) row.push_back(fmt(series[i]));
        curves.row(std::move(row));
    }
    curves.save(config.out / "benchmark_curves.csv");
    io::CsvTable steps({"variant", "seed", "steps_to_threshold", "final_score", "final_median_health"});
    for (const auto& r : result.runs) {
        steps.row({agent::to_string(r.variant), std::to_string(r.seed),
                   r.steps_to_threshold ? std::to_string(*r.steps_to_threshold) : "", fmt(r.final_score),
                   fmt(r.final_median_health)});
    }
    steps.save(config.out / "steps_to_threshold.csv");
    return 0;
}

}  // namespace pdm::harness
