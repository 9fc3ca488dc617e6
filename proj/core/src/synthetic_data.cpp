#include <algorithm>
#include <cmath>
#include <random>

#include "pdm/cmapss.hpp"
#include "pdm/error.hpp"
#include "pdm/rng.hpp"

namespace pdm::cmapss {

void validate(const SynthConfig& config) {
    if (config.n_engines == 0) throw ConfigError("synth: n_engines must be positive");
    if (config.min_length < 2 || config.min_length > config.max_length) {
        throw ConfigError("synth: length range is empty or shorter than 2 cycles");
    }
    if (!(config.noise_sigma >= 0.0)) throw ConfigError("synth: noise sigma must be >= 0");
    if (!(config.d_min <= config.d_max)) throw ConfigError("synth: d range is empty");
    if (!(config.d_max < 0.0)) {
        throw ConfigError("synth: d must be negative so the curve starts above zero (H(0) = -d)");
    }
    if (!(config.b_min <= config.b_max) || !(config.b_min > 0.0)) {
        throw ConfigError("synth: b range is empty or non-positive");
    }
}

namespace {

struct CurveDraw {
    std::size_t length;
    double a, b, d;
};

CurveDraw draw_curve(const SynthConfig& config, Rng& rng) {
    std::uniform_int_distribution<std::size_t> length_dist(config.min_length, config.max_length);
    std::uniform_real_distribution<double> b_dist(config.b_min, config.b_max);
    std::uniform_real_distribution<double> d_dist(config.d_min, config.d_max);
    CurveDraw c{};
    c.length = length_dist(rng);
    c.b = config.b_min == config.b_max ? config.b_min : b_dist(rng);
    c.d = config.d_min == config.d_max ? config.d_min : d_dist(rng);
    // Zero crossing at t = length: exp(a * L^b) = 1 - d.
    c.a = std::log(1.0 - c.d) / std::pow(static_cast<double>(c.length), c.b);
    return c;
}

std::vector<double> noiseless_curve(const CurveDraw& c) {
    std::vector<double> h(c.length);
    for (std::size_t i = 0; i < c.length; ++i) {
        h[i] = std::clamp(degradation_curve(c.a, c.b, c.d, static_cast<double>(i + 1)), 0.0, 1.0);
    }
    h.back() = 0.0;
    return h;
}

}  // namespace

std::vector<HealthTrajectory> synth_generate(const SynthConfig& config, std::uint64_t seed) {
    validate(config);
    Rng rng(stream_seed(seed, "synth-health"));
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<HealthTrajectory> out;
    out.reserve(config.n_engines);
    for (std::size_t e = 0; e < config.n_engines; ++e) {
        const auto curve = draw_curve(config, rng);
        HealthTrajectory traj{static_cast<int>(e + 1), noiseless_curve(curve)};
        if (config.noise_sigma > 0.0) {
            for (std::size_t i = 0; i + 1 < traj.health.size(); ++i) {
                traj.health[i] = std::clamp(traj.health[i] + config.noise_sigma * noise(rng), 0.0, 1.0);
            }
        }
        out.push_back(std::move(traj));
    }
    return out;
}

namespace {

// FD001-like column layout (0-based sensor index). Base values follow the
// published FD001 column means; spans are the typical run-to-failure drift.
struct SensorProfile {
    std::size_t index;
    double base;
    double span;  // signed drift from new (damage 0) to failed (damage 1)
};

constexpr std::size_t kConstantSensors[] = {0, 4, 9, 15, 17, 18};
constexpr double kConstantValues[] = {518.67, 14.62, 1.3, 0.03, 2388.0, 100.0};

constexpr SensorProfile kTrending[] = {
    {1, 642.2, 1.6},   {2, 1585.0, 22.0}, {3, 1398.0, 38.0}, {6, 554.0, -4.0},
    {7, 2388.0, 0.25}, {10, 47.3, 1.2},   {11, 522.0, -3.5}, {12, 2388.0, 0.25},
    {14, 8.42, 0.12},  {16, 391.0, 5.0},  {19, 38.95, -0.75}, {20, 23.37, -0.45},
};

constexpr SensorProfile kNoiseOnly[] = {{5, 21.61, 0.01}, {8, 9050.0, 15.0}, {13, 8140.0, 12.0}};

}  // namespace

std::span<const std::size_t> synth_constant_sensors() { return kConstantSensors; }

std::span<const std::size_t> synth_trending_sensors() {
    static const auto indices = [] {
        std::vector<std::size_t> v;
        for (const auto& s : kTrending) v.push_back(s.index);
        return v;
    }();
    return indices;
}

std::vector<Trajectory> synth_cmapss(const SynthSensorConfig& config, std::uint64_t seed) {
    validate(config.health);
    if (!(config.sensor_noise >= 0.0)) throw ConfigError("synth: sensor noise must be >= 0");
    Rng rng(stream_seed(seed, "synth-cmapss"));
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<Trajectory> out;
    out.reserve(config.health.n_engines);
    for (std::size_t e = 0; e < config.health.n_engines; ++e) {
        const auto curve = draw_curve(config.health, rng);
        const auto health = noiseless_curve(curve);
        Trajectory traj;
        traj.unit_id = static_cast<int>(e + 1);
        traj.records.resize(curve.length);
        for (std::size_t t = 0; t < curve.length; ++t) {
            auto& rec = traj.records[t];
            rec.unit_id = traj.unit_id;
            rec.cycle = static_cast<int>(t + 1);
            rec.op_settings = {0.002 * gauss(rng), 0.0003 * gauss(rng), 100.0};
            for (std::size_t k = 0; k < std::size(kConstantSensors); ++k) {
                rec.sensors[kConstantSensors[k]] = kConstantValues[k];
            }
            const double damage = 1.0 - health[t];
            for (const auto& s : kTrending) {
                rec.sensors[s.index] =
                    s.base + s.span * damage + config.sensor_noise * std::abs(s.span) * gauss(rng);
            }
            for (const auto& s : kNoiseOnly) rec.sensors[s.index] = s.base + s.span * gauss(rng);
        }
        label_rul(traj);
        out.push_back(std::move(traj));
    }
    return out;
}

}  // namespace pdm::cmapss
