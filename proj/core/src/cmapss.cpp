#include "pdm/cmapss.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "pdm/error.hpp"

namespace pdm::cmapss {

namespace {

bool parse_double(std::string_view token, double& out) {
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last && std::isfinite(out);
}

int parse_positive_int(std::string_view token, const char* what, std::size_t line) {
    double value = 0.0;
    if (!parse_double(token, value)) {
        throw ParseError(std::string("non-numeric ") + what + " '" + std::string(token) + "'", line);
    }
    if (value < 1.0 || value != std::floor(value) || value > 1e9) {
        throw ParseError(std::string(what) + " must be a positive integer, got '" + std::string(token) + "'",
                         line);
    }
    return static_cast<int>(value);
}

}  // namespace

void label_rul(Trajectory& trajectory) {
    const auto n = static_cast<int>(trajectory.records.size());
    trajectory.rul.resize(trajectory.records.size());
    for (int t = 0; t < n; ++t) trajectory.rul[static_cast<std::size_t>(t)] = n - 1 - t;
}

std::vector<Trajectory> parse_cmapss(std::istream& in) {
    std::map<int, std::vector<RawRecord>> units;
    std::string line;
    std::size_t line_no = 0;
    std::size_t record_count = 0;
    std::vector<std::string_view> tokens;
    tokens.reserve(kColumns + 2);

    while (std::getline(in, line)) {
        ++line_no;
        tokens.clear();
        std::string_view rest(line);
        while (true) {
            const auto begin = rest.find_first_not_of(" \t\r");
            if (begin == std::string_view::npos) break;
            rest.remove_prefix(begin);
            const auto end = rest.find_first_of(" \t\r");
            tokens.push_back(rest.substr(0, end));
            if (end == std::string_view::npos) break;
            rest.remove_prefix(end);
        }
        if (tokens.empty()) continue;
        if (tokens.size() != kColumns) {
            throw ParseError("expected " + std::to_string(kColumns) + " columns, found " +
                                 std::to_string(tokens.size()),
                             line_no);
        }

        RawRecord rec;
        rec.unit_id = parse_positive_int(tokens[0], "unit id", line_no);
        rec.cycle = parse_positive_int(tokens[1], "cycle", line_no);
        for (std::size_t i = 0; i < kOpSettings; ++i) {
            if (!parse_double(tokens[2 + i], rec.op_settings[i])) {
                throw ParseError("non-numeric token '" + std::string(tokens[2 + i]) + "'", line_no);
            }
        }
        for (std::size_t i = 0; i < kSensors; ++i) {
            if (!parse_double(tokens[2 + kOpSettings + i], rec.sensors[i])) {
                throw ParseError("non-numeric token '" + std::string(tokens[2 + kOpSettings + i]) + "'",
                                 line_no);
            }
        }
        units[rec.unit_id].push_back(rec);
        ++record_count;
    }
    if (record_count == 0) throw ParseError("empty C-MAPSS input");

    std::vector<Trajectory> out;
    out.reserve(units.size());
    for (auto& [unit, records] : units) {
        std::stable_sort(records.begin(), records.end(),
                         [](const RawRecord& x, const RawRecord& y) { return x.cycle < y.cycle; });
        for (std::size_t t = 0; t < records.size(); ++t) {
            if (records[t].cycle != static_cast<int>(t) + 1) {
                throw ParseError("unit " + std::to_string(unit) +
                                 ": cycles must be consecutive from 1 (missing or duplicate cycle " +
                                 std::to_string(t + 1) + ")");
            }
        }
        Trajectory traj;
        traj.unit_id = unit;
        traj.records = std::move(records);
        label_rul(traj);
        out.push_back(std::move(traj));
    }
    return out;
}

std::vector<Trajectory> parse_cmapss_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    return parse_cmapss(in);
}

void write_cmapss(std::ostream& out, std::span<const Trajectory> trajectories) {
    const auto old_flags = out.flags();
    const auto old_precision = out.precision();
    out << std::setprecision(17);
    for (const auto& traj : trajectories) {
        for (const auto& rec : traj.records) {
            out << rec.unit_id << ' ' << rec.cycle;
            for (double v : rec.op_settings) out << ' ' << v;
            for (double v : rec.sensors) out << ' ' << v;
            out << '\n';
        }
    }
    out.flags(old_flags);
    out.precision(old_precision);
}

NormalizationStats compute_normalization(std::span<const Trajectory> trajectories) {
    NormalizationStats stats;
    std::array<double, kSensors> sum{};
    std::array<double, kSensors> lo, hi;
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    std::size_t n = 0;
    for (const auto& traj : trajectories) {
        for (const auto& rec : traj.records) {
            for (std::size_t i = 0; i < kSensors; ++i) {
                sum[i] += rec.sensors[i];
                lo[i] = std::min(lo[i], rec.sensors[i]);
                hi[i] = std::max(hi[i], rec.sensors[i]);
            }
            ++n;
        }
    }
    if (n == 0) throw UsageError("cannot normalize an empty record set");
    for (std::size_t i = 0; i < kSensors; ++i) stats.mean[i] = sum[i] / static_cast<double>(n);

    // Second pass around the mean keeps the variance accurate for large offsets.
    std::array<double, kSensors> sq{};
    for (const auto& traj : trajectories) {
        for (const auto& rec : traj.records) {
            for (std::size_t i = 0; i < kSensors; ++i) {
                const double dv = rec.sensors[i] - stats.mean[i];
                sq[i] += dv * dv;
            }
        }
    }
    for (std::size_t i = 0; i < kSensors; ++i) {
        stats.stddev[i] = std::sqrt(sq[i] / static_cast<double>(n));
        // The range test catches exact constants whose summed mean carries rounding residue.
        stats.constant_mask[i] = hi[i] == lo[i] || stats.stddev[i] < kConstantStdThreshold;
    }
    return stats;
}

NormalizedSet zscore_normalize(std::span<const Trajectory> trajectories,
                               const std::optional<NormalizationStats>& stats) {
    NormalizedSet out;
    out.stats = stats ? *stats : compute_normalization(trajectories);
    out.trajectories.assign(trajectories.begin(), trajectories.end());
    for (auto& traj : out.trajectories) {
        for (auto& rec : traj.records) {
            for (std::size_t i = 0; i < kSensors; ++i) {
                rec.sensors[i] = out.stats.constant_mask[i]
                                     ? 0.0
                                     : (rec.sensors[i] - out.stats.mean[i]) / out.stats.stddev[i];
            }
        }
    }
    return out;
}

SlopeStatistic ols_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw UsageError("ols_slope: size mismatch");
    const std::size_t n = x.size();
    if (n < 3) throw UsageError("ols_slope: need at least 3 points");
    const double nd = static_cast<double>(n);
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / nd;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / nd;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) throw NumericError("ols_slope: regressor has zero variance");
    SlopeStatistic out;
    out.slope = sxy / sxx;
    const double intercept = my - out.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - intercept - out.slope * x[i];
        sse += r * r;
    }
    const double se = std::sqrt(sse / (nd - 2.0) / sxx);
    if (se > 0.0) {
        out.t_statistic = out.slope / se;
    } else {
        out.t_statistic = out.slope == 0.0 ? 0.0 : std::copysign(INFINITY, out.slope);
    }
    return out;
}

std::vector<std::size_t> select_informative_sensors(std::span<const Trajectory> normalized,
                                                    const NormalizationStats& stats,
                                                    const SensorSelectionOptions& options) {
    std::vector<double> cycles;
    for (const auto& traj : normalized) {
        if (traj.rul.size() != traj.records.size()) {
            throw UsageError("select_informative_sensors: trajectory " + std::to_string(traj.unit_id) +
                             " has no RUL labels");
        }
        for (const auto& rec : traj.records) cycles.push_back(rec.cycle);
    }

    std::vector<std::size_t> selected;
    std::vector<double> column(cycles.size());
    for (std::size_t s = 0; s < kSensors; ++s) {
        if (stats.constant_mask[s]) continue;
        std::size_t k = 0;
        for (const auto& traj : normalized) {
            for (const auto& rec : traj.records) column[k++] = rec.sensors[s];
        }
        const auto stat = ols_slope(cycles, column);
        if (std::abs(stat.t_statistic) >= options.min_abs_t_statistic) selected.push_back(s);
    }
    if (selected.empty()) throw NumericError("no informative sensors");
    return selected;
}

namespace {

Eigen::MatrixXd pooled_matrix(std::span<const Trajectory> normalized, std::span<const std::size_t> sensors,
                              Eigen::VectorXd* cycles = nullptr) {
    std::size_t rows = 0;
    for (const auto& traj : normalized) rows += traj.records.size();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(sensors.size()));
    if (cycles) cycles->resize(static_cast<Eigen::Index>(rows));
    Eigen::Index r = 0;
    for (const auto& traj : normalized) {
        for (const auto& rec : traj.records) {
            for (std::size_t j = 0; j < sensors.size(); ++j) {
                if (sensors[j] >= kSensors) throw UsageError("sensor index out of range");
                x(r, static_cast<Eigen::Index>(j)) = rec.sensors[sensors[j]];
            }
            if (cycles) (*cycles)(r) = rec.cycle;
            ++r;
        }
    }
    return x;
}

}  // namespace

PrincipalComponent first_principal_component(std::span<const Trajectory> normalized,
                                             std::span<const std::size_t> sensors) {
    if (sensors.empty()) throw UsageError("first_principal_component: no sensors selected");
    Eigen::VectorXd cycles;
    const Eigen::MatrixXd x = pooled_matrix(normalized, sensors, &cycles);
    if (x.rows() < 2) throw NumericError("covariance needs at least 2 records");

    PrincipalComponent pc;
    pc.sensors.assign(sensors.begin(), sensors.end());
    pc.mean = x.colwise().mean().transpose();
    const Eigen::MatrixXd centered = x.rowwise() - pc.mean.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(x.rows());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw NumericError("covariance eigen-decomposition failed");
    const Eigen::Index top = cov.rows() - 1;  // eigenvalues ascending
    pc.eigenvalue = solver.eigenvalues()(top);
    pc.direction = solver.eigenvectors().col(top).normalized();

    // Health falls over life: orient the score to be non-increasing with cycle.
    const Eigen::VectorXd score = centered * pc.direction;
    const double cov_cycle = (score.array() * (cycles.array() - cycles.mean())).sum();
    if (cov_cycle > 0.0) pc.direction = -pc.direction;
    return pc;
}

std::vector<double> project(std::span<const Trajectory> normalized, const PrincipalComponent& pc) {
    const Eigen::MatrixXd x = pooled_matrix(normalized, pc.sensors);
    const Eigen::VectorXd score = (x.rowwise() - pc.mean.transpose()) * pc.direction;
    return {score.data(), score.data() + score.size()};
}

std::vector<double> rescale_to_health(std::span<const double> scores) {
    if (scores.empty()) throw UsageError("rescale_to_health: empty score sequence");
    const double floor_score = scores.back();
    const double top = *std::max_element(scores.begin(), scores.end());
    const double span = top - floor_score;
    if (!(span > 0.0)) throw NumericError("rescale_to_health: failure score is the maximum; no degradation");
    std::vector<double> out(scores.size());
    std::transform(scores.begin(), scores.end(), out.begin(),
                   [&](double s) { return std::clamp((s - floor_score) / span, 0.0, 1.0); });
    out.back() = 0.0;
    return out;
}

std::vector<HealthTrajectory> apply_health_indicator(std::span<const Trajectory> normalized,
                                                     const PrincipalComponent& pc) {
    const auto scores = project(normalized, pc);
    std::vector<HealthTrajectory> out;
    out.reserve(normalized.size());
    std::size_t offset = 0;
    for (const auto& traj : normalized) {
        const std::span<const double> engine(scores.data() + offset, traj.records.size());
        offset += traj.records.size();
        out.push_back({traj.unit_id, rescale_to_health(engine)});
    }
    return out;
}

HealthIndicatorResult pca_health_indicator(std::span<const Trajectory> normalized,
                                           std::span<const std::size_t> sensors) {
    HealthIndicatorResult out;
    out.component = first_principal_component(normalized, sensors);
    out.trajectories = apply_health_indicator(normalized, out.component);
    return out;
}

}  // namespace pdm::cmapss
