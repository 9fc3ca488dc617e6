#pragma once

// C-MAPSS ingestion and health-indicator extraction.
//
// Pipeline: parse -> z-score normalize -> select trending sensors -> project
// onto the first principal component -> per-engine rescale to [0, 1] -> fit
// the exponential degradation model.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace pdm::cmapss {

inline constexpr std::size_t kOpSettings = 3;
inline constexpr std::size_t kSensors = 21;
inline constexpr std::size_t kColumns = 2 + kOpSettings + kSensors;  // 26

struct RawRecord {
    int unit_id = 0;
    int cycle = 0;
    std::array<double, kOpSettings> op_settings{};
    std::array<double, kSensors> sensors{};
};

/// One engine's run-to-failure record sequence. rul[t] = size() - 1 - t.
struct Trajectory {
    int unit_id = 0;
    std::vector<RawRecord> records;
    std::vector<int> rul;

    std::size_t size() const noexcept { return records.size(); }
};

struct NormalizationStats {
    std::array<double, kSensors> mean{};
    std::array<double, kSensors> stddev{};  // population std
    std::array<bool, kSensors> constant_mask{};
};

inline constexpr double kConstantStdThreshold = 1e-12;

/// Scalar health indicator per cycle, 1 ~ new, 0 at the failure cycle.
struct HealthTrajectory {
    int unit_id = 0;
    std::vector<double> health;

    std::size_t size() const noexcept { return health.size(); }
};

// --- parsing ---------------------------------------------------------------

/// Parse whitespace-delimited 26-column C-MAPSS text. Throws ParseError naming
/// the offending line for wrong column counts or non-numeric tokens, and for
/// empty input. Records are grouped by unit, sorted by cycle, and RUL labelled.
std::vector<Trajectory> parse_cmapss(std::istream& in);
std::vector<Trajectory> parse_cmapss_file(const std::filesystem::path& path);

/// Inverse of parse_cmapss (used by the synthetic fallback and tests).
void write_cmapss(std::ostream& out, std::span<const Trajectory> trajectories);

/// Fill rul[] from record order.
void label_rul(Trajectory& trajectory);

// --- normalization ---------------------------------------------------------

struct NormalizedSet {
    std::vector<Trajectory> trajectories;
    NormalizationStats stats;
};

NormalizationStats compute_normalization(std::span<const Trajectory> trajectories);

/// Z-score every sensor column. When `stats` is given (held-out data) it is
/// applied as-is; otherwise it is computed from `trajectories`. Constant
/// columns map to 0.
NormalizedSet zscore_normalize(std::span<const Trajectory> trajectories,
                               const std::optional<NormalizationStats>& stats = std::nullopt);

// --- sensor selection ------------------------------------------------------

struct SensorSelectionOptions {
    double min_abs_t_statistic = 4.0;
};

struct SlopeStatistic {
    double slope = 0.0;
    double t_statistic = 0.0;  // +/-inf for a perfect non-flat fit
};

/// OLS of y on x with slope standard error.
SlopeStatistic ols_slope(std::span<const double> x, std::span<const double> y);

/// Sensors (0-based index into RawRecord::sensors) whose pooled regression on
/// cycle has |t| >= threshold. Constant columns are always excluded. Throws
/// NumericError("no informative sensors") when nothing qualifies.
std::vector<std::size_t> select_informative_sensors(std::span<const Trajectory> normalized,
                                                    const NormalizationStats& stats,
                                                    const SensorSelectionOptions& options = {});

// --- PCA health indicator --------------------------------------------------

struct PrincipalComponent {
    std::vector<std::size_t> sensors;
    Eigen::VectorXd mean;       // pooled mean of the selected columns
    Eigen::VectorXd direction;  // unit eigenvector, sign fixed (score falls with cycle)
    double eigenvalue = 0.0;
};

/// Largest-eigenvalue eigenvector of the pooled covariance of `sensors`.
PrincipalComponent first_principal_component(std::span<const Trajectory> normalized,
                                             std::span<const std::size_t> sensors);

/// Projection of every record (pooled, trajectory order) onto the component.
std::vector<double> project(std::span<const Trajectory> normalized, const PrincipalComponent& pc);

/// Rescale a score sequence so the last (failure) cycle maps to 0 and the
/// maximum maps to 1; values below the failure score clamp to 0.
std::vector<double> rescale_to_health(std::span<const double> scores);

struct HealthIndicatorResult {
    PrincipalComponent component;
    std::vector<HealthTrajectory> trajectories;
};

HealthIndicatorResult pca_health_indicator(std::span<const Trajectory> normalized,
                                           std::span<const std::size_t> sensors);

/// Apply a component fitted elsewhere (e.g. training set) to more engines.
std::vector<HealthTrajectory> apply_health_indicator(std::span<const Trajectory> normalized,
                                                     const PrincipalComponent& pc);

// --- degradation model -----------------------------------------------------

/// H(t) = 1 - d - exp(a * t^b), evaluated as written (H(0) = -d).
double degradation_curve(double a, double b, double d, double t);

struct DegradationFit {
    double a = 0.0;
    double b = 1.0;
    double d = 0.0;
    double residual_sse = 0.0;
    bool degenerate = false;  // no measurable degradation (a * n^b ~ 0)
};

struct FitOptions {
    // Multi-start grid: b values and the total log-decay a * n^b at the end of
    // the curve (which fixes a for each b).
    std::vector<double> b_grid{0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0};
    std::vector<double> decay_grid{0.01, 0.05, 0.1, 0.3, 0.7, 1.0, 1.5, 2.5, 4.0, 6.0};
    int refine_starts = 4;
    int max_iterations = 400;
    double tolerance = 1e-14;
    std::size_t min_length = 10;
};

/// Least-squares fit of (a, b, d) over t = 1..n. Throws NumericError on
/// non-finite input and UsageError when shorter than options.min_length.
DegradationFit fit_degradation_model(const HealthTrajectory& health, const FitOptions& options = {});

/// Closed-form straight-line fit SSE, the baseline the curve fit is judged against.
double linear_fit_sse(std::span<const double> values);

// --- synthetic data --------------------------------------------------------

struct SynthConfig {
    std::size_t n_engines = 100;
    std::size_t min_length = 128;
    std::size_t max_length = 362;
    double noise_sigma = 0.0;
    // H(0) = -d, so curves that start near 1 need d close to -1.
    double d_min = -1.0;
    double d_max = -0.9;
    double b_min = 1.5;
    double b_max = 3.0;
};

void validate(const SynthConfig& config);

/// Health trajectories drawn from the degradation model. `a` is solved per
/// engine so the noiseless curve crosses zero exactly at the sampled length;
/// the final (failure) value is 0 and noisy values are clamped to [0, 1].
std::vector<HealthTrajectory> synth_generate(const SynthConfig& config, std::uint64_t seed);

struct SynthSensorConfig {
    SynthConfig health{};
    double sensor_noise = 0.12;  // relative to each sensor's degradation span
};

/// C-MAPSS-format raw records driven by synthetic health curves: a handful of
/// constant columns, pure-noise columns, and columns that trend with damage
/// (some rising, some falling), mimicking the FD001 layout.
std::vector<Trajectory> synth_cmapss(const SynthSensorConfig& config, std::uint64_t seed);

/// 0-based sensor columns that synth_cmapss holds constant.
std::span<const std::size_t> synth_constant_sensors();
/// 0-based sensor columns that synth_cmapss drives from the health curve.
std::span<const std::size_t> synth_trending_sensors();

}  // namespace pdm::cmapss
