#pragma once

// Small dense Q-network with hand-written backprop, Adam, and parameter noise.
//
// Batches are column-major internally (features x batch); the public forward()
// returns batch x actions to match how callers index Q(s, a).

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pdm/rng.hpp"

namespace pdm::nn {

enum class Activation { Identity, Relu };

struct Layer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
    Activation activation = Activation::Relu;
};

struct NetConfig {
    std::vector<int> hidden{64, 64};
};

class DenseNet {
public:
    DenseNet() = default;
    explicit DenseNet(std::vector<Layer> layers);

    /// Hidden layers use ReLU, the output layer is linear. Weights are
    /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases start at zero.
    static DenseNet make(int input_dim, std::span<const int> hidden, int output_dim, Rng& rng);
    static DenseNet zeros(int input_dim, std::span<const int> hidden, int output_dim);

    int input_dim() const;
    int output_dim() const;
    std::size_t parameter_count() const;
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    std::vector<Layer>& layers() noexcept { return layers_; }

    /// observations: batch x input_dim. Returns batch x output_dim.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& observations) const;
    /// Single observation -> Q row.
    Eigen::VectorXd q_values(const Eigen::VectorXd& observation) const;
    int greedy_action(const Eigen::VectorXd& observation) const;

    /// Column-major forward pass (input_dim x batch), keeping activations.
    Eigen::MatrixXd forward_columns(const Eigen::MatrixXd& inputs,
                                    std::vector<Eigen::MatrixXd>* activations = nullptr) const;

    bool all_finite() const;
    std::vector<double> flatten() const;
    void unflatten(std::span<const double> params);

    friend bool operator==(const DenseNet& x, const DenseNet& y);

private:
    std::vector<Layer> layers_;
};

/// Gradient buffers shaped like a DenseNet's parameters.
struct Gradients {
    std::vector<Eigen::MatrixXd> weight;
    std::vector<Eigen::VectorXd> bias;

    static Gradients zeros_like(const DenseNet& net);
    Gradients& operator*=(double s);
    double max_abs() const;
};

struct LossConfig {
    bool huber = true;
    double huber_delta = 1.0;
};

double huber(double delta, double threshold);
/// d huber / d delta.
double huber_grad(double delta, double threshold);

struct BackwardResult {
    Gradients gradients;
    Eigen::VectorXd abs_td;  // |target - Q(s, a)| per sample
    double loss = 0.0;
};

/// loss = mean_i w_i * L(target_i - Q(s_i, a_i)); gradients w.r.t. every
/// parameter, flowing only through the chosen action's output. Throws
/// NumericError on non-finite targets or weights.
BackwardResult backward(const DenseNet& net, const Eigen::MatrixXd& observations, std::span<const int> actions,
                        const Eigen::VectorXd& targets, const Eigen::VectorXd& weights, const LossConfig& loss = {});

/// Loss only (for finite-difference checks).
double td_loss(const DenseNet& net, const Eigen::MatrixXd& observations, std::span<const int> actions,
               const Eigen::VectorXd& targets, const Eigen::VectorXd& weights, const LossConfig& loss = {});

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig config;
    Gradients first;
    Gradients second;
    std::int64_t step = 0;

    static AdamState for_net(const DenseNet& net, AdamConfig config = {});
};

/// Bias-corrected Adam update in place.
void adam_step(DenseNet& net, const Gradients& gradients, AdamState& state);

/// Deep copy used as the target network.
inline DenseNet sync_target(const DenseNet& online) { return online; }

struct NoiseConfig {
    double initial_sigma = 0.05;
    double target_divergence = 0.1;
    double adapt_factor = 1.01;
};

struct NoiseState {
    double sigma = 0.05;
    double target_divergence = 0.1;
    double adapt_factor = 1.01;

    static NoiseState from(const NoiseConfig& config) {
        return {config.initial_sigma, config.target_divergence, config.adapt_factor};
    }
};

/// Copy of `net` with i.i.d. N(0, sigma^2) added to every parameter.
DenseNet perturb(const DenseNet& net, double sigma, Rng& rng);

/// Grow sigma when perturbed and clean greedy actions disagree less often
/// than the target, shrink it otherwise.
void adapt_noise(NoiseState& state, double divergence);

/// Fraction of rows whose greedy actions differ between two nets.
double action_disagreement(const DenseNet& x, const DenseNet& y, const Eigen::MatrixXd& observations);

// --- checkpoints -------------------------------------------------------------

struct Checkpoint {
    DenseNet online;
    DenseNet target;
    AdamState adam;
    NoiseState noise;
    std::string rng_state;  // textual std::mt19937_64 state
    std::string variant;
    std::int64_t step = 0;
};

inline constexpr int kCheckpointVersion = 1;

/// JSON layout {"format":"pdm-checkpoint","version":1,...}; doubles are
/// written with round-trip precision so a reload resumes bit-exactly.
std::string checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pdm::nn
