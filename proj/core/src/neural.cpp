#include "pdm/neural.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "pdm/error.hpp"
#include "pdm/io.hpp"

namespace pdm::nn {

DenseNet::DenseNet(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw UsageError("DenseNet: at least one layer required");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (layers_[l].bias.size() != layers_[l].weight.rows()) throw UsageError("DenseNet: bias size mismatch");
        if (l > 0 && layers_[l].weight.cols() != layers_[l - 1].weight.rows()) {
            throw UsageError("DenseNet: layer dimensions do not chain");
        }
    }
}

DenseNet DenseNet::make(int input_dim, std::span<const int> hidden, int output_dim, Rng& rng) {
    DenseNet net = zeros(input_dim, hidden, output_dim);
    for (auto& layer : net.layers_) {
        const double limit = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
        std::uniform_real_distribution<double> dist(-limit, limit);
        // Row-major fill order so the draw sequence does not depend on storage.
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = dist(rng);
        }
    }
    return net;
}

DenseNet DenseNet::zeros(int input_dim, std::span<const int> hidden, int output_dim) {
    if (input_dim < 1 || output_dim < 1) throw UsageError("DenseNet: dimensions must be positive");
    std::vector<Layer> layers;
    int in = input_dim;
    for (int width : hidden) {
        if (width < 1) throw UsageError("DenseNet: hidden width must be positive");
        layers.push_back({Eigen::MatrixXd::Zero(width, in), Eigen::VectorXd::Zero(width), Activation::Relu});
        in = width;
    }
    layers.push_back({Eigen::MatrixXd::Zero(output_dim, in), Eigen::VectorXd::Zero(output_dim), Activation::Identity});
    return DenseNet(std::move(layers));
}

int DenseNet::input_dim() const { return static_cast<int>(layers_.front().weight.cols()); }
int DenseNet::output_dim() const { return static_cast<int>(layers_.back().weight.rows()); }

std::size_t DenseNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

Eigen::MatrixXd DenseNet::forward_columns(const Eigen::MatrixXd& inputs, std::vector<Eigen::MatrixXd>* activations) const {
    if (inputs.rows() != input_dim()) {
        throw UsageError("DenseNet: observation dimension " + std::to_string(inputs.rows()) + " != input dimension " +
                         std::to_string(input_dim()));
    }
    if (activations) {
        activations->clear();
        activations->push_back(inputs);
    }
    Eigen::MatrixXd a = inputs;
    for (const auto& layer : layers_) {
        Eigen::MatrixXd z = layer.weight * a;
        z.colwise() += layer.bias;
        if (layer.activation == Activation::Relu) z = z.cwiseMax(0.0);
        a = std::move(z);
        if (activations) activations->push_back(a);
    }
    return a;
}

Eigen::MatrixXd DenseNet::forward(const Eigen::MatrixXd& observations) const {
    if (observations.cols() != input_dim()) {
        throw UsageError("DenseNet: observation dimension " + std::to_string(observations.cols()) +
                         " != input dimension " + std::to_string(input_dim()));
    }
    return forward_columns(observations.transpose()).transpose();
}

Eigen::VectorXd DenseNet::q_values(const Eigen::VectorXd& observation) const {
    return forward_columns(observation).col(0);
}

int DenseNet::greedy_action(const Eigen::VectorXd& observation) const {
    const Eigen::VectorXd q = q_values(observation);
    Eigen::Index best = 0;
    q.maxCoeff(&best);
    return static_cast<int>(best);
}

bool DenseNet::all_finite() const {
    return std::all_of(layers_.begin(), layers_.end(),
                       [](const Layer& l) { return l.weight.allFinite() && l.bias.allFinite(); });
}

std::vector<double> DenseNet::flatten() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto& l : layers_) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out.push_back(l.weight(r, c));
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias(r));
    }
    return out;
}

void DenseNet::unflatten(std::span<const double> params) {
    if (params.size() != parameter_count()) throw UsageError("DenseNet::unflatten: parameter count mismatch");
    std::size_t k = 0;
    for (auto& l : layers_) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = params[k++];
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = params[k++];
    }
}

bool operator==(const DenseNet& x, const DenseNet& y) {
    if (x.layers_.size() != y.layers_.size()) return false;
    for (std::size_t l = 0; l < x.layers_.size(); ++l) {
        const auto& a = x.layers_[l];
        const auto& b = y.layers_[l];
        if (a.activation != b.activation || a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols())
            return false;
        if (a.weight != b.weight || a.bias != b.bias) return false;
    }
    return true;
}

Gradients Gradients::zeros_like(const DenseNet& net) {
    Gradients g;
    for (const auto& l : net.layers()) {
        g.weight.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
        g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    }
    return g;
}

Gradients& Gradients::operator*=(double s) {
    for (auto& w : weight) w *= s;
    for (auto& b : bias) b *= s;
    return *this;
}

double Gradients::max_abs() const {
    double m = 0.0;
    for (const auto& w : weight) m = std::max(m, w.cwiseAbs().maxCoeff());
    for (const auto& b : bias) m = std::max(m, b.cwiseAbs().maxCoeff());
    return m;
}

double huber(double delta, double threshold) {
    const double a = std::abs(delta);
    return a <= threshold ? 0.5 * delta * delta : threshold * (a - 0.5 * threshold);
}

double huber_grad(double delta, double threshold) { return std::clamp(delta, -threshold, threshold); }

namespace {

void check_batch(const DenseNet& net, const Eigen::MatrixXd& observations, std::span<const int> actions,
                 const Eigen::VectorXd& targets, const Eigen::VectorXd& weights) {
    const auto n = observations.rows();
    if (n == 0) throw UsageError("backward: empty batch");
    if (static_cast<Eigen::Index>(actions.size()) != n || targets.size() != n || weights.size() != n) {
        throw UsageError("backward: inconsistent batch shapes");
    }
    if (!targets.allFinite()) throw NumericError("backward: non-finite TD target");
    if (!weights.allFinite()) throw NumericError("backward: non-finite importance weight");
    for (int a : actions) {
        if (a < 0 || a >= net.output_dim()) throw UsageError("backward: action index out of range");
    }
}

double sample_loss(double delta, const LossConfig& loss) {
    return loss.huber ? huber(delta, loss.huber_delta) : 0.5 * delta * delta;
}

double sample_loss_grad(double delta, const LossConfig& loss) {
    return loss.huber ? huber_grad(delta, loss.huber_delta) : delta;
}

}  // namespace

BackwardResult backward(const DenseNet& net, const Eigen::MatrixXd& observations, std::span<const int> actions,
                        const Eigen::VectorXd& targets, const Eigen::VectorXd& weights, const LossConfig& loss) {
    check_batch(net, observations, actions, targets, weights);
    const Eigen::Index batch = observations.rows();
    std::vector<Eigen::MatrixXd> acts;
    const Eigen::MatrixXd q = net.forward_columns(observations.transpose(), &acts);

    BackwardResult out;
    out.abs_td.resize(batch);
    // dL/dQ: nonzero only at the chosen action of each sample.
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(q.rows(), batch);
    const double inv_b = 1.0 / static_cast<double>(batch);
    for (Eigen::Index i = 0; i < batch; ++i) {
        const int a = actions[static_cast<std::size_t>(i)];
        const double delta = targets(i) - q(a, i);
        out.abs_td(i) = std::abs(delta);
        out.loss += weights(i) * sample_loss(delta, loss) * inv_b;
        grad(a, i) = -weights(i) * sample_loss_grad(delta, loss) * inv_b;
    }

    const auto& layers = net.layers();
    out.gradients = Gradients::zeros_like(net);
    for (std::size_t l = layers.size(); l-- > 0;) {
        if (layers[l].activation == Activation::Relu) {
            grad = grad.cwiseProduct((acts[l + 1].array() > 0.0).cast<double>().matrix());
        }
        out.gradients.weight[l].noalias() = grad * acts[l].transpose();
        out.gradients.bias[l] = grad.rowwise().sum();
        if (l > 0) grad = layers[l].weight.transpose() * grad;
    }
    return out;
}

double td_loss(const DenseNet& net, const Eigen::MatrixXd& observations, std::span<const int> actions,
               const Eigen::VectorXd& targets, const Eigen::VectorXd& weights, const LossConfig& loss) {
    check_batch(net, observations, actions, targets, weights);
    const Eigen::MatrixXd q = net.forward_columns(observations.transpose());
    double total = 0.0;
    for (Eigen::Index i = 0; i < observations.rows(); ++i) {
        total += weights(i) * sample_loss(targets(i) - q(actions[static_cast<std::size_t>(i)], i), loss);
    }
    return total / static_cast<double>(observations.rows());
}

AdamState AdamState::for_net(const DenseNet& net, AdamConfig config) {
    return {config, Gradients::zeros_like(net), Gradients::zeros_like(net), 0};
}

void adam_step(DenseNet& net, const Gradients& gradients, AdamState& state) {
    auto& layers = net.layers();
    if (gradients.weight.size() != layers.size() || state.first.weight.size() != layers.size()) {
        throw UsageError("adam_step: gradient shapes do not match the network");
    }
    ++state.step;
    const auto& c = state.config;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
        if (g.rows() != param.rows() || g.cols() != param.cols()) {
            throw UsageError("adam_step: gradient shapes do not match the network");
        }
        m = c.beta1 * m + (1.0 - c.beta1) * g;
        v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
        param.array() -= c.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.epsilon);
    };
    for (std::size_t l = 0; l < layers.size(); ++l) {
        update(layers[l].weight, gradients.weight[l], state.first.weight[l], state.second.weight[l]);
        update(layers[l].bias, gradients.bias[l], state.first.bias[l], state.second.bias[l]);
    }
}

DenseNet perturb(const DenseNet& net, double sigma, Rng& rng) {
    if (!(sigma >= 0.0)) throw UsageError("perturb: sigma must be >= 0");
    DenseNet out = net;
    if (sigma == 0.0) return out;
    std::normal_distribution<double> noise(0.0, sigma);
    for (auto& l : out.layers()) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) += noise(rng);
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) += noise(rng);
    }
    return out;
}

void adapt_noise(NoiseState& state, double divergence) {
    if (!(divergence >= 0.0 && divergence <= 1.0)) throw UsageError("adapt_noise: divergence must lie in [0, 1]");
    if (divergence < state.target_divergence) {
        state.sigma *= state.adapt_factor;
    } else {
        state.sigma /= state.adapt_factor;
    }
}

double action_disagreement(const DenseNet& x, const DenseNet& y, const Eigen::MatrixXd& observations) {
    if (observations.rows() == 0) return 0.0;
    const Eigen::MatrixXd qx = x.forward(observations);
    const Eigen::MatrixXd qy = y.forward(observations);
    int differ = 0;
    for (Eigen::Index i = 0; i < observations.rows(); ++i) {
        Eigen::Index ax = 0, ay = 0;
        qx.row(i).maxCoeff(&ax);
        qy.row(i).maxCoeff(&ay);
        differ += ax != ay;
    }
    return static_cast<double>(differ) / static_cast<double>(observations.rows());
}

// --- checkpoints -------------------------------------------------------------

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) throw ParseError("checkpoint: matrix row count");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw ParseError("checkpoint: matrix column count");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXd vector_from_json(const json& j, Eigen::Index size) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size) throw ParseError("checkpoint: vector size");
    Eigen::VectorXd v(size);
    for (Eigen::Index i = 0; i < size; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

json net_to_json(const DenseNet& net) {
    json layers = json::array();
    for (const auto& l : net.layers()) {
        layers.push_back({{"in", l.weight.cols()},
                          {"out", l.weight.rows()},
                          {"activation", l.activation == Activation::Relu ? "relu" : "identity"},
                          {"weight", matrix_to_json(l.weight)},
                          {"bias", vector_to_json(l.bias)}});
    }
    return layers;
}

DenseNet net_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw ParseError("checkpoint: network has no layers");
    std::vector<Layer> layers;
    for (const auto& lj : j) {
        const auto in = lj.at("in").get<Eigen::Index>();
        const auto out = lj.at("out").get<Eigen::Index>();
        const auto act = lj.at("activation").get<std::string>();
        if (act != "relu" && act != "identity") throw ParseError("checkpoint: unknown activation '" + act + "'");
        layers.push_back({matrix_from_json(lj.at("weight"), out, in), vector_from_json(lj.at("bias"), out),
                          act == "relu" ? Activation::Relu : Activation::Identity});
    }
    return DenseNet(std::move(layers));
}

json grads_to_json(const Gradients& g) {
    json out = json::array();
    for (std::size_t l = 0; l < g.weight.size(); ++l) {
        out.push_back({{"weight", matrix_to_json(g.weight[l])}, {"bias", vector_to_json(g.bias[l])}});
    }
    return out;
}

Gradients grads_from_json(const json& j, const DenseNet& shape) {
    Gradients g = Gradients::zeros_like(shape);
    if (!j.is_array() || j.size() != g.weight.size()) throw ParseError("checkpoint: Adam moment layer count");
    for (std::size_t l = 0; l < g.weight.size(); ++l) {
        g.weight[l] = matrix_from_json(j[l].at("weight"), g.weight[l].rows(), g.weight[l].cols());
        g.bias[l] = vector_from_json(j[l].at("bias"), g.bias[l].size());
    }
    return g;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& cp) {
    json j;
    j["format"] = "pdm-checkpoint";
    j["version"] = kCheckpointVersion;
    j["variant"] = cp.variant;
    j["step"] = cp.step;
    j["online"] = net_to_json(cp.online);
    j["target"] = net_to_json(cp.target);
    j["adam"] = {{"learning_rate", cp.adam.config.learning_rate},
                 {"beta1", cp.adam.config.beta1},
                 {"beta2", cp.adam.config.beta2},
                 {"epsilon", cp.adam.config.epsilon},
                 {"step", cp.adam.step},
                 {"first", grads_to_json(cp.adam.first)},
                 {"second", grads_to_json(cp.adam.second)}};
    j["noise"] = {{"sigma", cp.noise.sigma},
                  {"target_divergence", cp.noise.target_divergence},
                  {"adapt_factor", cp.noise.adapt_factor}};
    j["rng_state"] = cp.rng_state;
    return j.dump(1);
}

Checkpoint checkpoint_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }
    try {
        if (j.value("format", "") != "pdm-checkpoint") throw ParseError("checkpoint: not a pdm checkpoint");
        if (j.at("version").get<int>() != kCheckpointVersion) {
            throw ParseError("checkpoint: unsupported version " + j.at("version").dump());
        }
        Checkpoint cp;
        cp.variant = j.at("variant").get<std::string>();
        cp.step = j.at("step").get<std::int64_t>();
        cp.online = net_from_json(j.at("online"));
        cp.target = net_from_json(j.at("target"));
        if (cp.online.flatten().size() != cp.target.flatten().size() ||
            cp.online.input_dim() != cp.target.input_dim() || cp.online.output_dim() != cp.target.output_dim()) {
            throw ParseError("checkpoint: online and target networks differ in shape");
        }
        const auto& a = j.at("adam");
        cp.adam.config = {a.at("learning_rate").get<double>(), a.at("beta1").get<double>(), a.at("beta2").get<double>(),
                          a.at("epsilon").get<double>()};
        cp.adam.step = a.at("step").get<std::int64_t>();
        cp.adam.first = grads_from_json(a.at("first"), cp.online);
        cp.adam.second = grads_from_json(a.at("second"), cp.online);
        const auto& n = j.at("noise");
        cp.noise = {n.at("sigma").get<double>(), n.at("target_divergence").get<double>(),
                    n.at("adapt_factor").get<double>()};
        cp.rng_state = j.at("rng_state").get<std::string>();
        return cp;
    } catch (const json::exception& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    io::write_file_atomic(path, checkpoint_to_json(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_json(io::read_file(path)); }

}  // namespace pdm::nn
