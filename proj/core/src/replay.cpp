#include "pdm/replay.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "pdm/error.hpp"

namespace pdm::replay {

std::size_t round_up_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

SumTree::SumTree(std::size_t capacity) : capacity_(round_up_pow2(std::max<std::size_t>(capacity, 1))) {
    nodes_.assign(2 * capacity_, 0.0);
}

void SumTree::set(std::size_t index, double value) {
    if (index >= capacity_) throw UsageError("SumTree::set: leaf index out of range");
    if (!(value >= 0.0) || !std::isfinite(value)) throw UsageError("SumTree::set: leaf value must be finite and >= 0");
    std::size_t node = capacity_ + index;
    nodes_[node] = value;
    for (node >>= 1; node >= 1; node >>= 1) nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
}

std::size_t SumTree::find_prefix(double mass) const {
    if (!(total() > 0.0)) throw UsageError("SumTree::find_prefix: tree is empty");
    mass = std::clamp(mass, 0.0, std::nextafter(total(), 0.0));
    std::size_t node = 1;
    while (node < capacity_) {
        const std::size_t left = 2 * node;
        if (mass < nodes_[left] || !(nodes_[left + 1] > 0.0)) {
            node = left;
        } else {
            mass -= nodes_[left];
            node = left + 1;
        }
    }
    return node - capacity_;
}

double SumTree::max_consistency_error() const {
    double worst = 0.0;
    for (std::size_t node = 1; node < capacity_; ++node) {
        const double sum = nodes_[2 * node] + nodes_[2 * node + 1];
        worst = std::max(worst, std::abs(nodes_[node] - sum) / std::max(1.0, std::abs(nodes_[node])));
    }
    return worst;
}

void PERConfig::validate() const {
    if (capacity == 0) throw ConfigError("replay: capacity must be positive");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("replay: alpha must lie in [0, 1]");
    if (!(b_start >= 0.0 && b_start <= 1.0)) throw ConfigError("replay: b_start must lie in [0, 1]");
    if (!(b_end >= b_start && b_end <= 1.0)) throw ConfigError("replay: b_end must lie in [b_start, 1]");
    if (b_anneal_steps == 0) throw ConfigError("replay: b_anneal_steps must be positive");
    if (!(priority_epsilon > 0.0)) throw ConfigError("replay: priority epsilon must be positive");
}

double anneal_b(const PERConfig& config, std::size_t step) {
    if (step >= config.b_anneal_steps) return config.b_end;
    const double frac = static_cast<double>(step) / static_cast<double>(config.b_anneal_steps);
    return config.b_start + frac * (config.b_end - config.b_start);
}

PrioritizedReplay::PrioritizedReplay(PERConfig config) : config_(config), tree_(config.capacity) {
    config_.validate();
    raw_.assign(config_.capacity, 0.0);
    data_.resize(config_.capacity);
}

void PrioritizedReplay::set_priority(std::size_t index, double priority) {
    raw_[index] = priority;
    tree_.set(index, std::pow(priority, config_.alpha));
}

std::size_t PrioritizedReplay::push(Transition transition) {
    if (transition.state.size() != transition.next_state.size()) {
        throw UsageError("replay: state and next_state differ in dimension");
    }
    if (state_dim_ < 0) {
        state_dim_ = transition.state.size();
    } else if (transition.state.size() != state_dim_) {
        throw UsageError("replay: observation dimension " + std::to_string(transition.state.size()) +
                         " does not match buffer dimension " + std::to_string(state_dim_));
    }
    const std::size_t index = cursor_;
    if (size_ == 0) max_priority_ = 1.0;
    data_[index] = std::move(transition);
    // The new leaf carries the max, so evicting an old max leaves it unchanged.
    set_priority(index, max_priority_);
    cursor_ = (cursor_ + 1) % config_.capacity;
    size_ = std::min(size_ + 1, config_.capacity);
    return index;
}

SampledBatch PrioritizedReplay::sample(std::size_t batch, std::size_t step, Rng& rng) const {
    if (batch == 0) throw UsageError("replay: batch size must be positive");
    if (size_ < batch) {
        throw UsageError("replay: cannot sample " + std::to_string(batch) + " transitions from " +
                         std::to_string(size_));
    }
    SampledBatch out;
    out.indices.resize(batch);
    out.transitions.resize(batch);
    out.weights.resize(static_cast<Eigen::Index>(batch));
    out.b = anneal_b(config_, step);

    const double total = tree_.total();
    const double segment = total / static_cast<double>(batch);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double n = static_cast<double>(size_);
    double max_weight = 0.0;
    for (std::size_t j = 0; j < batch; ++j) {
        const double mass = (static_cast<double>(j) + unit(rng)) * segment;
        const std::size_t leaf = tree_.find_prefix(mass);
        out.indices[j] = leaf;
        out.transitions[j] = &data_[leaf];
        const double p = tree_.leaf(leaf) / total;
        const double w = std::pow(n * p, -out.b);
        out.weights(static_cast<Eigen::Index>(j)) = w;
        max_weight = std::max(max_weight, w);
    }
    out.weights /= max_weight;
    return out;
}

void PrioritizedReplay::update_priorities(std::span<const std::size_t> indices, std::span<const double> abs_td) {
    if (indices.size() != abs_td.size()) throw UsageError("replay: indices and |delta| sizes differ");
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] >= size_) throw UsageError("replay: priority index out of range");
        if (!(abs_td[k] >= 0.0) || !std::isfinite(abs_td[k])) {
            throw UsageError("replay: |delta| must be finite and >= 0");
        }
    }
    bool lowered_max = false;
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const double old = raw_[indices[k]];
        const double priority = abs_td[k] + config_.priority_epsilon;
        set_priority(indices[k], priority);
        if (priority > max_priority_) max_priority_ = priority;
        if (old >= max_priority_ && priority < old) lowered_max = true;
    }
    if (lowered_max) {
        max_priority_ = *std::max_element(raw_.begin(), raw_.begin() + static_cast<std::ptrdiff_t>(size_));
    }
}

std::vector<double> PrioritizedReplay::probabilities() const {
    std::vector<double> p(size_);
    const double total = tree_.total();
    for (std::size_t i = 0; i < size_; ++i) p[i] = tree_.leaf(i) / total;
    return p;
}

void PrioritizedReplay::dump_csv(std::ostream& out) const {
    out << "leaf,priority,done\n";
    for (std::size_t i = 0; i < size_; ++i) {
        out << i << ',' << raw_[i] << ',' << (data_[i].done ? 1 : 0) << '\n';
    }
}

}  // namespace pdm::replay
