#pragma once

// Proportional prioritized experience replay.
//
// Leaves hold p_i^alpha in a sum tree; raw priorities p_i are kept alongside
// so "insert with max priority" sees the unexponentiated value.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pdm/rng.hpp"

namespace pdm::replay {

struct Transition {
    Eigen::VectorXd state;
    int action = 0;
    double reward = 0.0;
    Eigen::VectorXd next_state;
    bool done = false;
};

/// Complete binary tree over a power-of-two number of leaves; each internal
/// node stores the sum of its children.
class SumTree {
public:
    explicit SumTree(std::size_t capacity);

    std::size_t capacity() const noexcept { return capacity_; }
    double total() const noexcept { return nodes_[1]; }
    double leaf(std::size_t index) const { return nodes_[capacity_ + index]; }

    /// Set leaf value (>= 0) and refresh sums on the root path.
    void set(std::size_t index, double value);

    /// Smallest leaf i with prefix_sum(0..i) > mass, found by descent. `mass`
    /// is clamped into [0, total); ties resolve toward the right child.
    std::size_t find_prefix(double mass) const;

    /// Max |parent - (left + right)| / max(1, |parent|) over all internal nodes.
    double max_consistency_error() const;

private:
    std::size_t capacity_;
    std::vector<double> nodes_;  // 1-based heap layout, leaves at [capacity, 2 * capacity)
};

std::size_t round_up_pow2(std::size_t n);

struct PERConfig {
    std::size_t capacity = std::size_t{1} << 15;
    double alpha = 0.6;  // 0 = uniform sampling
    double b_start = 0.4;
    double b_end = 1.0;
    std::size_t b_anneal_steps = 100000;
    double priority_epsilon = 1e-3;

    void validate() const;
};

/// Linear b_start -> b_end over b_anneal_steps, then held at b_end.
double anneal_b(const PERConfig& config, std::size_t step);

struct SampledBatch {
    std::vector<std::size_t> indices;  // leaf indices, for update_priorities
    std::vector<const Transition*> transitions;
    Eigen::VectorXd weights;  // importance-sampling weights, max-normalized
    double b = 1.0;
};

class PrioritizedReplay {
public:
    explicit PrioritizedReplay(PERConfig config);

    const PERConfig& config() const noexcept { return config_; }
    std::size_t size() const noexcept { return size_; }
    std::size_t capacity() const noexcept { return tree_.capacity(); }
    double max_priority() const noexcept { return max_priority_; }
    double priority(std::size_t index) const { return raw_[index]; }
    const SumTree& tree() const noexcept { return tree_; }
    const Transition& at(std::size_t index) const { return data_[index]; }

    /// Insert with the current max priority (1.0 when empty); overwrites the
    /// oldest entry once full. Throws UsageError on an observation size change.
    std::size_t push(Transition transition);

    /// Stratified proportional sample of `batch` leaves. Throws UsageError if
    /// size() < batch.
    SampledBatch sample(std::size_t batch, std::size_t step, Rng& rng) const;

    /// Leaf priority <- |delta| + epsilon. Throws UsageError on negative or
    /// non-finite |delta| or an index past size().
    void update_priorities(std::span<const std::size_t> indices, std::span<const double> abs_td);

    /// P(i) = p_i^alpha / sum_k p_k^alpha for every stored leaf.
    std::vector<double> probabilities() const;

    /// CSV dump: leaf,priority,done (debugging aid).
    void dump_csv(std::ostream& out) const;

private:
    void set_priority(std::size_t index, double priority);

    PERConfig config_;
    SumTree tree_;
    std::vector<double> raw_;
    std::vector<Transition> data_;
    std::size_t cursor_ = 0;
    std::size_t size_ = 0;
    double max_priority_ = 1.0;
    Eigen::Index state_dim_ = -1;
};

}  // namespace pdm::replay
