#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "windrl/env.hpp"
#include "windrl/nn.hpp"
#include "windrl/rng.hpp"

namespace windrl::ddqn {

// The part of the turbine state the network sees.
struct Snapshot {
    double wind_speed;
    double misalignment;
    double rpm;
    double pitch;
};

Snapshot snapshot(const env::TurbineState& s);

// [(U - 4)/9, misalignment/30, (rpm - 6)/19, pitch/20, b2, b1, b0] with
// b2 b1 b0 the action index in binary.
constexpr int kInputDim = 7;
nn::Vector encode_input(const Snapshot& s, int action);
void encode_into(const Snapshot& s, int action, double* out);

struct Transition {
    Snapshot state;
    int action;
    double reward;
    Snapshot next_state;
    bool terminal;
};

// Complete binary tree over a power-of-two number of leaves. Node 1 is the
// root, leaves live at [capacity, 2 capacity). A parent is always recomputed
// as left + right, never patched by a delta, so rounding cannot drift.
class SumTree {
public:
    explicit SumTree(std::size_t min_capacity);

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return size_; }
    double total() const { return sum_[1]; }
    double max_priority() const { return max_[1]; }
    double leaf(std::size_t i) const;

    // Writes at the ring cursor; returns the leaf index used.
    std::size_t add(double priority);
    void update(std::size_t leaf, double priority);  // throws IndexOutOfRange

    // Leaf whose cumulative interval contains value in [0, total).
    std::size_t find(double value) const;

    // Largest |node - (left + right)| over all internal nodes.
    double consistency_error() const;

private:
    void set(std::size_t leaf, double priority);

    std::size_t capacity_;
    std::size_t size_ = 0;
    std::size_t cursor_ = 0;
    std::vector<double> sum_;
    std::vector<double> max_;
};

struct Batch {
    std::vector<std::size_t> leaves;
    std::vector<double> probabilities;
    std::vector<const Transition*> transitions;
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    std::size_t size() const { return tree_.size(); }
    std::size_t capacity() const { return tree_.capacity(); }
    const SumTree& tree() const { return tree_; }

    // New items enter at the current max priority (1.0 when empty).
    std::size_t store(const Transition& t);
    // Stratified proportional sampling. Throws BufferTooSmall.
    Batch sample(std::size_t batch_size, Rng& rng) const;
    // priority <- (|delta| + eps)^alpha
    void update_priorities(const std::vector<std::size_t>& leaves, const std::vector<double>& td_errors,
                           double alpha, double eps);
    const Transition& at(std::size_t leaf) const;

private:
    SumTree tree_;
    std::vector<Transition> items_;
};

enum class TargetRule {
    Ddqn,          // online argmax, target evaluation
    TargetMax,     // max over the target network
};

struct Hyperparams {
    double learning_rate = 0.00033;
    int episodes = 149;
    double alpha_per = 0.6711;
    double eps_per = 0.01;
    int batch_size = 16;
    int epochs = 3;
    double tau = 0.1;
    double eps_greedy = 0.3;
    double gamma = 0.95;
    double l2 = 0.00859;

    int max_episode_steps = 150;
    std::size_t replay_capacity = 50000;
    TargetRule target_rule = TargetRule::Ddqn;
    double is_beta = 0.0;  // importance-sampling exponent; 0 disables the correction
    // A win ends the episode either way. When true the stored transition is
    // still bootstrapped, since the turbine keeps running past the win; when
    // false the win is absorbing and holding just below the win threshold
    // outscores winning.
    bool bootstrap_wins = true;

    void validate() const;
};

Hyperparams optimized_hyperparams();
Hyperparams arbitrary_hyperparams();
Hyperparams load_hyperparams(const std::string& path);
void save_hyperparams(const Hyperparams& hp, const std::string& path);

class Agent {
public:
    Agent(const Hyperparams& hp, std::uint64_t seed, const nn::NetSpec& spec = {});
    // Greedy-only agent from a checkpoint.
    explicit Agent(nn::NetParams online);

    std::array<double, env::kActionCount> q_values(const Snapshot& s) const;
    int select_action(const Snapshot& s, double epsilon, Rng& rng) const;
    int act_greedy(const Snapshot& s) const;

    void store(const Transition& t) { buffer_.store(t); }
    bool ready() const { return buffer_.size() >= static_cast<std::size_t>(hp_.batch_size); }
    // Samples a batch and learns on it; returns the loss of the last epoch.
    double train_step();
    // Targets computed once, `epochs` Adam passes, priorities refreshed from
    // post-update TD errors, then the soft target update.
    double train_on(const Batch& batch);
    // Bootstrapped targets for a batch under the configured rule.
    nn::Vector targets(const Batch& batch) const;

    const nn::NetParams& online() const { return online_; }
    const nn::NetParams& target() const { return target_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    const Hyperparams& hyperparams() const { return hp_; }
    Rng& rng() { return rng_; }

private:
    Hyperparams hp_;
    nn::NetParams online_;
    nn::NetParams target_;
    nn::AdamState adam_;
    ReplayBuffer buffer_;
    Rng rng_;
};

struct LogRow {
    int episode;
    int step;
    double reward;
    double cumulative_reward;
    double epsilon;
    double loss;  // NaN before warm-up
    double bonus;
    bool won;
};

struct TrainResult {
    std::vector<LogRow> log;
    std::vector<bool> episode_won;
};

// Each episode: steady random wind in [4, 13] m/s, random admissible start,
// epsilon-greedy rollout, one train_step per environment step once warm.
TrainResult train(Agent& agent, env::TurbineEnv& env, std::uint64_t seed,
                  const std::function<void(int episode, bool won)>& on_episode = {});

void write_training_log(const std::vector<LogRow>& log, const std::string& path);

}  // namespace windrl::ddqn
