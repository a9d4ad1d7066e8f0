#include "windrl/ddqn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "windrl/error.hpp"

namespace windrl::ddqn {

Snapshot snapshot(const env::TurbineState& s) { return {s.wind_speed, s.misalignment(), s.rpm, s.pitch}; }

void encode_into(const Snapshot& s, int action, double* out) {
    out[0] = (s.wind_speed - 4.0) / 9.0;
    out[1] = s.misalignment / 30.0;
    out[2] = (s.rpm - 6.0) / 19.0;
    out[3] = s.pitch / 20.0;
    out[4] = static_cast<double>((action >> 2) & 1);
    out[5] = static_cast<double>((action >> 1) & 1);
    out[6] = static_cast<double>(action & 1);
}

nn::Vector encode_input(const Snapshot& s, int action) {
    require(action >= 0 && action < env::kActionCount, ErrorCode::InvalidArgument, "action index outside 0..6");
    nn::Vector v(kInputDim);
    encode_into(s, action, v.data());
    return v;
}

SumTree::SumTree(std::size_t min_capacity) {
    require(min_capacity >= 1, ErrorCode::InvalidArgument, "sum tree capacity must be >= 1");
    capacity_ = std::bit_ceil(min_capacity);
    sum_.assign(2 * capacity_, 0.0);
    max_.assign(2 * capacity_, 0.0);
}

double SumTree::leaf(std::size_t i) const {
    if (i >= capacity_) throw Error(ErrorCode::IndexOutOfRange, "sum tree leaf out of range");
    return sum_[capacity_ + i];
}

void SumTree::set(std::size_t leaf, double priority) {
    require(priority >= 0.0 && std::isfinite(priority), ErrorCode::InvalidArgument, "priority must be finite and >= 0");
    std::size_t i = capacity_ + leaf;
    sum_[i] = priority;
    max_[i] = priority;
    for (i >>= 1; i >= 1; i >>= 1) {
        sum_[i] = sum_[2 * i] + sum_[2 * i + 1];
        max_[i] = std::max(max_[2 * i], max_[2 * i + 1]);
    }
}

std::size_t SumTree::add(double priority) {
    const std::size_t leaf = cursor_;
    set(leaf, priority);
    cursor_ = (cursor_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
    return leaf;
}

void SumTree::update(std::size_t leaf, double priority) {
    if (leaf >= size_) throw Error(ErrorCode::IndexOutOfRange, "sum tree leaf not in use");
    set(leaf, priority);
}

std::size_t SumTree::find(double value) const {
    std::size_t i = 1;
    while (i < capacity_) {
        const std::size_t l = 2 * i;
        if (value < sum_[l] || sum_[l + 1] <= 0.0) {
            i = l;
        } else {
            value -= sum_[l];
            i = l + 1;
        }
    }
    return i - capacity_;
}

double SumTree::consistency_error() const {
    double e = 0.0;
    for (std::size_t i = 1; i < capacity_; ++i) e = std::max(e, std::abs(sum_[i] - (sum_[2 * i] + sum_[2 * i + 1])));
    return e;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : tree_(capacity) { items_.resize(tree_.capacity()); }

std::size_t ReplayBuffer::store(const Transition& t) {
    require(t.action >= 0 && t.action < env::kActionCount, ErrorCode::InvalidArgument, "action index outside 0..6");
    const double p = tree_.size() == 0 ? 1.0 : tree_.max_priority();
    const std::size_t leaf = tree_.add(p);
    items_[leaf] = t;
    return leaf;
}

Batch ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
    if (batch_size == 0 || tree_.size() < batch_size) throw Error(ErrorCode::BufferTooSmall, "replay buffer too small");
    Batch b;
    const double total = tree_.total();
    const double segment = total / static_cast<double>(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
        const double v = std::min((static_cast<double>(i) + rng.uniform()) * segment, std::nextafter(total, 0.0));
        const std::size_t leaf = tree_.find(v);
        b.leaves.push_back(leaf);
        b.probabilities.push_back(tree_.leaf(leaf) / total);
        b.transitions.push_back(&items_[leaf]);
    }
    return b;
}

void ReplayBuffer::update_priorities(const std::vector<std::size_t>& leaves, const std::vector<double>& td_errors,
                                     double alpha, double eps) {
    require(leaves.size() == td_errors.size(), ErrorCode::ShapeMismatch, "one TD error per leaf");
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        tree_.update(leaves[i], std::pow(std::abs(td_errors[i]) + eps, alpha));
    }
}

const Transition& ReplayBuffer::at(std::size_t leaf) const {
    if (leaf >= tree_.size()) throw Error(ErrorCode::IndexOutOfRange, "replay index out of range");
    return items_[leaf];
}

void Hyperparams::validate() const {
    require(learning_rate > 0.0, ErrorCode::InvalidArgument, "learning rate must be positive");
    require(episodes >= 0, ErrorCode::InvalidArgument, "episodes must be >= 0");
    require(alpha_per >= 0.0 && alpha_per <= 1.0, ErrorCode::InvalidArgument, "alpha_PER must be in [0, 1]");
    require(eps_per > 0.0, ErrorCode::InvalidArgument, "eps_PER must be positive");
    require(batch_size >= 1 && epochs >= 1, ErrorCode::InvalidArgument, "batch size and epochs must be >= 1");
    require(tau >= 0.0 && tau <= 1.0, ErrorCode::InvalidArgument, "tau must be in [0, 1]");
    require(eps_greedy >= 0.0 && eps_greedy <= 1.0, ErrorCode::InvalidArgument, "eps_greedy must be in [0, 1]");
    require(gamma > 0.0 && gamma < 1.0, ErrorCode::InvalidArgument, "gamma must be in (0, 1)");
    require(l2 >= 0.0, ErrorCode::InvalidArgument, "l2 must be >= 0");
    require(max_episode_steps >= 1, ErrorCode::InvalidArgument, "max_episode_steps must be >= 1");
    require(replay_capacity >= static_cast<std::size_t>(batch_size), ErrorCode::InvalidArgument,
            "replay capacity below batch size");
}

Hyperparams optimized_hyperparams() { return {}; }

Hyperparams arbitrary_hyperparams() {
    Hyperparams hp;
    hp.learning_rate = 0.01;
    hp.episodes = 250;
    hp.alpha_per = 0.75;
    hp.eps_per = 0.01;
    hp.batch_size = 32;
    hp.epochs = 3;
    hp.tau = 0.1;
    hp.eps_greedy = 0.2;
    hp.gamma = 0.95;
    hp.l2 = 0.001;
    return hp;
}

Hyperparams load_hyperparams(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open hyperparameter file");
    Hyperparams hp;
    try {
        nlohmann::json j;
        in >> j;
        hp.learning_rate = j.at("learning_rate").get<double>();
        hp.episodes = j.at("episodes").get<int>();
        hp.alpha_per = j.at("alpha_per").get<double>();
        hp.eps_per = j.at("eps_per").get<double>();
        hp.batch_size = j.at("batch_size").get<int>();
        hp.epochs = j.at("epochs").get<int>();
        hp.tau = j.at("tau").get<double>();
        hp.eps_greedy = j.at("eps_greedy").get<double>();
        hp.gamma = j.at("gamma").get<double>();
        hp.l2 = j.at("l2").get<double>();
        hp.max_episode_steps = j.value("max_episode_steps", hp.max_episode_steps);
        hp.replay_capacity = j.value("replay_capacity", hp.replay_capacity);
        hp.is_beta = j.value("is_beta", hp.is_beta);
        hp.bootstrap_wins = j.value("bootstrap_wins", hp.bootstrap_wins);
        const std::string rule = j.value("target_rule", std::string("ddqn"));
        if (rule == "ddqn") hp.target_rule = TargetRule::Ddqn;
        else if (rule == "target-max") hp.target_rule = TargetRule::TargetMax;
        else fail(ErrorCode::ParseError, "target_rule must be ddqn or target-max");
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, std::string("hyperparameters: ") + e.what());
    }
    hp.validate();
    return hp;
}

void save_hyperparams(const Hyperparams& hp, const std::string& path) {
    nlohmann::ordered_json j;
    j["learning_rate"] = hp.learning_rate;
    j["episodes"] = hp.episodes;
    j["alpha_per"] = hp.alpha_per;
    j["eps_per"] = hp.eps_per;
    j["batch_size"] = hp.batch_size;
    j["epochs"] = hp.epochs;
    j["tau"] = hp.tau;
    j["eps_greedy"] = hp.eps_greedy;
    j["gamma"] = hp.gamma;
    j["l2"] = hp.l2;
    j["max_episode_steps"] = hp.max_episode_steps;
    j["replay_capacity"] = hp.replay_capacity;
    j["target_rule"] = hp.target_rule == TargetRule::Ddqn ? "ddqn" : "target-max";
    j["is_beta"] = hp.is_beta;
    j["bootstrap_wins"] = hp.bootstrap_wins;
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open hyperparameter output");
    out << j.dump(2) << '\n';
}

Agent::Agent(const Hyperparams& hp, std::uint64_t seed, const nn::NetSpec& spec)
    : hp_(hp), buffer_(hp.replay_capacity), rng_(seed) {
    hp_.validate();
    require(spec.input_dim == kInputDim && spec.output_dim == 1, ErrorCode::ShapeMismatch,
            "Q network must map 7 inputs to 1 output");
    online_ = nn::init_params(spec, rng_);
    target_ = online_;
    adam_ = nn::AdamState::for_params(online_, hp_.learning_rate);
}

Agent::Agent(nn::NetParams online) : buffer_(1), rng_(0) {
    const auto spec = online.spec();
    require(spec.input_dim == kInputDim && spec.output_dim == 1, ErrorCode::ShapeMismatch,
            "Q network must map 7 inputs to 1 output");
    online_ = std::move(online);
    target_ = online_;
    adam_ = nn::AdamState::for_params(online_, hp_.learning_rate);
}

std::array<double, env::kActionCount> Agent::q_values(const Snapshot& s) const {
    nn::Matrix x(kInputDim, env::kActionCount);
    for (int a = 0; a < env::kActionCount; ++a) encode_into(s, a, x.col(a).data());
    const nn::Matrix q = nn::forward(online_, x);
    std::array<double, env::kActionCount> out{};
    for (int a = 0; a < env::kActionCount; ++a) out[a] = q(0, a);
    return out;
}

int Agent::act_greedy(const Snapshot& s) const {
    const auto q = q_values(s);
    // max_element returns the first maximum: ties go to the lowest index.
    return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
}

int Agent::select_action(const Snapshot& s, double epsilon, Rng& rng) const {
    if (epsilon > 0.0 && rng.uniform() < epsilon) return static_cast<int>(rng.below(env::kActionCount));
    return act_greedy(s);
}

nn::Vector Agent::targets(const Batch& batch) const {
    const auto n = static_cast<Eigen::Index>(batch.transitions.size());
    nn::Matrix xn(kInputDim, n * env::kActionCount);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int a = 0; a < env::kActionCount; ++a) {
            encode_into(batch.transitions[i]->next_state, a, xn.col(i * env::kActionCount + a).data());
        }
    }
    const nn::Matrix qt = nn::forward(target_, xn);
    nn::Matrix qo;
    if (hp_.target_rule == TargetRule::Ddqn) qo = nn::forward(online_, xn);
    nn::Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Transition& t = *batch.transitions[i];
        if (t.terminal) {
            y(i) = t.reward;
            continue;
        }
        const Eigen::Index base = i * env::kActionCount;
        double boot;
        if (hp_.target_rule == TargetRule::Ddqn) {
            Eigen::Index best = 0;
            for (int a = 1; a < env::kActionCount; ++a) {
                if (qo(0, base + a) > qo(0, base + best)) best = a;
            }
            boot = qt(0, base + best);
        } else {
            boot = qt.block(0, base, 1, env::kActionCount).maxCoeff();
        }
        y(i) = t.reward + hp_.gamma * boot;
    }
    return y;
}

double Agent::train_on(const Batch& batch) {
    const auto n = static_cast<Eigen::Index>(batch.transitions.size());
    nn::Matrix x(kInputDim, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        encode_into(batch.transitions[i]->state, batch.transitions[i]->action, x.col(i).data());
    }
    const nn::Vector y = targets(batch);

    nn::Vector w;
    const nn::Vector* wp = nullptr;
    if (hp_.is_beta > 0.0) {
        w.resize(n);
        const double size = static_cast<double>(buffer_.size());
        for (Eigen::Index i = 0; i < n; ++i) w(i) = std::pow(size * batch.probabilities[i], -hp_.is_beta);
        w /= w.maxCoeff();
        wp = &w;
    }

    double loss = 0.0;
    nn::NetParams grad;
    for (int e = 0; e < hp_.epochs; ++e) {
        loss = nn::loss_and_grad(online_, x, y, hp_.l2, &grad, wp);
        nn::adam_step(online_, grad, adam_);
    }

    const nn::Matrix q = nn::forward(online_, x);
    std::vector<double> td(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) td[i] = y(i) - q(0, i);
    buffer_.update_priorities(batch.leaves, td, hp_.alpha_per, hp_.eps_per);
    nn::soft_update(target_, online_, hp_.tau);
    return loss;
}

double Agent::train_step() {
    const Batch batch = buffer_.sample(static_cast<std::size_t>(hp_.batch_size), rng_);
    return train_on(batch);
}

TrainResult train(Agent& agent, env::TurbineEnv& env, std::uint64_t seed,
                  const std::function<void(int, bool)>& on_episode) {
    const Hyperparams& hp = agent.hyperparams();
    Rng world(seed);
    const auto& bounds = env.config().constraints.wind_speed;
    const wind::SteadyBounds steady{bounds.lo, bounds.hi, -180.0, 180.0};
    TrainResult result;
    double cumulative = 0.0;
    for (int ep = 0; ep < hp.episodes; ++ep) {
        const auto w = wind::steady_sample(world, steady);
        env::TurbineState s = env.reset(w, world);
        bool won = false;
        for (int t = 0; t < hp.max_episode_steps; ++t) {
            const Snapshot snap = snapshot(s);
            const int a = agent.select_action(snap, hp.eps_greedy, agent.rng());
            const auto out = env.step(env::action_from_index(a), w);
            agent.store({snap, a, out.reward, snapshot(out.next_state), out.terminal && !hp.bootstrap_wins});
            double loss = std::numeric_limits<double>::quiet_NaN();
            if (agent.ready()) loss = agent.train_step();
            cumulative += out.reward;
            result.log.push_back({ep, t, out.reward, cumulative, hp.eps_greedy, loss,
                                  out.won ? env.config().reward.win_bonus : 0.0, out.won});
            s = out.next_state;
            won = won || out.won;
            if (out.terminal) break;
        }
        result.episode_won.push_back(won);
        if (on_episode) on_episode(ep, won);
    }
    return result;
}

void write_training_log(const std::vector<LogRow>& log, const std::string& path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open training log output");
    out.precision(17);
    out << "episode,step,reward,cumulative_reward,epsilon,loss,bonus,won\n";
    for (const auto& r : log) {
        out << r.episode << ',' << r.step << ',' << r.reward << ',' << r.cumulative_reward << ',' << r.epsilon << ',';
        if (std::isnan(r.loss)) out << "nan";
        else out << r.loss;
        out << ',' << r.bonus << ',' << (r.won ? 1 : 0) << '\n';
    }
}

}  // namespace windrl::ddqn
