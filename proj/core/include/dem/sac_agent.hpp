#pragma once

// Discrete soft actor-critic: categorical policy over the three dispatch
// actions, twin Q critics with soft-updated targets, learned temperature.

#include "dem/nn.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dem::sac {

inline constexpr int kStateDim = 4;
inline constexpr int kActions = 3;

using State = std::array<double, kStateDim>;
using Probs = std::array<double, kActions>;

enum class AgentErrorCode { NonFiniteState, EmptyBuffer, LayoutMismatch, InvalidHyper };

class AgentError : public std::runtime_error {
public:
    AgentError(AgentErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    AgentErrorCode code() const noexcept { return code_; }

private:
    AgentErrorCode code_;
};

struct SacHyper {
    std::vector<int> hidden{64, 64};
    double lr_q = 3e-4;
    double lr_policy = 3e-4;
    double lr_temperature = 3e-4;
    double gamma = 0.99;
    double tau = 0.005;
    std::size_t batch_size = 64;
    std::size_t replay_capacity = 100'000;
    /// Target entropy as a fraction of ln(|A|).
    double target_entropy_ratio = 0.98;
    double initial_temperature = 1.0;

    double target_entropy() const;
    /// Throws AgentError(InvalidHyper).
    void validate() const;
};

struct Transition {
    State state{};
    int action = 0;
    double reward = 0.0;
    State next_state{};
    bool done = false;
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(const Transition& t);
    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    /// Uniform sampling with replacement.
    std::vector<Transition> sample(std::size_t n, std::mt19937_64& rng) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> data_;
};

/// Flat parameter vectors of one agent plus the network shape they follow.
struct WeightSet {
    std::vector<int> layout;
    nn::Vector policy;
    nn::Vector q1;
    nn::Vector q2;
    nn::Vector q1_target;
    nn::Vector q2_target;
    double log_temperature = 0.0;

    bool same_layout(const WeightSet& o) const;
    bool all_finite() const;
};

enum class ActionMode { Stochastic, Greedy };

/// Inverse-CDF draw from a categorical distribution.
int sample_categorical(const Probs& p, std::mt19937_64& rng);
/// Index of the largest probability, lowest index on ties.
int argmax(const Probs& p);

struct Losses {
    double q1 = 0.0;
    double q2 = 0.0;
    double policy = 0.0;
    double temperature = 0.0;
};

struct Gradients {
    nn::Vector q1;
    nn::Vector q2;
    nn::Vector policy;
    double log_temperature = 0.0;
};

class SacAgent {
public:
    /// `seed` drives network initialisation, action sampling and replay sampling.
    SacAgent(SacHyper hyper, std::uint64_t seed);
    /// Networks initialised from `init_seed`; sampling driven by `seed`.
    SacAgent(SacHyper hyper, std::uint64_t seed, std::uint64_t init_seed);

    const SacHyper& hyper() const { return hyper_; }

    Probs policy_probs(const State& s) const;
    /// Greedy ties resolve to the lowest action index.
    int select_action(const State& s, ActionMode mode);

    /// One gradient step on every network followed by a soft target update.
    /// Returned losses are evaluated before the step.
    Losses update(std::span<const Transition> batch);
    /// Samples `batch_size` transitions from the replay buffer and updates.
    Losses update_from_replay();

    /// Losses and their gradients at the current parameters, without stepping.
    Losses compute_gradients(std::span<const Transition> batch, Gradients& grads) const;
    /// Soft Q targets r + gamma (1 - done) sum_a' pi(a'|s') [min Q_targ(s',a') - alpha log pi(a'|s')].
    nn::Vector q_targets(std::span<const Transition> batch) const;

    /// target <- tau * online + (1 - tau) * target.
    void soft_update(double tau);

    WeightSet export_weights() const;
    /// Replaces the policy and both online critics; targets and temperature stay.
    void import_weights(const WeightSet& w);
    /// Restores every vector, including targets and temperature.
    void restore_weights(const WeightSet& w);

    double temperature() const;
    double log_temperature() const { return log_temperature_; }

    ReplayBuffer& replay() { return replay_; }
    const ReplayBuffer& replay() const { return replay_; }
    std::mt19937_64& rng() { return rng_; }

    nn::Mlp& policy_net() { return policy_; }
    nn::Mlp& q1_net() { return q1_; }
    nn::Mlp& q2_net() { return q2_; }
    const nn::Mlp& q1_target_net() const { return q1_target_; }
    const nn::Mlp& q2_target_net() const { return q2_target_; }

    /// Weight exchange counters, used to audit federation traffic.
    std::uint64_t export_count() const { return exports_; }
    std::uint64_t import_count() const { return imports_; }

private:
    void check_layout(const WeightSet& w) const;

    SacHyper hyper_;
    std::mt19937_64 rng_;
    nn::Mlp policy_;
    nn::Mlp q1_;
    nn::Mlp q2_;
    nn::Mlp q1_target_;
    nn::Mlp q2_target_;
    double log_temperature_;
    nn::Adam opt_policy_;
    nn::Adam opt_q1_;
    nn::Adam opt_q2_;
    nn::Adam opt_temperature_;
    ReplayBuffer replay_;
    mutable std::uint64_t exports_ = 0;
    std::uint64_t imports_ = 0;
};

/// Checkpoint: one JSON header line describing the layout, then the raw
/// little-endian doubles of each vector in header order.
void save_weights(const WeightSet& w, const std::string& path);
WeightSet load_weights(const std::string& path);

}  // namespace dem::sac
