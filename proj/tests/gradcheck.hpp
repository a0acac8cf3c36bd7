#pragma once

// Central finite-difference check of the agent's analytic gradients.

#include "dem/sac_agent.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace dem::testing {

inline std::vector<sac::Transition> random_batch(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<sac::Transition> out(n);
    for (auto& t : out) {
        for (auto& v : t.state) v = u(rng);
        for (auto& v : t.next_state) v = u(rng);
        t.action = static_cast<int>(rng() % sac::kActions);
        t.reward = g(rng);
        t.done = rng() % 4 == 0;
    }
    return out;
}

struct GradCheck {
    double q1 = 0.0;
    double q2 = 0.0;
    double policy = 0.0;
    double temperature = 0.0;
    double worst() const { return std::max({q1, q2, policy, temperature}); }
};

/// max |analytic - numeric| / max(|analytic|_inf, |numeric|_inf) per loss.
inline GradCheck check_gradients(sac::SacAgent& agent, const std::vector<sac::Transition>& batch, double eps = 1e-5) {
    sac::Gradients g;
    agent.compute_gradients(batch, g);

    auto compare = [&](nn::Vector& params, const nn::Vector& analytic, double sac::Losses::*which) {
        nn::Vector numeric(params.size());
        for (Eigen::Index i = 0; i < params.size(); ++i) {
            const double keep = params[i];
            sac::Gradients scratch;
            params[i] = keep + eps;
            const double up = agent.compute_gradients(batch, scratch).*which;
            params[i] = keep - eps;
            const double down = agent.compute_gradients(batch, scratch).*which;
            params[i] = keep;
            numeric[i] = (up - down) / (2.0 * eps);
        }
        const double scale = std::max({analytic.lpNorm<Eigen::Infinity>(), numeric.lpNorm<Eigen::Infinity>(), 1e-12});
        return (analytic - numeric).lpNorm<Eigen::Infinity>() / scale;
    };

    GradCheck out;
    out.q1 = compare(agent.q1_net().params(), g.q1, &sac::Losses::q1);
    out.q2 = compare(agent.q2_net().params(), g.q2, &sac::Losses::q2);
    out.policy = compare(agent.policy_net().params(), g.policy, &sac::Losses::policy);

    // the temperature loss is evaluated through a restored log-temperature
    sac::WeightSet w = agent.export_weights();
    const double keep = w.log_temperature;
    sac::Gradients scratch;
    w.log_temperature = keep + eps;
    agent.restore_weights(w);
    const double up = agent.compute_gradients(batch, scratch).temperature;
    w.log_temperature = keep - eps;
    agent.restore_weights(w);
    const double down = agent.compute_gradients(batch, scratch).temperature;
    w.log_temperature = keep;
    agent.restore_weights(w);
    const double numeric = (up - down) / (2.0 * eps);
    out.temperature = std::abs(g.log_temperature - numeric) / std::max({std::abs(g.log_temperature), std::abs(numeric), 1e-12});
    return out;
}

/// A 4-8-3 agent whose policy head is randomised so every layer carries gradient.
inline sac::SacAgent small_agent(std::uint64_t seed) {
    sac::SacHyper h;
    h.hidden = {8};
    h.batch_size = 16;
    h.replay_capacity = 1000;
    h.initial_temperature = 0.7;
    sac::SacAgent agent(h, seed);
    std::mt19937_64 rng(seed + 100);
    std::normal_distribution<double> g(0.0, 0.5);
    for (Eigen::Index i = 0; i < agent.policy_net().params().size(); ++i) agent.policy_net().params()[i] = g(rng);
    return agent;
}

}  // namespace dem::testing
