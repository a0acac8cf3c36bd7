#include "../gradcheck.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <limits>

using namespace dem;
using namespace dem::sac;
using dem::testing::random_batch;

namespace {

SacHyper tiny_hyper() {
    SacHyper h;
    h.hidden = {16, 16};
    h.batch_size = 16;
    h.replay_capacity = 1000;
    return h;
}

}  // namespace

TEST(Sac, ZeroHeadGivesUniformPolicy) {
    SacAgent agent(SacHyper{}, 1);
    for (const State& s : {State{0, 0, 0, 0}, State{0.3, 0.9, 0.1, 0.5}, State{5, -3, 2, 1}}) {
        const Probs p = agent.policy_probs(s);
        for (double v : p) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
    }
}

TEST(Sac, ArgmaxPicksTheLargestLowestIndexFirst) {
    EXPECT_EQ(argmax({0.2, 0.5, 0.3}), 1);
    EXPECT_EQ(argmax({0.4, 0.4, 0.2}), 0);
    EXPECT_EQ(argmax({0.2, 0.4, 0.4}), 1);
    SacAgent agent(SacHyper{}, 1);
    EXPECT_EQ(agent.select_action({0.1, 0.2, 0.3, 0.4}, ActionMode::Greedy), 0);
}

TEST(Sac, CategoricalFrequenciesMatch) {
    std::mt19937_64 rng(2024);
    const Probs p{0.2, 0.5, 0.3};
    std::array<int, 3> counts{};
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_categorical(p, rng))];
    for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(counts[a] / static_cast<double>(n), p[a], 0.01);
}

TEST(Sac, NonFiniteStateIsRejected) {
    SacAgent agent(SacHyper{}, 1);
    try {
        agent.select_action({0, std::numeric_limits<double>::quiet_NaN(), 0, 0}, ActionMode::Stochastic);
        FAIL();
    } catch (const AgentError& e) {
        EXPECT_EQ(e.code(), AgentErrorCode::NonFiniteState);
    }
    EXPECT_THROW(agent.policy_probs({std::numeric_limits<double>::infinity(), 0, 0, 0}), AgentError);
}

TEST(Sac, EmptyInputsAreRejected) {
    SacAgent agent(tiny_hyper(), 1);
    try {
        agent.update_from_replay();
        FAIL();
    } catch (const AgentError& e) {
        EXPECT_EQ(e.code(), AgentErrorCode::EmptyBuffer);
    }
    EXPECT_THROW(agent.update({}), AgentError);
}

TEST(Sac, HyperValidation) {
    auto code = [](SacHyper h) {
        try {
            h.validate();
        } catch (const AgentError& e) {
            return e.code();
        }
        return AgentErrorCode::EmptyBuffer;
    };
    SacHyper h = tiny_hyper();
    h.gamma = 1.0;
    EXPECT_EQ(code(h), AgentErrorCode::InvalidHyper);
    h = tiny_hyper();
    h.gamma = 0.0;
    EXPECT_EQ(code(h), AgentErrorCode::InvalidHyper);
    h = tiny_hyper();
    h.tau = 0.0;
    EXPECT_EQ(code(h), AgentErrorCode::InvalidHyper);
    h = tiny_hyper();
    h.batch_size = h.replay_capacity + 1;
    EXPECT_EQ(code(h), AgentErrorCode::InvalidHyper);
    EXPECT_NEAR(SacHyper{}.target_entropy(), 0.98 * std::log(3.0), 1e-15);
}

TEST(Sac, ReplayIsARing) {
    ReplayBuffer rb(3);
    for (int i = 0; i < 5; ++i) {
        Transition t;
        t.reward = i;
        rb.push(t);
    }
    EXPECT_EQ(rb.size(), 3u);
    std::mt19937_64 rng(1);
    for (const auto& t : rb.sample(50, rng)) EXPECT_GE(t.reward, 2.0);
}

TEST(Sac, SecondUpdateOnAFrozenBatchLowersTheQLoss) {
    for (std::uint64_t seed : {1, 2, 3}) {
        SacAgent agent(tiny_hyper(), seed);
        std::mt19937_64 rng(seed);
        const auto batch = random_batch(16, rng);
        const Losses first = agent.update(batch);
        const Losses second = agent.update(batch);
        EXPECT_LE(second.q1, first.q1) << "seed " << seed;
        EXPECT_LE(second.q2, first.q2) << "seed " << seed;
    }
}

TEST(Sac, AnalyticGradientsMatchFiniteDifferences) {
    for (std::uint64_t seed : {3, 4}) {
        SacAgent agent = dem::testing::small_agent(seed);
        std::mt19937_64 rng(seed);
        const auto batch = random_batch(16, rng);
        const auto r = dem::testing::check_gradients(agent, batch);
        EXPECT_LT(r.q1, 1e-4);
        EXPECT_LT(r.q2, 1e-4);
        EXPECT_LT(r.policy, 1e-4);
        EXPECT_LT(r.temperature, 1e-4);
    }
}

TEST(Sac, TerminalTargetsAreTheRewards) {
    SacHyper h = tiny_hyper();
    h.gamma = 1e-9;
    SacAgent agent(h, 5);
    std::mt19937_64 rng(5);
    auto batch = random_batch(16, rng);
    for (auto& t : batch) {
        t.reward = 1.0;
        t.done = true;
    }
    const nn::Vector y = agent.q_targets(batch);
    for (Eigen::Index i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], 1.0);
}

TEST(Sac, SoftUpdateExamples) {
    SacAgent agent(tiny_hyper(), 6);
    WeightSet w = agent.export_weights();
    w.q1 = nn::Vector::Constant(w.q1.size(), 2.0);
    w.q2 = nn::Vector::Constant(w.q2.size(), 2.0);
    w.q1_target.setZero();
    w.q2_target.setZero();
    agent.restore_weights(w);
    agent.soft_update(0.5);
    EXPECT_TRUE(agent.q1_target_net().params().isApprox(nn::Vector::Constant(w.q1.size(), 1.0), 0.0));
    agent.soft_update(1.0);
    EXPECT_EQ(agent.q2_target_net().params(), agent.q2_net().params());
    EXPECT_THROW(agent.soft_update(0.0), std::invalid_argument);
}

TEST(Sac, SoftUpdateConvergesGeometrically) {
    SacAgent agent(tiny_hyper(), 7);
    WeightSet w = agent.export_weights();
    w.q1_target.setZero();
    agent.restore_weights(w);
    const nn::Vector online = agent.q1_net().params();
    const double tau = 0.005;
    double prev_gap = online.norm();
    for (int k = 1; k <= 500; ++k) {
        agent.soft_update(tau);
        const double gap = (online - agent.q1_target_net().params()).norm();
        EXPECT_NEAR(gap / prev_gap, 1.0 - tau, 1e-9);
        prev_gap = gap;
    }
    EXPECT_NEAR(prev_gap / online.norm(), std::pow(1.0 - tau, 500), 1e-9);
}

TEST(Sac, ExportImportRoundTrip) {
    SacAgent a(tiny_hyper(), 8);
    SacAgent b(tiny_hyper(), 9);
    std::mt19937_64 rng(8);
    for (int i = 0; i < 5; ++i) a.update(random_batch(16, rng));
    const WeightSet wa = a.export_weights();
    b.import_weights(wa);
    const WeightSet wb = b.export_weights();
    EXPECT_EQ(wb.policy, wa.policy);
    EXPECT_EQ(wb.q1, wa.q1);
    EXPECT_EQ(wb.q2, wa.q2);
    EXPECT_EQ(b.import_count(), 1u);
    for (int i = 0; i < 50; ++i) {
        State probe{};
        for (auto& v : probe) v = std::uniform_real_distribution<double>(0, 1)(rng);
        EXPECT_EQ(a.select_action(probe, ActionMode::Greedy), b.select_action(probe, ActionMode::Greedy));
        EXPECT_EQ(a.policy_probs(probe), b.policy_probs(probe));
    }
}

TEST(Sac, ImportRejectsAnotherLayout) {
    SacAgent a(tiny_hyper(), 1);
    WeightSet w = a.export_weights();
    w.policy.conservativeResize(w.policy.size() - 1);
    try {
        a.import_weights(w);
        FAIL();
    } catch (const AgentError& e) {
        EXPECT_EQ(e.code(), AgentErrorCode::LayoutMismatch);
    }
    SacHyper other = tiny_hyper();
    other.hidden = {8};
    EXPECT_THROW(a.import_weights(SacAgent(other, 1).export_weights()), AgentError);
    EXPECT_EQ(a.import_count(), 0u);
}

TEST(Sac, PolicyIsAlwaysADistribution) {
    SacAgent agent = dem::testing::small_agent(10);
    std::mt19937_64 rng(10);
    std::normal_distribution<double> g(0.0, 50.0);
    for (int i = 0; i < 2000; ++i) {
        const State s{g(rng), g(rng), g(rng), g(rng)};
        const Probs p = agent.policy_probs(s);
        double sum = 0;
        for (double v : p) {
            EXPECT_GE(v, 0.0);
            sum += v;
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
    }
}

TEST(Sac, ParametersStayFiniteOverManyUpdates) {
    SacHyper h = tiny_hyper();
    h.lr_q = h.lr_policy = h.lr_temperature = 1e-3;
    SacAgent agent(h, 11);
    std::mt19937_64 rng(11);
    for (const auto& t : random_batch(1000, rng)) agent.replay().push(t);
    for (int i = 0; i < 10000; ++i) agent.update_from_replay();
    EXPECT_TRUE(agent.export_weights().all_finite());
    EXPECT_TRUE(std::isfinite(agent.temperature()));
}

TEST(Sac, FixedSeedIsBitIdentical) {
    auto run = [] {
        SacAgent agent(tiny_hyper(), 12);
        std::mt19937_64 rng(12);
        for (const auto& t : random_batch(200, rng)) agent.replay().push(t);
        for (int i = 0; i < 100; ++i) agent.update_from_replay();
        return agent.export_weights();
    };
    const WeightSet a = run();
    const WeightSet b = run();
    EXPECT_EQ(a.policy, b.policy);
    EXPECT_EQ(a.q1_target, b.q1_target);
    EXPECT_EQ(a.log_temperature, b.log_temperature);
}

TEST(Sac, SharedInitSeedGivesSameNetworks) {
    SacAgent a(tiny_hyper(), 1, 77);
    SacAgent b(tiny_hyper(), 2, 77);
    EXPECT_EQ(a.export_weights().q1, b.export_weights().q1);
}

TEST(Sac, CheckpointRoundTrip) {
    SacAgent agent(tiny_hyper(), 13);
    std::mt19937_64 rng(13);
    agent.update(random_batch(16, rng));
    const WeightSet w = agent.export_weights();
    const auto path = (std::filesystem::temp_directory_path() / "dem_sac_checkpoint.bin").string();
    save_weights(w, path);
    const WeightSet r = load_weights(path);
    std::filesystem::remove(path);
    EXPECT_EQ(r.layout, w.layout);
    EXPECT_EQ(r.policy, w.policy);
    EXPECT_EQ(r.q2_target, w.q2_target);
    EXPECT_EQ(r.log_temperature, w.log_temperature);
    EXPECT_THROW(load_weights(path), std::runtime_error);
}
