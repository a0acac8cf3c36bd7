#include "dem/sac_agent.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace dem::sac {

namespace {

std::vector<int> net_sizes(const SacHyper& h) {
    std::vector<int> s{kStateDim};
    s.insert(s.end(), h.hidden.begin(), h.hidden.end());
    s.push_back(kActions);
    return s;
}

nn::Matrix states_matrix(std::span<const Transition> batch, bool next) {
    nn::Matrix m(kStateDim, static_cast<Eigen::Index>(batch.size()));
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const State& s = next ? batch[j].next_state : batch[j].state;
        for (int i = 0; i < kStateDim; ++i) m(i, static_cast<Eigen::Index>(j)) = s[static_cast<std::size_t>(i)];
    }
    return m;
}

void check_state(const State& s) {
    for (double v : s)
        if (!std::isfinite(v)) throw AgentError(AgentErrorCode::NonFiniteState, "state contains a non-finite value");
}

bool finite(const nn::Vector& v) { return v.allFinite(); }

}  // namespace

double SacHyper::target_entropy() const { return target_entropy_ratio * std::log(static_cast<double>(kActions)); }

void SacHyper::validate() const {
    auto fail = [](const std::string& m) { throw AgentError(AgentErrorCode::InvalidHyper, m); };
    if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must lie in (0,1)");
    if (!(tau > 0.0 && tau <= 1.0)) fail("tau must lie in (0,1]");
    if (batch_size == 0) fail("batch size must be positive");
    if (batch_size > replay_capacity) fail("batch size exceeds replay capacity");
    if (!(lr_q > 0.0 && lr_policy > 0.0 && lr_temperature > 0.0)) fail("learning rates must be positive");
    if (!(initial_temperature > 0.0)) fail("initial temperature must be positive");
    for (int h : hidden)
        if (h <= 0) fail("hidden sizes must be positive");
}

// ---------------------------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::push(const Transition& t) {
    if (t.action < 0 || t.action >= kActions) throw std::invalid_argument("transition action out of range");
    if (data_.size() < capacity_) {
        data_.push_back(t);
    } else {
        data_[next_] = t;
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
    if (data_.empty()) throw AgentError(AgentErrorCode::EmptyBuffer, "replay buffer is empty");
    std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
    std::vector<Transition> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(data_[pick(rng)]);
    return out;
}

// ---------------------------------------------------------------------------

bool WeightSet::same_layout(const WeightSet& o) const {
    return layout == o.layout && policy.size() == o.policy.size() && q1.size() == o.q1.size() &&
           q2.size() == o.q2.size() && q1_target.size() == o.q1_target.size() && q2_target.size() == o.q2_target.size();
}

bool WeightSet::all_finite() const {
    return finite(policy) && finite(q1) && finite(q2) && finite(q1_target) && finite(q2_target) &&
           std::isfinite(log_temperature);
}

int sample_categorical(const Probs& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double x = u(rng);
    double acc = 0.0;
    for (int a = 0; a < kActions; ++a) {
        acc += p[static_cast<std::size_t>(a)];
        if (x < acc) return a;
    }
    return kActions - 1;
}

int argmax(const Probs& p) {
    int best = 0;
    for (int a = 1; a < kActions; ++a)
        if (p[static_cast<std::size_t>(a)] > p[static_cast<std::size_t>(best)]) best = a;
    return best;
}

// ---------------------------------------------------------------------------

SacAgent::SacAgent(SacHyper hyper, std::uint64_t seed) : SacAgent(std::move(hyper), seed, seed) {}

SacAgent::SacAgent(SacHyper hyper, std::uint64_t seed, std::uint64_t init_seed)
    : hyper_(std::move(hyper)), rng_(seed), replay_(hyper_.replay_capacity) {
    hyper_.validate();
    const auto sizes = net_sizes(hyper_);
    policy_ = nn::Mlp(sizes);
    q1_ = nn::Mlp(sizes);
    q2_ = nn::Mlp(sizes);
    std::mt19937_64 init_rng(init_seed);
    policy_.init(init_rng, 0.0);
    q1_.init(init_rng);
    q2_.init(init_rng);
    q1_target_ = q1_;
    q2_target_ = q2_;
    log_temperature_ = std::log(hyper_.initial_temperature);
    opt_policy_ = nn::Adam(policy_.param_count(), hyper_.lr_policy);
    opt_q1_ = nn::Adam(q1_.param_count(), hyper_.lr_q);
    opt_q2_ = nn::Adam(q2_.param_count(), hyper_.lr_q);
    opt_temperature_ = nn::Adam(1, hyper_.lr_temperature);
}

double SacAgent::temperature() const { return std::exp(log_temperature_); }

Probs SacAgent::policy_probs(const State& s) const {
    check_state(s);
    nn::Matrix x(kStateDim, 1);
    for (int i = 0; i < kStateDim; ++i) x(i, 0) = s[static_cast<std::size_t>(i)];
    const nn::Matrix logp = nn::log_softmax(policy_.forward(x));
    Probs p{};
    for (int a = 0; a < kActions; ++a) p[static_cast<std::size_t>(a)] = std::exp(logp(a, 0));
    return p;
}

int SacAgent::select_action(const State& s, ActionMode mode) {
    const Probs p = policy_probs(s);
    return mode == ActionMode::Greedy ? argmax(p) : sample_categorical(p, rng_);
}

nn::Vector SacAgent::q_targets(std::span<const Transition> batch) const {
    const auto n = static_cast<Eigen::Index>(batch.size());
    const nn::Matrix next = states_matrix(batch, true);
    const nn::Matrix logp = nn::log_softmax(policy_.forward(next));
    const nn::Matrix p = logp.array().exp().matrix();
    const nn::Matrix qmin = q1_target_.forward(next).cwiseMin(q2_target_.forward(next));
    const double alpha = temperature();
    nn::Vector y(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Transition& t = batch[static_cast<std::size_t>(j)];
        const double v = (p.col(j).array() * (qmin.col(j).array() - alpha * logp.col(j).array())).sum();
        y[j] = t.reward + (t.done ? 0.0 : hyper_.gamma * v);
    }
    return y;
}

Losses SacAgent::compute_gradients(std::span<const Transition> batch, Gradients& grads) const {
    if (batch.empty()) throw AgentError(AgentErrorCode::EmptyBuffer, "update called with an empty batch");
    const auto n = static_cast<Eigen::Index>(batch.size());
    const double inv_n = 1.0 / static_cast<double>(n);
    const double alpha = temperature();
    const nn::Vector y = q_targets(batch);
    const nn::Matrix s = states_matrix(batch, false);

    Losses losses;
    grads.q1 = nn::Vector::Zero(static_cast<Eigen::Index>(q1_.param_count()));
    grads.q2 = nn::Vector::Zero(static_cast<Eigen::Index>(q2_.param_count()));
    grads.policy = nn::Vector::Zero(static_cast<Eigen::Index>(policy_.param_count()));

    // critics: mean squared soft Bellman error on the taken action
    nn::Mlp::Cache c1, c2;
    const nn::Matrix q1 = q1_.forward(s, c1);
    const nn::Matrix q2 = q2_.forward(s, c2);
    nn::Matrix d1 = nn::Matrix::Zero(kActions, n);
    nn::Matrix d2 = nn::Matrix::Zero(kActions, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const int a = batch[static_cast<std::size_t>(j)].action;
        const double e1 = q1(a, j) - y[j];
        const double e2 = q2(a, j) - y[j];
        losses.q1 += e1 * e1 * inv_n;
        losses.q2 += e2 * e2 * inv_n;
        d1(a, j) = 2.0 * e1 * inv_n;
        d2(a, j) = 2.0 * e2 * inv_n;
    }
    q1_.backward(c1, d1, grads.q1);
    q2_.backward(c2, d2, grads.q2);

    // actor: E_s sum_a pi(a|s) (alpha log pi(a|s) - min Q(s,a)), critics held fixed
    nn::Mlp::Cache cp;
    const nn::Matrix logp = nn::log_softmax(policy_.forward(s, cp));
    const nn::Matrix p = logp.array().exp().matrix();
    const nn::Matrix qmin = q1.cwiseMin(q2);
    nn::Matrix dz(kActions, n);
    double entropy_gap = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const nn::Vector f = alpha * logp.col(j) - qmin.col(j);
        const double mean_f = p.col(j).dot(f);
        losses.policy += mean_f * inv_n;
        dz.col(j) = p.col(j).cwiseProduct(f.array().matrix() - nn::Vector::Constant(kActions, mean_f)) * inv_n;
        const double entropy = -p.col(j).dot(logp.col(j));
        entropy_gap += (entropy - hyper_.target_entropy()) * inv_n;
    }
    policy_.backward(cp, dz, grads.policy);

    // temperature: log(alpha) * E[H - H_target]
    losses.temperature = log_temperature_ * entropy_gap;
    grads.log_temperature = entropy_gap;
    return losses;
}

Losses SacAgent::update(std::span<const Transition> batch) {
    Gradients g;
    const Losses losses = compute_gradients(batch, g);
    opt_q1_.step(q1_.params(), g.q1);
    opt_q2_.step(q2_.params(), g.q2);
    opt_policy_.step(policy_.params(), g.policy);
    nn::Vector lt(1);
    lt[0] = log_temperature_;
    nn::Vector gt(1);
    gt[0] = g.log_temperature;
    opt_temperature_.step(lt, gt);
    log_temperature_ = lt[0];
    soft_update(hyper_.tau);
    return losses;
}

Losses SacAgent::update_from_replay() {
    const auto batch = replay_.sample(hyper_.batch_size, rng_);
    return update(batch);
}

void SacAgent::soft_update(double tau) {
    if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in (0,1]");
    if (tau == 1.0) {
        q1_target_.params() = q1_.params();
        q2_target_.params() = q2_.params();
        return;
    }
    q1_target_.params() = tau * q1_.params() + (1.0 - tau) * q1_target_.params();
    q2_target_.params() = tau * q2_.params() + (1.0 - tau) * q2_target_.params();
}

WeightSet SacAgent::export_weights() const {
    ++exports_;
    WeightSet w;
    w.layout = policy_.sizes();
    w.policy = policy_.params();
    w.q1 = q1_.params();
    w.q2 = q2_.params();
    w.q1_target = q1_target_.params();
    w.q2_target = q2_target_.params();
    w.log_temperature = log_temperature_;
    return w;
}

void SacAgent::check_layout(const WeightSet& w) const {
    if (w.layout != policy_.sizes() || static_cast<std::size_t>(w.policy.size()) != policy_.param_count() ||
        static_cast<std::size_t>(w.q1.size()) != q1_.param_count() ||
        static_cast<std::size_t>(w.q2.size()) != q2_.param_count())
        throw AgentError(AgentErrorCode::LayoutMismatch, "weight layout does not match the agent");
}

void SacAgent::import_weights(const WeightSet& w) {
    check_layout(w);
    ++imports_;
    policy_.params() = w.policy;
    q1_.params() = w.q1;
    q2_.params() = w.q2;
}

void SacAgent::restore_weights(const WeightSet& w) {
    check_layout(w);
    if (static_cast<std::size_t>(w.q1_target.size()) != q1_.param_count() ||
        static_cast<std::size_t>(w.q2_target.size()) != q2_.param_count())
        throw AgentError(AgentErrorCode::LayoutMismatch, "target layout does not match the agent");
    policy_.params() = w.policy;
    q1_.params() = w.q1;
    q2_.params() = w.q2;
    q1_target_.params() = w.q1_target;
    q2_target_.params() = w.q2_target;
    log_temperature_ = w.log_temperature;
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kVectorNames[] = {"policy", "q1", "q2", "q1_target", "q2_target"};

std::array<const nn::Vector*, 5> vectors_of(const WeightSet& w) {
    return {&w.policy, &w.q1, &w.q2, &w.q1_target, &w.q2_target};
}

std::array<nn::Vector*, 5> vectors_of(WeightSet& w) {
    return {&w.policy, &w.q1, &w.q2, &w.q1_target, &w.q2_target};
}

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

}  // namespace

void save_weights(const WeightSet& w, const std::string& path) {
    nlohmann::json header;
    header["format"] = "dem-weights";
    header["version"] = 1;
    header["layout"] = w.layout;
    header["log_temperature"] = w.log_temperature;
    auto vecs = vectors_of(w);
    for (std::size_t i = 0; i < vecs.size(); ++i)
        header["vectors"].push_back({{"name", kVectorNames[i]}, {"length", vecs[i]->size()}});

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << header.dump() << '\n';
    for (const auto* v : vecs)
        out.write(reinterpret_cast<const char*>(v->data()), static_cast<std::streamsize>(v->size() * sizeof(double)));
    if (!out) throw std::runtime_error("failed writing " + path);
}

WeightSet load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::getline(in, line);
    const auto header = nlohmann::json::parse(line);
    if (header.value("format", "") != "dem-weights") throw std::runtime_error(path + ": not a weight checkpoint");
    WeightSet w;
    w.layout = header.at("layout").get<std::vector<int>>();
    w.log_temperature = header.at("log_temperature").get<double>();
    auto vecs = vectors_of(w);
    const auto& entries = header.at("vectors");
    if (entries.size() != vecs.size()) throw std::runtime_error(path + ": unexpected vector count");
    for (std::size_t i = 0; i < vecs.size(); ++i) {
        if (entries[i].at("name").get<std::string>() != kVectorNames[i])
            throw std::runtime_error(path + ": unexpected vector order");
        const auto len = entries[i].at("length").get<Eigen::Index>();
        vecs[i]->resize(len);
        in.read(reinterpret_cast<char*>(vecs[i]->data()), static_cast<std::streamsize>(len * sizeof(double)));
        if (!in) throw std::runtime_error(path + ": truncated checkpoint");
    }
    return w;
}

}  // namespace dem::sac
