#include "dem/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dem::env {

std::string_view to_string(Action a) {
    switch (a) {
        case Action::A1_TradeDirect: return "a1";
        case Action::A2_ChargeSurplus: return "a2";
        case Action::A3_DischargeDeficit: return "a3";
    }
    return "?";
}

Action action_from_index(int i) {
    if (i < 0 || i >= kActionCount) throw std::out_of_range("action index " + std::to_string(i));
    return static_cast<Action>(i);
}

void Battery::validate() const {
    if (!(capacity >= 0.0) || !(level >= 0.0) || level > capacity)
        throw std::invalid_argument("battery level must lie in [0, capacity]");
    if (!(efficiency > 0.0) || efficiency > 1.0) throw std::invalid_argument("battery efficiency must lie in (0, 1]");
}

StepResult step(const EnvState& state, Action action, const Battery& battery, double buy_price, double sell_price) {
    if (buy_price < 0.0 || sell_price < 0.0) throw std::invalid_argument("prices must be non-negative");
    if (state.pv < 0.0 || state.load < 0.0) throw std::invalid_argument("pv and load must be non-negative");
    battery.validate();

    const double net = state.pv - state.load;
    SlotOutcome out;
    double level = battery.level;

    if (action == Action::A2_ChargeSurplus && net > 0.0) {
        out.charged = std::min(net * battery.efficiency, battery.capacity - level);
        level += out.charged;
        out.sold = std::max(0.0, net - out.charged / battery.efficiency);
    } else if (action == Action::A3_DischargeDeficit && net < 0.0) {
        out.discharged = std::min(level, -net / battery.efficiency);
        level -= out.discharged;
        out.bought = std::max(0.0, -net - out.discharged * battery.efficiency);
    } else if (net >= 0.0) {
        out.sold = net;
    } else {
        out.bought = -net;
    }

    out.next_battery = std::clamp(level, 0.0, battery.capacity);
    out.cost = buy_price * out.bought - sell_price * out.sold;

    EnvState next = state;
    next.battery_level = out.next_battery;
    return {out, next};
}

double floor_penalty(const Battery& battery, const RewardConfig& cfg) {
    return cfg.alpha * std::max(0.0, -battery.level + cfg.floor_fraction * battery.capacity);
}

double reward(const SlotOutcome& outcome, const Battery& battery, const RewardConfig& cfg) {
    const double cost_term = cfg.literal_cost_sign ? outcome.cost : -outcome.cost;
    return cost_term - floor_penalty(battery, cfg);
}

std::array<double, 4> StateNormalizer::apply(const EnvState& s) const {
    const auto raw = s.as_array();
    std::array<double, 4> out{};
    for (std::size_t i = 0; i < 4; ++i) {
        const double span = hi[i] - lo[i];
        out[i] = span > 0.0 ? (raw[i] - lo[i]) / span : 0.0;
    }
    return out;
}

void StateNormalizer::observe(const EnvState& s) {
    const auto raw = s.as_array();
    for (std::size_t i = 0; i < 4; ++i) {
        lo[i] = std::min(lo[i], raw[i]);
        hi[i] = std::max(hi[i], raw[i]);
    }
}

}  // namespace dem::env
