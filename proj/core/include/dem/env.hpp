#pragma once

// Household microgrid environment: PV, load and temperature series driving a
// battery under three dispatch actions.

#include <array>
#include <cstdint>
#include <string_view>

namespace dem::env {

/// MDP state: PV energy, battery level, temperature, load.
struct EnvState {
    double pv = 0.0;             // kWh in the slot
    double battery_level = 0.0;  // kWh
    double temperature = 0.0;    // degC
    double load = 0.0;           // kWh in the slot

    std::array<double, 4> as_array() const { return {pv, battery_level, temperature, load}; }
};

struct Battery {
    double capacity = 10.0;
    double level = 5.0;
    double efficiency = 0.95;

    /// Throws std::invalid_argument unless 0 <= level <= capacity and efficiency in (0, 1].
    void validate() const;
};

enum class Action : std::uint8_t {
    A1_TradeDirect = 0,
    A2_ChargeSurplus = 1,
    A3_DischargeDeficit = 2,
};

inline constexpr int kActionCount = 3;
inline constexpr std::array<Action, kActionCount> kAllActions{Action::A1_TradeDirect, Action::A2_ChargeSurplus,
                                                              Action::A3_DischargeDeficit};

std::string_view to_string(Action a);
inline int index_of(Action a) { return static_cast<int>(a); }
Action action_from_index(int i);

struct SlotOutcome {
    double cost = 0.0;          // positive = net expense
    double bought = 0.0;        // kWh imported
    double sold = 0.0;          // kWh exported
    double charged = 0.0;       // kWh stored into the battery
    double discharged = 0.0;    // kWh drawn from the battery
    double next_battery = 0.0;  // kWh
};

struct RewardConfig {
    double alpha = 1.0;
    double floor_fraction = 0.1;
    /// Use reward = +cost - penalty instead of -cost - penalty.
    bool literal_cost_sign = false;
};

struct StepResult {
    SlotOutcome outcome;
    EnvState next;
};

/// Applies one action for one slot. The next state keeps the exogenous
/// readings of `state`; callers overwrite them with the next slot's values.
StepResult step(const EnvState& state, Action action, const Battery& battery, double buy_price, double sell_price);

/// -cost - alpha * relu(floor_fraction * capacity - level), with `battery.level`
/// the post-step level.
double reward(const SlotOutcome& outcome, const Battery& battery, const RewardConfig& cfg);

/// Battery-health penalty term alone.
double floor_penalty(const Battery& battery, const RewardConfig& cfg);

/// Per-feature min-max scaling to [0, 1]; constant features map to 0.
struct StateNormalizer {
    std::array<double, 4> lo{0, 0, 0, 0};
    std::array<double, 4> hi{1, 1, 1, 1};

    std::array<double, 4> apply(const EnvState& s) const;
    /// Widens the ranges to include `s`.
    void observe(const EnvState& s);
};

}  // namespace dem::env
