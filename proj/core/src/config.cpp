#include "dem/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace dem {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

template <typename Int>
Int to_int(const std::string& key, const std::string& v) {
    Int out{};
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::vector<std::string> to_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

using Setter = std::function<void(ScenarioConfig&, const std::string&, const std::string&)>;

template <typename T>
Setter num(T ScenarioConfig::*m) {
    return [m](ScenarioConfig& c, const std::string& k, const std::string& v) {
        if constexpr (std::is_floating_point_v<T>) c.*m = to_double(k, v);
        else c.*m = to_int<T>(k, v);
    };
}

template <typename Fn>
Setter with(Fn fn) {
    return [fn](ScenarioConfig& c, const std::string& k, const std::string& v) { fn(c, k, v); };
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"households", num(&ScenarioConfig::households)},
        {"slots", num(&ScenarioConfig::slots)},
        {"federation_period", num(&ScenarioConfig::federation_period)},
        {"seed", num(&ScenarioConfig::seed)},
        {"output_dir", with([](auto& c, auto&, auto& v) { c.output_dir = v; })},
        {"gas.tx_base", with([](auto& c, auto& k, auto& v) { c.gas.tx_base = to_int<std::int64_t>(k, v); })},
        {"gas.storage_write_new", with([](auto& c, auto& k, auto& v) { c.gas.storage_write_new = to_int<std::int64_t>(k, v); })},
        {"gas.storage_write_update", with([](auto& c, auto& k, auto& v) { c.gas.storage_write_update = to_int<std::int64_t>(k, v); })},
        {"gas.storage_read", with([](auto& c, auto& k, auto& v) { c.gas.storage_read = to_int<std::int64_t>(k, v); })},
        {"gas.event_emit", with([](auto& c, auto& k, auto& v) { c.gas.event_emit = to_int<std::int64_t>(k, v); })},
        {"price.kind", with([](auto& c, auto&, auto& v) { c.price.kind = v; })},
        {"price.constant", with([](auto& c, auto& k, auto& v) { c.price.constant = to_double(k, v); })},
        {"price.night", with([](auto& c, auto& k, auto& v) { c.price.night = to_double(k, v); })},
        {"price.day", with([](auto& c, auto& k, auto& v) { c.price.day = to_double(k, v); })},
        {"price.evening", with([](auto& c, auto& k, auto& v) { c.price.evening = to_double(k, v); })},
        {"price.walk_start", with([](auto& c, auto& k, auto& v) { c.price.walk_start = to_double(k, v); })},
        {"price.walk_sigma", with([](auto& c, auto& k, auto& v) { c.price.walk_sigma = to_double(k, v); })},
        {"price.walk_min", with([](auto& c, auto& k, auto& v) { c.price.walk_min = to_double(k, v); })},
        {"price.walk_max", with([](auto& c, auto& k, auto& v) { c.price.walk_max = to_double(k, v); })},
        {"price.csv", with([](auto& c, auto&, auto& v) { c.price.csv = v; })},
        {"price.sell_ratio", with([](auto& c, auto& k, auto& v) { c.price.sell_ratio = to_double(k, v); })},
        {"data.source", with([](auto& c, auto&, auto& v) { c.data.source = v; })},
        {"data.synth_seed", with([](auto& c, auto& k, auto& v) { c.data.synth_seed = to_int<std::uint64_t>(k, v); })},
        {"data.days", with([](auto& c, auto& k, auto& v) { c.data.days = to_int<int>(k, v); })},
        {"data.csv", with([](auto& c, auto&, auto& v) { c.data.csv_paths = to_list(v); })},
        {"data.pv_scale", with([](auto& c, auto& k, auto& v) { c.data.pv_scale = to_double(k, v); })},
        {"data.load_scale", with([](auto& c, auto& k, auto& v) { c.data.load_scale = to_double(k, v); })},
        {"battery.capacity", with([](auto& c, auto& k, auto& v) { c.battery.capacity = to_double(k, v); })},
        {"battery.initial_level", with([](auto& c, auto& k, auto& v) { c.battery.level = to_double(k, v); })},
        {"battery.efficiency", with([](auto& c, auto& k, auto& v) { c.battery.efficiency = to_double(k, v); })},
        {"reward.alpha", with([](auto& c, auto& k, auto& v) { c.reward.alpha = to_double(k, v); })},
        {"reward.floor_fraction", with([](auto& c, auto& k, auto& v) { c.reward.floor_fraction = to_double(k, v); })},
        {"reward.literal_cost_sign", with([](auto& c, auto& k, auto& v) { c.reward.literal_cost_sign = to_bool(k, v); })},
        {"market.reference_price", num(&ScenarioConfig::reference_price)},
        {"market.collateral_factor", num(&ScenarioConfig::collateral_factor)},
        {"market.penalty_factor", num(&ScenarioConfig::penalty_factor)},
        {"e2e.lookahead", num(&ScenarioConfig::lookahead)},
        {"e2e.grid_headroom", num(&ScenarioConfig::grid_headroom)},
        {"e2e.grid_bootstrap_kwh", num(&ScenarioConfig::grid_bootstrap_kwh)},
        {"e2e.bootstrap_pv", num(&ScenarioConfig::bootstrap_pv)},
        {"e2e.bootstrap_load", num(&ScenarioConfig::bootstrap_load)},
        {"e2e.delivery", with([](auto& c, auto&, auto& v) { c.delivery = v; })},
        {"e2e.initial_collateral", num(&ScenarioConfig::initial_collateral)},
        {"e2e.household_funds", num(&ScenarioConfig::household_funds)},
        {"e2e.grid_funds", num(&ScenarioConfig::grid_funds)},
        {"e2e.pretrain_episodes", num(&ScenarioConfig::pretrain_episodes)},
        {"sac.hidden", with([](auto& c, auto& k, auto& v) {
             c.sac.hidden.clear();
             for (const auto& item : to_list(v)) c.sac.hidden.push_back(to_int<int>(k, item));
         })},
        {"sac.lr", with([](auto& c, auto& k, auto& v) { c.sac.lr_q = c.sac.lr_policy = c.sac.lr_temperature = to_double(k, v); })},
        {"sac.lr_q", with([](auto& c, auto& k, auto& v) { c.sac.lr_q = to_double(k, v); })},
        {"sac.lr_policy", with([](auto& c, auto& k, auto& v) { c.sac.lr_policy = to_double(k, v); })},
        {"sac.lr_temperature", with([](auto& c, auto& k, auto& v) { c.sac.lr_temperature = to_double(k, v); })},
        {"sac.gamma", with([](auto& c, auto& k, auto& v) { c.sac.gamma = to_double(k, v); })},
        {"sac.tau", with([](auto& c, auto& k, auto& v) { c.sac.tau = to_double(k, v); })},
        {"sac.batch_size", with([](auto& c, auto& k, auto& v) { c.sac.batch_size = to_int<std::size_t>(k, v); })},
        {"sac.replay_capacity", with([](auto& c, auto& k, auto& v) { c.sac.replay_capacity = to_int<std::size_t>(k, v); })},
        {"sac.target_entropy_ratio", with([](auto& c, auto& k, auto& v) { c.sac.target_entropy_ratio = to_double(k, v); })},
        {"sac.initial_temperature", with([](auto& c, auto& k, auto& v) { c.sac.initial_temperature = to_double(k, v); })},
        {"train.episodes", with([](auto& c, auto& k, auto& v) { c.train.episodes = to_int<int>(k, v); })},
        {"train.episode_slots", with([](auto& c, auto& k, auto& v) { c.train.episode_slots = to_int<int>(k, v); })},
        {"train.fixed_start", with([](auto& c, auto& k, auto& v) { c.train.fixed_start = to_int<int>(k, v); })},
        {"train.warmup", with([](auto& c, auto& k, auto& v) { c.train.warmup = to_int<int>(k, v); })},
        {"train.updates_per_step", with([](auto& c, auto& k, auto& v) { c.train.updates_per_step = to_int<int>(k, v); })},
    };
    return table;
}

}  // namespace

void set_config_value(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown key '" + key + "'");
    it->second(cfg, key, value);
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& [k, _] : setters()) out.push_back(k);
    return out;
}

ScenarioConfig parse_config(std::istream& in) {
    ScenarioConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        try {
            set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    return parse_config(in);
}

void ScenarioConfig::validate() const {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    require(households >= 1, "households must be >= 1");
    require(slots >= 1, "slots must be >= 1");
    require(federation_period >= 1, "federation_period must be >= 1");
    require(lookahead >= 1 && lookahead <= 3, "e2e.lookahead must lie in [1, 3]");
    require(price.kind == "constant" || price.kind == "tou" || price.kind == "random_walk" || price.kind == "csv",
            "price.kind must be constant, tou, random_walk or csv");
    require(price.kind != "csv" || !price.csv.empty(), "price.csv is required when price.kind = csv");
    require(price.sell_ratio >= 0.0, "price.sell_ratio must be >= 0");
    require(data.source == "synth" || data.source == "csv", "data.source must be synth or csv");
    require(data.source != "csv" || !data.csv_paths.empty(), "data.csv is required when data.source = csv");
    require(data.days >= 1, "data.days must be >= 1");
    require(data.pv_scale >= 0.0 && data.load_scale >= 0.0, "data scales must be >= 0");
    require(delivery == "honest" || delivery == "simulated", "e2e.delivery must be honest or simulated");
    require(reward.alpha >= 0.0, "reward.alpha must be >= 0");
    require(collateral_factor >= 0.0 && penalty_factor >= 0.0, "market factors must be >= 0");
    require(reference_price >= 0.0, "market.reference_price must be >= 0");
    require(grid_headroom >= 0.0 && grid_bootstrap_kwh >= 0.0, "grid sizing must be >= 0");
    require(initial_collateral >= 0.0 && household_funds >= initial_collateral, "household funds must cover the initial collateral");
    require(train.episodes >= 1 && train.episode_slots >= 1, "train.episodes and train.episode_slots must be >= 1");
    require(train.updates_per_step >= 0 && train.warmup >= 0, "train.updates_per_step and train.warmup must be >= 0");
    require(pretrain_episodes >= 0, "e2e.pretrain_episodes must be >= 0");
    try {
        gas.validate();
        battery.validate();
        sac.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace dem
