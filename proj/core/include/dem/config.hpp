#pragma once

// Scenario configuration: `key = value` text, `#` comments, blank lines ignored.

#include "dem/env.hpp"
#include "dem/ledger.hpp"
#include "dem/sac_agent.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace dem {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PriceSpec {
    /// constant | tou | random_walk | csv
    std::string kind = "tou";
    double constant = 0.20;
    double night = 0.10;    // 00-07 and 22-24
    double day = 0.20;      // 07-17
    double evening = 0.30;  // 17-22
    double walk_start = 0.20;
    double walk_sigma = 0.01;
    double walk_min = 0.05;
    double walk_max = 0.50;
    std::string csv;
    /// Sell price as a fraction of the buy price.
    double sell_ratio = 1.0;
};

struct DataSpec {
    /// synth | csv
    std::string source = "synth";
    std::uint64_t synth_seed = 7;
    int days = 30;
    std::vector<std::string> csv_paths;
    double pv_scale = 1.0;
    double load_scale = 1.0;
};

struct TrainSpec {
    int episodes = 200;
    int episode_slots = 24;
    /// Series hour every episode starts from; -1 rotates through the series.
    int fixed_start = -1;
    /// Replay size before updates begin; 0 means one batch.
    int warmup = 0;
    int updates_per_step = 1;
};

struct ScenarioConfig {
    int households = 4;
    /// Market slots simulated by the end-to-end run.
    int slots = 24;
    int federation_period = 10;
    std::uint64_t seed = 1;
    std::string output_dir = "out";

    GasSchedule gas;
    PriceSpec price;
    DataSpec data;
    env::Battery battery;
    env::RewardConfig reward;

    double reference_price = 0.20;
    double collateral_factor = 1.0;
    double penalty_factor = 1.0;

    int lookahead = 3;
    double grid_headroom = 1.1;
    double grid_bootstrap_kwh = 5.0;
    double bootstrap_pv = 0.0;
    double bootstrap_load = 0.5;
    /// honest | simulated
    std::string delivery = "honest";
    double initial_collateral = 5.0;
    double household_funds = 100.0;
    double grid_funds = 1'000'000.0;
    int pretrain_episodes = 0;

    sac::SacHyper sac;
    TrainSpec train;

    /// Throws ConfigError.
    void validate() const;
};

ScenarioConfig parse_config(std::istream& in);
ScenarioConfig load_config(const std::string& path);
/// Applies one `key = value` assignment.
void set_config_value(ScenarioConfig& cfg, const std::string& key, const std::string& value);
/// Recognised keys, sorted.
std::vector<std::string> config_keys();

}  // namespace dem
