#pragma once

// Scenario orchestration: the end-to-end marketplace run, the gas experiment
// and household agent training.

#include "dem/config.hpp"
#include "dem/env.hpp"
#include "dem/federation.hpp"
#include "dem/marketplace.hpp"
#include "dem/sac_agent.hpp"
#include "dem/series.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dem {

/// Price per kWh for each series hour.
std::vector<double> build_prices(const PriceSpec& spec, std::size_t hours, std::uint64_t seed);

/// One series per household with at least `min_hours` slots, scaled per the
/// data spec. Throws ConfigError when a CSV source is too short.
std::vector<series::HouseholdSeries> build_series(const ScenarioConfig& cfg, std::size_t min_hours, int households);

/// Sampling seed for household `h` derived from the run seed.
std::uint64_t agent_seed(std::uint64_t run_seed, std::size_t h);
/// Network initialisation seed shared by every household of a run.
std::uint64_t init_seed(std::uint64_t run_seed);

// ---------------------------------------------------------------------------
// Bridge from agent decisions to production commitments

struct BridgeForecast {
    double pv = 0.0;
    double load = 0.0;
};

/// Battery energy deliverable to the grid after covering the forecast deficit
/// without going below the health floor.
double planned_discharge(const BridgeForecast& f, const env::Battery& battery, double floor_fraction = 0.1);

/// A1: max(0, pv - load). A2: 0. A3: max(0, pv - load) + planned discharge.
Energy commit_bridge(env::Action planned, const BridgeForecast& f, const env::Battery& battery,
                     double floor_fraction = 0.1);

// ---------------------------------------------------------------------------
// End-to-end run

struct PoolRow {
    Slot slot = 0;
    PoolTotals totals;
};

struct E2eResult {
    int users = 0;
    std::vector<TxReceipt> receipts;
    std::vector<SettlementRecord> settlements;
    std::vector<PoolRow> pool;
    /// Grid consumption commitment per slot (index = slot - 1).
    std::vector<Energy> grid_demand;
    nlohmann::ordered_json profiles = nlohmann::ordered_json::array();
    /// Balances plus escrowed collateral, before and after.
    Money initial_total;
    Money final_total;
    bool aborted = false;
    std::string error;
};

E2eResult run_e2e(const ScenarioConfig& cfg);

struct GasUsageRow {
    std::string op;
    int users = 0;
    double mean_gas = 0.0;
    std::int64_t max_gas = 0;
};

/// Runs the end-to-end scenario once per user count.
std::vector<GasUsageRow> gas_experiment(const ScenarioConfig& base, const std::vector<int>& user_counts);

void write_gas_usage_csv(const std::vector<GasUsageRow>& rows, const std::string& path);
void write_settlements_csv(const std::vector<SettlementRecord>& rows, const std::string& path);
void write_pool_csv(const std::vector<PoolRow>& rows, const std::string& path);
/// gas_usage.csv, settlements.csv, pool.csv, receipts.jsonl and profiles.json.
void write_e2e_outputs(const E2eResult& r, const std::string& dir);

// ---------------------------------------------------------------------------
// Training

enum class TrainMode { Federated, Local };
std::string_view to_string(TrainMode m);

struct EpisodeRow {
    int episode = 0;
    int household = 0;
    /// Greedy-policy return on the episode's window, evaluated after the
    /// episode's updates.
    double reward = 0.0;
    /// Return collected by the stochastic behaviour policy while training.
    double behavior_reward = 0.0;
    double q_loss = 0.0;
    double policy_loss = 0.0;
};

struct TrainingResult {
    TrainMode mode = TrainMode::Local;
    std::uint64_t seed = 0;
    int episodes = 0;
    int households = 0;
    std::vector<EpisodeRow> rows;
    std::vector<fed::BroadcastReport> barriers;
    std::vector<sac::SacAgent> agents;
    std::vector<env::StateNormalizer> normalizers;
    std::vector<series::HouseholdSeries> series;
    std::vector<double> prices;

    /// Cross-household mean reward per episode.
    std::vector<double> average_curve() const;
    /// Mean of the average curve over the last `fraction` of episodes.
    double tail_mean(double fraction) const;
};

TrainingResult run_training(const ScenarioConfig& cfg, TrainMode mode);

/// Return of the greedy policy over `length` slots from `start`, starting
/// at the configured initial battery level.
double greedy_return(const sac::SacAgent& agent, const env::StateNormalizer& norm, const series::HouseholdSeries& s,
                     const std::vector<double>& prices, std::size_t start, std::size_t length,
                     const ScenarioConfig& cfg);

void write_rewards_csv(const std::vector<TrainingResult>& runs, const std::string& path);
void write_metrics_csv(const TrainingResult& run, const std::string& path);

}  // namespace dem
