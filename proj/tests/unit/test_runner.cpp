#include "dem/runner.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace dem;

namespace {

ScenarioConfig small_e2e(int households, int slots) {
    ScenarioConfig cfg;
    cfg.households = households;
    cfg.slots = slots;
    cfg.data.days = 3;
    return cfg;
}

ScenarioConfig small_training() {
    ScenarioConfig cfg;
    cfg.households = 2;
    cfg.data.days = 3;
    cfg.train.episodes = 4;
    cfg.train.episode_slots = 8;
    cfg.sac.hidden = {16};
    cfg.sac.batch_size = 8;
    cfg.sac.replay_capacity = 1000;
    return cfg;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST(Bridge, Examples) {
    const env::Battery b{10, 5, 1.0};
    EXPECT_EQ(commit_bridge(env::Action::A1_TradeDirect, {3, 1}, b), Energy::parse("2"));
    EXPECT_EQ(commit_bridge(env::Action::A1_TradeDirect, {1, 3}, b), Energy{});
    EXPECT_EQ(commit_bridge(env::Action::A2_ChargeSurplus, {3, 1}, b), Energy{});
}

TEST(Bridge, DischargeKeepsTheFloor) {
    // level 5, floor 1 -> 4 available; deficit 1 covered first -> 3 exportable
    const env::Battery b{10, 5, 1.0};
    EXPECT_DOUBLE_EQ(planned_discharge({1, 2}, b), 3.0);
    EXPECT_EQ(commit_bridge(env::Action::A3_DischargeDeficit, {1, 2}, b), Energy::parse("3"));
    EXPECT_EQ(commit_bridge(env::Action::A3_DischargeDeficit, {3, 1}, b), Energy::parse("6"));
    const env::Battery low{10, 0.5, 1.0};
    EXPECT_EQ(planned_discharge({0, 0}, low), 0.0);
    const env::Battery lossy{10, 5, 0.5};
    EXPECT_DOUBLE_EQ(planned_discharge({0, 0}, lossy), 2.0);
}

TEST(Config, ParsesKeyValueText) {
    std::istringstream in(
        "# scenario\n"
        "households = 3\n"
        "slots=12   # inline comment\n"
        "\n"
        "price.kind = constant\n"
        "price.constant = 0.25\n"
        "sac.hidden = 32,16\n"
        "sac.lr = 0.001\n"
        "data.csv = a.csv, b.csv\n"
        "data.source = csv\n"
        "reward.literal_cost_sign = true\n");
    const ScenarioConfig cfg = parse_config(in);
    EXPECT_EQ(cfg.households, 3);
    EXPECT_EQ(cfg.slots, 12);
    EXPECT_EQ(cfg.price.kind, "constant");
    EXPECT_DOUBLE_EQ(cfg.price.constant, 0.25);
    EXPECT_EQ(cfg.sac.hidden, (std::vector<int>{32, 16}));
    EXPECT_DOUBLE_EQ(cfg.sac.lr_q, 0.001);
    EXPECT_DOUBLE_EQ(cfg.sac.lr_temperature, 0.001);
    EXPECT_EQ(cfg.data.csv_paths, (std::vector<std::string>{"a.csv", "b.csv"}));
    EXPECT_TRUE(cfg.reward.literal_cost_sign);
}

TEST(Config, RejectsBadInput) {
    auto message = [](const std::string& text) {
        std::istringstream in(text);
        try {
            parse_config(in);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(message("households = 2\nbogus = 1\n").find("line 2"), std::string::npos);
    EXPECT_NE(message("households = two\n").find("households"), std::string::npos);
    EXPECT_FALSE(message("households\n").empty());
    EXPECT_FALSE(message("households = 0\n").empty());
    EXPECT_FALSE(message("sac.gamma = 1\n").empty());
    EXPECT_FALSE(message("e2e.delivery = sometimes\n").empty());
    EXPECT_FALSE(message("price.kind = csv\n").empty());
    EXPECT_TRUE(message("").empty());
    ScenarioConfig cfg;
    EXPECT_THROW(set_config_value(cfg, "nope", "1"), ConfigError);
    for (const auto& key : config_keys()) EXPECT_FALSE(key.empty());
}

TEST(Config, ShippedDefaultsMatchBuiltIns) {
    const std::string path = std::string(DEM_SOURCE_DIR) + "/configs/default.conf";
    const ScenarioConfig file = load_config(path);
    const ScenarioConfig built;
    std::ifstream in(path);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    for (const auto& key : config_keys()) {
        if (key == "sac.lr") continue;  // shorthand for the three rates
        EXPECT_NE(text.find("\n" + key + " "), std::string::npos) << key;
    }
    EXPECT_EQ(file.households, built.households);
    EXPECT_EQ(file.federation_period, built.federation_period);
    EXPECT_EQ(file.price.kind, built.price.kind);
    EXPECT_TRUE(file.price.csv.empty());
    EXPECT_TRUE(file.data.csv_paths.empty());
    EXPECT_EQ(file.battery.level, built.battery.level);
    EXPECT_EQ(file.sac.hidden, built.sac.hidden);
    EXPECT_EQ(file.sac.lr_temperature, built.sac.lr_temperature);
    EXPECT_EQ(file.sac.replay_capacity, built.sac.replay_capacity);
    EXPECT_EQ(file.gas.storage_write_new, built.gas.storage_write_new);
    EXPECT_EQ(file.grid_funds, built.grid_funds);
    EXPECT_EQ(file.train.fixed_start, built.train.fixed_start);
    EXPECT_EQ(file.reward.literal_cost_sign, built.reward.literal_cost_sign);

    const ScenarioConfig tiny = load_config(std::string(DEM_SOURCE_DIR) + "/configs/tiny_horizon.conf");
    EXPECT_EQ(tiny.households, 1);
    EXPECT_EQ(tiny.train.episode_slots, 5);
    EXPECT_EQ(tiny.reward.alpha, 0.0);
}

TEST(Prices, TimeOfUseAndConstant) {
    PriceSpec tou;
    const auto p = build_prices(tou, 48, 1);
    ASSERT_EQ(p.size(), 48u);
    EXPECT_DOUBLE_EQ(p[3], 0.10);
    EXPECT_DOUBLE_EQ(p[12], 0.20);
    EXPECT_DOUBLE_EQ(p[18], 0.30);
    EXPECT_DOUBLE_EQ(p[23], 0.10);
    EXPECT_DOUBLE_EQ(p[24 + 18], 0.30);
    PriceSpec c;
    c.kind = "constant";
    c.constant = 0.17;
    for (double v : build_prices(c, 10, 1)) EXPECT_DOUBLE_EQ(v, 0.17);
    PriceSpec w;
    w.kind = "random_walk";
    const auto a = build_prices(w, 100, 3);
    EXPECT_EQ(a, build_prices(w, 100, 3));
    for (double v : a) {
        EXPECT_GE(v, w.walk_min);
        EXPECT_LE(v, w.walk_max);
    }
}

TEST(E2e, TwoHouseholdsThreeSlotsSettleHonestly) {
    const E2eResult r = run_e2e(small_e2e(2, 3));
    ASSERT_FALSE(r.aborted) << r.error;
    EXPECT_EQ(r.settlements.size(), 6u);
    for (const auto& s : r.settlements) EXPECT_EQ(s.forfeit, Money{});
    for (const auto& p : r.profiles)
        for (const auto& c : p["commitments"]) EXPECT_EQ(c["status"], "Settled") << p.dump();
    for (const auto& row : r.pool) EXPECT_GE(row.totals.total_production, Energy{});
    EXPECT_EQ(r.initial_total, r.final_total);
}

TEST(E2e, SettledEnergyStaysWithinDemand) {
    ScenarioConfig cfg = small_e2e(5, 24);
    cfg.delivery = "simulated";
    const E2eResult r = run_e2e(cfg);
    ASSERT_FALSE(r.aborted) << r.error;
    std::map<Slot, Energy> matched;
    for (const auto& s : r.settlements) matched[s.slot] += s.matched_energy;
    for (const auto& [slot, e] : matched) {
        ASSERT_GE(slot, 1);
        ASSERT_LE(static_cast<std::size_t>(slot), r.grid_demand.size());
        EXPECT_LE(e, r.grid_demand[static_cast<std::size_t>(slot - 1)]) << "slot " << slot;
    }
    EXPECT_EQ(r.initial_total, r.final_total);
}

TEST(E2e, OutputsAreByteIdenticalAcrossRuns) {
    const auto base = std::filesystem::temp_directory_path() / "dem_e2e_determinism";
    std::filesystem::remove_all(base);
    for (const char* sub : {"a", "b"}) write_e2e_outputs(run_e2e(small_e2e(3, 10)), (base / sub).string());
    for (const char* f : {"gas_usage.csv", "settlements.csv", "pool.csv", "receipts.jsonl", "profiles.json"}) {
        const std::string a = slurp(base / "a" / f);
        EXPECT_FALSE(a.empty()) << f;
        EXPECT_EQ(a, slurp(base / "b" / f)) << f;
    }
    EXPECT_EQ(slurp(base / "a" / "settlements.csv").substr(0, 62),
              "slot,seller,buyer,matched_kwh,price,payment,delivered_kwh,forf");
    std::filesystem::remove_all(base);
}

TEST(E2e, GasExperimentReportsEveryUserCount) {
    const auto rows = gas_experiment(small_e2e(2, 6), {2, 4});
    std::map<int, int> per_users;
    for (const auto& r : rows) {
        ++per_users[r.users];
        EXPECT_GE(r.max_gas, static_cast<std::int64_t>(r.mean_gas));
        EXPECT_LT(r.max_gas, 30'000'000);
    }
    EXPECT_EQ(per_users.size(), 2u);
    EXPECT_EQ(per_users[2], per_users[4]);
}

TEST(Training, FederationThatNeverTriggersEqualsLocal) {
    ScenarioConfig cfg = small_training();
    cfg.federation_period = cfg.train.episodes + 1;
    const TrainingResult fed = run_training(cfg, TrainMode::Federated);
    const TrainingResult loc = run_training(cfg, TrainMode::Local);
    ASSERT_EQ(fed.rows.size(), loc.rows.size());
    for (std::size_t i = 0; i < fed.rows.size(); ++i) {
        EXPECT_EQ(fed.rows[i].reward, loc.rows[i].reward);
        EXPECT_EQ(fed.rows[i].q_loss, loc.rows[i].q_loss);
    }
    for (std::size_t h = 0; h < fed.agents.size(); ++h)
        EXPECT_EQ(fed.agents[h].export_weights().policy, loc.agents[h].export_weights().policy);
    for (const auto& b : fed.barriers) EXPECT_FALSE(b.triggered);
}

TEST(Training, FederatedAgentsShareWeightsAfterTheLastBarrier) {
    ScenarioConfig cfg = small_training();
    cfg.federation_period = cfg.train.episodes;
    const TrainingResult fed = run_training(cfg, TrainMode::Federated);
    const auto w0 = fed.agents[0].export_weights();
    for (const auto& a : fed.agents) EXPECT_EQ(a.export_weights().policy, w0.policy);
}

TEST(Training, SameSeedSameCurve) {
    const ScenarioConfig cfg = small_training();
    const auto a = run_training(cfg, TrainMode::Federated);
    const auto b = run_training(cfg, TrainMode::Federated);
    EXPECT_EQ(a.average_curve(), b.average_curve());
    EXPECT_EQ(a.rows.size(), static_cast<std::size_t>(cfg.train.episodes * cfg.households));
    EXPECT_DOUBLE_EQ(a.tail_mean(1.0), [&] {
        double s = 0;
        for (double v : a.average_curve()) s += v;
        return s / cfg.train.episodes;
    }());
}

TEST(Training, RewardsCsvLayout) {
    const auto run = run_training(small_training(), TrainMode::Local);
    const auto path = std::filesystem::temp_directory_path() / "dem_rewards.csv";
    write_rewards_csv({run}, path.string());
    std::istringstream in(slurp(path));
    std::filesystem::remove(path);
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    EXPECT_EQ(header, "episode,household,reward,mode,seed");
    EXPECT_NE(first.find(",local,1"), std::string::npos) << first;
}
