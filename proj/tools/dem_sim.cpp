// dem-sim: command line front end for the marketplace and training runs.

#include "dem/config.hpp"
#include "dem/federation.hpp"
#include "dem/runner.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <iostream>

namespace {

dem::ScenarioConfig config_from(const std::string& path) {
    return path.empty() ? dem::ScenarioConfig{} : dem::load_config(path);
}

int cmd_e2e(const std::string& config, std::optional<int> users, std::optional<std::uint64_t> seed,
            std::optional<std::string> out_dir) {
    auto cfg = config_from(config);
    if (users) cfg.households = *users;
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.output_dir = *out_dir;
    const auto result = dem::run_e2e(cfg);
    dem::write_e2e_outputs(result, cfg.output_dir);
    if (result.aborted) {
        std::cerr << "e2e aborted: " << result.error << "\nreceipts written to " << cfg.output_dir << "/receipts.jsonl\n";
        return 2;
    }
    fmt::print("{} users, {} slots: {} transactions, {} settlements, outputs in {}\n", cfg.households, cfg.slots,
               result.receipts.size(), result.settlements.size(), cfg.output_dir);
    return 0;
}

int cmd_train(const std::string& config, const std::string& mode_name, std::optional<std::uint64_t> seed,
              std::optional<std::string> out_dir) {
    auto cfg = config_from(config);
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.output_dir = *out_dir;
    const auto mode = mode_name == "federated" ? dem::TrainMode::Federated : dem::TrainMode::Local;
    const auto run = dem::run_training(cfg, mode);
    std::filesystem::create_directories(cfg.output_dir);
    dem::write_rewards_csv({run}, cfg.output_dir + "/rewards.csv");
    dem::write_metrics_csv(run, cfg.output_dir + "/metrics.csv");
    dem::fed::write_federation_csv(run.barriers, cfg.output_dir + "/federation.csv");
    const auto curve = run.average_curve();
    fmt::print("{} training, {} households, {} episodes, seed {}: final-20% mean reward {:.4f}\n", mode_name,
               cfg.households, cfg.train.episodes, cfg.seed, run.tail_mean(0.2));
    return 0;
}

int cmd_gas_report(const std::string& config, const std::string& out_dir) {
    auto cfg = config_from(config);
    const auto rows = dem::gas_experiment(cfg, {2, 10, 50});
    std::filesystem::create_directories(out_dir);
    dem::write_gas_usage_csv(rows, out_dir + "/gas_usage.csv");
    fmt::print("{:<22} {:>6} {:>14} {:>12}\n", "op", "users", "mean_gas", "max_gas");
    for (const auto& r : rows) fmt::print("{:<22} {:>6} {:>14.1f} {:>12}\n", r.op, r.users, r.mean_gas, r.max_gas);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized energy marketplace simulator"};
    app.require_subcommand(1);

    std::string config;
    std::optional<int> users;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::string mode = "federated";
    std::string gas_out = "out";

    auto* e2e = app.add_subcommand("e2e", "Run the end-to-end marketplace scenario");
    e2e->add_option("--config", config, "Scenario config file")->check(CLI::ExistingFile);
    e2e->add_option("--users", users, "Number of households")->check(CLI::PositiveNumber);
    e2e->add_option("--seed", seed, "Run seed");
    e2e->add_option("--out", out_dir, "Output directory");

    auto* train = app.add_subcommand("train", "Train household agents");
    train->add_option("--config", config, "Scenario config file")->check(CLI::ExistingFile);
    train->add_option("--mode", mode, "federated or local")->check(CLI::IsMember({"federated", "local"}));
    train->add_option("--seed", seed, "Agent seed");
    train->add_option("--out", out_dir, "Output directory");

    auto* gas = app.add_subcommand("gas-report", "Gas usage at 2, 10 and 50 users");
    gas->add_option("--config", config, "Scenario config file")->check(CLI::ExistingFile);
    gas->add_option("--out", gas_out, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*e2e) return cmd_e2e(config, users, seed, out_dir);
        if (*train) return cmd_train(config, mode, seed, out_dir);
        if (*gas) return cmd_gas_report(config, gas_out);
    } catch (const dem::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
