#include "dem/runner.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace dem {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    return out;
}

double tou_price(const PriceSpec& p, std::size_t hour) {
    const std::size_t h = hour % 24;
    if (h >= 17 && h < 22) return p.evening;
    if (h >= 7 && h < 17) return p.day;
    return p.night;
}

std::vector<double> csv_prices(const std::string& path, std::size_t hours) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open price csv " + path);
    std::map<std::size_t, double> by_slot;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("slot", 0) == 0) continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ConfigError("price csv: expected slot,price in '" + line + "'");
        try {
            by_slot[static_cast<std::size_t>(std::stoull(line.substr(0, comma)))] = std::stod(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw ConfigError("price csv: malformed row '" + line + "'");
        }
    }
    if (by_slot.empty()) throw ConfigError("price csv " + path + " has no rows");
    // slots beyond the file repeat it cyclically
    const std::size_t period = by_slot.rbegin()->first + 1;
    std::vector<double> out(hours);
    for (std::size_t h = 0; h < hours; ++h) {
        const auto it = by_slot.find(h % period);
        if (it == by_slot.end()) throw ConfigError(fmt::format("price csv: no price for slot {}", h % period));
        out[h] = it->second;
    }
    return out;
}

}  // namespace

std::vector<double> build_prices(const PriceSpec& spec, std::size_t hours, std::uint64_t seed) {
    std::vector<double> out(hours);
    if (spec.kind == "constant") {
        std::fill(out.begin(), out.end(), spec.constant);
    } else if (spec.kind == "tou") {
        for (std::size_t h = 0; h < hours; ++h) out[h] = tou_price(spec, h);
    } else if (spec.kind == "random_walk") {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> step(0.0, spec.walk_sigma);
        double p = spec.walk_start;
        for (std::size_t h = 0; h < hours; ++h) {
            out[h] = p;
            p = std::clamp(p + step(rng), spec.walk_min, spec.walk_max);
        }
    } else if (spec.kind == "csv") {
        out = csv_prices(spec.csv, hours);
    } else {
        throw ConfigError("unknown price kind " + spec.kind);
    }
    return out;
}

std::vector<series::HouseholdSeries> build_series(const ScenarioConfig& cfg, std::size_t min_hours, int households) {
    std::vector<series::HouseholdSeries> out;
    if (cfg.data.source == "synth") {
        const int days = std::max(cfg.data.days, static_cast<int>((min_hours + 23) / 24));
        out = series::synth_series(cfg.data.synth_seed, days, households);
    } else {
        for (int h = 0; h < households; ++h) {
            const auto& path = cfg.data.csv_paths[static_cast<std::size_t>(h) % cfg.data.csv_paths.size()];
            out.push_back(series::load_series(path));
        }
    }
    for (auto& s : out) {
        if (s.size() < min_hours)
            throw ConfigError(fmt::format("series '{}' has {} hourly slots, {} needed", s.name, s.size(), min_hours));
        for (auto& r : s.slots) {
            r.pv *= cfg.data.pv_scale;
            r.load *= cfg.data.load_scale;
        }
    }
    return out;
}

std::uint64_t agent_seed(std::uint64_t run_seed, std::size_t h) {
    std::seed_seq seq{static_cast<std::uint32_t>(run_seed), static_cast<std::uint32_t>(run_seed >> 32),
                      static_cast<std::uint32_t>(h)};
    std::array<std::uint32_t, 2> words{};
    seq.generate(words.begin(), words.end());
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

std::uint64_t init_seed(std::uint64_t run_seed) { return agent_seed(run_seed, std::size_t{1} << 31); }

// ---------------------------------------------------------------------------

double planned_discharge(const BridgeForecast& f, const env::Battery& battery, double floor_fraction) {
    const double usable = std::max(0.0, battery.level - floor_fraction * battery.capacity) * battery.efficiency;
    return std::max(0.0, usable - std::max(0.0, f.load - f.pv));
}

Energy commit_bridge(env::Action planned, const BridgeForecast& f, const env::Battery& battery, double floor_fraction) {
    const double surplus = std::max(0.0, f.pv - f.load);
    switch (planned) {
        case env::Action::A1_TradeDirect: return Energy::from_double(surplus);
        case env::Action::A2_ChargeSurplus: return Energy{};
        case env::Action::A3_DischargeDeficit:
            return Energy::from_double(surplus + planned_discharge(f, battery, floor_fraction));
    }
    return Energy{};
}

// ---------------------------------------------------------------------------
// End-to-end run

namespace {

class ScenarioAbort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Participant {
    AccountId account;
    TokenId token;
    /// Live commitment per slot.
    std::map<Slot, CommitmentId> by_slot;
    std::map<Slot, Energy> committed;
    std::map<Slot, env::Action> plan;
    double level = 0.0;
};

class E2eDriver {
public:
    explicit E2eDriver(const ScenarioConfig& cfg)
        : cfg_(cfg),
          market_(static_cast<std::uint32_t>(cfg.households + 2), cfg.gas, params_from(cfg)) {}

    E2eResult run();

private:
    static MarketParams params_from(const ScenarioConfig& cfg) {
        MarketParams p;
        p.reference_price = Money::from_double(cfg.reference_price);
        p.collateral_factor = Ppm::from_double(cfg.collateral_factor);
        p.penalty_factor = Ppm::from_double(cfg.penalty_factor);
        p.oracle_admin = AccountId{0};
        return p;
    }

    /// Series hour backing market slot `s`; the first day is forecast history.
    std::size_t hour_of(Slot s) const { return static_cast<std::size_t>(24 + s - 1); }

    TxReceipt apply(AccountId who, const Call& c) {
        TxReceipt r = market_.apply(who, c);
        if (!r.ok()) throw ScenarioAbort(fmt::format("{} by account {} reverted: {}", r.op_name, who.id, r.revert_reason));
        return r;
    }

    void ensure_collateral(const Participant& p, Energy energy) {
        const auto profile = market_.registry().profile(p.token);
        const Money need = profile->required_collateral + market_.registry().required_for(energy);
        if (profile->collateral < need) apply(p.account, call::DepositCollateral{p.token, need - profile->collateral});
    }

    BridgeForecast forecast(std::size_t h, Slot s) const {
        const std::size_t hour = hour_of(s);
        if (hour < 24) return {cfg_.bootstrap_pv, cfg_.bootstrap_load};
        const auto& r = series_[h].slots[hour - 24];
        return {r.pv, r.load};
    }

    env::Action decide(std::size_t h, Slot s) {
        const BridgeForecast f = forecast(h, s);
        const std::size_t hour = hour_of(s);
        const double temp = series_[h].slots[hour >= 24 ? hour - 24 : hour].temperature;
        const env::EnvState st{f.pv, households_[h].level, temp, f.load};
        return env::action_from_index(agents_[h].select_action(normalizers_[h].apply(st), sac::ActionMode::Greedy));
    }

    env::Battery battery_of(const Participant& p) const {
        return env::Battery{cfg_.battery.capacity, p.level, cfg_.battery.efficiency};
    }

    /// Commitment (new or replacing `replaces`) for household `h` at slot `s`.
    void commit_household(std::size_t h, Slot s, std::optional<CommitmentId> replaces) {
        Participant& p = households_[h];
        const env::Action a = decide(h, s);
        const Energy e = commit_bridge(a, forecast(h, s), battery_of(p), cfg_.reward.floor_fraction);
        commit(p, CommitmentKind::Production, e, s, replaces);
        p.plan[s] = a;
    }

    void commit(Participant& p, CommitmentKind kind, Energy e, Slot s, std::optional<CommitmentId> replaces) {
        ensure_collateral(p, e);
        TxReceipt r = replaces ? apply(p.account, call::ReplaceCommitment{p.token, *replaces, kind, e, s})
                               : apply(p.account, call::AddCommitment{p.token, kind, e, s});
        const CommitmentId cid{static_cast<std::uint64_t>(*r.output)};
        p.by_slot[s] = cid;
        p.committed[s] = e;
    }

    Energy deliver(std::size_t h, Slot s) {
        Participant& p = households_[h];
        const Energy committed = p.committed.at(s);
        if (cfg_.delivery == "honest") return committed;
        const std::size_t hour = hour_of(s);
        const auto st = series::state_at(series_[h], hour, p.level);
        const env::Action a = p.plan.at(s);
        const auto res = env::step(st, a, battery_of(p), prices_[hour], prices_[hour] * cfg_.price.sell_ratio);
        p.level = res.outcome.next_battery;
        double delivered = res.outcome.sold;
        if (a == env::Action::A3_DischargeDeficit && committed.to_double() > delivered) {
            const double floor = cfg_.reward.floor_fraction * cfg_.battery.capacity;
            const double available = std::max(0.0, p.level - floor) * cfg_.battery.efficiency;
            const double extra = std::min(committed.to_double() - delivered, available);
            p.level -= extra / cfg_.battery.efficiency;
            delivered += extra;
        }
        return Energy::from_double(delivered);
    }

    static constexpr AccountId kKeeper{0};
    static constexpr AccountId kGrid{1};

    const ScenarioConfig& cfg_;
    Marketplace market_;
    std::vector<series::HouseholdSeries> series_;
    std::vector<double> prices_;
    std::vector<sac::SacAgent> agents_;
    std::vector<env::StateNormalizer> normalizers_;
    std::vector<Participant> households_;
    Participant grid_;
    E2eResult result_;
};

E2eResult E2eDriver::run() {
    const int H = cfg_.households;
    const Slot slots = cfg_.slots;
    const Slot look = cfg_.lookahead;
    result_.users = H;

    const std::size_t hours = static_cast<std::size_t>(24 + slots + look + 1);
    series_ = build_series(cfg_, hours, H);
    prices_ = build_prices(cfg_.price, series_.front().size(), cfg_.data.synth_seed);

    if (cfg_.pretrain_episodes > 0) {
        ScenarioConfig tc = cfg_;
        tc.train.episodes = cfg_.pretrain_episodes;
        TrainingResult tr = run_training(tc, TrainMode::Federated);
        agents_ = std::move(tr.agents);
        normalizers_ = std::move(tr.normalizers);
    } else {
        for (int h = 0; h < H; ++h) {
            agents_.emplace_back(cfg_.sac, agent_seed(cfg_.seed, static_cast<std::size_t>(h)), init_seed(cfg_.seed));
            normalizers_.push_back(series::fit_normalizer(series_[static_cast<std::size_t>(h)], cfg_.battery.capacity));
        }
    }

    Ledger& ledger = market_.ledger();
    ledger.mint_balance(kGrid, Money::from_double(cfg_.grid_funds));
    for (int h = 0; h < H; ++h) {
        Participant p;
        p.account = AccountId{static_cast<std::uint32_t>(2 + h)};
        p.level = cfg_.battery.level;
        ledger.mint_balance(p.account, Money::from_double(cfg_.household_funds));
        households_.push_back(p);
    }
    grid_.account = kGrid;
    result_.initial_total = ledger.total_balance() + market_.registry().total_collateral();

    try {
        // 1. profiles: half the collateral at mint, the rest as a separate deposit
        const Money initial = Money::from_double(cfg_.initial_collateral);
        const Money at_mint = Money::from_raw(initial.raw / 2);
        auto join = [&](Participant& p) {
            p.token = TokenId{static_cast<std::uint64_t>(*apply(p.account, call::MintProfile{at_mint}).output)};
            apply(p.account, call::DepositCollateral{p.token, initial - at_mint});
        };
        for (auto& p : households_) join(p);
        join(grid_);

        // 2. initial commitments for the first lookahead window
        std::vector<Energy> demand(static_cast<std::size_t>(slots), Energy{});
        const Energy bootstrap = Energy::from_double(cfg_.grid_bootstrap_kwh);
        for (Slot s = 1; s <= std::min(look, slots); ++s) {
            for (std::size_t h = 0; h < households_.size(); ++h) commit_household(h, s, std::nullopt);
            commit(grid_, CommitmentKind::Consumption, bootstrap, s, std::nullopt);
            demand[static_cast<std::size_t>(s - 1)] = bootstrap;
        }

        // 3. custody with the pool; pending commitments are ingested into the market buffer
        for (auto& p : households_) apply(p.account, call::DepositProfile{p.token});
        apply(kGrid, call::DepositProfile{grid_.token});

        for (Slot t = 1; t <= slots; ++t) {
            ledger.set_slot(t);
            const std::size_t hour = hour_of(t);

            // 4. oracle feeds
            apply(kKeeper, call::PushRound{FeedId::price(), t, money_to_answer(Money::from_double(prices_[hour]))});
            Energy delivered_total{};
            for (std::size_t h = 0; h < households_.size(); ++h) {
                const Energy d = deliver(h, t);
                delivered_total += d;
                apply(kKeeper, call::PushRound{FeedId::delivered(households_[h].token), t, energy_to_answer(d)});
            }

            // 5. settlement and buffer maintenance
            SettleResult settled = market_.settle_slot(kKeeper, t);
            if (!settled.ok) throw ScenarioAbort(fmt::format("settlement of slot {} failed: {}", t, settled.reason));
            result_.settlements.insert(result_.settlements.end(), settled.records.begin(), settled.records.end());
            apply(kKeeper, call::PurgeExpired{t});
            result_.pool.push_back({t, market_.pool().totals()});

            // 6. roll the window forward
            const Slot next = t + look;
            if (next > slots) continue;
            for (std::size_t h = 0; h < households_.size(); ++h) {
                const CommitmentId old = households_[h].by_slot.at(t);
                commit_household(h, next, old);
            }
            const Energy want = Energy::from_raw(static_cast<std::int64_t>(
                std::llround(static_cast<double>(delivered_total.raw) * cfg_.grid_headroom)));
            commit(grid_, CommitmentKind::Consumption, want, next, grid_.by_slot.at(t));
            demand[static_cast<std::size_t>(next - 1)] = want;
        }
        result_.grid_demand = demand;

        // wind-down
        auto leave = [&](Participant& p) {
            apply(p.account, call::WithdrawProfile{p.token});
            const Money left = market_.registry().profile(p.token)->collateral;
            if (left.raw > 0) apply(p.account, call::WithdrawCollateral{p.token, left});
        };
        for (auto& p : households_) leave(p);
        leave(grid_);
    } catch (const ScenarioAbort& e) {
        result_.aborted = true;
        result_.error = e.what();
    }

    for (const auto& p : households_)
        if (auto prof = market_.registry().profile(p.token)) result_.profiles.push_back(profile_to_json(*prof));
    if (auto prof = market_.registry().profile(grid_.token)) result_.profiles.push_back(profile_to_json(*prof));
    result_.final_total = ledger.total_balance() + market_.registry().total_collateral();
    result_.receipts = ledger.log();
    return result_;
}

}  // namespace

E2eResult run_e2e(const ScenarioConfig& cfg) {
    cfg.validate();
    E2eDriver driver(cfg);
    return driver.run();
}

std::vector<GasUsageRow> gas_experiment(const ScenarioConfig& base, const std::vector<int>& user_counts) {
    std::vector<GasUsageRow> rows;
    for (int users : user_counts) {
        ScenarioConfig cfg = base;
        cfg.households = users;
        const E2eResult r = run_e2e(cfg);
        if (r.aborted) throw std::runtime_error(fmt::format("{} users: {}", users, r.error));
        for (const auto& g : gas_report(r.receipts)) rows.push_back({g.op, users, g.mean_gas, g.max_gas});
    }
    return rows;
}

void write_gas_usage_csv(const std::vector<GasUsageRow>& rows, const std::string& path) {
    auto out = open_out(path);
    out << "op,users,mean_gas,max_gas\n";
    for (const auto& r : rows) out << fmt::format("{},{},{:.3f},{}\n", r.op, r.users, r.mean_gas, r.max_gas);
}

void write_settlements_csv(const std::vector<SettlementRecord>& rows, const std::string& path) {
    auto out = open_out(path);
    out << "slot,seller,buyer,matched_kwh,price,payment,delivered_kwh,forfeit\n";
    for (const auto& r : rows)
        out << fmt::format("{},{},{},{},{},{},{},{}\n", r.slot, r.seller.id, r.buyer.id, r.matched_energy.str(),
                           r.unit_price.str(), r.payment.str(), r.delivered_energy.str(), r.forfeit.str());
}

void write_pool_csv(const std::vector<PoolRow>& rows, const std::string& path) {
    auto out = open_out(path);
    out << "slot,total_production_kwh,total_consumption_kwh\n";
    for (const auto& r : rows)
        out << fmt::format("{},{},{}\n", r.slot, r.totals.total_production.str(), r.totals.total_consumption.str());
}

void write_e2e_outputs(const E2eResult& r, const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::vector<GasUsageRow> gas;
    for (const auto& g : gas_report(r.receipts)) gas.push_back({g.op, r.users, g.mean_gas, g.max_gas});
    write_gas_usage_csv(gas, dir + "/gas_usage.csv");
    write_settlements_csv(r.settlements, dir + "/settlements.csv");
    write_pool_csv(r.pool, dir + "/pool.csv");
    write_receipts_jsonl(r.receipts, dir + "/receipts.jsonl");
    auto out = open_out(dir + "/profiles.json");
    out << r.profiles.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Training

std::string_view to_string(TrainMode m) { return m == TrainMode::Federated ? "federated" : "local"; }

std::vector<double> TrainingResult::average_curve() const {
    std::vector<double> sum(static_cast<std::size_t>(episodes), 0.0);
    for (const auto& r : rows) sum[static_cast<std::size_t>(r.episode)] += r.reward;
    for (auto& v : sum) v /= static_cast<double>(households);
    return sum;
}

double TrainingResult::tail_mean(double fraction) const {
    const auto curve = average_curve();
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(curve.size()))));
    double s = 0.0;
    for (std::size_t i = curve.size() - n; i < curve.size(); ++i) s += curve[i];
    return s / static_cast<double>(n);
}

TrainingResult run_training(const ScenarioConfig& cfg, TrainMode mode) {
    cfg.validate();
    const int H = cfg.households;
    const auto L = static_cast<std::size_t>(cfg.train.episode_slots);

    TrainingResult out;
    out.mode = mode;
    out.seed = cfg.seed;
    out.episodes = cfg.train.episodes;
    out.households = H;
    const std::size_t min_hours =
        cfg.train.fixed_start >= 0 ? static_cast<std::size_t>(cfg.train.fixed_start) + L + 1 : L + 1;
    out.series = build_series(cfg, min_hours, H);
    out.prices = build_prices(cfg.price, out.series.front().size(), cfg.data.synth_seed);
    for (int h = 0; h < H; ++h) {
        out.agents.emplace_back(cfg.sac, agent_seed(cfg.seed, static_cast<std::size_t>(h)), init_seed(cfg.seed));
        out.normalizers.push_back(series::fit_normalizer(out.series[static_cast<std::size_t>(h)], cfg.battery.capacity));
    }

    const std::size_t len = out.series.front().size();
    const std::size_t windows = (len - 1) / L;
    const std::size_t warmup = cfg.train.warmup > 0 ? static_cast<std::size_t>(cfg.train.warmup) : cfg.sac.batch_size;
    const fed::FederationSchedule schedule{cfg.federation_period, cfg.train.episodes};
    std::vector<sac::SacAgent*> members;
    for (auto& a : out.agents) members.push_back(&a);

    for (int e = 0; e < cfg.train.episodes; ++e) {
        const std::size_t start = cfg.train.fixed_start >= 0 ? static_cast<std::size_t>(cfg.train.fixed_start)
                                                              : (static_cast<std::size_t>(e) % windows) * L;
        for (int h = 0; h < H; ++h) {
            const auto hi = static_cast<std::size_t>(h);
            sac::SacAgent& agent = out.agents[hi];
            const auto& s = out.series[hi];
            double level = cfg.battery.level;
            EpisodeRow row{e, h, 0.0, 0.0, 0.0, 0.0};
            int updates = 0;
            for (std::size_t k = 0; k < L; ++k) {
                const std::size_t idx = start + k;
                const env::EnvState st = series::state_at(s, idx, level);
                const sac::State obs = out.normalizers[hi].apply(st);
                const int a = agent.select_action(obs, sac::ActionMode::Stochastic);
                const env::Battery bat{cfg.battery.capacity, level, cfg.battery.efficiency};
                const auto res = env::step(st, env::action_from_index(a), bat, out.prices[idx],
                                           out.prices[idx] * cfg.price.sell_ratio);
                const env::Battery after{cfg.battery.capacity, res.outcome.next_battery, cfg.battery.efficiency};
                const double r = env::reward(res.outcome, after, cfg.reward);
                level = res.outcome.next_battery;
                const sac::State next_obs = out.normalizers[hi].apply(series::state_at(s, idx + 1, level));
                agent.replay().push({obs, a, r, next_obs, k + 1 == L});
                row.behavior_reward += r;
                if (agent.replay().size() >= warmup) {
                    for (int u = 0; u < cfg.train.updates_per_step; ++u) {
                        const sac::Losses l = agent.update_from_replay();
                        row.q_loss += 0.5 * (l.q1 + l.q2);
                        row.policy_loss += l.policy;
                        ++updates;
                    }
                }
            }
            if (updates > 0) {
                row.q_loss /= updates;
                row.policy_loss /= updates;
            }
            row.reward = greedy_return(agent, out.normalizers[hi], s, out.prices, start, L, cfg);
            out.rows.push_back(row);
        }
        if (mode == TrainMode::Federated) {
            auto report = fed::federate_step(e + 1, schedule, members);
            if (report.triggered) out.barriers.push_back(std::move(report));
        }
    }
    return out;
}

double greedy_return(const sac::SacAgent& agent, const env::StateNormalizer& norm, const series::HouseholdSeries& s,
                     const std::vector<double>& prices, std::size_t start, std::size_t length,
                     const ScenarioConfig& cfg) {
    double level = cfg.battery.level;
    double total = 0.0;
    for (std::size_t k = 0; k < length; ++k) {
        const std::size_t idx = start + k;
        const env::EnvState st = series::state_at(s, idx, level);
        const int a = sac::argmax(agent.policy_probs(norm.apply(st)));
        const env::Battery bat{cfg.battery.capacity, level, cfg.battery.efficiency};
        const auto res = env::step(st, env::action_from_index(a), bat, prices[idx], prices[idx] * cfg.price.sell_ratio);
        const env::Battery after{cfg.battery.capacity, res.outcome.next_battery, cfg.battery.efficiency};
        total += env::reward(res.outcome, after, cfg.reward);
        level = res.outcome.next_battery;
    }
    return total;
}

void write_rewards_csv(const std::vector<TrainingResult>& runs, const std::string& path) {
    auto out = open_out(path);
    out << "episode,household,reward,mode,seed\n";
    for (const auto& run : runs)
        for (const auto& r : run.rows)
            out << fmt::format("{},{},{:.9g},{},{}\n", r.episode, r.household, r.reward, to_string(run.mode), run.seed);
}

void write_metrics_csv(const TrainingResult& run, const std::string& path) {
    auto out = open_out(path);
    out << "episode,household,reward,q_loss,policy_loss\n";
    for (const auto& r : run.rows)
        out << fmt::format("{},{},{:.9g},{:.9g},{:.9g}\n", r.episode, r.household, r.reward, r.q_loss, r.policy_loss);
}

}  // namespace dem
