// Throughput of the hot paths: ledger transactions, the end-to-end market
// scenario, one SAC update and one federated average.

#include "dem/federation.hpp"
#include "dem/marketplace.hpp"
#include "dem/runner.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace dem;

namespace {

void BM_LedgerTransfer(benchmark::State& state) {
    Ledger ledger(2);
    ledger.mint_balance(AccountId{0}, Money::parse("1000000"));
    for (auto _ : state) {
        benchmark::DoNotOptimize(ledger.transfer(AccountId{0}, AccountId{1}, Money::from_raw(1)));
    }
}
BENCHMARK(BM_LedgerTransfer);

void BM_OraclePush(benchmark::State& state) {
    Marketplace mp(1);
    Slot slot = 0;
    for (auto _ : state) {
        const TxReceipt r = mp.apply(AccountId{0}, call::PushRound{FeedId::price(), slot++, OracleAnswer::parse("0.2")});
        benchmark::DoNotOptimize(r.gas_used);
    }
}
BENCHMARK(BM_OraclePush);

void BM_EndToEnd(benchmark::State& state) {
    ScenarioConfig cfg;
    cfg.households = static_cast<int>(state.range(0));
    for (auto _ : state) {
        const E2eResult r = run_e2e(cfg);
        benchmark::DoNotOptimize(r.receipts.size());
    }
    state.SetLabel("24 slots");
}
BENCHMARK(BM_EndToEnd)->Arg(2)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

sac::Transition random_transition(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    sac::Transition t;
    t.state = {u(rng), u(rng), u(rng), u(rng)};
    t.next_state = {u(rng), u(rng), u(rng), u(rng)};
    t.action = static_cast<int>(rng() % 3);
    t.reward = u(rng) - 0.5;
    return t;
}

void BM_SacUpdate(benchmark::State& state) {
    sac::SacHyper hyper;
    hyper.batch_size = static_cast<std::size_t>(state.range(0));
    sac::SacAgent agent(hyper, 1);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 4096; ++i) agent.replay().push(random_transition(rng));
    for (auto _ : state) benchmark::DoNotOptimize(agent.update_from_replay());
}
BENCHMARK(BM_SacUpdate)->Arg(32)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_FedAvg(benchmark::State& state) {
    std::vector<sac::WeightSet> ws;
    for (int i = 0; i < state.range(0); ++i) ws.push_back(sac::SacAgent(sac::SacHyper{}, static_cast<std::uint64_t>(i)).export_weights());
    for (auto _ : state) benchmark::DoNotOptimize(fed::aggregate(ws));
}
BENCHMARK(BM_FedAvg)->Arg(4)->Arg(16)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
