#include "dem/marketplace.hpp"

namespace dem {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

CommitmentKind kind_from(const std::string& s) {
    if (s == "Production" || s == "production") return CommitmentKind::Production;
    if (s == "Consumption" || s == "consumption") return CommitmentKind::Consumption;
    throw std::invalid_argument("unknown commitment kind: " + s);
}

}  // namespace

std::string op_name(const Call& c) {
    return std::visit(overloaded{
                          [](const call::MintProfile&) { return "mint_profile"; },
                          [](const call::AddCommitment&) { return "add_commitment"; },
                          [](const call::ReplaceCommitment&) { return "replace_commitment"; },
                          [](const call::DepositProfile&) { return "deposit_profile"; },
                          [](const call::WithdrawProfile&) { return "withdraw_profile"; },
                          [](const call::DepositCollateral&) { return "deposit_collateral"; },
                          [](const call::WithdrawCollateral&) { return "withdraw_collateral"; },
                          [](const call::Ingest&) { return "ingest"; },
                          [](const call::MarketTrigger&) { return "market_trigger"; },
                          [](const call::PurgeExpired&) { return "purge_expired"; },
                          [](const call::SettleCommitment&) { return "settle_commitment"; },
                          [](const call::CloseSlot&) { return "close_slot"; },
                          [](const call::PushRound&) { return "push_round"; },
                          [](const call::Transfer&) { return "transfer"; },
                      },
                      c);
}

Call call_from_json(const nlohmann::json& j) {
    const std::string op = j.at("op").get<std::string>();
    auto token = [&] { return TokenId{j.at("token").get<std::uint64_t>()}; };
    auto energy = [&] { return Energy::parse(j.at("energy_kwh").get<std::string>()); };
    auto money = [&](const char* k) { return Money::parse(j.at(k).get<std::string>()); };
    if (op == "mint_profile") return call::MintProfile{money("collateral")};
    if (op == "add_commitment")
        return call::AddCommitment{token(), kind_from(j.at("kind")), energy(), j.at("slot").get<Slot>()};
    if (op == "replace_commitment")
        return call::ReplaceCommitment{token(), CommitmentId{j.at("old_commitment").get<std::uint64_t>()},
                                       kind_from(j.at("kind")), energy(), j.at("slot").get<Slot>()};
    if (op == "deposit_profile") return call::DepositProfile{token()};
    if (op == "withdraw_profile") return call::WithdrawProfile{token()};
    if (op == "deposit_collateral") return call::DepositCollateral{token(), money("amount")};
    if (op == "withdraw_collateral") return call::WithdrawCollateral{token(), money("amount")};
    if (op == "ingest") return call::Ingest{token(), CommitmentId{j.at("commitment").get<std::uint64_t>()}};
    if (op == "market_trigger") return call::MarketTrigger{token(), CommitmentId{j.at("commitment").get<std::uint64_t>()}};
    if (op == "purge_expired") return call::PurgeExpired{j.at("current_slot").get<Slot>()};
    if (op == "settle_commitment")
        return call::SettleCommitment{j.at("slot").get<Slot>(), CommitmentId{j.at("commitment").get<std::uint64_t>()}};
    if (op == "close_slot") return call::CloseSlot{j.at("slot").get<Slot>()};
    if (op == "push_round")
        return call::PushRound{FeedId{j.at("feed").get<std::uint64_t>()}, j.at("slot").get<Slot>(),
                               OracleAnswer::parse(j.at("answer").get<std::string>())};
    if (op == "transfer") return call::Transfer{AccountId{j.at("to").get<std::uint32_t>()}, money("amount")};
    throw ContractError(ErrorCode::UnknownCall, op);
}

nlohmann::json call_to_json(const Call& c) {
    nlohmann::json j;
    j["op"] = op_name(c);
    std::visit(overloaded{
                   [&](const call::MintProfile& x) { j["collateral"] = x.collateral.str(); },
                   [&](const call::AddCommitment& x) {
                       j["token"] = x.token.id;
                       j["kind"] = to_string(x.kind);
                       j["energy_kwh"] = x.energy.str();
                       j["slot"] = x.slot;
                   },
                   [&](const call::ReplaceCommitment& x) {
                       j["token"] = x.token.id;
                       j["old_commitment"] = x.old_id.id;
                       j["kind"] = to_string(x.kind);
                       j["energy_kwh"] = x.energy.str();
                       j["slot"] = x.slot;
                   },
                   [&](const call::DepositProfile& x) { j["token"] = x.token.id; },
                   [&](const call::WithdrawProfile& x) { j["token"] = x.token.id; },
                   [&](const call::DepositCollateral& x) {
                       j["token"] = x.token.id;
                       j["amount"] = x.amount.str();
                   },
                   [&](const call::WithdrawCollateral& x) {
                       j["token"] = x.token.id;
                       j["amount"] = x.amount.str();
                   },
                   [&](const call::Ingest& x) {
                       j["token"] = x.token.id;
                       j["commitment"] = x.commitment.id;
                   },
                   [&](const call::MarketTrigger& x) {
                       j["token"] = x.token.id;
                       j["commitment"] = x.commitment.id;
                   },
                   [&](const call::PurgeExpired& x) { j["current_slot"] = x.current_slot; },
                   [&](const call::SettleCommitment& x) {
                       j["slot"] = x.slot;
                       j["commitment"] = x.commitment.id;
                   },
                   [&](const call::CloseSlot& x) { j["slot"] = x.slot; },
                   [&](const call::PushRound& x) {
                       j["feed"] = x.feed.id;
                       j["slot"] = x.slot;
                       j["answer"] = x.answer.str();
                   },
                   [&](const call::Transfer& x) {
                       j["to"] = x.to.id;
                       j["amount"] = x.amount.str();
                   },
               },
               c);
    return j;
}

Marketplace::Marketplace(std::uint32_t account_count, GasSchedule schedule, MarketParams params)
    : ledger_(account_count, schedule), registry_(set_), pool_(set_), market_(set_), oracle_(set_) {
    set_.ledger = &ledger_;
    set_.registry = &registry_;
    set_.pool = &pool_;
    set_.market = &market_;
    set_.oracle = &oracle_;
    set_.params = params;
}

TxReceipt Marketplace::apply(AccountId caller, const Call& c) {
    return ledger_.execute(caller, op_name(c), [&](Exec& exec) {
        std::visit(overloaded{
                       [&](const call::MintProfile& x) { registry_.mint_profile(exec, x.collateral); },
                       [&](const call::AddCommitment& x) { registry_.add_commitment(exec, x.token, x.kind, x.energy, x.slot); },
                       [&](const call::ReplaceCommitment& x) {
                           registry_.replace_settled_commitment(exec, x.token, x.old_id, x.kind, x.energy, x.slot);
                       },
                       [&](const call::DepositProfile& x) { registry_.deposit_profile(exec, x.token); },
                       [&](const call::WithdrawProfile& x) { registry_.withdraw_profile(exec, x.token); },
                       [&](const call::DepositCollateral& x) { registry_.deposit_collateral(exec, x.token, x.amount); },
                       [&](const call::WithdrawCollateral& x) { registry_.withdraw_collateral(exec, x.token, x.amount); },
                       [&](const call::Ingest& x) { pool_.ingest(exec, x.token, x.commitment); },
                       [&](const call::MarketTrigger& x) { market_.market_trigger(exec, x.token, x.commitment); },
                       [&](const call::PurgeExpired& x) { market_.purge_expired(exec, x.current_slot); },
                       [&](const call::SettleCommitment& x) { market_.settle_commitment(exec, x.slot, x.commitment); },
                       [&](const call::CloseSlot& x) { market_.close_slot(exec, x.slot); },
                       [&](const call::PushRound& x) { oracle_.push_round(exec, x.feed, x.slot, x.answer); },
                       [&](const call::Transfer& x) { ledger_.transfer(exec, caller, x.to, x.amount); },
                   },
                   c);
    });
}

SettleResult Marketplace::settle_slot(AccountId caller, Slot slot) {
    std::vector<PendingCall> calls;
    for (const BufferEntry& e : market_.buffer_for_slot(slot)) {
        if (e.kind != CommitmentKind::Production) continue;
        const call::SettleCommitment sc{slot, e.commitment_id};
        calls.push_back({op_name(sc), [this, sc](Exec& exec) { market_.settle_commitment(exec, sc.slot, sc.commitment); }});
    }
    calls.push_back({"close_slot", [this, slot](Exec& exec) { market_.close_slot(exec, slot); }});

    SettleResult result;
    result.receipts = ledger_.execute_batch(caller, std::move(calls));
    for (const auto& r : result.receipts) {
        if (!r.ok()) {
            result.ok = false;
            if (!result.error || *result.error == ErrorCode::BatchAborted) {
                result.error = r.error;
                result.reason = r.revert_reason;
            }
            continue;
        }
        for (const auto& e : r.events)
            if (e.name == "Settlement") result.records.push_back(settlement_from_event(e));
    }
    return result;
}

}  // namespace dem
