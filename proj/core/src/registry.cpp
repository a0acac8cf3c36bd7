#include "dem/registry.hpp"

#include "dem/pool.hpp"

#include <algorithm>

namespace dem {

using namespace registry_layout;

std::string_view to_string(CommitmentKind k) {
    return k == CommitmentKind::Production ? "Production" : "Consumption";
}

std::string_view to_string(CommitmentStatus s) {
    switch (s) {
        case CommitmentStatus::Pending: return "Pending";
        case CommitmentStatus::Processed: return "Processed";
        case CommitmentStatus::Settled: return "Settled";
        case CommitmentStatus::Expired: return "Expired";
    }
    return "?";
}

std::size_t EnergyProfile::active_count() const {
    return static_cast<std::size_t>(
        std::count_if(history.begin(), history.end(), [](const Commitment& c) { return is_active(c.status); }));
}

Money ProfileRegistry::required_for(Energy energy) const {
    return scale_money(energy_cost(energy, set_.params.reference_price), set_.params.collateral_factor);
}

AccountId ProfileRegistry::require_owner(Exec& exec, TokenId token) {
    const AccountId owner = owner_of(metered(exec), token);
    const Address sender = exec.sender();
    if (sender.is_contract || sender.value != owner.id)
        throw ContractError(ErrorCode::NotOwner, "token " + std::to_string(token.id));
    return owner;
}

TokenId ProfileRegistry::mint_profile(Exec& exec, Money initial_collateral) {
    const Address sender = exec.sender();
    if (sender.is_contract) throw ContractError(ErrorCode::UnauthorizedCaller, "contracts cannot own profiles");
    if (initial_collateral.raw < 0) throw ContractError(ErrorCode::InsufficientBalance, "negative collateral");
    const AccountId owner{sender.value};

    set_.ledger->debit(exec, owner, initial_collateral);
    const TokenId token{static_cast<std::uint64_t>(exec.load(key(NextToken)))};
    exec.store(key(NextToken), static_cast<Word>(token.id + 1));
    exec.store(key(Owner, token.id), static_cast<Word>(owner.id) + 1);
    exec.store(key(Collateral, token.id), initial_collateral.raw);
    exec.emit({"ProfileMinted",
               {{"token", static_cast<std::int64_t>(token.id)}, {"owner", owner.id}, {"collateral", initial_collateral.raw}}});
    exec.set_output(static_cast<std::int64_t>(token.id));
    return token;
}

void ProfileRegistry::set_status(Exec& exec, CommitmentId cid, const Commitment& c, CommitmentStatus status) {
    exec.store(key(CommitWord, cid.id), pack(status, c.kind, c.slot, c.energy));
    exec.emit({"CommitmentStatus",
               {{"commitment", static_cast<std::int64_t>(cid.id)},
                {"token", static_cast<std::int64_t>(c.token.id)},
                {"status", static_cast<std::int64_t>(status)}}});
}

CommitmentId ProfileRegistry::append_commitment(Exec& exec, TokenId token, CommitmentKind kind, Energy energy,
                                                Slot slot) {
    if (energy.raw < 0 || energy.raw > kMaxEnergyRaw)
        throw ContractError(ErrorCode::EnergyOutOfRange, energy.str() + " kWh");
    if (slot <= exec.now())
        throw ContractError(ErrorCode::PastSlot, "slot " + std::to_string(slot) + " is not after " + std::to_string(exec.now()));
    if (slot > kMaxSlot) throw ContractError(ErrorCode::PastSlot, "slot " + std::to_string(slot) + " out of range");

    const Word active = exec.load(key(ActiveCount, token.id));
    if (active >= static_cast<Word>(kMaxActiveCommitments))
        throw ContractError(ErrorCode::CommitmentLimit, "token " + std::to_string(token.id));

    const Money required = Money::from_raw(exec.load(key(Required, token.id))) + required_for(energy);
    const Money collateral = Money::from_raw(exec.load(key(Collateral, token.id)));
    if (collateral < required)
        throw ContractError(ErrorCode::InsufficientCollateral,
                            "token " + std::to_string(token.id) + " holds " + collateral.str() + ", needs " + required.str());

    const CommitmentId cid{static_cast<std::uint64_t>(exec.load(key(NextCommitment)))};
    exec.store(key(NextCommitment), static_cast<Word>(cid.id + 1));
    exec.store(key(CommitWord, cid.id), pack(CommitmentStatus::Pending, kind, slot, energy));
    exec.store(key(CommitToken, cid.id), static_cast<Word>(token.id + 1));

    const Word len = exec.load(key(ListLen, token.id));
    exec.store(key(List, token.id, static_cast<std::uint64_t>(len)), static_cast<Word>(cid.id + 1));
    exec.store(key(ListLen, token.id), len + 1);

    for (std::uint64_t k = 0; k < kMaxActiveCommitments; ++k) {
        if (exec.load(key(ActiveSet, token.id, k)) == 0) {
            exec.store(key(ActiveSet, token.id, k), static_cast<Word>(cid.id + 1));
            break;
        }
    }
    exec.store(key(ActiveCount, token.id), active + 1);
    exec.store(key(Required, token.id), required.raw);

    exec.emit({"CommitmentCreated",
               {{"commitment", static_cast<std::int64_t>(cid.id)},
                {"token", static_cast<std::int64_t>(token.id)},
                {"kind", static_cast<std::int64_t>(kind)},
                {"energy", energy.raw},
                {"slot", slot}}});
    exec.emit({"CommitmentStatus",
               {{"commitment", static_cast<std::int64_t>(cid.id)},
                {"token", static_cast<std::int64_t>(token.id)},
                {"status", static_cast<std::int64_t>(CommitmentStatus::Pending)}}});
    return cid;
}

CommitmentId ProfileRegistry::add_commitment(Exec& exec, TokenId token, CommitmentKind kind, Energy energy, Slot slot) {
    require_owner(exec, token);
    const CommitmentId cid = append_commitment(exec, token, kind, energy, slot);
    if (is_deposited(metered(exec), token))
        exec.call_as(Address::contract(ContractId::Registry), [&] { set_.pool->ingest(exec, token, cid); });
    exec.set_output(static_cast<std::int64_t>(cid.id));
    return cid;
}

CommitmentId ProfileRegistry::replace_settled_commitment(Exec& exec, TokenId token, CommitmentId old_id,
                                                         CommitmentKind kind, Energy energy, Slot slot) {
    require_owner(exec, token);
    if (!is_deposited(metered(exec), token)) throw ContractError(ErrorCode::NotDeposited, "token " + std::to_string(token.id));
    const Commitment old = read_commitment(metered(exec), old_id);
    if (old.token != token || exec.load(key(Replaced, old_id.id)) != 0)
        throw ContractError(ErrorCode::UnknownCommitment,
                            "commitment " + std::to_string(old_id.id) + " is not listed on token " + std::to_string(token.id));
    if (!is_final(old.status))
        throw ContractError(ErrorCode::NotFinalized,
                            "commitment " + std::to_string(old_id.id) + " is " + std::string(to_string(old.status)));
    exec.store(key(Replaced, old_id.id), 1);
    const CommitmentId cid = append_commitment(exec, token, kind, energy, slot);
    exec.emit({"CommitmentReplaced",
               {{"old", static_cast<std::int64_t>(old_id.id)}, {"new", static_cast<std::int64_t>(cid.id)}}});
    exec.call_as(Address::contract(ContractId::Registry), [&] { set_.pool->ingest(exec, token, cid); });
    exec.set_output(static_cast<std::int64_t>(cid.id));
    return cid;
}

void ProfileRegistry::deposit_profile(Exec& exec, TokenId token) {
    require_owner(exec, token);
    if (is_deposited(metered(exec), token))
        throw ContractError(ErrorCode::AlreadyDeposited, "token " + std::to_string(token.id));
    exec.store(key(Deposited, token.id), 1);
    exec.emit({"ProfileDeposited", {{"token", static_cast<std::int64_t>(token.id)}}});
    for (std::uint64_t k = 0; k < kMaxActiveCommitments; ++k) {
        const Word entry = exec.load(key(ActiveSet, token.id, k));
        if (entry == 0) continue;
        const CommitmentId cid{static_cast<std::uint64_t>(entry - 1)};
        if (read_commitment(metered(exec), cid).status == CommitmentStatus::Pending)
            exec.call_as(Address::contract(ContractId::Registry), [&] { set_.pool->ingest(exec, token, cid); });
    }
}

void ProfileRegistry::withdraw_profile(Exec& exec, TokenId token) {
    require_owner(exec, token);
    if (!is_deposited(metered(exec), token)) throw ContractError(ErrorCode::NotDeposited, "token " + std::to_string(token.id));
    if (exec.load(key(ActiveCount, token.id)) != 0)
        throw ContractError(ErrorCode::ActiveCommitments, "token " + std::to_string(token.id));
    exec.store(key(Deposited, token.id), 0);
    exec.emit({"ProfileWithdrawn", {{"token", static_cast<std::int64_t>(token.id)}}});
}

void ProfileRegistry::deposit_collateral(Exec& exec, TokenId token, Money amount) {
    const AccountId owner = require_owner(exec, token);
    if (amount.raw < 0) throw ContractError(ErrorCode::InsufficientBalance, "negative amount");
    set_.ledger->debit(exec, owner, amount);
    const Word have = exec.load(key(Collateral, token.id));
    exec.store(key(Collateral, token.id), have + amount.raw);
    exec.emit({"CollateralDeposited", {{"token", static_cast<std::int64_t>(token.id)}, {"amount", amount.raw}}});
}

void ProfileRegistry::withdraw_collateral(Exec& exec, TokenId token, Money amount) {
    const AccountId owner = require_owner(exec, token);
    if (amount.raw < 0) throw ContractError(ErrorCode::InsufficientCollateral, "negative amount");
    const Word have = exec.load(key(Collateral, token.id));
    if (have < amount.raw)
        throw ContractError(ErrorCode::InsufficientCollateral,
                            "token " + std::to_string(token.id) + " holds " + Money::from_raw(have).str());
    if (exec.load(key(ActiveCount, token.id)) != 0)
        throw ContractError(ErrorCode::CollateralLocked, "token " + std::to_string(token.id) + " has active commitments");
    exec.store(key(Collateral, token.id), have - amount.raw);
    set_.ledger->credit(exec, owner, amount);
    exec.emit({"CollateralWithdrawn", {{"token", static_cast<std::int64_t>(token.id)}, {"amount", amount.raw}}});
}

void ProfileRegistry::mark_processed(Exec& exec, CommitmentId cid) {
    if (exec.sender() != Address::contract(ContractId::Pool)) throw ContractError(ErrorCode::UnauthorizedCaller, "mark_processed");
    const Commitment c = read_commitment(metered(exec), cid);
    if (c.status != CommitmentStatus::Pending)
        throw ContractError(ErrorCode::NotPending, "commitment " + std::to_string(cid.id) + " is " + std::string(to_string(c.status)));
    set_status(exec, cid, c, CommitmentStatus::Processed);
}

void ProfileRegistry::finalize(Exec& exec, CommitmentId cid, CommitmentStatus terminal) {
    if (exec.sender() != Address::contract(ContractId::Market)) throw ContractError(ErrorCode::UnauthorizedCaller, "finalize");
    if (!is_final(terminal)) throw std::invalid_argument("finalize needs a terminal status");
    const Commitment c = read_commitment(metered(exec), cid);
    if (c.status != CommitmentStatus::Processed)
        throw ContractError(ErrorCode::NotProcessed, "commitment " + std::to_string(cid.id) + " is " + std::string(to_string(c.status)));
    set_status(exec, cid, c, terminal);

    const TokenId token = c.token;
    const Word active = exec.load(key(ActiveCount, token.id));
    exec.store(key(ActiveCount, token.id), active - 1);
    for (std::uint64_t k = 0; k < kMaxActiveCommitments; ++k) {
        if (exec.load(key(ActiveSet, token.id, k)) == static_cast<Word>(cid.id + 1)) {
            exec.store(key(ActiveSet, token.id, k), 0);
            break;
        }
    }
    const Word required = exec.load(key(Required, token.id));
    exec.store(key(Required, token.id), required - required_for(c.energy).raw);
}

Money ProfileRegistry::seize_collateral(Exec& exec, TokenId token, Money amount, AccountId to) {
    if (exec.sender() != Address::contract(ContractId::Market)) throw ContractError(ErrorCode::UnauthorizedCaller, "seize_collateral");
    const Word have = exec.load(key(Collateral, token.id));
    const Money moved = Money::from_raw(std::min<Word>(have, amount.raw));
    if (moved.raw == 0) return moved;
    exec.store(key(Collateral, token.id), have - moved.raw);
    set_.ledger->credit(exec, to, moved);
    return moved;
}

// views ------------------------------------------------------------------------

std::uint64_t ProfileRegistry::token_count() const {
    return static_cast<std::uint64_t>(set_.ledger->peek(key(NextToken)));
}

std::uint64_t ProfileRegistry::commitment_count() const {
    return static_cast<std::uint64_t>(set_.ledger->peek(key(NextCommitment)));
}

std::optional<Commitment> ProfileRegistry::commitment(CommitmentId cid) const {
    const Ledger& ledger = *set_.ledger;
    if (ledger.peek(key(CommitWord, cid.id)) == 0) return std::nullopt;
    Commitment c = read_commitment(unmetered(ledger), cid);
    c.replaced = ledger.peek(key(Replaced, cid.id)) != 0;
    return c;
}

std::optional<EnergyProfile> ProfileRegistry::profile(TokenId token) const {
    const Ledger& ledger = *set_.ledger;
    const Word owner = ledger.peek(key(Owner, token.id));
    if (owner == 0) return std::nullopt;
    EnergyProfile p;
    p.token = token;
    p.owner = AccountId{static_cast<std::uint32_t>(owner - 1)};
    p.collateral = Money::from_raw(ledger.peek(key(Collateral, token.id)));
    p.required_collateral = Money::from_raw(ledger.peek(key(Required, token.id)));
    p.deposited = ledger.peek(key(Deposited, token.id)) != 0;
    const Word len = ledger.peek(key(ListLen, token.id));
    for (Word i = 0; i < len; ++i) {
        const Word entry = ledger.peek(key(List, token.id, static_cast<std::uint64_t>(i)));
        Commitment c = *commitment(CommitmentId{static_cast<std::uint64_t>(entry - 1)});
        p.history.push_back(c);
        if (!c.replaced) p.commitments.push_back(c);
    }
    return p;
}

Money ProfileRegistry::total_collateral() const {
    std::int64_t total = 0;
    for (const auto& [k, v] : set_.ledger->storage().slots())
        if (k.contract == ContractId::Registry && k.field == Collateral) total += v;
    return Money::from_raw(total);
}

nlohmann::ordered_json profile_to_json(const EnergyProfile& p) {
    nlohmann::ordered_json j;
    j["token"] = p.token.id;
    j["owner"] = p.owner.id;
    j["collateral"] = p.collateral.str();
    j["deposited"] = p.deposited;
    auto list = nlohmann::ordered_json::array();
    for (const auto& c : p.commitments) {
        nlohmann::ordered_json cj;
        cj["commitment_id"] = c.commitment_id.id;
        cj["kind"] = to_string(c.kind);
        cj["energy_kwh"] = c.energy.str();
        cj["slot"] = c.slot;
        cj["status"] = to_string(c.status);
        list.push_back(std::move(cj));
    }
    j["commitments"] = std::move(list);
    return j;
}

}  // namespace dem
