#include "dem/market.hpp"

#include "dem/oracle.hpp"
#include "dem/pool.hpp"
#include "dem/registry.hpp"

#include <algorithm>

namespace dem {

using namespace market_layout;

namespace {
constexpr Word kPositionMask = (Word{1} << kPositionBits) - 1;

std::int64_t as_i64(std::uint64_t v) { return static_cast<std::int64_t>(v); }
std::uint64_t as_u64(std::int64_t v) { return static_cast<std::uint64_t>(v); }

Word slot_count(Word info) { return info & kPositionMask; }
Word slot_active_index(Word info) { return (info >> kPositionBits) - 1; }
Word slot_info(Word count, Word active_index) { return ((active_index + 1) << kPositionBits) | count; }
}  // namespace

Energy EnergyMarket::pro_rata(Energy committed, Energy slot_supply, Energy demand) {
    if (slot_supply <= demand) return committed;
    return Energy::from_raw(div_floor(static_cast<i128>(committed.raw) * demand.raw, slot_supply.raw));
}

void EnergyMarket::market_trigger(Exec& exec, TokenId token, CommitmentId cid) {
    if (exec.sender() != Address::contract(ContractId::Pool))
        throw ContractError(ErrorCode::UnauthorizedCaller, "market_trigger is reserved for the pool");
    const Commitment c = set_.registry->read_commitment(metered(exec), cid);
    if (c.token != token) throw ContractError(ErrorCode::UnknownCommitment, "token mismatch");
    if (c.status != CommitmentStatus::Processed)
        throw ContractError(ErrorCode::NotProcessed, "commitment " + std::to_string(cid.id) + " is " + std::string(to_string(c.status)));
    const std::uint64_t slot = as_u64(c.slot);

    if (c.kind == CommitmentKind::Consumption) {
        if (exec.load(key(SlotConsumer, slot)) != 0)
            throw ContractError(ErrorCode::DuplicateConsumer, "slot " + std::to_string(c.slot) + " already has a consumer");
        exec.store(key(SlotConsumer, slot), as_i64(cid.id + 1));
    } else {
        const Word supply = exec.load(key(SlotSupply, slot));
        exec.store(key(SlotSupply, slot), supply + c.energy.raw);
    }

    const Word seq = exec.load(key(Sequence));
    exec.store(key(Sequence), seq + 1);
    const Word info = exec.load(key(SlotInfo, slot));
    const Word n = slot_count(info);
    if (n >= kPositionMask) throw ContractError(ErrorCode::CommitmentLimit, "slot buffer full");
    exec.store(key(SlotEntry, slot, as_u64(n)), as_i64(cid.id + 1));
    exec.store(key(EntryMeta, cid.id), (seq << kPositionBits) | (n + 1));

    Word active_index = 0;
    if (n == 0) {
        active_index = exec.load(key(ActiveSlotCount));
        exec.store(key(ActiveSlotAt, as_u64(active_index)), c.slot + 1);
        exec.store(key(ActiveSlotCount), active_index + 1);
    } else {
        active_index = slot_active_index(info);
    }
    exec.store(key(SlotInfo, slot), slot_info(n + 1, active_index));
    exec.emit({"Buffered",
               {{"token", as_i64(token.id)}, {"commitment", as_i64(cid.id)}, {"slot", c.slot}, {"sequence", seq}}});
}

// Swap-and-pop is unconditional (the tail may move onto itself) so the
// access pattern does not depend on the removed element's position.
void EnergyMarket::remove_slot(Exec& exec, Slot slot, Word info) {
    const std::uint64_t s = as_u64(slot);
    const Word pos = slot_active_index(info);
    const Word count = exec.load(key(ActiveSlotCount));
    const Word last = exec.load(key(ActiveSlotAt, as_u64(count - 1)));
    exec.store(key(ActiveSlotAt, as_u64(pos)), last);
    const auto last_slot = as_u64(last - 1);
    if (last_slot != s) {
        const Word last_info = exec.load(key(SlotInfo, last_slot));
        exec.store(key(SlotInfo, last_slot), slot_info(slot_count(last_info), pos));
    }
    exec.store(key(ActiveSlotAt, as_u64(count - 1)), 0);
    exec.store(key(ActiveSlotCount), count - 1);
    exec.store(key(SlotInfo, s), 0);
    exec.store(key(SlotSupply, s), 0);
    exec.store(key(SlotConsumer, s), 0);
}

void EnergyMarket::remove_entry(Exec& exec, Slot slot, CommitmentId cid) {
    const std::uint64_t s = as_u64(slot);
    const Word meta = exec.load(key(EntryMeta, cid.id));
    const Word pos = (meta & kPositionMask) - 1;
    const Word info = exec.load(key(SlotInfo, s));
    const Word n = slot_count(info);
    const Word last = exec.load(key(SlotEntry, s, as_u64(n - 1)));
    exec.store(key(SlotEntry, s, as_u64(pos)), last);
    const auto last_cid = as_u64(last - 1);
    const Word last_meta = exec.load(key(EntryMeta, last_cid));
    exec.store(key(EntryMeta, last_cid), (last_meta & ~kPositionMask) | (pos + 1));
    exec.store(key(SlotEntry, s, as_u64(n - 1)), 0);
    exec.store(key(EntryMeta, cid.id), 0);
    if (n - 1 == 0) {
        remove_slot(exec, slot, info);
    } else {
        exec.store(key(SlotInfo, s), slot_info(n - 1, slot_active_index(info)));
    }
}

std::int64_t EnergyMarket::purge_expired(Exec& exec, Slot current_slot) {
    const Slot cutoff = std::min(current_slot, exec.now());
    const Word count = exec.load(key(ActiveSlotCount));
    std::vector<Slot> stale;
    for (Word i = 0; i < count; ++i) {
        const Slot s = exec.load(key(ActiveSlotAt, as_u64(i))) - 1;
        if (s < cutoff) stale.push_back(s);
    }
    std::sort(stale.begin(), stale.end());

    std::int64_t removed = 0;
    exec.call_as(Address::contract(ContractId::Market), [&] {
        for (Slot s : stale) {
            // drain from the back so positions stay valid
            for (Word n = slot_count(exec.load(key(SlotInfo, as_u64(s)))); n > 0; --n) {
                const CommitmentId cid{as_u64(exec.load(key(SlotEntry, as_u64(s), as_u64(n - 1))) - 1)};
                set_.pool->on_expired(exec, cid);
                set_.registry->finalize(exec, cid, CommitmentStatus::Expired);
                remove_entry(exec, s, cid);
                ++removed;
            }
        }
    });
    exec.emit({"Purged", {{"cutoff", cutoff}, {"removed", removed}}});
    exec.set_output(removed);
    return removed;
}

SettlementRecord EnergyMarket::settle_commitment(Exec& exec, Slot slot, CommitmentId cid) {
    ProfileRegistry& registry = *set_.registry;
    if (slot > exec.now())
        throw ContractError(ErrorCode::SlotNotElapsed, "slot " + std::to_string(slot) + " is after " + std::to_string(exec.now()));
    if (exec.load(key(EntryMeta, cid.id)) == 0)
        throw ContractError(ErrorCode::UnknownCommitment, "commitment " + std::to_string(cid.id) + " is not buffered");
    const Commitment c = registry.read_commitment(metered(exec), cid);
    if (c.slot != slot || c.kind != CommitmentKind::Production)
        throw ContractError(ErrorCode::UnknownCommitment,
                            "commitment " + std::to_string(cid.id) + " is not a production entry of slot " + std::to_string(slot));

    const Word consumer = exec.load(key(SlotConsumer, as_u64(slot)));
    if (consumer == 0) throw ContractError(ErrorCode::NoConsumer, "slot " + std::to_string(slot));
    const Commitment demand = registry.read_commitment(metered(exec), CommitmentId{as_u64(consumer - 1)});

    FeedRound price_round;
    FeedRound delivered_round;
    try {
        price_round = set_.oracle->at_slot(metered(exec), FeedId::price(), slot);
        delivered_round = set_.oracle->at_slot(metered(exec), FeedId::delivered(c.token), slot);
    } catch (const ContractError& e) {
        throw ContractError(ErrorCode::OracleUnavailable, e.what());
    }

    SettlementRecord rec;
    rec.slot = slot;
    rec.seller = c.token;
    rec.buyer = demand.token;
    const Energy supply = Energy::from_raw(exec.load(key(SlotSupply, as_u64(slot))));
    rec.matched_energy = pro_rata(c.energy, supply, demand.energy);
    rec.unit_price = answer_to_money(price_round.answer);
    rec.payment = energy_cost(rec.matched_energy, rec.unit_price);
    rec.delivered_energy = std::max(Energy{}, answer_to_energy(delivered_round.answer));

    const AccountId seller_owner = registry.owner_of(metered(exec), c.token);
    const AccountId buyer_owner = registry.owner_of(metered(exec), demand.token);
    set_.ledger->transfer(exec, buyer_owner, seller_owner, rec.payment);

    exec.call_as(Address::contract(ContractId::Market), [&] {
        if (rec.delivered_energy < rec.matched_energy) {
            const Energy shortfall = rec.matched_energy - rec.delivered_energy;
            const Money penalty = Money::from_raw(div_round_half_even(
                static_cast<i128>(shortfall.raw) * rec.unit_price.raw * set_.params.penalty_factor.raw,
                static_cast<i128>(Energy::scale) * 1'000'000));
            rec.forfeit = registry.seize_collateral(exec, c.token, penalty, buyer_owner);
        }
        set_.pool->on_settled(exec, cid);
        registry.finalize(exec, cid, CommitmentStatus::Settled);
        remove_entry(exec, slot, cid);
    });

    exec.emit({"Settlement",
               {{"slot", slot},
                {"seller", as_i64(rec.seller.id)},
                {"buyer", as_i64(rec.buyer.id)},
                {"matched", rec.matched_energy.raw},
                {"price", rec.unit_price.raw},
                {"payment", rec.payment.raw},
                {"delivered", rec.delivered_energy.raw},
                {"forfeit", rec.forfeit.raw}}});
    return rec;
}

void EnergyMarket::close_slot(Exec& exec, Slot slot) {
    if (slot > exec.now())
        throw ContractError(ErrorCode::SlotNotElapsed, "slot " + std::to_string(slot) + " is after " + std::to_string(exec.now()));
    const Word consumer = exec.load(key(SlotConsumer, as_u64(slot)));
    if (consumer == 0) throw ContractError(ErrorCode::NoConsumer, "slot " + std::to_string(slot));
    const CommitmentId cid{as_u64(consumer - 1)};
    const Commitment demand = set_.registry->read_commitment(metered(exec), cid);
    exec.call_as(Address::contract(ContractId::Market), [&] {
        set_.pool->on_settled(exec, cid);
        set_.registry->finalize(exec, cid, CommitmentStatus::Settled);
        remove_entry(exec, slot, cid);
    });
    exec.emit({"SlotClosed", {{"slot", slot}, {"buyer", as_i64(demand.token.id)}, {"demand", demand.energy.raw}}});
}

// views ------------------------------------------------------------------------

std::vector<BufferEntry> EnergyMarket::buffer() const {
    const Ledger& ledger = *set_.ledger;
    std::vector<BufferEntry> out;
    const StorageKey lo = key(EntryMeta, 0);
    for (auto it = ledger.storage().slots().lower_bound(lo); it != ledger.storage().slots().end(); ++it) {
        if (it->first.contract != ContractId::Market || it->first.field != EntryMeta) break;
        const CommitmentId cid{it->first.a};
        const Commitment c = set_.registry->read_commitment(unmetered(ledger), cid);
        out.push_back({c.token, cid, c.kind, c.energy, c.slot, as_u64(it->second >> kPositionBits)});
    }
    std::sort(out.begin(), out.end(), [](const BufferEntry& a, const BufferEntry& b) { return a.sequence < b.sequence; });
    return out;
}

std::vector<BufferEntry> EnergyMarket::buffer_for_slot(Slot slot) const {
    const Ledger& ledger = *set_.ledger;
    std::vector<BufferEntry> out;
    const Word n = slot_count(ledger.peek(key(SlotInfo, as_u64(slot))));
    for (Word i = 0; i < n; ++i) {
        const CommitmentId cid{as_u64(ledger.peek(key(SlotEntry, as_u64(slot), as_u64(i))) - 1)};
        const Commitment c = set_.registry->read_commitment(unmetered(ledger), cid);
        const Word meta = ledger.peek(key(EntryMeta, cid.id));
        out.push_back({c.token, cid, c.kind, c.energy, c.slot, as_u64(meta >> kPositionBits)});
    }
    std::sort(out.begin(), out.end(), [](const BufferEntry& a, const BufferEntry& b) { return a.sequence < b.sequence; });
    return out;
}

std::vector<Slot> EnergyMarket::active_slots() const {
    const Ledger& ledger = *set_.ledger;
    std::vector<Slot> out;
    const Word count = ledger.peek(key(ActiveSlotCount));
    for (Word i = 0; i < count; ++i) out.push_back(ledger.peek(key(ActiveSlotAt, as_u64(i))) - 1);
    std::sort(out.begin(), out.end());
    return out;
}

SettlementRecord settlement_from_event(const Event& e) {
    if (e.name != "Settlement") throw std::invalid_argument("not a Settlement event: " + e.name);
    SettlementRecord r;
    r.slot = e.field("slot");
    r.seller = TokenId{as_u64(e.field("seller"))};
    r.buyer = TokenId{as_u64(e.field("buyer"))};
    r.matched_energy = Energy::from_raw(e.field("matched"));
    r.unit_price = Money::from_raw(e.field("price"));
    r.payment = Money::from_raw(e.field("payment"));
    r.delivered_energy = Energy::from_raw(e.field("delivered"));
    r.forfeit = Money::from_raw(e.field("forfeit"));
    return r;
}

}  // namespace dem
