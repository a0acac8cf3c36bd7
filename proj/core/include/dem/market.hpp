#pragma once

// EnergyMarket contract: buffers processed commitments, expires stale ones and
// settles each slot against the single large consumer.

#include "dem/contracts.hpp"

#include <vector>

namespace dem {

struct BufferEntry {
    TokenId token;
    CommitmentId commitment_id;
    CommitmentKind kind = CommitmentKind::Production;
    Energy energy;
    Slot slot = 0;
    /// Global ingest order.
    std::uint64_t sequence = 0;
};

struct SettlementRecord {
    Slot slot = 0;
    TokenId seller;
    TokenId buyer;
    Energy matched_energy;
    Money unit_price;
    Money payment;
    Energy delivered_energy;
    Money forfeit;
};

class EnergyMarket {
public:
    explicit EnergyMarket(const ContractSet& set) : set_(set) {}

    /// Appends a processed commitment to the buffer. Only the pool may call it.
    void market_trigger(Exec& exec, TokenId token, CommitmentId cid);

    /// Expires every buffered entry whose slot precedes min(current_slot, clock).
    std::int64_t purge_expired(Exec& exec, Slot current_slot);

    /// Settles one buffered production entry of `slot` against the slot's consumer.
    SettlementRecord settle_commitment(Exec& exec, Slot slot, CommitmentId cid);

    /// Settles the consumer commitment of `slot` once its producers are done.
    void close_slot(Exec& exec, Slot slot);

    // views --------------------------------------------------------------------
    /// Buffer contents in ingest order.
    std::vector<BufferEntry> buffer() const;
    std::vector<BufferEntry> buffer_for_slot(Slot slot) const;
    std::vector<Slot> active_slots() const;

    /// Pro-rata share of `committed` when the slot's supply exceeds demand.
    /// Rounded down to whole Wh so matched totals never exceed the demand.
    static Energy pro_rata(Energy committed, Energy slot_supply, Energy demand);

private:
    void remove_entry(Exec& exec, Slot slot, CommitmentId cid);
    void remove_slot(Exec& exec, Slot slot, Word info);

    const ContractSet& set_;
};

SettlementRecord settlement_from_event(const Event& e);

namespace market_layout {
enum Field : std::uint16_t {
    Sequence = 1,     // next ingest sequence number
    SlotInfo,         // slot -> ((active index + 1) << 20) | buffered entries
    SlotEntry,        // (slot, i) -> cid + 1
    EntryMeta,        // cid -> (sequence << 20) | (position + 1)
    SlotSupply,       // slot -> total buffered production energy for the slot
    SlotConsumer,     // slot -> consumer cid + 1
    ActiveSlotCount,  //
    ActiveSlotAt,     // i -> slot + 1
};
inline StorageKey key(Field f, std::uint64_t a = 0, std::uint64_t b = 0) { return {ContractId::Market, f, a, b}; }
inline constexpr int kPositionBits = 20;
}  // namespace market_layout

}  // namespace dem
