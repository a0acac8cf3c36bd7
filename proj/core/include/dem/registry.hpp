#pragma once

// EnergyProfile contract: one NFT per participant holding collateral and its
// energy commitments, plus custody with the pool.

#include "dem/contracts.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <vector>

namespace dem {

struct Commitment {
    CommitmentId commitment_id;
    TokenId token;
    CommitmentKind kind = CommitmentKind::Production;
    Energy energy;
    Slot slot = 0;
    CommitmentStatus status = CommitmentStatus::Pending;
    /// Removed from the profile's list by a replacement; still in history.
    bool replaced = false;
};

struct EnergyProfile {
    TokenId token;
    AccountId owner;
    Money collateral;
    /// Collateral currently required by active commitments.
    Money required_collateral;
    bool deposited = false;
    /// Commitments not yet replaced, in creation order.
    std::vector<Commitment> commitments;
    /// Every commitment ever attached to the token, in creation order.
    std::vector<Commitment> history;

    std::size_t active_count() const;
};

class ProfileRegistry {
public:
    explicit ProfileRegistry(const ContractSet& set) : set_(set) {}

    // transactions -------------------------------------------------------------
    TokenId mint_profile(Exec& exec, Money initial_collateral);
    CommitmentId add_commitment(Exec& exec, TokenId token, CommitmentKind kind, Energy energy, Slot slot);
    CommitmentId replace_settled_commitment(Exec& exec, TokenId token, CommitmentId old_id, CommitmentKind kind,
                                            Energy energy, Slot slot);
    void deposit_profile(Exec& exec, TokenId token);
    void withdraw_profile(Exec& exec, TokenId token);
    void deposit_collateral(Exec& exec, TokenId token, Money amount);
    void withdraw_collateral(Exec& exec, TokenId token, Money amount);

    // contract-internal (pool / market only) -----------------------------------
    void mark_processed(Exec& exec, CommitmentId cid);
    void finalize(Exec& exec, CommitmentId cid, CommitmentStatus terminal);
    /// Moves up to `amount` of the token's collateral to `to`; returns the amount moved.
    Money seize_collateral(Exec& exec, TokenId token, Money amount, AccountId to);

    template <WordReader R>
    Commitment read_commitment(R&& load, CommitmentId cid) const;
    template <WordReader R>
    AccountId owner_of(R&& load, TokenId token) const;
    template <WordReader R>
    bool is_deposited(R&& load, TokenId token) const;

    // views --------------------------------------------------------------------
    std::uint64_t token_count() const;
    std::uint64_t commitment_count() const;
    std::optional<EnergyProfile> profile(TokenId token) const;
    std::optional<Commitment> commitment(CommitmentId cid) const;
    Money total_collateral() const;

    /// Collateral a commitment of `energy` must be backed by.
    Money required_for(Energy energy) const;

private:
    AccountId require_owner(Exec& exec, TokenId token);
    CommitmentId append_commitment(Exec& exec, TokenId token, CommitmentKind kind, Energy energy, Slot slot);
    void set_status(Exec& exec, CommitmentId cid, const Commitment& c, CommitmentStatus status);

    const ContractSet& set_;
};

nlohmann::ordered_json profile_to_json(const EnergyProfile& p);

// ---------------------------------------------------------------------------
// Storage layout. Exposed so the market and tests can decode commitments.

namespace registry_layout {
enum Field : std::uint16_t {
    NextToken = 1,
    NextCommitment,
    Owner,           // token -> owner + 1
    Collateral,      // token -> micro units
    Required,        // token -> collateral required by active commitments
    Deposited,       // token -> 0/1
    ActiveCount,     // token -> number of Pending/Processed commitments
    ActiveSet,       // (token, k<3) -> cid + 1
    ListLen,         // token -> history length
    List,            // (token, i) -> cid + 1
    CommitWord,      // cid -> packed status|kind|slot|energy
    CommitToken,     // cid -> token + 1
    Replaced,        // cid -> 1 once swapped out of the profile list
};

inline StorageKey key(Field f, std::uint64_t a = 0, std::uint64_t b = 0) { return {ContractId::Registry, f, a, b}; }

inline constexpr int kStatusBits = 3;
inline constexpr int kKindBits = 1;
inline constexpr int kSlotBits = 24;
inline constexpr int kEnergyBits = 35;
inline constexpr std::int64_t kMaxEnergyRaw = (std::int64_t{1} << kEnergyBits) - 1;
inline constexpr Slot kMaxSlot = (Slot{1} << kSlotBits) - 1;

inline Word pack(CommitmentStatus s, CommitmentKind k, Slot slot, Energy e) {
    std::uint64_t w = static_cast<std::uint64_t>(s);
    w |= static_cast<std::uint64_t>(k) << kStatusBits;
    w |= static_cast<std::uint64_t>(slot) << (kStatusBits + kKindBits);
    w |= static_cast<std::uint64_t>(e.raw) << (kStatusBits + kKindBits + kSlotBits);
    return static_cast<Word>(w);
}

struct Unpacked {
    CommitmentStatus status;
    CommitmentKind kind;
    Slot slot;
    Energy energy;
};

inline Unpacked unpack(Word word) {
    const auto w = static_cast<std::uint64_t>(word);
    Unpacked u{};
    u.status = static_cast<CommitmentStatus>(w & ((1u << kStatusBits) - 1));
    u.kind = static_cast<CommitmentKind>((w >> kStatusBits) & 1u);
    u.slot = static_cast<Slot>((w >> (kStatusBits + kKindBits)) & ((std::uint64_t{1} << kSlotBits) - 1));
    u.energy = Energy::from_raw(static_cast<std::int64_t>(w >> (kStatusBits + kKindBits + kSlotBits)));
    return u;
}
}  // namespace registry_layout

template <WordReader R>
Commitment ProfileRegistry::read_commitment(R&& load, CommitmentId cid) const {
    using namespace registry_layout;
    const Word word = load(key(CommitWord, cid.id));
    if (word == 0) throw ContractError(ErrorCode::UnknownCommitment, "commitment " + std::to_string(cid.id));
    const Word token = load(key(CommitToken, cid.id));
    const auto u = unpack(word);
    Commitment c;
    c.commitment_id = cid;
    c.token = TokenId{static_cast<std::uint64_t>(token - 1)};
    c.kind = u.kind;
    c.energy = u.energy;
    c.slot = u.slot;
    c.status = u.status;
    return c;
}

template <WordReader R>
AccountId ProfileRegistry::owner_of(R&& load, TokenId token) const {
    const Word owner = load(registry_layout::key(registry_layout::Owner, token.id));
    if (owner == 0) throw ContractError(ErrorCode::UnknownToken, "token " + std::to_string(token.id));
    return AccountId{static_cast<std::uint32_t>(owner - 1)};
}

template <WordReader R>
bool ProfileRegistry::is_deposited(R&& load, TokenId token) const {
    return load(registry_layout::key(registry_layout::Deposited, token.id)) != 0;
}

}  // namespace dem
