#pragma once

// Mock aggregator feeds: per-slot price and delivered-energy readings.

#include "dem/contracts.hpp"

#include <optional>
#include <string>

namespace dem {

struct FeedId {
    std::uint64_t id = 0;
    constexpr auto operator<=>(const FeedId&) const = default;

    static constexpr FeedId price() { return FeedId{0}; }
    static constexpr FeedId delivered(TokenId token) { return FeedId{token.id + 1}; }
    std::string label() const;
};

struct FeedRound {
    FeedId feed;
    std::uint64_t round_id = 0;
    OracleAnswer answer;
    Slot slot = 0;
};

class OracleHub {
public:
    explicit OracleHub(const ContractSet& set) : set_(set) {}

    std::uint64_t push_round(Exec& exec, FeedId feed, Slot slot, OracleAnswer answer);

    template <WordReader R>
    FeedRound at_slot(R&& load, FeedId feed, Slot slot) const;
    template <WordReader R>
    FeedRound latest(R&& load, FeedId feed) const;

    FeedRound at_slot(FeedId feed, Slot slot) const;
    FeedRound latest(FeedId feed) const;

private:
    template <WordReader R>
    FeedRound read_round(R&& load, FeedId feed, std::uint64_t round) const;

    const ContractSet& set_;
};

namespace oracle_layout {
enum Field : std::uint16_t {
    RoundCount = 1,  // feed -> latest round id
    Answer,          // (feed, round) -> answer
    RoundSlot,       // (feed, round) -> slot + 1
    SlotRound,       // (feed, slot) -> round id
};
inline StorageKey key(Field f, std::uint64_t a = 0, std::uint64_t b = 0) { return {ContractId::Oracle, f, a, b}; }
}  // namespace oracle_layout

template <WordReader R>
FeedRound OracleHub::read_round(R&& load, FeedId feed, std::uint64_t round) const {
    using namespace oracle_layout;
    FeedRound r;
    r.feed = feed;
    r.round_id = round;
    r.answer = OracleAnswer::from_raw(load(key(Answer, feed.id, round)));
    r.slot = load(key(RoundSlot, feed.id, round)) - 1;
    return r;
}

template <WordReader R>
FeedRound OracleHub::at_slot(R&& load, FeedId feed, Slot slot) const {
    const Word round = load(oracle_layout::key(oracle_layout::SlotRound, feed.id, static_cast<std::uint64_t>(slot)));
    if (round == 0) throw ContractError(ErrorCode::NoData, feed.label() + " has no round for slot " + std::to_string(slot));
    return read_round(load, feed, static_cast<std::uint64_t>(round));
}

template <WordReader R>
FeedRound OracleHub::latest(R&& load, FeedId feed) const {
    const Word round = load(oracle_layout::key(oracle_layout::RoundCount, feed.id));
    if (round == 0) throw ContractError(ErrorCode::NoData, feed.label() + " has no rounds");
    return read_round(load, feed, static_cast<std::uint64_t>(round));
}

}  // namespace dem
