#include "dem/oracle.hpp"

namespace dem {

using namespace oracle_layout;

std::string FeedId::label() const {
    if (id == 0) return "price";
    return "delivered:" + std::to_string(id - 1);
}

std::uint64_t OracleHub::push_round(Exec& exec, FeedId feed, Slot slot, OracleAnswer answer) {
    if (exec.sender() != Address::account(set_.params.oracle_admin))
        throw ContractError(ErrorCode::UnauthorizedCaller, "only the oracle admin pushes rounds");
    if (slot < 0) throw ContractError(ErrorCode::NoData, "negative slot");
    const auto slot_key = key(SlotRound, feed.id, static_cast<std::uint64_t>(slot));
    if (exec.load(slot_key) != 0)
        throw ContractError(ErrorCode::DuplicateRound, feed.label() + " already has a round for slot " + std::to_string(slot));
    const auto round = static_cast<std::uint64_t>(exec.load(key(RoundCount, feed.id))) + 1;
    exec.store(key(RoundCount, feed.id), static_cast<Word>(round));
    exec.store(key(Answer, feed.id, round), answer.raw);
    exec.store(key(RoundSlot, feed.id, round), slot + 1);
    exec.store(slot_key, static_cast<Word>(round));
    exec.emit({"RoundPushed",
               {{"feed", static_cast<std::int64_t>(feed.id)},
                {"round", static_cast<std::int64_t>(round)},
                {"slot", slot},
                {"answer", answer.raw}}});
    exec.set_output(static_cast<std::int64_t>(round));
    return round;
}

FeedRound OracleHub::at_slot(FeedId feed, Slot slot) const { return at_slot(unmetered(*set_.ledger), feed, slot); }

FeedRound OracleHub::latest(FeedId feed) const { return latest(unmetered(*set_.ledger), feed); }

}  // namespace dem
