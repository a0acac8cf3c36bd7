#pragma once

// Shared scaffolding for the contract tests.

#include "dem/marketplace.hpp"

#include <gtest/gtest.h>

namespace dem::testing {

inline Energy kwh(const char* s) { return Energy::parse(s); }
inline Money money(const char* s) { return Money::parse(s); }

/// Marketplace with account 0 as keeper and oracle admin, account 1 as the
/// grid and the rest as households, all funded.
class Deployment {
public:
    explicit Deployment(std::uint32_t accounts = 5, MarketParams params = {}, Money funds = Money::parse("1000"))
        : mp(accounts, GasSchedule{}, params) {
        for (std::uint32_t a = 0; a < accounts; ++a) mp.ledger().mint_balance(AccountId{a}, funds);
    }

    TxReceipt ok(std::uint32_t who, const Call& c) {
        TxReceipt r = mp.apply(AccountId{who}, c);
        EXPECT_TRUE(r.ok()) << r.op_name << ": " << r.revert_reason;
        return r;
    }

    ErrorCode fails(std::uint32_t who, const Call& c) {
        TxReceipt r = mp.apply(AccountId{who}, c);
        EXPECT_FALSE(r.ok()) << r.op_name << " unexpectedly succeeded";
        return r.error.value_or(ErrorCode::UnknownCall);
    }

    TokenId mint(std::uint32_t who, const char* collateral = "10") {
        return TokenId{static_cast<std::uint64_t>(*ok(who, call::MintProfile{money(collateral)}).output)};
    }

    CommitmentId add(std::uint32_t who, TokenId t, CommitmentKind k, const char* e, Slot s) {
        return CommitmentId{static_cast<std::uint64_t>(*ok(who, call::AddCommitment{t, k, kwh(e), s}).output)};
    }

    void price(Slot s, const char* p) { ok(0, call::PushRound{FeedId::price(), s, OracleAnswer::parse(p)}); }
    void delivered(TokenId t, Slot s, const char* e) {
        ok(0, call::PushRound{FeedId::delivered(t), s, energy_to_answer(kwh(e))});
    }

    CommitmentStatus status(CommitmentId c) const { return mp.registry().commitment(c)->status; }
    Money total_value() const { return mp.ledger().total_balance() + mp.registry().total_collateral(); }

    Marketplace mp;
};

}  // namespace dem::testing
