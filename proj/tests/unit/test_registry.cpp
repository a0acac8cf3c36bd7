#include "support.hpp"

using namespace dem;
using namespace dem::testing;

namespace {
constexpr auto P = CommitmentKind::Production;
constexpr auto C = CommitmentKind::Consumption;
}  // namespace

TEST(Registry, FirstMintIsTokenZero) {
    Deployment d;
    EXPECT_EQ(d.mint(2).id, 0u);
    EXPECT_EQ(d.mint(3).id, 1u);
    EXPECT_EQ(d.mp.registry().token_count(), 2u);
}

TEST(Registry, MintMovesCollateralIntoEscrow) {
    Deployment d;
    const TokenId t = d.mint(2, "12.5");
    const auto p = *d.mp.registry().profile(t);
    EXPECT_EQ(p.owner.id, 2u);
    EXPECT_EQ(p.collateral, money("12.5"));
    EXPECT_FALSE(p.deposited);
    EXPECT_TRUE(p.commitments.empty());
    EXPECT_EQ(d.mp.ledger().balance(AccountId{2}), money("987.5"));
}

TEST(Registry, ZeroCollateralMintIsValid) {
    Deployment d;
    const TokenId t = d.mint(2, "0");
    EXPECT_EQ(d.mp.registry().profile(t)->collateral, Money{});
}

TEST(Registry, MintBeyondBalanceFails) {
    Deployment d(3, {}, money("5"));
    EXPECT_EQ(d.fails(2, call::MintProfile{money("5.000001")}), ErrorCode::InsufficientBalance);
    EXPECT_EQ(d.mp.registry().token_count(), 0u);
}

TEST(Registry, FiftyHouseholdsAndAGridMintDistinctTokens) {
    Deployment d(52);
    std::vector<std::uint64_t> ids;
    for (std::uint32_t a = 1; a <= 51; ++a) ids.push_back(d.mint(a, "3").id);
    for (std::uint64_t i = 0; i < ids.size(); ++i) EXPECT_EQ(ids[i], i);
    for (std::uint32_t a = 1; a <= 51; ++a) EXPECT_EQ(d.mp.ledger().balance(AccountId{a}), money("997"));
    EXPECT_EQ(d.mp.ledger().balance(AccountId{0}), money("1000"));
}

TEST(Registry, AddCommitmentIsPendingAndVisible) {
    Deployment d;
    d.mp.ledger().set_slot(4);
    const TokenId t = d.mint(2);
    const CommitmentId c = d.add(2, t, P, "2.500", 5);
    const auto p = *d.mp.registry().profile(t);
    ASSERT_EQ(p.commitments.size(), 1u);
    EXPECT_EQ(p.commitments[0].commitment_id, c);
    EXPECT_EQ(p.commitments[0].energy, kwh("2.5"));
    EXPECT_EQ(p.commitments[0].slot, 5);
    EXPECT_EQ(p.commitments[0].status, CommitmentStatus::Pending);
    EXPECT_EQ(p.required_collateral, money("0.5"));
}

TEST(Registry, ThreeActiveCommitmentsIsTheCap) {
    Deployment d;
    const TokenId t = d.mint(2);
    for (Slot s = 1; s <= 3; ++s) d.add(2, t, P, "1", s);
    EXPECT_EQ(d.fails(2, call::AddCommitment{t, P, kwh("1"), 4}), ErrorCode::CommitmentLimit);
}

TEST(Registry, AddGuards) {
    Deployment d;
    d.mp.ledger().set_slot(3);
    const TokenId t = d.mint(2, "1");
    EXPECT_EQ(d.fails(2, call::AddCommitment{t, P, kwh("1"), 3}), ErrorCode::PastSlot);
    EXPECT_EQ(d.fails(3, call::AddCommitment{t, P, kwh("1"), 4}), ErrorCode::NotOwner);
    EXPECT_EQ(d.fails(2, call::AddCommitment{TokenId{9}, P, kwh("1"), 4}), ErrorCode::UnknownToken);
    // 1.000 collateral backs at most 5 kWh at 0.2/kWh
    EXPECT_EQ(d.fails(2, call::AddCommitment{t, P, kwh("5.001"), 4}), ErrorCode::InsufficientCollateral);
    d.add(2, t, P, "5", 4);
    EXPECT_EQ(d.fails(2, call::AddCommitment{t, P, kwh("0.001"), 5}), ErrorCode::InsufficientCollateral);
}

TEST(Registry, ZeroEnergyCommitmentSettlesForNothing) {
    Deployment d;
    const TokenId seller = d.mint(2);
    const TokenId grid = d.mint(1);
    d.ok(2, call::DepositProfile{seller});
    d.ok(1, call::DepositProfile{grid});
    const CommitmentId c = d.add(2, seller, P, "0", 1);
    d.add(1, grid, C, "1", 1);
    d.mp.ledger().set_slot(1);
    d.price(1, "0.2");
    d.delivered(seller, 1, "0");
    const auto res = d.mp.settle_slot(AccountId{0}, 1);
    ASSERT_TRUE(res.ok) << res.reason;
    ASSERT_EQ(res.records.size(), 1u);
    EXPECT_EQ(res.records[0].payment, Money{});
    EXPECT_EQ(res.records[0].forfeit, Money{});
    EXPECT_EQ(d.status(c), CommitmentStatus::Settled);
}

TEST(Registry, ReplaceKeepsTheActiveCount) {
    Deployment d;
    const TokenId seller = d.mint(2);
    const TokenId grid = d.mint(1);
    d.ok(2, call::DepositProfile{seller});
    d.ok(1, call::DepositProfile{grid});
    const CommitmentId old = d.add(2, seller, P, "1", 1);
    d.add(2, seller, P, "1", 2);
    d.add(1, grid, C, "2", 1);
    d.mp.ledger().set_slot(1);
    d.price(1, "0.2");
    d.delivered(seller, 1, "1");
    ASSERT_TRUE(d.mp.settle_slot(AccountId{0}, 1).ok);
    const std::size_t before = d.mp.registry().profile(seller)->active_count();
    const auto r = d.ok(2, call::ReplaceCommitment{seller, old, P, kwh("1"), 3});
    const CommitmentId fresh{static_cast<std::uint64_t>(*r.output)};
    EXPECT_GT(fresh.id, old.id);
    const auto p = *d.mp.registry().profile(seller);
    EXPECT_EQ(p.active_count(), before + 1);
    EXPECT_EQ(p.commitments.size(), 2u);
    EXPECT_EQ(p.history.size(), 3u);
    EXPECT_TRUE(d.mp.registry().commitment(old)->replaced);
    // auto-ingested because the profile is deposited
    EXPECT_EQ(d.status(fresh), CommitmentStatus::Processed);
}

TEST(Registry, ReplaceGuards) {
    Deployment d;
    const TokenId t = d.mint(2);
    const CommitmentId c = d.add(2, t, P, "1", 1);
    EXPECT_EQ(d.fails(2, call::ReplaceCommitment{t, c, P, kwh("1"), 2}), ErrorCode::NotDeposited);
    d.ok(2, call::DepositProfile{t});
    EXPECT_EQ(d.fails(2, call::ReplaceCommitment{t, c, P, kwh("1"), 2}), ErrorCode::NotFinalized);
    const TokenId other = d.mint(3);
    d.ok(3, call::DepositProfile{other});
    EXPECT_EQ(d.fails(3, call::ReplaceCommitment{other, c, P, kwh("1"), 2}), ErrorCode::UnknownCommitment);
}

TEST(Registry, RollingReplacementKeepsThreeActiveFor24Slots) {
    Deployment d;
    const TokenId seller = d.mint(2, "100");
    const TokenId grid = d.mint(1, "100");
    std::vector<CommitmentId> mine(28), theirs(28);
    for (Slot s = 1; s <= 3; ++s) {
        mine[static_cast<std::size_t>(s)] = d.add(2, seller, P, "1", s);
        theirs[static_cast<std::size_t>(s)] = d.add(1, grid, C, "1", s);
    }
    d.ok(2, call::DepositProfile{seller});
    d.ok(1, call::DepositProfile{grid});
    for (Slot t = 1; t <= 24; ++t) {
        const auto i = static_cast<std::size_t>(t);
        d.mp.ledger().set_slot(t);
        d.price(t, "0.2");
        d.delivered(seller, t, "1");
        const auto res = d.mp.settle_slot(AccountId{0}, t);
        ASSERT_TRUE(res.ok) << res.reason;
        EXPECT_EQ(d.status(mine[i]), CommitmentStatus::Settled);
        mine[i + 3] = CommitmentId{static_cast<std::uint64_t>(
            *d.ok(2, call::ReplaceCommitment{seller, mine[i], P, kwh("1"), t + 3}).output)};
        theirs[i + 3] = CommitmentId{static_cast<std::uint64_t>(
            *d.ok(1, call::ReplaceCommitment{grid, theirs[i], C, kwh("1"), t + 3}).output)};
        const auto p = *d.mp.registry().profile(seller);
        EXPECT_EQ(p.active_count(), 3u);
        EXPECT_TRUE(p.deposited);
        EXPECT_EQ(p.commitments.size(), 3u);
    }
    EXPECT_EQ(d.mp.ledger().balance(AccountId{2}), money("900") + money("4.8"));
}

TEST(Registry, DepositWithdrawRoundTrip) {
    Deployment d;
    const TokenId t = d.mint(2);
    const Storage before = d.mp.ledger().storage();
    d.ok(2, call::DepositProfile{t});
    EXPECT_TRUE(d.mp.registry().profile(t)->deposited);
    EXPECT_EQ(d.fails(2, call::DepositProfile{t}), ErrorCode::AlreadyDeposited);
    d.ok(2, call::WithdrawProfile{t});
    EXPECT_EQ(d.mp.ledger().storage(), before);
    EXPECT_EQ(d.fails(2, call::WithdrawProfile{t}), ErrorCode::NotDeposited);
}

TEST(Registry, WithdrawWhileBufferedFails) {
    Deployment d;
    const TokenId t = d.mint(2);
    d.ok(2, call::DepositProfile{t});
    const CommitmentId c = d.add(2, t, P, "1", 2);
    EXPECT_EQ(d.status(c), CommitmentStatus::Processed);
    EXPECT_EQ(d.fails(2, call::WithdrawProfile{t}), ErrorCode::ActiveCommitments);
}

TEST(Registry, DepositIngestsPendingCommitments) {
    Deployment d;
    const TokenId t = d.mint(2);
    d.add(2, t, P, "1.250", 2);
    d.add(2, t, P, "0.750", 3);
    EXPECT_EQ(d.mp.pool().totals().total_production, Energy{});
    d.ok(2, call::DepositProfile{t});
    EXPECT_EQ(d.mp.pool().totals().total_production, kwh("2"));
    EXPECT_EQ(d.mp.market().buffer().size(), 2u);
}

TEST(Registry, CollateralRoundTrip) {
    Deployment d;
    const TokenId t = d.mint(2, "0");
    const Money value = d.total_value();
    d.ok(2, call::DepositCollateral{t, money("10")});
    EXPECT_EQ(d.mp.registry().profile(t)->collateral, money("10"));
    d.ok(2, call::WithdrawCollateral{t, money("10")});
    EXPECT_EQ(d.mp.ledger().balance(AccountId{2}), money("1000"));
    EXPECT_EQ(d.total_value(), value);
    EXPECT_EQ(d.fails(2, call::WithdrawCollateral{t, money("0.000001")}), ErrorCode::InsufficientCollateral);
    EXPECT_EQ(d.fails(3, call::DepositCollateral{t, money("1")}), ErrorCode::NotOwner);
}

TEST(Registry, CollateralLockedByPendingProduction) {
    Deployment d;
    const TokenId t = d.mint(2, "10");
    d.add(2, t, P, "1", 2);
    EXPECT_EQ(d.fails(2, call::WithdrawCollateral{t, money("1")}), ErrorCode::CollateralLocked);
}

TEST(Registry, ConservationUnderCollateralMoves) {
    Deployment d;
    const TokenId t = d.mint(2, "3");
    const Money value = d.total_value();
    const char* steps[] = {"1.5", "0.25", "7", "0.000001"};
    for (const char* s : steps) {
        d.ok(2, call::DepositCollateral{t, money(s)});
        EXPECT_EQ(d.total_value(), value);
    }
    for (const char* s : steps) {
        d.ok(2, call::WithdrawCollateral{t, money(s)});
        EXPECT_EQ(d.total_value(), value);
    }
    EXPECT_EQ(d.mp.registry().profile(t)->collateral, money("3"));
}

TEST(Registry, ProfileJsonListsCommitments) {
    Deployment d;
    const TokenId t = d.mint(2);
    d.add(2, t, P, "1.5", 3);
    const auto j = profile_to_json(*d.mp.registry().profile(t));
    EXPECT_EQ(j["token"], 0);
    EXPECT_EQ(j["commitments"][0]["energy_kwh"], "1.500");
    EXPECT_EQ(j["commitments"][0]["status"], "Pending");
}
