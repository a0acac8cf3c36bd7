#include "dem/ledger.hpp"

#include <gtest/gtest.h>

using namespace dem;

namespace {

StorageKey slot_key(std::uint64_t a) { return {ContractId::Oracle, 99, a, 0}; }

}  // namespace

TEST(Ledger, GasIsTheSumOfMeteredAccesses) {
    Ledger ledger(2);
    ledger.execute(AccountId{0}, "seed", [](Exec& e) { e.store(slot_key(1), 7); });
    const TxReceipt r = ledger.execute(AccountId{0}, "mix", [](Exec& e) {
        (void)e.load(slot_key(1));
        e.store(slot_key(2), 1);  // 0 -> non-zero
        e.store(slot_key(1), 8);  // non-zero -> non-zero
        e.emit({"Ping", {}});
    });
    ASSERT_TRUE(r.ok());
    EXPECT_EQ(r.access.reads, 1);
    EXPECT_EQ(r.access.writes_new, 1);
    EXPECT_EQ(r.access.writes_update, 1);
    EXPECT_EQ(r.access.events, 1);
    EXPECT_EQ(r.gas_used, 21000 + 2100 + 20000 + 5000 + 1125);
}

TEST(Ledger, EmptyTransactionCostsTheBase) {
    Ledger ledger(1);
    EXPECT_EQ(ledger.execute(AccountId{0}, "noop", [](Exec&) {}).gas_used, 21000);
}

TEST(Ledger, CustomScheduleIsApplied) {
    GasSchedule g;
    g.tx_base = 100;
    g.storage_read = 10;
    g.storage_write_new = 50;
    g.storage_write_update = 20;
    g.event_emit = 5;
    Ledger ledger(1, g);
    const auto r = ledger.execute(AccountId{0}, "op", [](Exec& e) {
        e.store(slot_key(1), 3);
        (void)e.load(slot_key(1));
        e.emit({"E", {}});
    });
    EXPECT_EQ(r.gas_used, 100 + 50 + 10 + 5);
}

TEST(Ledger, ScheduleValidation) {
    GasSchedule g;
    g.storage_read = 0;
    EXPECT_THROW(g.validate(), std::invalid_argument);
    GasSchedule h;
    h.tx_base = 10;
    EXPECT_THROW(h.validate(), std::invalid_argument);
    EXPECT_NO_THROW(GasSchedule{}.validate());
}

TEST(Ledger, StoringZeroErasesTheKey) {
    Ledger ledger(1);
    const Storage before = ledger.storage();
    ledger.execute(AccountId{0}, "set", [](Exec& e) { e.store(slot_key(5), 42); });
    EXPECT_NE(ledger.storage(), before);
    ledger.execute(AccountId{0}, "clear", [](Exec& e) { e.store(slot_key(5), 0); });
    EXPECT_EQ(ledger.storage(), before);
    EXPECT_TRUE(ledger.storage().slots().empty());
}

TEST(Ledger, FailedCallIsRolledBack) {
    Ledger ledger(1);
    ledger.execute(AccountId{0}, "seed", [](Exec& e) { e.store(slot_key(1), 1); });
    const Storage before = ledger.storage();
    const auto r = ledger.execute(AccountId{0}, "boom", [](Exec& e) {
        e.store(slot_key(1), 2);
        e.store(slot_key(3), 9);
        e.emit({"Lost", {}});
        throw ContractError(ErrorCode::NotOwner, "nope");
    });
    EXPECT_FALSE(r.ok());
    EXPECT_EQ(r.error, ErrorCode::NotOwner);
    EXPECT_NE(r.revert_reason.find("NotOwner"), std::string::npos);
    EXPECT_TRUE(r.events.empty());
    EXPECT_EQ(ledger.storage(), before);
    EXPECT_EQ(ledger.log().size(), 2u);
}

TEST(Ledger, UnknownCallerIsRejectedWithoutReceipt) {
    Ledger ledger(2);
    try {
        ledger.execute(AccountId{5}, "x", [](Exec&) {});
        FAIL() << "expected UnknownAccount";
    } catch (const ContractError& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownAccount);
    }
    EXPECT_TRUE(ledger.log().empty());
}

TEST(Ledger, BatchIsAllOrNothing) {
    Ledger ledger(1);
    const Storage before = ledger.storage();
    std::vector<PendingCall> calls;
    calls.push_back({"a", [](Exec& e) { e.store(slot_key(1), 1); }});
    calls.push_back({"b", [](Exec& e) { e.store(slot_key(2), 2); }});
    calls.push_back({"c", [](Exec&) { throw ContractError(ErrorCode::NoData); }});
    const auto receipts = ledger.execute_batch(AccountId{0}, std::move(calls));
    ASSERT_EQ(receipts.size(), 3u);
    for (const auto& r : receipts) EXPECT_FALSE(r.ok());
    EXPECT_EQ(receipts[0].error, ErrorCode::BatchAborted);
    EXPECT_EQ(receipts[2].error, ErrorCode::NoData);
    EXPECT_EQ(ledger.storage(), before);
}

TEST(Ledger, BatchCommitsWhenEveryCallSucceeds) {
    Ledger ledger(1);
    std::vector<PendingCall> calls;
    calls.push_back({"a", [](Exec& e) { e.store(slot_key(1), 1); }});
    calls.push_back({"b", [](Exec& e) { e.store(slot_key(1), e.load(slot_key(1)) + 1); }});
    const auto receipts = ledger.execute_batch(AccountId{0}, std::move(calls));
    EXPECT_TRUE(receipts[0].ok() && receipts[1].ok());
    EXPECT_EQ(ledger.peek(slot_key(1)), 2);
    EXPECT_EQ(receipts[1].gas_used, 21000 + 2100 + 5000);
}

TEST(Ledger, TransfersConserveBalances) {
    Ledger ledger(3);
    ledger.mint_balance(AccountId{0}, Money::parse("10"));
    const Money total = ledger.total_balance();
    EXPECT_TRUE(ledger.transfer(AccountId{0}, AccountId{1}, Money::parse("3.5")).ok());
    EXPECT_EQ(ledger.balance(AccountId{0}), Money::parse("6.5"));
    EXPECT_EQ(ledger.balance(AccountId{1}), Money::parse("3.5"));
    const auto r = ledger.transfer(AccountId{1}, AccountId{2}, Money::parse("4"));
    EXPECT_FALSE(r.ok());
    EXPECT_EQ(r.error, ErrorCode::InsufficientBalance);
    EXPECT_EQ(ledger.total_balance(), total);
}

TEST(Ledger, ClockIsMonotone) {
    Ledger ledger(1);
    ledger.set_slot(4);
    EXPECT_EQ(ledger.current_slot(), 4);
    EXPECT_THROW(ledger.set_slot(3), std::invalid_argument);
    ledger.set_slot(4);
}

TEST(Ledger, SenderStackFollowsNestedCalls) {
    Ledger ledger(1);
    ledger.execute(AccountId{0}, "nest", [](Exec& e) {
        EXPECT_EQ(e.sender(), Address::account(AccountId{0}));
        e.call_as(Address::contract(ContractId::Pool), [&] {
            EXPECT_EQ(e.sender(), Address::contract(ContractId::Pool));
        });
        EXPECT_EQ(e.sender(), Address::account(AccountId{0}));
    });
}

TEST(Ledger, GasReportAggregatesSuccessfulCallsByOp) {
    Ledger ledger(1);
    ledger.execute(AccountId{0}, "b", [](Exec&) {});
    ledger.execute(AccountId{0}, "a", [](Exec& e) { e.store(slot_key(1), 1); });
    ledger.execute(AccountId{0}, "a", [](Exec& e) { e.store(slot_key(1), 2); });
    ledger.execute(AccountId{0}, "a", [](Exec&) { throw ContractError(ErrorCode::NoData); });
    const auto rows = gas_report(ledger.log());
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].op, "a");
    EXPECT_EQ(rows[0].calls, 2u);
    EXPECT_DOUBLE_EQ(rows[0].mean_gas, (41000.0 + 26000.0) / 2.0);
    EXPECT_EQ(rows[0].max_gas, 41000);
    EXPECT_EQ(gas_report(ledger.log(), {"b"}).size(), 1u);
}

TEST(Ledger, ReceiptJsonCarriesTheEssentials) {
    Ledger ledger(1);
    const auto r = ledger.execute(AccountId{0}, "op", [](Exec& e) { e.emit({"Hello", {{"x", 3}}}); });
    const std::string j = receipt_to_json(r);
    EXPECT_NE(j.find("\"op_name\":\"op\""), std::string::npos);
    EXPECT_NE(j.find("\"Hello\""), std::string::npos);
    EXPECT_NE(j.find("\"x\":3"), std::string::npos);
}
