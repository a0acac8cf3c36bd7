#pragma once

// Sequential, deterministic transaction ledger.
//
// All contract state lives in a single ordered key/value store of 64-bit
// words. Every access made while a transaction executes goes through an
// Exec handle which meters it against the GasSchedule and journals writes so
// that a failing call can be rolled back exactly.

#include "dem/fixed_point.hpp"

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dem {

struct AccountId {
    std::uint32_t id = 0;
    constexpr auto operator<=>(const AccountId&) const = default;
};

using Slot = std::int64_t;

enum class ContractId : std::uint16_t {
    Ledger = 0,
    Registry = 1,
    Pool = 2,
    Market = 3,
    Oracle = 4,
};

std::string_view contract_name(ContractId c);

/// msg.sender: either an externally owned account or a contract.
struct Address {
    bool is_contract = false;
    std::uint32_t value = 0;

    static constexpr Address account(AccountId a) { return Address{false, a.id}; }
    static constexpr Address contract(ContractId c) { return Address{true, static_cast<std::uint32_t>(c)}; }
    constexpr bool operator==(const Address&) const = default;
};

// ---------------------------------------------------------------------------
// Errors

enum class ErrorCode {
    UnknownAccount,
    UnknownCall,
    InsufficientBalance,
    // profile registry
    UnknownToken,
    NotOwner,
    CommitmentLimit,
    PastSlot,
    NotFinalized,
    NotDeposited,
    AlreadyDeposited,
    ActiveCommitments,
    InsufficientCollateral,
    CollateralLocked,
    UnknownCommitment,
    EnergyOutOfRange,
    // pool / market
    NotPending,
    NotProcessed,
    UnauthorizedCaller,
    OracleUnavailable,
    NoConsumer,
    DuplicateConsumer,
    SlotNotElapsed,
    // oracle
    DuplicateRound,
    NoData,
    BatchAborted,
};

std::string_view error_name(ErrorCode code);

class ContractError : public std::runtime_error {
public:
    ContractError(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(error_name(code)) + (detail.empty() ? "" : ": " + detail)), code_(code) {}
    explicit ContractError(ErrorCode code) : ContractError(code, "") {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// ---------------------------------------------------------------------------
// Gas

struct GasSchedule {
    std::int64_t tx_base = 21000;
    std::int64_t storage_write_new = 20000;
    std::int64_t storage_write_update = 5000;
    std::int64_t storage_read = 2100;
    std::int64_t event_emit = 1125;

    /// Throws std::invalid_argument when a field is non-positive or tx_base < storage_read.
    void validate() const;
};

struct AccessCounts {
    std::int64_t reads = 0;
    std::int64_t writes_new = 0;
    std::int64_t writes_update = 0;
    std::int64_t events = 0;

    std::int64_t gas(const GasSchedule& s) const {
        return s.tx_base + reads * s.storage_read + writes_new * s.storage_write_new +
               writes_update * s.storage_write_update + events * s.event_emit;
    }
};

// ---------------------------------------------------------------------------
// Storage

struct StorageKey {
    ContractId contract = ContractId::Ledger;
    std::uint16_t field = 0;
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    constexpr auto operator<=>(const StorageKey&) const = default;
};

using Word = std::int64_t;

/// Ordered word store. Absent keys read as zero; storing zero erases the key so
/// that two states compare equal iff their observable contents are equal.
class Storage {
public:
    Word get(const StorageKey& key) const;
    /// Returns the previous value.
    Word set(const StorageKey& key, Word value);

    const std::map<StorageKey, Word>& slots() const { return slots_; }
    bool operator==(const Storage&) const = default;

private:
    std::map<StorageKey, Word> slots_;
};

// ---------------------------------------------------------------------------
// Receipts

struct Event {
    std::string name;
    std::vector<std::pair<std::string, std::int64_t>> fields;

    std::int64_t field(std::string_view key) const;
};

enum class TxStatus { Ok, Reverted };

struct TxReceipt {
    AccountId caller;
    std::string op_name;
    std::int64_t gas_used = 0;
    AccessCounts access;
    TxStatus status = TxStatus::Ok;
    std::string revert_reason;
    std::optional<ErrorCode> error;
    std::vector<Event> events;
    std::optional<std::int64_t> output;

    bool ok() const { return status == TxStatus::Ok; }
};

class Ledger;

/// Execution handle for one transaction.
class Exec {
public:
    Word load(const StorageKey& key);
    void store(const StorageKey& key, Word value);
    void emit(Event event);

    Address sender() const { return senders_.back(); }
    AccountId origin() const { return origin_; }
    Slot now() const;

    /// Runs `body` with msg.sender set to `as` (contract-to-contract call).
    template <typename F>
    decltype(auto) call_as(Address as, F&& body) {
        senders_.push_back(as);
        struct Pop {
            std::vector<Address>& s;
            ~Pop() { s.pop_back(); }
        } pop{senders_};
        return std::forward<F>(body)();
    }

    void set_output(std::int64_t v) { output_ = v; }
    const AccessCounts& access() const { return access_; }

    Ledger& ledger() { return ledger_; }

private:
    friend class Ledger;
    Exec(Ledger& ledger, AccountId origin);

    Ledger& ledger_;
    AccountId origin_;
    std::vector<Address> senders_;
    AccessCounts access_;
    std::vector<Event> events_;
    std::optional<std::int64_t> output_;
};

using CallBody = std::function<void(Exec&)>;

struct PendingCall {
    std::string op_name;
    CallBody body;
};

class Ledger {
public:
    explicit Ledger(std::uint32_t account_count, GasSchedule schedule = {});

    std::uint32_t account_count() const { return account_count_; }
    bool is_account(AccountId a) const { return a.id < account_count_; }
    const GasSchedule& schedule() const { return schedule_; }

    /// Executes one call atomically and appends its receipt to the log.
    /// Contract failures are reported as a Reverted receipt; an unregistered
    /// caller throws ContractError(UnknownAccount) without touching the log.
    TxReceipt execute(AccountId caller, std::string op_name, const CallBody& body);

    /// Executes several calls as one atomic unit. Each call gets its own
    /// receipt; if any call fails every receipt in the batch is Reverted and
    /// state is restored to before the first call.
    std::vector<TxReceipt> execute_batch(AccountId caller, std::vector<PendingCall> calls);

    // balances ---------------------------------------------------------------
    Money balance(AccountId a) const;
    /// Genesis funding; not a transaction.
    void mint_balance(AccountId a, Money amount);
    /// Metered transfer inside a running transaction.
    void transfer(Exec& exec, AccountId from, AccountId to, Money amount);
    /// Moves funds from an account into contract escrow (metered).
    void debit(Exec& exec, AccountId from, Money amount);
    /// Releases escrowed funds to an account (metered).
    void credit(Exec& exec, AccountId to, Money amount);
    /// Transfer submitted as its own transaction.
    TxReceipt transfer(AccountId from, AccountId to, Money amount);
    Money total_balance() const;

    // clock ------------------------------------------------------------------
    Slot current_slot() const { return current_slot_; }
    /// Monotone; moving backwards throws std::invalid_argument.
    void set_slot(Slot s);

    // inspection -------------------------------------------------------------
    const Storage& storage() const { return storage_; }
    Word peek(const StorageKey& key) const { return storage_.get(key); }
    const std::vector<TxReceipt>& log() const { return log_; }

private:
    friend class Exec;

    TxReceipt run(AccountId caller, std::string op_name, const CallBody& body, std::vector<std::pair<StorageKey, Word>>& journal);
    void rollback(std::vector<std::pair<StorageKey, Word>>& journal);

    std::uint32_t account_count_;
    GasSchedule schedule_;
    Storage storage_;
    Slot current_slot_ = 0;
    std::vector<TxReceipt> log_;
    std::vector<std::pair<StorageKey, Word>>* journal_ = nullptr;
};

// ---------------------------------------------------------------------------
// Reports

struct GasRow {
    std::string op;
    double mean_gas = 0.0;
    std::int64_t max_gas = 0;
    std::size_t calls = 0;
};

/// Aggregates Ok receipts by op name (sorted). An empty filter means all ops.
std::vector<GasRow> gas_report(const std::vector<TxReceipt>& log, const std::vector<std::string>& filter = {});

/// One JSON object per receipt.
std::string receipt_to_json(const TxReceipt& r);
void write_receipts_jsonl(const std::vector<TxReceipt>& log, const std::string& path);

}  // namespace dem
