#include "dem/ledger.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace dem {

namespace {
constexpr std::uint16_t kBalanceField = 0;

StorageKey balance_key(AccountId a) { return {ContractId::Ledger, kBalanceField, a.id, 0}; }
}  // namespace

std::string_view contract_name(ContractId c) {
    switch (c) {
        case ContractId::Ledger: return "ledger";
        case ContractId::Registry: return "profile_registry";
        case ContractId::Pool: return "pool";
        case ContractId::Market: return "market";
        case ContractId::Oracle: return "oracle";
    }
    return "?";
}

std::string_view error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownAccount: return "UnknownAccount";
        case ErrorCode::UnknownCall: return "UnknownCall";
        case ErrorCode::InsufficientBalance: return "InsufficientBalance";
        case ErrorCode::UnknownToken: return "UnknownToken";
        case ErrorCode::NotOwner: return "NotOwner";
        case ErrorCode::CommitmentLimit: return "CommitmentLimit";
        case ErrorCode::PastSlot: return "PastSlot";
        case ErrorCode::NotFinalized: return "NotFinalized";
        case ErrorCode::NotDeposited: return "NotDeposited";
        case ErrorCode::AlreadyDeposited: return "AlreadyDeposited";
        case ErrorCode::ActiveCommitments: return "ActiveCommitments";
        case ErrorCode::InsufficientCollateral: return "InsufficientCollateral";
        case ErrorCode::CollateralLocked: return "CollateralLocked";
        case ErrorCode::UnknownCommitment: return "UnknownCommitment";
        case ErrorCode::EnergyOutOfRange: return "EnergyOutOfRange";
        case ErrorCode::NotPending: return "NotPending";
        case ErrorCode::NotProcessed: return "NotProcessed";
        case ErrorCode::UnauthorizedCaller: return "UnauthorizedCaller";
        case ErrorCode::OracleUnavailable: return "OracleUnavailable";
        case ErrorCode::NoConsumer: return "NoConsumer";
        case ErrorCode::DuplicateConsumer: return "DuplicateConsumer";
        case ErrorCode::SlotNotElapsed: return "SlotNotElapsed";
        case ErrorCode::DuplicateRound: return "DuplicateRound";
        case ErrorCode::NoData: return "NoData";
        case ErrorCode::BatchAborted: return "BatchAborted";
    }
    return "?";
}

void GasSchedule::validate() const {
    if (tx_base <= 0 || storage_write_new <= 0 || storage_write_update <= 0 || storage_read <= 0 || event_emit <= 0)
        throw std::invalid_argument("gas schedule fields must be positive");
    if (tx_base < storage_read) throw std::invalid_argument("gas schedule requires tx_base >= storage_read");
}

// ---------------------------------------------------------------------------

Word Storage::get(const StorageKey& key) const {
    auto it = slots_.find(key);
    return it == slots_.end() ? 0 : it->second;
}

Word Storage::set(const StorageKey& key, Word value) {
    auto it = slots_.find(key);
    const Word prev = it == slots_.end() ? 0 : it->second;
    if (value == 0) {
        if (it != slots_.end()) slots_.erase(it);
    } else if (it == slots_.end()) {
        slots_.emplace(key, value);
    } else {
        it->second = value;
    }
    return prev;
}

std::int64_t Event::field(std::string_view key) const {
    for (const auto& [k, v] : fields)
        if (k == key) return v;
    throw std::out_of_range("event " + name + " has no field " + std::string(key));
}

// ---------------------------------------------------------------------------

Exec::Exec(Ledger& ledger, AccountId origin) : ledger_(ledger), origin_(origin), senders_{Address::account(origin)} {}

Word Exec::load(const StorageKey& key) {
    ++access_.reads;
    return ledger_.storage_.get(key);
}

void Exec::store(const StorageKey& key, Word value) {
    const Word prev = ledger_.storage_.set(key, value);
    if (prev == 0 && value != 0)
        ++access_.writes_new;
    else
        ++access_.writes_update;
    ledger_.journal_->emplace_back(key, prev);
}

void Exec::emit(Event event) {
    ++access_.events;
    events_.push_back(std::move(event));
}

Slot Exec::now() const { return ledger_.current_slot_; }

// ---------------------------------------------------------------------------

Ledger::Ledger(std::uint32_t account_count, GasSchedule schedule) : account_count_(account_count), schedule_(schedule) {
    schedule_.validate();
}

void Ledger::rollback(std::vector<std::pair<StorageKey, Word>>& journal) {
    for (auto it = journal.rbegin(); it != journal.rend(); ++it) storage_.set(it->first, it->second);
    journal.clear();
}

TxReceipt Ledger::run(AccountId caller, std::string op_name, const CallBody& body,
                      std::vector<std::pair<StorageKey, Word>>& journal) {
    const std::size_t mark = journal.size();
    journal_ = &journal;
    Exec exec(*this, caller);
    TxReceipt receipt;
    receipt.caller = caller;
    receipt.op_name = std::move(op_name);
    try {
        body(exec);
    } catch (const ContractError& e) {
        receipt.status = TxStatus::Reverted;
        receipt.revert_reason = e.what();
        receipt.error = e.code();
    } catch (...) {
        // undo this call before propagating a non-contract failure
        std::vector<std::pair<StorageKey, Word>> tail(journal.begin() + static_cast<std::ptrdiff_t>(mark), journal.end());
        journal.resize(mark);
        rollback(tail);
        journal_ = nullptr;
        throw;
    }
    journal_ = nullptr;
    receipt.access = exec.access_;
    receipt.gas_used = exec.access_.gas(schedule_);
    if (receipt.ok()) {
        receipt.events = std::move(exec.events_);
        receipt.output = exec.output_;
    } else {
        std::vector<std::pair<StorageKey, Word>> tail(journal.begin() + static_cast<std::ptrdiff_t>(mark), journal.end());
        journal.resize(mark);
        rollback(tail);
    }
    return receipt;
}

TxReceipt Ledger::execute(AccountId caller, std::string op_name, const CallBody& body) {
    if (!is_account(caller)) throw ContractError(ErrorCode::UnknownAccount, "account " + std::to_string(caller.id));
    std::vector<std::pair<StorageKey, Word>> journal;
    log_.push_back(run(caller, std::move(op_name), body, journal));
    return log_.back();
}

std::vector<TxReceipt> Ledger::execute_batch(AccountId caller, std::vector<PendingCall> calls) {
    if (!is_account(caller)) throw ContractError(ErrorCode::UnknownAccount, "account " + std::to_string(caller.id));
    std::vector<std::pair<StorageKey, Word>> journal;
    std::vector<TxReceipt> receipts;
    receipts.reserve(calls.size());
    bool failed = false;
    std::string reason;
    for (auto& call : calls) {
        receipts.push_back(run(caller, std::move(call.op_name), call.body, journal));
        if (!receipts.back().ok()) {
            failed = true;
            reason = receipts.back().revert_reason;
            break;
        }
    }
    if (failed) {
        rollback(journal);
        for (auto& r : receipts) {
            if (r.ok()) {
                r.status = TxStatus::Reverted;
                r.error = ErrorCode::BatchAborted;
                r.revert_reason = std::string(error_name(ErrorCode::BatchAborted)) + ": " + reason;
                r.events.clear();
                r.output.reset();
            }
        }
    }
    log_.insert(log_.end(), receipts.begin(), receipts.end());
    return receipts;
}

Money Ledger::balance(AccountId a) const { return Money::from_raw(storage_.get(balance_key(a))); }

void Ledger::mint_balance(AccountId a, Money amount) {
    if (!is_account(a)) throw ContractError(ErrorCode::UnknownAccount, "account " + std::to_string(a.id));
    if (amount.raw < 0) throw std::invalid_argument("negative genesis balance");
    storage_.set(balance_key(a), storage_.get(balance_key(a)) + amount.raw);
}

void Ledger::transfer(Exec& exec, AccountId from, AccountId to, Money amount) {
    if (amount.raw < 0) throw std::invalid_argument("negative transfer");
    if (!is_account(from) || !is_account(to)) throw ContractError(ErrorCode::UnknownAccount);
    const Word have = exec.load(balance_key(from));
    if (have < amount.raw)
        throw ContractError(ErrorCode::InsufficientBalance,
                            "account " + std::to_string(from.id) + " has " + Money::from_raw(have).str() + ", needs " + amount.str());
    if (from == to) return;  // zero amounts still write, as an ERC-20 transfer would
    exec.store(balance_key(from), have - amount.raw);
    const Word dest = exec.load(balance_key(to));
    exec.store(balance_key(to), dest + amount.raw);
    exec.emit({"Transfer", {{"from", from.id}, {"to", to.id}, {"amount", amount.raw}}});
}

void Ledger::debit(Exec& exec, AccountId from, Money amount) {
    if (amount.raw < 0) throw std::invalid_argument("negative debit");
    if (!is_account(from)) throw ContractError(ErrorCode::UnknownAccount);
    const Word have = exec.load(balance_key(from));
    if (have < amount.raw)
        throw ContractError(ErrorCode::InsufficientBalance,
                            "account " + std::to_string(from.id) + " has " + Money::from_raw(have).str() + ", needs " + amount.str());
    exec.store(balance_key(from), have - amount.raw);
}

void Ledger::credit(Exec& exec, AccountId to, Money amount) {
    if (amount.raw < 0) throw std::invalid_argument("negative credit");
    if (!is_account(to)) throw ContractError(ErrorCode::UnknownAccount);
    const Word have = exec.load(balance_key(to));
    exec.store(balance_key(to), have + amount.raw);
}

TxReceipt Ledger::transfer(AccountId from, AccountId to, Money amount) {
    return execute(from, "transfer", [&](Exec& exec) { transfer(exec, from, to, amount); });
}

Money Ledger::total_balance() const {
    std::int64_t total = 0;
    for (const auto& [key, value] : storage_.slots())
        if (key.contract == ContractId::Ledger && key.field == kBalanceField) total += value;
    return Money::from_raw(total);
}

void Ledger::set_slot(Slot s) {
    if (s < current_slot_) throw std::invalid_argument("ledger clock cannot move backwards");
    current_slot_ = s;
}

// ---------------------------------------------------------------------------

std::vector<GasRow> gas_report(const std::vector<TxReceipt>& log, const std::vector<std::string>& filter) {
    std::map<std::string, GasRow> rows;
    std::map<std::string, long double> sums;
    for (const auto& r : log) {
        if (!r.ok()) continue;
        if (!filter.empty() && std::find(filter.begin(), filter.end(), r.op_name) == filter.end()) continue;
        auto& row = rows[r.op_name];
        row.op = r.op_name;
        row.max_gas = std::max(row.max_gas, r.gas_used);
        ++row.calls;
        sums[r.op_name] += static_cast<long double>(r.gas_used);
    }
    std::vector<GasRow> out;
    out.reserve(rows.size());
    for (auto& [op, row] : rows) {
        row.mean_gas = static_cast<double>(sums[op] / static_cast<long double>(row.calls));
        out.push_back(row);
    }
    return out;
}

std::string receipt_to_json(const TxReceipt& r) {
    nlohmann::ordered_json j;
    j["caller"] = r.caller.id;
    j["op_name"] = r.op_name;
    j["gas_used"] = r.gas_used;
    j["access"] = {{"reads", r.access.reads},
                   {"writes_new", r.access.writes_new},
                   {"writes_update", r.access.writes_update},
                   {"events", r.access.events}};
    j["status"] = r.ok() ? "Ok" : "Reverted";
    if (!r.ok()) j["reason"] = r.revert_reason;
    auto events = nlohmann::ordered_json::array();
    for (const auto& e : r.events) {
        nlohmann::ordered_json ev;
        ev["name"] = e.name;
        for (const auto& [k, v] : e.fields) ev[k] = v;
        events.push_back(std::move(ev));
    }
    j["events"] = std::move(events);
    return j.dump();
}

void write_receipts_jsonl(const std::vector<TxReceipt>& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    for (const auto& r : log) out << receipt_to_json(r) << '\n';
}

}  // namespace dem
