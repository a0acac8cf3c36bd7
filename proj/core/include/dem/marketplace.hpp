#pragma once

// One deployment of the marketplace: ledger plus the four contracts, driven
// through call descriptors.

#include "dem/contracts.hpp"
#include "dem/ledger.hpp"
#include "dem/market.hpp"
#include "dem/oracle.hpp"
#include "dem/pool.hpp"
#include "dem/registry.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <variant>
#include <vector>

namespace dem {

namespace call {
struct MintProfile { Money collateral; };
struct AddCommitment { TokenId token; CommitmentKind kind; Energy energy; Slot slot; };
struct ReplaceCommitment { TokenId token; CommitmentId old_id; CommitmentKind kind; Energy energy; Slot slot; };
struct DepositProfile { TokenId token; };
struct WithdrawProfile { TokenId token; };
struct DepositCollateral { TokenId token; Money amount; };
struct WithdrawCollateral { TokenId token; Money amount; };
struct Ingest { TokenId token; CommitmentId commitment; };
struct MarketTrigger { TokenId token; CommitmentId commitment; };
struct PurgeExpired { Slot current_slot; };
struct SettleCommitment { Slot slot; CommitmentId commitment; };
struct CloseSlot { Slot slot; };
struct PushRound { FeedId feed; Slot slot; OracleAnswer answer; };
struct Transfer { AccountId to; Money amount; };
}  // namespace call

using Call = std::variant<call::MintProfile, call::AddCommitment, call::ReplaceCommitment, call::DepositProfile,
                          call::WithdrawProfile, call::DepositCollateral, call::WithdrawCollateral, call::Ingest,
                          call::MarketTrigger, call::PurgeExpired, call::SettleCommitment, call::CloseSlot,
                          call::PushRound, call::Transfer>;

/// Receipt op label for a call ("mint_profile", "add_commitment", ...).
std::string op_name(const Call& c);

/// Parses `{"op": "<name>", ...args}`. Unknown op names throw ContractError(UnknownCall).
Call call_from_json(const nlohmann::json& j);
nlohmann::json call_to_json(const Call& c);

struct SettleResult {
    std::vector<TxReceipt> receipts;
    std::vector<SettlementRecord> records;
    bool ok = true;
    std::string reason;
    std::optional<ErrorCode> error;
};

class Marketplace {
public:
    Marketplace(std::uint32_t account_count, GasSchedule schedule = {}, MarketParams params = {});
    Marketplace(const Marketplace&) = delete;
    Marketplace& operator=(const Marketplace&) = delete;

    TxReceipt apply(AccountId caller, const Call& call);

    /// Settles every buffered production entry of `slot`, then the slot's
    /// consumer, as one atomic batch (one receipt per entry).
    SettleResult settle_slot(AccountId caller, Slot slot);

    Ledger& ledger() { return ledger_; }
    const Ledger& ledger() const { return ledger_; }
    const ProfileRegistry& registry() const { return registry_; }
    const EnergyPool& pool() const { return pool_; }
    const EnergyMarket& market() const { return market_; }
    const OracleHub& oracle() const { return oracle_; }
    const MarketParams& params() const { return set_.params; }

private:
    Ledger ledger_;
    ContractSet set_;
    ProfileRegistry registry_;
    EnergyPool pool_;
    EnergyMarket market_;
    OracleHub oracle_;
};

}  // namespace dem
