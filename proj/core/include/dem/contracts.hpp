#pragma once

// Shared identifiers and wiring for the marketplace contracts.

#include "dem/fixed_point.hpp"
#include "dem/ledger.hpp"

#include <compare>
#include <concepts>
#include <cstdint>
#include <string_view>

namespace dem {

struct TokenId {
    std::uint64_t id = 0;
    constexpr auto operator<=>(const TokenId&) const = default;
};

struct CommitmentId {
    std::uint64_t id = 0;
    constexpr auto operator<=>(const CommitmentId&) const = default;
};

enum class CommitmentKind : std::uint8_t { Production = 0, Consumption = 1 };

// Encoded values start at 1 so a packed commitment word is never zero.
enum class CommitmentStatus : std::uint8_t { Pending = 1, Processed = 2, Settled = 3, Expired = 4 };

std::string_view to_string(CommitmentKind k);
std::string_view to_string(CommitmentStatus s);

inline bool is_active(CommitmentStatus s) { return s == CommitmentStatus::Pending || s == CommitmentStatus::Processed; }
inline bool is_final(CommitmentStatus s) { return s == CommitmentStatus::Settled || s == CommitmentStatus::Expired; }

struct MarketParams {
    /// Reference price used to size collateral, per kWh.
    Money reference_price = Money::parse("0.200000");
    Ppm collateral_factor = Ppm::from_double(1.0);
    Ppm penalty_factor = Ppm::from_double(1.0);
    /// Account allowed to push oracle rounds.
    AccountId oracle_admin{0};
};

inline constexpr std::size_t kMaxActiveCommitments = 3;

class ProfileRegistry;
class EnergyPool;
class EnergyMarket;
class OracleHub;

/// Non-owning links between the contracts of one deployment.
struct ContractSet {
    Ledger* ledger = nullptr;
    ProfileRegistry* registry = nullptr;
    EnergyPool* pool = nullptr;
    EnergyMarket* market = nullptr;
    OracleHub* oracle = nullptr;
    MarketParams params;
};

/// Storage reader usable both inside a transaction (metered) and from views.
template <typename F>
concept WordReader = requires(F f, const StorageKey& k) {
    { f(k) } -> std::convertible_to<Word>;
};

inline auto metered(Exec& exec) {
    return [&exec](const StorageKey& k) { return exec.load(k); };
}

inline auto unmetered(const Ledger& ledger) {
    return [&ledger](const StorageKey& k) { return ledger.peek(k); };
}

}  // namespace dem
