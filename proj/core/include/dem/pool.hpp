#pragma once

// EnergyPool contract: custody of deposited profiles and running totals of
// committed supply and demand.

#include "dem/contracts.hpp"

namespace dem {

struct PoolTotals {
    Energy total_production;
    Energy total_consumption;
    bool operator==(const PoolTotals&) const = default;
};

class EnergyPool {
public:
    explicit EnergyPool(const ContractSet& set) : set_(set) {}

    /// Labels a Pending commitment Processed, adds it to the totals and hands it to the market.
    void ingest(Exec& exec, TokenId token, CommitmentId cid);
    void on_settled(Exec& exec, CommitmentId cid);
    void on_expired(Exec& exec, CommitmentId cid);

    PoolTotals totals() const;

private:
    void release(Exec& exec, CommitmentId cid);

    const ContractSet& set_;
};

namespace pool_layout {
enum Field : std::uint16_t { TotalProduction = 1, TotalConsumption };
inline StorageKey key(Field f) { return {ContractId::Pool, f, 0, 0}; }
}  // namespace pool_layout

}  // namespace dem
