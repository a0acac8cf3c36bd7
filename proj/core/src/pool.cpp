#include "dem/pool.hpp"

#include "dem/market.hpp"
#include "dem/registry.hpp"

namespace dem {

using namespace pool_layout;

void EnergyPool::ingest(Exec& exec, TokenId token, CommitmentId cid) {
    ProfileRegistry& registry = *set_.registry;
    if (!registry.is_deposited(metered(exec), token))
        throw ContractError(ErrorCode::NotDeposited, "token " + std::to_string(token.id));
    const Commitment c = registry.read_commitment(metered(exec), cid);
    if (c.token != token)
        throw ContractError(ErrorCode::UnknownCommitment,
                            "commitment " + std::to_string(cid.id) + " does not belong to token " + std::to_string(token.id));
    if (c.status != CommitmentStatus::Pending)
        throw ContractError(ErrorCode::NotPending, "commitment " + std::to_string(cid.id) + " is " + std::string(to_string(c.status)));

    exec.call_as(Address::contract(ContractId::Pool), [&] {
        registry.mark_processed(exec, cid);
        const auto field = c.kind == CommitmentKind::Production ? TotalProduction : TotalConsumption;
        const Word total = exec.load(key(field));
        exec.store(key(field), total + c.energy.raw);
        set_.market->market_trigger(exec, token, cid);
    });
    exec.emit({"Ingested", {{"token", static_cast<std::int64_t>(token.id)}, {"commitment", static_cast<std::int64_t>(cid.id)}}});
}

void EnergyPool::release(Exec& exec, CommitmentId cid) {
    if (exec.sender() != Address::contract(ContractId::Market))
        throw ContractError(ErrorCode::UnauthorizedCaller, "pool release");
    const Commitment c = set_.registry->read_commitment(metered(exec), cid);
    if (c.status != CommitmentStatus::Processed)
        throw ContractError(ErrorCode::NotProcessed, "commitment " + std::to_string(cid.id) + " is " + std::string(to_string(c.status)));
    const auto field = c.kind == CommitmentKind::Production ? TotalProduction : TotalConsumption;
    const Word total = exec.load(key(field));
    if (total < c.energy.raw) throw std::logic_error("pool total would go negative");
    exec.store(key(field), total - c.energy.raw);
}

void EnergyPool::on_settled(Exec& exec, CommitmentId cid) { release(exec, cid); }

void EnergyPool::on_expired(Exec& exec, CommitmentId cid) { release(exec, cid); }

PoolTotals EnergyPool::totals() const {
    return PoolTotals{Energy::from_raw(set_.ledger->peek(key(TotalProduction))),
                      Energy::from_raw(set_.ledger->peek(key(TotalConsumption)))};
}

}  // namespace dem
