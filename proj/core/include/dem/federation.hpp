#pragma once

// Synchronous weight averaging across household agents.

#include "dem/sac_agent.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dem::fed {

enum class FederationErrorCode { EmptyFederation, LayoutMismatch, InvalidSchedule };

class FederationError : public std::runtime_error {
public:
    FederationError(FederationErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    FederationErrorCode code() const noexcept { return code_; }

private:
    FederationErrorCode code_;
};

struct FederationSchedule {
    std::int64_t period = 10;
    std::int64_t horizon = 0;

    /// True exactly when t > 0 and t is a multiple of the period.
    bool triggers(std::int64_t t) const;
    void validate() const;
};

/// Elementwise mean of the policy and online critic vectors. Each coordinate
/// is summed in ascending value order, so the result does not depend on the
/// order of `weights`. Targets are set to the averaged critics; the log
/// temperature of the first entry is carried through unchanged.
sac::WeightSet aggregate(const std::vector<sac::WeightSet>& weights);

struct DriftRow {
    std::size_t household = 0;
    double l2_drift = 0.0;
};

struct BroadcastReport {
    std::int64_t interval = 0;
    bool triggered = false;
    std::vector<DriftRow> drift;
};

/// Applies one barrier if the schedule triggers at `t`: collects every
/// agent's weights, averages, imports the mean and re-syncs targets.
BroadcastReport federate_step(std::int64_t t, const FederationSchedule& schedule, std::vector<sac::SacAgent*>& agents);

void write_federation_csv(const std::vector<BroadcastReport>& reports, const std::string& path);

}  // namespace dem::fed
