#include "dem/federation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace dem::fed {

bool FederationSchedule::triggers(std::int64_t t) const { return t > 0 && period >= 1 && t % period == 0; }

void FederationSchedule::validate() const {
    if (period < 1) throw FederationError(FederationErrorCode::InvalidSchedule, "federation period must be >= 1");
}

namespace {

nn::Vector canonical_mean(const std::vector<const nn::Vector*>& vs) {
    const Eigen::Index n = vs.front()->size();
    nn::Vector out(n);
    std::vector<double> column(vs.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < vs.size(); ++k) column[k] = (*vs[k])[i];
        std::sort(column.begin(), column.end());
        if (column.front() == column.back()) {  // exact for identical inputs
            out[i] = column.front();
            continue;
        }
        double sum = 0.0;
        for (double v : column) sum += v;
        out[i] = sum / static_cast<double>(vs.size());
    }
    return out;
}

}  // namespace

sac::WeightSet aggregate(const std::vector<sac::WeightSet>& weights) {
    if (weights.empty()) throw FederationError(FederationErrorCode::EmptyFederation, "no weights to aggregate");
    const auto& first = weights.front();
    for (const auto& w : weights)
        if (w.layout != first.layout || w.policy.size() != first.policy.size() || w.q1.size() != first.q1.size() ||
            w.q2.size() != first.q2.size())
            throw FederationError(FederationErrorCode::LayoutMismatch, "agents disagree on weight layout");

    std::vector<const nn::Vector*> pol, q1, q2;
    for (const auto& w : weights) {
        pol.push_back(&w.policy);
        q1.push_back(&w.q1);
        q2.push_back(&w.q2);
    }
    sac::WeightSet out;
    out.layout = first.layout;
    out.policy = canonical_mean(pol);
    out.q1 = canonical_mean(q1);
    out.q2 = canonical_mean(q2);
    out.q1_target = out.q1;
    out.q2_target = out.q2;
    out.log_temperature = first.log_temperature;
    return out;
}

BroadcastReport federate_step(std::int64_t t, const FederationSchedule& schedule, std::vector<sac::SacAgent*>& agents) {
    BroadcastReport report;
    report.interval = t;
    if (!schedule.triggers(t)) return report;
    if (agents.empty()) throw FederationError(FederationErrorCode::EmptyFederation, "no agents to federate");

    std::vector<sac::WeightSet> local;
    local.reserve(agents.size());
    for (auto* a : agents) local.push_back(a->export_weights());
    const sac::WeightSet global = aggregate(local);

    report.triggered = true;
    for (std::size_t h = 0; h < agents.size(); ++h) {
        const auto& w = local[h];
        const double d2 = (w.policy - global.policy).squaredNorm() + (w.q1 - global.q1).squaredNorm() +
                          (w.q2 - global.q2).squaredNorm();
        report.drift.push_back({h, std::sqrt(d2)});
        agents[h]->import_weights(global);
        agents[h]->soft_update(1.0);
    }
    return report;
}

void write_federation_csv(const std::vector<BroadcastReport>& reports, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "barrier_interval,household,l2_drift\n";
    for (const auto& r : reports)
        for (const auto& d : r.drift) out << fmt::format("{},{},{:.12g}\n", r.interval, d.household, d.l2_drift);
}

}  // namespace dem::fed
