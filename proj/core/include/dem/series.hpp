#pragma once

// Household time series: 5-minute CSV ingestion resampled to hourly slots and
// a seeded synthetic generator.

#include "dem/env.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dem::series {

struct SlotRecord {
    double temperature = 0.0;  // mean over the hour, degC
    double load = 0.0;         // kWh consumed in the hour
    double pv = 0.0;           // kWh generated in the hour
};

struct HouseholdSeries {
    std::string name;
    /// Epoch hour of slots[0]; 0 for synthetic series.
    std::int64_t first_hour = 0;
    std::vector<SlotRecord> slots;

    std::size_t size() const { return slots.size(); }
};

enum class SeriesErrorCode { MalformedRecord, NonMonotonicTime, Io };

class SeriesError : public std::runtime_error {
public:
    SeriesError(SeriesErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    SeriesErrorCode code() const noexcept { return code_; }

private:
    SeriesErrorCode code_;
};

/// Column names in the dataset header.
struct ColumnMap {
    std::string timestamp = "timestamp";
    std::string temperature = "temperature_c";
    std::string consumption = "consumption_kwh";
    std::string pv = "pv_kwh";
};

/// Parses a 5-minute CSV and resamples to hourly slots (temperature: mean,
/// consumption and PV: sum). Timestamps are epoch seconds or
/// "YYYY-MM-DD[ T]HH:MM[:SS]" in UTC and must strictly increase. Hours with
/// no records are skipped.
HouseholdSeries load_series(const std::string& path, const ColumnMap& columns = {});
HouseholdSeries parse_series(std::istream& in, const ColumnMap& columns = {}, const std::string& name = "");

/// Parses a timestamp to epoch seconds; throws SeriesError(MalformedRecord).
std::int64_t parse_timestamp(const std::string& text);

struct SynthParams {
    double pv_peak_min = 2.5;  // kWh/h at solar noon on a clear day
    double pv_peak_max = 4.0;
    double cloud_min = 0.3;
    double cloud_max = 1.0;
    double base_load_min = 0.30;
    double base_load_max = 0.50;
    double morning_peak = 0.8;
    double evening_peak = 1.5;
    double load_noise = 0.10;
    double temp_mean_min = 14.0;
    double temp_mean_max = 26.0;
    double temp_amplitude = 6.0;
};

/// Deterministic per seed. Every household gets days * 24 hourly slots.
std::vector<HouseholdSeries> synth_series(std::uint64_t seed, int days, int households, const SynthParams& params = {});

/// Min-max ranges of a series, battery in [0, capacity].
env::StateNormalizer fit_normalizer(const HouseholdSeries& s, double battery_capacity);

/// State at slot `i` with the given battery level.
env::EnvState state_at(const HouseholdSeries& s, std::size_t i, double battery_level);

}  // namespace dem::series
