#include "dem/series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace dem::series {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& text, std::size_t line_no) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw SeriesError(SeriesErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": bad number '" + text + "'");
    return v;
}

// days since 1970-01-01 for a proleptic Gregorian date
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

}  // namespace

std::int64_t parse_timestamp(const std::string& text) {
    if (text.empty()) throw SeriesError(SeriesErrorCode::MalformedRecord, "empty timestamp");
    if (std::all_of(text.begin(), text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) || c == '-'; }) &&
        text.find('-', 1) == std::string::npos) {
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec == std::errc() && ptr == text.data() + text.size()) return v;
    }
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    char sep = 0;
    const int n = std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &s);
    if (n < 6 || (sep != ' ' && sep != 'T') || mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 ||
        mi > 59 || s < 0 || s > 60)
        throw SeriesError(SeriesErrorCode::MalformedRecord, "bad timestamp '" + text + "'");
    return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 + h * 3600 + mi * 60 + s;
}

HouseholdSeries parse_series(std::istream& in, const ColumnMap& columns, const std::string& name) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw SeriesError(SeriesErrorCode::MalformedRecord, "missing header");
    ++line_no;
    const auto header = split_csv(line);
    auto column = [&](const std::string& col) {
        auto it = std::find(header.begin(), header.end(), col);
        if (it == header.end()) throw SeriesError(SeriesErrorCode::MalformedRecord, "missing column '" + col + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_ts = column(columns.timestamp);
    const std::size_t c_temp = column(columns.temperature);
    const std::size_t c_load = column(columns.consumption);
    const std::size_t c_pv = column(columns.pv);
    const std::size_t width = std::max({c_ts, c_temp, c_load, c_pv}) + 1;

    HouseholdSeries out;
    out.name = name;
    std::int64_t prev_ts = std::numeric_limits<std::int64_t>::min();
    std::int64_t bucket = std::numeric_limits<std::int64_t>::min();
    SlotRecord acc;
    int samples = 0;
    auto flush = [&] {
        if (samples == 0) return;
        acc.temperature /= samples;
        if (out.slots.empty()) out.first_hour = bucket;
        out.slots.push_back(acc);
        acc = {};
        samples = 0;
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv(line);
        if (cells.size() < width)
            throw SeriesError(SeriesErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": too few fields");
        std::int64_t ts = 0;
        try {
            ts = parse_timestamp(cells[c_ts]);
        } catch (const SeriesError& e) {
            throw SeriesError(SeriesErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (ts <= prev_ts)
            throw SeriesError(SeriesErrorCode::NonMonotonicTime, "line " + std::to_string(line_no) + ": timestamp not increasing");
        prev_ts = ts;
        const double temp = parse_number(cells[c_temp], line_no);
        const double load = parse_number(cells[c_load], line_no);
        const double pv = parse_number(cells[c_pv], line_no);
        if (load < 0.0 || pv < 0.0)
            throw SeriesError(SeriesErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": negative energy");

        const std::int64_t hour = ts >= 0 ? ts / 3600 : -((-ts + 3599) / 3600);
        if (hour != bucket) {
            flush();
            bucket = hour;
        }
        acc.temperature += temp;
        acc.load += load;
        acc.pv += pv;
        ++samples;
    }
    flush();
    return out;
}

HouseholdSeries load_series(const std::string& path, const ColumnMap& columns) {
    std::ifstream in(path);
    if (!in) throw SeriesError(SeriesErrorCode::Io, "cannot open " + path);
    return parse_series(in, columns, path);
}

std::vector<HouseholdSeries> synth_series(std::uint64_t seed, int days, int households, const SynthParams& p) {
    if (days < 1) throw std::invalid_argument("synth_series needs days >= 1");
    if (households < 1) throw std::invalid_argument("synth_series needs households >= 1");
    std::vector<HouseholdSeries> out;
    out.reserve(static_cast<std::size_t>(households));
    for (int h = 0; h < households; ++h) {
        std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(h) * 0xBF58476D1CE4E5B9ULL + 1);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

        const double pv_peak = between(p.pv_peak_min, p.pv_peak_max);
        const double base_load = between(p.base_load_min, p.base_load_max);
        const double morning = p.morning_peak * between(0.8, 1.2);
        const double evening = p.evening_peak * between(0.8, 1.2);

        HouseholdSeries s;
        s.name = "synthetic-" + std::to_string(h);
        s.slots.reserve(static_cast<std::size_t>(days) * 24);
        for (int d = 0; d < days; ++d) {
            const double cloud = between(p.cloud_min, p.cloud_max);
            const double temp_mean = between(p.temp_mean_min, p.temp_mean_max);
            for (int hour = 0; hour < 24; ++hour) {
                SlotRecord r;
                const double mid = hour + 0.5;
                // daylight 06:00-18:00
                const double sun = std::sin(std::numbers::pi * (mid - 6.0) / 12.0);
                r.pv = (mid > 6.0 && mid < 18.0) ? pv_peak * cloud * std::max(0.0, sun) : 0.0;
                const double shape = base_load + morning * std::exp(-0.5 * std::pow((mid - 7.5) / 1.2, 2)) +
                                     evening * std::exp(-0.5 * std::pow((mid - 19.5) / 1.8, 2));
                r.load = std::max(0.0, shape * (1.0 + p.load_noise * (2.0 * unit(rng) - 1.0)));
                r.temperature = temp_mean + p.temp_amplitude * std::sin(2.0 * std::numbers::pi * (mid - 9.0) / 24.0) +
                                (unit(rng) - 0.5);
                s.slots.push_back(r);
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

env::StateNormalizer fit_normalizer(const HouseholdSeries& s, double battery_capacity) {
    env::StateNormalizer n;
    if (s.slots.empty()) return n;
    n.lo = {s.slots[0].pv, 0.0, s.slots[0].temperature, s.slots[0].load};
    n.hi = {s.slots[0].pv, battery_capacity, s.slots[0].temperature, s.slots[0].load};
    for (const auto& r : s.slots) n.observe(env::EnvState{r.pv, 0.0, r.temperature, r.load});
    return n;
}

env::EnvState state_at(const HouseholdSeries& s, std::size_t i, double battery_level) {
    const SlotRecord& r = s.slots.at(i);
    return env::EnvState{r.pv, battery_level, r.temperature, r.load};
}

}  // namespace dem::series
