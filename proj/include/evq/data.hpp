#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "evq/battery.hpp"
#include "evq/common.hpp"
#include "evq/rng.hpp"

namespace evq {

using Date = std::chrono::sys_days;

/// Monday = 0 ... Sunday = 6.
inline int weekday_of(Date d) {
    return static_cast<int>(std::chrono::weekday{d}.iso_encoding()) - 1;
}

inline std::string format_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

inline std::optional<Date> parse_date(std::string_view s) {
    int y = 0;
    unsigned m = 0, d = 0;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto num = [](std::string_view part, auto& out) {
        auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
        return ec == std::errc{} && p == part.data() + part.size();
    };
    if (!num(s.substr(0, 4), y) || !num(s.substr(5, 2), m) || !num(s.substr(8, 2), d)) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return Date{ymd};
}

struct DailyEpisode {
    std::string house_id;
    Date date{};
    int weekday = 0;
    SlotSeries p_res{}; // non-EV residual load, kW
    SlotSeries p_ev{};  // historical EV charging, kW
    SlotSeries p_pv{};  // PV generation, kW

    double ev_sum() const { return series_sum(p_ev); }
    double pv_sum() const { return series_sum(p_pv); }

    void validate() const {
        for (const SlotSeries* s : {&p_res, &p_ev, &p_pv}) {
            if (!all_finite(*s)) throw EpisodeError("episode " + house_id + " has non-finite values");
            for (double v : *s)
                if (v < 0.0) throw EpisodeError("episode " + house_id + " has negative power");
        }
        if (weekday != weekday_of(date)) throw EpisodeError("episode weekday does not match date");
    }
};

/// Day-level filter thresholds. EV bounds are sums of kW slot readings,
/// not kWh.
struct EligibilityCriteria {
    double min_ev_sum = 4.0;
    double max_ev_sum = 96.0;
    bool require_positive_pv = true;
    std::size_t min_days_per_house = 50;

    void validate() const {
        if (!(min_ev_sum < max_ev_sum)) throw ConfigError("eligibility requires min_ev_sum < max_ev_sum");
        if (min_days_per_house < 1) throw ConfigError("eligibility requires min_days_per_house >= 1");
    }
};

// ---------------------------------------------------------------------------
// CSV ingestion

inline constexpr std::string_view kCsvHeader = "timestamp,house_id,p_res_kw,p_ev_kw,p_pv_kw";

struct LoadResult {
    std::vector<DailyEpisode> episodes; // sorted by (house_id, date)
    std::size_t dropped_days = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

// Returns nullopt for an empty or NA field; throws on garbage.
inline std::optional<double> parse_power(std::string_view field, std::size_t line) {
    if (field.empty() || field == "NA" || field == "nan" || field == "NaN") return std::nullopt;
    double v = 0.0;
    auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || p != field.data() + field.size())
        throw RowError(line, "unparsable number '" + std::string(field) + "'");
    if (!std::isfinite(v)) throw RowError(line, "non-finite value");
    if (v < 0.0) throw RowError(line, "negative power value");
    return v;
}

struct ParsedTimestamp {
    Date date;
    std::size_t slot;
};

inline ParsedTimestamp parse_timestamp(std::string_view ts, std::size_t line) {
    // YYYY-MM-DDTHH:MM[:SS], 'T' or ' ' separator
    if (ts.size() < 16 || (ts[10] != 'T' && ts[10] != ' ') || ts[13] != ':')
        throw RowError(line, "malformed timestamp '" + std::string(ts) + "'");
    auto date = parse_date(ts.substr(0, 10));
    if (!date) throw RowError(line, "invalid date in '" + std::string(ts) + "'");
    unsigned hh = 0, mm = 0, ss = 0;
    auto num = [&](std::string_view part, unsigned& out) {
        auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
        if (ec != std::errc{} || p != part.data() + part.size() || part.size() != 2)
            throw RowError(line, "malformed timestamp '" + std::string(ts) + "'");
    };
    num(ts.substr(11, 2), hh);
    num(ts.substr(14, 2), mm);
    if (ts.size() > 16) {
        if (ts.size() != 19 || ts[16] != ':') throw RowError(line, "malformed timestamp '" + std::string(ts) + "'");
        num(ts.substr(17, 2), ss);
    }
    if (hh > 23 || mm % 15 != 0 || mm > 45 || ss != 0)
        throw RowError(line, "timestamp not on the 15-minute grid: '" + std::string(ts) + "'");
    return {*date, hh * 4 + mm / 15};
}

} // namespace detail

/// Reads 15-minute readings and groups them into complete days. Days with
/// fewer than 96 rows or any missing value are dropped and counted.
inline LoadResult load_episodes(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw SchemaError("empty input: missing header");
    if (detail::trim(line) != kCsvHeader) {
        // tolerate a UTF-8 byte order mark
        std::string_view h = detail::trim(line);
        if (h.substr(0, 3) == "\xEF\xBB\xBF") h.remove_prefix(3);
        if (h != kCsvHeader) throw SchemaError("unexpected header '" + std::string(h) + "'");
    }

    struct Partial {
        SlotSeries res{}, ev{}, pv{};
        std::array<bool, kSlotsPerDay> seen{};
        std::size_t rows = 0;
        bool missing = false;
    };
    std::map<std::pair<std::string, Date>, Partial> days;

    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv(line);
        if (fields.size() > 5) throw RowError(line_no, "too many fields");
        fields.resize(5, std::string_view{});
        if (fields[0].empty()) throw RowError(line_no, "missing timestamp");
        if (fields[1].empty()) throw RowError(line_no, "missing house_id");
        const auto ts = detail::parse_timestamp(fields[0], line_no);
        auto& day = days[{std::string(fields[1]), ts.date}];
        if (day.seen[ts.slot]) throw RowError(line_no, "duplicate timestamp");
        day.seen[ts.slot] = true;
        ++day.rows;
        const auto res = detail::parse_power(fields[2], line_no);
        const auto ev = detail::parse_power(fields[3], line_no);
        const auto pv = detail::parse_power(fields[4], line_no);
        if (!res || !ev || !pv) {
            day.missing = true;
            continue;
        }
        day.res[ts.slot] = *res;
        day.ev[ts.slot] = *ev;
        day.pv[ts.slot] = *pv;
    }

    LoadResult out;
    for (auto& [key, day] : days) {
        if (day.rows != kSlotsPerDay || day.missing) {
            ++out.dropped_days;
            continue;
        }
        DailyEpisode ep;
        ep.house_id = key.first;
        ep.date = key.second;
        ep.weekday = weekday_of(key.second);
        ep.p_res = day.res;
        ep.p_ev = day.ev;
        ep.p_pv = day.pv;
        out.episodes.push_back(std::move(ep));
    }
    return out;
}

inline LoadResult load_episodes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return load_episodes(in);
}

inline void write_episodes_csv(std::ostream& out, const std::vector<DailyEpisode>& episodes) {
    out << kCsvHeader << '\n';
    char buf[160];
    for (const auto& ep : episodes) {
        const std::string date = format_date(ep.date);
        for (std::size_t s = 0; s < kSlotsPerDay; ++s) {
            std::snprintf(buf, sizeof buf, "%sT%02zu:%02zu:00,%s,%.4f,%.4f,%.4f\n", date.c_str(), s / 4,
                          (s % 4) * 15, ep.house_id.c_str(), ep.p_res[s], ep.p_ev[s], ep.p_pv[s]);
            out << buf;
        }
    }
}

// ---------------------------------------------------------------------------
// Filtering and day classification

inline bool day_eligible(const DailyEpisode& ep, const EligibilityCriteria& c) {
    const double ev = ep.ev_sum();
    if (c.require_positive_pv && !(ep.pv_sum() > 0.0)) return false;
    return ev >= c.min_ev_sum && ev <= c.max_ev_sum;
}

inline std::vector<DailyEpisode> filter_eligible(const std::vector<DailyEpisode>& episodes,
                                                 const EligibilityCriteria& c) {
    std::vector<const DailyEpisode*> kept;
    std::map<std::string, std::size_t> per_house;
    for (const auto& ep : episodes)
        if (day_eligible(ep, c)) {
            kept.push_back(&ep);
            ++per_house[ep.house_id];
        }
    std::vector<DailyEpisode> out;
    for (const auto* ep : kept)
        if (per_house[ep->house_id] >= c.min_days_per_house) out.push_back(*ep);
    return out;
}

enum class DrClass { good, bad };

inline std::string_view to_string(DrClass c) { return c == DrClass::good ? "good" : "bad"; }

inline constexpr double kGoodDrMinEvSum = 20.0;

/// A day is good for demand response when EV load exceeds 20 kW-slot units
/// and PV generation exceeds the EV load.
inline DrClass classify_dr_day(const DailyEpisode& ep) {
    const double ev = ep.ev_sum();
    return (ev > kGoodDrMinEvSum && ep.pv_sum() > ev) ? DrClass::good : DrClass::bad;
}

/// Groups episodes by house id, preserving order within each house.
inline std::map<std::string, std::vector<DailyEpisode>> by_house(const std::vector<DailyEpisode>& episodes) {
    std::map<std::string, std::vector<DailyEpisode>> out;
    for (const auto& ep : episodes) out[ep.house_id].push_back(ep);
    return out;
}

/// Chronological split: the last ceil(test_fraction * n) days become the
/// test set.
struct Split {
    std::vector<DailyEpisode> train;
    std::vector<DailyEpisode> test;
};

inline Split chronological_split(std::vector<DailyEpisode> days, double test_fraction) {
    if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in [0, 1)");
    std::stable_sort(days.begin(), days.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
    const auto n_test = static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(days.size())));
    Split s;
    const auto cut = static_cast<std::ptrdiff_t>(days.size() - n_test);
    s.train.assign(days.begin(), days.begin() + cut);
    s.test.assign(days.begin() + cut, days.end());
    return s;
}

// ---------------------------------------------------------------------------
// Synthetic generator

struct SynthProfile {
    std::string start_date = "2018-01-01";
    std::size_t daylight_start_slot = 26; // 06:30
    std::size_t daylight_end_slot = 78;   // 19:30, exclusive
    double pv_peak_kw = 5.0;
    double cloud_min = 0.35; // daily PV scale drawn from [cloud_min, 1]
    double pv_noise = 0.05;
    double res_base_kw = 0.4;
    double res_morning_kw = 1.0;
    double res_evening_kw = 1.8;
    double res_noise = 0.1;
    double ev_sum_min = 30.0; // kW-slot sum
    double ev_sum_max = 70.0;
    std::array<int, 7> ev_start_slot{72, 72, 74, 72, 76, 56, 60}; // Mon..Sun
    int ev_start_jitter = 4;
    int house_offset_max = 4;
    double ev_power_jitter = 0.02;

    void validate() const {
        if (!parse_date(start_date)) throw ConfigError("synth.start_date must be YYYY-MM-DD");
        if (!(daylight_start_slot < daylight_end_slot && daylight_end_slot <= kSlotsPerDay))
            throw ConfigError("synth daylight window invalid");
        if (!(pv_peak_kw > 0.0)) throw ConfigError("synth.pv_peak_kw must be positive");
        if (!(cloud_min > 0.0 && cloud_min <= 1.0)) throw ConfigError("synth.cloud_min must lie in (0, 1]");
        if (!(pv_noise >= 0.0 && pv_noise <= 0.3)) throw ConfigError("synth.pv_noise must lie in [0, 0.3]");
        if (!(res_base_kw > 0.0) || res_morning_kw < 0.0 || res_evening_kw < 0.0)
            throw ConfigError("synth residual load parameters invalid");
        if (!(res_noise >= 0.0 && res_noise <= 0.3)) throw ConfigError("synth.res_noise must lie in [0, 0.3]");
        if (!(ev_sum_min >= 8.0 && ev_sum_min <= ev_sum_max && ev_sum_max <= 90.0))
            throw ConfigError("synth EV sums must satisfy 8 <= ev_sum_min <= ev_sum_max <= 90");
        for (int s : ev_start_slot)
            if (s < 0 || s >= static_cast<int>(kSlotsPerDay)) throw ConfigError("synth.ev_start_slot out of range");
        if (ev_start_jitter < 0 || house_offset_max < 0) throw ConfigError("synth jitter must be non-negative");
        if (!(ev_power_jitter >= 0.0 && ev_power_jitter <= 0.05))
            throw ConfigError("synth.ev_power_jitter must lie in [0, 0.05]");
    }
};

namespace detail {

inline int uniform_int(Rng& rng, int lo, int hi) { // inclusive
    return lo + static_cast<int>(rng.index(static_cast<std::size_t>(hi - lo + 1)));
}

} // namespace detail

/// Deterministic synthetic household days: midday PV bell, morning and
/// evening residual peaks, and one evening charging session per day at
/// weekday-dependent start slots with 3.3/1.5 kW charger levels.
inline std::vector<DailyEpisode> synth_generate(std::uint64_t seed, std::size_t n_houses, std::size_t n_days,
                                                const SynthProfile& profile, const BatteryModel& battery = {}) {
    if (n_houses < 1 || n_days < 1) throw ConfigError("synth requires at least one house and one day");
    profile.validate();
    battery.validate();
    const Date start = *parse_date(profile.start_date);

    std::vector<DailyEpisode> out;
    out.reserve(n_houses * n_days);
    for (std::size_t h = 0; h < n_houses; ++h) {
        Rng rng(seed * 1000003ULL + h);
        char id[32];
        std::snprintf(id, sizeof id, "h%02zu", h + 1);
        const int house_offset = detail::uniform_int(rng, -profile.house_offset_max, profile.house_offset_max);
        const double house_pv_scale = rng.uniform(0.85, 1.15);
        const double house_res_scale = rng.uniform(0.8, 1.2);

        for (std::size_t d = 0; d < n_days; ++d) {
            DailyEpisode ep;
            ep.house_id = id;
            ep.date = start + std::chrono::days{static_cast<int>(d)};
            ep.weekday = weekday_of(ep.date);

            const double cloud = rng.uniform(profile.cloud_min, 1.0);
            const double span = static_cast<double>(profile.daylight_end_slot - profile.daylight_start_slot);
            for (std::size_t s = 0; s < kSlotsPerDay; ++s) {
                double pv = 0.0;
                if (s >= profile.daylight_start_slot && s < profile.daylight_end_slot) {
                    const double x = (static_cast<double>(s - profile.daylight_start_slot) + 0.5) / span;
                    pv = profile.pv_peak_kw * house_pv_scale * cloud * std::sin(std::numbers::pi * x) *
                         (1.0 + profile.pv_noise * rng.normal());
                    pv = std::max(pv, 0.0);
                }
                ep.p_pv[s] = pv;

                const double t = static_cast<double>(s);
                const double morning = profile.res_morning_kw * std::exp(-std::pow((t - 30.0) / 6.0, 2));
                const double evening = profile.res_evening_kw * std::exp(-std::pow((t - 78.0) / 8.0, 2));
                const double res = house_res_scale * (profile.res_base_kw + morning + evening) *
                                   (1.0 + profile.res_noise * rng.normal());
                ep.p_res[s] = std::max(res, 0.05);
            }

            // Charging session that refills the battery to full.
            const double target = rng.uniform(profile.ev_sum_min, profile.ev_sum_max);
            double soc = initial_soc(battery, target).soc;
            std::vector<double> session;
            for (;;) {
                const double p = charge_power(battery, soc);
                const auto next = apply_charge(battery, soc, p);
                if (next.violated || session.size() == kSlotsPerDay) break;
                session.push_back(p * (1.0 + rng.uniform(-profile.ev_power_jitter, profile.ev_power_jitter)));
                soc = next.soc;
            }
            if (session.empty()) session.push_back(battery.p_low);
            const int jitter = detail::uniform_int(rng, -profile.ev_start_jitter, profile.ev_start_jitter);
            int begin = profile.ev_start_slot[static_cast<std::size_t>(ep.weekday)] + house_offset + jitter;
            begin = std::clamp(begin, 0, static_cast<int>(kSlotsPerDay - session.size()));
            for (std::size_t k = 0; k < session.size(); ++k) ep.p_ev[static_cast<std::size_t>(begin) + k] = session[k];

            out.push_back(std::move(ep));
        }
    }
    return out;
}

} // namespace evq
