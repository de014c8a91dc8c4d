#pragma once

#include <algorithm>
#include <vector>

#include "evq/data.hpp"
#include "evq/tariff.hpp"

namespace evq {

/// Linear-interpolation quantile at rank q * (n - 1) of the sorted values.
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw StatsError("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw StatsError("quantile fraction must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double rank = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

inline double quantile(std::span<const double> values, double q) {
    return quantile(std::vector<double>(values.begin(), values.end()), q);
}

struct Quartiles {
    double q25 = 0.0;
    double q50 = 0.0;
    double q75 = 0.0;
};

inline Quartiles quartiles(std::span<const double> values) {
    std::vector<double> v(values.begin(), values.end());
    return {quantile(v, 0.25), quantile(v, 0.50), quantile(v, 0.75)};
}

/// Per-slot historical charging frequency, per weekday and pooled.
struct ChargingFrequencyProfile {
    std::array<SlotSeries, 7> per_weekday{};
    std::array<double, 7> q25_per_weekday{};
    std::array<std::size_t, 7> days_per_weekday{};
    SlotSeries aggregate{};
    double aggregate_q25 = 0.0;
    // Upper quartiles of the pooled profile, used by the flexibility reward.
    double aggregate_q50 = 0.0;
    double aggregate_q75 = 0.0;

    /// Profile for a weekday; weekdays unseen in the data use the pooled one.
    const SlotSeries& for_weekday(int wd) const {
        const auto i = static_cast<std::size_t>(wd);
        return days_per_weekday[i] > 0 ? per_weekday[i] : aggregate;
    }
    double q25_for_weekday(int wd) const {
        const auto i = static_cast<std::size_t>(wd);
        return days_per_weekday[i] > 0 ? q25_per_weekday[i] : aggregate_q25;
    }
};

inline constexpr double kDefaultOnThreshold = 0.1; // kW

inline ChargingFrequencyProfile build_charging_profile(const std::vector<DailyEpisode>& episodes,
                                                       double on_threshold = kDefaultOnThreshold) {
    if (episodes.empty()) throw StatsError("charging profile needs at least one episode");
    if (!(on_threshold >= 0.0)) throw StatsError("on_threshold must be non-negative");
    ChargingFrequencyProfile prof;
    std::array<std::array<std::size_t, kSlotsPerDay>, 7> counts{};
    std::array<std::size_t, kSlotsPerDay> total{};
    for (const auto& ep : episodes) {
        const auto wd = static_cast<std::size_t>(ep.weekday);
        ++prof.days_per_weekday[wd];
        for (std::size_t s = 0; s < kSlotsPerDay; ++s)
            if (ep.p_ev[s] > on_threshold) {
                ++counts[wd][s];
                ++total[s];
            }
    }
    for (std::size_t wd = 0; wd < 7; ++wd) {
        const std::size_t n = prof.days_per_weekday[wd];
        if (n == 0) continue;
        for (std::size_t s = 0; s < kSlotsPerDay; ++s)
            prof.per_weekday[wd][s] = static_cast<double>(counts[wd][s]) / static_cast<double>(n);
        prof.q25_per_weekday[wd] = quantile(prof.per_weekday[wd], 0.25);
    }
    const auto n = static_cast<double>(episodes.size());
    for (std::size_t s = 0; s < kSlotsPerDay; ++s) prof.aggregate[s] = static_cast<double>(total[s]) / n;
    const auto q = quartiles(prof.aggregate);
    prof.aggregate_q25 = q.q25;
    prof.aggregate_q50 = q.q50;
    prof.aggregate_q75 = q.q75;
    return prof;
}

/// Average historical cost per slot; quartiles ignore export-credit slots.
struct CostProfile {
    SlotSeries avg_cost{};
    double q25 = 0.0;
    double q50 = 0.0;
    double q75 = 0.0;
};

inline CostProfile build_cost_profile(const std::vector<DailyEpisode>& episodes, const TariffSchedule& schedule,
                                      double on_threshold = kDefaultOnThreshold) {
    if (episodes.empty()) throw StatsError("cost profile needs at least one episode");
    CostProfile prof;
    for (const auto& ep : episodes)
        for (std::size_t s = 0; s < kSlotsPerDay; ++s) {
            const Action a = ep.p_ev[s] > on_threshold ? Action::charge : Action::idle;
            prof.avg_cost[s] += step_cost(schedule.price_at(s), a, ep.p_ev[s], ep.p_res[s], ep.p_pv[s]);
        }
    std::vector<double> nonneg;
    for (auto& c : prof.avg_cost) {
        c /= static_cast<double>(episodes.size());
        if (c >= 0.0) nonneg.push_back(c);
    }
    if (nonneg.empty()) throw StatsError("every slot has negative average cost; quantiles undefined");
    const auto q = quartiles(nonneg);
    prof.q25 = q.q25;
    prof.q50 = q.q50;
    prof.q75 = q.q75;
    return prof;
}

/// Behavioral statistics of one household's training days.
struct BehaviorStats {
    ChargingFrequencyProfile frequency;
    CostProfile cost;
};

inline BehaviorStats build_behavior_stats(const std::vector<DailyEpisode>& episodes, const TariffSchedule& schedule,
                                          double on_threshold = kDefaultOnThreshold) {
    return {build_charging_profile(episodes, on_threshold), build_cost_profile(episodes, schedule, on_threshold)};
}

} // namespace evq
