#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "evq/common.hpp"

namespace evq {

enum class TouPeriod { off_peak, mid_peak, on_peak };

inline std::string_view to_string(TouPeriod p) {
    switch (p) {
    case TouPeriod::off_peak: return "off_peak";
    case TouPeriod::mid_peak: return "mid_peak";
    case TouPeriod::on_peak: return "on_peak";
    }
    return "?";
}

inline TouPeriod parse_tou_period(std::string_view s) {
    if (s == "off_peak") return TouPeriod::off_peak;
    if (s == "mid_peak") return TouPeriod::mid_peak;
    if (s == "on_peak") return TouPeriod::on_peak;
    throw ConfigError("unknown tariff label '" + std::string(s) + "'");
}

struct TariffBand {
    std::size_t start_slot = 0;
    std::size_t end_slot = 0; // exclusive
    double price = 0.0;       // $/kWh
    TouPeriod label = TouPeriod::off_peak;
};

/// Time-of-use price bands covering one day. Bands must partition [0, 96).
class TariffSchedule {
public:
    TariffSchedule() : TariffSchedule(austin_2018()) {}

    explicit TariffSchedule(std::vector<TariffBand> bands) : bands_(std::move(bands)) {
        std::sort(bands_.begin(), bands_.end(),
                  [](const TariffBand& a, const TariffBand& b) { return a.start_slot < b.start_slot; });
        std::size_t cursor = 0;
        for (const auto& b : bands_) {
            if (b.start_slot != cursor)
                throw ConfigError("tariff bands leave a gap or overlap at slot " + std::to_string(cursor));
            if (b.end_slot <= b.start_slot || b.end_slot > kSlotsPerDay)
                throw ConfigError("tariff band has invalid extent");
            if (!(b.price > 0.0) || !std::isfinite(b.price))
                throw ConfigError("tariff prices must be positive");
            cursor = b.end_slot;
        }
        if (cursor != kSlotsPerDay) throw ConfigError("tariff bands do not cover the whole day");
        for (const auto& b : bands_)
            for (std::size_t s = b.start_slot; s < b.end_slot; ++s) {
                prices_[s] = b.price;
                labels_[s] = b.label;
            }
    }

    /// Austin 2018 summer ToU rates: off-peak 00-06, mid-peak 06-14 and
    /// 22-24, on-peak 14-22.
    static std::vector<TariffBand> austin_2018() {
        return {
            {0, 24, 0.01188, TouPeriod::off_peak},
            {24, 56, 0.06218, TouPeriod::mid_peak},
            {56, 88, 0.11003, TouPeriod::on_peak},
            {88, 96, 0.06218, TouPeriod::mid_peak},
        };
    }

    /// Alternative layout with 22-24 billed off-peak. On-peak keeps the
    /// 0.11003 rate; the 0.01188 on-peak figure printed alongside this
    /// layout is treated as a typo.
    static std::vector<TariffBand> austin_2018_late_off_peak() {
        return {
            {0, 24, 0.01188, TouPeriod::off_peak},
            {24, 56, 0.06218, TouPeriod::mid_peak},
            {56, 88, 0.11003, TouPeriod::on_peak},
            {88, 96, 0.01188, TouPeriod::off_peak},
        };
    }

    double price_at(std::size_t slot) const { return prices_.at(slot); }
    TouPeriod period_at(std::size_t slot) const { return labels_.at(slot); }
    double max_price() const { return *std::max_element(prices_.begin(), prices_.end()); }
    const std::vector<TariffBand>& bands() const noexcept { return bands_; }

private:
    std::vector<TariffBand> bands_;
    SlotSeries prices_{};
    std::array<TouPeriod, kSlotsPerDay> labels_{};
};

inline double price_at(const TariffSchedule& schedule, std::size_t slot) {
    return schedule.price_at(slot);
}

/// Cost in $ of one slot's net grid exchange. Negative values are export
/// credit under net metering.
inline double step_cost(double price, Action action, double p_ev, double p_res, double p_pv) {
    const double ev = charging(action) ? p_ev : 0.0;
    return price * (ev + p_res - p_pv) / kSlotsPerHour;
}

} // namespace evq
