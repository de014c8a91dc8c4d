#pragma once

#include <algorithm>

#include "evq/common.hpp"

namespace evq {

/// EV battery and two-level Level-2 charger. Defaults describe a 24 kWh
/// Nissan Leaf charging at 90.5% efficiency.
struct BatteryModel {
    double capacity_kwh = 24.0;
    double eta = 0.905;
    double p_high = 3.3;
    double p_low = 1.5;
    double soc_switch = 0.9;
    double soc_max = 1.0;

    void validate() const {
        if (!(capacity_kwh > 0.0)) throw ConfigError("battery capacity must be positive");
        if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("battery eta must lie in (0, 1]");
        if (!(p_low > 0.0 && p_low < p_high)) throw ConfigError("battery requires 0 < p_low < p_high");
        if (!(soc_switch > 0.0 && soc_switch < soc_max && soc_max <= 1.0))
            throw ConfigError("battery requires 0 < soc_switch < soc_max <= 1");
    }

    /// SoC gained per kW delivered over one slot.
    double soc_per_kw_slot() const { return eta / (kSlotsPerHour * capacity_kwh); }
};

struct InitialSoc {
    double soc = 1.0;
    bool over_capacity = false; // the day's charging exceeds one full cycle
};

/// Starting SoC assuming the day's EV load is exactly one full charging
/// cycle ending at 100%.
inline InitialSoc initial_soc(const BatteryModel& m, double daily_ev_sum) {
    const double raw = 1.0 - m.eta * daily_ev_sum / (kSlotsPerHour * m.capacity_kwh);
    if (raw < 0.0) return {0.0, true};
    return {raw, false};
}

inline double charge_power(const BatteryModel& m, double soc) {
    return soc <= m.soc_switch ? m.p_high : m.p_low;
}

struct ChargeResult {
    double soc = 0.0;
    bool violated = false;
};

inline ChargeResult apply_charge(const BatteryModel& m, double soc, double p) {
    const double raw = soc + m.eta * p / (kSlotsPerHour * m.capacity_kwh);
    return {std::min(raw, m.soc_max), raw > m.soc_max};
}

} // namespace evq
