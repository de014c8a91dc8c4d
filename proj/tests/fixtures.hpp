#pragma once
// Small hand-built episodes shared by the unit tests.

#include <string>

#include "evq/data.hpp"

namespace fx {

inline evq::DailyEpisode day(const std::string& house = "h1", const std::string& date = "2018-06-04") {
    evq::DailyEpisode ep;
    ep.house_id = house;
    ep.date = *evq::parse_date(date);
    ep.weekday = evq::weekday_of(ep.date);
    ep.p_res.fill(0.5);
    return ep;
}

/// Day with midday PV, evening EV charging summing to `ev_sum`.
inline evq::DailyEpisode solar_day(double ev_sum = 33.0, const std::string& house = "h1",
                                   const std::string& date = "2018-06-04") {
    auto ep = day(house, date);
    for (std::size_t s = 30; s < 70; ++s) ep.p_pv[s] = 4.0;
    double left = ev_sum;
    for (std::size_t s = 76; s < 96 && left > 0.0; ++s) {
        ep.p_ev[s] = std::min(3.3, left);
        left -= ep.p_ev[s];
    }
    return ep;
}

} // namespace fx
