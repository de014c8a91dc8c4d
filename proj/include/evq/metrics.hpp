#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "evq/data.hpp"
#include "evq/tariff.hpp"

namespace evq {

/// Self-consumption index: share of EV energy covered by coincident PV.
inline double sci(std::span<const double> p_ev, std::span<const double> p_pv) {
    if (p_ev.size() != p_pv.size()) throw ShapeError("sci: series length mismatch");
    double covered = 0.0, total = 0.0;
    for (std::size_t t = 0; t < p_ev.size(); ++t) {
        covered += std::min(p_ev[t], p_pv[t]);
        total += p_ev[t];
    }
    if (!(total > 0.0)) throw MetricError("sci undefined for zero EV load");
    return covered / total;
}

/// Total electricity cost in $ of the net grid exchange. Slots are priced
/// by index, so the series may not exceed one day.
inline double tec(std::span<const double> p_res, std::span<const double> p_ev, std::span<const double> p_pv,
                  const TariffSchedule& schedule) {
    if (p_res.size() != p_ev.size() || p_ev.size() != p_pv.size()) throw ShapeError("tec: series length mismatch");
    double total = 0.0;
    for (std::size_t t = 0; t < p_res.size(); ++t)
        total += schedule.price_at(t) * (p_res[t] + p_ev[t] - p_pv[t]) / kSlotsPerHour;
    return total;
}

inline double par_of_flow(std::span<const double> flow) {
    if (flow.empty()) throw MetricError("par undefined for an empty series");
    double peak = 0.0, sum = 0.0;
    for (double f : flow) {
        peak = std::max(peak, std::abs(f));
        sum += std::abs(f);
    }
    if (!(sum > 0.0)) throw MetricError("par undefined for identically zero grid flow");
    return peak / (sum / static_cast<double>(flow.size()));
}

/// Peak-to-average ratio of absolute household grid flow.
inline double par(std::span<const double> p_res, std::span<const double> p_ev, std::span<const double> p_pv) {
    if (p_res.size() != p_ev.size() || p_ev.size() != p_pv.size()) throw ShapeError("par: series length mismatch");
    std::vector<double> flow(p_res.size());
    for (std::size_t t = 0; t < flow.size(); ++t) flow[t] = p_res[t] + p_ev[t] - p_pv[t];
    return par_of_flow(flow);
}

using SeriesList = std::vector<std::vector<double>>;

namespace detail {
inline std::size_t common_length(const SeriesList& s, std::span<const double> ref) {
    for (const auto& v : s)
        if (v.size() != ref.size()) throw ShapeError("community series length mismatch");
    return ref.size();
}
} // namespace detail

/// Community SCI: pooled EV load against the shared PV.
inline double sci_comm(const SeriesList& p_ev, std::span<const double> p_pv_shared) {
    const std::size_t T = detail::common_length(p_ev, p_pv_shared);
    double covered = 0.0, total = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        double ev = 0.0;
        for (const auto& h : p_ev) ev += h[t];
        covered += std::min(ev, p_pv_shared[t]);
        total += ev;
    }
    if (!(total > 0.0)) throw MetricError("sci_comm undefined for zero EV load");
    return covered / total;
}

/// SCI pooled over individually supplied households. Accumulates slot-major
/// in household order, like sci_comm, so sci_comm >= sci_ind holds exactly
/// in floating point for identical schedules (rounding is monotone).
inline double sci_ind(const SeriesList& p_ev, const SeriesList& p_pv) {
    if (p_ev.size() != p_pv.size()) throw ShapeError("sci_ind: household count mismatch");
    if (p_ev.empty()) throw MetricError("sci_ind undefined for zero EV load");
    const std::size_t T = p_ev.front().size();
    for (std::size_t n = 0; n < p_ev.size(); ++n)
        if (p_ev[n].size() != T || p_pv[n].size() != T) throw ShapeError("sci_ind: series length mismatch");
    double covered = 0.0, total = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        double c = 0.0, ev = 0.0;
        for (std::size_t n = 0; n < p_ev.size(); ++n) {
            c += std::min(p_ev[n][t], p_pv[n][t]);
            ev += p_ev[n][t];
        }
        covered += c;
        total += ev;
    }
    if (!(total > 0.0)) throw MetricError("sci_ind undefined for zero EV load");
    return covered / total;
}

inline std::vector<double> community_flow(const SeriesList& p_res, const SeriesList& p_ev,
                                          std::span<const double> p_pv_shared) {
    const std::size_t T = detail::common_length(p_res, p_pv_shared);
    detail::common_length(p_ev, p_pv_shared);
    if (p_res.size() != p_ev.size()) throw ShapeError("community household count mismatch");
    std::vector<double> flow(T);
    for (std::size_t t = 0; t < T; ++t) {
        double load = 0.0;
        for (std::size_t n = 0; n < p_res.size(); ++n) load += p_res[n][t] + p_ev[n][t];
        flow[t] = load - p_pv_shared[t];
    }
    return flow;
}

inline double tec_comm(const SeriesList& p_res, const SeriesList& p_ev, std::span<const double> p_pv_shared,
                       const TariffSchedule& schedule) {
    const auto flow = community_flow(p_res, p_ev, p_pv_shared);
    double total = 0.0;
    for (std::size_t t = 0; t < flow.size(); ++t) total += schedule.price_at(t) * flow[t] / kSlotsPerHour;
    return total;
}

enum class CommunityParMode {
    aggregated, // PAR of the net community flow
    per_house,  // sum of per-house absolute flows, PV split equally
};

inline double par_comm(const SeriesList& p_res, const SeriesList& p_ev, std::span<const double> p_pv_shared,
                       CommunityParMode mode = CommunityParMode::aggregated) {
    if (mode == CommunityParMode::aggregated) return par_of_flow(community_flow(p_res, p_ev, p_pv_shared));
    const std::size_t T = detail::common_length(p_res, p_pv_shared);
    const auto N = static_cast<double>(p_res.size());
    std::vector<double> abs_sum(T, 0.0);
    for (std::size_t n = 0; n < p_res.size(); ++n)
        for (std::size_t t = 0; t < T; ++t) abs_sum[t] += std::abs(p_res[n][t] + p_ev[n][t] - p_pv_shared[t] / N);
    return par_of_flow(abs_sum);
}

inline double savings(double tec_base, double tec_opt) {
    if (tec_base == 0.0) throw MetricError("savings undefined for a zero baseline cost");
    return (tec_base - tec_opt) / tec_base;
}

/// Evaluation summary of one schedule for one day.
struct ScheduleReport {
    std::string house_id;
    Date date{};
    std::string method;
    std::vector<int> actions;
    std::vector<double> delivered_kw;
    double sci = 0.0;
    double tec = 0.0;
    double par = 0.0;
    double reward_return = 0.0;
    bool load_match = false;
    DrClass dr_class = DrClass::bad;
};

} // namespace evq
