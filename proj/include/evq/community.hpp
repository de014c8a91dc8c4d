#pragma once

#include <map>
#include <string>
#include <vector>

#include "evq/env.hpp"

namespace evq {

struct CommunityHousehold {
    std::string house_id;
    int weekday = 0;
    SlotSeries p_res{};
    SlotSeries p_ev{};
    SlotSeries p_pv_own{}; // the member's own panel, kept for individual baselines
};

/// One day for N households sharing a PV installation that pools the
/// members' generation.
struct CommunityEpisode {
    Date date{};
    std::vector<CommunityHousehold> households;
    SlotSeries p_pv_shared{};

    std::size_t size() const noexcept { return households.size(); }
};

enum class PvSharePolicy { equal };

inline double pv_share(double p_pv_shared, std::size_t /*n*/, std::size_t count, PvSharePolicy = PvSharePolicy::equal) {
    if (count < 1) throw ConfigError("pv_share needs at least one household");
    return p_pv_shared / static_cast<double>(count);
}

/// Builds a community day from same-date episodes of distinct houses.
inline CommunityEpisode make_community_episode(const std::vector<DailyEpisode>& members) {
    if (members.empty()) throw EpisodeError("community needs at least one household");
    CommunityEpisode c;
    c.date = members.front().date;
    for (const auto& ep : members) {
        if (ep.date != c.date) throw EpisodeError("community members must share a date");
        for (std::size_t s = 0; s < kSlotsPerDay; ++s) c.p_pv_shared[s] += ep.p_pv[s];
        c.households.push_back({ep.house_id, ep.weekday, ep.p_res, ep.p_ev, ep.p_pv});
    }
    return c;
}

/// Aligns per-house day lists on the dates every house has, in date order.
inline std::vector<CommunityEpisode> align_community(const std::vector<std::vector<DailyEpisode>>& per_house) {
    if (per_house.empty()) throw EpisodeError("community needs at least one household");
    std::vector<std::map<Date, const DailyEpisode*>> index(per_house.size());
    for (std::size_t h = 0; h < per_house.size(); ++h)
        for (const auto& ep : per_house[h]) index[h][ep.date] = &ep;
    std::vector<CommunityEpisode> out;
    for (const auto& [date, ep0] : index[0]) {
        std::vector<DailyEpisode> members{*ep0};
        bool complete = true;
        for (std::size_t h = 1; h < index.size() && complete; ++h) {
            auto it = index[h].find(date);
            if (it == index[h].end()) complete = false;
            else members.push_back(*it->second);
        }
        if (complete) out.push_back(make_community_episode(members));
    }
    return out;
}

/// Agent n's view of a community day: own residual load and EV target, the
/// shared PV in the state and solar reward, and its PV share in the cost.
inline EnvInputs member_inputs(const CommunityEpisode& c, std::size_t n) {
    const auto& h = c.households.at(n);
    EnvInputs in;
    in.house_id = h.house_id;
    in.date = c.date;
    in.weekday = h.weekday;
    in.p_res = h.p_res;
    in.p_pv = c.p_pv_shared;
    for (std::size_t s = 0; s < kSlotsPerDay; ++s) in.p_pv_cost[s] = pv_share(c.p_pv_shared[s], n, c.size());
    in.target = series_sum(h.p_ev);
    return in;
}

/// Member n's days rewritten as the agent sees them (PV replaced by its
/// share of the pooled PV), for building cost statistics.
inline std::vector<DailyEpisode> member_view(const std::vector<CommunityEpisode>& days, std::size_t n) {
    std::vector<DailyEpisode> out;
    out.reserve(days.size());
    for (const auto& c : days) {
        const auto& h = c.households.at(n);
        DailyEpisode ep;
        ep.house_id = h.house_id;
        ep.date = c.date;
        ep.weekday = h.weekday;
        ep.p_res = h.p_res;
        ep.p_ev = h.p_ev;
        for (std::size_t s = 0; s < kSlotsPerDay; ++s) ep.p_pv[s] = pv_share(c.p_pv_shared[s], n, c.size());
        out.push_back(std::move(ep));
    }
    return out;
}

/// Feature scaling for community agents: PV divisor from the shared series.
inline FeatureScaling fit_community_scaling(const std::vector<CommunityEpisode>& days, std::size_t n,
                                            const TariffSchedule& tariff) {
    FeatureScaling f;
    f.res_max = 0.0;
    f.pv_max = 0.0;
    for (const auto& c : days) {
        for (double v : c.households.at(n).p_res) f.res_max = std::max(f.res_max, v);
        for (double v : c.p_pv_shared) f.pv_max = std::max(f.pv_max, v);
    }
    if (f.res_max <= 0.0) f.res_max = 1.0;
    if (f.pv_max <= 0.0) f.pv_max = 1.0;
    f.price_max = tariff.max_price();
    return f;
}

struct CommunityState {
    std::vector<EnvState> agents;
};

/// N household environments stepped in lockstep over one shared PV series.
class CommunityEnv {
public:
    /// One (config, stats) pair per household; configs may differ only in
    /// feature scaling.
    CommunityEnv(std::vector<EnvConfig> configs, std::vector<BehaviorStats> stats) {
        if (configs.size() != stats.size() || configs.empty())
            throw ConfigError("community needs one config and stats bundle per household");
        for (std::size_t n = 0; n < configs.size(); ++n) agents_.emplace_back(configs[n], stats[n]);
    }

    CommunityState reset(const CommunityEpisode& c) {
        if (c.size() != agents_.size()) throw EpisodeError("community episode size does not match agents");
        CommunityState s;
        for (std::size_t n = 0; n < agents_.size(); ++n) s.agents.push_back(agents_[n].reset(member_inputs(c, n)));
        return s;
    }

    std::vector<StepOutcome> step_all(std::span<const Action> actions) {
        if (actions.size() != agents_.size()) throw ShapeError("one action per household required");
        if (done()) throw LifecycleError("step_all called on a finished episode");
        std::vector<StepOutcome> out;
        out.reserve(agents_.size());
        for (std::size_t n = 0; n < agents_.size(); ++n) out.push_back(agents_[n].step(actions[n]));
        return out;
    }

    bool done() const { return agents_.front().done(); }
    std::size_t size() const noexcept { return agents_.size(); }
    Env& agent(std::size_t n) { return agents_.at(n); }
    const Env& agent(std::size_t n) const { return agents_.at(n); }

private:
    std::vector<Env> agents_;
};

} // namespace evq
