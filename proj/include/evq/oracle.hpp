#pragma once

#include <limits>
#include <vector>

#include "evq/env.hpp"

namespace evq {

/// Controllable state of the daily environment: the slot and the numbers of
/// high- and low-power charges so far. SoC and cumulative load follow from
/// the counts because high-power charges always precede low-power ones.
struct DpState {
    std::size_t slot = 0;
    std::size_t n_high = 0;
    std::size_t n_low = 0;
};

struct OracleResult {
    double value = 0.0; // discounted return
    std::vector<Action> schedule;
};

namespace detail {

struct ChargeLevel {
    DpState counts;
    double soc = 0.0;
    double cum = 0.0;
};

// SoC and cumulative load after k charges, computed with the same
// floating-point operations the environment performs.
inline std::vector<ChargeLevel> charge_chain(const EnvConfig& cfg, double soc0, std::size_t max_k) {
    std::vector<ChargeLevel> chain(max_k + 1);
    chain[0] = {{0, 0, 0}, soc0, 0.0};
    for (std::size_t k = 0; k < max_k; ++k) {
        const auto& cur = chain[k];
        const double p = charge_power(cfg.battery, cur.soc);
        const auto r = apply_charge(cfg.battery, cur.soc, p);
        auto& nxt = chain[k + 1];
        nxt.counts = cur.counts;
        if (p == cfg.battery.p_high) ++nxt.counts.n_high;
        else ++nxt.counts.n_low;
        nxt.soc = r.soc;
        nxt.cum = cur.cum + p;
    }
    return chain;
}

inline double start_soc(const EnvConfig& cfg, const EnvInputs& in) {
    if (!(in.target > 0.0)) throw EpisodeError("episode has no EV load");
    const auto init = initial_soc(cfg.battery, in.target);
    if (init.over_capacity) throw EpisodeError("episode exceeds one battery cycle");
    return init.soc;
}

} // namespace detail

/// Exact optimum of the discounted return by backward induction over
/// (slot, charge count). Ties go to idle, which makes the returned schedule
/// the lexicographically smallest optimal one.
inline OracleResult dp_optimal(const EnvInputs& in, const BehaviorStats& stats, const EnvConfig& cfg, double gamma) {
    cfg.validate();
    const std::size_t H = cfg.horizon;
    const auto chain = detail::charge_chain(cfg, detail::start_soc(cfg, in), H);

    // value[t][k], k <= t; choice[t][k] = charge?
    std::vector<std::vector<double>> value(H + 1);
    std::vector<std::vector<char>> choice(H);
    value[H].assign(H + 1, 0.0);
    for (std::size_t t = H; t-- > 0;) {
        value[t].resize(t + 1);
        choice[t].resize(t + 1);
        for (std::size_t k = 0; k <= t; ++k) {
            const auto& lv = chain[k];
            const double q_idle =
                evaluate_slot(in, stats, cfg, t, lv.soc, lv.cum, Action::idle).reward + gamma * value[t + 1][k];
            const double q_charge =
                evaluate_slot(in, stats, cfg, t, lv.soc, lv.cum, Action::charge).reward + gamma * value[t + 1][k + 1];
            const bool charge = q_charge > q_idle;
            value[t][k] = charge ? q_charge : q_idle;
            choice[t][k] = charge;
        }
    }
    OracleResult res;
    res.value = value[0][0];
    std::size_t k = 0;
    for (std::size_t t = 0; t < H; ++t) {
        const bool c = choice[t][k];
        res.schedule.push_back(c ? Action::charge : Action::idle);
        if (c) ++k;
    }
    return res;
}

/// Counts reached after following a schedule; for cross-checking DpState.
inline DpState dp_state_after(const EnvInputs& in, const EnvConfig& cfg, std::span<const Action> schedule) {
    std::size_t k = 0;
    for (Action a : schedule) k += charging(a) ? 1 : 0;
    auto chain = detail::charge_chain(cfg, detail::start_soc(cfg, in), k);
    DpState s = chain[k].counts;
    s.slot = schedule.size();
    return s;
}

inline constexpr std::size_t kBruteForceMaxHorizon = 14;

/// Exhaustive search over all 2^T schedules, replayed through the
/// environment. First strictly better schedule in lexicographic order wins.
inline OracleResult brute_force(const EnvInputs& in, const BehaviorStats& stats, const EnvConfig& cfg, double gamma) {
    const std::size_t T = cfg.horizon;
    if (T > kBruteForceMaxHorizon)
        throw OracleError("brute force limited to horizons of " + std::to_string(kBruteForceMaxHorizon) + " slots");
    Env env(cfg, stats);
    OracleResult best;
    best.value = -std::numeric_limits<double>::infinity();
    std::vector<Action> schedule(T);
    for (std::uint32_t code = 0; code < (1u << T); ++code) {
        for (std::size_t t = 0; t < T; ++t)
            schedule[t] = ((code >> (T - 1 - t)) & 1u) ? Action::charge : Action::idle;
        const auto r = replay_schedule(env, in, schedule);
        const double g = discounted_return(r.rewards, gamma);
        if (g > best.value) {
            best.value = g;
            best.schedule = schedule;
        }
    }
    return best;
}

/// Historical charging replayed through the environment. Rewards come from
/// the simulated charger; metrics should use `historical_ev`.
struct UncontrolledResult {
    Rollout rollout;
    SlotSeries historical_ev{};
};

inline UncontrolledResult uncontrolled_replay(Env& env, const DailyEpisode& ep) {
    const double thr = env.config().on_threshold;
    std::vector<Action> schedule(kSlotsPerDay);
    for (std::size_t s = 0; s < kSlotsPerDay; ++s) schedule[s] = ep.p_ev[s] > thr ? Action::charge : Action::idle;
    return {replay_schedule(env, make_env_inputs(ep), schedule), ep.p_ev};
}

} // namespace evq
