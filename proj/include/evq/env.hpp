#pragma once

#include <numbers>
#include <string_view>
#include <vector>

#include "evq/battery.hpp"
#include "evq/data.hpp"
#include "evq/stats.hpp"
#include "evq/tariff.hpp"

namespace evq {

enum class RewardVariant { ch6, ch7 };

inline std::string_view to_string(RewardVariant v) { return v == RewardVariant::ch6 ? "ch6" : "ch7"; }

inline RewardVariant parse_reward_variant(std::string_view s) {
    if (s == "ch6") return RewardVariant::ch6;
    if (s == "ch7") return RewardVariant::ch7;
    throw ConfigError("unknown reward variant '" + std::string(s) + "'");
}

/// Divisors mapping raw observations into [0, 1].
struct FeatureScaling {
    double res_max = 1.0;
    double pv_max = 1.0;
    double price_max = 1.0;
};

inline FeatureScaling fit_feature_scaling(const std::vector<DailyEpisode>& train, const TariffSchedule& tariff) {
    FeatureScaling f;
    f.res_max = 0.0;
    f.pv_max = 0.0;
    for (const auto& ep : train) {
        for (double v : ep.p_res) f.res_max = std::max(f.res_max, v);
        for (double v : ep.p_pv) f.pv_max = std::max(f.pv_max, v);
    }
    if (f.res_max <= 0.0) f.res_max = 1.0;
    if (f.pv_max <= 0.0) f.pv_max = 1.0;
    f.price_max = tariff.max_price();
    return f;
}

struct EnvConfig {
    RewardVariant variant = RewardVariant::ch7;
    double tolerance = 0.05;
    std::array<double, 5> weights{1.0, 1.0, 1.0, 1.0, 1.0};
    FeatureScaling scaling;
    double on_threshold = kDefaultOnThreshold;
    std::size_t horizon = kSlotsPerDay; // < 96 only for truncated oracle checks
    BatteryModel battery;
    TariffSchedule tariff;

    void validate() const {
        if (!(tolerance > 0.0)) throw ConfigError("env tolerance must be positive");
        for (double w : weights)
            if (!std::isfinite(w)) throw ConfigError("env reward weights must be finite");
        if (horizon < 1 || horizon > kSlotsPerDay) throw ConfigError("env horizon must lie in [1, 96]");
        if (!(scaling.res_max > 0.0 && scaling.pv_max > 0.0 && scaling.price_max > 0.0))
            throw ConfigError("feature scaling divisors must be positive");
        battery.validate();
    }

    std::size_t feature_count() const { return variant == RewardVariant::ch7 ? 7 : 6; }
};

// ---------------------------------------------------------------------------
// Sub-rewards

inline double reward_con(Action a, double cum_after, double target, double tolerance) {
    const bool within = cum_after / target <= 1.0 + tolerance;
    if (charging(a)) return within ? 1.0 : -10.0;
    return within ? -0.25 : 0.0;
}

/// Load-matching reward with a solar bonus folded in (+3 with PV, +2 without).
inline double reward_con_solar(Action a, double cum_after, double target, double tolerance, double p_pv) {
    const bool within = cum_after / target <= 1.0 + tolerance;
    if (charging(a)) {
        if (!within) return -10.0;
        return p_pv > 0.0 ? 3.0 : 2.0;
    }
    return within ? -0.25 : 0.0;
}

inline double reward_hist(Action a, double freq, double q25) {
    return (charging(a) && freq < q25) ? -2.0 : 0.0;
}

inline double reward_cost(Action a, double cost, double q25, double q50, double q75) {
    if (!charging(a)) return 0.0;
    if (cost <= q25) return 2.0;
    if (cost <= q50) return 1.0;
    if (cost <= q75) return -1.0;
    return -2.0;
}

inline double reward_solar(Action a, double p_pv) { return (charging(a) && p_pv > 0.0) ? 2.0 : 0.0; }

inline double reward_soc(Action a, bool violated) { return (charging(a) && violated) ? -10.0 : 0.0; }

inline double reward_flex(Action a, double u_flex, double q25, double q50, double q75) {
    if (!charging(a)) return 0.0;
    if (u_flex <= q25) return -2.0;
    if (u_flex <= q50) return -1.0;
    if (u_flex <= q75) return 1.0;
    return 2.0;
}

inline bool check_load_match(double cum_final, double target, double tolerance) {
    const double ratio = cum_final / target;
    return ratio >= 1.0 - tolerance && ratio <= 1.0 + tolerance;
}

/// Sub-rewards of one step. `pref` holds the historical-frequency penalty
/// (ch7) or the flexibility reward (ch6); ch6 folds solar into `con`.
struct RewardBreakdown {
    double con = 0.0;
    double pref = 0.0;
    double cost = 0.0;
    double soc = 0.0;
    double solar = 0.0;

    double weighted(const std::array<double, 5>& w) const {
        return w[0] * con + w[1] * pref + w[2] * cost + w[3] * soc + w[4] * solar;
    }
};

// ---------------------------------------------------------------------------
// Exogenous inputs and the pure step function

/// Exogenous data driving one agent for one day. `p_pv` feeds the state and
/// the solar reward; `p_pv_cost` is the PV credited in the cost term (equal
/// to `p_pv` for a single household, a share of it in a community).
struct EnvInputs {
    std::string house_id;
    Date date{};
    int weekday = 0;
    SlotSeries p_res{};
    SlotSeries p_pv{};
    SlotSeries p_pv_cost{};
    double target = 0.0; // historical daily EV sum
};

inline EnvInputs make_env_inputs(const DailyEpisode& ep) {
    return {ep.house_id, ep.date, ep.weekday, ep.p_res, ep.p_pv, ep.p_pv, ep.ev_sum()};
}

struct SlotEval {
    double delivered = 0.0;
    double soc_after = 0.0;
    double cum_after = 0.0;
    bool violated = false;
    RewardBreakdown breakdown;
    double reward = 0.0;
};

inline SlotEval evaluate_slot(const EnvInputs& in, const BehaviorStats& stats, const EnvConfig& cfg,
                              std::size_t slot, double soc, double cum, Action a) {
    SlotEval e;
    e.soc_after = soc;
    e.cum_after = cum;
    if (charging(a)) {
        e.delivered = charge_power(cfg.battery, soc);
        const auto r = apply_charge(cfg.battery, soc, e.delivered);
        e.soc_after = r.soc;
        e.violated = r.violated;
        e.cum_after = cum + e.delivered;
    }
    const double price = cfg.tariff.price_at(slot);
    const double cost = step_cost(price, a, e.delivered, in.p_res[slot], in.p_pv_cost[slot]);
    const auto& cp = stats.cost;
    auto& b = e.breakdown;
    b.cost = reward_cost(a, cost, cp.q25, cp.q50, cp.q75);
    b.soc = reward_soc(a, e.violated);
    if (cfg.variant == RewardVariant::ch7) {
        const auto& fp = stats.frequency;
        b.con = reward_con(a, e.cum_after, in.target, cfg.tolerance);
        b.pref = reward_hist(a, fp.for_weekday(in.weekday)[slot], fp.q25_for_weekday(in.weekday));
        b.solar = reward_solar(a, in.p_pv[slot]);
    } else {
        const auto& fp = stats.frequency;
        b.con = reward_con_solar(a, e.cum_after, in.target, cfg.tolerance, in.p_pv[slot]);
        b.pref = reward_flex(a, fp.aggregate[slot], fp.aggregate_q25, fp.aggregate_q50, fp.aggregate_q75);
    }
    e.reward = b.weighted(cfg.weights);
    return e;
}

// ---------------------------------------------------------------------------
// Environment

struct TimeEncoding {
    double sin = 0.0;
    double cos = 1.0;
};

inline TimeEncoding encode_time(std::size_t slot) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(slot) / static_cast<double>(kSlotsPerDay);
    return {std::sin(angle), std::cos(angle)};
}

struct EnvState {
    std::size_t slot = 0;
    double p_res = 0.0;
    double p_pv = 0.0;
    double soc = 0.0;
    double p_ev_cum = 0.0;
    double price = 0.0;
    TimeEncoding time_enc;
    bool terminal = false;
};

struct StepOutcome {
    EnvState next_state;
    double reward = 0.0;
    RewardBreakdown breakdown;
    bool done = false;
    double delivered_kw = 0.0;
    bool violated = false;
};

/// Scales a state into the network's input vector.
inline std::vector<double> state_features(const EnvState& s, double target, const EnvConfig& cfg) {
    auto unit = [](double v) { return std::clamp(v, 0.0, 1.0); };
    std::vector<double> f;
    f.reserve(cfg.feature_count());
    f.push_back(unit(s.p_res / cfg.scaling.res_max));
    f.push_back(unit(s.p_pv / cfg.scaling.pv_max));
    f.push_back(unit(s.soc));
    f.push_back(unit(s.p_ev_cum / target));
    f.push_back(unit(s.price / cfg.scaling.price_max));
    if (cfg.variant == RewardVariant::ch7) {
        f.push_back(s.time_enc.sin);
        f.push_back(s.time_enc.cos);
    } else {
        f.push_back(static_cast<double>(s.slot) / static_cast<double>(kSlotsPerDay));
    }
    return f;
}

/// Single-household daily charging environment. One instance is not
/// thread-safe; separate instances may run concurrently.
class Env {
public:
    Env(EnvConfig cfg, BehaviorStats stats) : cfg_(std::move(cfg)), stats_(std::move(stats)) { cfg_.validate(); }

    EnvState reset(EnvInputs inputs) {
        if (!(inputs.target > 0.0)) throw EpisodeError("episode " + inputs.house_id + " has no EV load");
        const auto init = initial_soc(cfg_.battery, inputs.target);
        if (init.over_capacity)
            throw EpisodeError("episode " + inputs.house_id + " " + format_date(inputs.date) +
                               " exceeds one battery cycle");
        in_ = std::move(inputs);
        soc_ = init.soc;
        cum_ = 0.0;
        slot_ = 0;
        active_ = true;
        return observe();
    }

    EnvState reset(const DailyEpisode& ep) { return reset(make_env_inputs(ep)); }

    StepOutcome step(Action a) {
        if (!active_) throw LifecycleError("step called on a finished or unstarted episode");
        const SlotEval e = evaluate_slot(in_, stats_, cfg_, slot_, soc_, cum_, a);
        soc_ = e.soc_after;
        cum_ = e.cum_after;
        ++slot_;
        StepOutcome out;
        out.reward = e.reward;
        out.breakdown = e.breakdown;
        out.delivered_kw = e.delivered;
        out.violated = e.violated;
        out.done = slot_ >= cfg_.horizon;
        if (out.done) active_ = false;
        out.next_state = observe();
        return out;
    }

    std::vector<double> features(const EnvState& s) const { return state_features(s, in_.target, cfg_); }

    const EnvConfig& config() const noexcept { return cfg_; }
    const BehaviorStats& stats() const noexcept { return stats_; }
    const EnvInputs& inputs() const noexcept { return in_; }
    bool done() const noexcept { return !active_; }

private:
    EnvState observe() const {
        EnvState s;
        s.slot = slot_;
        s.soc = soc_;
        s.p_ev_cum = cum_;
        s.time_enc = encode_time(slot_);
        s.terminal = slot_ >= cfg_.horizon;
        if (slot_ < kSlotsPerDay) {
            s.p_res = in_.p_res[slot_];
            s.p_pv = in_.p_pv[slot_];
            s.price = cfg_.tariff.price_at(slot_);
        }
        return s;
    }

    EnvConfig cfg_;
    BehaviorStats stats_;
    EnvInputs in_;
    double soc_ = 0.0;
    double cum_ = 0.0;
    std::size_t slot_ = 0;
    bool active_ = false;
};

/// Actions, deliveries and rewards of one replayed day.
struct Rollout {
    std::vector<Action> actions;
    std::vector<double> delivered;
    std::vector<double> rewards;
    double total_reward = 0.0;
    double final_cum = 0.0;
};

inline double discounted_return(std::span<const double> rewards, double gamma) {
    double g = 0.0;
    for (std::size_t i = rewards.size(); i-- > 0;) g = rewards[i] + gamma * g;
    return g;
}

/// Replays a fixed schedule from reset; the schedule must cover the horizon.
inline Rollout replay_schedule(Env& env, EnvInputs inputs, std::span<const Action> schedule) {
    env.reset(std::move(inputs));
    Rollout r;
    for (std::size_t t = 0; !env.done(); ++t) {
        if (t >= schedule.size()) throw LifecycleError("schedule shorter than the episode horizon");
        const auto out = env.step(schedule[t]);
        r.actions.push_back(schedule[t]);
        r.delivered.push_back(out.delivered_kw);
        r.rewards.push_back(out.reward);
        r.total_reward += out.reward;
        r.final_cum = out.next_state.p_ev_cum;
    }
    return r;
}

} // namespace evq
