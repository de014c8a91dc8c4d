#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "evq/community.hpp"
#include "evq/env.hpp"
#include "evq/mlp.hpp"
#include "evq/replay.hpp"

namespace evq {

struct DqnConfig {
    double gamma = 0.99;
    std::size_t n_step = 4; // 1 = plain DQN
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    std::size_t epsilon_decay_steps = 20'000;
    std::size_t target_sync_every = 500; // gradient steps
    std::size_t epochs = 100;
    std::uint64_t seed = 0;
    std::vector<std::size_t> hidden{64, 64};
    std::size_t replay_capacity = 50'000;
    std::size_t learn_start = 1'000; // transitions stored before the first update
    std::size_t train_every = 1;     // env steps between update rounds
    std::size_t updates_per_round = 1;
    double max_grad_norm = 10.0; // 0 disables clipping
    bool keep_best = false;      // return the epoch snapshot with the best discounted greedy training return

    void validate() const {
        if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
        if (n_step < 1) throw ConfigError("n_step must be at least 1");
        if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
        if (batch_size < 1) throw ConfigError("batch_size must be positive");
        for (double e : {epsilon_start, epsilon_end})
            if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("epsilon values must lie in [0, 1]");
        if (target_sync_every < 1 || train_every < 1) throw ConfigError("sync and train intervals must be positive");
        if (replay_capacity < batch_size) throw ConfigError("replay capacity must hold at least one batch");
        if (max_grad_norm < 0.0) throw ConfigError("max_grad_norm must be non-negative");
        for (std::size_t h : hidden)
            if (h == 0) throw ConfigError("hidden layer sizes must be positive");
    }

    std::vector<std::size_t> layer_sizes(std::size_t inputs) const {
        std::vector<std::size_t> s{inputs};
        s.insert(s.end(), hidden.begin(), hidden.end());
        s.push_back(2);
        return s;
    }
};

/// Linear decay from start to end over the configured number of env steps.
inline double epsilon_at(const DqnConfig& cfg, std::size_t step) {
    if (cfg.epsilon_decay_steps == 0 || step >= cfg.epsilon_decay_steps) return cfg.epsilon_end;
    const double frac = static_cast<double>(step) / static_cast<double>(cfg.epsilon_decay_steps);
    return cfg.epsilon_start + frac * (cfg.epsilon_end - cfg.epsilon_start);
}

inline double max_q(std::span<const double> q) { return *std::max_element(q.begin(), q.end()); }

/// One-step Bellman target; the next-state values come from the target network.
inline double target_1step(double reward, std::span<const double> next_q_target, bool done, double gamma) {
    return done ? reward : reward + gamma * max_q(next_q_target);
}

/// Truncated n-step return with a single bootstrap after k = rewards.size()
/// steps; `bootstrap_q` is empty at episode end.
inline double target_nstep(std::span<const double> rewards, std::optional<std::span<const double>> bootstrap_q,
                           double gamma, std::size_t n) {
    if (rewards.empty() || rewards.size() > n) throw ConfigError("target_nstep needs 1..N rewards");
    double g = 0.0, w = 1.0;
    for (double r : rewards) {
        g += w * r;
        w *= gamma;
    }
    return bootstrap_q ? g + w * max_q(*bootstrap_q) : g;
}

/// Greedy choice with exact ties going to idle.
inline Action greedy_action(std::span<const double> q) {
    return q[1] > q[0] ? Action::charge : Action::idle;
}

inline Action select_action(const Mlp& net, std::span<const double> features, double epsilon, Rng& rng) {
    if (epsilon > 0.0 && rng.uniform() < epsilon) return rng.index(2) == 1 ? Action::charge : Action::idle;
    return greedy_action(net.forward(features));
}

struct EpochLog {
    std::size_t epoch = 0;
    double mean_return = 0.0;
    double epsilon = 0.0;
    double loss = 0.0;
};

struct TrainResult {
    Mlp net;
    std::vector<EpochLog> log;
};

/// Online network, target network, optimizer and replay for one agent.
class DqnAgent {
public:
    DqnAgent(const DqnConfig& cfg, std::size_t n_features, std::uint64_t seed)
        : cfg_(cfg),
          online_(Mlp::initialized(cfg.layer_sizes(n_features), seed)),
          target_(online_),
          buffer_(cfg.replay_capacity),
          acc_(cfg.n_step, cfg.gamma),
          rng_(seed ^ 0x9E3779B97F4A7C15ULL) {
        cfg_.validate();
        opt_.learning_rate = cfg.learning_rate;
    }

    Action act(std::span<const double> features) {
        return select_action(online_, features, epsilon_at(cfg_, env_steps_), rng_);
    }

    /// Records one environment step and runs any due updates. Returns the
    /// summed loss and number of updates performed.
    std::pair<double, std::size_t> observe(std::vector<double> state, Action a, double reward,
                                           const std::vector<double>& next_state, bool done) {
        for (auto& t : acc_.push(std::move(state), a, reward, next_state, done)) buffer_.push(std::move(t));
        ++env_steps_;
        double loss = 0.0;
        std::size_t updates = 0;
        if (buffer_.size() >= std::max(cfg_.learn_start, cfg_.batch_size) && env_steps_ % cfg_.train_every == 0) {
            for (std::size_t u = 0; u < cfg_.updates_per_round; ++u) {
                loss += learn();
                ++updates;
            }
        }
        return {loss, updates};
    }

    double epsilon() const { return epsilon_at(cfg_, env_steps_); }
    const Mlp& online() const noexcept { return online_; }
    std::size_t env_steps() const noexcept { return env_steps_; }
    std::size_t grad_steps() const noexcept { return grad_steps_; }
    const ReplayBuffer& buffer() const noexcept { return buffer_; }

private:
    double learn() {
        const auto idx = buffer_.sample_indices(cfg_.batch_size, rng_);
        RegressionBatch batch;
        batch.inputs.reserve(idx.size());
        for (std::size_t i : idx) {
            const Transition& t = buffer_.raw(i);
            double y = t.reward;
            if (!t.done) y += t.discount * max_q(target_.forward(t.next_state));
            batch.inputs.push_back(t.state);
            batch.actions.push_back(static_cast<std::size_t>(t.action));
            batch.targets.push_back(y);
        }
        const double loss = backward_and_step(online_, batch, opt_, cfg_.max_grad_norm);
        if (++grad_steps_ % cfg_.target_sync_every == 0) target_ = online_;
        return loss;
    }

    DqnConfig cfg_;
    Mlp online_;
    Mlp target_;
    AdamOptimizer opt_;
    ReplayBuffer buffer_;
    NStepAccumulator acc_;
    Rng rng_;
    std::size_t env_steps_ = 0;
    std::size_t grad_steps_ = 0;
};

/// Epsilon-free rollout of a network's greedy policy.
inline Rollout greedy_rollout(const Mlp& net, Env& env, EnvInputs inputs) {
    auto state = env.reset(std::move(inputs));
    Rollout r;
    while (!env.done()) {
        const Action a = greedy_action(net.forward(env.features(state)));
        const auto out = env.step(a);
        r.actions.push_back(a);
        r.delivered.push_back(out.delivered_kw);
        r.rewards.push_back(out.reward);
        r.total_reward += out.reward;
        r.final_cum = out.next_state.p_ev_cum;
        state = out.next_state;
    }
    return r;
}

inline Rollout greedy_rollout(const Mlp& net, Env& env, const DailyEpisode& ep) {
    return greedy_rollout(net, env, make_env_inputs(ep));
}

namespace detail {

inline std::vector<std::size_t> epoch_order(std::size_t n, Rng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    return order;
}

inline double mean_greedy_return(const Mlp& net, Env& env, const std::vector<EnvInputs>& days, double gamma) {
    double sum = 0.0;
    for (const auto& d : days) sum += discounted_return(greedy_rollout(net, env, d).rewards, gamma);
    return sum / static_cast<double>(days.size());
}

} // namespace detail

/// Trains one agent on a household's days. Deterministic for a fixed seed.
inline TrainResult train(const EnvConfig& env_cfg, const BehaviorStats& stats, const std::vector<EnvInputs>& days,
                         const DqnConfig& cfg) {
    if (days.empty()) throw ConfigError("training set is empty");
    cfg.validate();
    Env env(env_cfg, stats);
    DqnAgent agent(cfg, env_cfg.feature_count(), cfg.seed);
    Rng order_rng(cfg.seed + 0x5bd1e995ULL);
    TrainResult result{agent.online(), {}};
    double best = -std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double ret_sum = 0.0, loss_sum = 0.0;
        std::size_t updates = 0;
        for (std::size_t i : detail::epoch_order(days.size(), order_rng)) {
            auto state = env.reset(days[i]);
            auto feat = env.features(state);
            while (!env.done()) {
                const Action a = agent.act(feat);
                const auto out = env.step(a);
                auto next_feat = env.features(out.next_state);
                const auto [l, u] = agent.observe(std::move(feat), a, out.reward, next_feat, out.done);
                loss_sum += l;
                updates += u;
                ret_sum += out.reward;
                feat = std::move(next_feat);
            }
        }
        EpochLog log{epoch + 1, ret_sum / static_cast<double>(days.size()), agent.epsilon(),
                     updates ? loss_sum / static_cast<double>(updates) : 0.0};
        result.log.push_back(log);
        if (cfg.keep_best) {
            const double g = detail::mean_greedy_return(agent.online(), env, days, cfg.gamma);
            if (g > best) {
                best = g;
                result.net = agent.online();
            }
        }
    }
    if (!cfg.keep_best) result.net = agent.online();
    return result;
}

inline std::vector<EnvInputs> to_inputs(const std::vector<DailyEpisode>& days) {
    std::vector<EnvInputs> out;
    out.reserve(days.size());
    for (const auto& d : days) out.push_back(make_env_inputs(d));
    return out;
}

/// Trains N agents in lockstep over community days; agent n is seeded with
/// seed + n and learns only from its own transitions.
inline std::vector<TrainResult> train_multi(const std::vector<EnvConfig>& env_cfgs,
                                            const std::vector<BehaviorStats>& stats,
                                            const std::vector<CommunityEpisode>& days, const DqnConfig& cfg) {
    if (days.empty()) throw ConfigError("training set is empty");
    cfg.validate();
    CommunityEnv env(env_cfgs, stats);
    const std::size_t N = env.size();
    std::vector<DqnAgent> agents;
    agents.reserve(N);
    for (std::size_t n = 0; n < N; ++n) agents.emplace_back(cfg, env_cfgs[n].feature_count(), cfg.seed + n);
    Rng order_rng(cfg.seed + 0x5bd1e995ULL);
    std::vector<TrainResult> results;
    for (const auto& a : agents) results.push_back({a.online(), {}});
    std::vector<double> best(N, -std::numeric_limits<double>::infinity());

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<double> ret_sum(N, 0.0), loss_sum(N, 0.0);
        std::vector<std::size_t> updates(N, 0);
        for (std::size_t i : detail::epoch_order(days.size(), order_rng)) {
            const auto state = env.reset(days[i]);
            std::vector<std::vector<double>> feat(N);
            for (std::size_t n = 0; n < N; ++n) feat[n] = env.agent(n).features(state.agents[n]);
            std::vector<Action> actions(N);
            while (!env.done()) {
                for (std::size_t n = 0; n < N; ++n) actions[n] = agents[n].act(feat[n]);
                const auto outs = env.step_all(actions);
                for (std::size_t n = 0; n < N; ++n) {
                    auto next_feat = env.agent(n).features(outs[n].next_state);
                    const auto [l, u] =
                        agents[n].observe(std::move(feat[n]), actions[n], outs[n].reward, next_feat, outs[n].done);
                    loss_sum[n] += l;
                    updates[n] += u;
                    ret_sum[n] += outs[n].reward;
                    feat[n] = std::move(next_feat);
                }
            }
        }
        for (std::size_t n = 0; n < N; ++n) {
            results[n].log.push_back({epoch + 1, ret_sum[n] / static_cast<double>(days.size()), agents[n].epsilon(),
                                      updates[n] ? loss_sum[n] / static_cast<double>(updates[n]) : 0.0});
            if (cfg.keep_best) {
                std::vector<EnvInputs> member_days;
                for (const auto& c : days) member_days.push_back(member_inputs(c, n));
                Env probe(env_cfgs[n], stats[n]);
                const double g = detail::mean_greedy_return(agents[n].online(), probe, member_days, cfg.gamma);
                if (g > best[n]) {
                    best[n] = g;
                    results[n].net = agents[n].online();
                }
            }
        }
    }
    if (!cfg.keep_best)
        for (std::size_t n = 0; n < N; ++n) results[n].net = agents[n].online();
    return results;
}

} // namespace evq
