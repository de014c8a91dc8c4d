#pragma once
// Command implementations behind the `evq` executable. Every command writes
// its artifacts under the output directory and throws evq::Error on failure.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "evq/community.hpp"
#include "evq/config.hpp"
#include "evq/data.hpp"
#include "evq/dqn.hpp"
#include "evq/env.hpp"
#include "evq/metrics.hpp"
#include "evq/model_io.hpp"
#include "evq/oracle.hpp"
#include "evq/stats.hpp"

namespace evq::app {

namespace fs = std::filesystem;

/// Command-line overrides layered over the config file.
struct Options {
    std::string config_path;
    std::optional<std::size_t> days;
    std::optional<std::size_t> houses;
    std::string mode = "ndqn";
    std::optional<std::size_t> n_step;
    std::optional<std::size_t> epochs;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> models;
    std::string split = "test";
    std::optional<std::size_t> verify_T;
    bool emit_traces = false;
    std::size_t jobs = 1;
    bool per_weekday = false;
};

inline RunConfig resolve_config(const Options& o) {
    RunConfig c = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
    if (o.days) c.synth.days = *o.days;
    if (o.houses) c.synth.houses = *o.houses;
    if (o.n_step) c.learner.n_step = *o.n_step;
    if (o.epochs) c.learner.epochs = *o.epochs;
    if (o.seed) {
        c.learner.seed = *o.seed;
        c.synth.seed = *o.seed;
    }
    if (o.out) c.output_dir = *o.out;
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Output helpers

inline std::string fmt(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
}

inline void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results must be
/// stored by index so output order does not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Data preparation

struct HouseData {
    std::string id;
    std::vector<DailyEpisode> all;
    std::vector<DailyEpisode> train;
    std::vector<DailyEpisode> test;
    BehaviorStats stats;
    EnvConfig env;
};

struct CommunityData {
    std::vector<std::string> ids;
    std::vector<CommunityEpisode> train;
    std::vector<CommunityEpisode> test;
    std::vector<BehaviorStats> stats;
    std::vector<EnvConfig> envs;
};

inline std::vector<DailyEpisode> load_source(const RunConfig& c) {
    if (c.source == DataSource::csv) return load_episodes(c.csv_path).episodes;
    return synth_generate(c.synth.seed, c.synth.houses, c.synth.days, c.synth.profile, c.battery);
}

inline std::vector<HouseData> prepare_houses(const RunConfig& c) {
    const auto eligible = filter_eligible(load_source(c), c.eligibility);
    if (eligible.empty()) throw StatsError("no eligible episodes in the dataset");
    std::vector<HouseData> out;
    for (auto& [id, days] : by_house(eligible)) {
        HouseData h;
        h.id = id;
        auto split = chronological_split(days, c.test_fraction);
        h.all = std::move(days);
        std::stable_sort(h.all.begin(), h.all.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
        h.train = std::move(split.train);
        h.test = std::move(split.test);
        if (h.train.empty()) throw StatsError("house " + id + " has no training days");
        h.env = c.env_config();
        h.env.scaling = fit_feature_scaling(h.train, c.tariff);
        h.stats = build_behavior_stats(h.train, c.tariff, h.env.on_threshold);
        out.push_back(std::move(h));
    }
    return out;
}

inline CommunityData prepare_community(const RunConfig& c, const std::vector<HouseData>& houses) {
    CommunityData d;
    std::vector<std::vector<DailyEpisode>> per_house;
    if (c.community.empty()) {
        for (const auto& h : houses) {
            d.ids.push_back(h.id);
            per_house.push_back(h.all);
        }
    } else {
        for (const auto& id : c.community) {
            auto it = std::find_if(houses.begin(), houses.end(), [&](const HouseData& h) { return h.id == id; });
            if (it == houses.end()) throw ConfigError("community house '" + id + "' has no eligible days");
            d.ids.push_back(id);
            per_house.push_back(it->all);
        }
    }
    auto days = align_community(per_house);
    if (days.empty()) throw StatsError("community houses share no eligible dates");
    const auto n_test = static_cast<std::size_t>(std::ceil(c.test_fraction * static_cast<double>(days.size())));
    const auto n_train = days.size() - n_test;
    if (n_train == 0) throw StatsError("community has no training days");
    d.train.assign(days.begin(), days.begin() + static_cast<std::ptrdiff_t>(n_train));
    d.test.assign(days.begin() + static_cast<std::ptrdiff_t>(n_train), days.end());
    for (std::size_t n = 0; n < d.ids.size(); ++n) {
        EnvConfig e = c.env_config();
        e.scaling = fit_community_scaling(d.train, n, c.tariff);
        d.envs.push_back(e);
        d.stats.push_back(build_behavior_stats(member_view(d.train, n), c.tariff, e.on_threshold));
    }
    return d;
}

/// A member's own-PV day, as an individually controlled household sees it.
inline DailyEpisode own_episode(const CommunityEpisode& c, std::size_t n) {
    const auto& h = c.households.at(n);
    DailyEpisode ep;
    ep.house_id = h.house_id;
    ep.date = c.date;
    ep.weekday = h.weekday;
    ep.p_res = h.p_res;
    ep.p_ev = h.p_ev;
    ep.p_pv = h.p_pv_own;
    return ep;
}

inline std::string model_path(const fs::path& dir, std::string_view mode, const std::string& house) {
    return (dir / (std::string(mode) + "_" + house + ".evqn")).string();
}

inline Mlp load_checked_model(const std::string& path, const EnvConfig& env) {
    Mlp net = load_model(path);
    if (net.input_size() != env.feature_count() || net.output_size() != 2)
        throw ShapeError("model '" + path + "' does not match the configured state/action shape");
    return net;
}

inline void check_mode(std::string_view mode) {
    if (mode != "dqn" && mode != "ndqn" && mode != "madqn") throw ConfigError("mode must be dqn, ndqn or madqn");
}

// ---------------------------------------------------------------------------
// synth

inline void cmd_synth(const RunConfig& c) {
    const fs::path dir = c.output_dir;
    ensure_dir(dir);
    std::ostringstream os;
    write_episodes_csv(os, synth_generate(c.synth.seed, c.synth.houses, c.synth.days, c.synth.profile, c.battery));
    write_file(dir / "dataset.csv", os.str());
}

// ---------------------------------------------------------------------------
// analyze

inline void cmd_analyze(const RunConfig& c, bool per_weekday) {
    const auto houses = prepare_houses(c);
    const fs::path dir = c.output_dir;
    ensure_dir(dir);
    std::ostringstream q;
    q << "house_id,profile,q25,q50,q75\n";
    for (const auto& h : houses) {
        const auto freq = build_charging_profile(h.all, c.env.on_threshold);
        const auto cost = build_cost_profile(h.all, c.tariff, c.env.on_threshold);

        std::ostringstream f;
        f << "weekday,slot,frequency\n";
        for (std::size_t s = 0; s < kSlotsPerDay; ++s) f << "all," << s << ',' << fmt(freq.aggregate[s]) << '\n';
        if (per_weekday)
            for (std::size_t wd = 0; wd < 7; ++wd)
                for (std::size_t s = 0; s < kSlotsPerDay; ++s)
                    f << wd << ',' << s << ',' << fmt(freq.per_weekday[wd][s]) << '\n';
        write_file(dir / ("frequency_" + h.id + ".csv"), f.str());

        std::ostringstream k;
        k << "slot,avg_cost\n";
        for (std::size_t s = 0; s < kSlotsPerDay; ++s) k << s << ',' << fmt(cost.avg_cost[s], 8) << '\n';
        write_file(dir / ("cost_" + h.id + ".csv"), k.str());

        q << h.id << ",frequency," << fmt(freq.aggregate_q25) << ',' << fmt(freq.aggregate_q50) << ','
          << fmt(freq.aggregate_q75) << '\n';
        q << h.id << ",cost," << fmt(cost.q25, 8) << ',' << fmt(cost.q50, 8) << ',' << fmt(cost.q75, 8) << '\n';
        if (per_weekday)
            for (std::size_t wd = 0; wd < 7; ++wd) {
                const auto qs = quartiles(freq.per_weekday[wd]);
                q << h.id << ",frequency_wd" << wd << ',' << fmt(qs.q25) << ',' << fmt(qs.q50) << ',' << fmt(qs.q75)
                  << '\n';
            }
    }
    write_file(dir / "quantiles.csv", q.str());
}

// ---------------------------------------------------------------------------
// train

inline std::string format_log(const std::vector<EpochLog>& log) {
    std::ostringstream os;
    os << "epoch,mean_return,epsilon,loss\n";
    for (const auto& e : log)
        os << e.epoch << ',' << fmt(e.mean_return, 9) << ',' << fmt(e.epsilon, 9) << ',' << fmt(e.loss, 9) << '\n';
    return os.str();
}

inline void cmd_train(const RunConfig& c, std::string_view mode) {
    check_mode(mode);
    const auto houses = prepare_houses(c);
    const fs::path dir = c.output_dir;
    ensure_dir(dir);
    DqnConfig lc = c.learner;
    if (mode == "dqn") lc.n_step = 1;

    if (mode == "madqn") {
        const auto comm = prepare_community(c, houses);
        const auto results = train_multi(comm.envs, comm.stats, comm.train, lc);
        for (std::size_t n = 0; n < comm.ids.size(); ++n) {
            save_model(model_path(dir, mode, comm.ids[n]), results[n].net);
            write_file(dir / (std::string(mode) + "_" + comm.ids[n] + "_log.csv"), format_log(results[n].log));
        }
        return;
    }
    for (const auto& h : houses) {
        const auto result = train(h.env, h.stats, to_inputs(h.train), lc);
        save_model(model_path(dir, mode, h.id), result.net);
        write_file(dir / (std::string(mode) + "_" + h.id + "_log.csv"), format_log(result.log));
    }
}

// ---------------------------------------------------------------------------
// eval

struct EvalRow {
    std::string house_id;
    Date date{};
    DrClass dr_class = DrClass::bad;
    std::string method;
    double sci = 0.0, tec = 0.0, par = 0.0, ret = 0.0;
    bool load_match = false;
    // per-slot trace
    SlotSeries p_res{}, p_pv{}, p_ev{};
    std::vector<int> actions;
};

inline EvalRow house_row(const DailyEpisode& ep, const std::string& method, const Rollout& r,
                         std::span<const double> ev, const EnvConfig& env) {
    EvalRow row;
    row.house_id = ep.house_id;
    row.date = ep.date;
    row.dr_class = classify_dr_day(ep);
    row.method = method;
    // A schedule that never charges covers nothing; report 0 instead of failing the run.
    row.sci = std::accumulate(ev.begin(), ev.end(), 0.0) > 0.0 ? sci(ev, ep.p_pv) : 0.0;
    row.tec = tec(ep.p_res, ev, ep.p_pv, env.tariff);
    row.par = par(ep.p_res, ev, ep.p_pv);
    row.ret = r.total_reward;
    row.load_match = check_load_match(std::accumulate(ev.begin(), ev.end(), 0.0), ep.ev_sum(), env.tolerance);
    row.p_res = ep.p_res;
    row.p_pv = ep.p_pv;
    std::copy(ev.begin(), ev.end(), row.p_ev.begin());
    for (Action a : r.actions) row.actions.push_back(static_cast<int>(a));
    return row;
}

/// Evaluation rows for one household day: uncontrolled, optimal and every
/// supplied policy, in that order.
inline std::vector<EvalRow> eval_house_day(const HouseData& h, const DailyEpisode& ep, const RunConfig& c,
                                           const std::vector<std::pair<std::string, const Mlp*>>& policies) {
    std::vector<EvalRow> rows;
    Env env(h.env, h.stats);
    const auto uc = uncontrolled_replay(env, ep);
    rows.push_back(house_row(ep, "UC", uc.rollout, uc.historical_ev, h.env));

    const auto in = make_env_inputs(ep);
    const auto opt = dp_optimal(in, h.stats, h.env, c.learner.gamma);
    const auto dp = replay_schedule(env, in, opt.schedule);
    rows.push_back(house_row(ep, "DP", dp, dp.delivered, h.env));

    for (const auto& [name, net] : policies) {
        const auto r = greedy_rollout(*net, env, in);
        rows.push_back(house_row(ep, name, r, r.delivered, h.env));
    }
    return rows;
}

struct CommunitySchedules {
    SeriesList p_res, p_ev, p_pv_own;
    double ret = 0.0;
    bool load_match = true;
};

inline EvalRow community_row(const CommunityEpisode& c, const std::string& method, const CommunitySchedules& s,
                             const RunConfig& cfg) {
    EvalRow row;
    row.house_id = "community";
    row.date = c.date;
    row.method = method;
    bool good = true;
    for (std::size_t n = 0; n < c.size(); ++n)
        good = good && classify_dr_day(member_view({c}, n).front()) == DrClass::good;
    row.dr_class = good ? DrClass::good : DrClass::bad;
    const std::span<const double> shared(c.p_pv_shared);
    double ev_total = 0.0;
    for (const auto& e : s.p_ev) ev_total += std::accumulate(e.begin(), e.end(), 0.0);
    if (!(ev_total > 0.0)) {
        row.sci = 0.0;
    } else if (method == "COC") {
        row.sci = sci_comm(s.p_ev, shared);
    } else {
        row.sci = sci_ind(s.p_ev, s.p_pv_own);
    }
    if (method == "COC") {
        row.tec = tec_comm(s.p_res, s.p_ev, shared, cfg.tariff);
    } else {
        row.tec = 0.0;
        for (std::size_t n = 0; n < c.size(); ++n) row.tec += tec(s.p_res[n], s.p_ev[n], s.p_pv_own[n], cfg.tariff);
    }
    row.par = par_comm(s.p_res, s.p_ev, shared, cfg.par_mode);
    row.ret = s.ret;
    row.load_match = s.load_match;
    return row;
}

/// UC, IOC (if individual models are given) and COC rows for one community day.
inline std::vector<EvalRow> eval_community_day(const CommunityData& d, const std::vector<HouseData>& houses,
                                               const CommunityEpisode& c, const RunConfig& cfg,
                                               const std::vector<const Mlp*>& ioc, const std::vector<Mlp>& coc) {
    std::vector<EvalRow> rows;
    auto house_of = [&](const std::string& id) -> const HouseData& {
        return *std::find_if(houses.begin(), houses.end(), [&](const HouseData& h) { return h.id == id; });
    };
    auto base = [&] {
        CommunitySchedules s;
        for (const auto& h : c.households) {
            s.p_res.emplace_back(h.p_res.begin(), h.p_res.end());
            s.p_pv_own.emplace_back(h.p_pv_own.begin(), h.p_pv_own.end());
        }
        return s;
    };

    CommunitySchedules uc = base();
    for (std::size_t n = 0; n < c.size(); ++n) {
        const auto& h = house_of(d.ids[n]);
        Env env(h.env, h.stats);
        const auto r = uncontrolled_replay(env, own_episode(c, n));
        uc.p_ev.emplace_back(r.historical_ev.begin(), r.historical_ev.end());
        uc.ret += r.rollout.total_reward;
    }
    rows.push_back(community_row(c, "UC", uc, cfg));

    if (!ioc.empty()) {
        CommunitySchedules s = base();
        for (std::size_t n = 0; n < c.size(); ++n) {
            const auto& h = house_of(d.ids[n]);
            Env env(h.env, h.stats);
            const auto ep = own_episode(c, n);
            const auto r = greedy_rollout(*ioc[n], env, ep);
            s.p_ev.push_back(r.delivered);
            s.ret += r.total_reward;
            s.load_match = s.load_match && check_load_match(r.final_cum, ep.ev_sum(), h.env.tolerance);
        }
        rows.push_back(community_row(c, "IOC", s, cfg));
    }

    CommunitySchedules s = base();
    CommunityEnv env(d.envs, d.stats);
    auto state = env.reset(c);
    std::vector<Action> actions(c.size());
    s.p_ev.assign(c.size(), {});
    while (!env.done()) {
        for (std::size_t n = 0; n < c.size(); ++n)
            actions[n] = greedy_action(coc[n].forward(env.agent(n).features(state.agents[n])));
        const auto outs = env.step_all(actions);
        for (std::size_t n = 0; n < c.size(); ++n) {
            s.p_ev[n].push_back(outs[n].delivered_kw);
            s.ret += outs[n].reward;
            state.agents[n] = outs[n].next_state;
        }
    }
    for (std::size_t n = 0; n < c.size(); ++n)
        s.load_match = s.load_match && check_load_match(state.agents[n].p_ev_cum, series_sum(c.households[n].p_ev),
                                                        d.envs[n].tolerance);
    rows.push_back(community_row(c, "COC", s, cfg));
    return rows;
}

inline nlohmann::json summarize(const std::vector<const EvalRow*>& rows) {
    // method -> class -> accumulators
    struct Acc {
        double sci = 0, tec = 0, par = 0, ret = 0, match = 0;
        std::size_t n = 0;
    };
    std::map<std::string, std::map<std::string, Acc>> acc;
    for (const auto* r : rows)
        for (const std::string& cls : {std::string(to_string(r->dr_class)), std::string("all")}) {
            auto& a = acc[r->method][cls];
            a.sci += r->sci;
            a.tec += r->tec;
            a.par += r->par;
            a.ret += r->ret;
            a.match += r->load_match ? 1.0 : 0.0;
            ++a.n;
        }
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [method, classes] : acc)
        for (const auto& [cls, a] : classes) {
            const double n = static_cast<double>(a.n);
            j[method][cls] = {{"days", a.n},          {"sci", a.sci / n}, {"tec", a.tec / n},
                              {"par", a.par / n},     {"return", a.ret / n},
                              {"load_match_rate", a.match / n}};
        }
    return j;
}

inline void cmd_eval(const RunConfig& c, const Options& o) {
    if (o.split != "train" && o.split != "test") throw ConfigError("split must be 'train' or 'test'");
    const auto houses = prepare_houses(c);
    const fs::path dir = c.output_dir;
    ensure_dir(dir);

    // Individual policies found in the model directory.
    std::vector<std::vector<std::pair<std::string, Mlp>>> models(houses.size());
    if (o.models)
        for (std::size_t i = 0; i < houses.size(); ++i)
            for (const auto& [mode, label] : {std::pair{"dqn", "DQN"}, std::pair{"ndqn", "NDQN"}}) {
                const auto path = model_path(*o.models, mode, houses[i].id);
                if (fs::exists(path)) models[i].emplace_back(label, load_checked_model(path, houses[i].env));
            }

    struct Task {
        std::size_t house;
        const DailyEpisode* ep;
    };
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < houses.size(); ++i)
        for (const auto& ep : o.split == "test" ? houses[i].test : houses[i].train) tasks.push_back({i, &ep});
    if (tasks.empty()) throw StatsError("the " + o.split + " split is empty");

    std::vector<std::vector<EvalRow>> results(tasks.size());
    parallel_for(tasks.size(), o.jobs, [&](std::size_t k) {
        const auto& t = tasks[k];
        std::vector<std::pair<std::string, const Mlp*>> policies;
        for (const auto& [label, net] : models[t.house]) policies.emplace_back(label, &net);
        results[k] = eval_house_day(houses[t.house], *t.ep, c, policies);
    });

    // Community comparison when multi-agent models are present.
    std::vector<std::vector<EvalRow>> comm_results;
    if (o.models) {
        const auto probe = prepare_community(c, houses);
        bool have_coc = true;
        for (const auto& id : probe.ids) have_coc = have_coc && fs::exists(model_path(*o.models, "madqn", id));
        if (have_coc) {
            std::vector<Mlp> coc;
            std::vector<const Mlp*> ioc;
            for (std::size_t n = 0; n < probe.ids.size(); ++n) {
                coc.push_back(load_checked_model(model_path(*o.models, "madqn", probe.ids[n]), probe.envs[n]));
                const auto hit = std::find_if(houses.begin(), houses.end(),
                                              [&](const HouseData& h) { return h.id == probe.ids[n]; });
                const auto& own = models[static_cast<std::size_t>(hit - houses.begin())];
                const Mlp* pick = nullptr;
                for (const auto& [label, net] : own)
                    if (label == "NDQN" || (!pick && label == "DQN")) pick = &net;
                if (pick) ioc.push_back(pick);
            }
            if (ioc.size() != probe.ids.size()) ioc.clear();
            const auto& days = o.split == "test" ? probe.test : probe.train;
            comm_results.resize(days.size());
            parallel_for(days.size(), o.jobs, [&](std::size_t k) {
                comm_results[k] = eval_community_day(probe, houses, days[k], c, ioc, coc);
            });
        }
    }

    std::ostringstream csv;
    csv << "house_id,date,dr_class,method,sci,tec,par,return,load_match\n";
    std::vector<const EvalRow*> house_rows, comm_rows;
    std::map<std::string, std::vector<const EvalRow*>> per_house;
    auto emit = [&](const EvalRow& r) {
        csv << r.house_id << ',' << format_date(r.date) << ',' << to_string(r.dr_class) << ',' << r.method << ','
            << fmt(r.sci) << ',' << fmt(r.tec) << ',' << fmt(r.par) << ',' << fmt(r.ret) << ','
            << (r.load_match ? 1 : 0) << '\n';
    };
    for (const auto& rs : results)
        for (const auto& r : rs) {
            emit(r);
            house_rows.push_back(&r);
            per_house[r.house_id].push_back(&r);
        }
    for (const auto& rs : comm_results)
        for (const auto& r : rs) {
            emit(r);
            comm_rows.push_back(&r);
        }
    write_file(dir / ("eval_" + o.split + ".csv"), csv.str());

    nlohmann::json summary;
    summary["split"] = o.split;
    summary["aggregate"] = summarize(house_rows);
    for (const auto& [id, rows] : per_house) summary["houses"][id] = summarize(rows);
    if (!comm_rows.empty()) summary["community"] = summarize(comm_rows);
    write_file(dir / ("summary_" + o.split + ".json"), summary.dump(2) + "\n");

    if (o.emit_traces) {
        const fs::path tdir = dir / "traces";
        ensure_dir(tdir);
        for (const auto* r : house_rows) {
            std::ostringstream t;
            t << "slot,price,p_res,p_pv,action,p_ev\n";
            for (std::size_t s = 0; s < kSlotsPerDay; ++s)
                t << s << ',' << fmt(c.tariff.price_at(s), 5) << ',' << fmt(r->p_res[s], 4) << ','
                  << fmt(r->p_pv[s], 4) << ',' << (s < r->actions.size() ? r->actions[s] : 0) << ','
                  << fmt(r->p_ev[s], 4) << '\n';
            write_file(tdir / (r->house_id + "_" + format_date(r->date) + "_" + r->method + ".csv"), t.str());
        }
    }
}

// ---------------------------------------------------------------------------
// oracle

inline void cmd_oracle(const RunConfig& c, const Options& o) {
    if (o.split != "train" && o.split != "test") throw ConfigError("split must be 'train' or 'test'");
    check_mode(o.mode);
    const auto houses = prepare_houses(c);
    const fs::path dir = c.output_dir;
    ensure_dir(dir);
    const double gamma = c.learner.gamma;

    struct Task {
        std::size_t house;
        const DailyEpisode* ep;
    };
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < houses.size(); ++i)
        for (const auto& ep : o.split == "test" ? houses[i].test : houses[i].train) tasks.push_back({i, &ep});
    if (tasks.empty()) throw StatsError("the " + o.split + " split is empty");

    std::vector<std::optional<Mlp>> nets(houses.size());
    if (o.models && o.mode != "madqn")
        for (std::size_t i = 0; i < houses.size(); ++i)
            nets[i] = load_checked_model(model_path(*o.models, o.mode, houses[i].id), houses[i].env);

    struct Line {
        double opt = 0, pol = 0;
        bool verified = true;
        std::string verify;
    };
    std::vector<Line> lines(tasks.size());
    parallel_for(tasks.size(), o.jobs, [&](std::size_t k) {
        const auto& h = houses[tasks[k].house];
        const auto& ep = *tasks[k].ep;
        const auto in = make_env_inputs(ep);
        Env env(h.env, h.stats);
        lines[k].opt = dp_optimal(in, h.stats, h.env, gamma).value;
        const auto& net = nets[tasks[k].house];
        const Rollout r = net ? greedy_rollout(*net, env, in) : uncontrolled_replay(env, ep).rollout;
        lines[k].pol = discounted_return(r.rewards, gamma);
        if (o.verify_T) {
            EnvConfig trunc = h.env;
            trunc.horizon = *o.verify_T;
            const auto bf = brute_force(in, h.stats, trunc, gamma);
            const auto dp = dp_optimal(in, h.stats, trunc, gamma);
            const double diff = std::abs(bf.value - dp.value);
            const bool same = bf.schedule == dp.schedule;
            lines[k].verified = diff <= 1e-9 && same;
            lines[k].verify = h.id + "," + format_date(ep.date) + "," + std::to_string(*o.verify_T) + "," +
                              fmt(dp.value, 9) + "," + fmt(bf.value, 9) + "," + fmt(diff, 12) + "," +
                              (same ? "1" : "0") + "\n";
        }
    });

    std::ostringstream csv;
    csv << "house_id,date,policy,optimal_return,policy_return,ratio\n";
    const std::string policy = o.models ? o.mode : "uncontrolled";
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        const auto& ep = *tasks[k].ep;
        csv << ep.house_id << ',' << format_date(ep.date) << ',' << policy << ',' << fmt(lines[k].opt, 9) << ','
            << fmt(lines[k].pol, 9) << ',' << fmt(lines[k].pol / lines[k].opt) << '\n';
    }
    write_file(dir / ("oracle_" + o.split + ".csv"), csv.str());

    if (o.verify_T) {
        std::ostringstream v;
        v << "house_id,date,T,dp_return,brute_force_return,abs_diff,same_schedule\n";
        bool ok = true;
        for (const auto& l : lines) {
            v << l.verify;
            ok = ok && l.verified;
        }
        write_file(dir / "oracle_verify.csv", v.str());
        if (!ok) throw OracleError("dynamic programming and brute force disagree; see oracle_verify.csv");
    }
}

} // namespace evq::app
