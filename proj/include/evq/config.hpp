#pragma once
// JSON run configuration. Every section is optional; absent keys keep their
// defaults, unknown keys are rejected.

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "evq/battery.hpp"
#include "evq/common.hpp"
#include "evq/data.hpp"
#include "evq/dqn.hpp"
#include "evq/env.hpp"
#include "evq/metrics.hpp"
#include "evq/tariff.hpp"

namespace evq {

enum class DataSource { synth, csv };

struct SynthSettings {
    std::uint64_t seed = 0;
    std::size_t houses = 3;
    std::size_t days = 120;
    SynthProfile profile;
};

struct RunConfig {
    DataSource source = DataSource::synth;
    std::string csv_path;
    SynthSettings synth;
    EligibilityCriteria eligibility;
    TariffSchedule tariff;
    BatteryModel battery;
    EnvConfig env; // scaling is fitted per run; tariff and battery copied in by env_config()
    DqnConfig learner;
    std::vector<std::string> community; // house ids; empty = every eligible house
    double test_fraction = 0.3;
    CommunityParMode par_mode = CommunityParMode::aggregated;
    std::string output_dir = "out";

    EnvConfig env_config() const {
        EnvConfig c = env;
        c.tariff = tariff;
        c.battery = battery;
        return c;
    }

    void validate() const {
        if (source == DataSource::csv && csv_path.empty()) throw ConfigError("data.csv_path required for csv source");
        if (synth.houses < 1 || synth.days < 1) throw ConfigError("data.synth houses and days must be positive");
        synth.profile.validate();
        eligibility.validate();
        battery.validate();
        EnvConfig e = env_config();
        e.validate();
        learner.validate();
        if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw ConfigError("split.test_fraction must lie in [0, 1)");
        if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
    }
};

namespace detail {

using nlohmann::json;

inline void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
}

inline void check_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
    require_object(j, where);
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError("unknown key '" + where + "." + key + "'");
    }
}

template <class T>
void read(const json& j, const std::string& where, const char* key, T& out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->template get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for '" + where + "." + key + "'");
    }
}

inline void read_synth(const json& j, SynthSettings& s) {
    const std::string w = "data.synth";
    check_keys(j, w,
               {"seed", "houses", "days", "start_date", "daylight_start_slot", "daylight_end_slot", "pv_peak_kw",
                "cloud_min", "pv_noise", "res_base_kw", "res_morning_kw", "res_evening_kw", "res_noise", "ev_sum_min",
                "ev_sum_max", "ev_start_slot", "ev_start_jitter", "house_offset_max", "ev_power_jitter"});
    auto& p = s.profile;
    read(j, w, "seed", s.seed);
    read(j, w, "houses", s.houses);
    read(j, w, "days", s.days);
    read(j, w, "start_date", p.start_date);
    read(j, w, "daylight_start_slot", p.daylight_start_slot);
    read(j, w, "daylight_end_slot", p.daylight_end_slot);
    read(j, w, "pv_peak_kw", p.pv_peak_kw);
    read(j, w, "cloud_min", p.cloud_min);
    read(j, w, "pv_noise", p.pv_noise);
    read(j, w, "res_base_kw", p.res_base_kw);
    read(j, w, "res_morning_kw", p.res_morning_kw);
    read(j, w, "res_evening_kw", p.res_evening_kw);
    read(j, w, "res_noise", p.res_noise);
    read(j, w, "ev_sum_min", p.ev_sum_min);
    read(j, w, "ev_sum_max", p.ev_sum_max);
    read(j, w, "ev_start_slot", p.ev_start_slot);
    read(j, w, "ev_start_jitter", p.ev_start_jitter);
    read(j, w, "house_offset_max", p.house_offset_max);
    read(j, w, "ev_power_jitter", p.ev_power_jitter);
}

inline void read_data(const json& j, RunConfig& c) {
    check_keys(j, "data", {"source", "csv_path", "synth"});
    std::string src = "synth";
    read(j, "data", "source", src);
    if (src == "synth")
        c.source = DataSource::synth;
    else if (src == "csv")
        c.source = DataSource::csv;
    else
        throw ConfigError("data.source must be 'synth' or 'csv'");
    read(j, "data", "csv_path", c.csv_path);
    if (auto it = j.find("synth"); it != j.end()) read_synth(*it, c.synth);
}

inline void read_tariff(const json& j, RunConfig& c) {
    check_keys(j, "tariff", {"layout", "bands"});
    if (j.contains("layout") && j.contains("bands")) throw ConfigError("tariff: give either layout or bands");
    if (auto it = j.find("layout"); it != j.end()) {
        std::string name;
        read(j, "tariff", "layout", name);
        if (name == "austin_2018")
            c.tariff = TariffSchedule(TariffSchedule::austin_2018());
        else if (name == "austin_2018_late_off_peak")
            c.tariff = TariffSchedule(TariffSchedule::austin_2018_late_off_peak());
        else
            throw ConfigError("unknown tariff layout '" + name + "'");
    }
    if (auto it = j.find("bands"); it != j.end()) {
        if (!it->is_array()) throw ConfigError("tariff.bands must be an array");
        std::vector<TariffBand> bands;
        for (const auto& b : *it) {
            check_keys(b, "tariff.bands[]", {"start_slot", "end_slot", "price", "period"});
            TariffBand band;
            read(b, "tariff.bands[]", "start_slot", band.start_slot);
            read(b, "tariff.bands[]", "end_slot", band.end_slot);
            read(b, "tariff.bands[]", "price", band.price);
            std::string period = "off_peak";
            read(b, "tariff.bands[]", "period", period);
            try {
                band.label = parse_tou_period(period);
            } catch (const Error&) {
                throw ConfigError("unknown tariff period '" + period + "'");
            }
            bands.push_back(band);
        }
        c.tariff = TariffSchedule(std::move(bands));
    }
}

inline void read_env(const json& j, EnvConfig& e) {
    check_keys(j, "env", {"variant", "tolerance", "weights", "on_threshold"});
    if (auto it = j.find("variant"); it != j.end()) {
        std::string v;
        read(j, "env", "variant", v);
        try {
            e.variant = parse_reward_variant(v);
        } catch (const Error&) {
            throw ConfigError("env.variant must be 'ch6' or 'ch7'");
        }
    }
    read(j, "env", "tolerance", e.tolerance);
    read(j, "env", "on_threshold", e.on_threshold);
    if (auto it = j.find("weights"); it != j.end()) {
        check_keys(*it, "env.weights", {"con", "pref", "cost", "soc", "solar"});
        const char* names[5] = {"con", "pref", "cost", "soc", "solar"};
        for (int i = 0; i < 5; ++i) read(*it, "env.weights", names[i], e.weights[i]);
    }
}

inline void read_learner(const json& j, DqnConfig& d) {
    const std::string w = "learner";
    check_keys(j, w,
               {"gamma", "n_step", "learning_rate", "batch_size", "epsilon_start", "epsilon_end",
                "epsilon_decay_steps", "target_sync_every", "epochs", "seed", "hidden", "replay_capacity",
                "learn_start", "train_every", "updates_per_round", "max_grad_norm", "keep_best"});
    read(j, w, "gamma", d.gamma);
    read(j, w, "n_step", d.n_step);
    read(j, w, "learning_rate", d.learning_rate);
    read(j, w, "batch_size", d.batch_size);
    read(j, w, "epsilon_start", d.epsilon_start);
    read(j, w, "epsilon_end", d.epsilon_end);
    read(j, w, "epsilon_decay_steps", d.epsilon_decay_steps);
    read(j, w, "target_sync_every", d.target_sync_every);
    read(j, w, "epochs", d.epochs);
    read(j, w, "seed", d.seed);
    read(j, w, "hidden", d.hidden);
    read(j, w, "replay_capacity", d.replay_capacity);
    read(j, w, "learn_start", d.learn_start);
    read(j, w, "train_every", d.train_every);
    read(j, w, "updates_per_round", d.updates_per_round);
    read(j, w, "max_grad_norm", d.max_grad_norm);
    read(j, w, "keep_best", d.keep_best);
}

} // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
    using namespace detail;
    check_keys(j, "config",
               {"data", "eligibility", "tariff", "battery", "env", "learner", "community", "split", "metrics",
                "output_dir"});
    RunConfig c;
    if (auto it = j.find("data"); it != j.end()) read_data(*it, c);
    if (auto it = j.find("eligibility"); it != j.end()) {
        check_keys(*it, "eligibility", {"min_ev_sum", "max_ev_sum", "require_positive_pv", "min_days_per_house"});
        read(*it, "eligibility", "min_ev_sum", c.eligibility.min_ev_sum);
        read(*it, "eligibility", "max_ev_sum", c.eligibility.max_ev_sum);
        read(*it, "eligibility", "require_positive_pv", c.eligibility.require_positive_pv);
        read(*it, "eligibility", "min_days_per_house", c.eligibility.min_days_per_house);
    }
    if (auto it = j.find("tariff"); it != j.end()) read_tariff(*it, c);
    if (auto it = j.find("battery"); it != j.end()) {
        check_keys(*it, "battery", {"capacity_kwh", "eta", "p_high", "p_low", "soc_switch", "soc_max"});
        read(*it, "battery", "capacity_kwh", c.battery.capacity_kwh);
        read(*it, "battery", "eta", c.battery.eta);
        read(*it, "battery", "p_high", c.battery.p_high);
        read(*it, "battery", "p_low", c.battery.p_low);
        read(*it, "battery", "soc_switch", c.battery.soc_switch);
        read(*it, "battery", "soc_max", c.battery.soc_max);
    }
    if (auto it = j.find("env"); it != j.end()) read_env(*it, c.env);
    if (auto it = j.find("learner"); it != j.end()) read_learner(*it, c.learner);
    if (auto it = j.find("community"); it != j.end()) {
        check_keys(*it, "community", {"houses"});
        read(*it, "community", "houses", c.community);
    }
    if (auto it = j.find("split"); it != j.end()) {
        check_keys(*it, "split", {"test_fraction"});
        read(*it, "split", "test_fraction", c.test_fraction);
    }
    if (auto it = j.find("metrics"); it != j.end()) {
        check_keys(*it, "metrics", {"par_comm"});
        std::string mode = "aggregated";
        read(*it, "metrics", "par_comm", mode);
        if (mode == "aggregated")
            c.par_mode = CommunityParMode::aggregated;
        else if (mode == "per_house")
            c.par_mode = CommunityParMode::per_house;
        else
            throw ConfigError("metrics.par_comm must be 'aggregated' or 'per_house'");
    }
    detail::read(j, "config", "output_dir", c.output_dir);
    c.validate();
    return c;
}

inline RunConfig parse_run_config(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_run_config(j);
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_run_config(std::string_view(text));
}

} // namespace evq
