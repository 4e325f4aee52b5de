#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aoii_optimizer.hpp"
#include "errors.hpp"
#include "queue_simulator.hpp"
#include "queueing_analytic.hpp"
#include "semantic_model.hpp"

namespace aoii {

using json = nlohmann::json;

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double watts) { return 30.0 + 10.0 * std::log10(watts); }

// Parsed configuration plus its canonical JSON form (defaults materialized,
// powers kept in the file's dBm units) so load -> serialize -> load is
// value-identical.
struct SystemConfig {
    NomaScenario scenario;
    LogisticParams logistic;
    QueueParams qp;
    PolicySpace space;
    SimConfig sim;
    json canonical;
};

namespace detail {

class Section {
  public:
    Section(const json& j, std::string name) : name_(std::move(name)) {
        if (!j.is_object()) throw ConfigError("config: section '" + name_ + "' must be an object");
        remaining_ = j;
    }

    explicit Section(std::string name) : name_(std::move(name)), remaining_(json::object()) {}

    double number(const char* key, double fallback) {
        if (!remaining_.contains(key)) return fallback;
        json v = take(key);
        if (!v.is_number()) throw bad_type(key, "a number");
        return v.get<double>();
    }

    std::int64_t integer(const char* key, std::int64_t fallback) {
        if (!remaining_.contains(key)) return fallback;
        json v = take(key);
        if (!v.is_number_integer()) throw bad_type(key, "an integer");
        return v.get<std::int64_t>();
    }

    std::string text(const char* key, const std::string& fallback) {
        if (!remaining_.contains(key)) return fallback;
        json v = take(key);
        if (!v.is_string()) throw bad_type(key, "a string");
        return v.get<std::string>();
    }

    bool has(const char* key) const { return remaining_.contains(key); }

    json take(const char* key) {
        json v = remaining_.at(key);
        remaining_.erase(key);
        return v;
    }

    void finish() const {
        if (!remaining_.empty())
            throw ConfigError("config: unknown key '" + remaining_.begin().key() +
                              "' in section '" + name_ + "'");
    }

    ConfigError bad_type(const char* key, const char* expected) const {
        return ConfigError("config: '" + name_ + "." + key + "' must be " + expected);
    }

  private:
    std::string name_;
    json remaining_;
};

inline Interval parse_interval(const json& v, const std::string& what) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError("config: '" + what + "' must be a [lo, hi] number pair");
    return Interval{v[0].get<double>(), v[1].get<double>()};
}

} // namespace detail

inline SystemConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    static const char* known_sections[] = {"scenario", "logistic_params", "queue_params",
                                           "policy_space", "sim_config"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* s : known_sections) ok = ok || it.key() == s;
        if (!ok) throw ConfigError("config: unknown section '" + it.key() + "'");
    }

    SystemConfig cfg;
    json canon = json::object();

    { // scenario
        detail::Section sec = j.contains("scenario")
                                  ? detail::Section(j.at("scenario"), "scenario")
                                  : detail::Section("scenario");
        json& cs = canon["scenario"] = json::object();
        double p_max_dbm = sec.number("p_max", 10.0);
        cs["p_max"] = p_max_dbm;
        cfg.scenario.p_max = dbm_to_watts(p_max_dbm);
        double noise_dbm = sec.number("noise_power", -30.0);
        cs["noise_power"] = noise_dbm;
        cfg.scenario.noise_power = dbm_to_watts(noise_dbm);
        cs["bandwidth"] = cfg.scenario.bandwidth = sec.number("bandwidth", 200e3);
        cs["info_per_word"] = cfg.scenario.info_per_word = sec.number("info_per_word", 1.0);
        cfg.scenario.symbols_per_word = static_cast<int>(sec.integer("symbols_per_word", 20));
        cs["symbols_per_word"] = cfg.scenario.symbols_per_word;
        cfg.scenario.max_symbols = static_cast<int>(sec.integer("max_symbols", 40));
        cs["max_symbols"] = cfg.scenario.max_symbols;
        cs["s_th"] = cfg.scenario.s_th = sec.number("s_th", 2000.0);
        cs["xi_th"] = cfg.scenario.xi_th = sec.number("xi_th", 0.3);
        cs["xi_hat"] = cfg.scenario.xi_hat = sec.number("xi_hat", 0.6);

        json users = json::array();
        if (sec.has("users")) {
            json uv = sec.take("users");
            if (!uv.is_array() || uv.empty())
                throw ConfigError("config: 'scenario.users' must be a nonempty array");
            for (std::size_t k = 0; k < uv.size(); ++k) {
                detail::Section us(uv[k], "scenario.users[" + std::to_string(k) + "]");
                UserChannel u;
                u.gain_sq = us.number("gain_sq", 1.0);
                double user_dbm = us.number("power", p_max_dbm);
                u.power = dbm_to_watts(user_dbm);
                us.finish();
                users.push_back({{"gain_sq", u.gain_sq}, {"power", user_dbm}});
                cfg.scenario.users.push_back(u);
            }
        } else {
            // six users, amplitudes linearly spaced in [0.8, 0.9], strongest first
            for (int k = 5; k >= 0; --k) {
                double h = 0.8 + 0.02 * k;
                UserChannel u{h * h, cfg.scenario.p_max};
                users.push_back({{"gain_sq", u.gain_sq}, {"power", p_max_dbm}});
                cfg.scenario.users.push_back(u);
            }
        }
        cs["users"] = users;
        sec.finish();
    }

    { // logistic_params
        detail::Section sec = j.contains("logistic_params")
                                  ? detail::Section(j.at("logistic_params"), "logistic_params")
                                  : detail::Section("logistic_params");
        json& cl = canon["logistic_params"] = json::object();
        cl["a1"] = cfg.logistic.a1 = sec.number("a1", 0.2);
        cl["a2"] = cfg.logistic.a2 = sec.number("a2", 0.95);
        cl["c1"] = cfg.logistic.c1 = sec.number("c1", 0.5);
        cl["c2"] = cfg.logistic.c2 = sec.number("c2", -1.0);
        sec.finish();
    }

    { // queue_params
        detail::Section sec = j.contains("queue_params")
                                  ? detail::Section(j.at("queue_params"), "queue_params")
                                  : detail::Section("queue_params");
        json& cq = canon["queue_params"] = json::object();
        cq["lambda0"] = cfg.qp.lambda0 = sec.number("lambda0", 10.0);
        cq["mu0"] = cfg.qp.mu0 = sec.number("mu0", 20.0);
        cq["mu1"] = cfg.qp.mu1 = sec.number("mu1", 15.0);
        cq["mu2"] = cfg.qp.mu2 = sec.number("mu2", 10.0);
        cq["a"] = cfg.qp.a = sec.number("a", 0.5);
        cq["theta"] = cfg.qp.theta = sec.number("theta", 0.1);
        std::string mode = sec.text("arrival_mode", "paper");
        if (mode == "paper")
            cfg.qp.arrival_mode = ArrivalMode::paper;
        else if (mode == "flow")
            cfg.qp.arrival_mode = ArrivalMode::flow;
        else
            throw ConfigError("config: 'queue_params.arrival_mode' must be \"paper\" or \"flow\"");
        cq["arrival_mode"] = mode;
        sec.finish();
    }

    { // policy_space
        detail::Section sec = j.contains("policy_space")
                                  ? detail::Section(j.at("policy_space"), "policy_space")
                                  : detail::Section("policy_space");
        json& cp = canon["policy_space"] = json::object();
        auto box = [&](const char* key, Interval fallback) {
            Interval iv = sec.has(key)
                              ? detail::parse_interval(sec.take(key), std::string("policy_space.") + key)
                              : fallback;
            cp[key] = {iv.lo, iv.hi};
            return iv;
        };
        cfg.space.mu0_box = box("mu0_box", {15.0, 20.0});
        cfg.space.mu1_box = box("mu1_box", {10.0, 15.0});
        cfg.space.mu2_box = box("mu2_box", {5.0, 10.0});
        cfg.space.grid_steps = static_cast<int>(sec.integer("grid_steps", 100));
        cp["grid_steps"] = cfg.space.grid_steps;
        if (sec.has("power_box")) {
            Interval dbm = detail::parse_interval(sec.take("power_box"), "policy_space.power_box");
            cp["power_box"] = {dbm.lo, dbm.hi};
            cfg.space.power_box = {dbm_to_watts(dbm.lo), dbm_to_watts(dbm.hi)};
        } else {
            cfg.space.power_box = {0.0, cfg.scenario.p_max};
        }
        sec.finish();
    }

    { // sim_config
        detail::Section sec = j.contains("sim_config")
                                  ? detail::Section(j.at("sim_config"), "sim_config")
                                  : detail::Section("sim_config");
        json& cm = canon["sim_config"] = json::object();
        cfg.sim.horizon_packets = sec.integer("horizon_packets", 100000);
        cm["horizon_packets"] = cfg.sim.horizon_packets;
        cfg.sim.warmup_packets = sec.integer("warmup_packets", -1);
        cm["warmup_packets"] = cfg.sim.warmup_packets;
        cfg.sim.rng_seed = static_cast<std::uint64_t>(sec.integer("rng_seed", 42));
        cm["rng_seed"] = cfg.sim.rng_seed;

        // similarities at the configured powers, for routing and AoII
        std::vector<double> xis;
        for (double g : sinr_vector(cfg.scenario)) xis.push_back(similarity(g, cfg.logistic));
        cfg.sim.per_user_similarity = xis;

        json routing = json::object();
        if (sec.has("routing")) routing = sec.take("routing");
        detail::Section rsec(routing, "sim_config.routing");
        std::string type = rsec.text("type", "bernoulli");
        json& cr = cm["routing"] = json::object();
        cr["type"] = type;
        if (type == "bernoulli") {
            BernoulliRouting br;
            br.prob = rsec.number("prob", -1.0);
            cr["prob"] = br.prob;
            cfg.sim.routing = br;
        } else if (type == "similarity_threshold") {
            SimilarityRouting sr;
            sr.xi_hat = rsec.number("xi_hat", cfg.scenario.xi_hat);
            cr["xi_hat"] = sr.xi_hat;
            if (rsec.has("similarities")) {
                json sv = rsec.take("similarities");
                if (!sv.is_array() || sv.empty())
                    throw ConfigError("config: routing similarities must be a nonempty array");
                for (const auto& v : sv) {
                    if (!v.is_number()) throw ConfigError("config: routing similarities must be numbers");
                    sr.similarities.push_back(v.get<double>());
                }
            } else {
                sr.similarities = xis;
            }
            cr["similarities"] = sr.similarities;
            cfg.sim.routing = sr;
        } else {
            throw ConfigError("config: routing type must be \"bernoulli\" or \"similarity_threshold\"");
        }
        rsec.finish();
        sec.finish();
        cfg.sim.qp = cfg.qp;
    }

    validate(cfg.scenario);
    validate(cfg.logistic);
    validate(cfg.qp);
    validate(cfg.space);
    validate(cfg.sim);
    cfg.canonical = std::move(canon);
    return cfg;
}

inline SystemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

inline std::string serialize_config(const SystemConfig& cfg) { return cfg.canonical.dump(2) + "\n"; }

// One swept parameter: a dotted path into the canonical config plus the
// values to substitute.
struct SweepParam {
    std::string path;
    std::vector<json> values;
};

struct ExperimentSpec {
    std::string name;
    // The config JSON as authored.  Kept raw (not canonicalized) so each
    // sweep point re-derives dependent defaults; e.g. sweeping scenario.p_max
    // moves every user power that was left implicit.
    json base;
    std::vector<SweepParam> sweep;
    std::vector<std::string> outputs;
};

namespace detail {
inline json::json_pointer to_pointer(const std::string& dotted) {
    std::string p = "/" + dotted;
    for (auto& ch : p)
        if (ch == '.') ch = '/';
    return json::json_pointer(p);
}
} // namespace detail

// Metric names accepted by experiment 'outputs' and evaluated by the sweep
// engine (see report.hpp).
inline bool is_known_metric(const std::string& name, std::size_t n_users) {
    static const char* fixed[] = {
        "eta0",     "eta1",     "eta2",        "rho0",       "rho1",
        "rho2",     "lambda1",  "lambda2",     "d0",         "d1",
        "d2",       "aoi_cat1", "aoi_cat2",    "aoi_blended", "aoii",
        "mean_similarity", "min_similarity", "min_rate", "mean_rate",
        "aoi_min",  "aoii_min", "opt_mu0",     "opt_mu1",    "opt_mu2"};
    for (const char* f : fixed)
        if (name == f) return true;
    for (const char* prefix : {"xi_user", "rate_user", "sinr_user"}) {
        std::string p = prefix;
        if (name.size() > p.size() && name.compare(0, p.size(), p) == 0) {
            const std::string idx = name.substr(p.size());
            if (idx.empty() || idx.find_first_not_of("0123456789") != std::string::npos) continue;
            std::size_t k = std::stoul(idx);
            return k >= 1 && k <= n_users;
        }
    }
    return false;
}

inline ExperimentSpec parse_experiment(const json& j, const std::string& base_dir) {
    if (!j.is_object()) throw ConfigError("experiment: top level must be an object");
    detail::Section sec(j, "experiment");
    ExperimentSpec spec;
    spec.name = sec.text("name", "experiment");

    if (sec.has("config") && sec.has("config_path"))
        throw ConfigError("experiment: give either 'config' or 'config_path', not both");
    if (sec.has("config")) {
        spec.base = sec.take("config");
    } else if (sec.has("config_path")) {
        json pv = sec.take("config_path");
        if (!pv.is_string()) throw ConfigError("experiment: 'config_path' must be a string");
        std::string path = pv.get<std::string>();
        if (!path.empty() && path.front() != '/' && !base_dir.empty())
            path = base_dir + "/" + path;
        std::ifstream in(path);
        if (!in) throw ConfigError("experiment: cannot open config '" + path + "'");
        try {
            spec.base = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("experiment: config '" + path + "' is not valid JSON: " + e.what());
        }
    } else {
        spec.base = json::object();
    }
    // Validate the base once up front; sweep paths resolve against the
    // materialized defaults even when the raw base leaves them implicit.
    SystemConfig base_cfg = parse_config(spec.base);

    json sw = sec.take("sweep");
    if (!sw.is_array() || sw.empty() || sw.size() > 2)
        throw ConfigError("experiment: 'sweep' must list one or two parameters");
    for (const auto& p : sw) {
        detail::Section ps(p, "experiment.sweep");
        SweepParam sp;
        json pathv = ps.take("path");
        if (!pathv.is_string()) throw ConfigError("experiment: sweep 'path' must be a string");
        sp.path = pathv.get<std::string>();
        json vals = ps.take("values");
        if (!vals.is_array() || vals.empty())
            throw ConfigError("experiment: sweep 'values' must be a nonempty array");
        for (const auto& v : vals) sp.values.push_back(v);
        ps.finish();
        if (!base_cfg.canonical.contains(detail::to_pointer(sp.path)))
            throw ConfigError("experiment: sweep path '" + sp.path + "' is not a config field");
        spec.sweep.push_back(std::move(sp));
    }

    json outs = sec.take("outputs");
    if (!outs.is_array() || outs.empty())
        throw ConfigError("experiment: 'outputs' must be a nonempty array of metric names");
    for (const auto& o : outs) {
        if (!o.is_string()) throw ConfigError("experiment: metric names must be strings");
        std::string name = o.get<std::string>();
        if (!is_known_metric(name, base_cfg.scenario.users.size()))
            throw ConfigError("experiment: unknown metric '" + name + "'");
        spec.outputs.push_back(name);
    }
    sec.finish();
    return spec;
}

inline ExperimentSpec load_experiment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("experiment: cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("experiment: '" + path + "' is not valid JSON: " + e.what());
    }
    std::string dir;
    auto slash = path.find_last_of('/');
    if (slash != std::string::npos) dir = path.substr(0, slash);
    return parse_experiment(j, dir);
}

} // namespace aoii
