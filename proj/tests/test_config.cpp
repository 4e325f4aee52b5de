#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>

#include <aoii/report.hpp>

using namespace aoii;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << text;
    return path;
}

} // namespace

TEST_CASE("dBm conversion") {
    CHECK(dbm_to_watts(10.0) == Approx(0.01).epsilon(1e-14));
    CHECK(dbm_to_watts(-30.0) == Approx(1e-6).epsilon(1e-14));
    CHECK(dbm_to_watts(0.0) == Approx(1e-3).epsilon(1e-14));
    CHECK(watts_to_dbm(1e-3) == Approx(0.0).margin(1e-12));
    for (double dbm : {-30.0, -10.0, 0.0, 7.0, 10.0})
        CHECK(watts_to_dbm(dbm_to_watts(dbm)) == Approx(dbm).margin(1e-12));
}

TEST_CASE("empty config materializes the reference parameter set") {
    SystemConfig cfg = parse_config(json::object());

    CHECK(cfg.qp.lambda0 == 10.0);
    CHECK(cfg.qp.mu0 == 20.0);
    CHECK(cfg.qp.mu1 == 15.0);
    CHECK(cfg.qp.mu2 == 10.0);
    CHECK(cfg.qp.a == 0.5);
    CHECK(cfg.qp.theta == 0.1);
    CHECK(cfg.qp.arrival_mode == ArrivalMode::paper);

    CHECK(cfg.scenario.p_max == Approx(0.01).epsilon(1e-12));
    CHECK(cfg.scenario.noise_power == Approx(1e-6).epsilon(1e-12));
    CHECK(cfg.scenario.bandwidth == 200e3);
    CHECK(cfg.scenario.info_per_word == 1.0);
    CHECK(cfg.scenario.symbols_per_word == 20);
    CHECK(cfg.scenario.max_symbols == 40);
    CHECK(cfg.scenario.s_th == 2000.0);
    CHECK(cfg.scenario.xi_th == 0.3);
    CHECK(cfg.scenario.xi_hat == 0.6);

    REQUIRE(cfg.scenario.users.size() == 6);
    CHECK(cfg.scenario.users.front().gain_sq == Approx(0.81).epsilon(1e-12));
    CHECK(cfg.scenario.users.back().gain_sq == Approx(0.64).epsilon(1e-12));
    for (std::size_t k = 1; k < cfg.scenario.users.size(); ++k)
        CHECK(cfg.scenario.users[k - 1].gain_sq > cfg.scenario.users[k].gain_sq);
    for (const auto& u : cfg.scenario.users) CHECK(u.power == cfg.scenario.p_max);

    CHECK(cfg.space.mu0_box.lo == 15.0);
    CHECK(cfg.space.mu0_box.hi == 20.0);
    CHECK(cfg.space.mu1_box.lo == 10.0);
    CHECK(cfg.space.mu1_box.hi == 15.0);
    CHECK(cfg.space.mu2_box.lo == 5.0);
    CHECK(cfg.space.mu2_box.hi == 10.0);
    CHECK(cfg.space.grid_steps == 100);
    CHECK(cfg.space.power_box.lo == 0.0);
    CHECK(cfg.space.power_box.hi == cfg.scenario.p_max);

    CHECK(cfg.sim.horizon_packets == 100000);
    CHECK(cfg.sim.warmup_packets == -1);
    CHECK(cfg.sim.rng_seed == 42);
    CHECK(std::holds_alternative<BernoulliRouting>(cfg.sim.routing));
    CHECK(cfg.sim.qp.mu1 == cfg.qp.mu1);

    // per-user similarities are derived from the configured radio scenario
    auto gammas = sinr_vector(cfg.scenario);
    REQUIRE(cfg.sim.per_user_similarity.size() == gammas.size());
    for (std::size_t k = 0; k < gammas.size(); ++k)
        CHECK(cfg.sim.per_user_similarity[k] == similarity(gammas[k], cfg.logistic));

    // canonical JSON has the defaults written out, powers in dBm
    CHECK(cfg.canonical["scenario"]["p_max"] == 10.0);
    CHECK(cfg.canonical["scenario"]["users"].size() == 6);
    CHECK(cfg.canonical["scenario"]["users"][0]["power"] == 10.0);
    CHECK(cfg.canonical["queue_params"]["arrival_mode"] == "paper");
    CHECK(cfg.canonical["sim_config"]["routing"]["prob"] == -1.0);
}

TEST_CASE("unknown sections, keys, and bad types are rejected") {
    CHECK_THROWS_AS(parse_config(json::parse(R"({"queue_parms": {}})")), ConfigError);
    CHECK_THROWS_WITH(parse_config(json::parse(R"({"queue_params": {"mu7": 1.0}})")),
                      ContainsSubstring("mu7"));
    CHECK_THROWS_AS(parse_config(json::parse(R"({"queue_params": {"mu0": "fast"}})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"scenario": {"users": {}}})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"scenario": {"users": []}})")), ConfigError);
    CHECK_THROWS_AS(
        parse_config(json::parse(R"({"sim_config": {"routing": {"type": "roundrobin"}}})")),
        ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"queue_params": {"arrival_mode": "poisson"}})")),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"([1, 2])")), ConfigError);
}

TEST_CASE("model validation runs as part of parsing") {
    CHECK_THROWS_AS(parse_config(json::parse(R"({"queue_params": {"lambda0": 25.0}})")),
                    StabilityError);
    CHECK_THROWS_WITH(parse_config(json::parse(R"({"queue_params": {"mu1": 9.0}})")),
                      ContainsSubstring("C7"));
    // a user transmitting above the power budget
    json j = json::parse(R"({"scenario": {"users": [{"gain_sq": 0.8, "power": 12.0}]}})");
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    // channel gains must come sorted strongest first
    json unsorted = json::parse(
        R"({"scenario": {"users": [{"gain_sq": 0.5}, {"gain_sq": 0.8}]}})");
    CHECK_THROWS_AS(parse_config(unsorted), ConfigError);
}

TEST_CASE("serialize/parse round trip is value identical") {
    json j = json::parse(R"({
        "scenario": {
            "p_max": 7.0,
            "users": [{"gain_sq": 0.9, "power": 4.0}, {"gain_sq": 0.5}]
        },
        "queue_params": {"mu0": 18, "arrival_mode": "flow"},
        "policy_space": {"power_box": [-10.0, 7.0], "grid_steps": 25},
        "sim_config": {"horizon_packets": 5000, "routing": {"type": "similarity_threshold"}}
    })");
    SystemConfig a = parse_config(j);
    std::string text = serialize_config(a);
    SystemConfig b = parse_config(json::parse(text));

    CHECK(a.canonical == b.canonical);
    CHECK(serialize_config(b) == text);
    CHECK(b.scenario.users[1].power == a.scenario.users[1].power);
    CHECK(b.qp.arrival_mode == ArrivalMode::flow);
    CHECK(b.space.power_box.lo == Approx(dbm_to_watts(-10.0)).epsilon(1e-15));
    REQUIRE(std::holds_alternative<SimilarityRouting>(b.sim.routing));
    auto& sr = std::get<SimilarityRouting>(b.sim.routing);
    CHECK(sr.xi_hat == a.scenario.xi_hat);
    CHECK(sr.similarities == a.sim.per_user_similarity);
    // user 2 omitted its power, so it defaults to the configured budget
    CHECK(a.scenario.users[1].power == a.scenario.p_max);
}

TEST_CASE("config files load from disk") {
    auto good = write_temp("aoii_cfg_good.json", R"({"queue_params": {"mu0": 19.0}})");
    SystemConfig cfg = load_config(good.string());
    CHECK(cfg.qp.mu0 == 19.0);

    CHECK_THROWS_AS(load_config((good.parent_path() / "aoii_cfg_missing.json").string()),
                    ConfigError);
    auto bad = write_temp("aoii_cfg_bad.json", "{ not json");
    CHECK_THROWS_AS(load_config(bad.string()), ConfigError);
}

TEST_CASE("experiment specs parse and validate") {
    json j = json::parse(R"({
        "name": "exp",
        "config": {},
        "sweep": [{"path": "queue_params.mu1", "values": [12.0, 13.0]}],
        "outputs": ["d1", "xi_user6"]
    })");
    ExperimentSpec spec = parse_experiment(j, "");
    CHECK(spec.name == "exp");
    REQUIRE(spec.sweep.size() == 1);
    CHECK(spec.sweep[0].path == "queue_params.mu1");
    CHECK(spec.sweep[0].values.size() == 2);
    CHECK(spec.outputs.size() == 2);

    auto broken = [&](const char* patch_path, json patch_value) {
        json bad = j;
        bad[json::json_pointer(patch_path)] = std::move(patch_value);
        return bad;
    };
    CHECK_THROWS_AS(parse_experiment(broken("/sweep/0/values", json::array()), ""), ConfigError);
    CHECK_THROWS_AS(parse_experiment(broken("/sweep/0/path", "queue_params.mu9"), ""), ConfigError);
    CHECK_THROWS_AS(parse_experiment(broken("/outputs", json::array({"d9"})), ""), ConfigError);
    CHECK_THROWS_AS(parse_experiment(broken("/outputs", json::array({"xi_user7"})), ""),
                    ConfigError);
    CHECK_THROWS_AS(parse_experiment(broken("/config_path", "also.json"), ""), ConfigError);

    json three = j;
    three["sweep"] = json::array({j["sweep"][0], j["sweep"][0], j["sweep"][0]});
    CHECK_THROWS_AS(parse_experiment(three, ""), ConfigError);
}

TEST_CASE("experiment config_path resolves relative to the spec") {
    auto dir = std::filesystem::temp_directory_path();
    write_temp("aoii_exp_base.json", R"({"queue_params": {"mu1": 14.0}})");
    write_temp("aoii_exp.json", R"({
        "name": "from_file",
        "config_path": "aoii_exp_base.json",
        "sweep": [{"path": "queue_params.a", "values": [0.25, 0.75]}],
        "outputs": ["aoi_blended"]
    })");
    ExperimentSpec spec = load_experiment((dir / "aoii_exp.json").string());
    CHECK(spec.name == "from_file");
    CHECK(spec.base == json::parse(R"({"queue_params": {"mu1": 14.0}})"));

    json missing = json::parse(R"({
        "name": "x", "config_path": "aoii_exp_nope.json",
        "sweep": [{"path": "queue_params.a", "values": [0.5]}],
        "outputs": ["d0"]
    })");
    CHECK_THROWS_AS(parse_experiment(missing, dir.string()), ConfigError);
}

TEST_CASE("sweep engine emits one row per point and metric") {
    json j = json::parse(R"({
        "name": "grid",
        "config": {},
        "sweep": [
            {"path": "queue_params.mu1", "values": [12.0, 13.0]},
            {"path": "queue_params.a", "values": [0.4, 0.5, 0.6]}
        ],
        "outputs": ["d1"]
    })");
    auto rows = run_sweep(parse_experiment(j, ""));
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].param1 == "queue_params.mu1");
    CHECK(rows[0].param2 == "queue_params.a");
    CHECK(rows[0].value1 == "12.0");
    CHECK(rows[0].value2 == "0.4");
    CHECK(rows[5].value1 == "13.0");
    CHECK(rows[5].value2 == "0.6");
    for (const auto& r : rows) {
        CHECK(std::isfinite(r.value));
        CHECK(r.reason.empty());
    }
    // d1 falls as mu1 grows, all else equal
    CHECK(rows[3].value < rows[0].value);
}

TEST_CASE("sweep rows record NaN plus a reason when a point cannot evaluate") {
    json j = json::parse(R"({
        "name": "edge",
        "config": {},
        "sweep": [{"path": "queue_params.mu1", "values": [15.0, 9.0]}],
        "outputs": ["d1", "aoi_blended"]
    })");
    auto rows = run_sweep(parse_experiment(j, ""));
    REQUIRE(rows.size() == 4);
    CHECK(std::isfinite(rows[0].value));
    CHECK(std::isfinite(rows[1].value));
    CHECK(std::isnan(rows[2].value));
    CHECK(std::isnan(rows[3].value));
    CHECK_THAT(rows[2].reason, ContainsSubstring("C7"));

    std::string csv = sweep_csv("edge", rows);
    CHECK_THAT(csv, ContainsSubstring("experiment,param1,value1,param2,value2,metric,value,reason\n"));
    CHECK_THAT(csv, ContainsSubstring("NaN"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK_THAT(csv, ContainsSubstring("\nedge,"));
}

TEST_CASE("a metric can fail on its own while others evaluate") {
    // lambda1 ~ 7.97 exceeds mu1 = 7.5: queueing metrics blow up, radio ones do not
    json j = json::parse(R"({
        "name": "partial",
        "config": {"queue_params": {"mu1": 7.5, "mu2": 5.0}},
        "sweep": [{"path": "queue_params.a", "values": [0.5]}],
        "outputs": ["mean_similarity", "d1"]
    })");
    auto rows = run_sweep(parse_experiment(j, ""));
    REQUIRE(rows.size() == 2);
    CHECK(std::isfinite(rows[0].value));
    CHECK(rows[0].reason.empty());
    CHECK(std::isnan(rows[1].value));
    CHECK(!rows[1].reason.empty());
}

TEST_CASE("sweeping the power budget moves implicit user powers") {
    json j = json::parse(R"({
        "name": "power",
        "config": {},
        "sweep": [{"path": "scenario.p_max", "values": [10.0, -30.0]}],
        "outputs": ["xi_user6"]
    })");
    auto rows = run_sweep(parse_experiment(j, ""));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].value == Approx(0.95).margin(1e-6));
    CHECK(rows[1].value > 0.2);
    CHECK(rows[1].value < 0.9);
    CHECK(rows[1].value < rows[0].value);
}

TEST_CASE("metric names are checked against the published list") {
    CHECK(is_known_metric("d0", 6));
    CHECK(is_known_metric("aoi_min", 6));
    CHECK(is_known_metric("opt_mu2", 6));
    CHECK(is_known_metric("xi_user6", 6));
    CHECK(is_known_metric("rate_user1", 6));
    CHECK(is_known_metric("sinr_user3", 6));
    CHECK(!is_known_metric("xi_user7", 6));
    CHECK(!is_known_metric("xi_user0", 6));
    CHECK(!is_known_metric("xi_userX", 6));
    CHECK(!is_known_metric("bogus", 6));
}

TEST_CASE("metric evaluator matches the underlying model calls") {
    SystemConfig cfg = parse_config(json::object());
    MetricEvaluator ev(cfg);

    CHECK(ev.value("eta0") == eta_dm1(cfg.qp.lambda0 / cfg.qp.mu0));
    auto gammas = sinr_vector(cfg.scenario);
    CHECK(ev.value("sinr_user1") == gammas[0]);
    CHECK(ev.value("xi_user6") == similarity(gammas[5], cfg.logistic));

    double mean_xi = 0.0;
    for (double g : gammas) mean_xi += similarity(g, cfg.logistic);
    mean_xi /= static_cast<double>(gammas.size());
    CHECK(ev.value("mean_similarity") == Approx(mean_xi).epsilon(1e-15));
    CHECK(ev.value("aoii") ==
          Approx(ev.value("aoi_blended") * (1.0 - mean_xi)).epsilon(1e-14));

    CHECK_THROWS_AS(ev.value("nonsense"), ConfigError);
    CHECK_THROWS_AS(ev.value("xi_user7"), ConfigError);
}

TEST_CASE("analytic payload carries the full metric set") {
    SystemConfig cfg = parse_config(json::object());
    json out = analytic_json(cfg);
    for (const char* key : {"eta0", "rho2", "lambda1", "d0", "d1", "d2", "aoi_cat1", "aoi_cat2",
                            "aoi_blended", "aoii", "mean_similarity", "min_similarity", "min_rate",
                            "mean_rate", "sinr_user1", "xi_user6", "rate_user3"})
        CHECK(out.contains(key));
    MetricEvaluator ev(cfg);
    CHECK(out["d1"].get<double>() == ev.value("d1"));
    CHECK(out["aoii"].get<double>() == ev.value("aoii"));
}

TEST_CASE("solver payload reports the policy and its trace") {
    SystemConfig cfg = parse_config(json::parse(R"({"policy_space": {"grid_steps": 40}})"));
    SolveResult res = solve_p0(cfg.scenario, cfg.logistic, cfg.qp, cfg.space);
    json out = solve_result_json(res);

    CHECK(out["aoi_min"].get<double>() == res.aoi_min);
    CHECK(out["aoii_min"].get<double>() ==
          res.aoi_min * (1.0 - out["mean_similarity"].get<double>()));
    CHECK(out["policy"]["mu0"].get<double>() >= cfg.space.mu0_box.lo);
    CHECK(out["policy"]["mu0"].get<double>() <= cfg.space.mu0_box.hi);
    REQUIRE(out["policy"]["powers_dbm"].size() == 6);
    CHECK(out["policy"]["powers_dbm"][0].get<double>() == Approx(10.0).margin(1e-9));
    CHECK(out["trace"].size() == 41);
    int best_rows = 0;
    for (const auto& row : out["trace"])
        if (row["best"].get<bool>()) ++best_rows;
    CHECK(best_rows == 1);
}

TEST_CASE("comparison table lines up simulation with both arrival models") {
    SystemConfig cfg = parse_config(json::parse(R"({"sim_config": {"horizon_packets": 20000}})"));
    SimReport rep = run(cfg.sim);
    auto rows = build_comparison(cfg, rep);
    REQUIRE(rows.size() == 8);
    CHECK(rows[0].metric == "d0");
    CHECK(rows[7].metric == "aoii");
    for (const auto& r : rows) {
        CHECK(std::isfinite(r.analytic_paper_mode));
        CHECK(std::isfinite(r.analytic_flow_mode));
        CHECK(std::isfinite(r.simulated));
    }
    CHECK(std::isfinite(rows[0].rel_err));
    CHECK(rows[0].rel_err < 0.2);

    std::string csv = comparison_csv(rows);
    CHECK_THAT(csv, ContainsSubstring("metric,analytic_paper_mode,analytic_flow_mode,simulated,rel_err\n"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
    CHECK(comparison_json(rows).size() == 8);
}

TEST_CASE("comparison table reports NaN for a mode that cannot hold") {
    // a = 1 sends everything to server 1; the embedded-chain arrival model
    // overloads it while the flow-conservation model stays stable
    json j = json::parse(R"({
        "queue_params": {"a": 1.0, "mu1": 12.0, "mu2": 9.0, "arrival_mode": "flow"},
        "sim_config": {"horizon_packets": 20000}
    })");
    SystemConfig cfg = parse_config(j);
    SimReport rep = run(cfg.sim);
    auto rows = build_comparison(cfg, rep);
    REQUIRE(rows.size() == 8);
    CHECK(std::isnan(rows[1].analytic_paper_mode));
    CHECK(std::isfinite(rows[1].analytic_flow_mode));
    CHECK(std::isfinite(rows[1].simulated));
    CHECK(std::isfinite(rows[1].rel_err));

    std::string csv = comparison_csv(rows);
    CHECK_THAT(csv, ContainsSubstring("NaN"));
}
