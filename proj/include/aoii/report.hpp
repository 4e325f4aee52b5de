#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"

namespace aoii {

// ---- metric evaluation -----------------------------------------------------

// Lazily computes whatever a requested metric needs; throws the underlying
// StabilityError/InfeasibleError/... when the configuration cannot support it.
class MetricEvaluator {
  public:
    explicit MetricEvaluator(const SystemConfig& cfg) : cfg_(cfg) {}

    double value(const std::string& name) {
        if (name == "eta0") return stationary().eta0;
        if (name == "eta1") return stationary().eta1;
        if (name == "eta2") return stationary().eta2;
        if (name == "rho0") return stationary().rho0;
        if (name == "rho1") return stationary().rho1;
        if (name == "rho2") return stationary().rho2;
        if (name == "lambda1") return stationary().lambda1;
        if (name == "lambda2") return stationary().lambda2;
        if (name == "d0") return stationary().d0;
        if (name == "d1") return stationary().d1;
        if (name == "d2") return stationary().d2;
        if (name == "aoi_cat1") return aoi().aoi_cat1;
        if (name == "aoi_cat2") return aoi().aoi_cat2;
        if (name == "aoi_blended") return aoi().aoi_blended;
        if (name == "aoii") return average_aoii(aoi(), xis()).aoii;
        if (name == "mean_similarity") return mean(xis());
        if (name == "min_similarity") return feas().min_xi;
        if (name == "min_rate") return feas().min_rate;
        if (name == "mean_rate") {
            double acc = 0.0;
            for (const auto& u : feas().per_user) acc += u.rate;
            return acc / static_cast<double>(feas().per_user.size());
        }
        if (name == "aoi_min") return solved().aoi_min;
        if (name == "aoii_min") return solved().aoii_min;
        if (name == "opt_mu0") return solved().policy.mu0;
        if (name == "opt_mu1") return solved().policy.mu1;
        if (name == "opt_mu2") return solved().policy.mu2;
        for (const char* prefix : {"xi_user", "rate_user", "sinr_user"}) {
            std::string p = prefix;
            if (name.size() > p.size() && name.compare(0, p.size(), p) == 0) {
                std::size_t k = std::stoul(name.substr(p.size()));
                if (k < 1 || k > cfg_.scenario.users.size())
                    throw ConfigError("metric '" + name + "': no such user");
                if (p == "xi_user") return xis()[k - 1];
                if (p == "sinr_user") return sinrs()[k - 1];
                return feas().per_user[k - 1].rate;
            }
        }
        throw ConfigError("unknown metric '" + name + "'");
    }

  private:
    static double mean(const std::vector<double>& v) {
        double acc = 0.0;
        for (double x : v) acc += x;
        return acc / static_cast<double>(v.size());
    }

    const StationarySolution& stationary() {
        if (!st_) st_ = solve_stationary(cfg_.qp);
        return *st_;
    }
    const AoiReport& aoi() {
        if (!aoi_) aoi_ = average_aoi(cfg_.qp);
        return *aoi_;
    }
    const std::vector<double>& sinrs() {
        if (!sinrs_) sinrs_ = sinr_vector(cfg_.scenario);
        return *sinrs_;
    }
    const std::vector<double>& xis() {
        if (!xis_) {
            std::vector<double> v;
            for (double g : sinrs()) v.push_back(similarity(g, cfg_.logistic));
            xis_ = std::move(v);
        }
        return *xis_;
    }
    const FeasibilityReport& feas() {
        if (!feas_) feas_ = check_feasibility(cfg_.scenario, cfg_.logistic);
        return *feas_;
    }
    const SolveResult& solved() {
        if (!opt_) opt_ = solve_p0(cfg_.scenario, cfg_.logistic, cfg_.qp, cfg_.space);
        return *opt_;
    }

    const SystemConfig& cfg_;
    std::optional<StationarySolution> st_;
    std::optional<AoiReport> aoi_;
    std::optional<std::vector<double>> sinrs_;
    std::optional<std::vector<double>> xis_;
    std::optional<FeasibilityReport> feas_;
    std::optional<SolveResult> opt_;
};

// ---- subcommand payloads ---------------------------------------------------

inline json analytic_json(const SystemConfig& cfg) {
    MetricEvaluator ev(cfg);
    json out = json::object();
    for (const char* m : {"eta0", "eta1", "eta2", "rho0", "rho1", "rho2", "lambda1", "lambda2",
                          "d0", "d1", "d2", "aoi_cat1", "aoi_cat2", "aoi_blended",
                          "mean_similarity", "min_similarity", "min_rate", "mean_rate", "aoii"})
        out[m] = ev.value(m);
    for (std::size_t k = 1; k <= cfg.scenario.users.size(); ++k) {
        std::string idx = std::to_string(k);
        out["sinr_user" + idx] = ev.value("sinr_user" + idx);
        out["xi_user" + idx] = ev.value("xi_user" + idx);
        out["rate_user" + idx] = ev.value("rate_user" + idx);
    }
    return out;
}

inline json sim_report_json(const SimReport& r) {
    json out = json::object();
    out["horizon_packets"] = r.horizon_packets;
    out["warmup_packets"] = r.warmup_packets;
    out["end_time"] = r.end_time;
    out["frac_cat1"] = r.frac_cat1;
    out["frac_cat2"] = r.frac_cat2;
    out["mean_scheduler_wait"] = r.mean_scheduler_wait;
    out["mean_scheduler_service"] = r.mean_scheduler_service;
    out["mean_scheduler_delay"] = r.mean_scheduler_delay;
    out["p_zero_scheduler_wait"] = r.p_zero_scheduler_wait;
    out["mean_server_wait_cat1"] = r.mean_server_wait_cat1;
    out["mean_server_service_cat1"] = r.mean_server_service_cat1;
    out["mean_server_delay_cat1"] = r.mean_server_delay_cat1;
    out["mean_server_wait_cat2"] = r.mean_server_wait_cat2;
    out["mean_server_service_cat2"] = r.mean_server_service_cat2;
    out["mean_server_delay_cat2"] = r.mean_server_delay_cat2;
    out["mean_total_delay"] = r.mean_total_delay;
    out["aoi_sawtooth_cat1"] = r.aoi_sawtooth_cat1;
    out["aoi_sawtooth_cat2"] = r.aoi_sawtooth_cat2;
    out["aoi_sawtooth_blended"] = r.aoi_sawtooth_blended;
    out["aoi_qdecomp_cat1"] = r.aoi_qdecomp_cat1;
    out["aoi_qdecomp_cat2"] = r.aoi_qdecomp_cat2;
    out["aoi_qdecomp_blended"] = r.aoi_qdecomp_blended;
    out["aoi_sawtooth_merged"] = r.aoi_sawtooth_merged;
    out["stale_fraction_cat1"] = r.stale_fraction_cat1;
    out["stale_fraction_cat2"] = r.stale_fraction_cat2;
    out["aoii_per_packet"] = r.aoii_per_packet;
    out["aoii_product_form"] = r.aoii_product_form;
    out["ci_total_delay"] = r.ci_total_delay;
    out["ci_aoi_qdecomp"] = r.ci_aoi_qdecomp;
    out["ci_aoii"] = r.ci_aoii;
    return out;
}

inline json solve_result_json(const SolveResult& r) {
    json out = json::object();
    out["aoi_min"] = r.aoi_min;
    out["aoii_min"] = r.aoii_min;
    out["mean_similarity"] = r.mean_similarity;
    json powers_dbm = json::array();
    for (double p : r.policy.powers) powers_dbm.push_back(watts_to_dbm(p));
    out["policy"] = {{"powers_watts", r.policy.powers},
                     {"powers_dbm", powers_dbm},
                     {"mu0", r.policy.mu0},
                     {"mu1", r.policy.mu1},
                     {"mu2", r.policy.mu2}};
    out["similarities"] = r.similarities;
    json trace = json::array();
    for (const auto& t : r.trace) {
        json row = {{"mu0", t.mu0}, {"mu1", t.mu1}, {"mu2", t.mu2}, {"best", t.best}};
        if (std::isnan(t.objective))
            row["objective"] = nullptr;
        else
            row["objective"] = t.objective;
        trace.push_back(row);
    }
    out["trace"] = trace;
    return out;
}

// ---- analytic-vs-simulation comparison --------------------------------------

struct ComparisonRow {
    std::string metric;
    double analytic_paper_mode = std::numeric_limits<double>::quiet_NaN();
    double analytic_flow_mode = std::numeric_limits<double>::quiet_NaN();
    double simulated = std::numeric_limits<double>::quiet_NaN();
    double rel_err = std::numeric_limits<double>::quiet_NaN(); // vs the configured mode
};

namespace detail {

struct ModeAnalytics {
    double d0, d1, d2, p_zero, aoi_cat1, aoi_cat2, aoi_blended, aoii;
};

inline std::optional<ModeAnalytics> mode_analytics(const SystemConfig& cfg, ArrivalMode mode) {
    QueueParams qp = cfg.qp;
    qp.arrival_mode = mode;
    try {
        StationarySolution st = solve_stationary(qp);
        AoiReport aoi = average_aoi(qp);
        std::vector<double> xis;
        for (double g : sinr_vector(cfg.scenario)) xis.push_back(similarity(g, cfg.logistic));
        ModeAnalytics m;
        m.d0 = st.d0;
        m.d1 = st.d1;
        m.d2 = st.d2;
        m.p_zero = 1.0 - st.eta0;
        m.aoi_cat1 = aoi.aoi_cat1;
        m.aoi_cat2 = aoi.aoi_cat2;
        m.aoi_blended = aoi.aoi_blended;
        m.aoii = average_aoii(aoi, xis).aoii;
        return m;
    } catch (const std::runtime_error&) {
        return std::nullopt; // unstable under this arrival mode
    }
}

} // namespace detail

inline std::vector<ComparisonRow> build_comparison(const SystemConfig& cfg, const SimReport& sim) {
    auto paper = detail::mode_analytics(cfg, ArrivalMode::paper);
    auto flow = detail::mode_analytics(cfg, ArrivalMode::flow);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    struct Entry {
        const char* name;
        double (*pick)(const detail::ModeAnalytics&);
        double sim;
    };
    const Entry entries[] = {
        {"d0", [](const detail::ModeAnalytics& m) { return m.d0; }, sim.mean_scheduler_delay},
        {"d1", [](const detail::ModeAnalytics& m) { return m.d1; }, sim.mean_server_delay_cat1},
        {"d2", [](const detail::ModeAnalytics& m) { return m.d2; }, sim.mean_server_delay_cat2},
        {"p_zero_scheduler_wait", [](const detail::ModeAnalytics& m) { return m.p_zero; },
         sim.p_zero_scheduler_wait},
        {"aoi_cat1", [](const detail::ModeAnalytics& m) { return m.aoi_cat1; }, sim.aoi_qdecomp_cat1},
        {"aoi_cat2", [](const detail::ModeAnalytics& m) { return m.aoi_cat2; }, sim.aoi_qdecomp_cat2},
        {"aoi_blended", [](const detail::ModeAnalytics& m) { return m.aoi_blended; },
         sim.aoi_qdecomp_blended},
        {"aoii", [](const detail::ModeAnalytics& m) { return m.aoii; }, sim.aoii_per_packet},
    };

    std::vector<ComparisonRow> rows;
    for (const auto& e : entries) {
        ComparisonRow row;
        row.metric = e.name;
        row.analytic_paper_mode = paper ? e.pick(*paper) : nan;
        row.analytic_flow_mode = flow ? e.pick(*flow) : nan;
        row.simulated = e.sim;
        double ref = cfg.qp.arrival_mode == ArrivalMode::paper ? row.analytic_paper_mode
                                                               : row.analytic_flow_mode;
        if (std::isfinite(ref) && ref != 0.0 && std::isfinite(row.simulated))
            row.rel_err = std::fabs(row.simulated - ref) / std::fabs(ref);
        rows.push_back(row);
    }
    return rows;
}

inline json comparison_json(const std::vector<ComparisonRow>& rows) {
    json arr = json::array();
    auto cell = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
    for (const auto& r : rows)
        arr.push_back({{"metric", r.metric},
                       {"analytic_paper_mode", cell(r.analytic_paper_mode)},
                       {"analytic_flow_mode", cell(r.analytic_flow_mode)},
                       {"simulated", cell(r.simulated)},
                       {"rel_err", cell(r.rel_err)}});
    return arr;
}

// ---- CSV helpers and the sweep engine ---------------------------------------

namespace detail {

inline std::string num_field(double v) {
    if (std::isnan(v)) return "NaN";
    if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
    return json(v).dump();
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

} // namespace detail

inline std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
    std::string out = "metric,analytic_paper_mode,analytic_flow_mode,simulated,rel_err\n";
    for (const auto& r : rows) {
        out += r.metric;
        out += ',' + detail::num_field(r.analytic_paper_mode);
        out += ',' + detail::num_field(r.analytic_flow_mode);
        out += ',' + detail::num_field(r.simulated);
        out += ',' + detail::num_field(r.rel_err);
        out += '\n';
    }
    return out;
}

struct SweepRow {
    std::string param1, value1;
    std::string param2, value2; // empty for one-parameter sweeps
    std::string metric;
    double value = std::numeric_limits<double>::quiet_NaN();
    std::string reason; // empty when the point evaluated cleanly
};

inline std::vector<SweepRow> run_sweep(const ExperimentSpec& spec) {
    const SweepParam& p1 = spec.sweep[0];
    const bool two = spec.sweep.size() == 2;
    // a single-element inner dimension keeps the loop uniform
    std::vector<json> inner = two ? spec.sweep[1].values : std::vector<json>{json()};

    std::vector<SweepRow> rows;
    for (const json& v1 : p1.values) {
        for (const json& v2 : inner) {
            json point = spec.base;
            point[detail::to_pointer(p1.path)] = v1;
            if (two) point[detail::to_pointer(spec.sweep[1].path)] = v2;

            std::optional<SystemConfig> cfg;
            std::string point_reason;
            try {
                cfg = parse_config(point);
            } catch (const std::runtime_error& e) {
                point_reason = e.what();
            }

            std::optional<MetricEvaluator> ev;
            if (cfg) ev.emplace(*cfg);
            for (const std::string& metric : spec.outputs) {
                SweepRow row;
                row.param1 = p1.path;
                row.value1 = v1.dump();
                if (two) {
                    row.param2 = spec.sweep[1].path;
                    row.value2 = v2.dump();
                }
                row.metric = metric;
                if (ev) {
                    try {
                        row.value = ev->value(metric);
                    } catch (const std::domain_error& e) {
                        row.reason = e.what();
                    } catch (const std::runtime_error& e) {
                        row.reason = e.what();
                    }
                } else {
                    row.reason = point_reason;
                }
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

inline std::string sweep_csv(const std::string& experiment, const std::vector<SweepRow>& rows) {
    std::string out = "experiment,param1,value1,param2,value2,metric,value,reason\n";
    for (const auto& r : rows) {
        out += detail::csv_field(experiment);
        out += ',' + detail::csv_field(r.param1);
        out += ',' + detail::csv_field(r.value1);
        out += ',' + detail::csv_field(r.param2);
        out += ',' + detail::csv_field(r.value2);
        out += ',' + detail::csv_field(r.metric);
        out += ',' + detail::num_field(r.value);
        out += ',' + detail::csv_field(r.reason);
        out += '\n';
    }
    return out;
}

inline json sweep_json(const std::string& experiment, const std::vector<SweepRow>& rows) {
    json arr = json::array();
    for (const auto& r : rows) {
        json row = json::object();
        row["experiment"] = experiment;
        row["param1"] = r.param1;
        row["value1"] = r.value1;
        row["param2"] = r.param2;
        row["value2"] = r.value2;
        row["metric"] = r.metric;
        row["value"] = std::isnan(r.value) ? json(nullptr) : json(r.value);
        row["reason"] = r.reason;
        arr.push_back(row);
    }
    return arr;
}

} // namespace aoii
