#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <aoii/report.hpp>

namespace {

void emit(const std::string& payload, const std::string& out_path) {
    std::cout << payload;
    if (!out_path.empty()) {
        std::ofstream f(out_path, std::ios::binary);
        if (!f) throw aoii::ConfigError("cannot open output file '" + out_path + "'");
        f << payload;
    }
}

std::string json_payload(const aoii::json& j) { return j.dump(2) + "\n"; }

std::string metrics_csv(const aoii::json& obj) {
    std::string out = "metric,value\n";
    for (auto it = obj.begin(); it != obj.end(); ++it)
        out += it.key() + "," + aoii::detail::num_field(it.value().get<double>()) + "\n";
    return out;
}

std::string trace_csv(const aoii::SolveResult& res) {
    std::string out = "mu0,mu1,mu2,objective,best\n";
    for (const auto& t : res.trace) {
        out += aoii::detail::num_field(t.mu0);
        out += ',' + aoii::detail::num_field(t.mu1);
        out += ',' + aoii::detail::num_field(t.mu2);
        out += ',' + aoii::detail::num_field(t.objective);
        out += t.best ? ",1\n" : ",0\n";
    }
    return out;
}

struct Options {
    std::string config_path;
    std::string experiment_path;
    std::string out_path;
    std::string format; // empty = subcommand default
    std::string trace_path;
    std::int64_t seed = -1;
    std::int64_t packets = -1;
};

std::string pick_format(const std::string& requested, const char* fallback) {
    return requested.empty() ? fallback : requested;
}

int cmd_analytic(const Options& opt) {
    aoii::SystemConfig cfg = aoii::load_config(opt.config_path);
    aoii::json metrics = aoii::analytic_json(cfg);
    std::string fmt = pick_format(opt.format, "json");
    emit(fmt == "csv" ? metrics_csv(metrics) : json_payload(metrics), opt.out_path);
    return 0;
}

int cmd_simulate(const Options& opt) {
    aoii::SystemConfig cfg = aoii::load_config(opt.config_path);
    if (opt.seed >= 0) cfg.sim.rng_seed = static_cast<std::uint64_t>(opt.seed);
    if (opt.packets >= 0) cfg.sim.horizon_packets = opt.packets;
    aoii::validate(cfg.sim);

    aoii::SimReport rep = aoii::run(cfg.sim);
    auto rows = aoii::build_comparison(cfg, rep);

    if (!opt.trace_path.empty()) {
        std::ofstream f(opt.trace_path, std::ios::binary);
        if (!f) throw aoii::ConfigError("cannot open trace file '" + opt.trace_path + "'");
        aoii::write_trace_csv(rep, f);
    }

    std::string fmt = pick_format(opt.format, "json");
    if (fmt == "csv") {
        emit(aoii::comparison_csv(rows), opt.out_path);
    } else {
        aoii::json payload = {{"sim", aoii::sim_report_json(rep)},
                              {"comparison", aoii::comparison_json(rows)}};
        emit(json_payload(payload), opt.out_path);
    }
    return 0;
}

int cmd_optimize(const Options& opt) {
    aoii::SystemConfig cfg = aoii::load_config(opt.config_path);
    aoii::SolveResult res = aoii::solve_p0(cfg.scenario, cfg.logistic, cfg.qp, cfg.space);
    std::string fmt = pick_format(opt.format, "json");
    emit(fmt == "csv" ? trace_csv(res) : json_payload(aoii::solve_result_json(res)), opt.out_path);
    return 0;
}

int cmd_sweep(const Options& opt) {
    aoii::ExperimentSpec spec = aoii::load_experiment(opt.experiment_path);
    auto rows = aoii::run_sweep(spec);
    std::string fmt = pick_format(opt.format, "csv");
    emit(fmt == "json" ? json_payload(aoii::sweep_json(spec.name, rows))
                       : aoii::sweep_csv(spec.name, rows),
         opt.out_path);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Analytic, simulated, and optimized age metrics for a two-stage "
                 "status-update pipeline with semantic-similarity routing"};
    app.require_subcommand(1);

    Options opt;
    app.add_option("--out", opt.out_path, "also write the payload to this file");
    app.add_option("--format", opt.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));

    auto* analytic = app.add_subcommand("analytic", "closed-form metrics for a config");
    analytic->add_option("config", opt.config_path, "config file")->required();
    analytic->fallthrough();

    auto* simulate = app.add_subcommand("simulate", "run the event simulator and compare");
    simulate->add_option("config", opt.config_path, "config file")->required();
    simulate->add_option("--seed", opt.seed, "override sim_config.rng_seed");
    simulate->add_option("--packets", opt.packets, "override sim_config.horizon_packets");
    simulate->add_option("--trace", opt.trace_path, "write per-packet trace CSV here");
    simulate->fallthrough();

    auto* optimize = app.add_subcommand("optimize", "solve for the age-optimal policy");
    optimize->add_option("config", opt.config_path, "config file")->required();
    optimize->fallthrough();

    auto* sweep = app.add_subcommand("sweep", "run an experiment spec, emit long-format rows");
    sweep->add_option("experiment", opt.experiment_path, "experiment spec file")->required();
    sweep->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (analytic->parsed()) return cmd_analytic(opt);
        if (simulate->parsed()) return cmd_simulate(opt);
        if (optimize->parsed()) return cmd_optimize(opt);
        return cmd_sweep(opt);
    } catch (const aoii::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::runtime_error& e) {
        // stability, feasibility, convergence, empty-input
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
