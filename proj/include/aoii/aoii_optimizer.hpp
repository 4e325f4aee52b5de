#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"
#include "queueing_analytic.hpp"
#include "semantic_model.hpp"

namespace aoii {

struct PolicySpace {
    Interval mu0_box{15.0, 20.0}; // C6
    Interval mu1_box{10.0, 15.0};
    Interval mu2_box{5.0, 10.0};
    int grid_steps = 100;          // Q in the outer linear search
    Interval power_box{0.0, 0.01}; // (0, p_max], C4
};

inline void validate(const PolicySpace& space) {
    auto check_box = [](const Interval& box, const char* name) {
        if (!std::isfinite(box.lo) || !std::isfinite(box.hi) || !(box.lo < box.hi))
            throw ConfigError(std::string("policy_space: ") + name + " is not a valid interval");
    };
    check_box(space.mu0_box, "mu0_box");
    check_box(space.mu1_box, "mu1_box");
    check_box(space.mu2_box, "mu2_box");
    if (!(space.mu0_box.lo > 0.0 && space.mu1_box.lo > 0.0 && space.mu2_box.lo > 0.0))
        throw ConfigError("policy_space: service-rate boxes must be positive");
    if (!(space.mu1_box.hi > space.mu2_box.lo))
        throw ConfigError("policy_space: C7 infeasible (mu1_box admits no value above mu2_box)");
    if (space.grid_steps < 1) throw ConfigError("policy_space: grid_steps must be >= 1");
    if (!(space.power_box.hi > 0.0)) throw ConfigError("policy_space: power_box must be positive");
}

struct Policy {
    std::vector<double> powers; // watts, per user
    double mu0 = 0.0, mu1 = 0.0, mu2 = 0.0;
};

struct TracePoint {
    double mu0 = 0.0;
    double mu1 = 0.0, mu2 = 0.0; // inner optimum at this grid point
    double objective = 0.0;      // blended AoI; NaN when no stable (mu1, mu2) exists
    bool best = false;
};

struct P1Result {
    double mu0 = 0.0, mu1 = 0.0, mu2 = 0.0;
    double aoi_min = 0.0;
    std::vector<TracePoint> trace; // grid_steps + 1 entries, grid order
};

namespace detail {
inline constexpr double kC5Clip = 1e-6; // stable box starts at lambda*(1+this)
inline constexpr double kC7Gap = 1e-9;  // mu2 must stay below mu1 by this
} // namespace detail

// Exact linear search over the mu0 grid; for each grid point the inner
// problem separates (the blended-AoI Hessian in (mu1, mu2) is diagonal), so
// each server rate is minimized independently over its stability-clipped box.
// Ties in the objective keep the smallest mu0 (first found in grid order).
inline P1Result solve_p1(const QueueParams& qp_template, const PolicySpace& space,
                         SolveSettings settings = {}) {
    validate(space);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    int q = space.grid_steps;
    double eps = (space.mu0_box.hi - space.mu0_box.lo) / static_cast<double>(q);

    P1Result result;
    result.aoi_min = std::numeric_limits<double>::infinity();
    result.trace.reserve(static_cast<std::size_t>(q) + 1);
    int best_index = -1;

    for (int k = 0; k <= q; ++k) {
        double mu0 = k == q ? space.mu0_box.hi : space.mu0_box.lo + eps * static_cast<double>(k);
        TracePoint tp;
        tp.mu0 = mu0;
        tp.mu1 = tp.mu2 = tp.objective = nan;
        double rho0 = qp_template.lambda0 / mu0;
        if (rho0 < 1.0 - kStabilityMargin) {
            double eta0 = eta_dm1(rho0, settings);
            double d0 = 1.0 / mu0 + eta0 / (mu0 * (1.0 - eta0));
            double scale = qp_template.arrival_mode == ArrivalMode::paper
                               ? mu0 * (1.0 - eta0)
                               : qp_template.lambda0;
            double a = qp_template.a;
            double lambda1 = a * scale;
            double lambda2 = (1.0 - a) * scale;

            Interval box1{std::max(space.mu1_box.lo, lambda1 * (1.0 + detail::kC5Clip)),
                          space.mu1_box.hi};
            if (box1.lo < box1.hi) {
                auto [mu1, delay1] = minimize_1d(
                    [&](double m) { return server_delay(m, lambda1, settings); }, box1, settings);
                Interval box2{std::max(space.mu2_box.lo, lambda2 * (1.0 + detail::kC5Clip)),
                              std::min(space.mu2_box.hi, mu1 - detail::kC7Gap)};
                if (box2.lo < box2.hi) {
                    auto [mu2, delay2] = minimize_1d(
                        [&](double m) { return server_delay(m, lambda2, settings); }, box2,
                        settings);
                    tp.mu1 = mu1;
                    tp.mu2 = mu2;
                    tp.objective = 0.5 / qp_template.lambda0 + qp_template.theta + d0 +
                                   a * delay1 + (1.0 - a) * delay2;
                }
            }
        }
        if (std::isfinite(tp.objective) && tp.objective < result.aoi_min) {
            result.aoi_min = tp.objective;
            result.mu0 = tp.mu0;
            result.mu1 = tp.mu1;
            result.mu2 = tp.mu2;
            best_index = k;
        }
        result.trace.push_back(tp);
    }
    if (best_index < 0)
        throw InfeasibleError("P1: no stable (C5) service-rate policy in the search space");
    result.trace[static_cast<std::size_t>(best_index)].best = true;
    return result;
}

struct P3Result {
    std::vector<double> powers; // all p_max
    std::vector<double> similarities;
    double mean_similarity = 0.0;
    bool feasible = false;
    FeasibilityReport report;
};

// The similarity subproblem's prescribed policy: every user transmits at
// p_max; feasibility of C1/C2 is verified, never searched around.
inline P3Result solve_p3(const NomaScenario& scenario, const LogisticParams& lp) {
    NomaScenario at_pmax = scenario;
    for (auto& u : at_pmax.users) u.power = at_pmax.p_max;
    P3Result result;
    result.powers.assign(at_pmax.users.size(), at_pmax.p_max);
    result.report = check_feasibility(at_pmax, lp);
    double acc = 0.0;
    result.similarities.reserve(result.report.per_user.size());
    for (const auto& u : result.report.per_user) {
        result.similarities.push_back(u.xi);
        acc += u.xi;
    }
    result.mean_similarity = acc / static_cast<double>(result.similarities.size());
    result.feasible = result.report.feasible();
    if (!result.feasible) {
        for (std::size_t k = 0; k < result.report.per_user.size(); ++k) {
            const auto& u = result.report.per_user[k];
            if (!u.rate_ok)
                throw InfeasibleError("P3: C1 violated at p_max for user " + std::to_string(k + 1) +
                                      " (rate " + std::to_string(u.rate) + " < s_th)");
            if (!u.xi_ok)
                throw InfeasibleError("P3: C2 violated at p_max for user " + std::to_string(k + 1) +
                                      " (similarity " + std::to_string(u.xi) + " < xi_th)");
        }
    }
    return result;
}

struct SolveResult {
    Policy policy;
    double aoi_min = 0.0;
    double mean_similarity = 0.0;
    double aoii_min = 0.0; // aoi_min * (1 - mean_similarity)
    std::vector<double> similarities;
    std::vector<TracePoint> trace;
};

inline SolveResult solve_p0(const NomaScenario& scenario, const LogisticParams& lp,
                            const QueueParams& qp_template, const PolicySpace& space,
                            SolveSettings settings = {}) {
    P3Result p3 = solve_p3(scenario, lp);
    P1Result p1 = solve_p1(qp_template, space, settings);
    SolveResult result;
    result.policy.powers = p3.powers;
    result.policy.mu0 = p1.mu0;
    result.policy.mu1 = p1.mu1;
    result.policy.mu2 = p1.mu2;
    result.aoi_min = p1.aoi_min;
    result.mean_similarity = p3.mean_similarity;
    result.aoii_min = p1.aoi_min * (1.0 - p3.mean_similarity);
    result.similarities = p3.similarities;
    result.trace = std::move(p1.trace);
    return result;
}

struct HessianReport {
    double z1 = 0.0, z2 = 0.0, z3 = 0.0, z4 = 0.0;
    bool is_psd = false;
};

// Central-difference Hessian of the blended AoI in (mu1, mu2) at fixed mu0,
// h = 1e-4 relative.  The separability claim is that z2 and z3 vanish.
inline HessianReport hessian_check(const QueueParams& qp, double mu0_fixed,
                                   SolveSettings settings = {}) {
    auto objective = [&](double mu1, double mu2) {
        QueueParams probe = qp;
        probe.mu0 = mu0_fixed;
        probe.mu1 = mu1;
        probe.mu2 = mu2;
        return average_aoi(probe, settings).aoi_blended;
    };
    double m1 = qp.mu1, m2 = qp.mu2;
    double h1 = 1e-4 * m1, h2 = 1e-4 * m2;
    double f00 = objective(m1, m2);
    double fpp = objective(m1 + h1, m2 + h2);
    double fpm = objective(m1 + h1, m2 - h2);
    double fmp = objective(m1 - h1, m2 + h2);
    double fmm = objective(m1 - h1, m2 - h2);

    HessianReport rep;
    rep.z1 = (objective(m1 + h1, m2) - 2.0 * f00 + objective(m1 - h1, m2)) / (h1 * h1);
    rep.z4 = (objective(m1, m2 + h2) - 2.0 * f00 + objective(m1, m2 - h2)) / (h2 * h2);
    rep.z2 = ((fpp - fpm) - (fmp - fmm)) / (4.0 * h1 * h2);
    rep.z3 = ((fpp - fmp) - (fpm - fmm)) / (4.0 * h1 * h2);
    double scale = std::max({std::fabs(rep.z1), std::fabs(rep.z4), 1e-12});
    double slack = 1e-9 * scale;
    rep.is_psd = rep.z1 > -slack && rep.z4 > -slack &&
                 rep.z1 * rep.z4 - rep.z2 * rep.z3 > -slack * scale;
    return rep;
}

} // namespace aoii
