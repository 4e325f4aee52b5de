#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"

namespace aoii {

// Strictness margin for C5: utilizations must stay below 1 - this.
inline constexpr double kStabilityMargin = 1e-9;

enum class ArrivalMode {
    paper, // lambda_i = {a,b} * mu0 * (1 - eta0): servers see the scheduler departure rate
    flow   // lambda_i = {a,b} * lambda0, throughput conservation
};

struct QueueParams {
    double lambda0 = 10.0; // status-update generation rate, 1/(N*T)
    double mu0 = 20.0;     // scheduler service rate
    double mu1 = 15.0;     // Category-I server
    double mu2 = 10.0;     // Category-II server
    double a = 0.5;        // Category-I proportion; b = 1 - a
    double theta = 0.1;    // constant transmission time E[Phi/S]
    ArrivalMode arrival_mode = ArrivalMode::paper;
};

inline void validate(const QueueParams& qp) {
    if (!(qp.lambda0 > 0.0 && qp.mu0 > 0.0 && qp.mu1 > 0.0 && qp.mu2 > 0.0))
        throw ConfigError("queue_params: all rates must be > 0");
    if (!(qp.a > 0.0 && qp.a <= 1.0))
        throw ConfigError("queue_params: category proportion a must lie in (0, 1]");
    if (!(qp.theta >= 0.0)) throw ConfigError("queue_params: theta must be >= 0");
    if (!(qp.mu1 > qp.mu2))
        throw ConfigError("queue_params: C7 requires mu1 > mu2");
    if (qp.lambda0 / qp.mu0 >= 1.0 - kStabilityMargin)
        throw StabilityError("queue_params: C5 violated at the scheduler (lambda0/mu0 = " +
                             std::to_string(qp.lambda0 / qp.mu0) + " must be < 1)");
}

// Root of eta = exp(-(1-eta)/rho) in (0,1) for a D/M/1 queue.  Computed on
// the principal Lambert-W branch (the smallest root; W_-1 gives the spurious
// eta = 1) and cross-checked against direct fixed-point iteration.
inline double eta_dm1(double rho, SolveSettings settings = {}) {
    if (!(rho > 0.0 && rho < 1.0))
        throw DomainError("eta_dm1: utilization " + std::to_string(rho) + " outside (0,1)");
    double arg = -std::exp(-1.0 / rho) / rho;
    double eta = -rho * lambert_w0(arg, settings);
    eta = std::clamp(eta, 0.0, 1.0);

    auto map = [rho](double e) { return std::exp(-(1.0 - e) / rho); };
    double eta_fp = fixed_point(map, 0.0, settings);
    // |f(x)-x| <= abs_tol bounds the fixed-point root error by
    // abs_tol / (1 - f'(root)); compare the two routes at that resolution
    double conditioning = std::max(1.0 - eta_fp / rho, 1e-6);
    double agree_tol = std::max(1e-10, 2.0 * settings.abs_tol / conditioning);
    if (std::fabs(eta - eta_fp) > agree_tol)
        throw NonConvergence("eta_dm1: Lambert-W and fixed-point routes disagree");
    return eta;
}

// Mean D/M/1 system delay 1/mu + eta/(mu(1-eta)); lambda = 0 degenerates to
// the pure service time (idle category).
inline double server_delay(double mu_i, double lambda_i, SolveSettings settings = {}) {
    if (!(mu_i > 0.0) || lambda_i < 0.0)
        throw DomainError("server_delay: rates must be nonnegative, mu > 0");
    if (lambda_i == 0.0) return 1.0 / mu_i;
    double rho = lambda_i / mu_i;
    if (rho >= 1.0 - kStabilityMargin)
        throw StabilityError("server_delay: C5 violated (lambda/mu = " + std::to_string(rho) +
                             " must be < 1)");
    double eta = eta_dm1(rho, settings);
    return 1.0 / mu_i + eta / (mu_i * (1.0 - eta));
}

inline double scheduler_delay(const QueueParams& qp, SolveSettings settings = {}) {
    double eta0 = eta_dm1(qp.lambda0 / qp.mu0, settings);
    return 1.0 / qp.mu0 + eta0 / (qp.mu0 * (1.0 - eta0));
}

// Arrival rates seen by the two category servers.
inline std::pair<double, double> server_arrival_rates(const QueueParams& qp, double eta0) {
    if (!(eta0 >= 0.0 && eta0 < 1.0))
        throw DomainError("server_arrival_rates: eta0 outside [0,1)");
    double scale = qp.arrival_mode == ArrivalMode::paper ? qp.mu0 * (1.0 - eta0) : qp.lambda0;
    double lambda1 = qp.a * scale;
    double lambda2 = (1.0 - qp.a) * scale;
    if (lambda1 > 0.0 && lambda1 / qp.mu1 >= 1.0 - kStabilityMargin)
        throw StabilityError("server_arrival_rates: C5 violated at server 1 (lambda1/mu1 = " +
                             std::to_string(lambda1 / qp.mu1) + ")");
    if (lambda2 > 0.0 && lambda2 / qp.mu2 >= 1.0 - kStabilityMargin)
        throw StabilityError("server_arrival_rates: C5 violated at server 2 (lambda2/mu2 = " +
                             std::to_string(lambda2 / qp.mu2) + ")");
    return {lambda1, lambda2};
}

struct StationarySolution {
    double eta0 = 0.0, eta1 = 0.0, eta2 = 0.0;
    double lambda1 = 0.0, lambda2 = 0.0;
    double rho0 = 0.0, rho1 = 0.0, rho2 = 0.0;
    double d0 = 0.0, d1 = 0.0, d2 = 0.0; // mean system delays per stage
};

inline StationarySolution solve_stationary(const QueueParams& qp, SolveSettings settings = {}) {
    StationarySolution s;
    s.rho0 = qp.lambda0 / qp.mu0;
    if (s.rho0 >= 1.0 - kStabilityMargin)
        throw StabilityError("solve_stationary: C5 violated at the scheduler (lambda0/mu0 = " +
                             std::to_string(s.rho0) + ")");
    s.eta0 = eta_dm1(s.rho0, settings);
    s.d0 = 1.0 / qp.mu0 + s.eta0 / (qp.mu0 * (1.0 - s.eta0));
    auto [l1, l2] = server_arrival_rates(qp, s.eta0);
    s.lambda1 = l1;
    s.lambda2 = l2;
    s.rho1 = l1 / qp.mu1;
    s.rho2 = l2 / qp.mu2;
    s.eta1 = l1 > 0.0 ? eta_dm1(s.rho1, settings) : 0.0;
    s.eta2 = l2 > 0.0 ? eta_dm1(s.rho2, settings) : 0.0;
    s.d1 = server_delay(qp.mu1, l1, settings);
    s.d2 = server_delay(qp.mu2, l2, settings);
    return s;
}

struct AoiReport {
    double aoi_cat1 = 0.0;    // average AoI of Category-I updates
    double aoi_cat2 = 0.0;    // average AoI of Category-II updates
    double aoi_blended = 0.0; // a*cat1 + (1-a)*cat2
};

// Average AoI per category: 1/(2*lambda0) + theta + E[D0] + E[Di].
inline AoiReport average_aoi(const QueueParams& qp, SolveSettings settings = {}) {
    StationarySolution s = solve_stationary(qp, settings);
    AoiReport rep;
    double base = 0.5 / qp.lambda0 + qp.theta + s.d0;
    rep.aoi_cat1 = base + s.d1;
    rep.aoi_cat2 = base + s.d2;
    rep.aoi_blended = qp.a * rep.aoi_cat1 + (1.0 - qp.a) * rep.aoi_cat2;
    return rep;
}

struct AoiiReport {
    double mean_one_minus_xi = 0.0;
    double aoii = 0.0; // aoi_blended * mean(1 - xi)
};

inline AoiiReport average_aoii(const AoiReport& aoi, const std::vector<double>& similarities) {
    if (similarities.empty()) throw EmptyInput("average_aoii: no similarities");
    double acc = 0.0;
    for (double xi : similarities) {
        if (!(xi >= 0.0 && xi <= 1.0))
            throw DomainError("average_aoii: similarity outside [0,1]");
        acc += 1.0 - xi;
    }
    AoiiReport rep;
    rep.mean_one_minus_xi = acc / static_cast<double>(similarities.size());
    rep.aoii = aoi.aoi_blended * rep.mean_one_minus_xi;
    return rep;
}

// Embedded-chain transition matrix of a D/M/1 queue at arrival epochs,
// truncated to `truncation` states with the tail mass absorbed into the last
// column so every row stays stochastic.  theta_i = e^{-1/rho} (1/rho)^i / i!.
inline std::vector<std::vector<double>> dm1_transition_matrix(double rho, int truncation = 60) {
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("dm1_transition_matrix: rho outside (0,1)");
    if (truncation < 2) throw DomainError("dm1_transition_matrix: truncation must be >= 2");
    std::size_t n = static_cast<std::size_t>(truncation);
    std::vector<double> theta(n);
    theta[0] = std::exp(-1.0 / rho);
    for (std::size_t i = 1; i < n; ++i) theta[i] = theta[i - 1] / (rho * static_cast<double>(i));

    std::vector<std::vector<double>> p(n, std::vector<double>(n, 0.0));
    double tail = 1.0; // 1 - sum_{k<=i} theta_k
    for (std::size_t i = 0; i < n; ++i) {
        tail -= theta[i];
        p[i][0] = std::max(0.0, tail);
        for (std::size_t j = 1; j <= i + 1 && j < n; ++j) p[i][j] = theta[i + 1 - j];
        double rowsum = 0.0;
        for (double v : p[i]) rowsum += v;
        p[i][n - 1] += std::max(0.0, 1.0 - rowsum);
    }
    return p;
}

// Stationary distribution of a row-stochastic matrix by power iteration.
inline std::vector<double> stationary_distribution(const std::vector<std::vector<double>>& p,
                                                   double tol = 1e-13, int max_iter = 100000) {
    std::size_t n = p.size();
    if (n == 0) throw EmptyInput("stationary_distribution: empty matrix");
    std::vector<double> pi(n, 1.0 / static_cast<double>(n)), next(n);
    for (int it = 0; it < max_iter; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double w = pi[i];
            if (w == 0.0) continue;
            const auto& row = p[i];
            for (std::size_t j = 0; j < n; ++j) next[j] += w * row[j];
        }
        double norm = 0.0;
        for (double v : next) norm += v;
        double diff = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            next[j] /= norm;
            diff += std::fabs(next[j] - pi[j]);
        }
        pi.swap(next);
        if (diff <= tol) return pi;
    }
    throw NonConvergence("stationary_distribution: power iteration exhausted max_iter");
}

// Waiting-time distribution of a stable D/M/1 queue:
// F_W(t) = 1 - eta e^{-mu(1-eta)t}, with an atom of mass 1-eta at t = 0.
inline double waiting_time_cdf(double eta, double mu, double t) {
    if (!(eta > 0.0 && eta < 1.0)) throw DomainError("waiting_time_cdf: eta outside (0,1)");
    if (!(mu > 0.0)) throw DomainError("waiting_time_cdf: mu must be > 0");
    if (t < 0.0) return 0.0;
    return 1.0 - eta * std::exp(-mu * (1.0 - eta) * t);
}

} // namespace aoii
