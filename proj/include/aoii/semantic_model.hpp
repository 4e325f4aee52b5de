#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"

namespace aoii {

struct UserChannel {
    double gain_sq = 1.0; // |h|^2
    double power = 0.0;   // watts
};

struct LogisticParams {
    // Illustrative defaults; the fitted values are deployment inputs.
    double a1 = 0.2;
    double a2 = 0.95;
    double c1 = 0.5;
    double c2 = -1.0;
};

struct NomaScenario {
    std::vector<UserChannel> users; // sorted by nonincreasing gain_sq
    double noise_power = 1e-6;      // sigma^2, watts
    double bandwidth = 200e3;       // W, Hz
    double info_per_word = 1.0;     // I/L, suts per word
    int symbols_per_word = 20;      // average semantic symbols per word
    int max_symbols = 40;           // C3 upper bound
    double p_max = 0.01;            // watts
    double s_th = 2000.0;           // C1 threshold, suts/s
    double xi_th = 0.3;             // C2 threshold
    double xi_hat = 0.6;            // category boundary
};

inline void validate(const LogisticParams& lp) {
    if (!(lp.a1 >= 0.0 && lp.a1 < lp.a2 && lp.a2 <= 1.0))
        throw ConfigError("logistic_params: need 0 <= a1 < a2 <= 1");
    if (!(lp.c1 > 0.0)) throw ConfigError("logistic_params: need c1 > 0");
}

inline void validate(const NomaScenario& sc) {
    if (sc.users.empty()) throw ConfigError("scenario: at least one user required");
    for (std::size_t k = 0; k < sc.users.size(); ++k) {
        const auto& u = sc.users[k];
        if (!(u.gain_sq > 0.0))
            throw ConfigError("scenario: user " + std::to_string(k + 1) + " gain_sq must be > 0");
        if (!(u.power > 0.0 && u.power <= sc.p_max))
            throw ConfigError("scenario: user " + std::to_string(k + 1) +
                              " power violates C4 (0 < p <= p_max)");
        if (k > 0 && sc.users[k - 1].gain_sq < u.gain_sq)
            throw ConfigError("scenario: users must be sorted by nonincreasing gain_sq");
    }
    if (!(sc.noise_power > 0.0)) throw ConfigError("scenario: noise_power must be > 0");
    if (!(sc.bandwidth > 0.0)) throw ConfigError("scenario: bandwidth must be > 0");
    if (!(sc.info_per_word > 0.0)) throw ConfigError("scenario: info_per_word must be > 0");
    if (!(sc.symbols_per_word >= 1 && sc.symbols_per_word <= sc.max_symbols))
        throw ConfigError("scenario: symbols_per_word violates C3 (1 <= rho <= max_symbols)");
    if (!(sc.xi_th > 0.0 && sc.xi_th < sc.xi_hat && sc.xi_hat <= 1.0))
        throw ConfigError("scenario: need 0 < xi_th < xi_hat <= 1");
    if (!(sc.s_th >= 0.0)) throw ConfigError("scenario: s_th must be >= 0");
}

// Per-user SINR under perfect SIC: user k is decoded first and sees all
// later users' signals as interference; the last user sees only noise.
inline std::vector<double> sinr_vector(const NomaScenario& sc) {
    std::vector<double> gamma(sc.users.size());
    double interference = 0.0;
    for (std::size_t k = sc.users.size(); k-- > 0;) {
        const auto& u = sc.users[k];
        gamma[k] = u.power * u.gain_sq / (sc.noise_power + interference);
        interference += u.power * u.gain_sq;
    }
    return gamma;
}

namespace detail {
inline double logistic_sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}
} // namespace detail

// Generalized-logistic similarity surrogate: a1 + (a2-a1)/(1+e^-(c1*g+c2)).
inline double similarity(double gamma, const LogisticParams& lp) {
    return lp.a1 + (lp.a2 - lp.a1) * detail::logistic_sigmoid(lp.c1 * gamma + lp.c2);
}

// d(xi)/d(gamma), written via s(1-s) so both saturation tails underflow to 0
// instead of producing inf/inf.
inline double similarity_derivative(double gamma, const LogisticParams& lp) {
    double s = detail::logistic_sigmoid(lp.c1 * gamma + lp.c2);
    return lp.c1 * (lp.a2 - lp.a1) * s * (1.0 - s);
}

// Semantic rate in suts/s: (W * I/L / rho) * xi.
inline double semantic_rate(double gamma, const NomaScenario& sc, const LogisticParams& lp) {
    return sc.bandwidth * sc.info_per_word / sc.symbols_per_word * similarity(gamma, lp);
}

struct UserFeasibility {
    double sinr = 0.0;
    double xi = 0.0;
    double rate = 0.0;
    bool rate_ok = false;
    bool xi_ok = false;
};

struct FeasibilityReport {
    std::vector<UserFeasibility> per_user;
    double min_rate = 0.0;
    double min_xi = 0.0;
    bool rate_feasible = false; // C1: min_k S^k >= s_th
    bool xi_feasible = false;   // C2: min_k xi^k >= xi_th
    bool feasible() const { return rate_feasible && xi_feasible; }
};

inline FeasibilityReport check_feasibility(const NomaScenario& sc, const LogisticParams& lp) {
    FeasibilityReport rep;
    auto gamma = sinr_vector(sc);
    rep.per_user.resize(gamma.size());
    rep.min_rate = std::numeric_limits<double>::infinity();
    rep.min_xi = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < gamma.size(); ++k) {
        auto& u = rep.per_user[k];
        u.sinr = gamma[k];
        u.xi = similarity(gamma[k], lp);
        u.rate = semantic_rate(gamma[k], sc, lp);
        u.rate_ok = u.rate >= sc.s_th;
        u.xi_ok = u.xi >= sc.xi_th;
        rep.min_rate = std::min(rep.min_rate, u.rate);
        rep.min_xi = std::min(rep.min_xi, u.xi);
    }
    rep.rate_feasible = rep.min_rate >= sc.s_th;
    rep.xi_feasible = rep.min_xi >= sc.xi_th;
    return rep;
}

} // namespace aoii
