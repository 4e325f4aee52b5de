#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "errors.hpp"

namespace aoii {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

struct SolveSettings {
    double abs_tol = 1e-12;
    int max_iter = 200;
};

// Principal-branch Lambert W on [-1/e, inf).  Seeds from a branch-point
// expansion near -1/e, a Taylor series near 0, or the log-log asymptote for
// large x, then polishes with Halley iteration.
inline double lambert_w0(double x, SolveSettings settings = {}) {
    if (!std::isfinite(x)) throw DomainError("lambert_w0: non-finite argument");
    const double branch_point = -std::exp(-1.0);
    if (x < branch_point - settings.abs_tol)
        throw DomainError("lambert_w0: argument " + std::to_string(x) + " below -1/e");
    if (x <= branch_point) return -1.0;
    if (x == 0.0) return 0.0;

    double w;
    if (x < -0.3235) {
        double q = 2.0 * (1.0 + std::exp(1.0) * x);
        if (q <= 0.0) return -1.0; // within rounding of the branch point
        double p = std::sqrt(q);
        w = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0)));
        // so close to the branch point that Halley's f' ~ 0; the expansion
        // is already past double precision there
        if (p < 1e-4) return w;
    } else if (x < 3.0) {
        w = std::log1p(x); // crude but inside Halley's basin on (-1/e, 3)
    } else {
        double l = std::log(x); // l > 1 here, so log(l) is finite
        double ll = std::log(l);
        w = l - ll + ll / l;
    }

    for (int i = 0; i < settings.max_iter; ++i) {
        double ew = std::exp(w);
        double f = w * ew - x;
        if (f == 0.0) break;
        double fp = ew * (w + 1.0);
        double step = f / (fp - 0.5 * f * (w + 2.0) / (w + 1.0));
        w -= step;
        if (std::fabs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::fabs(w)))
            break;
    }

    double residual = std::fabs(w * std::exp(w) - x);
    double bound = std::max(settings.abs_tol,
                            8.0 * std::numeric_limits<double>::epsilon() * std::fabs(x));
    if (residual > bound)
        throw NonConvergence("lambert_w0: residual " + std::to_string(residual) +
                             " above tolerance");
    return w;
}

// Solves x = f(x) for a map on [0,1).  Plain substitution handles fast
// contractions; when |f'| is near 1 (heavy-traffic roots) it switches to
// bisection on h(x) = f(x) - x over [0, 1).  The endpoints themselves are
// never accepted as roots: maps of the family e^{-(1-x)/rho} satisfy
// h(1) = 0 at a spurious fixed point, so only a sign change inside the
// bracket counts.
template <typename F>
inline double fixed_point(F&& f, double x0, SolveSettings settings = {}) {
    int budget = settings.max_iter;
    double x = x0;
    int plain = std::min(60, budget);
    for (int i = 0; i < plain; ++i) {
        double fx = f(x);
        if (!std::isfinite(fx)) break;
        if (std::fabs(fx - x) <= settings.abs_tol) return x;
        x = fx;
    }
    budget -= plain;

    double lo = 0.0;
    double hi = 1.0 - 1e-12;
    double hlo = f(lo) - lo;
    double hhi = f(hi) - hi;
    if (hlo == 0.0) return lo;
    // near rho -> 1 the right endpoint's h underflows to a rounded 0; zero
    // still brackets, it must just never be returned as the root itself
    bool lo_pos = hlo > 0.0;
    bool hi_pos = hhi > 0.0;
    if (hhi == 0.0) hi_pos = !lo_pos;
    if (lo_pos != hi_pos) {
        for (int i = 0; i < budget; ++i) {
            double mid = 0.5 * (lo + hi);
            double hmid = f(mid) - mid;
            if (std::fabs(hmid) <= settings.abs_tol) return mid;
            if ((hmid > 0.0) == lo_pos) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    } else {
        // no bracket: fall back to damped substitution
        for (int i = 0; i < budget; ++i) {
            double fx = f(x);
            if (std::fabs(fx - x) <= settings.abs_tol) return x;
            x = 0.5 * (x + fx);
        }
    }
    throw NonConvergence("fixed_point: no solution within tolerance after max_iter");
}

// Golden-section search for a unimodal g on [lo, hi].  Boundary minimizers
// are returned exactly at lo/hi so monotone objectives land on the box edge.
template <typename G>
inline std::pair<double, double> minimize_1d(G&& g, Interval box, SolveSettings settings = {}) {
    if (!std::isfinite(box.lo) || !std::isfinite(box.hi) || !(box.lo < box.hi))
        throw DomainError("minimize_1d: invalid interval");
    const double invphi = 0.5 * (std::sqrt(5.0) - 1.0);
    const double xtol = 1e-9 * (box.hi - box.lo);
    double a = box.lo, b = box.hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double gc = g(c), gd = g(d);
    for (int i = 0; i < settings.max_iter && (b - a) > xtol; ++i) {
        if (gc < gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - invphi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + invphi * (b - a);
            gd = g(d);
        }
    }
    double xm = 0.5 * (a + b);
    double gm = g(xm);
    double glo = g(box.lo);
    double ghi = g(box.hi);
    if (glo <= gm && glo <= ghi) return {box.lo, glo};
    if (ghi <= gm) return {box.hi, ghi};
    return {xm, gm};
}

} // namespace aoii
