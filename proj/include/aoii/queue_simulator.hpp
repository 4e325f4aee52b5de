#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "queueing_analytic.hpp"

namespace aoii {

namespace detail {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace detail

// One independent random stream per pipeline stage, all derived from the run
// seed, so per-stage statistics are reproducible when other stages change.
class StageRng {
  public:
    explicit StageRng(std::uint64_t seed) : state_(seed) {}

    double uniform() { // [0, 1)
        return static_cast<double>(detail::splitmix64_next(state_) >> 11) * 0x1.0p-53;
    }

    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  private:
    std::uint64_t state_;
};

struct BernoulliRouting {
    double prob = -1.0; // Category-I probability; negative means "use qp.a"
};

struct SimilarityRouting {
    double xi_hat = 0.6;
    std::vector<double> similarities; // per user, assigned round-robin
};

using RoutingPolicy = std::variant<BernoulliRouting, SimilarityRouting>;

struct SimConfig {
    QueueParams qp;
    RoutingPolicy routing = BernoulliRouting{};
    std::int64_t horizon_packets = 100000;
    std::int64_t warmup_packets = -1; // negative means 10% of horizon
    std::uint64_t rng_seed = 42;
    // Per-user similarities for the AoII estimate (round-robin); empty
    // leaves the AoII fields NaN.
    std::vector<double> per_user_similarity;
};

struct PacketRecord {
    std::int64_t n = 0;  // packet index
    double alpha = 0.0;  // generation time
    double t_tx = 0.0;   // transmission time (constant theta)
    double w0 = 0.0;     // scheduler wait
    double h0 = 0.0;     // scheduler service
    int category = 1;    // routed server
    double wi = 0.0;     // server wait
    double hi = 0.0;     // server service
    double beta = 0.0;   // departure time
};

struct SimReport {
    std::int64_t horizon_packets = 0;
    std::int64_t warmup_packets = 0;
    double end_time = 0.0;

    double frac_cat1 = 0.0, frac_cat2 = 0.0;

    double mean_scheduler_wait = 0.0, mean_scheduler_service = 0.0, mean_scheduler_delay = 0.0;
    double p_zero_scheduler_wait = 0.0;
    double mean_server_wait_cat1 = 0.0, mean_server_service_cat1 = 0.0,
           mean_server_delay_cat1 = 0.0;
    double mean_server_wait_cat2 = 0.0, mean_server_service_cat2 = 0.0,
           mean_server_delay_cat2 = 0.0;
    double mean_total_delay = 0.0;

    double aoi_sawtooth_cat1 = 0.0, aoi_sawtooth_cat2 = 0.0, aoi_sawtooth_blended = 0.0;
    double aoi_qdecomp_cat1 = 0.0, aoi_qdecomp_cat2 = 0.0, aoi_qdecomp_blended = 0.0;
    double aoi_sawtooth_merged = 0.0; // all updates as one stream
    double stale_fraction_cat1 = 0.0, stale_fraction_cat2 = 0.0;

    double aoii_per_packet = 0.0;   // Psi_n = (1 - xi_n) weighted AoI polygons
    double aoii_product_form = 0.0; // aoi_qdecomp_blended * mean(1 - xi)

    // batch-means 95% half-widths (30 batches)
    double ci_total_delay = 0.0;
    double ci_aoi_qdecomp = 0.0;
    double ci_aoii = 0.0;

    std::vector<PacketRecord> records; // post-warmup packets, generation order
};

inline void validate(const SimConfig& cfg) {
    validate(cfg.qp);
    if (cfg.horizon_packets < 1) throw ConfigError("sim_config: horizon_packets must be >= 1");
    std::int64_t warmup = cfg.warmup_packets >= 0 ? cfg.warmup_packets : cfg.horizon_packets / 10;
    if (warmup >= cfg.horizon_packets)
        throw ConfigError("sim_config: warmup_packets must be < horizon_packets");
    if (const auto* br = std::get_if<BernoulliRouting>(&cfg.routing)) {
        if (br->prob >= 0.0 && br->prob > 1.0)
            throw ConfigError("sim_config: routing probability outside [0,1]");
    } else {
        const auto& sr = std::get<SimilarityRouting>(cfg.routing);
        if (!(sr.xi_hat > 0.0 && sr.xi_hat <= 1.0))
            throw ConfigError("sim_config: xi_hat outside (0,1]");
        if (sr.similarities.empty())
            throw ConfigError("sim_config: similarity routing needs per-user similarities");
        for (double xi : sr.similarities)
            if (!(xi >= 0.0 && xi <= 1.0))
                throw ConfigError("sim_config: similarity outside [0,1]");
    }
    for (double xi : cfg.per_user_similarity)
        if (!(xi >= 0.0 && xi <= 1.0))
            throw ConfigError("sim_config: per_user_similarity outside [0,1]");
}

namespace detail {

// Long-run Category-I fraction implied by the routing policy.
inline double category1_fraction(const SimConfig& cfg) {
    if (const auto* br = std::get_if<BernoulliRouting>(&cfg.routing))
        return br->prob >= 0.0 ? br->prob : cfg.qp.a;
    const auto& sr = std::get<SimilarityRouting>(cfg.routing);
    std::size_t hits = 0;
    for (double xi : sr.similarities) hits += xi >= sr.xi_hat ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(sr.similarities.size());
}

} // namespace detail

// Time-average of the age process A(t) = t - alpha_n(t) over
// [first departure, horizon].  Records must be sorted by departure; stale
// deliveries (generation older than the freshest delivered) are skipped.
inline double aoi_sawtooth(const std::vector<PacketRecord>& records, double horizon) {
    if (records.empty()) throw EmptyInput("aoi_sawtooth: no records");
    double cur_t = records.front().beta;
    double fresh_alpha = records.front().alpha;
    if (horizon < cur_t) throw DomainError("aoi_sawtooth: horizon before first departure");
    double area = 0.0;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.beta < cur_t) throw DomainError("aoi_sawtooth: records not sorted by departure");
        if (r.alpha <= fresh_alpha) continue; // stale update
        double span = r.beta - cur_t;
        double age0 = cur_t - fresh_alpha;
        area += span * age0 + 0.5 * span * span;
        cur_t = r.beta;
        fresh_alpha = r.alpha;
    }
    double span = horizon - cur_t;
    double age0 = cur_t - fresh_alpha;
    area += span * age0 + 0.5 * span * span;
    return area / (horizon - records.front().beta);
}

// (E[G D] + E[G^2]/2) / E[G] over consecutive packets of one stream.
inline double aoi_q_decomposition(const std::vector<PacketRecord>& records) {
    if (records.size() < 2) throw EmptyInput("aoi_q_decomposition: need at least two records");
    double sum_g = 0.0, sum_gd = 0.0, sum_g2 = 0.0;
    for (std::size_t i = 1; i < records.size(); ++i) {
        double g = records[i].alpha - records[i - 1].alpha;
        double d = records[i].beta - records[i].alpha;
        sum_g += g;
        sum_gd += g * d;
        sum_g2 += g * g;
    }
    return (sum_gd + 0.5 * sum_g2) / sum_g;
}

inline SimReport run(const SimConfig& cfg) {
    validate(cfg);
    const QueueParams& qp = cfg.qp;
    double a_eff = detail::category1_fraction(cfg);
    // stability of the actual pipeline (flow sense), regardless of the
    // analytic arrival-mode flag
    if (qp.lambda0 >= qp.mu0)
        throw ConfigError("sim: unstable scheduler (lambda0 >= mu0)");
    if (a_eff > 0.0 && a_eff * qp.lambda0 >= qp.mu1)
        throw ConfigError("sim: unstable Category-I server (a*lambda0 >= mu1)");
    if (a_eff < 1.0 && (1.0 - a_eff) * qp.lambda0 >= qp.mu2)
        throw ConfigError("sim: unstable Category-II server ((1-a)*lambda0 >= mu2)");

    std::int64_t horizon = cfg.horizon_packets;
    std::int64_t warmup = cfg.warmup_packets >= 0 ? cfg.warmup_packets : horizon / 10;

    std::uint64_t seq = cfg.rng_seed;
    StageRng sched_rng(detail::splitmix64_next(seq));
    StageRng srv1_rng(detail::splitmix64_next(seq));
    StageRng srv2_rng(detail::splitmix64_next(seq));
    StageRng route_rng(detail::splitmix64_next(seq));

    const auto* bernoulli = std::get_if<BernoulliRouting>(&cfg.routing);
    double route_prob = bernoulli ? (bernoulli->prob >= 0.0 ? bernoulli->prob : qp.a) : 0.0;
    const auto* sim_route = std::get_if<SimilarityRouting>(&cfg.routing);

    SimReport rep;
    rep.horizon_packets = horizon;
    rep.warmup_packets = warmup;
    rep.records.reserve(static_cast<std::size_t>(horizon - warmup));

    const double gen_gap = 1.0 / qp.lambda0;
    double free0 = 0.0, free1 = 0.0, free2 = 0.0;
    for (std::int64_t n = 0; n < horizon; ++n) {
        PacketRecord r;
        r.n = n;
        r.alpha = static_cast<double>(n) * gen_gap;
        r.t_tx = qp.theta;
        double arr0 = r.alpha + r.t_tx;
        double start0 = std::max(arr0, free0);
        r.w0 = start0 - arr0;
        r.h0 = sched_rng.exponential(qp.mu0);
        double dep0 = start0 + r.h0;
        free0 = dep0;

        if (bernoulli) {
            r.category = route_rng.uniform() < route_prob ? 1 : 2;
        } else {
            std::size_t user = static_cast<std::size_t>(n) % sim_route->similarities.size();
            r.category = sim_route->similarities[user] >= sim_route->xi_hat ? 1 : 2;
        }

        double& server_free = r.category == 1 ? free1 : free2;
        double start_i = std::max(dep0, server_free);
        r.wi = start_i - dep0;
        r.hi = (r.category == 1 ? srv1_rng : srv2_rng).exponential(r.category == 1 ? qp.mu1
                                                                                   : qp.mu2);
        r.beta = start_i + r.hi;
        server_free = r.beta;
        rep.end_time = std::max(rep.end_time, r.beta);
        if (n >= warmup) rep.records.push_back(r);
    }

    // stage statistics and per-category streams (already departure-ordered:
    // each server is FCFS over a scheduler output that preserves index order)
    std::vector<PacketRecord> cat1, cat2;
    cat1.reserve(rep.records.size());
    cat2.reserve(rep.records.size());
    std::int64_t zero_wait = 0;
    double sw0 = 0.0, sh0 = 0.0, sw1 = 0.0, sh1 = 0.0, sw2 = 0.0, sh2 = 0.0, stot = 0.0;
    for (const auto& r : rep.records) {
        sw0 += r.w0;
        sh0 += r.h0;
        stot += r.beta - r.alpha;
        if (r.w0 == 0.0) ++zero_wait;
        if (r.category == 1) {
            sw1 += r.wi;
            sh1 += r.hi;
            cat1.push_back(r);
        } else {
            sw2 += r.wi;
            sh2 += r.hi;
            cat2.push_back(r);
        }
    }
    double count = static_cast<double>(rep.records.size());
    rep.frac_cat1 = static_cast<double>(cat1.size()) / count;
    rep.frac_cat2 = static_cast<double>(cat2.size()) / count;
    rep.mean_scheduler_wait = sw0 / count;
    rep.mean_scheduler_service = sh0 / count;
    rep.mean_scheduler_delay = (sw0 + sh0) / count;
    rep.p_zero_scheduler_wait = static_cast<double>(zero_wait) / count;
    rep.mean_total_delay = stot / count;

    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto stream_aoi = [&](const std::vector<PacketRecord>& recs, double& saw, double& qdec,
                          double& stale_frac) {
        if (recs.size() < 2) {
            saw = qdec = stale_frac = nan;
            return;
        }
        saw = aoi_sawtooth(recs, recs.back().beta);
        qdec = aoi_q_decomposition(recs);
        std::int64_t stale = 0;
        double fresh = recs.front().alpha;
        for (std::size_t i = 1; i < recs.size(); ++i) {
            if (recs[i].alpha <= fresh)
                ++stale;
            else
                fresh = recs[i].alpha;
        }
        stale_frac = static_cast<double>(stale) / static_cast<double>(recs.size());
    };

    rep.mean_server_wait_cat1 = cat1.empty() ? nan : sw1 / static_cast<double>(cat1.size());
    rep.mean_server_service_cat1 = cat1.empty() ? nan : sh1 / static_cast<double>(cat1.size());
    rep.mean_server_delay_cat1 =
        cat1.empty() ? nan : (sw1 + sh1) / static_cast<double>(cat1.size());
    rep.mean_server_wait_cat2 = cat2.empty() ? nan : sw2 / static_cast<double>(cat2.size());
    rep.mean_server_service_cat2 = cat2.empty() ? nan : sh2 / static_cast<double>(cat2.size());
    rep.mean_server_delay_cat2 =
        cat2.empty() ? nan : (sw2 + sh2) / static_cast<double>(cat2.size());

    stream_aoi(cat1, rep.aoi_sawtooth_cat1, rep.aoi_qdecomp_cat1, rep.stale_fraction_cat1);
    stream_aoi(cat2, rep.aoi_sawtooth_cat2, rep.aoi_qdecomp_cat2, rep.stale_fraction_cat2);

    auto blend = [&](double v1, double v2) {
        double acc = 0.0;
        if (rep.frac_cat1 > 0.0) acc += rep.frac_cat1 * v1;
        if (rep.frac_cat2 > 0.0) acc += rep.frac_cat2 * v2;
        return acc;
    };
    rep.aoi_sawtooth_blended = blend(rep.aoi_sawtooth_cat1, rep.aoi_sawtooth_cat2);
    rep.aoi_qdecomp_blended = blend(rep.aoi_qdecomp_cat1, rep.aoi_qdecomp_cat2);

    std::vector<PacketRecord> merged = rep.records;
    std::stable_sort(merged.begin(), merged.end(),
                     [](const PacketRecord& x, const PacketRecord& y) { return x.beta < y.beta; });
    rep.aoi_sawtooth_merged = aoi_sawtooth(merged, merged.back().beta);

    // batch means over the post-warmup sequence (30 batches)
    constexpr int kBatches = 30;
    constexpr double kT975 = 2.045; // Student t, 29 dof
    const std::vector<double>& xis = cfg.per_user_similarity;
    auto batch_ci = [&](auto&& statistic) {
        std::size_t per = rep.records.size() / kBatches;
        if (per < 2) return nan;
        double mean = 0.0, m2 = 0.0;
        for (int b = 0; b < kBatches; ++b) {
            double v = statistic(b * per, (b + 1) * per);
            double delta = v - mean;
            mean += delta / static_cast<double>(b + 1);
            m2 += delta * (v - mean);
        }
        double sd = std::sqrt(m2 / (kBatches - 1));
        return kT975 * sd / std::sqrt(static_cast<double>(kBatches));
    };
    rep.ci_total_delay = batch_ci([&](std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += rep.records[i].beta - rep.records[i].alpha;
        return s / static_cast<double>(hi - lo);
    });
    auto blended_qdecomp = [&](std::size_t lo, std::size_t hi, bool weight_xi) {
        double sum_g[2] = {0.0, 0.0};
        double weighted[2] = {0.0, 0.0};
        std::int64_t counts[2] = {0, 0};
        double prev_alpha[2];
        bool seen[2] = {false, false};
        for (std::size_t i = lo; i < hi; ++i) {
            const auto& r = rep.records[i];
            int c = r.category - 1;
            ++counts[c];
            if (seen[c]) {
                double g = r.alpha - prev_alpha[c];
                double d = r.beta - r.alpha;
                double q = g * d + 0.5 * g * g;
                sum_g[c] += g;
                double one_minus =
                    weight_xi ? 1.0 - xis[static_cast<std::size_t>(r.n) % xis.size()] : 1.0;
                weighted[c] += one_minus * q;
            }
            prev_alpha[c] = r.alpha;
            seen[c] = true;
        }
        double total = static_cast<double>(counts[0] + counts[1]);
        double acc = 0.0;
        for (int c = 0; c < 2; ++c)
            if (sum_g[c] > 0.0)
                acc += (static_cast<double>(counts[c]) / total) * (weighted[c] / sum_g[c]);
        return acc;
    };
    rep.ci_aoi_qdecomp = batch_ci(
        [&](std::size_t lo, std::size_t hi) { return blended_qdecomp(lo, hi, false); });

    if (!xis.empty()) {
        rep.aoii_per_packet = blended_qdecomp(0, rep.records.size(), true);
        double acc = 0.0;
        for (double xi : xis) acc += 1.0 - xi;
        rep.aoii_product_form = rep.aoi_qdecomp_blended * (acc / static_cast<double>(xis.size()));
        rep.ci_aoii = batch_ci(
            [&](std::size_t lo, std::size_t hi) { return blended_qdecomp(lo, hi, true); });
    } else {
        rep.aoii_per_packet = rep.aoii_product_form = rep.ci_aoii = nan;
    }
    return rep;
}

// Per-packet AoII estimator: each packet's Q-polygon weighted by its user's
// 1 - xi (round-robin user assignment), normalized per category stream and
// blended by the empirical fractions.
inline double empirical_aoii(const SimReport& report, const std::vector<double>& similarities) {
    if (similarities.empty()) throw EmptyInput("empirical_aoii: no similarities");
    for (double xi : similarities)
        if (!(xi >= 0.0 && xi <= 1.0)) throw DomainError("empirical_aoii: similarity outside [0,1]");
    if (report.records.empty()) throw EmptyInput("empirical_aoii: report has no records");
    double sum_g[2] = {0.0, 0.0};
    double weighted[2] = {0.0, 0.0};
    std::int64_t counts[2] = {0, 0};
    double prev_alpha[2];
    bool seen[2] = {false, false};
    for (const auto& r : report.records) {
        int c = r.category - 1;
        ++counts[c];
        if (seen[c]) {
            double g = r.alpha - prev_alpha[c];
            double d = r.beta - r.alpha;
            double q = g * d + 0.5 * g * g;
            double xi = similarities[static_cast<std::size_t>(r.n) % similarities.size()];
            sum_g[c] += g;
            weighted[c] += (1.0 - xi) * q;
        }
        prev_alpha[c] = r.alpha;
        seen[c] = true;
    }
    double total = static_cast<double>(counts[0] + counts[1]);
    double acc = 0.0;
    for (int c = 0; c < 2; ++c)
        if (sum_g[c] > 0.0)
            acc += (static_cast<double>(counts[c]) / total) * (weighted[c] / sum_g[c]);
    return acc;
}

// CSV trace of the post-warmup packets; times with 9 decimal places.
inline void write_trace_csv(const SimReport& report, std::ostream& os) {
    os << "n,alpha,T,w0,h0,category,wi,hi,beta\n";
    char buf[256];
    for (const auto& r : report.records) {
        std::snprintf(buf, sizeof(buf), "%lld,%.9f,%.9f,%.9f,%.9f,%d,%.9f,%.9f,%.9f\n",
                      static_cast<long long>(r.n), r.alpha, r.t_tx, r.w0, r.h0, r.category, r.wi,
                      r.hi, r.beta);
        os << buf;
    }
}

} // namespace aoii
