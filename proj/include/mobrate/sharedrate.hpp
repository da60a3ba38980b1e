#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "geometry.hpp"
#include "intervals.hpp"
#include "mginf.hpp"
#include "model.hpp"
#include "random.hpp"
#include "sharing.hpp"
#include "stats.hpp"
#include "trace.hpp"

namespace mobrate {

// Sampled Shannon rate R, sharing number N and shared rate S = R / (1 + N).
struct RateTrace {
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<double> rate;
    std::vector<unsigned> sharing;
    std::vector<double> shared;

    std::size_t size() const { return rate.size(); }
    double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
};

// R is the rate of the serving link when SNR >= gamma and 0 otherwise (no fading).
// use_upper_bound counts every user in the serving disc, which gives the lower bound S-hat.
inline RateTrace shared_rate_trace(const FieldSample& field, const Trajectory& tr, const NetworkModel& m, double gamma,
                                   double dt, bool use_upper_bound = false) {
    detail::require(detail::finite_positive(gamma), "gamma must be > 0");
    const double r = coverage_radius(m, gamma);
    const auto snr = snr_trace(field, tr, m, dt);
    const auto steps = use_upper_bound ? upper_sharing_trace(field, tr, r) : sharing_trace(field, tr, r);
    RateTrace out;
    out.t0 = snr.t0;
    out.dt = dt;
    const std::size_t n = snr.values.size();
    out.rate.resize(n);
    out.sharing.resize(n);
    out.shared.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double v = snr.values[k];
        const double rate = shannon_rate(m, v, v >= gamma);
        const unsigned nk = rate > 0.0 ? steps.value_at(snr.time(k)) : 0u;
        out.rate[k] = rate;
        out.sharing[k] = nk;
        out.shared[k] = rate * sharing_factor(nk);
    }
    return out;
}

// ---------------------------------------------------------------- closed forms

// Distance at which the link rate equals delta.
inline double rate_level_radius(const NetworkModel& m, double delta) {
    detail::require(detail::finite_positive(delta), "rate level must be > 0");
    return coverage_radius(m, std::expm1(delta / m.bandwidth_const));
}

// P(a log(1 + SNR) > s) at a typical point, ignoring the coverage threshold.
inline double snr_rate_tail(const NetworkModel& m, double s) {
    detail::require(s > 0.0, "s must be > 0");
    const double r = rate_level_radius(m, s);
    return -std::expm1(-disc_load(m.node_intensity, r));
}

// Scaling for inter-arrivals of up-crossings of S-hat at rate level delta.
inline double sharedrate_upcrossing_rescale(double delta, const NetworkModel& m, double gamma, double user_intensity) {
    detail::require(user_intensity >= 0.0, "user intensity must be >= 0");
    const double r_gamma = coverage_radius(m, gamma);
    return rescale_high_radius(m, rate_level_radius(m, delta)) * std::exp(-disc_load(user_intensity, r_gamma));
}

// ---------------------------------------------------------------- exact level sets

// Times at which S > delta (S-hat with use_upper_bound). Within a visit to node x with n
// sharers, S > delta exactly when the distance to x is below min(r_gamma, r(delta (1 + n))).
inline IntervalSet shared_rate_level_set(const FieldSample& field, const Trajectory& tr, const NetworkModel& m,
                                         double gamma, double delta, bool use_upper_bound = false) {
    const double r_gamma = coverage_radius(m, gamma);
    detail::UserCounts counts(field, r_gamma);
    std::vector<Interval> raw;
    for (const auto& cv : serving_sequence(field, tr)) {
        const Point x = field.nodes()[cv.node];
        const double y = tr.across(x);
        if (std::abs(y) >= r_gamma) continue;
        const unsigned n = use_upper_bound ? counts.disc(cv.node) : counts.jm(cv.node);
        const double rho = std::min(r_gamma, rate_level_radius(m, delta * (1.0 + n)));
        if (std::abs(y) >= rho) continue;
        const double half = std::sqrt(rho * rho - y * y) / tr.velocity;
        const double mid = tr.along(x) / tr.velocity;
        const double b = std::max(cv.begin, mid - half), e = std::min(cv.end, mid + half);
        if (e > b) raw.push_back({b, e});
    }
    return IntervalSet::from_unsorted(std::move(raw), 0.0, tr.duration);
}

inline CrossingRecord shared_rate_crossings(const FieldSample& field, const Trajectory& tr, const NetworkModel& m,
                                            double gamma, double delta, bool use_upper_bound = false) {
    return extract_crossings(shared_rate_level_set(field, tr, m, gamma, delta, use_upper_bound), 0.0, tr.duration,
                             delta);
}

// ---------------------------------------------------------------- Palm sampling

// What a typical location sees at a stationary instant.
struct StationarySample {
    double rate = 0.0; // 0 when not covered
    unsigned sharing = 0;       // users in the serving Johnson-Mehl cell
    unsigned sharing_upper = 0; // users in the serving disc
    double distance = 0.0;      // to the nearest node

    bool served() const { return rate > 0.0; }
    double shared() const { return rate * sharing_factor(sharing); }
    double shared_upper() const { return rate * sharing_factor(sharing_upper); }
};

class PalmSampler {
public:
    PalmSampler(const NetworkModel& m, double gamma, double user_intensity)
        : model_(m), xi_(user_intensity), radius_(coverage_radius(m, gamma)) {
        m.validate();
        detail::require(user_intensity >= 0.0, "user intensity must be >= 0");
    }

    double radius() const { return radius_; }

    double draw_distance(Engine& eng) const {
        std::exponential_distribution<double> e(m_pi_lambda());
        return std::sqrt(e(eng));
    }

    double rate_at(double d) const {
        return shannon_rate(model_, snr_value(model_, d, 1.0), d <= radius_);
    }

    // Local configuration given the nearest node at distance d: nodes outside B(0, d) in a box
    // big enough to decide the nearest node of every user within radius of the serving node.
    StationarySample complete(double d, Engine& eng) const {
        StationarySample out;
        out.distance = d;
        out.rate = rate_at(d);
        if (!out.served() || xi_ == 0.0) return out;
        const double L = d + 2.0 * radius_;
        const Point x{d, 0.0};
        std::vector<Point> others;
        for (const auto& p : sample_poisson_points(model_.node_intensity, Window{-L, -L, L, L}, eng))
            if (p.x * p.x + p.y * p.y > d * d) others.push_back(p);
        std::poisson_distribution<unsigned> users(xi_ * std::numbers::pi * radius_ * radius_);
        const unsigned k = users(eng);
        out.sharing_upper = k;
        for (unsigned j = 0; j < k; ++j) {
            const double rr = radius_ * std::sqrt(uniform01(eng));
            const double th = 2.0 * std::numbers::pi * uniform01(eng);
            const Point u{x.x + rr * std::cos(th), x.y + rr * std::sin(th)};
            const double du = distance_sq(u, x);
            bool mine = true;
            for (const auto& p : others)
                if (distance_sq(u, p) < du) {
                    mine = false;
                    break;
                }
            out.sharing += mine;
        }
        return out;
    }

    StationarySample draw(Engine& eng) const { return complete(draw_distance(eng), eng); }

private:
    double m_pi_lambda() const { return std::numbers::pi * model_.node_intensity; }

    NetworkModel model_;
    double xi_;
    double radius_;
};

// Stationary draws. Only draws whose rate exceeds rate_floor get the sharing geometry; the
// others are counted in total (their S and S-hat are at most rate_floor).
struct StationaryBatch {
    std::size_t total = 0;
    std::size_t served = 0;
    double rate_floor = 0.0;
    std::vector<StationarySample> detailed;
};

inline StationaryBatch sample_stationary(const NetworkModel& m, double gamma, double user_intensity, std::size_t n,
                                         std::uint64_t seed, double rate_floor = 0.0, unsigned workers = 0) {
    const PalmSampler sampler(m, gamma, user_intensity);
    constexpr std::size_t chunk = std::size_t{1} << 20;
    const std::size_t chunks = (n + chunk - 1) / chunk;
    auto set = run_replications(
        chunks, seed,
        [&](std::uint64_t s, std::size_t idx) {
            auto eng = make_engine(s);
            StationaryBatch b;
            b.rate_floor = rate_floor;
            b.total = std::min(chunk, n - idx * chunk);
            for (std::size_t i = 0; i < b.total; ++i) {
                const double d = sampler.draw_distance(eng);
                const double rate = sampler.rate_at(d);
                if (rate > 0.0) ++b.served;
                if (rate > rate_floor) b.detailed.push_back(sampler.complete(d, eng));
            }
            return b;
        },
        workers);
    detail::require(set.failures.empty(), "stationary sampling failed");
    StationaryBatch out;
    out.rate_floor = rate_floor;
    for (auto& b : set.values) {
        out.total += b.total;
        out.served += b.served;
        out.detailed.insert(out.detailed.end(), b.detailed.begin(), b.detailed.end());
    }
    return out;
}

// ---------------------------------------------------------------- tails

struct TailPoint {
    double s = 0.0;
    std::size_t exceed = 0;
    double prob = 0.0;
};

struct TailReport {
    std::vector<TailPoint> points;
    bool sufficient = false; // at least 3 thresholds with >= min_exceed in the fitted decade
    double slope = 0.0;      // regression slope of -log P(S > s) against s
    double slope_se = 0.0;
    double endpoint = 0.0;   // two-point estimate across the fitted range
    double s_lo = 0.0, s_hi = 0.0;
    std::size_t fitted = 0;
};

inline std::vector<TailPoint> exceedances(const StationaryBatch& b, std::span<const double> grid, bool upper = false) {
    detail::require(b.total > 0, "empty batch");
    std::vector<TailPoint> out;
    for (double s : grid) {
        detail::require(s >= b.rate_floor, "threshold below the batch rate floor");
        TailPoint p{s, 0, 0.0};
        for (const auto& x : b.detailed) p.exceed += (upper ? x.shared_upper() : x.shared()) > s;
        p.prob = static_cast<double>(p.exceed) / static_cast<double>(b.total);
        out.push_back(p);
    }
    return out;
}

// Fits the top decade of probabilities that still has min_exceed exceedances.
inline TailReport tail_exponent_high(std::vector<TailPoint> points, std::size_t min_exceed = 50) {
    std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.s < b.s; });
    TailReport rep;
    rep.points = points;
    std::optional<std::size_t> hi;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (points[i].exceed >= min_exceed) hi = i;
    if (!hi) return rep;
    const double p_hi = points[*hi].prob;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i <= *hi; ++i)
        if (points[i].prob <= 10.0 * p_hi && points[i].exceed >= min_exceed) {
            xs.push_back(points[i].s);
            ys.push_back(-std::log(points[i].prob));
        }
    rep.fitted = xs.size();
    if (xs.size() < 3) return rep;
    const double n = static_cast<double>(xs.size());
    const double mx = mean_of(xs), my = mean_of(ys);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx <= 0.0) return rep;
    rep.slope = sxy / sxx;
    double rss = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - my - rep.slope * (xs[i] - mx);
        rss += e * e;
    }
    rep.slope_se = xs.size() > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
    rep.s_lo = xs.front();
    rep.s_hi = xs.back();
    rep.endpoint = (ys.back() - ys.front()) / (xs.back() - xs.front());
    rep.sufficient = true;
    return rep;
}

inline TailReport tail_exponent_high(const StationaryBatch& b, std::span<const double> grid, bool upper = false,
                                     std::size_t min_exceed = 50) {
    return tail_exponent_high(exceedances(b, grid, upper), min_exceed);
}

// Fraction of draws with S > s that have no sharers; nullopt when nothing exceeds s.
inline std::optional<Proportion> unshared_given_high_rate(const StationaryBatch& b, double s) {
    std::size_t k = 0, n = 0;
    for (const auto& x : b.detailed)
        if (x.shared() > s) {
            ++n;
            k += x.sharing == 0;
        }
    if (n == 0) return std::nullopt;
    return wilson_interval(k, n);
}

// Empirical P(N > a s log(1 + gamma) - 1 | 0 < S < 1/s); nullopt for an empty conditioning set.
inline std::optional<Proportion> conditional_low_rate(std::span<const StationarySample> samples, double s,
                                                      double bandwidth_const, double gamma) {
    detail::require(s > 0.0, "s must be > 0");
    const double bound = s * bandwidth_const * std::log1p(gamma) - 1.0;
    std::size_t k = 0, n = 0;
    for (const auto& x : samples) {
        const double v = x.shared();
        if (!(v > 0.0 && v < 1.0 / s)) continue;
        ++n;
        k += static_cast<double>(x.sharing) > bound;
    }
    if (n == 0) return std::nullopt;
    return wilson_interval(k, n);
}

// ---------------------------------------------------------------- variance decomposition

struct VarianceDecomposition {
    std::size_t n = 0;
    double var_s = 0.0;
    double var_r = 0.0;
    double var_f = 0.0;
    double mean_f = 0.0;
    double mean_r2 = 0.0;
    double reconstruction = 0.0; // var_r mean_f^2 + var_f E[R^2]
    double gap = 0.0;            // var_s - reconstruction
    double gap_se = 0.0;         // batch means
};

namespace detail {
inline VarianceDecomposition decompose(std::span<const double> r, std::span<const double> f) {
    VarianceDecomposition d;
    d.n = r.size();
    std::vector<double> s(r.size()), r2(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        s[i] = r[i] * f[i];
        r2[i] = r[i] * r[i];
    }
    d.var_s = summarize(s).variance;
    d.var_r = summarize(r).variance;
    const auto fs = summarize(f);
    d.var_f = fs.variance;
    d.mean_f = fs.mean;
    d.mean_r2 = mean_of(r2);
    d.reconstruction = d.var_r * d.mean_f * d.mean_f + d.var_f * d.mean_r2;
    d.gap = d.var_s - d.reconstruction;
    return d;
}
} // namespace detail

// Samples of the rate R and the sharing factor F; both must come from the same draws.
inline VarianceDecomposition variance_decomposition(std::span<const double> rate, std::span<const double> factor,
                                                    std::size_t batches = 20) {
    detail::require(rate.size() == factor.size(), "rate and factor sample counts differ");
    detail::require(rate.size() >= 100, "need at least 100 samples");
    auto d = detail::decompose(rate, factor);
    const std::size_t per = rate.size() / batches;
    if (batches >= 2 && per >= 5) {
        std::vector<double> gaps;
        for (std::size_t b = 0; b < batches; ++b)
            gaps.push_back(detail::decompose(rate.subspan(b * per, per), factor.subspan(b * per, per)).gap);
        // A batch gap estimates the same quantity with per samples; rescale its spread to n.
        d.gap_se = summarize(gaps).std_error * std::sqrt(static_cast<double>(per * batches) / rate.size());
    }
    return d;
}

// Moments of S-hat over stationary served draws: D is the nearest distance given D <= r_gamma
// and the disc count is Poisson(xi pi r_gamma^2) independent of it.
inline VarianceDecomposition served_variance_decomposition(const NetworkModel& m, double gamma, double user_intensity,
                                                           std::size_t n, std::uint64_t seed) {
    const double r = coverage_radius(m, gamma);
    const double cover = -std::expm1(-disc_load(m.node_intensity, r));
    auto eng = make_engine(seed, streams::misc, 0);
    std::poisson_distribution<unsigned> users(user_intensity * std::numbers::pi * r * r);
    std::vector<double> rates(n), factors(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d2 = -std::log1p(-uniform01(eng) * cover) / (std::numbers::pi * m.node_intensity);
        rates[i] = shannon_rate(m, snr_value(m, std::sqrt(d2), 1.0), true);
        factors[i] = user_intensity > 0.0 ? sharing_factor(users(eng)) : 1.0;
    }
    return variance_decomposition(rates, factors);
}

} // namespace mobrate
