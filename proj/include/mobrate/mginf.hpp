#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "model.hpp"
#include "quadrature.hpp"
#include "random.hpp"
#include "stats.hpp"

namespace mobrate {

// Nodes entering the moving coverage disc form the arrivals of an M/GI/infinity queue.
struct MGInfParams {
    double intensity = 0.0;   // lambda, per m^2
    double radius = 0.0;      // r_gamma, m
    double velocity = 0.0;    // v, m/s
    double arrival_rate = 0.0; // 2 r v lambda, per s
    double load = 0.0;         // lambda pi r^2
    double busy_prob = 0.0;    // 1 - exp(-load)
    double mean_service = 0.0; // pi r / (2 v), s

    static MGInfParams make(double intensity, double radius, double velocity) {
        detail::require(detail::finite_positive(intensity), "intensity must be > 0");
        detail::require(detail::finite_positive(radius), "radius must be > 0");
        detail::require(detail::finite_positive(velocity), "velocity must be > 0");
        MGInfParams p;
        p.intensity = intensity;
        p.radius = radius;
        p.velocity = velocity;
        p.arrival_rate = 2.0 * radius * velocity * intensity;
        p.load = disc_load(intensity, radius);
        p.busy_prob = -std::expm1(-p.load);
        p.mean_service = std::numbers::pi * radius / (2.0 * velocity);
        return p;
    }

    static MGInfParams from(const NetworkModel& m, double gamma) {
        return make(m.node_intensity, coverage_radius(m, gamma), m.velocity);
    }

    double max_service() const { return 2.0 * radius / velocity; }
};

// ---------------------------------------------------------------- service time W = 2 sqrt(r^2 - Y^2) / v

inline double service_density(double s, const MGInfParams& p) {
    if (s < 0.0 || s >= p.max_service()) return 0.0;
    const double vs = p.velocity * s;
    return p.velocity * vs / (2.0 * p.radius * std::sqrt(4.0 * p.radius * p.radius - vs * vs));
}

inline double service_cdf(double s, const MGInfParams& p) {
    if (s <= 0.0) return 0.0;
    if (s >= p.max_service()) return 1.0;
    const double z = p.velocity * s / (2.0 * p.radius);
    return 1.0 - std::sqrt(1.0 - z * z);
}

inline double sample_service(const MGInfParams& p, Engine& eng) {
    const double y = p.radius * uniform01(eng);
    return 2.0 * std::sqrt(p.radius * p.radius - y * y) / p.velocity;
}

// CDF of the forward recurrence time of W.
inline double forward_service_cdf(double u, const MGInfParams& p) {
    if (u <= 0.0) return 0.0;
    if (u >= p.max_service()) return 1.0;
    const double z = p.velocity * u / (2.0 * p.radius);
    return (2.0 / std::numbers::pi) * (z * std::sqrt(1.0 - z * z) + std::asin(z));
}

// ---------------------------------------------------------------- idle and busy periods

struct ExponentialLaw {
    double rate = 1.0;

    double mean() const { return 1.0 / rate; }
    double cdf(double x) const { return x <= 0.0 ? 0.0 : -std::expm1(-rate * x); }
    double survival(double x) const { return x <= 0.0 ? 1.0 : std::exp(-rate * x); }
    double quantile(double q) const { return -std::log1p(-q) / rate; }
    double sample(Engine& eng) const { return std::exponential_distribution<double>(rate)(eng); }
};

inline ExponentialLaw idle_law(const MGInfParams& p) { return {p.arrival_rate}; }

inline double busy_mean(const MGInfParams& p) { return std::expm1(p.load) / p.arrival_rate; }

inline double on_probability(const MGInfParams& p) { return p.busy_prob; }

// ---------------------------------------------------------------- forward recurrence of the busy period

// CDF of one summand U of the random-sum representation.
inline double forward_component_cdf(double u, const MGInfParams& p) {
    return -std::expm1(-p.load * forward_service_cdf(u, p)) / p.busy_prob;
}

inline double forward_component_quantile(double y, const MGInfParams& p, double tol = 1e-10) {
    double lo = 0.0, hi = p.max_service();
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (forward_component_cdf(mid, p) < y ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct ForwardBusyDraw {
    double value = 0.0;
    long long terms = 0;
};

// One draw of the forward recurrence time of the busy period: a geometric number
// (P(M = l) = (1 - nu) nu^(l-1)) of i.i.d. components.
inline ForwardBusyDraw draw_forward_busy(const MGInfParams& p, Engine& eng) {
    ForwardBusyDraw d;
    d.terms = std::geometric_distribution<long long>(1.0 - p.busy_prob)(eng) + 1;
    for (long long i = 0; i < d.terms; ++i) d.value += forward_component_quantile(uniform01(eng), p);
    return d;
}

inline double sample_forward_busy(const MGInfParams& p, Engine& eng) { return draw_forward_busy(p, eng).value; }

inline double sample_forward_busy(const MGInfParams& p, std::uint64_t seed) {
    auto eng = make_engine(seed);
    return sample_forward_busy(p, eng);
}

inline std::vector<double> sample_forward_busy(const MGInfParams& p, std::size_t n, std::uint64_t seed) {
    auto eng = make_engine(seed);
    std::vector<double> out(n);
    for (auto& x : out) x = sample_forward_busy(p, eng);
    return out;
}

// E[U] by quadrature of the complementary CDF.
inline QuadResult mean_forward_component(const MGInfParams& p, double rel_tol = 1e-10) {
    return integrate([&](double u) { return 1.0 - forward_component_cdf(u, p); }, 0.0, p.max_service(), rel_tol);
}

// ---------------------------------------------------------------- rare-event rescaling

inline double rescale_high_radius(const NetworkModel& m, double radius) {
    return 2.0 * m.node_intensity * m.velocity * radius;
}
inline double rescale_low_radius(const NetworkModel& m, double radius) {
    return rescale_high_radius(m, radius) * std::exp(-disc_load(m.node_intensity, radius));
}
inline double rescale_high(double gamma, const NetworkModel& m) { return rescale_high_radius(m, coverage_radius(m, gamma)); }
inline double rescale_low(double gamma, const NetworkModel& m) { return rescale_low_radius(m, coverage_radius(m, gamma)); }

// ---------------------------------------------------------------- Laplace transforms

struct LaplaceEstimate {
    double value = 1.0;
    double std_error = 0.0;
};

inline LaplaceEstimate empirical_laplace(std::span<const double> samples, double s) {
    detail::require(s >= 0.0, "Laplace argument must be >= 0");
    detail::require(!samples.empty(), "Laplace estimate needs samples");
    std::vector<double> w(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) w[i] = std::exp(-s * samples[i]);
    const auto sm = summarize(w);
    return {sm.mean, sm.std_error};
}

// L_B(s) = 1 - s E[B] L_Bhat(s).
inline LaplaceEstimate busy_laplace(double s, double b_mean, std::span<const double> bhat_samples) {
    detail::require(s >= 0.0, "Laplace argument must be >= 0");
    if (s == 0.0) return {1.0, 0.0};
    const auto lb = empirical_laplace(bhat_samples, s);
    return {1.0 - s * b_mean * lb.value, s * b_mean * lb.std_error};
}

inline LaplaceEstimate busy_laplace(double s, const MGInfParams& p, std::span<const double> bhat_samples) {
    return busy_laplace(s, busy_mean(p), bhat_samples);
}

// E[B^2] / (2 E[B]) from direct samples.
inline double forward_recurrence_mean(std::span<const double> samples) {
    double s1 = 0.0, s2 = 0.0;
    for (double b : samples) {
        s1 += b;
        s2 += b * b;
    }
    return s2 / (2.0 * s1);
}

} // namespace mobrate
