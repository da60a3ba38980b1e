#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mobrate {

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {
inline void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}
inline bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }
} // namespace detail

// Units: meters, seconds, watts. Intensities are per square meter.
struct NetworkModel {
    double node_intensity = 0.0;    // lambda
    double user_intensity = 0.0;    // xi
    double tx_power = 1.0;          // p
    double noise_power = 1.0;       // w
    double pathloss_exponent = 4.0; // beta
    double velocity = 1.0;          // v
    double bandwidth_const = 1.0;   // a

    void validate() const {
        using detail::finite_positive;
        detail::require(finite_positive(node_intensity), "node_intensity must be > 0");
        detail::require(std::isfinite(user_intensity) && user_intensity >= 0.0,
                        "user_intensity must be >= 0");
        detail::require(finite_positive(tx_power), "tx_power must be > 0");
        detail::require(finite_positive(noise_power), "noise_power must be > 0");
        detail::require(std::isfinite(pathloss_exponent) && pathloss_exponent > 2.0,
                        "pathloss_exponent must be > 2");
        detail::require(finite_positive(velocity), "velocity must be > 0");
        detail::require(finite_positive(bandwidth_const), "bandwidth_const must be > 0");
    }
};

inline double coverage_radius(const NetworkModel& m, double gamma) {
    detail::require(detail::finite_positive(gamma), "gamma must be finite and > 0");
    detail::require(detail::finite_positive(m.tx_power) && detail::finite_positive(m.noise_power) &&
                        std::isfinite(m.pathloss_exponent) && m.pathloss_exponent > 0.0,
                    "model powers/exponent must be finite and > 0");
    return std::pow(m.tx_power / (m.noise_power * gamma), 1.0 / m.pathloss_exponent);
}

// Inverse of coverage_radius.
inline double gamma_for_radius(const NetworkModel& m, double radius) {
    detail::require(detail::finite_positive(radius), "radius must be finite and > 0");
    return m.tx_power * std::pow(radius, -m.pathloss_exponent) / m.noise_power;
}

// Returns +inf at L == 0; the caller decides how to treat the singularity.
inline double snr_point(const NetworkModel& m, double distance) {
    detail::require(std::isfinite(distance) && distance >= 0.0, "distance must be finite and >= 0");
    if (distance == 0.0) return std::numeric_limits<double>::infinity();
    return m.tx_power * std::pow(distance, -m.pathloss_exponent) / m.noise_power;
}

// Natural log; the constant a absorbs any change of base.
inline double shannon_rate(const NetworkModel& m, double snr, bool served) {
    detail::require(snr >= 0.0, "snr must be >= 0");
    return served ? m.bandwidth_const * std::log1p(snr) : 0.0;
}

inline double sharing_factor(unsigned long n) { return 1.0 / (1.0 + static_cast<double>(n)); }

// Mean number of nodes in a disc of the given radius.
inline double disc_load(double intensity, double radius) {
    return intensity * std::numbers::pi * radius * radius;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

struct Threshold {
    double gamma = 1.0;
    double radius = 1.0;

    static Threshold from_gamma(const NetworkModel& m, double gamma) {
        return {gamma, coverage_radius(m, gamma)};
    }
    static Threshold from_radius(const NetworkModel& m, double radius) {
        return {gamma_for_radius(m, radius), radius};
    }
};

// Noise power chosen so that a given quantile of the nearest-node distance sees snr_edge.
struct NoiseCalibration {
    double edge_quantile = 0.9;
    double snr_edge = 1.0;

    double edge_distance(double node_intensity) const {
        detail::require(edge_quantile > 0.0 && edge_quantile < 1.0, "edge_quantile must be in (0,1)");
        detail::require(detail::finite_positive(node_intensity), "node_intensity must be > 0");
        return std::sqrt(-std::log1p(-edge_quantile) / (std::numbers::pi * node_intensity));
    }

    double noise_power(double tx_power, double pathloss_exponent, double node_intensity) const {
        detail::require(detail::finite_positive(snr_edge), "snr_edge must be > 0");
        return tx_power * std::pow(edge_distance(node_intensity), -pathloss_exponent) / snr_edge;
    }

    void apply(NetworkModel& m) const {
        m.noise_power = noise_power(m.tx_power, m.pathloss_exponent, m.node_intensity);
    }
};

} // namespace mobrate
