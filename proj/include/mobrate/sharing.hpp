#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>
#include <vector>

#include "geometry.hpp"
#include "model.hpp"
#include "quadrature.hpp"
#include "trace.hpp"

namespace mobrate {

// Piecewise-constant integer process on [t_begin, t_end].
struct StepTrace {
    double t_begin = 0.0;
    double t_end = 0.0;
    unsigned initial = 0;
    std::vector<double> times;    // strictly increasing
    std::vector<unsigned> values; // value from times[k] on

    unsigned value_at(double t) const {
        const auto it = std::upper_bound(times.begin(), times.end(), t);
        return it == times.begin() ? initial : values[static_cast<std::size_t>(it - times.begin()) - 1];
    }
    std::size_t jumps() const { return times.size(); }

    // Appends a segment starting at t; consecutive equal values are merged.
    void push(double t, unsigned v) {
        const unsigned current = values.empty() ? initial : values.back();
        if (v == current) return;
        if (t <= t_begin) {
            initial = v;
            return;
        }
        if (!times.empty() && t <= times.back()) {
            values.back() = v;
            if (values.size() >= 2 ? values[values.size() - 2] == v : initial == v) {
                times.pop_back();
                values.pop_back();
            }
            return;
        }
        times.push_back(t);
        values.push_back(v);
    }
};

namespace detail {

// Users attached to each node: inside its Johnson-Mehl cell, or inside its disc.
class UserCounts {
public:
    UserCounts(const FieldSample& f, double radius) : field_(f), radius_(radius) {}

    unsigned jm(std::size_t node) { return get(node).first; }
    unsigned disc(std::size_t node) { return get(node).second; }

private:
    std::pair<unsigned, unsigned> get(std::size_t node) {
        if (auto it = cache_.find(node); it != cache_.end()) return it->second;
        unsigned jm = 0, disc = 0;
        const auto& users = field_.users();
        field_.user_index().for_each_within(field_.nodes()[node], radius_, [&](std::size_t u, double) {
            ++disc;
            const auto nn = field_.nearest_node(users[u]);
            if (nn && nn->index == node) ++jm;
        });
        return cache_[node] = {jm, disc};
    }

    const FieldSample& field_;
    double radius_;
    std::unordered_map<std::size_t, std::pair<unsigned, unsigned>> cache_;
};

inline StepTrace build_sharing_trace(const FieldSample& field, const Trajectory& tr, double radius, bool upper) {
    StepTrace st;
    st.t_begin = 0.0;
    st.t_end = tr.duration;
    UserCounts counts(field, radius);
    for (const auto& cv : serving_sequence(field, tr)) {
        const Point x = field.nodes()[cv.node];
        const double y = tr.across(x);
        double cb = cv.end, ce = cv.end; // covered part of this visit
        if (std::abs(y) < radius) {
            const double half = std::sqrt(radius * radius - y * y) / tr.velocity;
            const double mid = tr.along(x) / tr.velocity;
            cb = std::max(cv.begin, mid - half);
            ce = std::min(cv.end, mid + half);
        }
        if (ce <= cb) {
            st.push(cv.begin, 0);
            continue;
        }
        st.push(cv.begin, 0);
        st.push(cb, upper ? counts.disc(cv.node) : counts.jm(cv.node));
        st.push(ce, 0);
    }
    return st;
}

} // namespace detail

// Users in the serving node's Johnson-Mehl cell while the mobile is served, else 0.
inline StepTrace sharing_trace(const FieldSample& field, const Trajectory& tr, double radius) {
    return detail::build_sharing_trace(field, tr, radius, false);
}

// Users within radius of the serving node while the mobile is served, else 0.
inline StepTrace upper_sharing_trace(const FieldSample& field, const Trajectory& tr, double radius) {
    return detail::build_sharing_trace(field, tr, radius, true);
}

// Handoffs that happen while the mobile is served (crossings between two Johnson-Mehl cells).
inline std::vector<double> jm_edge_crossings(const FieldSample& field, const Trajectory& tr, double radius) {
    const auto seq = serving_sequence(field, tr);
    std::vector<double> out;
    for (std::size_t k = 1; k < seq.size(); ++k) {
        const double t = seq[k].begin;
        if (distance(tr.position(t), field.nodes()[seq[k].node]) <= radius) out.push_back(t);
    }
    return out;
}

inline double jm_crossing_intensity(double node_intensity, double velocity, double radius) {
    const double sl = std::sqrt(node_intensity);
    return 4.0 * velocity * sl / std::numbers::pi *
           (std::erf(std::sqrt(node_intensity * std::numbers::pi) * radius) -
            2.0 * sl * radius * std::exp(-disc_load(node_intensity, radius)));
}

inline double jm_crossing_intensity(const NetworkModel& m, double radius) {
    return jm_crossing_intensity(m.node_intensity, m.velocity, radius);
}

// (1 - exp(-mu)) / mu, the mean of 1/(N+1) for N ~ Poisson(mu).
inline double poisson_harmonic_mean(double mu) {
    detail::require(std::isfinite(mu) && mu >= 0.0, "Poisson mean must be >= 0");
    if (mu < 1e-8) return 1.0 - mu / 2.0;
    return -std::expm1(-mu) / mu;
}

// ---------------------------------------------------------------- integral geometry

// Area of B_x(0) u B_z(Q) where |Q| = u, the angle at the origin between Q and a point X with
// |X| = x is alpha, and z = |Q - X| (X lies on both circles).
inline double union_area(double x, double u, double alpha) {
    const double z2 = u * u + x * x - 2.0 * u * x * std::cos(alpha);
    const double z = std::sqrt(std::max(z2, 0.0));
    if (z <= 1e-12 * std::max(x, 1.0)) return std::numbers::pi * x * x;
    const double c = std::clamp((u - x * std::cos(alpha)) / z, -1.0, 1.0);
    const double phi = std::acos(c);
    return u * x * std::sin(alpha) + (std::numbers::pi - alpha) * x * x + (std::numbers::pi - phi) * z2;
}

enum class LimitVariant {
    sin_squared, // x cos a + sqrt(r^2 - x^2 sin^2 a): the far edge of the disc around the node
    as_printed   // x cos a + sqrt(r^2 - x^2 sin a)
};

struct QuadOptions {
    double rel_tol = 1e-7;
    LimitVariant limit = LimitVariant::sin_squared;
};

namespace detail {

// Integral over the serving-node distance x in (0, r), the angle a in (0, pi) and the distance u
// from the tagged point along direction a, of exp(-lambda |union|) * x * u^power.
inline QuadResult jm_triple_integral(double lambda, double r, int u_power, const QuadOptions& opt) {
    detail::require(detail::finite_positive(lambda) && detail::finite_positive(r), "lambda and r must be > 0");
    NestedTracker tr;
    // Inner levels run tighter than the outer one, but not into round-off.
    const double inner_tol = std::max(opt.rel_tol * 1e-2, 1e-12);
    const double middle_tol = std::max(opt.rel_tol * 1e-1, 1e-11);
    auto u_max = [&](double x, double a) {
        const double s = std::sin(a), c = std::cos(a);
        if (opt.limit == LimitVariant::as_printed) return x * c + std::sqrt(std::max(r * r - x * x * s, 0.0));
        const double root = std::sqrt(std::max(r * r - x * x * s * s, 0.0));
        if (c >= 0.0) return x * c + root;
        // Same value without the cancellation when x is close to r.
        return (r - x) * (r + x) / (root - x * c);
    };
    auto over_u = [&](double x, double a) {
        const double hi = u_max(x, a);
        if (hi <= 0.0) return 0.0;
        if (hi <= 1e-6 * r) {
            // Sliver: quadrature error estimates there are pure round-off.
            const double m = 0.5 * hi;
            return (u_power == 1 ? m : 1.0) * std::exp(-lambda * union_area(x, m, a)) * hi;
        }
        return tr.take(integrate(
            [&](double u) {
                const double w = u_power == 1 ? u : 1.0;
                return w * std::exp(-lambda * union_area(x, u, a));
            },
            0.0, hi, inner_tol, 10));
    };
    // For x near r, u_max(x, a) bends sharply around a = pi/2 over a width of about
    // eps / x, eps^2 = r^2 - x^2. On [pi/4, 3pi/4] substitute cos a = (eps / x) sinh w,
    // which turns sqrt(eps^2 + x^2 cos^2 a) into eps cosh w.
    auto over_a = [&](double x) {
        auto g = [&](double a) { return over_u(x, a); };
        const double pi = std::numbers::pi;
        const double eps = std::sqrt(std::max(r * r - x * x, 0.0));
        double sum = tr.take(integrate(g, 0.0, pi / 4, middle_tol, 15)) +
                     tr.take(integrate(g, 3 * pi / 4, pi, middle_tol, 15));
        if (eps == 0.0) {
            sum += tr.take(integrate(g, pi / 4, 3 * pi / 4, middle_tol, 15));
        } else {
            const double k = eps / x;
            const double wmax = std::asinh(std::sqrt(0.5) / k);
            auto h = [&](double w, double sign) {
                const double t = sign * k * std::sinh(w);
                return g(std::acos(t)) * k * std::cosh(w) / std::sqrt(1.0 - t * t);
            };
            sum += tr.take(integrate([&](double w) { return h(w, 1.0); }, 0.0, wmax, middle_tol, 15));
            sum += tr.take(integrate([&](double w) { return h(w, -1.0); }, 0.0, wmax, middle_tol, 15));
        }
        return x * sum;
    };
    return tr.finish(integrate(over_a, 0.0, r, opt.rel_tol, 15), opt.rel_tol);
}

} // namespace detail

// Mean area of the Johnson-Mehl cell serving a typical covered point.
inline QuadResult expected_jm_area(double lambda, double r, const QuadOptions& opt = {}) {
    auto q = detail::jm_triple_integral(lambda, r, 1, opt);
    const double k = 4.0 * lambda * std::numbers::pi / -std::expm1(-disc_load(lambda, r));
    return {q.value * k, q.error * k, q.converged};
}

// Mean length of the chord cut from that cell by a uniformly oriented line through the point.
inline QuadResult expected_chord_length(double lambda, double r, const QuadOptions& opt = {}) {
    auto q = detail::jm_triple_integral(lambda, r, 0, opt);
    const double k = (2.0 / std::numbers::pi) * 2.0 * lambda * std::numbers::pi / -std::expm1(-disc_load(lambda, r));
    return {q.value * k, q.error * k, q.converged};
}

struct CoxMean {
    double value = 0.0;
    double from_other_roads = 0.0;
    double from_own_road = 0.0;
    bool converged = true;
};

// Mean sharing number for a mobile driving on a road of a Poisson line process with
// users on every road.
inline CoxMean cox_mean_sharing(double line_intensity, double user_line_intensity, double lambda, double r,
                                const QuadOptions& opt = {}) {
    detail::require(line_intensity >= 0.0 && user_line_intensity >= 0.0, "intensities must be >= 0");
    CoxMean c;
    if (user_line_intensity == 0.0) return c;
    const auto area = expected_jm_area(lambda, r, opt);
    const auto chord = expected_chord_length(lambda, r, opt);
    c.from_other_roads = std::numbers::pi * line_intensity * user_line_intensity * area.value;
    c.from_own_road = user_line_intensity * chord.value;
    c.value = c.from_other_roads + c.from_own_road;
    c.converged = area.converged && chord.converged;
    return c;
}

} // namespace mobrate
