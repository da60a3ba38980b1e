#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "geometry.hpp"
#include "random.hpp"
#include "stats.hpp"

namespace mobrate {

// Monte Carlo counterparts of the integral-geometry expectations. A tagged point sits at the
// origin and the node field is conditioned on the origin being covered.

struct TaggedCell {
    Point node;                  // serving node
    std::vector<Point> neighbors; // other nodes within 2r of the serving node
};

namespace detail {

inline TaggedCell sample_tagged_cell(double lambda, double r, Engine& eng) {
    const double half = 3.0 * r + 1.0 / std::sqrt(lambda);
    const Window w{-half, -half, half, half};
    for (;;) {
        const auto nodes = sample_poisson_points(lambda, w, eng);
        if (nodes.empty()) continue;
        std::size_t best = 0;
        for (std::size_t i = 1; i < nodes.size(); ++i)
            if (distance_sq(nodes[i], {0, 0}) < distance_sq(nodes[best], {0, 0})) best = i;
        if (distance(nodes[best], {0, 0}) > r) continue;
        TaggedCell c;
        c.node = nodes[best];
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (i != best && distance(nodes[i], c.node) <= 2.0 * r) c.neighbors.push_back(nodes[i]);
        return c;
    }
}

// Area of the serving cell clipped to the disc, integrating the boundary radius in polar
// coordinates about the node.
inline double tagged_cell_area(const TaggedCell& c, double r, int angles = 4096) {
    struct HalfPlane {
        double h, psi;
    };
    std::vector<HalfPlane> hp;
    for (auto y : c.neighbors) hp.push_back({distance(y, c.node) / 2.0, std::atan2(y.y - c.node.y, y.x - c.node.x)});
    double sum = 0.0;
    const double step = 2.0 * std::numbers::pi / angles;
    for (int k = 0; k < angles; ++k) {
        const double phi = (k + 0.5) * step;
        double rho = r;
        for (const auto& p : hp) {
            const double cs = std::cos(phi - p.psi);
            if (cs > 0.0) rho = std::min(rho, p.h / cs);
        }
        sum += 0.5 * rho * rho;
    }
    return sum * step;
}

// Length of the intersection of the serving cell (clipped to the disc) with the line through
// the origin in direction d.
inline double tagged_cell_chord(const TaggedCell& c, double r, Point d) {
    const double dx = d.x * c.node.x + d.y * c.node.y;
    const double disc = dx * dx - (c.node.x * c.node.x + c.node.y * c.node.y) + r * r;
    if (disc < 0.0) return 0.0;
    double lo = dx - std::sqrt(disc), hi = dx + std::sqrt(disc);
    const double nx2 = c.node.x * c.node.x + c.node.y * c.node.y;
    for (auto y : c.neighbors) {
        // 2 s d.(Y - X) <= |Y|^2 - |X|^2
        const double a = 2.0 * (d.x * (y.x - c.node.x) + d.y * (y.y - c.node.y));
        const double b = y.x * y.x + y.y * y.y - nx2;
        if (a > 0.0) hi = std::min(hi, b / a);
        else if (a < 0.0) lo = std::max(lo, b / a);
    }
    return std::max(0.0, hi - lo);
}

inline bool in_tagged_cell(const TaggedCell& c, double r, Point p) {
    const double d2 = distance_sq(p, c.node);
    if (d2 > r * r) return false;
    for (auto y : c.neighbors)
        if (distance_sq(p, y) < d2) return false;
    return true;
}

} // namespace detail

inline Summary simulate_jm_area(double lambda, double r, std::size_t reps, std::uint64_t seed) {
    auto eng = make_engine(seed);
    std::vector<double> v(reps);
    for (auto& a : v) a = detail::tagged_cell_area(detail::sample_tagged_cell(lambda, r, eng), r);
    return summarize(v);
}

inline Summary simulate_chord_length(double lambda, double r, std::size_t reps, std::uint64_t seed) {
    auto eng = make_engine(seed);
    std::vector<double> v(reps);
    for (auto& l : v) {
        const auto c = detail::sample_tagged_cell(lambda, r, eng);
        const double th = std::numbers::pi * uniform01(eng);
        l = detail::tagged_cell_chord(c, r, {std::cos(th), std::sin(th)});
    }
    return summarize(v);
}

// Users sharing the serving cell with a driver at the origin: users on a Poisson line process
// plus users on the driver's own road.
inline Summary simulate_cox_sharing(double line_intensity, double user_line_intensity, double lambda, double r,
                                    std::size_t reps, std::uint64_t seed) {
    auto eng = make_engine(seed);
    std::vector<double> v(reps);
    const Window w{-2.0 * r, -2.0 * r, 2.0 * r, 2.0 * r};
    for (std::size_t i = 0; i < reps; ++i) {
        const auto c = detail::sample_tagged_cell(lambda, r, eng);
        const auto lf = sample_line_field(line_intensity, user_line_intensity, w, eng());
        std::size_t n = 0;
        for (auto u : lf.users()) n += detail::in_tagged_cell(c, r, u);
        // Own road through the origin.
        const Line own{std::numbers::pi * uniform01(eng), 0.0};
        const auto [a, b] = clip_line(own, {0, 0}, w);
        const double mean = user_line_intensity * (b - a);
        const auto m = mean > 0.0 ? std::poisson_distribution<long long>(mean)(eng) : 0;
        std::uniform_real_distribution<double> us(a, b);
        for (long long k = 0; k < m; ++k) n += detail::in_tagged_cell(c, r, own.at({0, 0}, us(eng)));
        v[i] = static_cast<double>(n);
    }
    return summarize(v);
}

} // namespace mobrate
