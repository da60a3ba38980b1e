#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "model.hpp"
#include "random.hpp"

namespace mobrate {

struct Point {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
};

inline double distance_sq(Point a, Point b) {
    const double dx = a.x - b.x, dy = a.y - b.y;
    return dx * dx + dy * dy;
}
inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Window {
    double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
    double area() const { return width() * height(); }
    bool nondegenerate() const {
        return std::isfinite(xmin) && std::isfinite(ymin) && std::isfinite(xmax) && std::isfinite(ymax) &&
               xmax > xmin && ymax > ymin;
    }
    bool contains(Point p) const { return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax; }
    Window padded(double pad) const { return {xmin - pad, ymin - pad, xmax + pad, ymax + pad}; }
    friend bool operator==(const Window&, const Window&) = default;
};

// Guards against requests that would exhaust memory.
inline constexpr double max_expected_points = 2.0e8;

inline std::vector<Point> sample_poisson_points(double intensity, const Window& w, Engine& eng) {
    detail::require(std::isfinite(intensity) && intensity >= 0.0, "intensity must be >= 0");
    detail::require(w.nondegenerate(), "window must be nondegenerate");
    const double mean = intensity * w.area();
    detail::require(mean <= max_expected_points, "expected point count too large");
    std::vector<Point> pts;
    if (mean == 0.0) return pts;
    const auto n = std::poisson_distribution<long long>(mean)(eng);
    pts.reserve(static_cast<std::size_t>(n));
    std::uniform_real_distribution<double> ux(w.xmin, w.xmax), uy(w.ymin, w.ymax);
    for (long long i = 0; i < n; ++i) {
        const double x = ux(eng);
        const double y = uy(eng);
        pts.push_back({x, y});
    }
    return pts;
}

inline std::vector<Point> sample_poisson_field(double intensity, const Window& w, std::uint64_t seed) {
    auto eng = make_engine(seed);
    return sample_poisson_points(intensity, w, eng);
}

struct Nearest {
    std::size_t index = 0;
    double distance = 0.0;
};

// Uniform bucket grid. Queries are exact; the grid only prunes.
class GridIndex {
public:
    GridIndex() = default;

    GridIndex(std::span<const Point> pts, const Window& w, double cell_side) {
        detail::require(w.nondegenerate(), "grid window must be nondegenerate");
        detail::require(cell_side > 0.0 && std::isfinite(cell_side), "cell side must be > 0");
        x0_ = w.xmin;
        y0_ = w.ymin;
        side_ = cell_side;
        const double budget = 4.0 * static_cast<double>(pts.size()) + 1024.0;
        for (;;) {
            nx_ = std::max<long>(1, static_cast<long>(std::ceil(w.width() / side_)));
            ny_ = std::max<long>(1, static_cast<long>(std::ceil(w.height() / side_)));
            if (static_cast<double>(nx_) * static_cast<double>(ny_) <= budget) break;
            side_ *= 2.0;
        }
        const auto ncells = static_cast<std::size_t>(nx_ * ny_);
        start_.assign(ncells + 1, 0);
        std::vector<std::size_t> cell_of(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            cell_of[i] = cell_id(cell_x(pts[i].x), cell_y(pts[i].y));
            ++start_[cell_of[i] + 1];
        }
        for (std::size_t c = 0; c < ncells; ++c) start_[c + 1] += start_[c];
        pts_.resize(pts.size());
        ids_.resize(pts.size());
        std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto slot = fill[cell_of[i]]++;
            pts_[slot] = pts[i];
            ids_[slot] = i;
        }
    }

    std::size_t size() const { return pts_.size(); }
    double cell_side() const { return side_; }

    // Ties resolved toward the lowest original index.
    std::optional<Nearest> nearest(Point q) const {
        if (pts_.empty()) return std::nullopt;
        const long cx = cell_x(q.x), cy = cell_y(q.y);
        const long kmax = std::max({cx, nx_ - 1 - cx, cy, ny_ - 1 - cy});
        double best_d2 = std::numeric_limits<double>::infinity();
        std::size_t best = 0;
        for (long k = 0; k <= kmax; ++k) {
            for (long dy = -k; dy <= k; ++dy) {
                const long y = cy + dy;
                if (y < 0 || y >= ny_) continue;
                const bool full_row = (dy == -k || dy == k);
                const long step = full_row ? 1 : 2 * k;
                for (long dx = -k; dx <= k; dx += (step == 0 ? 1 : step)) {
                    const long x = cx + dx;
                    if (x < 0 || x >= nx_) continue;
                    const auto c = cell_id(x, y);
                    for (auto s = start_[c]; s < start_[c + 1]; ++s) {
                        const double d2 = distance_sq(q, pts_[s]);
                        if (d2 < best_d2 || (d2 == best_d2 && ids_[s] < best)) {
                            best_d2 = d2;
                            best = ids_[s];
                        }
                    }
                    if (k == 0) break;
                }
            }
            // Every unvisited point lies at least k*side away.
            const double bound = static_cast<double>(k) * side_;
            if (best_d2 < bound * bound) break;
        }
        return Nearest{best, std::sqrt(best_d2)};
    }

    // Calls f(index, squared distance) for every point with |p - q| <= radius.
    template <class F>
    void for_each_within(Point q, double radius, F&& f) const {
        if (pts_.empty() || !(radius >= 0.0)) return;
        const long xa = cell_x(q.x - radius), xb = cell_x(q.x + radius);
        const long ya = cell_y(q.y - radius), yb = cell_y(q.y + radius);
        const double r2 = radius * radius;
        for (long y = ya; y <= yb; ++y)
            for (long x = xa; x <= xb; ++x) {
                const auto c = cell_id(x, y);
                for (auto s = start_[c]; s < start_[c + 1]; ++s) {
                    const double d2 = distance_sq(q, pts_[s]);
                    if (d2 <= r2) f(ids_[s], d2);
                }
            }
    }

    std::size_t count_within(Point q, double radius) const {
        std::size_t n = 0;
        for_each_within(q, radius, [&](std::size_t, double) { ++n; });
        return n;
    }

private:
    long clampl(long v, long hi) const { return std::clamp(v, 0L, hi - 1); }
    long cell_x(double x) const {
        const double c = std::floor((x - x0_) / side_);
        if (!(c > -1e15)) return 0;
        return clampl(static_cast<long>(std::min(c, 1e15)), nx_);
    }
    long cell_y(double y) const {
        const double c = std::floor((y - y0_) / side_);
        if (!(c > -1e15)) return 0;
        return clampl(static_cast<long>(std::min(c, 1e15)), ny_);
    }
    std::size_t cell_id(long x, long y) const { return static_cast<std::size_t>(y * nx_ + x); }

    double x0_ = 0.0, y0_ = 0.0, side_ = 1.0;
    long nx_ = 1, ny_ = 1;
    std::vector<Point> pts_;
    std::vector<std::size_t> ids_;
    std::vector<std::size_t> start_;
};

inline double default_cell_side(double intensity, std::size_t count, const Window& w) {
    if (intensity > 0.0) return 1.0 / std::sqrt(intensity);
    if (count > 0) return std::sqrt(w.area() / static_cast<double>(count));
    return std::max(w.width(), w.height());
}

// One realization of nodes and users; immutable once built.
class FieldSample {
public:
    FieldSample(std::vector<Point> nodes, std::vector<Point> users, const Window& w, std::uint64_t seed,
                double node_intensity = 0.0, double user_intensity = 0.0)
        : nodes_(std::move(nodes)), users_(std::move(users)), window_(w), seed_(seed) {
        detail::require(w.nondegenerate(), "field window must be nondegenerate");
        for (const auto& p : nodes_) detail::require(w.contains(p), "node outside window");
        for (const auto& p : users_) detail::require(w.contains(p), "user outside window");
        node_index_ = GridIndex(nodes_, w, default_cell_side(node_intensity, nodes_.size(), w));
        user_index_ = GridIndex(users_, w, default_cell_side(user_intensity, users_.size(), w));
    }

    static FieldSample sample(double node_intensity, double user_intensity, const Window& w, std::uint64_t seed) {
        auto nodes = sample_poisson_field(node_intensity, w, derive_seed(seed, streams::nodes));
        auto users = sample_poisson_field(user_intensity, w, derive_seed(seed, streams::users));
        return FieldSample(std::move(nodes), std::move(users), w, seed, node_intensity, user_intensity);
    }

    const std::vector<Point>& nodes() const { return nodes_; }
    const std::vector<Point>& users() const { return users_; }
    const Window& window() const { return window_; }
    std::uint64_t seed() const { return seed_; }
    const GridIndex& node_index() const { return node_index_; }
    const GridIndex& user_index() const { return user_index_; }

    std::optional<Nearest> nearest_node(Point q) const { return node_index_.nearest(q); }

    bool in_johnson_mehl(Point q, std::size_t i, double radius) const {
        detail::require(i < nodes_.size(), "node index out of range");
        if (distance(q, nodes_[i]) > radius) return false;
        const auto nn = nearest_node(q);
        return nn && nn->index == i;
    }

private:
    std::vector<Point> nodes_;
    std::vector<Point> users_;
    Window window_;
    std::uint64_t seed_ = 0;
    GridIndex node_index_;
    GridIndex user_index_;
};

// Line {x : <x - center, (cos t, sin t)> = offset}.
struct Line {
    double theta = 0.0;
    double offset = 0.0;

    Point foot(Point center) const {
        return {center.x + offset * std::cos(theta), center.y + offset * std::sin(theta)};
    }
    Point direction() const { return {-std::sin(theta), std::cos(theta)}; }
    Point at(Point center, double s) const {
        const Point f = foot(center), d = direction();
        return {f.x + s * d.x, f.y + s * d.y};
    }
};

// Poisson line process with users on each line.
struct LineField {
    double line_intensity = 0.0; // lambda_r, on [0,pi) x R
    double user_intensity = 0.0; // lambda_t, per meter of line
    Window window;
    Point center;
    std::vector<Line> lines;
    std::vector<std::vector<double>> user_offsets; // arc coordinate along each line

    double planar_intensity() const { return std::numbers::pi * line_intensity * user_intensity; }

    std::vector<Point> users() const {
        std::vector<Point> out;
        for (std::size_t i = 0; i < lines.size(); ++i)
            for (double s : user_offsets[i]) out.push_back(lines[i].at(center, s));
        return out;
    }
};

// Parameter interval [s0, s1] of the line inside the window; empty when s0 > s1.
inline std::pair<double, double> clip_line(const Line& l, Point center, const Window& w) {
    const Point f = l.foot(center), d = l.direction();
    double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
    auto slab = [&](double p, double dir, double a, double b) {
        if (dir == 0.0) {
            if (p < a || p > b) { lo = 1.0; hi = 0.0; }
            return;
        }
        double t0 = (a - p) / dir, t1 = (b - p) / dir;
        if (t0 > t1) std::swap(t0, t1);
        lo = std::max(lo, t0);
        hi = std::min(hi, t1);
    };
    slab(f.x, d.x, w.xmin, w.xmax);
    slab(f.y, d.y, w.ymin, w.ymax);
    return {lo, hi};
}

inline LineField sample_line_field(double line_intensity, double user_intensity, const Window& w,
                                   std::uint64_t seed) {
    detail::require(std::isfinite(line_intensity) && line_intensity >= 0.0, "line intensity must be >= 0");
    detail::require(std::isfinite(user_intensity) && user_intensity >= 0.0, "user intensity must be >= 0");
    detail::require(w.nondegenerate(), "window must be nondegenerate");
    LineField lf;
    lf.line_intensity = line_intensity;
    lf.user_intensity = user_intensity;
    lf.window = w;
    lf.center = {(w.xmin + w.xmax) / 2.0, (w.ymin + w.ymax) / 2.0};
    const double R = std::hypot(w.width(), w.height()) / 2.0;
    auto eng = make_engine(derive_seed(seed, streams::lines));
    const double mean_lines = line_intensity * std::numbers::pi * 2.0 * R;
    detail::require(mean_lines <= max_expected_points, "expected line count too large");
    const auto n = mean_lines > 0.0 ? std::poisson_distribution<long long>(mean_lines)(eng) : 0;
    std::uniform_real_distribution<double> ut(0.0, std::numbers::pi), ur(-R, R);
    for (long long i = 0; i < n; ++i) {
        const double theta = ut(eng);
        const double offset = ur(eng);
        lf.lines.push_back({theta, offset});
    }
    auto ueng = make_engine(derive_seed(seed, streams::users));
    for (const auto& l : lf.lines) {
        std::vector<double> offs;
        const auto [a, b] = clip_line(l, lf.center, w);
        if (b > a && user_intensity > 0.0) {
            const double mean = user_intensity * (b - a);
            detail::require(mean <= max_expected_points, "expected user count too large");
            const auto m = std::poisson_distribution<long long>(mean)(ueng);
            std::uniform_real_distribution<double> us(a, b);
            for (long long k = 0; k < m; ++k) offs.push_back(us(ueng));
            std::sort(offs.begin(), offs.end());
        }
        lf.user_offsets.push_back(std::move(offs));
    }
    return lf;
}

} // namespace mobrate
