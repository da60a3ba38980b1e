#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "geometry.hpp"
#include "intervals.hpp"
#include "model.hpp"
#include "random.hpp"

namespace mobrate {

struct Trajectory {
    Point start;
    Point direction{1.0, 0.0};
    double velocity = 1.0;
    double duration = 1.0;

    void validate() const {
        detail::require(std::abs(std::hypot(direction.x, direction.y) - 1.0) < 1e-12,
                        "trajectory direction must be a unit vector");
        detail::require(detail::finite_positive(velocity), "velocity must be > 0");
        detail::require(detail::finite_positive(duration), "duration must be > 0");
    }

    double length() const { return velocity * duration; }
    Point position(double t) const {
        const double s = velocity * t;
        return {start.x + s * direction.x, start.y + s * direction.y};
    }
    // Along-track coordinate of the projection of p (meters from start).
    double along(Point p) const { return (p.x - start.x) * direction.x + (p.y - start.y) * direction.y; }
    // Signed perpendicular offset of p.
    double across(Point p) const { return direction.x * (p.y - start.y) - direction.y * (p.x - start.x); }
};

inline Window trajectory_window(const Trajectory& tr, double pad) {
    const Point a = tr.start, b = tr.position(tr.duration);
    return Window{std::min(a.x, b.x), std::min(a.y, b.y), std::max(a.x, b.x), std::max(a.y, b.y)}.padded(pad);
}

inline double default_pad(double node_intensity, double radius) {
    return std::max(5.0 * radius, 3.0 / std::sqrt(node_intensity));
}

// Horizontal trajectory starting at the origin.
inline Trajectory straight_trajectory(double velocity, double duration) {
    return Trajectory{{0.0, 0.0}, {1.0, 0.0}, velocity, duration};
}

// ---------------------------------------------------------------- on-sets

inline IntervalSet coverage_intervals(const FieldSample& field, const Trajectory& tr, double radius) {
    tr.validate();
    std::vector<Interval> chords;
    for (const auto& x : field.nodes()) {
        const double y = tr.across(x);
        if (std::abs(y) >= radius) continue;
        const double half = std::sqrt(radius * radius - y * y);
        const double a = tr.along(x);
        chords.push_back({(a - half) / tr.velocity, (a + half) / tr.velocity});
    }
    return IntervalSet::from_unsorted(std::move(chords), 0.0, tr.duration);
}

// ---------------------------------------------------------------- serving sequence

struct CellVisit {
    double begin = 0.0; // s
    double end = 0.0;
    std::size_t node = 0;
};

// Exact sequence of serving nodes along the segment. Squared distances to two nodes differ
// by a linear function of time, so the sequence is the lower envelope of lines.
inline std::vector<CellVisit> serving_sequence(const FieldSample& field, const Trajectory& tr) {
    tr.validate();
    struct Item {
        double a, y2;
        std::size_t id;
    };
    const auto& nodes = field.nodes();
    std::vector<Item> items;
    items.reserve(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double y = tr.across(nodes[i]);
        items.push_back({tr.along(nodes[i]), y * y, i});
    }
    std::vector<CellVisit> out;
    if (items.empty()) return out;
    std::sort(items.begin(), items.end(), [](const Item& p, const Item& q) {
        if (p.a != q.a) return p.a < q.a;
        if (p.y2 != q.y2) return p.y2 < q.y2;
        return p.id < q.id;
    });
    // Along-track point where q (larger a) overtakes p.
    auto cross = [](const Item& p, const Item& q) {
        return 0.5 * (p.a + q.a) + (q.y2 - p.y2) / (2.0 * (q.a - p.a));
    };
    std::vector<Item> hull;
    for (const auto& it : items) {
        if (!hull.empty() && hull.back().a == it.a) continue; // dominated: same a, larger offset
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], it) <= cross(hull[hull.size() - 2], hull.back()))
            hull.pop_back();
        // A line overtaken at the same point as its predecessor holds no interval.
        hull.push_back(it);
    }
    const double L = tr.length();
    for (std::size_t k = 0; k < hull.size(); ++k) {
        double lo = k == 0 ? -std::numeric_limits<double>::infinity() : cross(hull[k - 1], hull[k]);
        double hi = k + 1 == hull.size() ? std::numeric_limits<double>::infinity() : cross(hull[k], hull[k + 1]);
        lo = std::max(lo, 0.0);
        hi = std::min(hi, L);
        if (hi <= lo) continue;
        out.push_back({lo / tr.velocity, hi / tr.velocity, hull[k].id});
    }
    // Guard against degenerate slivers from rounding.
    for (std::size_t k = 0; k + 1 < out.size(); ++k) out[k].end = out[k + 1].begin;
    if (!out.empty()) {
        out.front().begin = 0.0;
        out.back().end = tr.duration;
    }
    return out;
}

// Handoff times: every change of the nearest node along the trajectory.
inline std::vector<double> cell_edge_crossings(const FieldSample& field, const Trajectory& tr) {
    const auto seq = serving_sequence(field, tr);
    std::vector<double> out;
    for (std::size_t k = 1; k < seq.size(); ++k) out.push_back(seq[k].begin);
    return out;
}

// Times at which a node's projection onto the path lies in its own Voronoi cell.
inline std::vector<double> interior_maxima(const FieldSample& field, const Trajectory& tr) {
    tr.validate();
    std::vector<double> out;
    const auto& nodes = field.nodes();
    const double L = tr.length();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double a = tr.along(nodes[i]);
        if (a < 0.0 || a > L) continue;
        const double t = a / tr.velocity;
        const auto nn = field.nearest_node(tr.position(t));
        if (nn && nn->index == i) out.push_back(t);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------- crossing records

class CrossingRecord {
public:
    CrossingRecord() = default;

    CrossingRecord(double level, double t_begin, double t_end, bool initial_on, std::vector<double> up,
                   std::vector<double> down)
        : level_(level), t_begin_(t_begin), t_end_(t_end), initial_on_(initial_on), up_(std::move(up)),
          down_(std::move(down)) {
        detail::require(t_end >= t_begin, "crossing horizon reversed");
        // Events must alternate, starting with a down-crossing iff initially on.
        std::size_t iu = 0, id = 0;
        bool on = initial_on;
        double last = t_begin;
        while (iu < up_.size() || id < down_.size()) {
            const bool next_is_down = on;
            const auto& v = next_is_down ? down_ : up_;
            auto& idx = next_is_down ? id : iu;
            detail::require(idx < v.size(), "crossing times do not interleave");
            const double t = v[idx++];
            detail::require(t > last || (t == t_begin && last == t_begin && iu + id == 1),
                            "crossing times must increase");
            detail::require(t <= t_end, "crossing beyond horizon");
            last = t;
            on = !on;
        }
    }

    double level() const { return level_; }
    double t_begin() const { return t_begin_; }
    double t_end() const { return t_end_; }
    bool initial_on() const { return initial_on_; }
    const std::vector<double>& up_times() const { return up_; }
    const std::vector<double>& down_times() const { return down_; }

    // Complete on periods, each opened by an up-crossing and closed by a down-crossing.
    std::vector<double> on_durations() const {
        std::vector<double> out;
        const std::size_t shift = initial_on_ ? 1 : 0;
        for (std::size_t k = 0; k < up_.size() && k + shift < down_.size(); ++k)
            out.push_back(down_[k + shift] - up_[k]);
        return out;
    }

    // Complete off periods.
    std::vector<double> off_durations() const {
        std::vector<double> out;
        const std::size_t shift = initial_on_ ? 0 : 1;
        for (std::size_t k = 0; k < down_.size() && k + shift < up_.size(); ++k)
            out.push_back(up_[k + shift] - down_[k]);
        return out;
    }

    std::vector<double> interarrivals() const {
        std::vector<double> out;
        for (std::size_t k = 1; k < up_.size(); ++k) out.push_back(up_[k] - up_[k - 1]);
        return out;
    }

    // Time spent on within the horizon.
    double on_time() const {
        double total = 0.0;
        bool on = initial_on_;
        double since = t_begin_;
        std::size_t iu = 0, id = 0;
        while (iu < up_.size() || id < down_.size()) {
            const double t = on ? down_[id++] : up_[iu++];
            if (on) total += t - since;
            since = t;
            on = !on;
        }
        if (on) total += t_end_ - since;
        return total;
    }

private:
    double level_ = 0.0;
    double t_begin_ = 0.0;
    double t_end_ = 0.0;
    bool initial_on_ = false;
    std::vector<double> up_;
    std::vector<double> down_;
};

inline CrossingRecord extract_crossings(const IntervalSet& on_set, double t_begin, double t_end, double level,
                                        double tol = IntervalSet::default_tolerance) {
    bool initial_on = false;
    std::vector<double> up, down;
    for (const auto& iv : on_set.intervals()) {
        if (iv.end < t_begin || iv.begin > t_end) continue;
        if (iv.begin <= t_begin + tol)
            initial_on = true;
        else
            up.push_back(iv.begin);
        if (iv.end < t_end - tol) down.push_back(iv.end);
    }
    return CrossingRecord(level, t_begin, t_end, initial_on, std::move(up), std::move(down));
}

struct SampledTrace {
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<double> values;

    double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
};

inline std::size_t sample_count(double duration, double dt) {
    detail::require(detail::finite_positive(dt), "dt must be > 0");
    return static_cast<std::size_t>(std::floor(duration / dt + 1e-9)) + 1;
}

// Builds a record from the sorted indices of "on" samples out of n samples.
inline CrossingRecord crossings_from_on_samples(const std::vector<std::size_t>& on_idx, std::size_t n, double t0,
                                                double dt, double level) {
    bool initial_on = false;
    std::vector<double> up, down;
    std::size_t k = 0;
    while (k < on_idx.size()) {
        std::size_t j = k;
        while (j + 1 < on_idx.size() && on_idx[j + 1] == on_idx[j] + 1) ++j;
        const std::size_t first = on_idx[k], last = on_idx[j];
        if (first == 0)
            initial_on = true;
        else
            up.push_back(t0 + static_cast<double>(first) * dt);
        if (last + 1 < n) down.push_back(t0 + static_cast<double>(last + 1) * dt);
        k = j + 1;
    }
    const double t_end = t0 + static_cast<double>(n == 0 ? 0 : n - 1) * dt;
    return CrossingRecord(level, t0, t_end, initial_on, std::move(up), std::move(down));
}

inline CrossingRecord extract_crossings(const SampledTrace& trace, double level) {
    std::vector<std::size_t> on;
    for (std::size_t k = 0; k < trace.values.size(); ++k)
        if (trace.values[k] >= level) on.push_back(k);
    return crossings_from_on_samples(on, trace.values.size(), trace.t0, trace.dt, level);
}

// Keeps the first up-crossing and drops any later one within dead_time of the last kept one;
// the on periods of dropped crossings merge into the kept one.
inline CrossingRecord suppress_upcrossings(const CrossingRecord& rec, double dead_time) {
    detail::require(dead_time >= 0.0, "dead_time must be >= 0");
    struct Period {
        std::optional<double> up, down;
    };
    const auto& up = rec.up_times();
    const auto& down = rec.down_times();
    const std::size_t shift = rec.initial_on() ? 1 : 0;
    std::vector<Period> kept;
    if (rec.initial_on()) kept.push_back({std::nullopt, down.empty() ? std::nullopt : std::optional<double>(down[0])});
    std::optional<double> last_kept;
    for (std::size_t k = 0; k < up.size(); ++k) {
        const Period p{up[k], k + shift < down.size() ? std::optional<double>(down[k + shift]) : std::nullopt};
        if (last_kept && up[k] - *last_kept < dead_time) {
            kept.back().down = p.down;
            continue;
        }
        kept.push_back(p);
        last_kept = up[k];
    }
    std::vector<double> kept_up, kept_down;
    for (const auto& p : kept) {
        if (p.up) kept_up.push_back(*p.up);
        if (p.down) kept_down.push_back(*p.down);
    }
    return CrossingRecord(rec.level(), rec.t_begin(), rec.t_end(), rec.initial_on(), std::move(kept_up),
                          std::move(kept_down));
}

// ---------------------------------------------------------------- fading

// Block-constant power fading with unit mean.
struct FadingModel {
    enum class Kind { none, rayleigh, hyperexp };

    Kind kind = Kind::none;
    double p = 1.0; // branch probability
    double m1 = 1.0;
    double m2 = 1.0;
    double coherence_time = 0.007;

    static FadingModel none() { return {}; }
    static FadingModel rayleigh(double coherence_time = 0.007) {
        detail::require(detail::finite_positive(coherence_time), "coherence_time must be > 0");
        return {Kind::rayleigh, 1.0, 1.0, 1.0, coherence_time};
    }
    // Two-branch exponential mixture with equal branch contributions p*m1 = (1-p)*m2 = 1/2.
    static FadingModel hyperexp_with_variance(double variance, double coherence_time = 0.007) {
        detail::require(std::isfinite(variance) && variance >= 1.0,
                        "a unit-mean exponential mixture cannot have variance below 1");
        detail::require(detail::finite_positive(coherence_time), "coherence_time must be > 0");
        const double p = 0.5 * (1.0 + std::sqrt((variance - 1.0) / (variance + 1.0)));
        return {Kind::hyperexp, p, 0.5 / p, 0.5 / (1.0 - p), coherence_time};
    }

    double mean() const { return kind == Kind::hyperexp ? p * m1 + (1.0 - p) * m2 : 1.0; }
    double variance() const {
        switch (kind) {
        case Kind::none: return 0.0;
        case Kind::rayleigh: return 1.0;
        case Kind::hyperexp: {
            const double second = 2.0 * (p * m1 * m1 + (1.0 - p) * m2 * m2);
            return second - mean() * mean();
        }
        }
        return 0.0;
    }

    double draw(double u_branch, double u_value) const {
        switch (kind) {
        case Kind::none: return 1.0;
        case Kind::rayleigh: return -std::log1p(-u_value);
        case Kind::hyperexp: return -(u_branch < p ? m1 : m2) * std::log1p(-u_value);
        }
        return 1.0;
    }

    std::int64_t block(double t) const { return static_cast<std::int64_t>(std::floor(t / coherence_time)); }

    double block_gain(std::uint64_t seed, std::int64_t b) const {
        if (kind == Kind::none) return 1.0;
        const auto key = derive_seed(seed, streams::fading, static_cast<std::uint64_t>(b));
        return draw(hash_uniform(key ^ 0x5bd1e995ULL), hash_uniform(key));
    }

    double gain_at(std::uint64_t seed, double t) const { return block_gain(seed, block(t)); }

    // Hard upper bound of any draw: uniforms are at most 1 - 2^-53.
    double max_gain() const {
        switch (kind) {
        case Kind::none: return 1.0;
        case Kind::rayleigh: return 53.0 * std::numbers::ln2;
        case Kind::hyperexp: return std::max(m1, m2) * 53.0 * std::numbers::ln2;
        }
        return 1.0;
    }
};

// Coherence time 0.423/f_d with Doppler f_d = v f_o / c.
inline double coherence_time_from_doppler(double velocity, double carrier_hz) {
    const double fd = velocity * carrier_hz / 299792458.0;
    return 0.423 / fd;
}

// ---------------------------------------------------------------- sampled traces

inline constexpr double min_distance = 1e-6;

namespace detail {
// Serving node at a sample time; neighbours of the current cell are compared so that samples
// landing exactly on a handoff resolve the same way as a direct argmin (lowest index on ties).
inline std::size_t nearest_in_sequence(const FieldSample& field, const std::vector<CellVisit>& seq, std::size_t c,
                                       Point pos) {
    std::size_t best_id = seq[c].node;
    double best = distance_sq(pos, field.nodes()[best_id]);
    for (std::size_t j : {c == 0 ? c : c - 1, c + 1 < seq.size() ? c + 1 : c}) {
        const std::size_t id = seq[j].node;
        const double d2 = distance_sq(pos, field.nodes()[id]);
        if (d2 < best || (d2 == best && id < best_id)) {
            best = d2;
            best_id = id;
        }
    }
    return best_id;
}
} // namespace detail

inline double snr_value(const NetworkModel& m, double dist, double gain) {
    const double L = std::max(dist, min_distance);
    return gain * m.tx_power * std::pow(L, -m.pathloss_exponent) / m.noise_power;
}

inline SampledTrace snr_trace(const FieldSample& field, const Trajectory& tr, const NetworkModel& m, double dt,
                              const FadingModel& fading = FadingModel::none(), std::uint64_t fading_seed = 0) {
    const auto seq = serving_sequence(field, tr);
    detail::require(!seq.empty(), "field has no nodes");
    SampledTrace out{0.0, dt, {}};
    const std::size_t n = sample_count(tr.duration, dt);
    out.values.resize(n);
    std::size_t c = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt;
        while (c + 1 < seq.size() && t > seq[c].end) ++c;
        const Point pos = tr.position(t);
        const std::size_t id = detail::nearest_in_sequence(field, seq, c, pos);
        out.values[k] = snr_value(m, distance(pos, field.nodes()[id]), fading.gain_at(fading_seed, t));
    }
    return out;
}

inline double default_interference_radius(double node_intensity, double radius) {
    return std::max(20.0 * radius, 10.0 / std::sqrt(node_intensity));
}

inline double sinr_at(const FieldSample& field, const NetworkModel& m, Point pos, std::size_t serving,
                      double interference_radius) {
    const auto& nodes = field.nodes();
    const double signal = snr_value(m, distance(pos, nodes[serving]), 1.0) * m.noise_power;
    double interference = 0.0;
    field.node_index().for_each_within(pos, interference_radius, [&](std::size_t i, double d2) {
        if (i == serving) return;
        interference += m.tx_power * std::pow(std::max(std::sqrt(d2), min_distance), -m.pathloss_exponent);
    });
    return signal / (m.noise_power + interference);
}

// Interference from nodes within interference_radius of the mobile's position.
inline SampledTrace sinr_trace(const FieldSample& field, const Trajectory& tr, const NetworkModel& m, double dt,
                               double interference_radius) {
    const auto seq = serving_sequence(field, tr);
    detail::require(!seq.empty(), "field has no nodes");
    SampledTrace out{0.0, dt, {}};
    const std::size_t n = sample_count(tr.duration, dt);
    out.values.resize(n);
    std::size_t c = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt;
        while (c + 1 < seq.size() && t > seq[c].end) ++c;
        const Point pos = tr.position(t);
        out.values[k] = sinr_at(field, m, pos, detail::nearest_in_sequence(field, seq, c, pos), interference_radius);
    }
    return out;
}

namespace detail {

struct Chord {
    double begin, end;
    std::size_t node;
};

inline std::vector<Chord> chords_within(const FieldSample& field, const Trajectory& tr, double radius) {
    std::vector<Chord> out;
    const auto& nodes = field.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double y = tr.across(nodes[i]);
        if (std::abs(y) > radius) continue;
        const double half = std::sqrt(radius * radius - y * y);
        const double a = tr.along(nodes[i]);
        out.push_back({(a - half) / tr.velocity, (a + half) / tr.velocity, i});
    }
    std::sort(out.begin(), out.end(), [](const Chord& p, const Chord& q) { return p.begin < q.begin; });
    return out;
}

// Visits every sample k whose time lies in some chord, with the chords active at that time.
// Samples outside all chords are never visited.
template <class F>
void sweep_chord_samples(const std::vector<Chord>& chords, std::size_t n, double dt, F&& f) {
    std::vector<const Chord*> active;
    std::size_t next = 0;
    std::size_t k = 0;
    while (k < n) {
        const double t = static_cast<double>(k) * dt;
        std::erase_if(active, [t](const Chord* c) { return c->end < t; });
        while (next < chords.size() && chords[next].begin <= t) {
            if (chords[next].end >= t) active.push_back(&chords[next]);
            ++next;
        }
        if (active.empty()) {
            if (next >= chords.size()) break;
            auto jump = static_cast<std::size_t>(std::max(0.0, std::ceil(chords[next].begin / dt)));
            if (jump > 0 && static_cast<double>(jump - 1) * dt >= chords[next].begin) --jump;
            k = std::max(k + 1, jump);
            continue;
        }
        f(k, t, active);
        ++k;
    }
}

} // namespace detail

// Crossings of the sampled fading SNR at level gamma, evaluating only samples that can be on.
// Matches extract_crossings(snr_trace(...), gamma) exactly.
inline CrossingRecord sampled_snr_crossings(const FieldSample& field, const Trajectory& tr, const NetworkModel& m,
                                            double gamma, double dt, const FadingModel& fading,
                                            std::uint64_t fading_seed) {
    tr.validate();
    const double reach = coverage_radius(m, gamma) * std::pow(fading.max_gain(), 1.0 / m.pathloss_exponent);
    const auto chords = detail::chords_within(field, tr, reach * (1.0 + 1e-9) + min_distance);
    const std::size_t n = sample_count(tr.duration, dt);
    std::vector<std::size_t> on;
    const auto& nodes = field.nodes();
    detail::sweep_chord_samples(chords, n, dt, [&](std::size_t k, double t, const auto& active) {
        const Point pos = tr.position(t);
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_id = 0;
        for (const auto* c : active) {
            const double d2 = distance_sq(pos, nodes[c->node]);
            if (d2 < best || (d2 == best && c->node < best_id)) {
                best = d2;
                best_id = c->node;
            }
        }
        const double d = distance(pos, nodes[best_id]);
        if (snr_value(m, d, fading.gain_at(fading_seed, t)) >= gamma) on.push_back(k);
    });
    return crossings_from_on_samples(on, n, 0.0, dt, gamma);
}

// Crossings of the sampled SINR; SINR <= SNR, so only samples inside coverage are evaluated.
inline CrossingRecord sampled_sinr_crossings(const FieldSample& field, const Trajectory& tr, const NetworkModel& m,
                                             double gamma, double dt, double interference_radius) {
    tr.validate();
    const auto chords = detail::chords_within(field, tr, coverage_radius(m, gamma) * (1.0 + 1e-9) + min_distance);
    const std::size_t n = sample_count(tr.duration, dt);
    std::vector<std::size_t> on;
    const auto& nodes = field.nodes();
    detail::sweep_chord_samples(chords, n, dt, [&](std::size_t k, double t, const auto& active) {
        const Point pos = tr.position(t);
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_id = 0;
        for (const auto* c : active) {
            const double d2 = distance_sq(pos, nodes[c->node]);
            if (d2 < best || (d2 == best && c->node < best_id)) {
                best = d2;
                best_id = c->node;
            }
        }
        if (sinr_at(field, m, pos, best_id, interference_radius) >= gamma) on.push_back(k);
    });
    return crossings_from_on_samples(on, n, 0.0, dt, gamma);
}

} // namespace mobrate
