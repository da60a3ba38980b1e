#pragma once

#include <algorithm>
#include <vector>

#include "model.hpp"

namespace mobrate {

struct Interval {
    double begin = 0.0;
    double end = 0.0;
    double length() const { return end - begin; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

// Sorted, disjoint closed intervals.
class IntervalSet {
public:
    static constexpr double default_tolerance = 1e-12;

    IntervalSet() = default;

    // Clips to [lo, hi], merges overlaps and gaps <= tol, then drops pieces of length <= tol.
    static IntervalSet from_unsorted(std::vector<Interval> raw, double lo, double hi,
                                     double tol = default_tolerance) {
        detail::require(hi >= lo, "interval horizon reversed");
        std::vector<Interval> clipped;
        clipped.reserve(raw.size());
        for (auto iv : raw) {
            iv.begin = std::max(iv.begin, lo);
            iv.end = std::min(iv.end, hi);
            if (iv.end >= iv.begin) clipped.push_back(iv);
        }
        std::sort(clipped.begin(), clipped.end(),
                  [](const Interval& a, const Interval& b) { return a.begin < b.begin; });
        IntervalSet out;
        for (const auto& iv : clipped) {
            if (!out.items_.empty() && iv.begin <= out.items_.back().end + tol)
                out.items_.back().end = std::max(out.items_.back().end, iv.end);
            else
                out.items_.push_back(iv);
        }
        std::erase_if(out.items_, [tol](const Interval& iv) { return iv.length() <= tol; });
        return out;
    }

    const std::vector<Interval>& intervals() const { return items_; }
    bool empty() const { return items_.empty(); }
    std::size_t size() const { return items_.size(); }

    bool contains(double t) const {
        auto it = std::upper_bound(items_.begin(), items_.end(), t,
                                   [](double x, const Interval& iv) { return x < iv.begin; });
        if (it == items_.begin()) return false;
        return t <= std::prev(it)->end;
    }

    double total_length() const {
        double s = 0.0;
        for (const auto& iv : items_) s += iv.length();
        return s;
    }

    IntervalSet united(const IntervalSet& other, double lo, double hi) const {
        std::vector<Interval> all = items_;
        all.insert(all.end(), other.items_.begin(), other.items_.end());
        return from_unsorted(std::move(all), lo, hi);
    }

private:
    std::vector<Interval> items_;
};

} // namespace mobrate
