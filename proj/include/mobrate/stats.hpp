#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "model.hpp"
#include "random.hpp"

namespace mobrate {

// ---------------------------------------------------------------- Kolmogorov-Smirnov

struct KSReport {
    std::size_t n = 0;
    double statistic = 0.0;
    double critical = 0.0;
    bool pass = false;
    std::string reference;
};

// Two-sided 5% critical values; exact table below 35 samples, 1.358/sqrt(n) from there on.
inline double ks_critical_value(std::size_t n) {
    static constexpr double table[35] = {0,     0.975, 0.842, 0.708, 0.624, 0.565, 0.521, 0.486, 0.457,
                                         0.432, 0.410, 0.391, 0.375, 0.361, 0.349, 0.338, 0.328, 0.318,
                                         0.309, 0.301, 0.294, 0.287, 0.281, 0.275, 0.269, 0.264, 0.259,
                                         0.254, 0.250, 0.246, 0.242, 0.238, 0.234, 0.231, 0.227};
    detail::require(n >= 1, "K-S critical value needs n >= 1");
    if (n < 35) return table[n];
    return 1.358 / std::sqrt(static_cast<double>(n));
}

inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

inline KSReport ks_test(std::span<const double> samples, const std::function<double(double)>& cdf,
                        std::string reference, std::size_t min_n = 20) {
    detail::require(!samples.empty(), "K-S test needs samples");
    detail::require(samples.size() >= min_n, "K-S test needs at least " + std::to_string(min_n) + " samples");
    KSReport r;
    r.n = samples.size();
    r.statistic = ks_statistic(std::vector<double>(samples.begin(), samples.end()), cdf);
    r.critical = ks_critical_value(r.n);
    r.pass = r.statistic < r.critical;
    r.reference = std::move(reference);
    return r;
}

inline KSReport ks_test_exp1(std::span<const double> samples) {
    return ks_test(samples, [](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x); }, "exp(1)");
}

inline KSReport ks_test_exponential(std::span<const double> samples, double rate) {
    return ks_test(samples, [rate](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-rate * x); },
                   "exp(" + std::to_string(rate) + ")");
}

// ---------------------------------------------------------------- summaries

struct Summary {
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0;
    double std_error = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

inline constexpr double z95 = 1.959963984540054;

inline Summary summarize(std::span<const double> xs) {
    Summary s;
    s.n = xs.size();
    if (xs.empty()) return s;
    // Two-pass in index order: the result depends only on the sequence, not on scheduling.
    s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.variance = ss / static_cast<double>(s.n - 1);
        s.std_error = std::sqrt(s.variance / static_cast<double>(s.n));
    }
    s.ci_low = s.mean - z95 * s.std_error;
    s.ci_high = s.mean + z95 * s.std_error;
    return s;
}

inline double mean_of(std::span<const double> xs) {
    return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Standard error of the overall mean from contiguous batch means (for correlated sequences).
inline double batch_means_se(std::span<const double> xs, std::size_t batches = 20) {
    detail::require(batches >= 2 && xs.size() >= batches, "batch means need at least two batches");
    const std::size_t per = xs.size() / batches;
    std::vector<double> means;
    for (std::size_t b = 0; b < batches; ++b) means.push_back(mean_of(xs.subspan(b * per, per)));
    return summarize(means).std_error;
}

struct Proportion {
    double estimate = 0.0;
    double low = 0.0;
    double high = 0.0;
};

inline Proportion wilson_interval(std::size_t k, std::size_t n, double z = z95) {
    detail::require(n > 0, "proportion needs n > 0");
    const double nn = static_cast<double>(n), p = static_cast<double>(k) / nn;
    const double den = 1.0 + z * z / nn;
    const double centre = (p + z * z / (2.0 * nn)) / den;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / den;
    return {p, std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct EcdfPoint {
    double x;
    double f;
};

inline std::vector<EcdfPoint> empirical_cdf(std::vector<double> xs, std::size_t max_points = 0) {
    std::sort(xs.begin(), xs.end());
    std::vector<EcdfPoint> out;
    const std::size_t n = xs.size();
    const std::size_t step = (max_points == 0 || n <= max_points) ? 1 : (n + max_points - 1) / max_points;
    for (std::size_t i = 0; i < n; i += step)
        out.push_back({xs[i], static_cast<double>(i + 1) / static_cast<double>(n)});
    if (n > 0 && (n - 1) % step != 0) out.push_back({xs.back(), 1.0});
    return out;
}

// ---------------------------------------------------------------- replication harness

inline std::uint64_t replication_seed(std::uint64_t master, std::size_t index) {
    return derive_seed(master, 0x7265706cULL, index);
}

struct ReplicationFailure {
    std::size_t index;
    std::string message;
};

template <class R>
struct ReplicationSet {
    std::vector<std::size_t> indices; // successful replications, ascending
    std::vector<R> values;
    std::vector<ReplicationFailure> failures;
};

inline unsigned worker_count_from_env(const char* var = "MOBRATE_WORKERS") {
    if (const char* s = std::getenv(var)) {
        char* end = nullptr;
        const long v = std::strtol(s, &end, 10);
        if (end != s && *end == '\0' && v > 0 && v <= 1024) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(seed, index) for each replication. Seeds depend only on (master, index), and results
// are stored by index, so the outcome does not depend on the number of workers.
template <class Fn>
auto run_replications(std::size_t reps, std::uint64_t master, Fn&& fn, unsigned workers = 1)
    -> ReplicationSet<std::invoke_result_t<Fn&, std::uint64_t, std::size_t>> {
    using R = std::invoke_result_t<Fn&, std::uint64_t, std::size_t>;
    std::vector<std::optional<R>> slots(reps);
    std::vector<std::string> errors(reps);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= reps) return;
            try {
                slots[i].emplace(fn(replication_seed(master, i), i));
            } catch (const std::exception& e) {
                errors[i] = e.what()[0] ? e.what() : "exception";
            } catch (...) {
                errors[i] = "unknown exception";
            }
        }
    };
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(reps, 1))));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    ReplicationSet<R> out;
    for (std::size_t i = 0; i < reps; ++i) {
        if (slots[i]) {
            out.indices.push_back(i);
            out.values.push_back(std::move(*slots[i]));
        } else {
            out.failures.push_back({i, errors[i]});
        }
    }
    return out;
}

} // namespace mobrate
