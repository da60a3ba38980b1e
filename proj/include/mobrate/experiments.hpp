#pragma once

// Monte Carlo studies shared by the command-line tool and the acceptance runner. Each routine is
// deterministic given its seed.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mobrate/apps.hpp"
#include "mobrate/geometry.hpp"
#include "mobrate/mginf.hpp"
#include "mobrate/sharedrate.hpp"
#include "mobrate/sharing.hpp"
#include "mobrate/sharing_sim.hpp"
#include "mobrate/stats.hpp"
#include "mobrate/trace.hpp"

namespace mobrate {

// One closed form against a Monte Carlo estimate.
struct Comparison {
    std::string name;
    double closed_form = 0.0;
    double estimate = 0.0;
    double std_error = 0.0;
    double z = 0.0;
    bool pass = false;
};

inline Comparison compare(std::string name, double closed_form, double estimate, double std_error,
                          double bands = 3.0) {
    Comparison c{std::move(name), closed_form, estimate, std_error, 0.0, false};
    c.z = std_error > 0.0 ? (estimate - closed_form) / std_error : (estimate == closed_form ? 0.0 : INFINITY);
    c.pass = std::abs(estimate - closed_form) <= bands * std_error;
    return c;
}

// ---------------------------------------------------------------- coverage renewal structure

struct RenewalStudy {
    std::vector<double> on_fraction; // per replication
    std::vector<double> on;          // complete on periods, pooled in replication order
    std::vector<double> off;
    std::vector<double> up_rate;     // up-crossings per second, per replication
};

inline RenewalStudy coverage_study(double lambda, double radius, double velocity, double duration, std::size_t reps,
                                   std::uint64_t seed, unsigned workers = 1) {
    struct One {
        double fraction, rate;
        std::vector<double> on, off;
    };
    const auto set = run_replications(
        reps, seed,
        [&](std::uint64_t s, std::size_t) {
            const auto tr = straight_trajectory(velocity, duration);
            const auto f = FieldSample::sample(lambda, 0.0, trajectory_window(tr, default_pad(lambda, radius)), s);
            const auto rec = extract_crossings(coverage_intervals(f, tr, radius), 0.0, duration, 0.0);
            return One{rec.on_time() / duration, rec.up_times().size() / duration, rec.on_durations(),
                       rec.off_durations()};
        },
        workers);
    if (!set.failures.empty()) throw std::runtime_error("coverage replication failed: " + set.failures[0].message);
    RenewalStudy out;
    for (const auto& o : set.values) {
        out.on_fraction.push_back(o.fraction);
        out.up_rate.push_back(o.rate);
        out.on.insert(out.on.end(), o.on.begin(), o.on.end());
        out.off.insert(out.off.end(), o.off.begin(), o.off.end());
    }
    return out;
}

// Off periods from independent runs, each extended until it holds at least min_samples.
inline std::vector<KSReport> off_period_ks_runs(double lambda, double radius, double velocity, std::size_t runs,
                                                std::size_t min_samples, std::uint64_t seed) {
    const auto p = MGInfParams::make(lambda, radius, velocity);
    const double rate = p.arrival_rate * std::exp(-p.load);
    const double T = 1.2 * static_cast<double>(min_samples) / rate;
    std::vector<KSReport> out;
    for (std::size_t run = 0; run < runs; ++run) {
        std::vector<double> off;
        for (std::uint64_t piece = 0; off.size() < min_samples; ++piece) {
            const auto tr = straight_trajectory(velocity, T);
            const auto f = FieldSample::sample(lambda, 0.0, trajectory_window(tr, default_pad(lambda, radius)),
                                               derive_seed(seed, run, piece));
            const auto x = extract_crossings(coverage_intervals(f, tr, radius), 0.0, T, 0.0).off_durations();
            off.insert(off.end(), x.begin(), x.end());
        }
        out.push_back(ks_test_exponential(off, p.arrival_rate));
    }
    return out;
}

// ---------------------------------------------------------------- handoff geometry

struct HandoffStudy {
    std::vector<double> maxima_rate; // interior maxima per second, per replication
    std::vector<double> edge_rate;   // cell-edge crossings per second
    std::size_t maxima = 0, visits = 0;
    double interior_fraction() const { return visits ? static_cast<double>(maxima) / visits : 0.0; }
};

inline HandoffStudy handoff_study(double lambda, double velocity, double duration, std::size_t reps,
                                  std::uint64_t seed) {
    HandoffStudy h;
    for (std::size_t i = 0; i < reps; ++i) {
        const auto tr = straight_trajectory(velocity, duration);
        const auto f = FieldSample::sample(lambda, 0.0, trajectory_window(tr, default_pad(lambda, 0.0)),
                                           replication_seed(seed, i));
        const auto mx = interior_maxima(f, tr);
        const auto ed = cell_edge_crossings(f, tr);
        h.maxima_rate.push_back(mx.size() / duration);
        h.edge_rate.push_back(ed.size() / duration);
        h.maxima += mx.size();
        h.visits += ed.size() + 1;
    }
    return h;
}

// ---------------------------------------------------------------- Johnson-Mehl handoffs

struct JmStudy {
    std::vector<double> rate;    // JM handoffs per second, per replication
    std::size_t runs_violating = 0; // runs with more served jumps of N than JM handoffs
    std::size_t served_jumps = 0, handoffs = 0;
};

inline JmStudy jm_study(double lambda, double radius, double velocity, double user_intensity, double duration,
                        std::size_t reps, std::uint64_t seed) {
    JmStudy s;
    for (std::size_t i = 0; i < reps; ++i) {
        const auto tr = straight_trajectory(velocity, duration);
        const auto f = FieldSample::sample(lambda, user_intensity,
                                           trajectory_window(tr, default_pad(lambda, radius)),
                                           replication_seed(seed, i));
        const auto jm = jm_edge_crossings(f, tr, radius);
        s.rate.push_back(jm.size() / duration);
        std::size_t jumps = 0;
        if (user_intensity > 0.0) {
            const auto n = sharing_trace(f, tr, radius);
            for (std::size_t k = 0; k < n.jumps(); ++k) {
                const unsigned before = k == 0 ? n.initial : n.values[k - 1];
                // Jumps into or out of service happen on coverage arcs, not at handoffs.
                if (before != 0 && n.values[k] != 0) ++jumps;
            }
        }
        s.runs_violating += jumps > jm.size();
        s.served_jumps += jumps;
        s.handoffs += jm.size();
    }
    return s;
}

// ---------------------------------------------------------------- level-crossing asymptotics

enum class Pipeline { snr, sinr };
enum class Normalization {
    theorem,     // V * f(r_gamma) (or g(r_gamma)), tested against exp(1)
    sample_mean, // V / mean(V): exponential shape only
};

struct AsymptoticSetup {
    NetworkModel model;
    Pipeline pipeline = Pipeline::snr;
    FadingModel fading;
    double dt = 0.01;
    bool suppress = false;       // drop up-crossings within 2 E[B] of the last kept one
    bool low_limit = false;      // rescale with g(r) instead of f(r)
    bool exact = false;          // exact coverage process instead of sampled traces (no fading/SINR only)
    double interference_radius = 0.0;
    std::size_t samples = 1000;
    double max_piece = 2.0e5;    // longest single trajectory, s
    std::size_t max_pieces = 400;
};

struct AsymptoticRow {
    double gamma = 0.0;
    double radius = 0.0;
    double rescale = 0.0;
    std::vector<double> scaled; // rescaled interarrivals as tested
    double mean = 0.0;          // mean of V * rescale
    KSReport ks;
    bool enough = false;
};

inline AsymptoticRow asymptotic_row(const AsymptoticSetup& a, double gamma, Normalization norm, std::uint64_t seed) {
    const auto& m = a.model;
    AsymptoticRow row;
    row.gamma = gamma;
    row.radius = coverage_radius(m, gamma);
    row.rescale = a.low_limit ? rescale_low_radius(m, row.radius) : rescale_high_radius(m, row.radius);
    const auto P = MGInfParams::make(m.node_intensity, row.radius, m.velocity);
    const double expected_rate = P.arrival_rate * std::exp(-P.load);
    const double piece = std::min(a.max_piece, 1.1 * static_cast<double>(a.samples + 1) / expected_rate);
    const double reach = row.radius * std::pow(a.fading.max_gain(), 1.0 / m.pathloss_exponent);
    const double R = a.pipeline == Pipeline::sinr
                         ? (a.interference_radius > 0.0 ? a.interference_radius
                                                        : default_interference_radius(m.node_intensity, row.radius))
                         : 0.0;
    const double pad = a.pipeline == Pipeline::sinr ? R + row.radius : default_pad(m.node_intensity, reach);
    const double dead = 2.0 * busy_mean(P);
    std::vector<double> v;
    for (std::size_t i = 0; v.size() < a.samples && i < a.max_pieces; ++i) {
        const auto tr = straight_trajectory(m.velocity, piece);
        const auto f = FieldSample::sample(m.node_intensity, 0.0, trajectory_window(tr, pad),
                                           derive_seed(seed, streams::nodes, i));
        CrossingRecord rec;
        if (a.exact) {
            rec = extract_crossings(coverage_intervals(f, tr, row.radius), 0.0, piece, gamma);
        } else if (a.pipeline == Pipeline::snr) {
            rec = sampled_snr_crossings(f, tr, m, gamma, a.dt, a.fading, derive_seed(seed, streams::fading, i));
        } else {
            rec = sampled_sinr_crossings(f, tr, m, gamma, a.dt, R);
        }
        if (a.suppress) rec = suppress_upcrossings(rec, dead);
        const auto x = rec.interarrivals();
        v.insert(v.end(), x.begin(), x.end());
    }
    if (v.size() > a.samples) v.resize(a.samples);
    row.enough = v.size() >= std::min<std::size_t>(a.samples, 20) && v.size() >= 20;
    if (v.empty()) return row;
    for (double& x : v) x *= row.rescale;
    row.mean = mean_of(v);
    row.scaled = v;
    if (norm == Normalization::sample_mean)
        for (double& x : row.scaled) x /= row.mean;
    if (row.scaled.size() >= 20) row.ks = ks_test_exp1(row.scaled);
    row.enough = row.enough && v.size() >= a.samples;
    return row;
}

struct AsymptoticSweep {
    std::vector<AsymptoticRow> rows; // ascending gamma
    // Smallest grid gamma from which every larger grid gamma passes; empty if the top row fails.
    std::optional<double> threshold;
};

inline std::optional<double> passing_threshold(const std::vector<AsymptoticRow>& rows) {
    std::optional<double> t;
    for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
        if (!(it->enough && it->ks.pass)) break;
        t = it->gamma;
    }
    return t;
}

inline AsymptoticSweep asymptotic_sweep(const AsymptoticSetup& a, std::vector<double> gammas, Normalization norm,
                                        std::uint64_t seed) {
    std::sort(gammas.begin(), gammas.end());
    AsymptoticSweep s;
    for (std::size_t i = 0; i < gammas.size(); ++i) s.rows.push_back(asymptotic_row(a, gammas[i], norm, derive_seed(seed, i)));
    s.threshold = passing_threshold(s.rows);
    return s;
}

// ---------------------------------------------------------------- download and fluid

inline std::vector<CrossingRecord> coverage_records(double lambda, double radius, double velocity, double duration,
                                                    std::size_t n, std::uint64_t seed) {
    std::vector<CrossingRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto tr = straight_trajectory(velocity, duration);
        const auto f = FieldSample::sample(lambda, 0.0, trajectory_window(tr, default_pad(lambda, radius)),
                                           replication_seed(seed, i));
        out.push_back(extract_crossings(coverage_intervals(f, tr, radius), 0.0, duration, 0.0));
    }
    return out;
}

inline std::vector<double> pooled_on_durations(const std::vector<CrossingRecord>& recs) {
    std::vector<double> b;
    for (const auto& r : recs) {
        const auto d = r.on_durations();
        b.insert(b.end(), d.begin(), d.end());
    }
    return b;
}

struct TransformPoint {
    double s = 0.0;
    double transform = 0.0, transform_se = 0.0;
    double simulated = 0.0, simulated_se = 0.0;
    bool pass = false; // within 2 combined standard errors
};

struct DownloadStudy {
    double delta = 0.0, kappa = 0.0;
    std::size_t downloads = 0;
    double mean_time = 0.0, mean_time_se = 0.0, mean_formula = 0.0;
    std::vector<TransformPoint> points;
};

// Busy periods from one set of runs feed the transform; downloads are simulated on independent runs.
inline DownloadStudy download_study(double lambda, double radius, double velocity, double delta, double kappa,
                                    std::span<const double> s_values, double duration, std::size_t runs,
                                    std::uint64_t seed, DownloadVariant variant = DownloadVariant::completion) {
    DownloadStudy d;
    d.delta = delta;
    d.kappa = kappa;
    const double idle_rate = 2.0 * lambda * velocity * radius;
    const auto busy = pooled_on_durations(coverage_records(lambda, radius, velocity, duration, runs, derive_seed(seed, 1)));
    const auto recs = coverage_records(lambda, radius, velocity, duration, runs, derive_seed(seed, 2));
    auto eng = make_engine(seed, streams::misc, 3);
    std::vector<double> T;
    for (const auto& rec : recs) {
        const auto x = simulate_downloads(rec, delta, kappa, eng);
        T.insert(T.end(), x.begin(), x.end());
    }
    d.downloads = T.size();
    if (T.size() < 2) return d;
    const auto sT = summarize(T);
    d.mean_time = sT.mean;
    d.mean_time_se = sT.std_error;
    d.mean_formula = download_mean(delta, kappa, idle_rate, empirical_laplace(busy, delta * kappa).value);
    for (double s : s_values) {
        const auto tr = download_laplace(s, delta, kappa, idle_rate, busy, variant);
        const auto mc = empirical_laplace(T, s);
        TransformPoint p{s, tr.value, tr.std_error, mc.value, mc.std_error, false};
        p.pass = std::abs(p.transform - p.simulated) <= 2.0 * std::hypot(p.transform_se, p.simulated_se);
        d.points.push_back(p);
    }
    return d;
}

struct FluidStudy {
    double sigma = 0.0;
    std::size_t busy_periods = 0;
    std::vector<TransformPoint> points;
    bool converged = true;
};

inline FluidStudy fluid_study(double lambda, double radius, double velocity, double kappa, double eta,
                              std::span<const double> s_values, double duration, std::size_t runs,
                              std::uint64_t seed) {
    FluidStudy out;
    out.sigma = kappa / eta;
    const double idle_rate = 2.0 * lambda * velocity * radius;
    const auto busy = pooled_on_durations(coverage_records(lambda, radius, velocity, duration, runs, derive_seed(seed, 1)));
    std::vector<double> bf;
    for (const auto& rec : coverage_records(lambda, radius, velocity, duration, 2 * runs, derive_seed(seed, 2))) {
        const auto x = fluid_busy_periods(rec, kappa, eta);
        bf.insert(bf.end(), x.begin(), x.end());
    }
    out.busy_periods = bf.size();
    constexpr std::size_t B = 10;
    const std::size_t per = busy.size() / B;
    for (double s : s_values) {
        auto lb = [&](double z) { return empirical_laplace(busy, z).value; };
        const auto fp = fluid_busy_laplace(s, out.sigma, idle_rate, lb);
        out.converged = out.converged && fp.converged;
        // Standard error of the fixed point from its spread over disjoint batches of on periods.
        std::vector<double> parts;
        for (std::size_t b = 0; b < B && per > 0; ++b) {
            std::span<const double> sub(busy.data() + b * per, per);
            parts.push_back(
                fluid_busy_laplace(s, out.sigma, idle_rate, [&](double z) { return empirical_laplace(sub, z).value; })
                    .value);
        }
        const double se = parts.size() > 1 ? summarize(parts).std_error / std::sqrt(static_cast<double>(B)) : 0.0;
        const auto mc = empirical_laplace(bf, s);
        TransformPoint p{s, fp.value, se, mc.value, mc.std_error, false};
        p.pass = fp.converged && std::abs(p.transform - p.simulated) <= 2.0 * std::hypot(p.transform_se, p.simulated_se);
        out.points.push_back(p);
    }
    return out;
}

// ---------------------------------------------------------------- heterogeneous network

struct HetNetStudy {
    HetNetOnStats closed;
    Comparison p_on, mean_on, mean_off;
};

inline HetNetStudy hetnet_study(const HetNetModel& h, double gamma, double duration, std::size_t reps,
                                std::uint64_t seed) {
    HetNetStudy out;
    out.closed = hetnet_on_stats(h, gamma);
    std::vector<double> frac, on, off;
    const double r = h.macro_radius(gamma), rh = h.micro_radius(gamma);
    for (std::size_t i = 0; i < reps; ++i) {
        const auto tr = straight_trajectory(h.velocity, duration);
        const auto w = trajectory_window(tr, default_pad(h.macro_intensity, std::max(r, rh)));
        const auto macro = FieldSample::sample(h.macro_intensity, 0.0, w, derive_seed(seed, streams::nodes, i));
        const auto micro = FieldSample::sample(h.micro_intensity, 0.0, w, derive_seed(seed, streams::misc, i));
        const auto set = hetnet_coverage_intervals(macro, micro, tr, r, rh);
        const auto rec = extract_crossings(set, 0.0, duration, gamma);
        frac.push_back(rec.on_time() / duration);
        const auto a = rec.on_durations(), b = rec.off_durations();
        on.insert(on.end(), a.begin(), a.end());
        off.insert(off.end(), b.begin(), b.end());
    }
    const auto sf = summarize(frac), so = summarize(on), sx = summarize(off);
    out.p_on = compare("hetnet P(on)", out.closed.p_on, sf.mean, sf.std_error);
    out.mean_on = compare("hetnet E[on]", out.closed.mean_on, so.mean, so.std_error);
    out.mean_off = compare("hetnet E[off]", out.closed.mean_off, sx.mean, sx.std_error);
    return out;
}

} // namespace mobrate
