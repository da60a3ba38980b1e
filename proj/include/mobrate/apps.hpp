#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "geometry.hpp"
#include "intervals.hpp"
#include "mginf.hpp"
#include "model.hpp"
#include "quadrature.hpp"
#include "random.hpp"
#include "sharing.hpp"
#include "stats.hpp"
#include "trace.hpp"

namespace mobrate {

// ---------------------------------------------------------------- Johnson-Mehl area lookup

// lambda E[J](lambda, r) depends on rho = lambda pi r^2 only. The optimizers below evaluate it
// thousands of times, so it is tabulated once as log(E[J] / (pi r^2)) against log rho.
class JmAreaTable {
public:
    static constexpr double log_rho_min = -14.0;
    static constexpr double log_rho_max = 4.5;
    static constexpr double step = 0.1;

    static const JmAreaTable& instance() {
        static const JmAreaTable table;
        return table;
    }

    // E[J] / (pi r^2) at load rho; direct quadrature outside the tabulated range.
    double fraction(double rho) const {
        const double lr = std::log(rho);
        if (lr < log_rho_min || lr > log_rho_max) return direct_fraction(rho);
        return std::exp(spline_(lr));
    }

    static double direct_fraction(double rho) {
        // lambda = 1/pi gives r = sqrt(rho).
        const double r = std::sqrt(rho);
        return expected_jm_area(1.0 / std::numbers::pi, r, {1e-7}).value / (std::numbers::pi * r * r);
    }

private:
    using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;

    JmAreaTable() : spline_(make()) {}

    static Spline make() {
        std::vector<double> v;
        const int n = static_cast<int>(std::lround((log_rho_max - log_rho_min) / step)) + 1;
        for (int i = 0; i < n; ++i) v.push_back(std::log(direct_fraction(std::exp(log_rho_min + i * step))));
        return Spline(v.begin(), v.end(), log_rho_min, step);
    }

    Spline spline_;
};

inline double jm_area_fast(double lambda, double r) {
    return std::numbers::pi * r * r * JmAreaTable::instance().fraction(disc_load(lambda, r));
}

// ---------------------------------------------------------------- streaming load factor

// Playback rate eta plus the network; a and xi are model.bandwidth_const and model.user_intensity.
struct StreamingConfig {
    NetworkModel model;
    double playback_rate = 1.0;

    void validate() const {
        model.validate();
        detail::require(detail::finite_positive(playback_rate), "playback rate must be > 0");
    }
};

// E[1/(N_p + 1)] with N_p Poisson(xi E[J]).
inline double streaming_harmonic_mean(const NetworkModel& m, double radius, bool exact = false) {
    if (m.user_intensity == 0.0) return 1.0;
    const double area = exact ? expected_jm_area(m.node_intensity, radius).value : jm_area_fast(m.node_intensity, radius);
    return poisson_harmonic_mean(m.user_intensity * area);
}

// Constant-rate load factor: a log(1 + gamma) P(on) E[1/(N_p + 1)] / eta.
inline double load_factor(double gamma, const StreamingConfig& cfg, bool exact = false) {
    detail::require(detail::finite_positive(gamma), "gamma must be > 0");
    const auto& m = cfg.model;
    const double r = coverage_radius(m, gamma);
    const double on = -std::expm1(-disc_load(m.node_intensity, r));
    return m.bandwidth_const * std::log1p(gamma) * on * streaming_harmonic_mean(m, r, exact) / cfg.playback_rate;
}

// Ergodic-rate variant: P(on) E[R | SNR > gamma] E[1/(N_p + 1)] / eta.
inline double load_factor_ergodic(double gamma, const StreamingConfig& cfg, bool exact = false) {
    detail::require(detail::finite_positive(gamma), "gamma must be > 0");
    const auto& m = cfg.model;
    const double r = coverage_radius(m, gamma);
    const double lp = std::numbers::pi * m.node_intensity;
    // P(on) E[R | on] = integral of R(x) over the nearest-distance density on (0, r).
    const auto q = integrate(
        [&](double x) { return m.bandwidth_const * std::log1p(snr_value(m, x, 1.0)) * 2 * lp * x * std::exp(-lp * x * x); },
        0.0, r, 1e-10);
    return q.value * streaming_harmonic_mean(m, r, exact) / cfg.playback_rate;
}

// ---------------------------------------------------------------- maximizing over gamma

struct GammaStar {
    double gamma = 0.0;
    double rho = 0.0;
    std::vector<double> starts; // optimum found from each start
    double spread = 0.0;        // max relative deviation of the starts from gamma
    bool unimodal = true;       // single strict local maximum on the check grid
    double grid_max = 0.0;      // best value on the check grid
};

namespace detail {
template <class F>
double golden_max(F&& f, double a, double b, double tol = 1e-11) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol * std::max(1.0, std::abs(a) + std::abs(b))) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}
} // namespace detail

// Maximizes rho over log gamma in [log_lo, log_hi].
inline GammaStar find_gamma_star(const std::function<double(double)>& rho, double log_lo, double log_hi,
                                 std::size_t check_points = 1000) {
    detail::require(log_hi > log_lo, "empty gamma range");
    auto f = [&](double u) { return rho(std::exp(u)); };
    GammaStar out;
    // Shape check on a fine grid.
    std::vector<double> vals(check_points);
    for (std::size_t i = 0; i < check_points; ++i)
        vals[i] = f(log_lo + (log_hi - log_lo) * static_cast<double>(i) / static_cast<double>(check_points - 1));
    out.grid_max = *std::max_element(vals.begin(), vals.end());
    std::size_t peaks = 0;
    for (std::size_t i = 1; i + 1 < check_points; ++i) {
        const double tol = 1e-12 * std::abs(vals[i]);
        if (vals[i] > vals[i - 1] + tol && vals[i] > vals[i + 1] + tol) ++peaks;
    }
    out.unimodal = peaks <= 1;
    // Independent starts: coarse grids of different sizes each bracket their own argmax.
    for (std::size_t n : {41u, 59u, 83u, 127u, 173u}) {
        const double h = (log_hi - log_lo) / static_cast<double>(n - 1);
        std::size_t best = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double v = f(log_lo + h * static_cast<double>(i));
            if (v > best_v) {
                best_v = v;
                best = i;
            }
        }
        const double a = log_lo + h * static_cast<double>(best == 0 ? 0 : best - 1);
        const double b = log_lo + h * static_cast<double>(std::min(best + 1, n - 1));
        out.starts.push_back(std::exp(detail::golden_max(f, a, b)));
    }
    out.gamma = out.starts.front();
    out.rho = rho(out.gamma);
    for (double g : out.starts) {
        if (const double v = rho(g); v > out.rho) {
            out.rho = v;
            out.gamma = g;
        }
    }
    for (double g : out.starts) out.spread = std::max(out.spread, std::abs(g / out.gamma - 1.0));
    return out;
}

// Search range: coverage radius between 1e-3 and 5 typical inter-node distances (lambda pi r^2
// up to 79; the load factor has long decayed by then).
inline std::pair<double, double> gamma_search_range(const NetworkModel& m) {
    const double d = 1.0 / std::sqrt(m.node_intensity);
    return {std::log(gamma_for_radius(m, 5.0 * d)), std::log(gamma_for_radius(m, 1e-3 * d))};
}

inline GammaStar find_gamma_star(const StreamingConfig& cfg, std::size_t check_points = 1000) {
    cfg.validate();
    const auto [lo, hi] = gamma_search_range(cfg.model);
    return find_gamma_star([&](double g) { return load_factor(g, cfg); }, lo, hi, check_points);
}

// ---------------------------------------------------------------- rho(gamma*) = 1 level sets

struct LevelPoint {
    double user_intensity = 0.0;
    double intensity = 0.0; // solved base-station intensity
    double rho = 0.0;
    bool found = false;
};

// Bisection on log intensity for a rho* that increases with intensity.
inline LevelPoint solve_rho_one(const std::function<double(double)>& rho_star, double lo, double hi,
                                double tol = 1e-4) {
    LevelPoint p;
    double flo = rho_star(lo) - 1.0, fhi = rho_star(hi) - 1.0;
    if (flo > 0.0 || fhi < 0.0) return p;
    double a = std::log(lo), b = std::log(hi);
    for (int it = 0; it < 200; ++it) {
        const double c = 0.5 * (a + b);
        const double fc = rho_star(std::exp(c)) - 1.0;
        p.intensity = std::exp(c);
        p.rho = fc + 1.0;
        if (std::abs(fc) <= tol) {
            p.found = true;
            return p;
        }
        (fc < 0.0 ? a : b) = c;
    }
    return p;
}

// For each user intensity, the node intensity at which the best load factor equals 1.
inline std::vector<LevelPoint> level_set_rho1(const StreamingConfig& base, std::span<const double> user_intensities,
                                              double intensity_lo, double intensity_hi) {
    std::vector<LevelPoint> out;
    for (double xi : user_intensities) {
        auto rho_star = [&](double lambda) {
            StreamingConfig c = base;
            c.model.node_intensity = lambda;
            c.model.user_intensity = xi;
            return find_gamma_star(c, 200).rho;
        };
        auto p = solve_rho_one(rho_star, intensity_lo, intensity_hi);
        p.user_intensity = xi;
        out.push_back(p);
    }
    return out;
}

// ---------------------------------------------------------------- fluid busy period

struct FixedPoint {
    double value = 1.0;
    int iterations = 0;
    bool converged = false;
    bool monotone = true; // iterates moved in one direction throughout
    bool damped = false;
};

// L_Bf(s) = L_B(s sigma + idle_rate (sigma - 1)(1 - L_Bf(s))), iterated from L_B(s sigma).
template <class LB>
FixedPoint fluid_busy_laplace(double s, double sigma, double idle_rate, LB&& laplace_busy, double tol = 1e-10,
                              int max_iter = 10000) {
    detail::require(s >= 0.0, "s must be >= 0");
    detail::require(sigma > 1.0, "sigma must be > 1");
    detail::require(detail::finite_positive(idle_rate), "idle rate must be > 0");
    FixedPoint fp;
    double x = laplace_busy(s * sigma);
    double prev_step = 0.0, w = 1.0;
    for (int it = 1; it <= max_iter; ++it) {
        const double next = laplace_busy(s * sigma + idle_rate * (sigma - 1.0) * (1.0 - x));
        double step = next - x;
        if (prev_step != 0.0 && step * prev_step < 0.0) {
            fp.monotone = false;
            if (!fp.damped) {
                fp.damped = true;
                w = 0.5;
            }
        }
        x += w * step;
        fp.iterations = it;
        if (std::abs(step) <= tol) {
            fp.converged = true;
            break;
        }
        prev_step = step;
    }
    fp.value = x;
    return fp;
}

// Busy periods of a fluid queue filled at kappa while the source is on and drained at eta.
// Only busy periods that start at an up-crossing and end inside the horizon are returned.
inline std::vector<double> fluid_busy_periods(const CrossingRecord& rec, double kappa, double eta) {
    detail::require(kappa > eta && eta > 0.0, "need kappa > eta > 0");
    std::vector<double> out;
    const auto& up = rec.up_times();
    const auto& down = rec.down_times();
    const std::size_t shift = rec.initial_on() ? 1 : 0; // down[k + shift] closes up[k]
    double content = 0.0, started = 0.0;
    bool busy = false;
    for (std::size_t k = 0; k < up.size(); ++k) {
        if (k + shift >= down.size()) break;
        const double on_end = down[k + shift];
        if (!busy) {
            busy = true;
            started = up[k];
            content = 0.0;
        }
        content += (kappa - eta) * (on_end - up[k]);
        // Drain over the following off period.
        const double off_end = k + 1 < up.size() ? up[k + 1] : rec.t_end();
        if (content <= eta * (off_end - on_end)) {
            if (k + 1 < up.size() || on_end + content / eta <= rec.t_end()) out.push_back(on_end + content / eta - started);
            busy = false;
        } else {
            content -= eta * (off_end - on_end);
        }
    }
    return out;
}

// ---------------------------------------------------------------- download time

enum class DownloadVariant {
    completion, // last on period counted up to the completion instant
    as_printed  // last on period counted in full
};

struct DownloadTransform {
    double alpha = 0.0; // P(file outlasts an on period) = L_B(delta kappa)
    double lx = 0.0;
    double ly = 0.0;
    double value = 1.0;
    double std_error = 0.0;
};

// Transform of the download time from on-period samples (exact on-durations).
inline DownloadTransform download_laplace(double s, double delta, double kappa, double idle_rate,
                                          std::span<const double> busy, DownloadVariant v = DownloadVariant::completion) {
    detail::require(s >= 0.0, "s must be >= 0");
    detail::require(detail::finite_positive(delta) && detail::finite_positive(kappa), "delta, kappa must be > 0");
    detail::require(detail::finite_positive(idle_rate), "idle rate must be > 0");
    detail::require(busy.size() >= 2, "need on-period samples");
    const double dk = delta * kappa;
    const auto a = empirical_laplace(busy, dk);
    const auto l = empirical_laplace(busy, s + dk);
    const double q = idle_rate / (idle_rate + s);
    const double c = v == DownloadVariant::completion ? dk / (s + dk) : 1.0;
    DownloadTransform out;
    out.alpha = a.value;
    out.lx = l.value / a.value;
    out.ly = c * (1.0 - l.value) / (1.0 - a.value);
    const double den = 1.0 - l.value * q;
    detail::require(den > 1e-12, "download transform denominator vanishes");
    out.value = c * (1.0 - l.value) / den;
    out.std_error = std::abs(c * (q - 1.0) / (den * den)) * l.std_error;
    return out;
}

// Mean download time under the completion variant.
inline double download_mean(double delta, double kappa, double idle_rate, double alpha) {
    return 1.0 / (delta * kappa) + alpha / ((1.0 - alpha) * idle_rate);
}

// Elapsed time from an on-period start until `work` seconds of on-time have accumulated;
// nullopt if the record ends first.
inline std::optional<double> download_time(const CrossingRecord& rec, std::size_t start_up, double work) {
    const auto& up = rec.up_times();
    const auto& down = rec.down_times();
    const std::size_t shift = rec.initial_on() ? 1 : 0;
    detail::require(start_up < up.size(), "start is not an up-crossing of the record");
    for (std::size_t k = start_up; k < up.size(); ++k) {
        const double end = k + shift < down.size() ? down[k + shift] : rec.t_end();
        const double len = end - up[k];
        if (len >= work) {
            if (k + shift >= down.size() && up[k] + work > rec.t_end()) return std::nullopt;
            return up[k] + work - up[start_up];
        }
        work -= len;
    }
    return std::nullopt;
}

// Back-to-back downloads along one record: each starts at the first on-period start after the
// previous one completes, with a fresh Exp(delta) file. Samples are independent by renewal.
inline std::vector<double> simulate_downloads(const CrossingRecord& rec, double delta, double kappa, Engine& eng) {
    std::exponential_distribution<double> file(delta);
    std::vector<double> out;
    const auto& up = rec.up_times();
    std::size_t k = 0;
    while (k < up.size()) {
        const auto t = download_time(rec, k, file(eng) / kappa);
        if (!t) break;
        out.push_back(*t);
        const double done = up[k] + *t;
        k = static_cast<std::size_t>(std::upper_bound(up.begin(), up.end(), done) - up.begin());
    }
    return out;
}

// One download on a fresh network (nodes of intensity lambda, coverage radius r), starting at
// the first on-period start; the trajectory is extended until the download completes.
inline double simulate_download(double lambda, double radius, double velocity, double delta, double kappa,
                                std::uint64_t seed) {
    auto eng = make_engine(seed, streams::misc, 0);
    std::exponential_distribution<double> file(delta);
    const double work = file(eng) / kappa;
    const double idle_mean = 1.0 / (2.0 * lambda * velocity * radius);
    double horizon = 4.0 * (work + idle_mean) + 10.0 * idle_mean;
    for (std::uint64_t attempt = 0;; ++attempt) {
        const auto tr = straight_trajectory(velocity, horizon);
        const auto f = FieldSample::sample(lambda, 0.0, trajectory_window(tr, default_pad(lambda, radius)),
                                           derive_seed(seed, streams::nodes, attempt));
        const auto rec = extract_crossings(coverage_intervals(f, tr, radius), 0.0, tr.duration, 0.0);
        if (!rec.up_times().empty())
            if (const auto t = download_time(rec, 0, work)) return *t;
        horizon *= 2.0;
    }
}

// ---------------------------------------------------------------- heterogeneous networks

struct HetNetModel {
    double macro_intensity = 0.0;
    double macro_power = 1.0;
    double micro_intensity = 0.0;
    double micro_power = 1.0;
    double noise_power = 1.0;
    double pathloss_exponent = 4.0;
    double velocity = 1.0;

    void validate() const {
        using detail::finite_positive;
        detail::require(finite_positive(macro_intensity), "macro intensity must be > 0");
        detail::require(std::isfinite(micro_intensity) && micro_intensity >= 0.0, "micro intensity must be >= 0");
        detail::require(finite_positive(macro_power) && finite_positive(micro_power), "powers must be > 0");
        detail::require(finite_positive(noise_power), "noise power must be > 0");
        detail::require(finite_positive(pathloss_exponent) && pathloss_exponent > 2.0, "beta must be > 2");
        detail::require(finite_positive(velocity), "velocity must be > 0");
    }
    double macro_radius(double gamma) const {
        return std::pow(macro_power / (noise_power * gamma), 1.0 / pathloss_exponent);
    }
    double micro_radius(double gamma) const {
        return std::pow(micro_power / (noise_power * gamma), 1.0 / pathloss_exponent);
    }
    NetworkModel macro_model(double user_intensity = 0.0, double bandwidth_const = 1.0) const {
        NetworkModel m;
        m.node_intensity = macro_intensity;
        m.user_intensity = user_intensity;
        m.tx_power = macro_power;
        m.noise_power = noise_power;
        m.pathloss_exponent = pathloss_exponent;
        m.velocity = velocity;
        m.bandwidth_const = bandwidth_const;
        return m;
    }
};

struct HetNetOnStats {
    double p_on = 0.0;
    double mean_on = 0.0;
    double mean_off = 0.0;
};

inline HetNetOnStats hetnet_on_stats(const HetNetModel& h, double gamma) {
    h.validate();
    detail::require(detail::finite_positive(gamma), "gamma must be > 0");
    const double r = h.macro_radius(gamma), rh = h.micro_radius(gamma);
    const double load = std::numbers::pi * (h.macro_intensity * r * r + h.micro_intensity * rh * rh);
    const double rate = 2.0 * h.velocity * (h.macro_intensity * r + h.micro_intensity * rh);
    return {-std::expm1(-load), std::expm1(load) / rate, 1.0 / rate};
}

// Times covered by a macro disc of radius r or a micro disc of radius r_micro.
inline IntervalSet hetnet_coverage_intervals(const FieldSample& macro, const FieldSample& micro, const Trajectory& tr,
                                             double r, double r_micro) {
    auto a = coverage_intervals(macro, tr, r);
    if (micro.nodes().empty()) return a;
    return a.united(coverage_intervals(micro, tr, r_micro), 0.0, tr.duration);
}

struct HetNetLoad {
    double value = 0.0;
    double p_micro = 0.0; // served by a micro node (G)
    double p_macro = 0.0; // served by a macro node (H)
    double harmonic_micro = 1.0;
    double harmonic_macro = 1.0;
};

// Micro nodes are preferred. A macro cell keeps the users outside micro coverage, a share
// exp(-lambda_micro pi r_micro^2) of its mean area.
inline HetNetLoad hetnet_load_factor(double gamma, const HetNetModel& h, double user_intensity, double bandwidth_const,
                                     double playback_rate, bool exact = false) {
    h.validate();
    detail::require(detail::finite_positive(gamma), "gamma must be > 0");
    detail::require(user_intensity >= 0.0, "user intensity must be >= 0");
    detail::require(detail::finite_positive(playback_rate), "playback rate must be > 0");
    const double r = h.macro_radius(gamma), rh = h.micro_radius(gamma);
    auto area = [&](double lambda, double radius) {
        return exact ? expected_jm_area(lambda, radius).value : jm_area_fast(lambda, radius);
    };
    HetNetLoad out;
    const double micro_load = disc_load(h.micro_intensity, rh);
    out.p_micro = -std::expm1(-micro_load);
    out.p_macro = std::exp(-micro_load) * -std::expm1(-disc_load(h.macro_intensity, r));
    if (user_intensity > 0.0) {
        if (h.micro_intensity > 0.0)
            out.harmonic_micro = poisson_harmonic_mean(user_intensity * area(h.micro_intensity, rh));
        out.harmonic_macro =
            poisson_harmonic_mean(user_intensity * area(h.macro_intensity, r) * std::exp(-micro_load));
    }
    out.value = bandwidth_const * std::log1p(gamma) *
                (out.p_micro * out.harmonic_micro + out.p_macro * out.harmonic_macro) / playback_rate;
    return out;
}

inline GammaStar hetnet_gamma_star(const HetNetModel& h, double user_intensity, double bandwidth_const,
                                   double playback_rate, std::size_t check_points = 1000) {
    const auto [lo, hi] = gamma_search_range(h.macro_model());
    return find_gamma_star(
        [&](double g) { return hetnet_load_factor(g, h, user_intensity, bandwidth_const, playback_rate).value; }, lo,
        hi, check_points);
}

} // namespace mobrate
