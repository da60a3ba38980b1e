#pragma once

// Flat "key = value" scenario files with dotted keys, typed experiment settings, named presets.
//
//   # comment
//   model.node_disc_radius = 200      # lambda = 1 / (pi 200^2)
//   threshold.gamma = 0dB, 10dB, 1e3  # dB values need the suffix; bare numbers are linear
//
// Unknown keys and duplicate keys are errors.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mobrate/apps.hpp"
#include "mobrate/model.hpp"
#include "mobrate/trace.hpp"

namespace mobrate {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_number(std::string_view s, const std::string& key) {
    s = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
        throw ConfigError(key + ": not a number: '" + std::string(s) + "'");
    return v;
}

// "12dB", "12 dB", "-3.5db" are decibels; anything else must be a plain number.
inline double parse_ratio(std::string_view s, const std::string& key) {
    s = trim(s);
    if (s.size() > 2) {
        const auto tail = s.substr(s.size() - 2);
        if ((tail[0] == 'd' || tail[0] == 'D') && (tail[1] == 'b' || tail[1] == 'B'))
            return db_to_linear(parse_number(s.substr(0, s.size() - 2), key));
    }
    return parse_number(s, key);
}

inline std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    while (true) {
        const auto c = s.find(',');
        out.push_back(trim(s.substr(0, c)));
        if (c == std::string_view::npos) break;
        s.remove_prefix(c + 1);
    }
    return out;
}

} // namespace detail

class KeyValueConfig {
public:
    static KeyValueConfig parse(std::string_view text, const std::string& origin = "<config>") {
        KeyValueConfig c;
        std::size_t line_no = 0;
        while (!text.empty()) {
            const auto nl = text.find('\n');
            std::string_view line = text.substr(0, nl);
            text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
            ++line_no;
            if (const auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
            line = detail::trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            const auto where = origin + ":" + std::to_string(line_no);
            if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
            const std::string key(detail::trim(line.substr(0, eq)));
            const std::string value(detail::trim(line.substr(eq + 1)));
            if (key.empty() || value.empty()) throw ConfigError(where + ": empty key or value");
            if (c.values_.count(key)) throw ConfigError(where + ": duplicate key " + key);
            c.values_[key] = value;
        }
        return c;
    }

    static KeyValueConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read config file " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path);
    }

    // Keys in `over` replace ours.
    void merge(const KeyValueConfig& over) {
        for (const auto& [k, v] : over.values_) values_[k] = v;
    }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    void erase(const std::string& key) { values_.erase(key); }

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    const std::map<std::string, std::string>& entries() const { return values_; }

    std::string text(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }
    double number(const std::string& key, double fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : detail::parse_number(it->second, key);
    }
    double number(const std::string& key) const {
        if (!has(key)) throw ConfigError("missing required key " + key);
        return number(key, 0.0);
    }
    double ratio(const std::string& key, double fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : detail::parse_ratio(it->second, key);
    }
    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        const auto s = detail::trim(it->second);
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size())
            throw ConfigError(key + ": not a non-negative integer: '" + std::string(s) + "'");
        return v;
    }
    std::vector<double> numbers(const std::string& key, bool ratios = false) const {
        std::vector<double> out;
        const auto it = values_.find(key);
        if (it == values_.end()) return out;
        for (auto part : detail::split_list(it->second))
            out.push_back(ratios ? detail::parse_ratio(part, key) : detail::parse_number(part, key));
        return out;
    }

    std::string dump() const {
        std::string s;
        for (const auto& [k, v] : values_) s += k + " = " + v + "\n";
        return s;
    }

private:
    std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------- schema

inline const std::vector<std::string>& known_config_keys() {
    static const std::vector<std::string> keys{
        "scenario",
        "model.node_intensity", "model.node_disc_radius", "model.user_intensity", "model.tx_power",
        "model.noise_power", "model.pathloss_exponent", "model.velocity", "model.bandwidth_const",
        "noise.edge_quantile", "noise.snr_edge",
        "threshold.gamma", "threshold.radius",
        "trajectory.duration", "trajectory.dt",
        "fading.kind", "fading.variance", "fading.coherence_time",
        "sinr.interference_radius",
        "run.reps", "run.seed", "run.samples",
        "streaming.playback_rate", "streaming.user_intensities",
        "download.delta", "download.kappa", "download.variant", "download.s",
        "fluid.kappa", "fluid.eta", "fluid.s",
        "cox.line_intensity", "cox.user_line_intensity",
        "hetnet.micro_intensity", "hetnet.micro_power",
        "sweep.fading_variances", "sweep.pathloss_exponents",
    };
    return keys;
}

struct ExperimentConfig {
    std::string scenario = "custom";
    NetworkModel model;
    std::optional<NoiseCalibration> calibration;
    std::vector<double> gammas{1.0}; // linear

    double duration = 2.0e4;
    double dt = 0.01;
    FadingModel fading;
    double interference_radius = 0.0; // 0: default_interference_radius

    std::size_t reps = 20;
    std::uint64_t seed = 1;
    std::size_t samples = 1000000;

    double playback_rate = 1.0;
    std::vector<double> user_intensities;

    double download_delta = 0.02;
    double download_kappa = 1.0;
    DownloadVariant download_variant = DownloadVariant::completion;
    std::vector<double> laplace_s{0.01, 0.05, 0.1};

    double fluid_kappa = 2.0;
    double fluid_eta = 1.0;

    double line_intensity = 0.0;
    double user_line_intensity = 0.0;

    double micro_intensity = 0.0;
    double micro_power = 1.0;

    std::vector<double> fading_variances;
    std::vector<double> pathloss_exponents;

    double gamma() const { return gammas.front(); }
    double radius() const { return coverage_radius(model, gamma()); }

    // Noise recalibrated for another path-loss exponent when a calibration is in force.
    NetworkModel model_with_beta(double beta) const {
        NetworkModel m = model;
        m.pathloss_exponent = beta;
        if (calibration) calibration->apply(m);
        return m;
    }

    HetNetModel hetnet() const {
        HetNetModel h;
        h.macro_intensity = model.node_intensity;
        h.macro_power = model.tx_power;
        h.micro_intensity = micro_intensity;
        h.micro_power = micro_power;
        h.noise_power = model.noise_power;
        h.pathloss_exponent = model.pathloss_exponent;
        h.velocity = model.velocity;
        return h;
    }

    StreamingConfig streaming() const { return {model, playback_rate}; }
};

inline ExperimentConfig build_experiment(const KeyValueConfig& kv) {
    const auto& known = known_config_keys();
    for (const auto& [k, v] : kv.entries())
        if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("unknown key " + k);

    ExperimentConfig c;
    c.scenario = kv.text("scenario", "custom");
    auto& m = c.model;
    if (kv.has("model.node_intensity") && kv.has("model.node_disc_radius"))
        throw ConfigError("give model.node_intensity or model.node_disc_radius, not both");
    if (kv.has("model.node_disc_radius")) {
        const double R = kv.number("model.node_disc_radius");
        if (!(R > 0.0)) throw ConfigError("model.node_disc_radius must be > 0");
        m.node_intensity = 1.0 / (std::numbers::pi * R * R);
    } else {
        m.node_intensity = kv.number("model.node_intensity");
    }
    m.user_intensity = kv.number("model.user_intensity", 0.0);
    m.tx_power = kv.number("model.tx_power", 1.0);
    m.pathloss_exponent = kv.number("model.pathloss_exponent", 4.0);
    m.velocity = kv.number("model.velocity", 16.0);
    m.bandwidth_const = kv.number("model.bandwidth_const", 1.0);

    const bool calibrated = kv.has("noise.snr_edge");
    if (calibrated == kv.has("model.noise_power"))
        throw ConfigError("give exactly one of model.noise_power and noise.snr_edge");
    if (calibrated) {
        NoiseCalibration cal;
        cal.edge_quantile = kv.number("noise.edge_quantile", 0.9);
        cal.snr_edge = kv.ratio("noise.snr_edge", 1.0);
        try {
            cal.apply(m);
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("noise calibration: ") + e.what());
        }
        c.calibration = cal;
    } else {
        if (kv.has("noise.edge_quantile")) throw ConfigError("noise.edge_quantile needs noise.snr_edge");
        m.noise_power = kv.number("model.noise_power");
    }
    try {
        m.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }

    if (kv.has("threshold.gamma") && kv.has("threshold.radius"))
        throw ConfigError("give threshold.gamma or threshold.radius, not both");
    if (kv.has("threshold.radius")) {
        c.gammas.clear();
        for (double r : kv.numbers("threshold.radius")) {
            if (!(r > 0.0)) throw ConfigError("threshold.radius must be > 0");
            c.gammas.push_back(gamma_for_radius(m, r));
        }
    } else if (kv.has("threshold.gamma")) {
        c.gammas = kv.numbers("threshold.gamma", true);
    }
    for (double g : c.gammas)
        if (!(g > 0.0)) throw ConfigError("threshold.gamma must be > 0");

    c.duration = kv.number("trajectory.duration", c.duration);
    c.dt = kv.number("trajectory.dt", c.dt);
    if (!(c.duration > 0.0)) throw ConfigError("trajectory.duration must be > 0");
    if (!(c.dt > 0.0) || c.dt > c.duration) throw ConfigError("trajectory.dt must be in (0, duration]");

    const auto kind = kv.text("fading.kind", "none");
    const double tc = kv.number("fading.coherence_time", 0.007);
    try {
        if (kind == "none") {
            if (kv.has("fading.variance")) throw ConfigError("fading.variance needs fading.kind = hyperexp");
        } else if (kind == "rayleigh") {
            c.fading = FadingModel::rayleigh(tc);
        } else if (kind == "hyperexp") {
            c.fading = FadingModel::hyperexp_with_variance(kv.number("fading.variance"), tc);
        } else {
            throw ConfigError("fading.kind must be none, rayleigh or hyperexp");
        }
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("fading: ") + e.what());
    }
    c.interference_radius = kv.number("sinr.interference_radius", 0.0);
    if (c.interference_radius < 0.0) throw ConfigError("sinr.interference_radius must be >= 0");

    c.reps = kv.unsigned_integer("run.reps", c.reps);
    c.seed = kv.unsigned_integer("run.seed", c.seed);
    c.samples = kv.unsigned_integer("run.samples", c.samples);
    if (c.reps == 0) throw ConfigError("run.reps must be > 0");

    c.playback_rate = kv.number("streaming.playback_rate", c.playback_rate);
    if (!(c.playback_rate > 0.0)) throw ConfigError("streaming.playback_rate must be > 0");
    c.user_intensities = kv.numbers("streaming.user_intensities");
    for (double x : c.user_intensities)
        if (x < 0.0) throw ConfigError("streaming.user_intensities must be >= 0");

    c.download_delta = kv.number("download.delta", c.download_delta);
    c.download_kappa = kv.number("download.kappa", c.download_kappa);
    if (!(c.download_delta > 0.0) || !(c.download_kappa > 0.0))
        throw ConfigError("download.delta and download.kappa must be > 0");
    const auto variant = kv.text("download.variant", "completion");
    if (variant == "completion") c.download_variant = DownloadVariant::completion;
    else if (variant == "printed") c.download_variant = DownloadVariant::as_printed;
    else throw ConfigError("download.variant must be completion or printed");
    if (kv.has("download.s")) c.laplace_s = kv.numbers("download.s");
    for (double s : c.laplace_s)
        if (s < 0.0) throw ConfigError("download.s must be >= 0");

    c.fluid_kappa = kv.number("fluid.kappa", c.fluid_kappa);
    c.fluid_eta = kv.number("fluid.eta", c.fluid_eta);
    if (!(c.fluid_eta > 0.0) || !(c.fluid_kappa > c.fluid_eta))
        throw ConfigError("fluid needs kappa > eta > 0");

    c.line_intensity = kv.number("cox.line_intensity", 0.0);
    c.user_line_intensity = kv.number("cox.user_line_intensity", 0.0);
    if (c.line_intensity < 0.0 || c.user_line_intensity < 0.0) throw ConfigError("cox intensities must be >= 0");

    c.micro_intensity = kv.number("hetnet.micro_intensity", 0.0);
    c.micro_power = kv.number("hetnet.micro_power", 1.0);
    if (c.micro_intensity < 0.0 || !(c.micro_power > 0.0)) throw ConfigError("hetnet micro settings out of range");

    c.fading_variances = kv.numbers("sweep.fading_variances");
    for (double v : c.fading_variances)
        if (!(v >= 1.0)) throw ConfigError("sweep.fading_variances must be >= 1");
    c.pathloss_exponents = kv.numbers("sweep.pathloss_exponents");
    for (double b : c.pathloss_exponents)
        if (!(b > 2.0)) throw ConfigError("sweep.pathloss_exponents must be > 2");
    return c;
}

// ---------------------------------------------------------------- presets

namespace presets {

// One node per disc of radius 200 m, 16 m/s, beta = 4, p = 2 W, 10 ms sampling. Noise puts the
// 90% nearest-node distance at snr_edge, chosen so that 1/f(r) = 63.07 s at gamma = 1.
inline constexpr std::string_view sec6_default = R"(
scenario = paper-sec6-default
model.node_disc_radius = 200
model.tx_power = 2
model.pathloss_exponent = 4
model.velocity = 16
noise.edge_quantile = 0.9
noise.snr_edge = 0.00177173
threshold.gamma = 1
trajectory.duration = 20000
trajectory.dt = 0.01
fading.coherence_time = 0.007
run.reps = 200
run.samples = 1000
run.seed = 1
)";

// Low thresholds on the sec6 network: radii for lambda pi r^2 = 1..6.
inline constexpr std::string_view low_gamma = R"(
scenario = paper-low-gamma
model.node_disc_radius = 200
model.tx_power = 2
model.pathloss_exponent = 4
model.velocity = 16
noise.edge_quantile = 0.9
noise.snr_edge = 0.00177173
threshold.radius = 200, 282.842712474619, 346.410161513775, 400, 447.213595499958, 489.897948556636
run.samples = 500
run.seed = 6
)";

// lambda pi r^2 = 1: r_gamma = 200 m at gamma = 1.
inline constexpr std::string_view rho1 = R"(
scenario = paper-rho1
model.node_disc_radius = 200
model.tx_power = 1
model.noise_power = 6.25e-10
model.pathloss_exponent = 4
model.velocity = 16
model.user_intensity = 2.5e-5
threshold.gamma = 1
trajectory.duration = 20000
trajectory.dt = 0.01
run.reps = 200
run.seed = 1
)";

// Dimensionless streaming family with lambda pi (p/w)^(2/beta) = 1.
inline constexpr std::string_view fig9 = R"(
scenario = paper-fig9
model.node_intensity = 1
model.tx_power = 1
model.noise_power = 9.869604401089358
model.pathloss_exponent = 4
model.velocity = 1
streaming.playback_rate = 1
streaming.user_intensities = 0, 1, 4, 10
)";

// lambda = 25/pi per km^2 and xi = 5..100 per km^2, in m^-2.
inline constexpr std::string_view table2 = R"(
scenario = paper-table2
model.node_disc_radius = 200
model.tx_power = 1
model.noise_power = 6.25e-10
model.pathloss_exponent = 4
model.velocity = 16
threshold.gamma = 1
streaming.user_intensities = 5e-6, 25e-6, 50e-6, 75e-6, 100e-6
run.samples = 400000
run.seed = 1
)";

inline constexpr std::string_view download = R"(
scenario = paper-download
model.node_disc_radius = 200
model.tx_power = 1
model.noise_power = 6.25e-10
model.pathloss_exponent = 4
model.velocity = 16
threshold.gamma = 1
download.delta = 0.02
download.kappa = 1
download.s = 0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2
fluid.kappa = 1.25
fluid.eta = 1
trajectory.duration = 20000
run.reps = 16
run.seed = 1
)";

// Macro tier as paper-rho1; micro nodes four times denser with a 50 m range at gamma = 1.
inline constexpr std::string_view hetnet = R"(
scenario = paper-hetnet
model.node_disc_radius = 200
model.tx_power = 1
model.noise_power = 6.25e-10
model.pathloss_exponent = 4
model.velocity = 16
model.user_intensity = 7.5e-6
hetnet.micro_intensity = 3.183098861837907e-05
hetnet.micro_power = 0.00390625
threshold.gamma = 1
trajectory.duration = 20000
run.reps = 12
run.seed = 1
)";

// Poisson roads with line intensity 1e-3 (pi km of road per km^2) carrying 25 users per km, so the
// planar user intensity is pi * 1e-3 * 0.025 per m^2.
inline constexpr std::string_view cox = R"(
scenario = paper-cox
model.node_disc_radius = 200
model.tx_power = 1
model.noise_power = 6.25e-10
model.pathloss_exponent = 4
model.velocity = 16
cox.line_intensity = 1e-3
cox.user_line_intensity = 0.025
threshold.gamma = 1
run.reps = 20000
run.seed = 1
)";

inline constexpr std::string_view fading = R"(
scenario = paper-fading
model.node_disc_radius = 200
model.tx_power = 2
model.pathloss_exponent = 4
model.velocity = 16
noise.edge_quantile = 0.9
noise.snr_edge = 0.00177173
threshold.gamma = -10dB, 0dB, 10dB, 20dB, 30dB, 40dB, 50dB, 60dB, 70dB
trajectory.dt = 0.01
fading.kind = rayleigh
fading.coherence_time = 0.007
sweep.fading_variances = 1, 2, 4, 8, 16
run.samples = 1000
run.seed = 11
)";

inline constexpr std::string_view sinr = R"(
scenario = paper-sinr
model.node_disc_radius = 200
model.tx_power = 2
model.pathloss_exponent = 4
model.velocity = 16
noise.edge_quantile = 0.9
noise.snr_edge = 0.00177173
threshold.gamma = 10dB, 20dB, 30dB, 40dB, 50dB
trajectory.dt = 0.01
sweep.pathloss_exponents = 3, 3.25, 3.5, 4, 4.5
run.samples = 1000
run.seed = 13
)";

} // namespace presets

inline const std::map<std::string, std::string_view>& preset_table() {
    static const std::map<std::string, std::string_view> t{
        {"paper-sec6-default", presets::sec6_default},
        {"paper-rho1", presets::rho1},
        {"paper-low-gamma", presets::low_gamma},
        {"paper-fig9", presets::fig9},
        {"paper-table2", presets::table2},
        {"paper-download", presets::download},
        {"paper-hetnet", presets::hetnet},
        {"paper-cox", presets::cox},
        {"paper-fading", presets::fading},
        {"paper-sinr", presets::sinr},
    };
    return t;
}

inline KeyValueConfig preset(const std::string& name) {
    const auto& t = preset_table();
    const auto it = t.find(name);
    if (it == t.end()) {
        std::string names;
        for (const auto& [k, v] : t) names += (names.empty() ? "" : ", ") + k;
        throw ConfigError("unknown preset " + name + " (known: " + names + ")");
    }
    return KeyValueConfig::parse(it->second, name);
}

inline ExperimentConfig preset_experiment(const std::string& name) { return build_experiment(preset(name)); }

} // namespace mobrate
