// mobrate: command-line driver. Exit codes: 0 all checks pass, 1 a statistical check failed,
// 2 bad configuration or arguments, 3 anything else (I/O, internal).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mobrate/apps.hpp"
#include "mobrate/config.hpp"
#include "mobrate/experiments.hpp"
#include "mobrate/io.hpp"
#include "mobrate/mginf.hpp"
#include "mobrate/sharedrate.hpp"
#include "mobrate/sharing.hpp"
#include "mobrate/sharing_sim.hpp"

namespace fs = std::filesystem;
using namespace mobrate;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitStat = 1;
constexpr int kExitConfig = 2;
constexpr int kExitOther = 3;

struct Common {
    std::string preset;
    std::string config;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps;
    std::string out;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--preset", c.preset, "named preset (see `mobrate presets`)");
    sub->add_option("--config", c.config, "key = value file; overrides the preset");
    sub->add_option("--set", c.sets, "key=value override, repeatable")->allow_extra_args(false);
    sub->add_option("--seed", c.seed, "master seed (run.seed)");
    sub->add_option("--reps", c.reps, "replications (run.reps)");
    sub->add_option("--out", c.out, "output directory");
}

// Preset, then config file, then --set, then --seed/--reps.
KeyValueConfig resolve(const Common& c, const std::string& default_preset) {
    KeyValueConfig kv;
    if (!c.preset.empty()) kv = preset(c.preset);
    else if (c.config.empty()) kv = preset(default_preset);
    if (!c.config.empty()) kv.merge(KeyValueConfig::load(c.config));
    for (const auto& s : c.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
        kv.merge(KeyValueConfig::parse(s, "--set"));
    }
    if (c.seed) kv.set("run.seed", std::to_string(*c.seed));
    if (c.reps) kv.set("run.reps", std::to_string(*c.reps));
    return kv;
}

fs::path out_dir(const Common& c, const std::string& cmd) {
    fs::path p = c.out.empty() ? fs::path("out") / cmd : fs::path(c.out);
    fs::create_directories(p);
    return p;
}

json meta_base(const std::string& cmd, const KeyValueConfig& kv, const ExperimentConfig& cfg) {
    json cf = json::object();
    for (const auto& [k, v] : kv.entries()) cf[k] = v;
    return {{"tool", "mobrate"},    {"schema", 1},          {"command", cmd},
            {"scenario", cfg.scenario}, {"seed", cfg.seed}, {"config", cf}};
}

void print_row(const Comparison& c) {
    std::printf("%-28s %14.6g %14.6g %12.4g %8.2f  %s\n", c.name.c_str(), c.closed_form, c.estimate, c.std_error, c.z,
                c.pass ? "ok" : "FAIL");
}

json comparison_json(const Comparison& c) {
    return {{"name", c.name}, {"closed_form", c.closed_form}, {"estimate", c.estimate},
            {"std_error", c.std_error}, {"z", c.z}, {"pass", c.pass}};
}

// ---------------------------------------------------------------- trace

int cmd_trace(const Common& c) {
    const auto kv = resolve(c, "paper-sec6-default");
    const auto cfg = build_experiment(kv);
    const auto dir = out_dir(c, "trace");
    const auto& m = cfg.model;
    const double gamma = cfg.gamma();
    const double r = coverage_radius(m, gamma);
    const double R = cfg.interference_radius > 0 ? cfg.interference_radius : default_interference_radius(m.node_intensity, r);
    const double reach = r * std::pow(cfg.fading.max_gain(), 1.0 / m.pathloss_exponent);

    const auto tr = straight_trajectory(m.velocity, cfg.duration);
    const auto w = trajectory_window(tr, std::max(default_pad(m.node_intensity, reach), R + r));
    const auto field = FieldSample::sample(m.node_intensity, m.user_intensity, w, cfg.seed);

    const auto snr = snr_trace(field, tr, m, cfg.dt, cfg.fading, derive_seed(cfg.seed, streams::fading));
    write_sampled_trace(dir / "snr.csv", snr, "snr");
    const auto snr_cross = extract_crossings(snr, gamma);
    write_crossings(dir / "snr_crossings.csv", snr_cross);

    const auto sinr = sinr_trace(field, tr, m, cfg.dt, R);
    write_sampled_trace(dir / "sinr.csv", sinr, "sinr");
    write_crossings(dir / "sinr_crossings.csv", extract_crossings(sinr, gamma));

    // Exact no-fading coverage process at r_gamma.
    const auto cover = extract_crossings(coverage_intervals(field, tr, r), 0.0, cfg.duration, gamma);
    write_crossings(dir / "coverage_crossings.csv", cover);

    write_step_trace(dir / "sharing.csv", sharing_trace(field, tr, r), "sharing");
    write_step_trace(dir / "sharing_upper.csv", upper_sharing_trace(field, tr, r), "sharing-upper");

    const auto rate = shared_rate_trace(field, tr, m, gamma, cfg.dt);
    {
        CsvWriter wr(dir / "shared_rate.csv", "shared-rate", 1, {"time", "rate", "sharing", "shared"});
        for (std::size_t k = 0; k < rate.size(); ++k) wr.row(rate.time(k), rate.rate[k], rate.sharing[k], rate.shared[k]);
    }
    write_field(dir / "nodes.csv", field.nodes(), cfg.seed, w);
    write_field(dir / "users.csv", field.users(), cfg.seed, w);

    auto meta = meta_base("trace", kv, cfg);
    meta["gamma"] = gamma;
    meta["coverage_radius"] = r;
    meta["interference_radius"] = R;
    meta["window"] = {w.xmin, w.ymin, w.xmax, w.ymax};
    meta["samples"] = snr.values.size();
    meta["nodes"] = field.nodes().size();
    meta["users"] = field.users().size();
    meta["snr_upcrossings"] = snr_cross.up_times().size();
    meta["coverage_on_fraction"] = cover.on_time() / cfg.duration;
    write_json(dir / "meta.json", meta);
    std::printf("trace: %zu samples, %zu nodes, %zu SNR up-crossings at %.3g dB -> %s\n", snr.values.size(),
                field.nodes().size(), snr_cross.up_times().size(), linear_to_db(gamma), dir.string().c_str());
    return kExitOk;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const Common& c, bool inject_fault) {
    const auto kv = resolve(c, "paper-rho1");
    const auto cfg = build_experiment(kv);
    const auto dir = out_dir(c, "validate");
    const auto& m = cfg.model;
    const double gamma = cfg.gamma();
    const double r = coverage_radius(m, gamma);
    const auto P = MGInfParams::make(m.node_intensity, r, m.velocity);
    const unsigned workers = worker_count_from_env();

    std::vector<Comparison> rows;
    const auto cov = coverage_study(m.node_intensity, r, m.velocity, cfg.duration, cfg.reps, derive_seed(cfg.seed, 1), workers);
    const auto sf = summarize(cov.on_fraction), so = summarize(cov.on), sx = summarize(cov.off), su = summarize(cov.up_rate);
    // The injected fault drops the expm1: E[B] = rho / (2 lambda v r), the mean service time.
    const double busy_cf = inject_fault ? P.load / P.arrival_rate : busy_mean(P);
    rows.push_back(compare("P(on)", on_probability(P), sf.mean, sf.std_error));
    rows.push_back(compare("E[idle] s", 1.0 / P.arrival_rate, sx.mean, sx.std_error));
    rows.push_back(compare("E[busy] s", busy_cf, so.mean, so.std_error));
    rows.push_back(compare("up-crossings/s", P.arrival_rate * std::exp(-P.load), su.mean, su.std_error));

    const auto h = handoff_study(m.node_intensity, m.velocity, cfg.duration, cfg.reps, derive_seed(cfg.seed, 2));
    const auto hm = summarize(h.maxima_rate), he = summarize(h.edge_rate);
    rows.push_back(compare("interior maxima/s", m.velocity * std::sqrt(m.node_intensity), hm.mean, hm.std_error));
    rows.push_back(compare("cell-edge crossings/s", 4.0 * m.velocity * std::sqrt(m.node_intensity) / std::numbers::pi,
                           he.mean, he.std_error));

    const auto jm = jm_study(m.node_intensity, r, m.velocity, m.user_intensity, cfg.duration, cfg.reps, derive_seed(cfg.seed, 3));
    const auto js = summarize(jm.rate);
    rows.push_back(compare("JM handoffs/s", jm_crossing_intensity(m.node_intensity, m.velocity, r), js.mean, js.std_error));

    const auto hn = hetnet_study(cfg.hetnet(), gamma, cfg.duration, cfg.reps, derive_seed(cfg.seed, 4));
    rows.push_back(hn.p_on);
    rows.push_back(hn.mean_on);
    rows.push_back(hn.mean_off);

    // Closed forms only: no micro tier must reproduce the homogeneous model exactly.
    auto h0 = cfg.hetnet();
    h0.micro_intensity = 0.0;
    const auto s0 = hetnet_on_stats(h0, gamma);
    bool reduces = std::abs(s0.p_on - on_probability(P)) <= 1e-12 * on_probability(P) &&
                   std::abs(s0.mean_on - busy_mean(P)) <= 1e-9 * busy_mean(P) &&
                   std::abs(s0.mean_off - 1.0 / P.arrival_rate) <= 1e-9 / P.arrival_rate;

    std::printf("%-28s %14s %14s %12s %8s\n", "quantity", "closed form", "estimate", "std error", "z");
    bool ok = reduces;
    CsvWriter w(dir / "validate.csv", "validate", 1, {"quantity", "closed_form", "estimate", "std_error", "z", "pass"});
    json jr = json::array();
    for (const auto& row : rows) {
        print_row(row);
        w.row(row.name, row.closed_form, row.estimate, row.std_error, row.z, row.pass);
        jr.push_back(comparison_json(row));
        ok = ok && row.pass;
    }
    std::printf("%-28s %s\n", "hetnet(micro=0) == homogeneous", reduces ? "ok" : "FAIL");
    w.row(std::string("hetnet micro=0 reduces"), 0.0, 0.0, 0.0, 0.0, reduces);
    if (jm.runs_violating) {
        std::printf("JM: %zu runs with more served jumps than handoffs\n", jm.runs_violating);
        ok = false;
    }

    auto meta = meta_base("validate", kv, cfg);
    meta["reps"] = cfg.reps;
    meta["duration"] = cfg.duration;
    meta["inject_fault"] = inject_fault;
    meta["rows"] = jr;
    meta["hetnet_reduces"] = reduces;
    meta["jm_runs_violating"] = jm.runs_violating;
    meta["pass"] = ok;
    write_json(dir / "meta.json", meta);
    std::printf("validate: %s\n", ok ? "all checks pass" : "FAILED");
    return ok ? kExitOk : kExitStat;
}

// ---------------------------------------------------------------- asymptotics

void write_sweep(CsvWriter& w, const std::string& label, double param, const AsymptoticSweep& s) {
    for (const auto& r : s.rows)
        w.row(label, param, linear_to_db(r.gamma), r.radius, r.rescale, r.ks.n, r.mean, r.ks.statistic, r.ks.critical,
              r.ks.pass, r.enough);
}

json sweep_json(const std::string& label, double param, const AsymptoticSweep& s) {
    json rows = json::array();
    for (const auto& r : s.rows)
        rows.push_back({{"gamma_db", linear_to_db(r.gamma)}, {"radius", r.radius}, {"ks", ks_json(r.ks)}, {"mean", r.mean}});
    return {{"curve", label}, {"param", param},
            {"threshold_db", s.threshold ? json(linear_to_db(*s.threshold)) : json(nullptr)}, {"rows", rows}};
}

int cmd_asymptotics(const Common& c, const std::string& study) {
    const std::string def = study == "fading" ? "paper-fading"
                            : study == "sinr" ? "paper-sinr"
                            : study == "low"  ? "paper-low-gamma"
                                              : "paper-sec6-default";
    const auto kv = resolve(c, def);
    const auto cfg = build_experiment(kv);
    const auto dir = out_dir(c, "asymptotics");
    if (!kv.has("run.samples")) throw ConfigError("asymptotics needs run.samples (interarrivals per gamma)");

    AsymptoticSetup base;
    base.model = cfg.model;
    base.dt = cfg.dt;
    base.samples = cfg.samples;
    base.interference_radius = cfg.interference_radius;

    CsvWriter w(dir / "ks.csv", "asymptotics", 1,
                {"curve", "param", "gamma_db", "radius", "rescale", "n", "scaled_mean", "ks_d", "ks_critical", "pass", "enough"});
    json curves = json::array();
    bool ok = true;
    // The low-threshold limit holds as gamma falls, so there the lowest gamma (highest load) must pass.
    auto run = [&](const std::string& label, double param, const AsymptoticSetup& a, Normalization norm, std::uint64_t seed) {
        const auto s = asymptotic_sweep(a, cfg.gammas, norm, seed);
        write_sweep(w, label, param, s);
        curves.push_back(sweep_json(label, param, s));
        ok = ok && (a.low_limit ? !s.rows.empty() && s.rows.front().ks.pass : s.threshold.has_value());
        std::printf("%-8s %-8g threshold %s\n", label.c_str(), param,
                    s.threshold ? (std::to_string(linear_to_db(*s.threshold)) + " dB").c_str() : "none");
    };

    if (study == "snr") {
        run("snr", 0.0, base, Normalization::theorem, cfg.seed);
    } else if (study == "low") {
        auto a = base;
        a.low_limit = true;
        a.exact = true;
        run("low", 0.0, a, Normalization::theorem, cfg.seed);
    } else if (study == "fading") {
        if (cfg.fading_variances.empty()) throw ConfigError("fading study needs sweep.fading_variances");
        for (std::size_t i = 0; i < cfg.fading_variances.size(); ++i) {
            const double var = cfg.fading_variances[i];
            auto a = base;
            a.fading = var == 1.0 ? FadingModel::rayleigh(cfg.fading.coherence_time)
                                  : FadingModel::hyperexp_with_variance(var, cfg.fading.coherence_time);
            a.suppress = true;
            run("fading", var, a, Normalization::sample_mean, derive_seed(cfg.seed, i));
        }
    } else if (study == "sinr") {
        if (cfg.pathloss_exponents.empty()) throw ConfigError("sinr study needs sweep.pathloss_exponents");
        for (std::size_t i = 0; i < cfg.pathloss_exponents.size(); ++i) {
            auto a = base;
            a.model = cfg.model_with_beta(cfg.pathloss_exponents[i]);
            a.pipeline = Pipeline::sinr;
            run("sinr", cfg.pathloss_exponents[i], a, Normalization::theorem, derive_seed(cfg.seed, i));
        }
    } else {
        throw ConfigError("unknown study '" + study + "'");
    }

    auto meta = meta_base("asymptotics", kv, cfg);
    meta["study"] = study;
    meta["curves"] = curves;
    meta["pass"] = ok;
    write_json(dir / "meta.json", meta);
    return ok ? kExitOk : kExitStat;
}

// ---------------------------------------------------------------- streaming

int cmd_streaming(const Common& c) {
    const auto kv = resolve(c, "paper-fig9");
    const auto cfg = build_experiment(kv);
    const auto dir = out_dir(c, "streaming");
    auto sc = cfg.streaming();
    std::vector<double> xis = cfg.user_intensities.empty() ? std::vector<double>{sc.model.user_intensity} : cfg.user_intensities;
    const auto [lo, hi] = gamma_search_range(sc.model);

    CsvWriter curve(dir / "load_factor.csv", "load-factor", 1, {"user_intensity", "gamma_db", "rho"});
    CsvWriter star(dir / "gamma_star.csv", "gamma-star", 1, {"user_intensity", "gamma_star_db", "rho_star", "spread", "unimodal"});
    bool ok = true;
    for (double xi : xis) {
        auto s = sc;
        s.model.user_intensity = xi;
        constexpr int n = 200;
        for (int k = 0; k <= n; ++k) {
            const double g = std::exp(lo + (hi - lo) * k / n);
            curve.row(xi, linear_to_db(g), load_factor(g, s));
        }
        const auto gs = find_gamma_star(s);
        star.row(xi, linear_to_db(gs.gamma), gs.rho, gs.spread, gs.unimodal);
        ok = ok && gs.unimodal;
        std::printf("xi %-10g gamma* %8.3f dB  rho* %.6g%s\n", xi, linear_to_db(gs.gamma), gs.rho, gs.unimodal ? "" : " (not unimodal)");
    }

    // Base-station intensity giving rho* = 1 for each nonzero user intensity.
    std::vector<double> nonzero;
    for (double xi : xis)
        if (xi > 0) nonzero.push_back(xi);
    CsvWriter lv(dir / "level_set.csv", "level-set", 1, {"user_intensity", "node_intensity", "rho_star", "found"});
    for (const auto& p : level_set_rho1(sc, nonzero, 1e-3 * sc.model.node_intensity, 1e3 * sc.model.node_intensity))
        lv.row(p.user_intensity, p.intensity, p.rho, p.found);

    auto meta = meta_base("streaming", kv, cfg);
    meta["pass"] = ok;
    write_json(dir / "meta.json", meta);
    return ok ? kExitOk : kExitStat;
}

// ---------------------------------------------------------------- shared rate

int cmd_sharedrate(const Common& c) {
    const auto kv = resolve(c, "paper-table2");
    const auto cfg = build_experiment(kv);
    const auto dir = out_dir(c, "sharedrate");
    const auto& m = cfg.model;
    std::vector<double> xis = cfg.user_intensities.empty() ? std::vector<double>{m.user_intensity} : cfg.user_intensities;

    CsvWriter w(dir / "variance.csv", "served-variance", 1,
                {"user_intensity", "n", "var_s", "var_r", "var_f", "mean_f", "gap", "gap_se"});
    bool ok = true;
    double prev = INFINITY;
    for (std::size_t i = 0; i < xis.size(); ++i) {
        const auto d = served_variance_decomposition(m, cfg.gamma(), xis[i], cfg.samples, derive_seed(cfg.seed, i));
        w.row(xis[i], d.n, d.var_s, d.var_r, d.var_f, d.mean_f, d.gap, d.gap_se);
        ok = ok && d.var_s < prev;
        prev = d.var_s;
        std::printf("xi %-10g var(S | served) %.5g\n", xis[i], d.var_s);
    }

    auto meta = meta_base("sharedrate", kv, cfg);
    meta["variance_decreasing"] = ok;
    write_json(dir / "meta.json", meta);
    return ok ? kExitOk : kExitStat;
}

// ---------------------------------------------------------------- download and fluid queue

json points_json(const std::vector<TransformPoint>& pts) {
    json a = json::array();
    for (const auto& p : pts)
        a.push_back({{"s", p.s}, {"transform", p.transform}, {"transform_se", p.transform_se}, {"simulated", p.simulated},
                     {"simulated_se", p.simulated_se}, {"pass", p.pass}});
    return a;
}

int cmd_download(const Common& c) {
    const auto kv = resolve(c, "paper-download");
    const auto cfg = build_experiment(kv);
    const auto dir = out_dir(c, "download");
    const auto& m = cfg.model;
    const double r = cfg.radius();

    const auto d = download_study(m.node_intensity, r, m.velocity, cfg.download_delta, cfg.download_kappa, cfg.laplace_s,
                                  cfg.duration, cfg.reps, derive_seed(cfg.seed, 1), cfg.download_variant);
    CsvWriter w(dir / "download.csv", "download", 1, {"s", "transform", "transform_se", "simulated", "simulated_se", "pass"});
    bool ok = true;
    for (const auto& p : d.points) {
        w.row(p.s, p.transform, p.transform_se, p.simulated, p.simulated_se, p.pass);
        ok = ok && p.pass;
    }
    std::printf("download: %zu files, mean %.4g +- %.2g s (formula %.4g s)\n", d.downloads, d.mean_time, d.mean_time_se,
                d.mean_formula);

    const double p_on = -std::expm1(-disc_load(m.node_intensity, r));
    if (cfg.fluid_kappa / cfg.fluid_eta * p_on >= 1.0)
        throw ConfigError("fluid queue unstable: (kappa/eta) P(on) = " + format_number(cfg.fluid_kappa / cfg.fluid_eta * p_on) +
                          " >= 1");
    const auto f = fluid_study(m.node_intensity, r, m.velocity, cfg.fluid_kappa, cfg.fluid_eta, cfg.laplace_s, cfg.duration,
                               cfg.reps, derive_seed(cfg.seed, 2));
    CsvWriter fw(dir / "fluid.csv", "fluid-busy", 1, {"s", "transform", "transform_se", "simulated", "simulated_se", "pass"});
    for (const auto& p : f.points) {
        fw.row(p.s, p.transform, p.transform_se, p.simulated, p.simulated_se, p.pass);
        ok = ok && p.pass;
    }
    ok = ok && f.converged;
    std::printf("fluid: sigma %.4g, %zu busy periods%s\n", f.sigma, f.busy_periods, f.converged ? "" : " (fixed point did not converge)");

    auto meta = meta_base("download", kv, cfg);
    meta["download"] = {{"downloads", d.downloads}, {"mean_time", d.mean_time}, {"mean_time_se", d.mean_time_se},
                        {"mean_formula", d.mean_formula}, {"points", points_json(d.points)}};
    meta["fluid"] = {{"sigma", f.sigma}, {"busy_periods", f.busy_periods}, {"converged", f.converged},
                     {"points", points_json(f.points)}};
    meta["pass"] = ok;
    write_json(dir / "meta.json", meta);
    return ok ? kExitOk : kExitStat;
}

// ---------------------------------------------------------------- Cox users

int cmd_cox(const Common& c) {
    const auto kv = resolve(c, "paper-cox");
    const auto cfg = build_experiment(kv);
    const auto dir = out_dir(c, "cox");
    const auto& m = cfg.model;
    const double r = cfg.radius();
    if (!(cfg.line_intensity > 0 && cfg.user_line_intensity > 0))
        throw ConfigError("cox needs cox.line_intensity and cox.user_line_intensity > 0");

    const auto cf = cox_mean_sharing(cfg.line_intensity, cfg.user_line_intensity, m.node_intensity, r);
    const auto mc = simulate_cox_sharing(cfg.line_intensity, cfg.user_line_intensity, m.node_intensity, r, cfg.reps, cfg.seed);
    const double planar = std::numbers::pi * cfg.line_intensity * cfg.user_line_intensity;
    const double ppp = planar * expected_jm_area(m.node_intensity, r).value;
    const auto cmp = compare("E[N] Cox", cf.value, mc.mean, mc.std_error);

    CsvWriter w(dir / "cox.csv", "cox", 1,
                {"line_intensity", "user_line_intensity", "closed_form", "other_roads", "own_road", "simulated", "simulated_se",
                 "ppp_same_intensity", "pass"});
    w.row(cfg.line_intensity, cfg.user_line_intensity, cf.value, cf.from_other_roads, cf.from_own_road, mc.mean,
          mc.std_error, ppp, cmp.pass);
    print_row(cmp);
    std::printf("PPP users at the same planar intensity: %.6g\n", ppp);

    auto meta = meta_base("cox", kv, cfg);
    meta["comparison"] = comparison_json(cmp);
    meta["converged"] = cf.converged;
    meta["ppp_same_intensity"] = ppp;
    write_json(dir / "meta.json", meta);
    return cmp.pass && cf.converged ? kExitOk : kExitStat;
}

// ---------------------------------------------------------------- heterogeneous network

int cmd_hetnet(const Common& c) {
    const auto kv = resolve(c, "paper-hetnet");
    const auto cfg = build_experiment(kv);
    const auto dir = out_dir(c, "hetnet");
    const auto h = cfg.hetnet();
    const double gamma = cfg.gamma();
    const auto& m = cfg.model;

    // Closed-form sweep over micro density, from none to 8x the configured value.
    CsvWriter sw(dir / "sweep.csv", "hetnet-sweep", 1,
                 {"micro_intensity", "p_on", "mean_on", "mean_off", "rho", "p_micro", "p_macro", "gamma_star_db", "rho_star"});
    const double top = h.micro_intensity > 0 ? 8.0 * h.micro_intensity : 4.0 * h.macro_intensity;
    for (int k = 0; k <= 16; ++k) {
        auto hk = h;
        hk.micro_intensity = top * k / 16.0;
        const auto s = hetnet_on_stats(hk, gamma);
        const auto ld = hetnet_load_factor(gamma, hk, m.user_intensity, m.bandwidth_const, cfg.playback_rate);
        const auto gs = hetnet_gamma_star(hk, m.user_intensity, m.bandwidth_const, cfg.playback_rate, 200);
        sw.row(hk.micro_intensity, s.p_on, s.mean_on, s.mean_off, ld.value, ld.p_micro, ld.p_macro, linear_to_db(gs.gamma), gs.rho);
    }

    const auto st = hetnet_study(h, gamma, cfg.duration, cfg.reps, cfg.seed);
    CsvWriter w(dir / "hetnet.csv", "hetnet", 1, {"quantity", "closed_form", "estimate", "std_error", "z", "pass"});
    json rows = json::array();
    bool ok = true;
    for (const auto* r : {&st.p_on, &st.mean_on, &st.mean_off}) {
        print_row(*r);
        w.row(r->name, r->closed_form, r->estimate, r->std_error, r->z, r->pass);
        rows.push_back(comparison_json(*r));
        ok = ok && r->pass;
    }
    auto meta = meta_base("hetnet", kv, cfg);
    meta["rows"] = rows;
    meta["pass"] = ok;
    write_json(dir / "meta.json", meta);
    return ok ? kExitOk : kExitStat;
}

int cmd_presets() {
    for (const auto& [name, text] : preset_table()) std::printf("%s\n", name.c_str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mobrate: coverage, handoff and shared-rate processes for a user moving through a Poisson network"};
    app.require_subcommand(1);

    Common common;
    bool inject = false;
    std::string study = "snr";
    std::string show;

    auto* trace = app.add_subcommand("trace", "SNR, SINR, sharing and shared-rate traces along one trajectory");
    auto* validate = app.add_subcommand("validate", "Monte-Carlo vs closed forms for the coverage and handoff processes");
    validate->add_flag("--inject-fault", inject, "use a wrong busy-period formula (the run must fail)");
    auto* asym = app.add_subcommand("asymptotics", "K-S sweeps of rescaled up-crossing interarrivals over gamma");
    asym->add_option("--study", study, "snr | low | fading | sinr")->check(CLI::IsMember({"snr", "low", "fading", "sinr"}));
    auto* streaming = app.add_subcommand("streaming", "load factor curves, gamma* and the rho* = 1 level set");
    auto* sharedrate = app.add_subcommand("sharedrate", "variance of the shared rate seen by served users");
    auto* download = app.add_subcommand("download", "download-time and fluid busy-period transforms");
    auto* cox = app.add_subcommand("cox", "mean sharing number with users on Poisson roads");
    auto* hetnet = app.add_subcommand("hetnet", "two-tier network with micro nodes preferred");
    auto* presets_cmd = app.add_subcommand("presets", "list preset names");
    presets_cmd->add_option("--show", show, "print one preset");
    for (auto* s : {trace, validate, asym, streaming, sharedrate, download, cox, hetnet}) add_common(s, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*trace) return cmd_trace(common);
        if (*validate) return cmd_validate(common, inject);
        if (*asym) return cmd_asymptotics(common, study);
        if (*streaming) return cmd_streaming(common);
        if (*sharedrate) return cmd_sharedrate(common);
        if (*download) return cmd_download(common);
        if (*cox) return cmd_cox(common);
        if (*hetnet) return cmd_hetnet(common);
        if (*presets_cmd) {
            if (show.empty()) return cmd_presets();
            std::cout << preset(show).dump();
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "invalid parameter: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitOther;
    }
    return kExitOther;
}
