#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mobrate/config.hpp"
#include "mobrate/experiments.hpp"
#include "mobrate/io.hpp"

using namespace mobrate;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("mobrate_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST(Config, ParsesCommentsAndWhitespace) {
    const auto kv = KeyValueConfig::parse("# top\n  model.velocity = 16  \n\nthreshold.gamma=3dB # trailing\n");
    EXPECT_DOUBLE_EQ(kv.number("model.velocity"), 16.0);
    EXPECT_NEAR(kv.ratio("threshold.gamma", 0.0), std::pow(10.0, 0.3), 1e-12);
}

TEST(Config, RejectsDuplicatesAndGarbage) {
    EXPECT_THROW(KeyValueConfig::parse("a = 1\na = 2\n"), ConfigError);
    EXPECT_THROW(KeyValueConfig::parse("no equals sign\n"), ConfigError);
    const auto kv = KeyValueConfig::parse("model.velocity = fast\n");
    EXPECT_THROW(kv.number("model.velocity"), ConfigError);
    EXPECT_THROW(kv.number("model.tx_power"), ConfigError);
}

TEST(Config, UnknownKeyRejected) {
    auto kv = preset("paper-rho1");
    kv.set("model.velocty", "3");
    EXPECT_THROW(build_experiment(kv), ConfigError);
}

TEST(Config, EmptyTrajectoryRejected) {
    auto kv = preset("paper-rho1");
    kv.set("trajectory.duration", "0");
    EXPECT_THROW(build_experiment(kv), ConfigError);
    kv.set("trajectory.duration", "-5");
    EXPECT_THROW(build_experiment(kv), ConfigError);
}

TEST(Config, MergeOverrides) {
    auto kv = preset("paper-rho1");
    kv.merge(KeyValueConfig::parse("run.seed = 99\n"));
    EXPECT_EQ(build_experiment(kv).seed, 99u);
}

TEST(Config, EveryPresetBuilds) {
    for (const auto& [name, text] : preset_table()) {
        SCOPED_TRACE(name);
        const auto cfg = preset_experiment(name);
        EXPECT_EQ(cfg.scenario, name);
        EXPECT_FALSE(cfg.gammas.empty());
        cfg.model.validate();
    }
    EXPECT_THROW(preset("no-such-preset"), ConfigError);
}

TEST(Config, PresetAnchors) {
    const auto rho1 = preset_experiment("paper-rho1");
    EXPECT_NEAR(rho1.radius(), 200.0, 1e-9);
    EXPECT_NEAR(disc_load(rho1.model.node_intensity, rho1.radius()), 1.0, 1e-12);

    // 1/f(r) = 63.07 s at gamma = 1 on the sec6 network.
    const auto s6 = preset_experiment("paper-sec6-default");
    EXPECT_NEAR(1.0 / rescale_high(1.0, s6.model), 63.07, 0.01);

    const auto low = preset_experiment("paper-low-gamma");
    ASSERT_EQ(low.gammas.size(), 6u);
    for (std::size_t i = 0; i < low.gammas.size(); ++i)
        EXPECT_NEAR(disc_load(low.model.node_intensity, coverage_radius(low.model, low.gammas[i])), 1.0 + i, 1e-9);
}

TEST(Config, BetaRecalibrationKeepsEdgeSnr) {
    const auto c = preset_experiment("paper-sinr");
    ASSERT_TRUE(c.calibration.has_value());
    for (double beta : c.pathloss_exponents) {
        const auto m = c.model_with_beta(beta);
        const double d = c.calibration->edge_distance(m.node_intensity);
        EXPECT_NEAR(snr_point(m, d) / c.calibration->snr_edge, 1.0, 1e-9) << beta;
    }
}

TEST(Io, CsvRerunByteIdentical) {
    const auto dir = scratch("csv");
    auto write = [&](const fs::path& p) {
        const auto tr = straight_trajectory(16.0, 300.0);
        const double lambda = 1.0 / (std::numbers::pi * 200.0 * 200.0);
        const auto f = FieldSample::sample(lambda, 2.5e-5, trajectory_window(tr, default_pad(lambda, 200.0)), 1234);
        write_step_trace(p / "sharing.csv", sharing_trace(f, tr, 200.0), "sharing");
        write_crossings(p / "cross.csv", extract_crossings(coverage_intervals(f, tr, 200.0), 0.0, 300.0, 1.0));
    };
    fs::create_directories(dir / "a");
    fs::create_directories(dir / "b");
    write(dir / "a");
    write(dir / "b");
    for (const char* name : {"sharing.csv", "cross.csv"}) {
        const auto a = slurp(dir / "a" / name);
        EXPECT_FALSE(a.empty());
        EXPECT_EQ(a, slurp(dir / "b" / name)) << name;
    }
    EXPECT_EQ(slurp(dir / "a" / "sharing.csv").rfind("# mobrate-sharing v1\ntime,value\n", 0), 0u);
}

TEST(Io, FieldRoundTripExact) {
    const auto dir = scratch("field");
    const Window w{-500.0, -300.0, 700.0, 400.0};
    const auto pts = sample_poisson_field(1e-4, w, 77);
    ASSERT_FALSE(pts.empty());
    write_field(dir / "f.csv", pts, 77, w);
    const auto back = read_field(dir / "f.csv");
    EXPECT_EQ(back.seed, 77u);
    EXPECT_EQ(back.window.xmin, w.xmin);
    EXPECT_EQ(back.window.ymax, w.ymax);
    ASSERT_EQ(back.points.size(), pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        EXPECT_EQ(back.points[i].x, pts[i].x);
        EXPECT_EQ(back.points[i].y, pts[i].y);
    }
}

TEST(Io, CsvRowWidthChecked) {
    const auto dir = scratch("width");
    CsvWriter w(dir / "x.csv", "x", 1, {"a", "b"});
    EXPECT_THROW(w.row(1.0), std::logic_error);
}

TEST(Experiments, PassingThresholdIsUpwardClosed) {
    auto row = [](double g, bool pass) {
        AsymptoticRow r;
        r.gamma = g;
        r.ks.pass = pass;
        r.enough = true;
        return r;
    };
    EXPECT_EQ(passing_threshold({row(1, false), row(10, true), row(100, true)}), 10.0);
    // A failure above a pass breaks the run: only rows from the top count.
    EXPECT_EQ(passing_threshold({row(1, true), row(10, false), row(100, true)}), 100.0);
    EXPECT_FALSE(passing_threshold({row(1, true), row(10, true), row(100, false)}).has_value());
    EXPECT_FALSE(passing_threshold({}).has_value());
}

TEST(Experiments, CompareBands) {
    const auto c = compare("x", 1.0, 1.25, 0.1);
    EXPECT_NEAR(c.z, 2.5, 1e-12);
    EXPECT_TRUE(c.pass);
    EXPECT_FALSE(compare("x", 1.0, 1.35, 0.1).pass);
}
