#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mobrate/model.hpp"

using namespace mobrate;

namespace {

NetworkModel unit_model(double p, double w, double beta) {
    NetworkModel m;
    m.node_intensity = 1.0;
    m.tx_power = p;
    m.noise_power = w;
    m.pathloss_exponent = beta;
    return m;
}

// Solves 1 - exp(-lambda pi d^2) = q by bisection, independent of the closed form.
double edge_distance_by_root(double lambda, double q) {
    double lo = 0.0, hi = 1.0;
    while (1.0 - std::exp(-lambda * std::numbers::pi * hi * hi) < q) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (1.0 - std::exp(-lambda * std::numbers::pi * mid * mid) < q ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST(CoverageRadius, ClosedFormCases) {
    EXPECT_DOUBLE_EQ(coverage_radius(unit_model(2, 2, 4), 1.0), 1.0);
    EXPECT_DOUBLE_EQ(coverage_radius(unit_model(2, 2.0 / 16.0, 4), 1.0), 2.0);
}

TEST(CoverageRadius, EdgeDistanceMatchesRootSolve) {
    const double lambda = 1.0 / (std::numbers::pi * 200.0 * 200.0);
    NoiseCalibration cal{0.9, 0.01};
    const double d = cal.edge_distance(lambda);
    EXPECT_NEAR(d, edge_distance_by_root(lambda, 0.9), 1e-9);
    EXPECT_NEAR(d, 303.485, 1e-3);

    NetworkModel m = unit_model(2.0, 1.0, 4.0);
    m.node_intensity = lambda;
    cal.apply(m);
    EXPECT_NEAR(coverage_radius(m, cal.snr_edge), d, 1e-9 * d);
}

TEST(CoverageRadius, RejectsBadInputs) {
    const auto m = unit_model(2, 2, 4);
    EXPECT_THROW(coverage_radius(m, 0.0), InvalidArgument);
    EXPECT_THROW(coverage_radius(m, -1.0), InvalidArgument);
    EXPECT_THROW(coverage_radius(m, std::nan("")), InvalidArgument);
    EXPECT_THROW(coverage_radius(m, INFINITY), InvalidArgument);
}

TEST(CoverageRadius, DecreasingInGamma) {
    const auto m = unit_model(2, 0.3, 3.5);
    double prev = INFINITY;
    for (double g = 1e-3; g < 1e3; g *= 1.7) {
        const double r = coverage_radius(m, g);
        EXPECT_LT(r, prev);
        prev = r;
    }
}

TEST(SnrPoint, Values) {
    const auto m = unit_model(2, 2, 4);
    EXPECT_DOUBLE_EQ(snr_point(m, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(snr_point(m, 2.0), 1.0 / 16.0);
    EXPECT_TRUE(std::isinf(snr_point(m, 0.0)));
    EXPECT_THROW(snr_point(m, -1.0), InvalidArgument);
}

TEST(SnrPoint, RoundTripWithRadius) {
    for (double beta : {2.5, 3.0, 4.0, 5.5}) {
        const auto m = unit_model(2.0, 1e-9, beta);
        for (double g = 1e-3; g <= 1e3; g *= 1.3) {
            const double back = snr_point(m, coverage_radius(m, g));
            EXPECT_NEAR(back, g, 1e-12 * g) << "beta=" << beta;
            const auto th = Threshold::from_gamma(m, g);
            EXPECT_NEAR(Threshold::from_radius(m, th.radius).gamma, g, 1e-12 * g);
        }
    }
}

TEST(ShannonRate, Values) {
    auto m = unit_model(2, 2, 4);
    EXPECT_EQ(shannon_rate(m, 0.0, true), 0.0);
    EXPECT_NEAR(shannon_rate(m, std::numbers::e - 1.0, true), 1.0, 1e-15);
    EXPECT_EQ(shannon_rate(m, 123.0, false), 0.0);
    m.bandwidth_const = 3.0;
    EXPECT_NEAR(shannon_rate(m, std::numbers::e - 1.0, true), 3.0, 1e-14);
}

TEST(SharingFactor, Values) {
    EXPECT_EQ(sharing_factor(0), 1.0);
    EXPECT_EQ(sharing_factor(1), 0.5);
    EXPECT_DOUBLE_EQ(sharing_factor(9), 0.1);
}

TEST(NetworkModel, Validation) {
    NetworkModel m;
    m.node_intensity = 1e-5;
    EXPECT_NO_THROW(m.validate());
    auto bad = m;
    bad.pathloss_exponent = 2.0;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = m;
    bad.user_intensity = -1;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = m;
    bad.velocity = 0;
    EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(ScaleInvariance, DimensionlessQuantities) {
    const double lambda = 3e-6, r = 150.0;
    const double rho = disc_load(lambda, r);
    for (double c : {0.01, 0.5, 3.0, 1000.0}) {
        const double rho_c = disc_load(lambda / (c * c), c * r);
        EXPECT_NEAR(rho_c, rho, 1e-12 * rho);
        EXPECT_NEAR(1.0 - std::exp(-rho_c), 1.0 - std::exp(-rho), 1e-12);
    }
}

TEST(Decibels, RoundTrip) {
    EXPECT_DOUBLE_EQ(db_to_linear(10.0), 10.0);
    EXPECT_NEAR(linear_to_db(db_to_linear(-27.5)), -27.5, 1e-12);
}
