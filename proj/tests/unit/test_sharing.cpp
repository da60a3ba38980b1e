#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mobrate/sharing.hpp"
#include "mobrate/sharing_sim.hpp"
#include "mobrate/stats.hpp"

using namespace mobrate;

namespace {

const double kLambda = 1.0 / (std::numbers::pi * 200.0 * 200.0);

std::size_t brute_nearest(const std::vector<Point>& pts, Point q) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (distance_sq(q, pts[i]) < distance_sq(q, pts[best])) best = i;
    return best;
}

// Lens-based union area of two discs, for checking the closed form.
double union_by_lens(double r1, double r2, double d) {
    const double pi = std::numbers::pi;
    if (d >= r1 + r2) return pi * (r1 * r1 + r2 * r2);
    if (d <= std::abs(r1 - r2)) return pi * std::max(r1, r2) * std::max(r1, r2);
    const double a1 = std::acos((d * d + r1 * r1 - r2 * r2) / (2 * d * r1));
    const double a2 = std::acos((d * d + r2 * r2 - r1 * r1) / (2 * d * r2));
    const double lens = r1 * r1 * (a1 - std::sin(2 * a1) / 2) + r2 * r2 * (a2 - std::sin(2 * a2) / 2);
    return pi * (r1 * r1 + r2 * r2) - lens;
}

FieldSample field_for(const Trajectory& tr, double xi, double r, std::uint64_t seed) {
    return FieldSample::sample(kLambda, xi, trajectory_window(tr, default_pad(kLambda, r)), seed);
}

} // namespace

TEST(SharingTrace, ZeroWithoutUsers) {
    const auto tr = straight_trajectory(16.0, 2000.0);
    const auto f = field_for(tr, 0.0, 200.0, 1);
    const auto st = sharing_trace(f, tr, 200.0);
    EXPECT_EQ(st.initial, 0u);
    EXPECT_EQ(st.jumps(), 0u);
}

TEST(SharingTrace, ZeroOutsideCoverage) {
    // Node far from the path, many users around the path.
    std::vector<Point> users;
    for (int i = 0; i < 50; ++i) users.push_back({2.0 * i, 1.0});
    FieldSample f({{50, 30}}, users, {-100, -100, 200, 100}, 0);
    const auto st = sharing_trace(f, straight_trajectory(1.0, 100.0), 20.0);
    EXPECT_EQ(st.initial, 0u);
    EXPECT_EQ(st.jumps(), 0u);
}

TEST(SharingTrace, ConstructedNeighbourCell) {
    // The user is within r of the serving node but closer to the other node.
    FieldSample f({{0, 5}, {30, 5}}, {{20, 5}}, {-100, -100, 100, 100}, 0);
    const auto tr = Trajectory{{-5, 0}, {1, 0}, 1.0, 10.0};
    const auto n = sharing_trace(f, tr, 25.0);
    const auto nh = upper_sharing_trace(f, tr, 25.0);
    EXPECT_EQ(n.value_at(5.0), 0u);
    EXPECT_EQ(nh.value_at(5.0), 1u);
}

TEST(SharingTrace, MatchesBruteForceRecount) {
    const double r = 200.0, xi = 5e-5;
    const auto tr = straight_trajectory(16.0, 1500.0);
    const auto f = field_for(tr, xi, r, 2);
    const auto n = sharing_trace(f, tr, r);
    const auto nh = upper_sharing_trace(f, tr, r);
    ASSERT_GT(n.jumps(), 5u);
    for (double t = 0.05; t < tr.duration; t += 1.37) {
        const Point pos = tr.position(t);
        const auto s = brute_nearest(f.nodes(), pos);
        unsigned expect_n = 0, expect_nh = 0;
        if (distance(pos, f.nodes()[s]) <= r) {
            for (auto u : f.users()) {
                if (distance(u, f.nodes()[s]) > r) continue;
                ++expect_nh;
                expect_n += brute_nearest(f.nodes(), u) == s;
            }
        }
        EXPECT_EQ(n.value_at(t), expect_n) << "t=" << t;
        EXPECT_EQ(nh.value_at(t), expect_nh) << "t=" << t;
    }
}

TEST(SharingTrace, UpperBoundDominates) {
    const double r = 300.0, xi = 1e-4;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto tr = straight_trajectory(16.0, 3000.0);
        const auto f = field_for(tr, xi, r, 10 + seed);
        const auto n = sharing_trace(f, tr, r);
        const auto nh = upper_sharing_trace(f, tr, r);
        std::vector<double> probes = n.times;
        probes.insert(probes.end(), nh.times.begin(), nh.times.end());
        std::sort(probes.begin(), probes.end());
        for (std::size_t k = 0; k + 1 < probes.size(); ++k) {
            EXPECT_GE(nh.value_at(probes[k]), n.value_at(probes[k]));
            const double mid = 0.5 * (probes[k] + probes[k + 1]);
            EXPECT_GE(nh.value_at(mid), n.value_at(mid));
        }
    }
}

TEST(SharingTrace, UpperBoundIsPoissonWhenServed) {
    const double r = 200.0, xi = 4e-5;
    std::vector<double> counts;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto tr = straight_trajectory(16.0, 20000.0);
        const auto f = field_for(tr, xi, r, 100 + seed);
        const auto nh = upper_sharing_trace(f, tr, r);
        const auto cov = coverage_intervals(f, tr, r);
        for (double t = 100; t < tr.duration; t += 150)
            if (cov.contains(t)) counts.push_back(nh.value_at(t));
    }
    const auto s = summarize(counts);
    EXPECT_NEAR(s.mean, xi * std::numbers::pi * r * r, 3 * s.std_error);
}

TEST(SharingTrace, JumpsWhileServedOccurAtCellEdges) {
    const double r = 200.0, xi = 5e-5;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto tr = straight_trajectory(16.0, 5000.0);
        const auto f = field_for(tr, xi, r, 200 + seed);
        const auto n = sharing_trace(f, tr, r);
        const auto jm = jm_edge_crossings(f, tr, r);
        const auto cov = coverage_intervals(f, tr, r);
        std::size_t served_jumps = 0;
        for (std::size_t k = 0; k < n.jumps(); ++k) {
            const double t = n.times[k];
            const unsigned before = k == 0 ? n.initial : n.values[k - 1];
            if (before == 0 || n.values[k] == 0) {
                // Entering or leaving coverage, or a handoff into/out of an empty cell.
                continue;
            }
            ++served_jumps;
            const bool at_edge = std::any_of(jm.begin(), jm.end(), [t](double e) { return std::abs(e - t) < 1e-9; });
            EXPECT_TRUE(at_edge) << "t=" << t;
            EXPECT_TRUE(cov.contains(t));
        }
        EXPECT_LE(served_jumps, jm.size());
    }
}

TEST(JmCrossingIntensity, Values) {
    const double v = 16.0;
    EXPECT_NEAR(jm_crossing_intensity(kLambda, v, 1e6), 4 * v * std::sqrt(kLambda) / std::numbers::pi, 1e-15);
    EXPECT_NEAR(4 * v * std::sqrt(kLambda) / std::numbers::pi, 0.05747, 1e-5);
    EXPECT_NEAR(jm_crossing_intensity(kLambda, v, 200.0), 0.05747 * (0.8427 - 1.1284 * std::exp(-1.0)), 2e-5);
    EXPECT_NEAR(jm_crossing_intensity(kLambda, v, 200.0), 0.02457, 1e-4);
}

TEST(JmCrossingIntensity, MatchesMonteCarlo) {
    const double r = 200.0;
    std::vector<double> rates;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const auto tr = straight_trajectory(16.0, 20000.0);
        const auto f = field_for(tr, 0.0, r, 300 + seed);
        rates.push_back(jm_edge_crossings(f, tr, r).size() / tr.duration);
    }
    const auto s = summarize(rates);
    EXPECT_NEAR(s.mean, jm_crossing_intensity(kLambda, 16.0, r), 3 * s.std_error);
}

TEST(UnionArea, MatchesLensFormula) {
    for (double x : {0.3, 1.0, 2.5})
        for (double u : {0.0, 0.2, 1.0, 3.0})
            for (double a : {0.01, 0.7, 1.57, 2.5, 3.1}) {
                const double z = std::sqrt(u * u + x * x - 2 * u * x * std::cos(a));
                EXPECT_NEAR(union_area(x, u, a), union_by_lens(x, z, u), 1e-9) << x << " " << u << " " << a;
            }
}

TEST(PoissonHarmonicMean, Values) {
    EXPECT_EQ(poisson_harmonic_mean(0.0), 1.0);
    EXPECT_NEAR(poisson_harmonic_mean(1e-10), 1.0, 1e-10);
    double series = 0, term = std::exp(-1.0);
    for (int k = 0; k <= 50; ++k) {
        series += term / (k + 1);
        term /= (k + 1);
    }
    EXPECT_NEAR(poisson_harmonic_mean(1.0), series, 1e-14);
    EXPECT_NEAR(poisson_harmonic_mean(1.0), 0.6321, 1e-4);
    auto eng = make_engine(1);
    std::poisson_distribution<int> pd(3.7);
    std::vector<double> v(200000);
    for (auto& x : v) x = 1.0 / (pd(eng) + 1.0);
    const auto s = summarize(v);
    EXPECT_NEAR(poisson_harmonic_mean(3.7), s.mean, 3 * s.std_error);
    EXPECT_THROW(poisson_harmonic_mean(-1), InvalidArgument);
}

TEST(JmArea, BoundsMonotonicityAndStability) {
    double prev = 0;
    for (double r : {50.0, 100.0, 200.0, 400.0}) {
        const auto a = expected_jm_area(kLambda, r);
        EXPECT_TRUE(a.converged);
        EXPECT_LE(a.value, std::numbers::pi * r * r);
        EXPECT_GT(a.value, prev);
        prev = a.value;
        const auto tight = expected_jm_area(kLambda, r, {1e-9});
        EXPECT_NEAR(a.value / tight.value, 1.0, 1e-5);
    }
    // Small disc relative to the cells: the cell is almost the whole disc.
    const double r = 2.0;
    EXPECT_NEAR(expected_jm_area(kLambda, r).value / (std::numbers::pi * r * r), 1.0, 1e-3);
}

TEST(JmArea, MatchesMonteCarlo) {
    const auto q = expected_jm_area(kLambda, 200.0);
    const auto mc = simulate_jm_area(kLambda, 200.0, 6000, 5);
    EXPECT_NEAR(q.value, mc.mean, 3 * mc.std_error);
}

TEST(ChordLength, BoundsMonotonicityAndMonteCarlo) {
    double prev = 0;
    for (double r : {50.0, 100.0, 200.0, 400.0}) {
        const auto c = expected_chord_length(kLambda, r);
        EXPECT_TRUE(c.converged);
        EXPECT_LE(c.value, 2 * r);
        EXPECT_GT(c.value, prev);
        prev = c.value;
    }
    const auto mc = simulate_chord_length(kLambda, 200.0, 20000, 6);
    EXPECT_NEAR(expected_chord_length(kLambda, 200.0).value, mc.mean, 3 * mc.std_error);
    // Small disc: mean chord of a disc through a uniform interior point along a random line.
    const double r = 2.0;
    EXPECT_NEAR(expected_chord_length(kLambda, r).value, 16.0 * r / (3.0 * std::numbers::pi), 1e-2);
}

TEST(CoxMean, Properties) {
    EXPECT_EQ(cox_mean_sharing(1e-3, 0.0, kLambda, 200).value, 0.0);
    const auto c = cox_mean_sharing(1e-3, 1e-2, kLambda, 200);
    EXPECT_GT(c.value, c.from_other_roads);
    EXPECT_NEAR(c.from_other_roads, std::numbers::pi * 1e-3 * 1e-2 * expected_jm_area(kLambda, 200).value, 1e-9);
}

TEST(CoxMean, MatchesMonteCarlo) {
    const double lr = 1e-3, lt = 1e-2;
    const auto c = cox_mean_sharing(lr, lt, kLambda, 200.0);
    const auto mc = simulate_cox_sharing(lr, lt, kLambda, 200.0, 20000, 7);
    EXPECT_NEAR(c.value, mc.mean, 3 * mc.std_error);
}
