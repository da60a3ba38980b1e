#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "mobrate/geometry.hpp"

using namespace mobrate;

namespace {

std::size_t brute_nearest(const std::vector<Point>& pts, Point q) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (distance_sq(q, pts[i]) < distance_sq(q, pts[best])) best = i;
    return best;
}

struct MeanSe {
    double mean, se;
};
MeanSe mean_se(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / (n - 1) / n)};
}

} // namespace

TEST(PoissonField, ZeroIntensityIsEmpty) {
    EXPECT_TRUE(sample_poisson_field(0.0, {0, 0, 10, 10}, 1).empty());
}

TEST(PoissonField, MeanCount) {
    const double lambda = 1.0 / (std::numbers::pi * 200.0 * 200.0);
    const Window w{0, 0, 10000, 10000};
    std::vector<double> counts;
    for (std::uint64_t s = 0; s < 400; ++s) counts.push_back(static_cast<double>(sample_poisson_field(lambda, w, s).size()));
    const auto [m, se] = mean_se(counts);
    EXPECT_NEAR(m, 795.77, 3 * se);
    EXPECT_NEAR(1e8 * lambda, 795.77, 0.01);
}

TEST(PoissonField, DeterministicAndInsideWindow) {
    const Window w{-5, 2, 40, 9};
    const auto a = sample_poisson_field(0.3, w, 77);
    const auto b = sample_poisson_field(0.3, w, 77);
    ASSERT_EQ(a, b);
    for (auto p : a) EXPECT_TRUE(w.contains(p));
    EXPECT_NE(sample_poisson_field(0.3, w, 78), a);
}

TEST(PoissonField, RejectsBadInput) {
    EXPECT_THROW(sample_poisson_field(-1, {0, 0, 1, 1}, 1), InvalidArgument);
    EXPECT_THROW(sample_poisson_field(1, {0, 0, 0, 1}, 1), InvalidArgument);
    EXPECT_THROW(sample_poisson_field(1e9, {0, 0, 1e3, 1e3}, 1), InvalidArgument);
}

TEST(PoissonField, VoidProbability) {
    // Disc of radius r at the centre of the window is empty with probability exp(-lambda pi r^2).
    const double lambda = 1e-4, r = 80.0;
    const Window w{-200, -200, 200, 200};
    int empty = 0;
    const int reps = 10000;
    for (int s = 0; s < reps; ++s) {
        const FieldSample f = FieldSample::sample(lambda, 0.0, w, s);
        if (f.node_index().count_within({0, 0}, r) == 0) ++empty;
    }
    const double p = std::exp(-lambda * std::numbers::pi * r * r);
    const double se = std::sqrt(p * (1 - p) / reps);
    EXPECT_NEAR(static_cast<double>(empty) / reps, p, 3 * se);
}

TEST(NearestNode, SimpleCases) {
    FieldSample one({{3, 4}}, {}, {-10, -10, 10, 10}, 0);
    auto nn = one.nearest_node({0, 0});
    ASSERT_TRUE(nn);
    EXPECT_EQ(nn->index, 0u);
    EXPECT_DOUBLE_EQ(nn->distance, 5.0);
    EXPECT_DOUBLE_EQ(one.nearest_node({3, 4})->distance, 0.0);

    FieldSample none({}, {}, {0, 0, 1, 1}, 0);
    EXPECT_FALSE(none.nearest_node({0.5, 0.5}));
}

TEST(NearestNode, TieBreaksToLowestIndex) {
    FieldSample f({{1, 0}, {-1, 0}, {0, 1}}, {}, {-5, -5, 5, 5}, 0);
    EXPECT_EQ(f.nearest_node({0, 0})->index, 0u);
    FieldSample g({{5, 5}, {1, 0}, {-1, 0}}, {}, {-5, -5, 5, 5}, 0);
    EXPECT_EQ(g.nearest_node({0, 0})->index, 1u);
}

TEST(NearestNode, MatchesBruteForce) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Window w{0, 0, 1000, 600};
        const auto f = FieldSample::sample(1000.0 / w.area(), 0.0, w, seed);
        Engine eng = make_engine(seed + 1000);
        std::uniform_real_distribution<double> ux(-300, 1300), uy(-300, 900);
        for (int k = 0; k < 500; ++k) {
            const Point q{ux(eng), uy(eng)};
            const auto nn = f.nearest_node(q);
            ASSERT_TRUE(nn);
            const auto b = brute_nearest(f.nodes(), q);
            EXPECT_EQ(nn->index, b);
            EXPECT_DOUBLE_EQ(nn->distance, distance(q, f.nodes()[b]));
        }
    }
}

TEST(NearestNode, ThinStripWindow) {
    const Window w{0, -2, 1e6, 2};
    const auto f = FieldSample::sample(1e-4, 0.0, w, 3);
    Engine eng = make_engine(9);
    std::uniform_real_distribution<double> ux(0, 1e6), uy(-2, 2);
    for (int k = 0; k < 300; ++k) {
        const Point q{ux(eng), uy(eng)};
        EXPECT_EQ(f.nearest_node(q)->index, brute_nearest(f.nodes(), q));
    }
}

TEST(WithinQuery, MatchesBruteForce) {
    const Window w{0, 0, 500, 500};
    const auto f = FieldSample::sample(0.004, 0.0, w, 5);
    Engine eng = make_engine(11);
    std::uniform_real_distribution<double> u(-50, 550);
    for (int k = 0; k < 200; ++k) {
        const Point q{u(eng), u(eng)};
        const double r = 5 + 60 * uniform01(eng);
        std::size_t brute = 0;
        for (auto p : f.nodes()) brute += distance_sq(p, q) <= r * r;
        EXPECT_EQ(f.node_index().count_within(q, r), brute);
    }
}

TEST(JohnsonMehl, Membership) {
    FieldSample f({{0, 0}, {10, 0}}, {}, {-50, -50, 50, 50}, 0);
    EXPECT_TRUE(f.in_johnson_mehl({0, 0}, 0, 1e-9));
    EXPECT_FALSE(f.in_johnson_mehl({3, 0}, 0, 2.0));
    EXPECT_TRUE(f.in_johnson_mehl({3, 0}, 0, 4.0));
    EXPECT_FALSE(f.in_johnson_mehl({6, 0}, 0, 8.0));
    EXPECT_THROW(f.in_johnson_mehl({0, 0}, 2, 1.0), InvalidArgument);
}

TEST(JohnsonMehl, MatchesDefinition) {
    const Window w{0, 0, 800, 800};
    const auto f = FieldSample::sample(2e-4, 0.0, w, 21);
    Engine eng = make_engine(4);
    std::uniform_real_distribution<double> u(0, 800);
    for (int k = 0; k < 2000; ++k) {
        const Point q{u(eng), u(eng)};
        const std::size_t i = static_cast<std::size_t>(uniform01(eng) * f.nodes().size());
        const double r = 100 * uniform01(eng);
        const bool def = brute_nearest(f.nodes(), q) == i && distance(q, f.nodes()[i]) <= r;
        EXPECT_EQ(f.in_johnson_mehl(q, i, r), def);
    }
}

TEST(LineField, EmptyWithoutLines) {
    const auto lf = sample_line_field(0.0, 1.0, {0, 0, 100, 100}, 1);
    EXPECT_TRUE(lf.lines.empty());
    EXPECT_TRUE(lf.users().empty());
}

TEST(LineField, PlanarIntensity) {
    const double lr = 2e-3, lt = 0.05;
    const Window w{0, 0, 1000, 1000};
    std::vector<double> counts;
    for (std::uint64_t s = 0; s < 300; ++s) {
        const auto lf = sample_line_field(lr, lt, w, s);
        std::size_t n = 0;
        for (auto p : lf.users()) n += w.padded(1e-6).contains(p);
        EXPECT_EQ(n, lf.users().size());
        counts.push_back(static_cast<double>(n));
    }
    const auto [m, se] = mean_se(counts);
    EXPECT_NEAR(m, std::numbers::pi * lr * lt * w.area(), 3 * se);
}

TEST(LineField, MoreDispersedThanPoisson) {
    const double lr = 1e-3, lt = 0.1;
    const Window w{0, 0, 600, 600};
    std::vector<double> counts;
    for (std::uint64_t s = 0; s < 400; ++s) counts.push_back(static_cast<double>(sample_line_field(lr, lt, w, s).users().size()));
    const auto [m, se] = mean_se(counts);
    double var = 0;
    for (double c : counts) var += (c - m) * (c - m);
    var /= counts.size() - 1;
    EXPECT_GT(var, 3.0 * m); // a PPP of equal mean would have var == mean
}

TEST(LineField, Deterministic) {
    const auto a = sample_line_field(1e-3, 0.1, {0, 0, 500, 500}, 9).users();
    const auto b = sample_line_field(1e-3, 0.1, {0, 0, 500, 500}, 9).users();
    EXPECT_EQ(a, b);
}
