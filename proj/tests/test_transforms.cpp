#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pucci/transforms.hpp"

using namespace pucci;

TEST(Transform, PointValues) {
    for (double l : {0.0, 0.3, 1.0, 7.0}) {
        EXPECT_EQ(apply_transform(0.0, {TransformDirection::up, l}), 0.0);
        EXPECT_EQ(apply_transform(0.0, {TransformDirection::down, l}), 0.0);
    }
    EXPECT_NEAR(apply_transform(1.0, {TransformDirection::up, 1.0}), 1.718282, 1e-6);
    EXPECT_NEAR(apply_transform(1.0, {TransformDirection::down, 1.0}), 0.632121, 1e-6);
    EXPECT_EQ(apply_transform(2.5, {TransformDirection::up, 0.0}), 2.5);
    EXPECT_EQ(apply_transform(2.5, {TransformDirection::down, 0.0}), 2.5);
}

TEST(Transform, DownRejectsNegativeInput) {
    EXPECT_THROW(apply_transform(-0.1, {TransformDirection::down, 1.0}), ValidationError);
    EXPECT_THROW(apply_transform(1.0, {TransformDirection::up, -1.0}), ValidationError);
}

TEST(Transform, RoundTrip) {
    for (double l : {0.1, 1.0, 10.0}) {
        for (int k = 0; k <= 1000; ++k) {
            const double u = 10.0 * k / 1000.0;
            const double v = transform_up(u, l);
            EXPECT_NEAR(transform_up_inverse(v, l), u, 1e-12 * (1.0 + u));
            const double w = transform_down(u, l);
            EXPECT_LE(w, 1.0 / l);
            if (l * u < 10) {
                EXPECT_NEAR(transform_down_inverse(w, l), u, 1e-9 * (1.0 + u));
            }
        }
    }
}

TEST(Transform, OrderingAndMonotonicity) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> uu(0.0, 10.0), ul(0.0, 5.0);
    for (int k = 0; k < 5000; ++k) {
        const double u = uu(rng), l = ul(rng), e = 1e-3;
        EXPECT_LE(transform_down(u, l), u);
        EXPECT_LE(u, transform_up(u, l));
        EXPECT_LE(transform_up(u, l), transform_up(u + e, l));
        EXPECT_LE(transform_down(u, l), transform_down(u + e, l));
    }
}

TEST(Transform, ContinuityInL) {
    for (double l : {1e-2, 1e-3, 1e-5}) {
        for (double u : {0.0, 0.5, 1.0, 3.0}) {
            EXPECT_LE(std::abs(transform_up(u, l) - u), l * u * u * std::exp(l * u) + 1e-15);
        }
    }
}

TEST(Transform, GridFunctionAndInverse) {
    const auto g = RadialGrid::uniform(1.0, 2.0, 11);
    const auto u = GridFunction::sample(g, [](double r) { return r * r; });
    for (auto dir : {TransformDirection::up, TransformDirection::down}) {
        const auto v = apply_transform(u, {dir, 0.2});
        const auto back = invert_transform(v, {dir, 0.2});
        for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(back[i], u[i], 1e-13);
    }
}

TEST(CalcBounds, Examples) {
    auto c = calc_bounds(0.0, 1.0, 1.0);
    EXPECT_EQ(c.lhs_i, 0.0);
    EXPECT_EQ(c.lhs_ii, 0.0);
    c = calc_bounds(0.5, 1.0, 1.0);
    EXPECT_NEAR(c.lhs_i, 0.693147, 1e-6);
    EXPECT_GE(c.lhs_i, 0.5);
    c = calc_bounds(1.0, 1.0, 0.5);
    EXPECT_NEAR(c.lhs_ii, 0.693147, 1e-6);
    EXPECT_LE(c.lhs_ii, 1.0);
    EXPECT_THROW(calc_bounds(1.0, 1.0, 1.0), ValidationError);
    EXPECT_THROW(calc_bounds(-1.0, 1.0, 1.0), ValidationError);
}

TEST(CalcBounds, RandomSamples) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ul(0.0, 10.0), ut(0.0, 1.0);
    for (int k = 0; k < 10000; ++k) {
        const double l1 = ul(rng), l2 = ul(rng);
        const double r = l2 > 0 ? ut(rng) * 0.999 / l2 : ut(rng) * 10.0;
        const auto c = calc_bounds(r, l1, l2);
        EXPECT_GE(c.lhs_i, r * (1 - 1e-15));
        EXPECT_LE(c.lhs_ii, r * (1 + 1e-15));
    }
}

TEST(Sandwich, ZeroFieldGivesEqualities) {
    const auto g = RadialGrid::uniform(1.0, 2.0, 101);
    const auto u = GridFunction::sample(g, [](double) { return 0.0; });
    const auto rep = check_sandwich(u, 1.0, {1, 2, 2});
    EXPECT_TRUE(rep.passed);
    for (const auto& c : rep.chains) EXPECT_EQ(c.min_slack, 0.0);
}

// u = r with l = 1, lambda = Lambda = 1, N = 2: v = e^r - 1 and w = 1 - e^{-r}
// give M(v)/(1+v) = 1 + 1/r and M(w)/(1-w) = -1 + 1/r, so chains 0-1 and
// 2-3 hold with equality; the finite-difference slack must stay within 1e-6.
TEST(Sandwich, LinearFieldAgainstAnalyticSecondDerivatives) {
    const double h = 1e-3;
    const auto g = RadialGrid::uniform(1.0, 2.0, 1001);
    const auto u = GridFunction::sample(g, [](double r) { return r; });
    const Ellipticity ell{1, 1, 2};
    const auto rep = check_sandwich(u, 1.0, ell, h);
    EXPECT_TRUE(rep.passed) << rep.message;
    for (const auto& c : rep.chains) EXPECT_GE(c.min_slack, -1e-6);
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        const double r = g[i];
        const double vpp = std::exp(r), vp = std::exp(r), v = std::expm1(r);
        EXPECT_NEAR((vpp + vp / r) / (1 + v), 1.0 + 1.0 / r, 1e-12);
    }
    EXPECT_LE(rep.chains[0].min_slack, 1e-6);
    EXPECT_LE(rep.chains[1].min_slack, 1e-6);
}

TEST(Sandwich, IdentityTransformCollapsesChains) {
    const auto g = RadialGrid::uniform(1.0, 2.0, 201);
    const auto u = GridFunction::sample(g, [](double r) { return r * r; });
    const auto rep = check_sandwich(u, 0.0, {1, 3, 3});
    EXPECT_TRUE(rep.passed);
    for (const auto& c : rep.chains) EXPECT_NEAR(c.min_slack, 0.0, 1e-9);
}

TEST(Sandwich, AnisotropicFieldsOnGradedMesh) {
    const Ellipticity ell{1, 2, 3};
    const auto g = RadialGrid::graded(1.0, 2.0, 801, 1.002);
    for (auto f : {+[](double r) { return r; }, +[](double r) { return r * r; },
                   +[](double r) { return std::sin(3 * r); }}) {
        const auto u = GridFunction::sample(g, f);
        for (double l : {0.05, 0.1}) {
            const auto rep = check_sandwich(u, l, ell);
            EXPECT_TRUE(rep.passed) << rep.message;
        }
    }
}

TEST(Sandwich, ReportsWorstNodeOfViolation) {
    // a coarse mesh and a large l make the truncation error visible
    const auto g = RadialGrid::uniform(1.0, 2.0, 6);
    const auto u = GridFunction::sample(g, [](double r) { return 4 * r * r; });
    const auto rep = check_sandwich(u, 3.0, {1, 1, 2}, 0.0, 1e-6);
    EXPECT_FALSE(rep.passed);
    EXPECT_NE(rep.message.find("node"), std::string::npos);
}
