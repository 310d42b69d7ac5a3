#include <cmath>

#include <gtest/gtest.h>

#include "pucci/singular.hpp"

using namespace pucci;

namespace {

ProblemSpec base(double mu, double alpha) {
    ProblemSpec s;
    s.ellipticity = {1, 1, 2};
    s.growth = {0.1, 0.0, 0.0, 0.1};
    s.forcing = {mu, alpha, 1.0, 1.0, 1.0};
    s.geometry = {1.0, 2.0, 1.0};
    return s;
}

SolveConfig quick(std::size_t nodes = 1025, int steps = 4) {
    SolveConfig c;
    c.nodes = nodes;
    c.delta_steps = steps;
    return c;
}

// brackets re-evaluated on another grid from the certified barrier constants
std::pair<GridFunction, GridFunction> brackets_on(const RadialGrid& g, const SingularBrackets& br, const ProblemSpec& s) {
    const double l2 = derived_constants(s.growth, s.ellipticity).l2;
    std::vector<double> lo(g.size(), 0.0), up(g.size(), 0.0);
    up.back() = s.geometry.L;
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        lo[i] = eval_barrier(*br.sub, g[i]).value;
        up[i] = transform_up_inverse(eval_barrier(*br.super, g[i]).value, l2);
    }
    return {GridFunction(g, lo), GridFunction(g, up)};
}

} // namespace

TEST(Solver, LinearProblemReproducesLogProfile) {
    ProblemSpec s = base(0, 1);
    s.growth = {0, 0, 0, 0};
    s.forcing.M = 0.0;
    const auto rep = solve_singular(s, {});
    const auto& u = rep.solution;
    double err = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        err = std::max(err, std::abs(u[i] - std::log(u.r(i)) / std::log(2.0)));
    EXPECT_LE(err, 1e-6);
}

TEST(Solver, UnforcedSolutionDoesNotDependOnDelta) {
    ProblemSpec s = base(0, 1);
    s.forcing.M = 0.0;
    const auto br = singular_brackets(s, quick());
    const auto a = solve_regularized(s, 1e-1, br.lower, br.upper, quick());
    const auto b = solve_regularized(s, 1e-6, br.lower, br.upper, quick());
    for (std::size_t i = 0; i < a.solution.size(); ++i) EXPECT_EQ(a.solution[i], b.solution[i]);
}

TEST(Solver, RefinedMeshAgreesAtMidRadius) {
    const auto s = base(1, 1);
    const auto cfg = quick(1025);
    const auto br = singular_brackets(s, cfg);
    const double delta = 1e-3;
    const auto coarse = solve_regularized(s, delta, br.lower, br.upper, cfg);
    const auto fine_grid = br.lower.grid().refined(4);
    const auto [lo, up] = brackets_on(fine_grid, br, s);
    const auto fine = solve_regularized(s, delta, lo, up, cfg);
    EXPECT_NEAR(coarse.solution.interpolate(1.5), fine.solution.interpolate(1.5), 1e-5);
    // and the gap shrinks under refinement
    const auto mid_grid = br.lower.grid().refined(2);
    const auto [lo2, up2] = brackets_on(mid_grid, br, s);
    const auto mid = solve_regularized(s, delta, lo2, up2, cfg);
    EXPECT_LT(std::abs(mid.solution.interpolate(1.5) - fine.solution.interpolate(1.5)),
              std::abs(coarse.solution.interpolate(1.5) - fine.solution.interpolate(1.5)));
}

TEST(Solver, Preconditions) {
    const auto s = base(0, 1);
    const auto br = singular_brackets(s, quick());
    EXPECT_THROW(solve_regularized(s, 1e-2, br.upper, br.lower, quick()), ValidationError);
    const GridFunction zero(br.lower.grid(), std::vector<double>(br.lower.size(), 0.0));
    EXPECT_THROW(solve_regularized(s, 0.0, zero, br.upper, quick()), ValidationError);
    EXPECT_THROW(solve_regularized(s, -1.0, br.lower, br.upper, quick()), ValidationError);
    SolveConfig bad = quick();
    bad.delta0 = 0.0;
    EXPECT_THROW(solve_singular(s, bad), ValidationError);
}

TEST(Solver, AscendingIteratesAreMonotoneAndBracketed) {
    for (auto [mu, alpha] : {std::pair{1.0, 1.0}, std::pair{0.0, 1.0}, std::pair{0.0, 3.0}}) {
        const auto s = base(mu, alpha);
        auto cfg = quick();
        const auto br = singular_brackets(s, cfg);
        std::vector<std::vector<double>> its;
        cfg.on_iterate = [&](const std::vector<double>& w) { its.push_back(w); };
        const auto rep = solve_regularized(s, 1e-2, br.lower, br.upper, cfg);
        ASSERT_GE(its.size(), 2u);
        for (std::size_t k = 1; k < its.size(); ++k)
            for (std::size_t i = 1; i + 1 < its[k].size(); ++i) ASSERT_GE(its[k][i], its[k - 1][i]) << "iterate " << k;
        for (std::size_t i = 0; i < rep.solution.size(); ++i) {
            EXPECT_GE(rep.solution[i], br.lower[i]);
            EXPECT_LE(rep.solution[i], br.upper[i]);
        }
        EXPECT_EQ(rep.bracket_violations, 0);
        EXPECT_LE(rep.residual_max, 1e-9);
    }
}

TEST(Solver, DescendingLimitMatchesAscendingLimit) {
    const auto s = base(0, 3);
    const auto cfg = quick();
    const auto br = singular_brackets(s, cfg);
    const double delta = 1e-2;
    const auto up = solve_regularized(s, delta, br.lower, br.upper, cfg);
    std::vector<std::vector<double>> its;
    auto c2 = cfg;
    c2.on_iterate = [&](const std::vector<double>& w) { its.push_back(w); };
    const auto down = descend_regularized(s, delta, br.upper, up.solution, c2);
    for (std::size_t k = 1; k < its.size(); ++k)
        for (std::size_t i = 1; i + 1 < its[k].size(); ++i) ASSERT_LE(its[k][i], its[k - 1][i] + 1e-12);
    for (std::size_t i = 0; i < up.solution.size(); ++i) EXPECT_NEAR(up.solution[i], down.solution[i], 1e-7);
}

TEST(Solver, ContinuationIsMonotoneInDelta) {
    for (auto [mu, alpha] : {std::pair{1.0, 1.0}, std::pair{0.0, 3.0}}) {
        const auto s = base(mu, alpha);
        const auto cfg = quick(1025, 6);
        const auto rep = solve_singular(s, cfg);
        EXPECT_EQ(rep.monotonicity_violations, 0);
        ASSERT_EQ(rep.deltas.size(), 7u);
        for (std::size_t k = 1; k < rep.deltas.size(); ++k) EXPECT_DOUBLE_EQ(rep.deltas[k], rep.deltas[k - 1] / 2);
        // independent solves at two deltas are ordered the same way
        const auto br = singular_brackets(s, cfg);
        const auto big = solve_regularized(s, 1e-2, br.lower, br.upper, cfg);
        const auto small = solve_regularized(s, 2.5e-3, big.solution, br.upper, cfg);
        for (std::size_t i = 0; i < big.solution.size(); ++i) EXPECT_GE(small.solution[i], big.solution[i] - 1e-12);
    }
}

TEST(Solver, SolutionRespectsHopfAndIntegratingFactorBounds) {
    auto s = base(1, 1);
    s.geometry.L = 0.0;
    const auto rep = solve_singular(s, quick());
    EXPECT_TRUE(rep.hopf_ok);
    EXPECT_GT(rep.hopf_radius, 1.0);
    EXPECT_LT(rep.hopf_radius, 2.0);
    const Ellipticity ell{1, 2, 3};
    const auto f = integrating_factors(rep.solution, ell);
    const auto dc = derived_constants({}, ell);
    for (std::size_t i = 0; i < f.xi.size(); ++i) {
        const double r = f.xi.r(i), a = std::pow(r, dc.Nplus - 1), b = std::pow(r, dc.Nminus - 1);
        EXPECT_GE(f.xi[i], std::min(a, b) * (1 - 1e-12));
        EXPECT_LE(f.xi[i], std::max(a, b) * (1 + 1e-12));
    }
}

TEST(CompareAudit, SubBelowSolutionBelowSuper) {
    const auto s = base(0, 1);
    const auto cfg = quick();
    const auto br = singular_brackets(s, cfg);
    const auto rep = solve_regularized(s, cfg.delta0, br.lower, br.upper, cfg);
    auto a = compare_audit(br.lower, rep.solution, s, cfg.delta0);
    EXPECT_TRUE(a.passed);
    EXPECT_TRUE(a.sub_ok);
    a = compare_audit(rep.solution, br.upper, s, cfg.delta0);
    EXPECT_TRUE(a.passed);
    EXPECT_TRUE(a.super_ok);
}

TEST(CompareAudit, DetectsOrderFailureAndBadBoundary) {
    const auto s = base(0, 1);
    const auto br = singular_brackets(s, quick());
    std::vector<double> v = br.lower.values();
    v[v.size() / 2] -= 0.5;
    const auto a = compare_audit(br.lower, GridFunction(br.lower.grid(), v), s, 1e-2);
    EXPECT_FALSE(a.passed);
    EXPECT_EQ(a.worst_node, v.size() / 2);
    std::vector<double> w = br.upper.values();
    w.back() -= 1.0;
    EXPECT_THROW(compare_audit(br.upper, GridFunction(br.upper.grid(), w), s, 1e-2), ValidationError);
}

TEST(Solver, IterationBudgetExhaustionIsNumericalError) {
    const auto s = base(0, 1);
    auto cfg = quick();
    const auto br = singular_brackets(s, cfg);
    cfg.max_inner = 1;
    EXPECT_THROW(solve_regularized(s, 1e-2, br.lower, br.upper, cfg), NumericalError);
}

TEST(Solver, ContinuationStagnationIsNumericalError) {
    const auto s = base(0, 3);
    auto cfg = quick(1025, 2);
    cfg.continuation_tol = 1e-12;
    EXPECT_THROW(solve_singular(s, cfg), NumericalError);
}
