#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pucci/params.hpp"

using namespace pucci;

namespace {

ProblemSpec base_spec() {
    ProblemSpec s;
    s.ellipticity = {1.0, 2.0, 2};
    s.growth = {0.0, 0.0, 0.0, 1.0};
    s.forcing = {0.0, 1.0, 1.0, 1.0, 1.0};
    s.geometry = {1.0, 2.0, 1.0};
    return s;
}

std::string validation_message(const ProblemSpec& s) {
    try {
        validate(s);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST(Validate, AcceptsConsistentSpec) { EXPECT_NO_THROW(validate(base_spec())); }

TEST(Validate, NamesTheViolatedInvariant) {
    auto s = base_spec();
    s.ellipticity.lambda = 2.0;
    s.ellipticity.Lambda = 1.0;
    EXPECT_EQ(validation_message(s), "lambda ≤ Lambda violated");

    s = base_spec();
    s.forcing.alpha = 0.0;
    EXPECT_EQ(validation_message(s), "alpha must be positive");

    s = base_spec();
    s.geometry.rho = 2.0;
    EXPECT_EQ(validation_message(s), "rho < R violated");

    s = base_spec();
    s.ellipticity.lambda = -1.0;
    EXPECT_EQ(validation_message(s), "lambda must be positive");

    s = base_spec();
    s.forcing.C1 = 3.0;
    EXPECT_EQ(validation_message(s), "C1 ≤ C2 violated");

    s = base_spec();
    s.growth.B = -0.1;
    EXPECT_EQ(validation_message(s), "B must be nonnegative");
}

TEST(Pucci, DiagonalExample) {
    Eigen::MatrixXd x(2, 2);
    x << 1, 0, 0, -1;
    EXPECT_DOUBLE_EQ(pucci::pucci(x, {1, 2, 2}, PucciSign::plus), 1.0);
    EXPECT_DOUBLE_EQ(pucci::pucci(x, {1, 2, 2}, PucciSign::minus), -1.0);
}

TEST(Pucci, IdentityGivesNLambda) {
    EXPECT_DOUBLE_EQ(pucci::pucci(Eigen::MatrixXd::Identity(3, 3), {1, 2, 3}, PucciSign::plus), 6.0);
}

TEST(Pucci, DegenerateEllipticityIsTrace) {
    std::mt19937_64 rng(7);
    for (int k = 0; k < 50; ++k) {
        const auto x = oracle::random_symmetric(rng, 3);
        EXPECT_NEAR(pucci::pucci(x, {1, 1, 3}, PucciSign::plus), x.trace(), 1e-12);
        EXPECT_NEAR(pucci::pucci(x, {1, 1, 3}, PucciSign::minus), x.trace(), 1e-12);
    }
}

TEST(Pucci, RejectsNonSymmetric) {
    Eigen::MatrixXd x(2, 2);
    x << 1, 2, 0, 1;
    EXPECT_THROW(pucci::pucci(x, {1, 2, 2}, PucciSign::plus), ValidationError);
}

TEST(Pucci, ConvexityConcavityAndHomogeneity) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ut(0.0, 5.0);
    const Ellipticity ell{0.5, 3.0, 3};
    for (int k = 0; k < 500; ++k) {
        const auto x = oracle::random_symmetric(rng, 3);
        const auto y = oracle::random_symmetric(rng, 3);
        EXPECT_LE(pucci::pucci(x + y, ell, PucciSign::plus),
                  pucci::pucci(x, ell, PucciSign::plus) + pucci::pucci(y, ell, PucciSign::plus) + 1e-10);
        EXPECT_GE(pucci::pucci(x + y, ell, PucciSign::minus),
                  pucci::pucci(x, ell, PucciSign::minus) + pucci::pucci(y, ell, PucciSign::minus) - 1e-10);
        EXPECT_LE(pucci::pucci(x, ell, PucciSign::minus), pucci::pucci(x, ell, PucciSign::plus));
        const double t = ut(rng);
        for (auto sg : {PucciSign::plus, PucciSign::minus})
            EXPECT_NEAR(pucci::pucci(t * x, ell, sg), t * pucci::pucci(x, ell, sg), 1e-12 * (1 + std::abs(t * pucci::pucci(x, ell, sg))));
    }
}

TEST(Pucci, MatchesSupInfOracle) {
    std::mt19937_64 rng(2024);
    const double lo = 1.0, hi = 2.0;
    const Ellipticity ell{lo, hi, 3};
    for (int k = 0; k < 40; ++k) {
        const auto x = oracle::random_symmetric(rng, 3);
        for (bool plus : {true, false}) {
            const auto o = oracle::pucci_sup_inf(rng, x, lo, hi, plus, 1000);
            const double p = pucci::pucci(x, ell, plus ? PucciSign::plus : PucciSign::minus);
            if (plus) EXPECT_GE(p, o.sampled - 1e-9);
            else EXPECT_LE(p, o.sampled + 1e-9);
            EXPECT_NEAR(p, o.attained, 1e-9);
        }
    }
}

TEST(DerivedConstants, Examples) {
    auto d = derived_constants({2, 0, 0, 1}, {1, 4, 2});
    EXPECT_DOUBLE_EQ(d.l1, 0.5);
    EXPECT_DOUBLE_EQ(d.l2, 2.0);
    d = derived_constants({0, 0, 0, 1}, {1, 2, 3});
    EXPECT_DOUBLE_EQ(d.Nplus, 2.0);
    EXPECT_DOUBLE_EQ(d.Nminus, 5.0);
    EXPECT_EQ(d.l1, 0.0);
    EXPECT_EQ(d.l2, 0.0);
    d = derived_constants({1, 0, 0, 1}, {1.5, 1.5, 4});
    EXPECT_DOUBLE_EQ(d.Nplus, 4.0);
    EXPECT_DOUBLE_EQ(d.Nminus, 4.0);
}

TEST(DerivedConstants, OrderingOnRandomInputs) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    for (int k = 0; k < 200; ++k) {
        const double a = u(rng), b = u(rng);
        const Ellipticity ell{std::min(a, b), std::max(a, b), 1 + k % 5};
        const auto d = derived_constants({u(rng), 0, 0, 1}, ell);
        EXPECT_LE(d.l1, d.l2);
        EXPECT_LE(d.Nplus, ell.dim + 1e-12);
        EXPECT_GE(d.Nminus, ell.dim - 1e-12);
    }
}

TEST(EvalModel, Examples) {
    const Ellipticity ell{1, 2, 2};
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
    EXPECT_EQ(eval_model(ModelOperator::F2plus, 0.0, zero, ell, {}), 0.0);
    EXPECT_DOUBLE_EQ(eval_model(ModelOperator::F1plus, 1.0, zero, ell, {2, 3, 0, 1}), 5.0);
    EXPECT_DOUBLE_EQ(eval_model(ModelOperator::F1minus, 1.0, zero, ell, {2, 3, 0, 1}), -5.0);
}

TEST(EvalModel, SignOrdering) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    const Ellipticity ell{0.7, 1.9, 3};
    for (int k = 0; k < 300; ++k) {
        const GrowthParams g{u(rng), u(rng), 0, 1};
        const auto x = oracle::random_symmetric(rng, 3);
        const double p = u(rng);
        const double f1m = eval_model(ModelOperator::F1minus, p, x, ell, g);
        const double f2m = eval_model(ModelOperator::F2minus, p, x, ell, g);
        const double f2p = eval_model(ModelOperator::F2plus, p, x, ell, g);
        const double f1p = eval_model(ModelOperator::F1plus, p, x, ell, g);
        EXPECT_LE(f1m, f2m + 1e-12);
        EXPECT_LE(f2m, f2p + 1e-12);
        EXPECT_LE(f2p, f1p + 1e-12);
    }
}

TEST(Envelope, Examples) {
    const Ellipticity ell{1, 2, 2};
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
    Eigen::VectorXd p(2);
    p << 0.3, -0.2;
    auto e = sc_envelope(zero, p, p, 0.5, 0.5, ell, {1, 1, 1, 1});
    EXPECT_EQ(e.lower, 0.0);
    EXPECT_EQ(e.upper, 0.0);
    Eigen::VectorXd p1(2), p2 = Eigen::VectorXd::Zero(2);
    p1 << 1, 0;
    e = sc_envelope(zero, p1, p2, 0.0, 0.0, ell, {1, 1, 0, 1});
    EXPECT_DOUBLE_EQ(e.lower, -2.0);
    EXPECT_DOUBLE_EQ(e.upper, 2.0);
}

TEST(Envelope, ContainsModelDifferences) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::normal_distribution<double> nd;
    const Ellipticity ell{0.5, 2.5, 3};
    for (int k = 0; k < 500; ++k) {
        const GrowthParams g{u(rng), u(rng), u(rng), 1};
        const auto m1 = oracle::random_symmetric(rng, 3), m2 = oracle::random_symmetric(rng, 3);
        Eigen::VectorXd p1(3), p2(3);
        for (int i = 0; i < 3; ++i) {
            p1(i) = nd(rng);
            p2(i) = nd(rng);
        }
        const double r1 = nd(rng), r2 = nd(rng);
        const auto e = sc_envelope(m1 - m2, p1, p2, r1, r2, ell, g);
        EXPECT_LE(e.lower, e.upper);
        for (auto model : {ModelOperator::F1plus, ModelOperator::F1minus, ModelOperator::F2plus,
                           ModelOperator::F2minus}) {
            const double diff = eval_model(model, p1.norm(), m1, ell, g) - eval_model(model, p2.norm(), m2, ell, g);
            EXPECT_GE(diff, e.lower - 1e-10);
            EXPECT_LE(diff, e.upper + 1e-10);
        }
    }
}

TEST(Config, RoundTrip) {
    auto s = base_spec();
    s.growth.B = 0.1;
    s.forcing.alpha = 1.0 / 3.0;
    s.geometry.R = 2.000000000000001;
    const auto text = to_config_text(problem_to_key_values(s));
    const auto back = problem_from_key_values(parse_key_values(text));
    EXPECT_EQ(to_config_text(problem_to_key_values(back)), text);
    EXPECT_EQ(back.forcing.alpha, s.forcing.alpha);
    EXPECT_EQ(back.geometry.R, s.geometry.R);
}

TEST(Config, RejectsMalformedLines) {
    EXPECT_THROW(parse_key_values("lambda 1\n"), ValidationError);
    EXPECT_THROW(problem_from_key_values(parse_key_values("lambda = one\n")), ValidationError);
    EXPECT_THROW(problem_from_key_values(parse_key_values("dim = 2.5\n")), ValidationError);
    const auto kv = parse_key_values("# comment\n mu = 2 # trailing\n\n");
    EXPECT_EQ(kv.at("mu"), "2");
}
