#include "ucp/reduction.hpp"
#include "ucp/tensor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace ucp;

namespace {

ElasticityCoefficients constant_tensor(double a1111, double a1112, double a1122, double a1212, double a1222,
                                       double a2222)
{
    ElasticityCoefficients c;
    c.a1111 = ScalarField::constant(a1111);
    c.a1112 = ScalarField::constant(a1112);
    c.a1122 = ScalarField::constant(a1122);
    c.a1212 = ScalarField::constant(a1212);
    c.a1222 = ScalarField::constant(a1222);
    c.a2222 = ScalarField::constant(a2222);
    return c;
}

std::array<double, 6> values(const OperatorCoefficients& op, double x, double y)
{
    std::array<double, 6> out;
    for (int k = 0; k < 6; ++k)
        out[k] = op[k](x, y);
    return out;
}

// Second-order symbol rank from explicit 2x2 minors (no SVD).
int rank_by_minors(const Eigen::Matrix<double, 2, 3>& m, std::initializer_list<int> cols, double tol)
{
    std::vector<int> c(cols);
    double scale = 0.0, minor = 0.0;
    for (int r = 0; r < 2; ++r)
        for (int k : c)
            scale = std::max(scale, std::abs(m(r, k)));
    if (scale <= tol)
        return 0;
    for (std::size_t a = 0; a < c.size(); ++a)
        for (std::size_t b = a + 1; b < c.size(); ++b)
            minor = std::max(minor, std::abs(m(0, c[a]) * m(1, c[b]) - m(0, c[b]) * m(1, c[a])));
    return minor > tol * scale * scale ? 2 : 1;
}

} // namespace

TEST(Reduction, ConstantLame)
{
    const double mu = 1.5, lambda = 0.75;
    const U2System s = reduce(isotropic(mu, lambda));
    EXPECT_EQ(values(s.hyper, 0.1, 0.2), (std::array<double, 6>{0, mu + lambda, 0, 0, 0, 0}));
    EXPECT_EQ(values(s.ell, 0.1, 0.2), (std::array<double, 6>{mu, 0, 2 * mu + lambda, 0, 0, 0}));
}

TEST(Reduction, CounterexampleTensor)
{
    const U2System s = reduce(constant_tensor(100, 0, 0, 2, 1, 1));
    const auto h = values(s.hyper, 0, 0), e = values(s.ell, 0, 0);
    EXPECT_EQ((std::array<double, 3>{h[0], h[1], h[2]}), (std::array<double, 3>{0, 2, 1}));
    EXPECT_EQ((std::array<double, 3>{e[0], e[1], e[2]}), (std::array<double, 3>{2, 2, 1}));
}

TEST(Reduction, ZeroTensor)
{
    const U2System s = reduce(ElasticityCoefficients{});
    for (int k = 0; k < 6; ++k) {
        EXPECT_EQ(s.hyper[k](0.3, 0.4), 0.0);
        EXPECT_EQ(s.ell[k](0.3, 0.4), 0.0);
    }
    EXPECT_EQ(second_order_rank(s, 0, 0), 0);
}

TEST(Reduction, LowerOrderWiring)
{
    ElasticityCoefficients c = isotropic(1.0, 1.0);
    c.b[0][1][0] = parse("x");      // b121
    c.b[0][1][1] = parse("y");      // b122
    c.c[0][1] = parse("x*y");       // c12
    c.b[1][1][0] = parse("exp(y)"); // b221
    c.b[1][1][1] = parse("2");      // b222
    c.c[1][1] = parse("x + y");     // c22
    const U2System s = reduce(c);
    const double x = 0.3, y = -0.7;
    EXPECT_EQ(s.hyper[3](x, y), x);
    EXPECT_EQ(s.hyper[4](x, y), y);
    EXPECT_EQ(s.hyper[5](x, y), x * y);
    EXPECT_EQ(s.ell[3](x, y), std::exp(y));
    EXPECT_EQ(s.ell[4](x, y), 2.0);
    EXPECT_EQ(s.ell[5](x, y), x + y);
}

TEST(Reduction, SecondOrderRank)
{
    const U2System a = reduce(constant_tensor(100, 0, 0, 2, 1, 1));
    EXPECT_EQ(second_order_rank(a, 0, 0), 2);
    EXPECT_EQ(second_order_rank(a, 0, 0, 1e-9, ColumnMask{false, true, true}), 1);
    EXPECT_EQ(second_order_rank(reduce(isotropic(1.0, 1.0)), 0, 0), 2);

    const U2System b = reduce(constant_tensor(100, 2, 4, 2, 3, 100));
    EXPECT_EQ(second_order_rank(b, 0, 0, 1e-9, ColumnMask{true, true, false}), 1);
    EXPECT_EQ(second_order_rank(b, 0, 0, 1e-9, ColumnMask{false, true, true}), 2);
}

TEST(Reduction, RankMatchesMinorsOracle)
{
    std::mt19937 rng(43);
    std::uniform_int_distribution<int> small(-2, 2);
    for (int trial = 0; trial < 300; ++trial) {
        const double v[6] = {double(small(rng)), double(small(rng)), double(small(rng)),
                             double(small(rng)), double(small(rng)), double(small(rng))};
        const U2System s = reduce(constant_tensor(v[0], v[1], v[2], v[3], v[4], v[5]));
        const auto m = second_order_symbols(s, 0, 0);
        EXPECT_EQ(second_order_rank(s, 0, 0), rank_by_minors(m, {0, 1, 2}, 1e-9));
        EXPECT_EQ(second_order_rank(s, 0, 0, 1e-9, ColumnMask{false, true, true}), rank_by_minors(m, {1, 2}, 1e-9));
        EXPECT_EQ(second_order_rank(s, 0, 0, 1e-9, ColumnMask{true, true, false}), rank_by_minors(m, {0, 1}, 1e-9));
    }
}

TEST(Reduction, FamiliesSolveThePair)
{
    const Region r = Region::square(0, 0, 0.3);
    const U2System lame = reduce(isotropic(1.0, 1.0));
    for (const char* u : {"1", "x", "y", "x^2 - y^2/3"}) {
        const Residual res = residual(lame, parse(u), r, 9);
        EXPECT_LE(res.hyper, 1e-12) << u;
        EXPECT_LE(res.ell, 1e-12) << u;
    }
    const U2System ex = reduce(with_divergence_terms(isotropic(parse("exp(x)"), parse("exp(y)"))));
    for (const char* u : {"1", "exp(-x)"}) {
        const Residual res = residual(ex, parse(u), r, 9);
        EXPECT_LE(std::max(res.hyper, res.ell), 1e-12) << u;
    }
    // A non-member leaves a residual.
    EXPECT_GT(residual(lame, parse("x*y"), r, 9).hyper, 1.0);
}

TEST(Reduction, ResidualIsLinear)
{
    ElasticityCoefficients c = isotropic(parse("1 + 0.2*x"), parse("0.5 + y^2"));
    c.b[1][1][0] = parse("sin(x)");
    c.c[1][1] = parse("x*y");
    const U2System s = reduce(c);
    const ScalarField u = parse("sin(x)*exp(y)"), v = parse("x^3 - x*y");
    const double alpha = 0.7, beta = -1.3;
    std::mt19937 rng(47);
    std::uniform_real_distribution<double> pt(-0.5, 0.5);
    for (int k = 0; k < 100; ++k) {
        const double x = pt(rng), y = pt(rng);
        for (const auto* op : {&s.hyper, &s.ell}) {
            const double lhs = apply_operator(*op, alpha * u + beta * v, x, y);
            const double rhs = alpha * apply_operator(*op, u, x, y) + beta * apply_operator(*op, v, x, y);
            EXPECT_NEAR(lhs, rhs, 1e-10);
        }
    }
}

TEST(Reduction, ApplyOperatorAgainstHandDerivatives)
{
    // u = x^2 y: u_xx = 2y, u_xy = 2x, u_yy = 0, u_x = 2xy, u_y = x^2.
    OperatorCoefficients op{parse("1"), parse("2"), parse("3"), parse("4"), parse("5"), parse("6")};
    const double x = 0.4, y = -0.3;
    const double want = 2 * y + 2 * 2 * x + 0 + 4 * 2 * x * y + 5 * x * x + 6 * x * x * y;
    EXPECT_NEAR(apply_operator(op, parse("x^2*y"), x, y), want, 1e-14);
}

TEST(Reduction, DiscriminantsOfRandomEllipticTensors)
{
    std::mt19937 rng(53);
    std::uniform_real_distribution<double> big(2.0, 4.0), shear(0.8, 2.0), mix(-0.5, 1.5), off(-0.5, 0.5);
    int accepted = 0;
    while (accepted < 100) {
        const ElasticityCoefficients c = constant_tensor(big(rng), off(rng), mix(rng), shear(rng), off(rng), big(rng));
        if (pointwise_ellipticity(c, 0, 0) <= 0.0)
            continue;
        ++accepted;
        const U2System s = reduce(c);
        const auto h = values(s.hyper, 0, 0), e = values(s.ell, 0, 0);
        EXPECT_LT(e[1] * e[1] - 4.0 * e[0] * e[2], 0.0);
        EXPECT_NEAR(h[1] * h[1] - 4.0 * h[0] * h[2], hyperbolicity_delta(c, 0, 0), 1e-12);
    }
}

TEST(Reduction, ScalingByAFieldScalesBothEquations)
{
    const U2System s = reduce(isotropic(1.0, 2.0));
    const U2System t = scaled(s, parse("1 + x^2"));
    const ScalarField u = parse("x^3 + y");
    EXPECT_NEAR(apply_operator(t.ell, u, 0.5, 0.1), 1.25 * apply_operator(s.ell, u, 0.5, 0.1), 1e-13);
}
