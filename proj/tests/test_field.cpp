#include "ucp/errors.hpp"
#include "ucp/field.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <thread>
#include <vector>

using namespace ucp;

namespace {

// Random well-formed expression together with a direct evaluator of the same
// mathematics, built without going through the parser.
struct Generated {
    std::string text;
    std::function<double(double, double)> value;
};

Generated generate(std::mt19937& rng, int depth)
{
    std::uniform_int_distribution<int> pick(0, depth > 0 ? 11 : 2);
    std::uniform_real_distribution<double> lit(0.25, 3.0);
    switch (pick(rng)) {
    case 0: {
        const double c = std::round(lit(rng) * 8.0) / 8.0;  // exactly representable
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", c);
        return {buf, [c](double, double) { return c; }};
    }
    case 1:
        return {"x", [](double x, double) { return x; }};
    case 2:
        return {"y", [](double, double y) { return y; }};
    case 3: {
        auto a = generate(rng, depth - 1), b = generate(rng, depth - 1);
        return {"(" + a.text + " + " + b.text + ")", [a, b](double x, double y) { return a.value(x, y) + b.value(x, y); }};
    }
    case 4: {
        auto a = generate(rng, depth - 1), b = generate(rng, depth - 1);
        return {"(" + a.text + " - " + b.text + ")", [a, b](double x, double y) { return a.value(x, y) - b.value(x, y); }};
    }
    case 5: {
        auto a = generate(rng, depth - 1), b = generate(rng, depth - 1);
        return {a.text + "*" + b.text, [a, b](double x, double y) { return a.value(x, y) * b.value(x, y); }};
    }
    case 6: {
        // Denominator kept positive.
        auto a = generate(rng, depth - 1), b = generate(rng, depth - 1);
        return {"(" + a.text + ")/(2 + (" + b.text + ")^2)", [a, b](double x, double y) {
                    const double d = b.value(x, y);
                    return a.value(x, y) / (2.0 + d * d);
                }};
    }
    case 7: {
        auto a = generate(rng, depth - 1);
        return {"sin(" + a.text + ")", [a](double x, double y) { return std::sin(a.value(x, y)); }};
    }
    case 8: {
        auto a = generate(rng, depth - 1);
        return {"cos(" + a.text + ")", [a](double x, double y) { return std::cos(a.value(x, y)); }};
    }
    case 9: {
        auto a = generate(rng, depth - 1);
        return {"exp(sin(" + a.text + "))", [a](double x, double y) { return std::exp(std::sin(a.value(x, y))); }};
    }
    case 10: {
        auto a = generate(rng, depth - 1);
        return {"sqrt(1 + (" + a.text + ")^2)", [a](double x, double y) {
                    const double v = a.value(x, y);
                    return std::sqrt(1.0 + v * v);
                }};
    }
    default: {
        auto a = generate(rng, depth - 1);
        return {"-log(2 + cos(" + a.text + "))", [a](double x, double y) { return -std::log(2.0 + std::cos(a.value(x, y))); }};
    }
    }
}

double central(const ScalarField& f, Variable v, double x, double y, double h = 1e-6)
{
    if (v == Variable::X)
        return (f(x + h, y) - f(x - h, y)) / (2.0 * h);
    return (f(x, y + h) - f(x, y - h)) / (2.0 * h);
}

} // namespace

TEST(Field, ParsesConstantsAndVariables)
{
    EXPECT_EQ(parse("0")(1.3, -2.0), 0.0);
    EXPECT_TRUE(parse("0").is_constant());
    EXPECT_NEAR(parse("exp(x)")(1.0, 0.0), std::exp(1.0), 1e-15);
    EXPECT_EQ(parse("x*y^2")(3.0, 2.0), 12.0);
    EXPECT_EQ(parse("exp(x)+exp(y)")(0.0, 0.0), 2.0);
    EXPECT_EQ(parse("x*y")(0.5, 0.5), 0.25);
    EXPECT_EQ(parse("(2+4)/2")(7.0, -1.0), 3.0);
    EXPECT_NEAR(parse("pi")(0.0, 0.0), M_PI, 0.0);
}

TEST(Field, Precedence)
{
    EXPECT_EQ(parse("-x^2")(3.0, 0.0), -9.0);
    EXPECT_EQ(parse("2^3^2")(0.0, 0.0), 512.0);
    EXPECT_EQ(parse("2^-1")(0.0, 0.0), 0.5);
    EXPECT_EQ(parse("1 - 2 - 3")(0.0, 0.0), -4.0);
    EXPECT_EQ(parse("8 / 4 / 2")(0.0, 0.0), 1.0);
    EXPECT_EQ(parse("1 + 2 * 3")(0.0, 0.0), 7.0);
    EXPECT_EQ(parse("1.5e1 + .5")(0.0, 0.0), 15.5);
    EXPECT_EQ(parse("  x   *  ( y + 1 ) ")(2.0, 3.0), 8.0);
}

TEST(Field, SyntaxErrorsCarryOffsets)
{
    auto offset_of = [](const std::string& text) -> long {
        try {
            parse(text);
        } catch (const ParseError& e) {
            return static_cast<long>(e.offset());
        }
        return -1;
    };
    EXPECT_EQ(offset_of("1 +"), 3);
    EXPECT_EQ(offset_of("x * $"), 4);
    EXPECT_EQ(offset_of("(x + y"), 6);
    EXPECT_EQ(offset_of("z + 1"), 0);
    EXPECT_EQ(offset_of("2 * foo(x)"), 4);
    EXPECT_GE(offset_of("exp()"), 0);
    EXPECT_GE(offset_of("sin(x, y)"), 0);
    EXPECT_GE(offset_of("x(2)"), 0);
    EXPECT_GE(offset_of("exp x"), 0);
    EXPECT_GE(offset_of(""), 0);
    EXPECT_GE(offset_of("1 2"), 0);
}

TEST(Field, ErrorMessagesNameTheProblem)
{
    try {
        parse("sin(x, y)");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("arity"), std::string::npos);
    }
    try {
        parse("q");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("unknown identifier"), std::string::npos);
    }
}

TEST(Field, DomainErrorsInsteadOfNaN)
{
    EXPECT_THROW(parse("1/x")(0.0, 1.0), DomainError);
    EXPECT_THROW(parse("log(x)")(0.0, 1.0), DomainError);
    EXPECT_THROW(parse("log(x)")(-1.0, 1.0), DomainError);
    EXPECT_THROW(parse("sqrt(x)")(-1e-3, 1.0), DomainError);
    EXPECT_THROW(parse("x^0.5")(-2.0, 0.0), DomainError);
    EXPECT_THROW(parse("exp(x)")(1e4, 0.0), DomainError);
    EXPECT_NO_THROW(parse("sqrt(x)")(0.0, 1.0));
    EXPECT_EQ(parse("x^3")(-2.0, 0.0), -8.0);
}

TEST(Field, DerivativeExamples)
{
    EXPECT_EQ(differentiate(parse("x*y^2"), Variable::X)(3.0, 2.0), 4.0);
    EXPECT_EQ(differentiate(parse("exp(y)"), Variable::Y)(0.7, 0.0), 1.0);
    EXPECT_EQ(differentiate(parse("exp(-x)"), Variable::X)(0.0, 0.3), -1.0);
    EXPECT_TRUE(differentiate(parse("y^3"), Variable::X).is_constant());
    EXPECT_NEAR(differentiate(parse("x^y"), Variable::Y)(2.0, 3.0), 8.0 * std::log(2.0), 1e-14);
}

TEST(Field, RoundTripAgainstDirectEvaluation)
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> pt(-1.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        const Generated g = generate(rng, 4);
        const ScalarField f = parse(g.text);
        EXPECT_EQ(f.source(), g.text);
        for (int k = 0; k < 5; ++k) {
            const double x = pt(rng), y = pt(rng);
            const double want = g.value(x, y);
            EXPECT_NEAR(f(x, y), want, 1e-13 * (1.0 + std::abs(want))) << g.text;
        }
        // The printed form parses back to the same function.
        const ScalarField again = parse(f.to_string());
        EXPECT_NEAR(again(0.3, -0.4), f(0.3, -0.4), 1e-13 * (1.0 + std::abs(f(0.3, -0.4)))) << f.to_string();
    }
}

TEST(Field, DerivativesMatchCentralDifferences)
{
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> pt(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const ScalarField f = parse(generate(rng, 3).text);
        for (Variable v : {Variable::X, Variable::Y}) {
            const ScalarField df = differentiate(f, v);
            const double x = pt(rng), y = pt(rng);
            const double fd = central(f, v, x, y);
            EXPECT_NEAR(df(x, y), fd, 1e-6 * std::max(1.0, std::abs(fd))) << f.source();
        }
    }
}

TEST(Field, MixedPartialsCommute)
{
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> pt(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const ScalarField f = parse(generate(rng, 3).text);
        const ScalarField fxy = differentiate(differentiate(f, Variable::X), Variable::Y);
        const ScalarField fyx = differentiate(differentiate(f, Variable::Y), Variable::X);
        const double x = pt(rng), y = pt(rng);
        EXPECT_NEAR(fxy(x, y), fyx(x, y), 1e-12 * std::max(1.0, std::abs(fxy(x, y)))) << f.source();
    }
}

TEST(Field, DifferentiationIsLinear)
{
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> pt(-1.0, 1.0);
    const ScalarField f = parse("sin(x*y) + x^3"), g = parse("exp(-x)*cos(y)");
    const double alpha = 1.75, beta = -0.625;
    const ScalarField lhs = differentiate(alpha * f + beta * g, Variable::X);
    const ScalarField df = differentiate(f, Variable::X), dg = differentiate(g, Variable::X);
    for (int k = 0; k < 100; ++k) {
        const double x = pt(rng), y = pt(rng);
        EXPECT_NEAR(lhs(x, y), alpha * df(x, y) + beta * dg(x, y), 1e-12);
    }
}

TEST(Field, FuzzedTextEitherParsesOrReportsALocatedError)
{
    std::mt19937 rng(19);
    const std::string alphabet = "xy0123456789.+-*/^() esincoxplqrt,$";
    std::uniform_int_distribution<std::size_t> ch(0, alphabet.size() - 1), len(0, 14);
    for (int trial = 0; trial < 5000; ++trial) {
        std::string text;
        for (std::size_t k = len(rng); k > 0; --k)
            text += alphabet[ch(rng)];
        try {
            const ScalarField f = parse(text);
            try {
                const double v = f(0.37, -0.21);
                EXPECT_TRUE(std::isfinite(v));
            } catch (const DomainError&) {
            }
        } catch (const ParseError& e) {
            EXPECT_LE(e.offset(), text.size()) << text;
        }
    }
}

TEST(Field, ConcurrentEvaluationIsBitIdentical)
{
    const ScalarField f = parse("exp(sin(3*x*y)) / (2 + cos(x - y)) + sqrt(1 + x^2)");
    std::vector<double> serial(1000), threaded(1000);
    for (int k = 0; k < 1000; ++k)
        serial[k] = f(k * 1e-3, 1.0 - k * 1e-3);
    std::vector<std::thread> workers;
    for (int w = 0; w < 4; ++w)
        workers.emplace_back([&, w] {
            for (int k = w; k < 1000; k += 4)
                threaded[k] = f(k * 1e-3, 1.0 - k * 1e-3);
        });
    for (auto& t : workers)
        t.join();
    EXPECT_EQ(serial, threaded);
}

TEST(Field, ConstantFolding)
{
    const ScalarField f = parse("(2+4)/2");
    ASSERT_TRUE(f.constant_value().has_value());
    EXPECT_EQ(*f.constant_value(), 3.0);
    EXPECT_FALSE(parse("x + 0").is_constant());
    EXPECT_TRUE(parse("x*y").depends_on(Variable::Y));
    EXPECT_FALSE(parse("exp(x)").depends_on(Variable::Y));
}
