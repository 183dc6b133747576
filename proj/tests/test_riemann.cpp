#include "ucp/riemann.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace ucp;

namespace {

const ScalarField S = ScalarField::variable(Variable::X);
const ScalarField T = ScalarField::variable(Variable::Y);

// J0(2 sqrt(z)) as a power series.
double j0_series(double z)
{
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 60; ++k) {
        term *= -z / (double(k) * k);
        sum += term;
    }
    return sum;
}

TransformedSystem bessel_system()
{
    CharacteristicFields f;
    f.C1 = ScalarField::constant(1.0);
    return direct_system(f, 0.5);
}

// Closed-form w and coefficient fields chosen so that w solves both equations.
struct Manufactured {
    ScalarField w, ws, wt, wss, wst, wtt;
    CharacteristicFields f;
};

Manufactured manufactured()
{
    Manufactured m;
    m.w = exp(0.5 * S - 0.3 * T + 0.2 * S * T);
    m.ws = differentiate(m.w, Variable::X);
    m.wt = differentiate(m.w, Variable::Y);
    m.wss = differentiate(m.ws, Variable::X);
    m.wst = differentiate(m.ws, Variable::Y);
    m.wtt = differentiate(m.wt, Variable::Y);
    CharacteristicFields& f = m.f;
    f.B11 = 0.3 + 0.1 * S;
    f.B12 = 0.2 * T - 0.1;
    f.C1 = -(m.wst + f.B11 * m.ws + f.B12 * m.wt) / m.w;
    f.A11 = 1.0 + 0.2 * S;
    f.A12 = 0.1 + 0.05 * T;
    f.A22 = 1.2 - 0.1 * S * T;
    f.B21 = S;
    f.B22 = ScalarField::constant(0.3);
    f.C2 = -(f.A11 * m.wss + 2.0 * f.A12 * m.wst + f.A22 * m.wtt + f.B21 * m.ws + f.B22 * m.wt) / m.w;
    return m;
}

} // namespace

TEST(Riemann, GridHelpers)
{
    const RiemannGrid g = make_grid(65, 0.5);
    EXPECT_EQ(g.mid(), 32);
    EXPECT_EQ(g.node(32), 0.0);
    EXPECT_EQ(g.index_of(0.25), 48);
    EXPECT_THROW(g.index_of(0.01), Error);
    EXPECT_THROW(make_grid(64, 0.5), Error);
    const NodeBox b = axis_box(g, 40, 10, 3);
    EXPECT_TRUE(b.contains(32, 32));
    EXPECT_TRUE(b.contains(40, 10));
    EXPECT_EQ(b.i0, 29);
    EXPECT_EQ(b.i1, 43);
    EXPECT_EQ(b.j0, 7);
    EXPECT_EQ(b.j1, 35);
    const NodeBox edge = axis_box(g, 64, 0, 8);
    EXPECT_EQ(edge.i1, 64);
    EXPECT_EQ(edge.j0, 0);
}

TEST(Riemann, ZeroCoefficientsGiveOne)
{
    const RiemannTable t = solve_riemann(direct_system({}, 0.5), 0.25, -0.125, 33);
    EXPECT_EQ((t.values.array() - 1.0).abs().maxCoeff(), 0.0);
}

TEST(Riemann, FirstOrderCoefficientsClosedForm)
{
    // w_st + b w_s + c w_t + b c w = (d_s + c)(d_t + b) w:  R = exp(b (t - eta) + c (s - xi)).
    const double b = 0.7, c = -0.4;
    CharacteristicFields f;
    f.B11 = ScalarField::constant(b);
    f.B12 = ScalarField::constant(c);
    f.C1 = ScalarField::constant(b * c);
    const TransformedSystem sys = direct_system(f, 0.5);
    const int n = 129;
    const RiemannTable t = solve_riemann(sys, 0.25, -0.125, n);
    double err = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            err = std::max(err, std::abs(t.at(i, j) - std::exp(b * (t.grid.node(j) + 0.125) +
                                                                c * (t.grid.node(i) - 0.25))));
    EXPECT_LE(err, 1e-5);
    EXPECT_LE(integral_equation_residual(sample_coefficients(sys, n), t), 1e-9);
}

TEST(Riemann, BesselSeriesAndOrder)
{
    const TransformedSystem sys = bessel_system();
    double prev = 0.0;
    for (int n : {65, 129, 257}) {
        const RiemannTable t = solve_riemann(sys, 0.0, 0.0, n);
        double err = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                err = std::max(err, std::abs(t.at(i, j) - j0_series(t.grid.node(i) * t.grid.node(j))));
        if (n == 257)
            EXPECT_LE(err, 1e-4);
        if (prev > 0.0)
            EXPECT_GE(std::log2(prev / err), 1.8) << "n = " << n;
        prev = err;
        EXPECT_LE(t.residual, 1e-10);
        EXPECT_FALSE(t.history.empty());
    }
}

TEST(Riemann, PicardBudgetExhausted)
{
    const CoefficientGrid g = sample_coefficients(bessel_system(), 33);
    EXPECT_THROW(solve_riemann(g, 16, 16, 1e-14, std::nullopt, 2), ConvergenceError);
}

TEST(Riemann, TableAccessors)
{
    const CoefficientGrid g = sample_coefficients(bessel_system(), 33);
    const NodeBox box = axis_box(g.grid, 20, 16, 2);
    const RiemannTable t = solve_riemann(g, 20, 16, 1e-10, box);
    EXPECT_NO_THROW(t.at(20, 16));
    EXPECT_THROW(t.at(0, 0), Error);
    const Eigen::MatrixXd full = t.full();
    EXPECT_TRUE(std::isnan(full(0, 0)));
    EXPECT_EQ(full(20, 16), t.at(20, 16));
    EXPECT_EQ(t.at(20, 16), 1.0);  // R equals one at its parameter
}

TEST(Riemann, BoxSolveMatchesFullSolve)
{
    // R at a node only sees the rectangle between that node and the parameter; the
    // two solves differ only in when the Picard sweeps stop.
    const CoefficientGrid g = sample_coefficients(direct_system(manufactured().f, 0.5), 33);
    const RiemannTable full = solve_riemann(g, 24, 7);
    const NodeBox box = axis_box(g.grid, 24, 7, 3);
    const RiemannTable part = solve_riemann(g, 24, 7, 1e-10, box);
    double diff = 0.0;
    for (int i = box.i0; i <= box.i1; ++i)
        for (int j = box.j0; j <= box.j1; ++j)
            diff = std::max(diff, std::abs(full.at(i, j) - part.at(i, j)));
    EXPECT_LE(diff, 1e-10);  // the Picard stopping tolerance
}

TEST(Riemann, CsvHasHeaderAndFullPrecision)
{
    const RiemannTable t = solve_riemann(bessel_system(), 0.0, 0.0, 17);
    std::ostringstream os;
    write_csv(os, t);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "x,y,value");
    int rows = 0;
    while (std::getline(is, line))
        ++rows;
    EXPECT_EQ(rows, 17 * 17);
}

TEST(Riemann, ProviderIsOrderIndependent)
{
    const CoefficientGrid g = sample_coefficients(direct_system(manufactured().f, 0.5), 33);
    RiemannProvider a(g), b(g);
    std::vector<std::pair<int, int>> params{{3, 5}, {16, 16}, {30, 2}, {10, 28}};
    a.prefetch(params);
    for (auto it = params.rbegin(); it != params.rend(); ++it)
        b.slices(it->first, it->second);
    EXPECT_EQ(a.cached(), 4u);
    for (const auto& [ip, jp] : params) {
        const auto& sa = a.slices(ip, jp);
        const auto& sb = b.slices(ip, jp);
        EXPECT_EQ(sa.row, sb.row);
        EXPECT_EQ(sa.col, sb.col);
    }
    EXPECT_EQ(a.max_iterations(), b.max_iterations());
}

TEST(Riemann, ApplyLOnAQuadratic)
{
    const Manufactured m = manufactured();
    const CoefficientGrid g = sample_coefficients(direct_system(m.f, 0.5), 33);
    const int ip = 12, jp = 20;
    auto f = [&](int i, int j) {
        const double x = g.grid.node(i), y = g.grid.node(j);
        return x * x + x * y - 2.0 * y;
    };
    const double xi = g.grid.node(ip), eta = g.grid.node(jp);
    const double want = g.A11(ip, jp) * 2 + 2 * g.A12(ip, jp) * 1 + g.B21(ip, jp) * (2 * xi + eta) +
                        g.B22(ip, jp) * (xi - 2.0) + g.C2(ip, jp) * f(ip, jp);
    EXPECT_NEAR(apply_L(g, ip, jp, f), want, 1e-11);
    // Near the edge the stencils become one-sided but stay exact on quadratics.
    EXPECT_NEAR(apply_L(g, 0, 32, f),
                g.A11(0, 32) * 2 + 2 * g.A12(0, 32) + g.B21(0, 32) * (2 * g.grid.node(0) + g.grid.node(32)) +
                    g.B22(0, 32) * (g.grid.node(0) - 2.0) + g.C2(0, 32) * f(0, 32),
                1e-10);
}

TEST(Riemann, ReconstructsBesselFromTraces)
{
    const int n = 257;
    const CoefficientGrid g = sample_coefficients(bessel_system(), n);
    RiemannProvider provider(g);
    ScalarField term = ScalarField::constant(1.0), w = term;
    for (int k = 1; k < 25; ++k) {
        term = term * (-1.0 / (double(k) * k)) * S * T;
        w = w + term;
    }
    const CauchyTraces tr = traces_from_field(g, w);
    std::vector<std::pair<int, int>> targets;
    for (int i = 0; i < n; i += 16)
        for (int j = 0; j < n; j += 16)
            targets.emplace_back(i, j);
    const std::vector<double> v = represent_solution(provider, 1.0, tr, targets);
    double err = 0.0;
    for (std::size_t k = 0; k < targets.size(); ++k)
        err = std::max(err, std::abs(v[k] - j0_series(g.grid.node(targets[k].first) * g.grid.node(targets[k].second))));
    EXPECT_LE(err, 1e-4);
}

TEST(Riemann, RepresentationOfDAlembertSolution)
{
    // w_st = 0: R = 1, and w = f(s) + g(t) is rebuilt from w(0,0) and the traces.
    const int n = 65;
    const CoefficientGrid g = sample_coefficients(direct_system({}, 0.5), n);
    RiemannProvider provider(g);
    const ScalarField w = sin(S) + T * T + 0.5;
    const CauchyTraces tr = traces_from_field(g, w);
    const std::vector<std::pair<int, int>> targets{{0, 0}, {64, 10}, {32, 32}, {50, 60}};
    const std::vector<double> v = represent_solution(provider, 0.5, tr, targets);
    for (std::size_t k = 0; k < targets.size(); ++k) {
        const double s = g.grid.node(targets[k].first), t = g.grid.node(targets[k].second);
        EXPECT_NEAR(v[k], std::sin(s) + t * t + 0.5, 1e-4);
    }
}

TEST(Riemann, TraceKernelAgainstClosedForm)
{
    // On the characteristic through the parameter, R(s, eta, xi, eta) = exp(int_xi^s B12) and
    // R(xi, t, xi, eta) = exp(int_eta^t B11), so P = -A11 B12 - 2 A12 B11 + B21.
    const Manufactured m = manufactured();
    const CoefficientGrid g = sample_coefficients(direct_system(m.f, 0.5), 129);
    RiemannProvider provider(g);
    const Eigen::VectorXd P = kernel_PQ(provider, TraceAxis::S);
    const Eigen::VectorXd Q = kernel_PQ(provider, TraceAxis::T);
    double ep = 0.0, eq = 0.0;
    for (int k = 0; k < 129; ++k) {
        const double v = g.grid.node(k);
        ep = std::max(ep, std::abs(P(k) - (-m.f.A11(v, 0) * m.f.B12(v, 0) - 2 * m.f.A12(v, 0) * m.f.B11(v, 0) +
                                           m.f.B21(v, 0))));
        eq = std::max(eq, std::abs(Q(k) - (-m.f.A22(0, v) * m.f.B11(0, v) - 2 * m.f.A12(0, v) * m.f.B12(0, v) +
                                           m.f.B22(0, v))));
    }
    EXPECT_LE(ep, 1e-5);
    EXPECT_LE(eq, 1e-5);
    EXPECT_NEAR(P_at(provider, 64, 64), P(64), 1e-12);
    EXPECT_NEAR(Q_at(provider, 64, 64), Q(64), 1e-12);
}

TEST(Riemann, TracesFromPointDataConvergeAtSecondOrder)
{
    const Manufactured m = manufactured();
    const TransformedSystem sys = direct_system(m.f, 0.5);
    WPointData d;
    d.w = m.w(0, 0);
    d.ws = m.ws(0, 0);
    d.wt = m.wt(0, 0);
    d.wss = m.wss(0, 0);
    d.wst = m.wst(0, 0);
    d.wtt = m.wtt(0, 0);
    double prev_trace = 0.0, prev_w = 0.0;
    for (int n : {33, 65, 129}) {
        const CoefficientGrid g = sample_coefficients(sys, n);
        RiemannProvider provider(g);
        const TraceInitialData init = trace_initial_data(g, d);
        EXPECT_NEAR(init.phi0, d.ws + m.f.B12(0, 0) * d.w, 1e-14);
        EXPECT_NEAR(init.psi0, d.wt + m.f.B11(0, 0) * d.w, 1e-14);
        const TraceSolve ts = solve_traces(provider, init);
        const CauchyTraces exact = traces_from_field(g, m.w);
        const double trace_err = (ts.traces.phi - exact.phi).lpNorm<Eigen::Infinity>() +
                                 (ts.traces.psi - exact.psi).lpNorm<Eigen::Infinity>();
        std::vector<std::pair<int, int>> targets;
        for (int i = 0; i < n; i += (n - 1) / 16)
            for (int j = 0; j < n; j += (n - 1) / 16)
                targets.emplace_back(i, j);
        const std::vector<double> v = represent_solution(provider, init.w00, ts.traces, targets);
        double w_err = 0.0;
        for (std::size_t k = 0; k < targets.size(); ++k)
            w_err = std::max(w_err, std::abs(v[k] - m.w(g.grid.node(targets[k].first), g.grid.node(targets[k].second))));
        if (prev_trace > 0.0) {
            EXPECT_GE(std::log2(prev_trace / trace_err), 1.8) << "n = " << n;
            EXPECT_GE(std::log2(prev_w / w_err), 1.8) << "n = " << n;
        }
        prev_trace = trace_err;
        prev_w = w_err;
    }
    EXPECT_LE(prev_w, 1e-6);
}

TEST(Riemann, ZeroDataGivesZeroTraces)
{
    const CoefficientGrid g = sample_coefficients(direct_system(manufactured().f, 0.5), 33);
    RiemannProvider provider(g);
    const TraceSolve ts = solve_traces(provider, TraceInitialData{});
    EXPECT_EQ(ts.traces.phi.lpNorm<Eigen::Infinity>(), 0.0);
    EXPECT_EQ(ts.traces.psi.lpNorm<Eigen::Infinity>(), 0.0);
    EXPECT_EQ(ts.traces.provenance, CauchyTraces::Provenance::FromVolterra);
}
