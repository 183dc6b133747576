#pragma once

// Riemann function of  w_st + B11 w_s + B12 w_t + C1 w = 0  on a uniform grid of
// [-eps, eps]^2, the representation of w from its Cauchy traces, and the
// traces' integro-differential initial value problems coming from the
// elliptic equation.
//
// Argument convention: R(s, t, xi, eta) -- (s, t) evaluation point, (xi, eta)
// parameter. For a fixed parameter, R solves
//   R - int_xi^s B12(sig, t) R dsig - int_eta^t B11(s, tau) R dtau
//     + int_xi^s int_eta^t C1 R = 1.

#include "ucp/characteristics.hpp"
#include "ucp/finite_difference.hpp"
#include "ucp/volterra.hpp"

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

namespace ucp {

/// n equispaced nodes per axis on [-epsilon, epsilon]; n odd so the origin is a node.
struct RiemannGrid {
    int n = 0;
    double epsilon = 0.5;

    double h() const { return 2.0 * epsilon / (n - 1); }
    double node(int i) const { return i == mid() ? 0.0 : -epsilon + i * h(); }
    int mid() const { return n / 2; }
    /// Index of the node at coordinate v; throws if v is not (within 1e-9 h) a node.
    int index_of(double v) const;
};

RiemannGrid make_grid(int n, double epsilon);

/// Transformed coefficients sampled on the grid; entry (i, j) is at (s_i, t_j).
struct CoefficientGrid {
    RiemannGrid grid;
    Eigen::MatrixXd B11, B12, C1, A11, A12, A22, B21, B22, C2;
};

CoefficientGrid sample_coefficients(const TransformedSystem& tsys, int n);

/// Inclusive node-index rectangle.
struct NodeBox {
    int i0 = 0, i1 = 0, j0 = 0, j1 = 0;
    bool contains(int i, int j) const { return i >= i0 && i <= i1 && j >= j0 && j <= j1; }
};

/// Bounding box of the parameter node and the origin, widened by `margin` nodes.
NodeBox axis_box(const RiemannGrid& grid, int ip, int jp, int margin);

struct RiemannTable {
    RiemannGrid grid;
    int ip = 0, jp = 0;
    double xi = 0.0, eta = 0.0;
    NodeBox box;
    Eigen::MatrixXd values;        // (i - box.i0, j - box.j0)
    int iterations = 0;
    double residual = 0.0;         // last successive sup-norm difference
    std::vector<double> history;   // successive differences per iteration

    /// R at global node (i, j); throws outside the solved box.
    double at(int i, int j) const;
    /// n x n array, NaN outside the solved box.
    Eigen::MatrixXd full() const;
};

/// Picard iteration with composite trapezoid quadrature on `box` (whole grid by
/// default), starting from R = 1. Throws ConvergenceError after max_iter sweeps.
RiemannTable solve_riemann(const CoefficientGrid& coeffs, int ip, int jp, double tol = 1e-10,
                           std::optional<NodeBox> box = std::nullopt, int max_iter = 200);

/// Convenience form: samples the system on an n x n grid and solves on all of it.
/// The parameter must be a grid node.
RiemannTable solve_riemann(const TransformedSystem& tsys, double xi, double eta, int n, double tol = 1e-10);

/// max |R - 1 - int B12 R - int B11 R + int int C1 R| over the table, with the same quadrature.
double integral_equation_residual(const CoefficientGrid& coeffs, const RiemannTable& table);

/// CSV with header `x,y,value` (x = s, y = t), 17 significant digits.
void write_csv(std::ostream& os, const RiemannTable& table);

/// Memoized axis slices of Riemann tables: for a parameter node (ip, jp), the
/// row R(s_i, 0, xi, eta) and the column R(0, t_j, xi, eta) over the solved box.
/// Safe for concurrent use; stored values never depend on insertion order.
class RiemannProvider {
public:
    struct Slices {
        int i0 = 0, i1 = 0, j0 = 0, j1 = 0;
        Eigen::VectorXd row;  // index i - i0
        Eigen::VectorXd col;  // index j - j0
        int iterations = 0;
        double residual = 0.0;
    };

    explicit RiemannProvider(CoefficientGrid coeffs, double tol = 1e-10, int margin = 8);

    const CoefficientGrid& coefficients() const { return coeffs_; }
    const RiemannGrid& grid() const { return coeffs_.grid; }

    const Slices& slices(int ip, int jp);
    /// Solves the missing tables in parallel, then inserts them in key order.
    void prefetch(std::vector<std::pair<int, int>> params);

    /// R(s_i, 0, xi_ip, eta_jp)
    double row(int ip, int jp, int i);
    /// R(0, t_j, xi_ip, eta_jp)
    double col(int ip, int jp, int j);

    std::size_t cached() const;
    int max_iterations() const;
    double max_residual() const;

private:
    Slices compute(int ip, int jp) const;

    CoefficientGrid coeffs_;
    double tol_;
    int margin_;
    mutable std::mutex mutex_;
    std::map<std::pair<int, int>, std::unique_ptr<const Slices>> cache_;
};

/// Derivative stencils in the parameter variables: spacing stride*h (two cells by
/// default), centered where possible, one-sided at the rectangle edge.
struct ParameterStencils {
    Stencil d3, d33, d4, d44;
};
ParameterStencils parameter_stencils(const RiemannGrid& grid, int ip, int jp, int stride = 2);

/// Every parameter node touched by apply_L at (ip, jp).
std::vector<std::pair<int, int>> stencil_parameters(const RiemannGrid& grid, int ip, int jp, int stride = 2);

/// Elliptic operator A11 d_xi^2 + 2 A12 d_xi d_eta + A22 d_eta^2 + B21 d_xi + B22 d_eta + C2
/// applied to f(xi, eta) (given on parameter nodes) at node (ip, jp), coefficients at that node.
double apply_L(const CoefficientGrid& coeffs, int ip, int jp, const std::function<double(int, int)>& f,
               int stride = 2);

enum class TraceAxis { S, T };

/// P(s, t) on the s-axis (t = 0 when axis == S, i.e. P(s_i, 0)) or Q(0, t) on the
/// t-axis (axis == T); entry k corresponds to grid node k.
Eigen::VectorXd kernel_PQ(RiemannProvider& provider, TraceAxis axis, int stride = 2);

/// P at a general parameter node:
///   A11 (d1 + 2 d3) R(s,0,s,t) + 2 A12 d4 R(s,0,s,t) + B21 R(s,0,s,t).
double P_at(RiemannProvider& provider, int ip, int jp, int stride = 2);
/// Q at a general parameter node:
///   A22 (d2 + 2 d4) R(0,t,s,t) + 2 A12 d3 R(0,t,s,t) + B22 R(0,t,s,t).
double Q_at(RiemannProvider& provider, int ip, int jp, int stride = 2);

struct CauchyTraces {
    enum class Provenance { FromW, FromVolterra };
    Eigen::VectorXd phi;  // phi(s_i) = w_s(s_i, 0) + B12(s_i, 0) w(s_i, 0)
    Eigen::VectorXd psi;  // psi(t_j) = w_t(0, t_j) + B11(0, t_j) w(0, t_j)
    Provenance provenance = Provenance::FromW;
};

/// Traces of a closed-form w(s, t) (variables x -> s, y -> t).
CauchyTraces traces_from_field(const CoefficientGrid& coeffs, const ScalarField& w);

/// w(s, t) = w00 R(0,0,s,t) + int_0^s R(sig,0,s,t) phi dsig + int_0^t R(0,tau,s,t) psi dtau
/// at each target node (i, j), trapezoid quadrature.
std::vector<double> represent_solution(RiemannProvider& provider, double w00, const CauchyTraces& traces,
                                       const std::vector<std::pair<int, int>>& targets);

/// Data at the origin that fixes the trace problems.
struct TraceInitialData {
    double w00 = 0.0;
    double phi0 = 0.0, dphi0 = 0.0;  // phi(0), phi'(0)
    double psi0 = 0.0, dpsi0 = 0.0;  // psi(0), psi'(0)
};

/// From w, w_s, w_t, w_ss, w_tt at the origin (w_st is implied by the hyperbolic equation).
TraceInitialData trace_initial_data(const CoefficientGrid& coeffs, const WPointData& w);

struct TraceSolve {
    CauchyTraces traces;
    Eigen::VectorXd P, Q;  // P(s, 0) and Q(0, t)
    double min_abs_A11 = 0.0, min_abs_A22 = 0.0;
};

/// Solves
///   A11(s,0) phi' + P(s,0) phi + int_0^s L R(sig,0,s,0) phi dsig = g_phi(s)
///   A22(0,t) psi' + Q(0,t) psi + int_0^t L R(0,tau,0,t) psi dtau = g_psi(t)
/// where the forcing collects the w00, psi(0), psi'(0) (resp. phi(0), phi'(0)) terms.
TraceSolve solve_traces(RiemannProvider& provider, const TraceInitialData& init, int stride = 2);

} // namespace ucp
