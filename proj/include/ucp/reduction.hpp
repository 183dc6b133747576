#pragma once

// The overdetermined pair satisfied by u2 once u1 vanishes:
//   hyperbolic: h20 uxx + h11 uxy + h02 uyy + h10 ux + h01 uy + h00 u = 0
//   elliptic:   e20 uxx + e11 uxy + e02 uyy + e10 ux + e01 uy + e00 u = 0

#include "ucp/field.hpp"
#include "ucp/region.hpp"
#include "ucp/tensor.hpp"

#include <Eigen/Dense>

#include <array>

namespace ucp {

/// Coefficients ordered (d_xx, d_xy, d_yy, d_x, d_y, identity).
using OperatorCoefficients = std::array<ScalarField, 6>;

struct U2System {
    OperatorCoefficients hyper;
    OperatorCoefficients ell;
};

U2System reduce(const ElasticityCoefficients& coeffs);

/// Multiplies both equations by `factor` (a field).
U2System scaled(const U2System& sys, const ScalarField& factor);

/// Row-stacked second-order symbols [[h20 h11 h02], [e20 e11 e02]] at a point.
Eigen::Matrix<double, 2, 3> second_order_symbols(const U2System& sys, double x, double y);

/// Which second-order columns (d_xx, d_xy, d_yy) take part in the rank test.
struct ColumnMask {
    bool dxx = true;
    bool dxy = true;
    bool dyy = true;
};

/// Numerical rank (0, 1 or 2) of the selected symbol columns; singular values
/// below tol * sigma_max count as zero.
int second_order_rank(const U2System& sys, double x, double y, double tol = 1e-9, ColumnMask mask = {});

struct Residual {
    double hyper;
    double ell;
};

/// Applies an operator to u symbolically and evaluates at (x, y).
double apply_operator(const OperatorCoefficients& op, const ScalarField& u, double x, double y);

/// Sup-norms of both operators applied to u over an n x n grid.
Residual residual(const U2System& sys, const ScalarField& u2, const Region& region, int n);

} // namespace ucp
