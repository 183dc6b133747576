#pragma once

// Solution-space dimension of the overdetermined pair, estimated as the near-null
// space of its finite-difference discretization, and the point-data map of a
// solution family.

#include "ucp/field.hpp"
#include "ucp/reduction.hpp"
#include "ucp/region.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <array>
#include <optional>
#include <vector>

namespace ucp {

struct NullSpaceOptions {
    double threshold = 1e-12;  // relative to sigma_max
    double min_gap = 1e3;      // below this the dimension is reported as ambiguous
    int accuracy = 4;          // formal order of the difference stencils
    int block = 10;            // number of smallest singular values resolved
    int iterations = 20;       // inverse subspace iterations
    unsigned seed = 0;         // start block
};

struct NullSpaceResult {
    int n = 0;
    Region region;
    int dimension = 0;
    bool ambiguous = false;
    double gap = 0.0;
    double sigma_max = 0.0;
    double floor = 0.0;                  // rounding level eps * sqrt(N) * sigma_max
    double threshold = 0.0;
    std::vector<double> singular_values; // smallest `block` values, ascending, divided by sigma_max
    Eigen::MatrixXd basis;               // N x dimension, orthonormal; node (i, j) at row i + n j
};

/// Stacked discretization of both operators on the n x n node grid (two rows per
/// node, rows scaled by the cell size); column i + n j is the node (x_i, y_j).
Eigen::SparseMatrix<double> discretize_pair(const U2System& sys, const Region& region, int n, int accuracy = 4);

NullSpaceResult null_space_dimension(const U2System& sys, const Region& region, int n,
                                     const NullSpaceOptions& options = {});

/// Relative distance ||f - Pi f|| / ||f|| of the sampled field from span(basis).
double projection_residual(const NullSpaceResult& ns, const ScalarField& f);

/// Point data: u, u_x, u_y, u_xx, u_yy at (x0, y0); missing entries are not observed.
struct PointDataSpec {
    double x0 = 0.0, y0 = 0.0;
    std::array<std::optional<double>, 5> values;

    static PointDataSpec five(double x0, double y0, double u, double ux, double uy, double uxx, double uyy);
    /// u, u_x, u_y and one of u_xx (omit = 4) or u_yy (omit = 3) -- `omit` is the dropped slot.
    static PointDataSpec four(double x0, double y0, double u, double ux, double uy, double second, int omit);
};

struct PointDataSolution {
    Eigen::MatrixXd map;            // observations x family size
    Eigen::VectorXd coefficients;   // least-squares solution
    int rank = 0;
    int unknowns = 0;
    bool rank_deficient = false;
    double residual = 0.0;
    Eigen::VectorXd null_direction; // a family vector invisible to the data (when deficient)
};

/// Closed-form family.
PointDataSolution point_data_solve(const std::vector<ScalarField>& family, const PointDataSpec& spec,
                                   double tol = 1e-9);

/// Family given as grid functions (columns of `basis` on the n x n grid of `region`);
/// derivatives at the point are taken with difference stencils of the given accuracy.
/// The point must be a grid node.
PointDataSolution point_data_solve(const Eigen::MatrixXd& basis, const Region& region, int n,
                                   const PointDataSpec& spec, double tol = 1e-9, int accuracy = 4);

} // namespace ucp
