#pragma once

// Fully symmetric 2D elasticity tensors and the pointwise hypotheses placed on
// them: strong ellipticity, strong convexity, the discriminant of the first
// reduced equation and the quadratic-pencil eigenpairs.

#include "ucp/field.hpp"
#include "ucp/region.hpp"

#include <Eigen/Dense>

#include <array>
#include <complex>

namespace ucp {

/// Six independent stiffness components (full symmetry a_ijkl = a_jikl = a_klij
/// holds by construction) plus the lower-order terms b_ijk and c_ij.
/// Indices of `b` and `c` are zero-based: b[0][1][0] is b_121.
struct ElasticityCoefficients {
    ScalarField a1111, a1112, a1122, a1212, a1222, a2222;
    std::array<std::array<std::array<ScalarField, 2>, 2>, 2> b{};
    std::array<std::array<ScalarField, 2>, 2> c{};

    /// Component a_ijkl for one-based indices i, j, k, l in {1, 2}.
    const ScalarField& a(int i, int j, int k, int l) const;
};

/// a1111 = a2222 = 2mu+lambda, a1212 = mu, a1122 = lambda, a1112 = a1222 = 0.
ElasticityCoefficients isotropic(const ScalarField& mu, const ScalarField& lambda);
inline ElasticityCoefficients isotropic(double mu, double lambda)
{
    return isotropic(ScalarField::constant(mu), ScalarField::constant(lambda));
}

/// Lower-order terms of div(a : grad u) expanded in non-divergence form:
/// b_ijk = sum_l d_l a_iljk, c = 0.
ElasticityCoefficients with_divergence_terms(ElasticityCoefficients coeffs);

/// Multiplies every coefficient (a, b and c) by `factor`.
ElasticityCoefficients scaled(const ElasticityCoefficients& coeffs, double factor);

struct LambdaMatrices {
    Eigen::Matrix2d L11;
    Eigen::Matrix2d L12;
    Eigen::Matrix2d L22;
};

LambdaMatrices lambda_matrices(const ElasticityCoefficients& coeffs, double x, double y);

/// sum a_ijkl xi_i eta_j xi_k eta_l at one point.
double ellipticity_form(const ElasticityCoefficients& coeffs, double x, double y,
                        const Eigen::Vector2d& xi, const Eigen::Vector2d& eta);

/// Acoustic matrix M(xi)_jl = sum_ik a_ijkl xi_i xi_k; its smallest eigenvalue is the
/// minimum of the ellipticity form over unit eta.
Eigen::Matrix2d acoustic_matrix(const ElasticityCoefficients& coeffs, double x, double y,
                                const Eigen::Vector2d& xi);

/// Minimum of the ellipticity form over unit xi, eta at one point. The eta
/// minimization is exact (2x2 eigenproblem); xi is sampled on `angles`
/// directions in [0, pi) and the best sample is refined by Newton steps.
double pointwise_ellipticity(const ElasticityCoefficients& coeffs, double x, double y,
                             int angles = 360);

/// Minimum of pointwise_ellipticity over an n x n grid of the region.
double ellipticity_margin(const ElasticityCoefficients& coeffs, const Region& region, int n,
                          int angles = 360);

/// Voigt matrix acting on (e11, e22, sqrt(2) e12).
Eigen::Matrix3d voigt_matrix(const ElasticityCoefficients& coeffs, double x, double y);

/// Minimum over an n x n grid of the smallest Voigt eigenvalue.
double convexity_margin(const ElasticityCoefficients& coeffs, const Region& region, int n);

/// (a1212 + a1122)^2 - 4 a1112 a1222.
double hyperbolicity_delta(const ElasticityCoefficients& coeffs, double x, double y);

struct DeltaRange {
    double min;
    double max;
};
DeltaRange hyperbolicity_delta_range(const ElasticityCoefficients& coeffs, const Region& region,
                                     int n);

/// Eigenpairs of the quadratic pencil L11 theta^2 + L12 theta + L22.
struct PencilEigenpairs {
    std::array<std::complex<double>, 4> roots;
    std::array<Eigen::Vector2cd, 4> vectors;     // unit length
    std::array<double, 4> conditioning;          // |det(z, conj(z))|
    std::array<int, 4> null_dimension;           // 1 unless the pencil is defective at the root
    std::array<double, 4> residual;              // |P(theta) z| / |z|

    bool defective() const;
    double min_conditioning() const;
};

/// Roots from the 4x4 companion linearization; clustered (multiple) roots are
/// replaced by their cluster mean and simple roots are Newton-polished on the
/// determinant polynomial. Throws PreconditionError if L11 is singular.
PencilEigenpairs pencil_eigenpairs(const ElasticityCoefficients& coeffs, double x, double y);
PencilEigenpairs pencil_eigenpairs(const LambdaMatrices& lm);

} // namespace ucp
