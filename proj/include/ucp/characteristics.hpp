#pragma once

// Characteristic coordinates (s, t) for the hyperbolic member of the pair,
// the transformed pair in those coordinates, and the transfer of point data
// from u2 at (x0, y0) to w = u2 o (x, y)(s, t) at the origin.

#include "ucp/field.hpp"
#include "ucp/reduction.hpp"
#include "ucp/region.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace ucp {

namespace detail {
struct CharacteristicTracer;
}

enum class MapCase { OrthotropicIdentity, A1112, A1222 };

std::string to_string(MapCase c);

/// Roots of the characteristic quadratic at one point. For A1112 the roots are
/// slope ratios m = s_x / s_y of h20 m^2 + h11 m + h02 = 0; for A1222 they are the
/// reciprocals r = s_y / s_x of h02 r^2 + h11 r + h20 = 0. `s_root` carries the
/// minus sign in front of sqrt(delta), `t_root` the plus sign.
struct SlopeRoots {
    MapCase kind = MapCase::OrthotropicIdentity;
    double s_root = 0.0;
    double t_root = 0.0;
    double delta = 0.0;
};

/// Throws PreconditionError if delta <= 0 at the point.
SlopeRoots characteristic_slopes(const U2System& sys, double x, double y);

/// Values and derivatives of the map at one point. J = [[s_x, t_x], [s_y, t_y]];
/// second derivatives are ordered (xx, xy, yy).
struct MapJet {
    double s = 0.0;
    double t = 0.0;
    Eigen::Matrix2d J = Eigen::Matrix2d::Identity();
    Eigen::Vector3d s2 = Eigen::Vector3d::Zero();
    Eigen::Vector3d t2 = Eigen::Vector3d::Zero();
};

struct MapOptions {
    /// Trace characteristics even when a closed-form linear map exists.
    bool force_traced = false;
    /// Largest RK4 step along the tracing axis.
    double max_step = 2.5e-3;
};

class CharacteristicMap {
public:
    MapCase kind() const { return kind_; }
    bool traced() const { return traced_; }
    double x0() const { return x0_; }
    double y0() const { return y0_; }
    const Region& region() const { return region_; }

    MapJet jet(double x, double y) const;
    Eigen::Vector2d forward(double x, double y) const;
    /// Newton inversion; throws PreconditionError when it leaves the region or stalls.
    Eigen::Vector2d inverse(double s, double t) const;

private:
    friend CharacteristicMap build_map(const U2System&, const Region&, double, double, MapOptions);

    MapCase kind_ = MapCase::OrthotropicIdentity;
    bool traced_ = false;
    double x0_ = 0.0, y0_ = 0.0;
    Region region_;
    MapOptions options_;
    std::shared_ptr<const detail::CharacteristicTracer> s_tracer_, t_tracer_;
    Eigen::Matrix2d J0_ = Eigen::Matrix2d::Identity();
};

/// Orthotropic identity when h20 and h02 vanish on the whole region, the A1112
/// parametrization when h20 is bounded away from zero, A1222 otherwise.
CharacteristicMap build_map(const U2System& sys, const Region& region, double x0, double y0,
                            MapOptions options = {});

/// Pointwise coefficients of the transformed pair
///   w_st + B11 w_s + B12 w_t + C1 w = 0
///   A11 w_ss + 2 A12 w_st + A22 w_tt + B21 w_s + B22 w_t + C2 w = 0
struct CharacteristicCoefficients {
    double B11 = 0.0, B12 = 0.0, C1 = 0.0;
    double A11 = 0.0, A12 = 0.0, A22 = 0.0, B21 = 0.0, B22 = 0.0, C2 = 0.0;
};

/// Full transformation record at one (x, y) point, including the collected
/// w_ss / w_tt terms of the hyperbolic equation (which must vanish) and the
/// divided-out w_st coefficient K.
struct TransformDetail {
    CharacteristicCoefficients coeff;
    double hyper_ss = 0.0;
    double hyper_tt = 0.0;
    double K = 0.0;
    double scale = 0.0; // magnitude reference for the relative residual check
};

TransformDetail transform_at(const U2System& sys, const MapJet& jet, double x, double y);

struct TransformedSystem {
    /// Half-width of the square [-epsilon, epsilon]^2 in (s, t).
    double epsilon = 0.5;
    std::function<CharacteristicCoefficients(double s, double t)> coefficients;
    std::shared_ptr<const CharacteristicMap> map; // empty for systems given directly in (s, t)
};

struct TransformValidation {
    double max_hyper_residual = 0.0;    // relative
    double max_ellipticity_sign = 0.0;  // max of A12^2 - A11 A22 (must be < 0)
    double min_abs_A11 = 0.0;
    double min_abs_A22 = 0.0;
    double min_abs_K = 0.0;
};

/// Picks epsilon, validates the transformation on a grid of the square and returns
/// the system. Throws PreconditionError when a check fails.
TransformedSystem transform_system(const U2System& sys, std::shared_ptr<const CharacteristicMap> map,
                                   const Region& region, TransformValidation* validation = nullptr,
                                   int check_n = 9);

/// System with coefficients given directly as fields of (s, t) (variables x -> s, y -> t).
struct CharacteristicFields {
    ScalarField B11, B12, C1;
    ScalarField A11 = ScalarField::constant(1.0), A12, A22 = ScalarField::constant(1.0);
    ScalarField B21, B22, C2;
};
TransformedSystem direct_system(const CharacteristicFields& fields, double epsilon);

/// 3x3 matrix mapping (w_ss, w_st, w_tt) to the second-order part of (u_xx, u_xy, u_yy).
Eigen::Matrix3d second_derivative_matrix(const Eigen::Matrix2d& J);

struct U2PointData {
    double u = 0.0, ux = 0.0, uy = 0.0;
    std::optional<double> uxx, uyy;
};

struct WPointData {
    double w = 0.0, ws = 0.0, wt = 0.0, wss = 0.0, wst = 0.0, wtt = 0.0;
    /// Second derivatives of u2 at the point after completion from the pair.
    double uxx = 0.0, uxy = 0.0, uyy = 0.0;
    /// Least-squares residual of the pair when the second derivatives are overdetermined.
    double consistency = 0.0;
};

/// Completes the unknown second derivatives of u2 (u_xy and any omitted one) from
/// the two reduced equations, then maps everything to w. Throws
/// PreconditionError when the unknown columns are rank deficient.
WPointData transfer_point_data(const U2System& sys, const CharacteristicMap& map, const U2PointData& data,
                               double rank_tol = 1e-9);

} // namespace ucp
