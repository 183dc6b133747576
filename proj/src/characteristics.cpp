#include "ucp/characteristics.hpp"

#include "ucp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ucp {

// A characteristic family in local coordinates (a, b): a is the tracing axis
// (x for A1112, y for A1222) and the coordinate is the b-intercept on a = a0.
// Curves satisfy db/da = -m(a, b).
struct detail::CharacteristicTracer {
    bool swapped = false; // a = y, b = x
    bool linear = false;
    double root = 0.0;    // linear case
    ScalarField m, m_a, m_b, m_bb;

    double eval(const ScalarField& f, double a, double b) const { return swapped ? f(b, a) : f(a, b); }
};

namespace {

using Tracer = detail::CharacteristicTracer;

constexpr const char* kStage = "characteristics";

std::string point_text(double x, double y)
{
    std::ostringstream os;
    os.precision(6);
    os << "(" << x << ", " << y << ")";
    return os.str();
}

struct LocalDerivs {
    double v = 0.0, da = 0.0, db = 0.0, daa = 0.0, dab = 0.0, dbb = 0.0;
};

struct TraceState {
    double b, p, z;
};

LocalDerivs local_derivs(const Tracer& tr, double a, double b, double a0, double b0, const Region& region,
                         const MapOptions& options)
{
    LocalDerivs d;
    if (tr.linear) {
        d.v = (b - b0) + tr.root * (a - a0);
        d.da = tr.root;
        d.db = 1.0;
        return d;
    }

    auto inside = [&](double aa, double bb) {
        const double x = tr.swapped ? bb : aa;
        const double y = tr.swapped ? aa : bb;
        if (!region.contains(x, y, 1e-12))
            throw PreconditionError(kStage, "characteristic escapes the region near " + point_text(x, y));
    };
    // State (B, P, Z) = (b on the curve, dB/db_start, d2B/db_start^2), marched from a to a0.
    auto rhs = [&](double aa, const TraceState& s) {
        inside(aa, s.b);
        const double mb = tr.eval(tr.m_b, aa, s.b);
        return TraceState{-tr.eval(tr.m, aa, s.b), -mb * s.p, -tr.eval(tr.m_bb, aa, s.b) * s.p * s.p - mb * s.z};
    };

    const double span = a0 - a;
    const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(span) / options.max_step)));
    const double h = span / steps;
    TraceState st{b, 1.0, 0.0};
    double aa = a;
    for (int k = 0; k < steps; ++k) {
        const TraceState k1 = rhs(aa, st);
        const TraceState k2 = rhs(aa + 0.5 * h, {st.b + 0.5 * h * k1.b, st.p + 0.5 * h * k1.p, st.z + 0.5 * h * k1.z});
        const TraceState k3 = rhs(aa + 0.5 * h, {st.b + 0.5 * h * k2.b, st.p + 0.5 * h * k2.p, st.z + 0.5 * h * k2.z});
        const TraceState k4 = rhs(aa + h, {st.b + h * k3.b, st.p + h * k3.p, st.z + h * k3.z});
        st.b += h / 6.0 * (k1.b + 2.0 * k2.b + 2.0 * k3.b + k4.b);
        st.p += h / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
        st.z += h / 6.0 * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z);
        aa = (k + 1 == steps) ? a0 : aa + h;
    }
    inside(a0, st.b);

    // The coordinate is constant along curves, so d_a = m d_b.
    const double m = tr.eval(tr.m, a, b);
    const double ma = tr.eval(tr.m_a, a, b);
    const double mb = tr.eval(tr.m_b, a, b);
    d.v = st.b - b0;
    d.db = st.p;
    d.dbb = st.z;
    d.da = m * d.db;
    d.dab = mb * d.db + m * d.dbb;
    d.daa = ma * d.db + m * d.dab;
    return d;
}

void to_global(const LocalDerivs& d, bool swapped, double& value, double& dx, double& dy, Eigen::Vector3d& second)
{
    value = d.v;
    if (!swapped) {
        dx = d.da;
        dy = d.db;
        second << d.daa, d.dab, d.dbb;
    } else {
        dx = d.db;
        dy = d.da;
        second << d.dbb, d.dab, d.daa;
    }
}

double root_with_sign(double lead, double h11, double delta, double sign)
{
    // -(h11 - sign*sqrt(delta)) / (2 lead)
    return -(h11 - sign * std::sqrt(delta)) / (2.0 * lead);
}

} // namespace

std::string to_string(MapCase c)
{
    switch (c) {
    case MapCase::OrthotropicIdentity:
        return "orthotropic-identity";
    case MapCase::A1112:
        return "a1112-nonzero";
    case MapCase::A1222:
        return "a1222-nonzero";
    }
    return "?";
}

SlopeRoots characteristic_slopes(const U2System& sys, double x, double y)
{
    const double h20 = sys.hyper[0](x, y), h11 = sys.hyper[1](x, y), h02 = sys.hyper[2](x, y);
    SlopeRoots r;
    r.delta = h11 * h11 - 4.0 * h20 * h02;
    if (!(r.delta > 0.0))
        throw PreconditionError(kStage, "hyperbolicity violated: delta = " + std::to_string(r.delta) + " at " +
                                            point_text(x, y));
    if (h20 == 0.0 && h02 == 0.0) {
        r.kind = MapCase::OrthotropicIdentity;
        return r;
    }
    const bool use_h20 = h20 != 0.0;
    const double lead = use_h20 ? h20 : h02;
    r.kind = use_h20 ? MapCase::A1112 : MapCase::A1222;
    r.s_root = root_with_sign(lead, h11, r.delta, 1.0);
    r.t_root = root_with_sign(lead, h11, r.delta, -1.0);
    return r;
}

CharacteristicMap build_map(const U2System& sys, const Region& region, double x0, double y0, MapOptions options)
{
    if (!region.contains(x0, y0))
        throw PreconditionError(kStage, "point " + point_text(x0, y0) + " lies outside the region");

    CharacteristicMap map;
    map.x0_ = x0;
    map.y0_ = y0;
    map.region_ = region;
    map.options_ = options;

    const int n = 17;
    double max_h = 0.0, min_h20 = std::numeric_limits<double>::infinity(), min_h02 = min_h20;
    double max_h20 = 0.0, max_h02 = 0.0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double x = region.x_node(i, n), y = region.y_node(j, n);
            const double h20 = sys.hyper[0](x, y), h11 = sys.hyper[1](x, y), h02 = sys.hyper[2](x, y);
            const double delta = h11 * h11 - 4.0 * h20 * h02;
            if (!(delta > 0.0))
                throw PreconditionError(kStage, "hyperbolicity violated: delta = " + std::to_string(delta) +
                                                    " at " + point_text(x, y));
            max_h = std::max({max_h, std::abs(h20), std::abs(h11), std::abs(h02)});
            min_h20 = std::min(min_h20, std::abs(h20));
            min_h02 = std::min(min_h02, std::abs(h02));
            max_h20 = std::max(max_h20, std::abs(h20));
            max_h02 = std::max(max_h02, std::abs(h02));
        }

    const double tiny = 1e-12 * max_h;
    if (max_h20 <= tiny && max_h02 <= tiny) {
        map.kind_ = MapCase::OrthotropicIdentity;
        return map;
    }
    if (min_h20 > 1e-10 * max_h)
        map.kind_ = MapCase::A1112;
    else if (min_h02 > 1e-10 * max_h)
        map.kind_ = MapCase::A1222;
    else
        throw PreconditionError(kStage, "neither a1112 nor a1222 is bounded away from zero on the region");

    const bool swapped = map.kind_ == MapCase::A1222;
    const ScalarField& h11 = sys.hyper[1];
    const ScalarField& lead = swapped ? sys.hyper[2] : sys.hyper[0];
    const bool constant = sys.hyper[0].is_constant() && sys.hyper[1].is_constant() && sys.hyper[2].is_constant();
    map.traced_ = !constant || options.force_traced;

    auto make_tracer = [&](double sign) {
        auto tr = std::make_shared<Tracer>();
        tr->swapped = swapped;
        if (!map.traced_) {
            const SlopeRoots r = characteristic_slopes(sys, x0, y0);
            tr->linear = true;
            tr->root = sign > 0 ? r.s_root : r.t_root;
            return tr;
        }
        const ScalarField delta = h11 * h11 - 4.0 * sys.hyper[0] * sys.hyper[2];
        tr->m = -(h11 - sign * sqrt(delta)) / (2.0 * lead);
        const Variable va = swapped ? Variable::Y : Variable::X;
        const Variable vb = swapped ? Variable::X : Variable::Y;
        tr->m_a = differentiate(tr->m, va);
        tr->m_b = differentiate(tr->m, vb);
        tr->m_bb = differentiate(tr->m_b, vb);
        return tr;
    };
    map.s_tracer_ = make_tracer(1.0);
    map.t_tracer_ = make_tracer(-1.0);
    map.J0_ = map.jet(x0, y0).J;
    return map;
}

MapJet CharacteristicMap::jet(double x, double y) const
{
    MapJet out;
    if (kind_ == MapCase::OrthotropicIdentity) {
        out.s = x - x0_;
        out.t = y - y0_;
        return out;
    }
    const bool swapped = kind_ == MapCase::A1222;
    const double a = swapped ? y : x, b = swapped ? x : y;
    const double a0 = swapped ? y0_ : x0_, b0 = swapped ? x0_ : y0_;
    double sx, sy, tx, ty;
    to_global(local_derivs(*s_tracer_, a, b, a0, b0, region_, options_), swapped, out.s, sx, sy, out.s2);
    to_global(local_derivs(*t_tracer_, a, b, a0, b0, region_, options_), swapped, out.t, tx, ty, out.t2);
    out.J << sx, tx, sy, ty;
    return out;
}

Eigen::Vector2d CharacteristicMap::forward(double x, double y) const
{
    const MapJet j = jet(x, y);
    return {j.s, j.t};
}

Eigen::Vector2d CharacteristicMap::inverse(double s, double t) const
{
    const Eigen::Vector2d target(s, t);
    const Eigen::Vector2d origin(x0_, y0_);
    if (kind_ == MapCase::OrthotropicIdentity)
        return origin + target;
    Eigen::Vector2d p = origin + J0_.transpose().partialPivLu().solve(target);
    if (!traced_)
        return p;

    for (int it = 0; it < 50; ++it) {
        if (!region_.contains(p.x(), p.y(), 1e-12))
            throw PreconditionError(kStage, "inverse map leaves the region for (s, t) = " + point_text(s, t));
        const MapJet j = jet(p.x(), p.y());
        const Eigen::Vector2d f = Eigen::Vector2d(j.s, j.t) - target;
        const Eigen::Vector2d step = j.J.transpose().partialPivLu().solve(f);
        p -= step;
        if (step.norm() <= 1e-14 * (1.0 + p.norm()))
            return p;
    }
    throw PreconditionError(kStage, "inverse map did not converge for (s, t) = " + point_text(s, t));
}

TransformDetail transform_at(const U2System& sys, const MapJet& jet, double x, double y)
{
    double h[6], e[6];
    for (int k = 0; k < 6; ++k) {
        h[k] = sys.hyper[k](x, y);
        e[k] = sys.ell[k](x, y);
    }
    const double sx = jet.J(0, 0), tx = jet.J(0, 1), sy = jet.J(1, 0), ty = jet.J(1, 1);
    const Eigen::Vector3d& s2 = jet.s2;
    const Eigen::Vector3d& t2 = jet.t2;

    TransformDetail d;
    d.hyper_ss = h[0] * sx * sx + h[1] * sx * sy + h[2] * sy * sy;
    d.hyper_tt = h[0] * tx * tx + h[1] * tx * ty + h[2] * ty * ty;
    d.K = 2.0 * h[0] * sx * tx + h[1] * (sx * ty + sy * tx) + 2.0 * h[2] * sy * ty;
    const double jscale = jet.J.cwiseAbs().maxCoeff();
    d.scale = (std::abs(h[0]) + std::abs(h[1]) + std::abs(h[2])) * jscale * jscale;

    const double ws_h = h[0] * s2(0) + h[1] * s2(1) + h[2] * s2(2) + h[3] * sx + h[4] * sy;
    const double wt_h = h[0] * t2(0) + h[1] * t2(1) + h[2] * t2(2) + h[3] * tx + h[4] * ty;
    CharacteristicCoefficients& c = d.coeff;
    if (d.K != 0.0) {
        c.B11 = ws_h / d.K;
        c.B12 = wt_h / d.K;
        c.C1 = h[5] / d.K;
    }
    c.A11 = e[0] * sx * sx + e[1] * sx * sy + e[2] * sy * sy;
    c.A12 = 0.5 * (2.0 * e[0] * sx * tx + e[1] * (sx * ty + sy * tx) + 2.0 * e[2] * sy * ty);
    c.A22 = e[0] * tx * tx + e[1] * tx * ty + e[2] * ty * ty;
    c.B21 = e[0] * s2(0) + e[1] * s2(1) + e[2] * s2(2) + e[3] * sx + e[4] * sy;
    c.B22 = e[0] * t2(0) + e[1] * t2(1) + e[2] * t2(2) + e[3] * tx + e[4] * ty;
    c.C2 = e[5];
    return d;
}

TransformedSystem transform_system(const U2System& sys, std::shared_ptr<const CharacteristicMap> map,
                                   const Region& region, TransformValidation* validation, int check_n)
{
    if (!map)
        throw PreconditionError(kStage, "transform_system needs a map");
    if (check_n < 2)
        check_n = 2;
    const double x0 = map->x0(), y0 = map->y0();
    auto delta_at = [&](double x, double y) {
        const double h20 = sys.hyper[0](x, y), h11 = sys.hyper[1](x, y), h02 = sys.hyper[2](x, y);
        return h11 * h11 - 4.0 * h20 * h02;
    };
    const double delta0 = delta_at(x0, y0);
    if (!(delta0 > 0.0))
        throw PreconditionError(kStage, "hyperbolicity violated at the reference point");

    // Largest dyadic epsilon whose preimage stays in the region with delta >= delta0/2.
    double epsilon = 0.0;
    for (double eps = 0.5; eps >= std::ldexp(1.0, -20); eps *= 0.5) {
        bool ok = true;
        for (int j = 0; j < check_n && ok; ++j)
            for (int i = 0; i < check_n && ok; ++i) {
                const double s = -eps + 2.0 * eps * i / (check_n - 1);
                const double t = -eps + 2.0 * eps * j / (check_n - 1);
                try {
                    const Eigen::Vector2d p = map->inverse(s, t);
                    ok = region.contains(p.x(), p.y()) && delta_at(p.x(), p.y()) >= 0.5 * delta0;
                } catch (const PreconditionError&) {
                    ok = false;
                }
            }
        if (ok) {
            epsilon = eps;
            break;
        }
    }
    if (epsilon == 0.0)
        throw PreconditionError(kStage, "no admissible epsilon: the map degenerates next to the reference point");

    TransformValidation v;
    v.min_abs_A11 = v.min_abs_A22 = v.min_abs_K = std::numeric_limits<double>::infinity();
    v.max_ellipticity_sign = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < check_n; ++j)
        for (int i = 0; i < check_n; ++i) {
            const double s = -epsilon + 2.0 * epsilon * i / (check_n - 1);
            const double t = -epsilon + 2.0 * epsilon * j / (check_n - 1);
            const Eigen::Vector2d p = map->inverse(s, t);
            const MapJet jet = map->jet(p.x(), p.y());
            const TransformDetail d = transform_at(sys, jet, p.x(), p.y());
            const double rel = std::max(std::abs(d.hyper_ss), std::abs(d.hyper_tt)) / d.scale;
            v.max_hyper_residual = std::max(v.max_hyper_residual, rel);
            v.min_abs_K = std::min(v.min_abs_K, std::abs(d.K) / d.scale);
            const auto& c = d.coeff;
            v.max_ellipticity_sign = std::max(v.max_ellipticity_sign, c.A12 * c.A12 - c.A11 * c.A22);
            v.min_abs_A11 = std::min(v.min_abs_A11, std::abs(c.A11));
            v.min_abs_A22 = std::min(v.min_abs_A22, std::abs(c.A22));
        }
    if (validation)
        *validation = v;

    if (!(v.max_hyper_residual <= 1e-8))
        throw PreconditionError(kStage, "d_ss/d_tt terms of the hyperbolic equation do not vanish (relative " +
                                            std::to_string(v.max_hyper_residual) + ")");
    if (!(v.min_abs_K > 1e-12))
        throw PreconditionError(kStage, "the d_st coefficient vanishes");
    if (!(v.max_ellipticity_sign < 0.0))
        throw PreconditionError(kStage, "transformed elliptic equation lost ellipticity");

    TransformedSystem out;
    out.epsilon = epsilon;
    out.map = map;
    out.coefficients = [sys, map](double s, double t) {
        const Eigen::Vector2d p = map->inverse(s, t);
        return transform_at(sys, map->jet(p.x(), p.y()), p.x(), p.y()).coeff;
    };
    return out;
}

TransformedSystem direct_system(const CharacteristicFields& f, double epsilon)
{
    TransformedSystem out;
    out.epsilon = epsilon;
    out.coefficients = [f](double s, double t) {
        CharacteristicCoefficients c;
        c.B11 = f.B11(s, t);
        c.B12 = f.B12(s, t);
        c.C1 = f.C1(s, t);
        c.A11 = f.A11(s, t);
        c.A12 = f.A12(s, t);
        c.A22 = f.A22(s, t);
        c.B21 = f.B21(s, t);
        c.B22 = f.B22(s, t);
        c.C2 = f.C2(s, t);
        return c;
    };
    return out;
}

Eigen::Matrix3d second_derivative_matrix(const Eigen::Matrix2d& J)
{
    const double sx = J(0, 0), tx = J(0, 1), sy = J(1, 0), ty = J(1, 1);
    Eigen::Matrix3d m;
    m << sx * sx, 2.0 * sx * tx, tx * tx,
         sx * sy, sx * ty + sy * tx, tx * ty,
         sy * sy, 2.0 * sy * ty, ty * ty;
    return m;
}

WPointData transfer_point_data(const U2System& sys, const CharacteristicMap& map, const U2PointData& data,
                               double rank_tol)
{
    const double x0 = map.x0(), y0 = map.y0();
    double h[6], e[6];
    for (int k = 0; k < 6; ++k) {
        h[k] = sys.hyper[k](x0, y0);
        e[k] = sys.ell[k](x0, y0);
    }

    // Unknown second derivatives: u_xy always, plus whichever of u_xx / u_yy is missing.
    const std::optional<double> given[3] = {data.uxx, std::nullopt, data.uyy};
    Eigen::Vector2d rhs(-(h[3] * data.ux + h[4] * data.uy + h[5] * data.u),
                        -(e[3] * data.ux + e[4] * data.uy + e[5] * data.u));
    Eigen::MatrixXd unknown(2, 0);
    int cols[3];
    int nu = 0;
    for (int k = 0; k < 3; ++k) {
        if (given[k]) {
            rhs(0) -= h[k] * *given[k];
            rhs(1) -= e[k] * *given[k];
        } else {
            unknown.conservativeResize(2, nu + 1);
            unknown.col(nu) << h[k], e[k];
            cols[nu++] = k;
        }
    }
    if (nu == 3)
        throw PreconditionError("transfer", "at least one of u_xx, u_yy must be given");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(unknown, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto sv = svd.singularValues();
    int rank = 0;
    for (int k = 0; k < sv.size(); ++k)
        if (sv(0) > 0.0 && sv(k) > rank_tol * sv(0))
            ++rank;
    if (rank < nu)
        throw PreconditionError("transfer", "point data do not determine the second derivatives: rank " +
                                                std::to_string(rank) + " < " + std::to_string(nu) +
                                                " (the reduced equations are linearly dependent)");
    const Eigen::VectorXd sol = svd.solve(rhs);

    WPointData out;
    double second[3];
    for (int k = 0; k < 3; ++k)
        if (given[k])
            second[k] = *given[k];
    for (int q = 0; q < nu; ++q)
        second[cols[q]] = sol(q);
    out.uxx = second[0];
    out.uxy = second[1];
    out.uyy = second[2];
    out.consistency = (unknown * sol - rhs).norm();

    const MapJet jet = map.jet(x0, y0);
    const double det = jet.J.determinant();
    if (!(std::abs(det) > 1e-14 * std::max(1.0, jet.J.squaredNorm())))
        throw PreconditionError("transfer", "Jacobian of the characteristic map is singular");

    const Eigen::Vector2d first = jet.J.partialPivLu().solve(Eigen::Vector2d(data.ux, data.uy));
    out.w = data.u;
    out.ws = first(0);
    out.wt = first(1);
    const Eigen::Vector3d lower = jet.s2 * out.ws + jet.t2 * out.wt;
    const Eigen::Vector3d rhs2 = Eigen::Vector3d(out.uxx, out.uxy, out.uyy) - lower;
    const Eigen::Vector3d w2 = second_derivative_matrix(jet.J).partialPivLu().solve(rhs2);
    out.wss = w2(0);
    out.wst = w2(1);
    out.wtt = w2(2);
    return out;
}

} // namespace ucp
