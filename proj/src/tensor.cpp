#include "ucp/tensor.hpp"

#include "ucp/errors.hpp"
#include "ucp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace ucp {

const ScalarField& ElasticityCoefficients::a(int i, int j, int k, int l) const
{
    const int twos = (i == 2) + (j == 2) + (k == 2) + (l == 2);
    switch (twos) {
    case 0:
        return a1111;
    case 1:
        return a1112;
    case 2:
        // 1122/2211 pair equal indices within each index pair; 1212 and friends do not.
        return i == j ? a1122 : a1212;
    case 3:
        return a1222;
    default:
        return a2222;
    }
}

ElasticityCoefficients isotropic(const ScalarField& mu, const ScalarField& lambda)
{
    ElasticityCoefficients c;
    c.a1111 = 2.0 * mu + lambda;
    c.a2222 = c.a1111;
    c.a1212 = mu;
    c.a1122 = lambda;
    return c;
}

ElasticityCoefficients with_divergence_terms(ElasticityCoefficients coeffs)
{
    const Variable var[2] = {Variable::X, Variable::Y};
    for (int i = 1; i <= 2; ++i)
        for (int k = 1; k <= 2; ++k)
            for (int l = 1; l <= 2; ++l) {
                ScalarField sum;
                for (int j = 1; j <= 2; ++j)
                    sum = sum + differentiate(coeffs.a(i, j, k, l), var[j - 1]);
                coeffs.b[i - 1][k - 1][l - 1] = coeffs.b[i - 1][k - 1][l - 1] + sum;
            }
    return coeffs;
}

ElasticityCoefficients scaled(const ElasticityCoefficients& coeffs, double factor)
{
    ElasticityCoefficients out = coeffs;
    for (ScalarField* f : {&out.a1111, &out.a1112, &out.a1122, &out.a1212, &out.a1222, &out.a2222})
        *f = factor * *f;
    for (auto& plane : out.b)
        for (auto& row : plane)
            for (auto& f : row)
                f = factor * f;
    for (auto& row : out.c)
        for (auto& f : row)
            f = factor * f;
    return out;
}

LambdaMatrices lambda_matrices(const ElasticityCoefficients& c, double x, double y)
{
    const double a1111 = c.a1111(x, y), a1112 = c.a1112(x, y), a1122 = c.a1122(x, y);
    const double a1212 = c.a1212(x, y), a1222 = c.a1222(x, y), a2222 = c.a2222(x, y);
    LambdaMatrices m;
    m.L11 << a1111, a1112, a1112, a1212;
    m.L12 << 2.0 * a1112, a1212 + a1122, a1212 + a1122, 2.0 * a1222;
    m.L22 << a1212, a1222, a1222, a2222;
    return m;
}

namespace {

using Tensor4 = std::array<std::array<std::array<std::array<double, 2>, 2>, 2>, 2>;

Tensor4 full_tensor(const ElasticityCoefficients& c, double x, double y)
{
    const double v[6] = {c.a1111(x, y), c.a1112(x, y), c.a1122(x, y),
                         c.a1212(x, y), c.a1222(x, y), c.a2222(x, y)};
    Tensor4 t{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) {
                    const int twos = i + j + k + l;
                    int idx = 0;
                    switch (twos) {
                    case 0: idx = 0; break;
                    case 1: idx = 1; break;
                    case 2: idx = (i == j) ? 2 : 3; break;
                    case 3: idx = 4; break;
                    default: idx = 5; break;
                    }
                    t[i][j][k][l] = v[idx];
                }
    return t;
}

Eigen::Matrix2d acoustic(const Tensor4& t, const Eigen::Vector2d& xi)
{
    Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l)
                    m(j, l) += t[i][j][k][l] * xi(i) * xi(k);
    return m;
}

double min_eig(const Eigen::Matrix2d& m)
{
    // Closed form for symmetric 2x2.
    const double mean = 0.5 * (m(0, 0) + m(1, 1));
    const double half = 0.5 * (m(0, 0) - m(1, 1));
    return mean - std::hypot(half, 0.5 * (m(0, 1) + m(1, 0)));
}

double angle_objective(const Tensor4& t, double alpha)
{
    return min_eig(acoustic(t, Eigen::Vector2d(std::cos(alpha), std::sin(alpha))));
}

template <class Fn>
std::vector<double> sweep(const Region& region, int n, Fn&& fn)
{
    std::vector<double> out(static_cast<std::size_t>(n) * n);
    parallel_for(out.size(), [&](std::size_t idx) {
        const int i = static_cast<int>(idx % n);
        const int j = static_cast<int>(idx / n);
        out[idx] = fn(region.x_node(i, n), region.y_node(j, n));
    });
    return out;
}

double min_of(const std::vector<double>& v)
{
    double m = std::numeric_limits<double>::infinity();
    for (double d : v)
        m = std::min(m, d);
    return m;
}

} // namespace

double ellipticity_form(const ElasticityCoefficients& coeffs, double x, double y,
                        const Eigen::Vector2d& xi, const Eigen::Vector2d& eta)
{
    return eta.dot(acoustic(full_tensor(coeffs, x, y), xi) * eta);
}

Eigen::Matrix2d acoustic_matrix(const ElasticityCoefficients& coeffs, double x, double y,
                                const Eigen::Vector2d& xi)
{
    return acoustic(full_tensor(coeffs, x, y), xi);
}

double pointwise_ellipticity(const ElasticityCoefficients& coeffs, double x, double y, int angles)
{
    if (angles < 4)
        throw DomainError("pointwise_ellipticity: need at least 4 angles");
    const Tensor4 t = full_tensor(coeffs, x, y);
    const double step = std::numbers::pi / angles;

    std::vector<double> f(angles);
    for (int k = 0; k < angles; ++k)
        f[k] = angle_objective(t, k * step);

    double best = min_of(f);
    // Newton refinement from every sampled local minimum (the objective is pi-periodic).
    const double h = 1e-4;
    for (int k = 0; k < angles; ++k) {
        const double prev = f[(k + angles - 1) % angles];
        const double next = f[(k + 1) % angles];
        if (f[k] > prev || f[k] > next)
            continue;
        double alpha = k * step;
        double value = f[k];
        for (int it = 0; it < 8; ++it) {
            const double fp = angle_objective(t, alpha + h);
            const double fm = angle_objective(t, alpha - h);
            const double d1 = (fp - fm) / (2.0 * h);
            const double d2 = (fp - 2.0 * value + fm) / (h * h);
            if (!(d2 > 0.0))
                break;
            const double delta = std::clamp(-d1 / d2, -step, step);
            const double candidate = angle_objective(t, alpha + delta);
            if (!(candidate < value))
                break;
            alpha += delta;
            value = candidate;
            if (std::abs(delta) < 1e-12)
                break;
        }
        best = std::min(best, value);
    }
    return best;
}

double ellipticity_margin(const ElasticityCoefficients& coeffs, const Region& region, int n, int angles)
{
    if (n < 2)
        throw DomainError("ellipticity_margin: n must be at least 2");
    return min_of(sweep(region, n, [&](double x, double y) { return pointwise_ellipticity(coeffs, x, y, angles); }));
}

Eigen::Matrix3d voigt_matrix(const ElasticityCoefficients& c, double x, double y)
{
    const double r2 = std::numbers::sqrt2;
    const double a1111 = c.a1111(x, y), a1112 = c.a1112(x, y), a1122 = c.a1122(x, y);
    const double a1212 = c.a1212(x, y), a1222 = c.a1222(x, y), a2222 = c.a2222(x, y);
    Eigen::Matrix3d v;
    v << a1111, a1122, r2 * a1112,
         a1122, a2222, r2 * a1222,
         r2 * a1112, r2 * a1222, 2.0 * a1212;
    return v;
}

double convexity_margin(const ElasticityCoefficients& coeffs, const Region& region, int n)
{
    if (n < 2)
        throw DomainError("convexity_margin: n must be at least 2");
    return min_of(sweep(region, n, [&](double x, double y) {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(voigt_matrix(coeffs, x, y), Eigen::EigenvaluesOnly);
        return es.eigenvalues()(0);
    }));
}

double hyperbolicity_delta(const ElasticityCoefficients& c, double x, double y)
{
    const double s = c.a1212(x, y) + c.a1122(x, y);
    return s * s - 4.0 * c.a1112(x, y) * c.a1222(x, y);
}

DeltaRange hyperbolicity_delta_range(const ElasticityCoefficients& coeffs, const Region& region, int n)
{
    const auto v = sweep(region, n, [&](double x, double y) { return hyperbolicity_delta(coeffs, x, y); });
    return {*std::min_element(v.begin(), v.end()), *std::max_element(v.begin(), v.end())};
}

// ---------------------------------------------------------------------------

namespace {

using cd = std::complex<double>;
using Quartic = std::array<double, 5>; // ascending powers

Quartic pencil_determinant(const LambdaMatrices& lm)
{
    auto entry = [&](int i, int j) { return std::array<double, 3>{lm.L22(i, j), lm.L12(i, j), lm.L11(i, j)}; };
    auto mul = [](const std::array<double, 3>& p, const std::array<double, 3>& q) {
        Quartic r{};
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                r[a + b] += p[a] * q[b];
        return r;
    };
    const Quartic d = mul(entry(0, 0), entry(1, 1));
    const Quartic o = mul(entry(0, 1), entry(1, 0));
    Quartic r;
    for (int k = 0; k < 5; ++k)
        r[k] = d[k] - o[k];
    return r;
}

cd horner(const Quartic& p, cd z)
{
    cd acc = 0.0;
    for (int k = 4; k >= 0; --k)
        acc = acc * z + p[k];
    return acc;
}

cd horner_derivative(const Quartic& p, cd z)
{
    cd acc = 0.0;
    for (int k = 4; k >= 1; --k)
        acc = acc * z + static_cast<double>(k) * p[k];
    return acc;
}

Eigen::Matrix2cd pencil_at(const LambdaMatrices& lm, cd theta)
{
    return lm.L11.cast<cd>() * theta * theta + lm.L12.cast<cd>() * theta + lm.L22.cast<cd>();
}

} // namespace

bool PencilEigenpairs::defective() const
{
    return std::any_of(null_dimension.begin(), null_dimension.end(), [](int d) { return d != 1; });
}

double PencilEigenpairs::min_conditioning() const
{
    return *std::min_element(conditioning.begin(), conditioning.end());
}

PencilEigenpairs pencil_eigenpairs(const ElasticityCoefficients& coeffs, double x, double y)
{
    return pencil_eigenpairs(lambda_matrices(coeffs, x, y));
}

PencilEigenpairs pencil_eigenpairs(const LambdaMatrices& lm)
{
    const double scale11 = lm.L11.norm();
    if (scale11 == 0.0 || std::abs(lm.L11.determinant()) <= 1e-14 * scale11 * scale11)
        throw PreconditionError("pencil", "Lambda11 is singular");

    const Eigen::Matrix2d inv = lm.L11.inverse();
    Eigen::Matrix4d companion = Eigen::Matrix4d::Zero();
    companion.topRightCorner<2, 2>().setIdentity();
    companion.bottomLeftCorner<2, 2>() = -inv * lm.L22;
    companion.bottomRightCorner<2, 2>() = -inv * lm.L12;

    Eigen::EigenSolver<Eigen::Matrix4d> es(companion, false);
    std::array<cd, 4> raw;
    for (int k = 0; k < 4; ++k)
        raw[k] = es.eigenvalues()(k);

    // Multiple roots split by O(sqrt(eps)) in the eigensolver; their cluster mean is accurate.
    const Quartic det = pencil_determinant(lm);
    std::array<cd, 4> roots = raw;
    std::array<bool, 4> clustered{};
    for (int a = 0; a < 4; ++a) {
        cd sum = raw[a];
        int count = 1;
        for (int b = 0; b < 4; ++b)
            if (b != a && std::abs(raw[a] - raw[b]) <= 1e-5 * (1.0 + std::abs(raw[a]))) {
                sum += raw[b];
                ++count;
            }
        if (count > 1) {
            roots[a] = sum / static_cast<double>(count);
            clustered[a] = true;
        }
    }
    for (int a = 0; a < 4; ++a) {
        if (clustered[a])
            continue;
        cd z = roots[a];
        for (int it = 0; it < 3; ++it) {
            const cd dp = horner_derivative(det, z);
            if (dp == 0.0)
                break;
            const cd next = z - horner(det, z) / dp;
            if (!(std::abs(horner(det, next)) < std::abs(horner(det, z))))
                break;
            z = next;
        }
        roots[a] = z;
    }

    // Deterministic order: by real part, then imaginary part.
    std::sort(roots.begin(), roots.end(), [](cd p, cd q) {
        if (p.real() != q.real())
            return p.real() < q.real();
        return p.imag() < q.imag();
    });

    PencilEigenpairs out;
    for (int a = 0; a < 4; ++a) {
        const cd theta = roots[a];
        const Eigen::Matrix2cd m = pencil_at(lm, theta);
        const double scale = scale11 * std::norm(theta) + lm.L12.norm() * std::abs(theta) + lm.L22.norm();
        Eigen::JacobiSVD<Eigen::Matrix2cd> svd(m);
        const auto sv = svd.singularValues();
        const double tol = 1e-8 * scale;
        out.null_dimension[a] = (sv(0) <= tol ? 1 : 0) + (sv(1) <= tol ? 1 : 0);

        Eigen::Vector2cd z;
        if (out.null_dimension[a] >= 2) {
            // Whole plane is null: pick the vector maximizing |det(z, conj z)|.
            const double sign = theta.imag() >= 0.0 ? 1.0 : -1.0;
            z << cd(1.0, 0.0), cd(0.0, sign);
        } else {
            const int row = m.row(0).norm() >= m.row(1).norm() ? 0 : 1;
            z << -m(row, 1), m(row, 0);
            if (z.norm() == 0.0)
                z << 1.0, 0.0;
        }
        z.normalize();
        out.roots[a] = theta;
        out.vectors[a] = z;
        out.conditioning[a] = std::abs(z(0) * std::conj(z(1)) - z(1) * std::conj(z(0)));
        out.residual[a] = (m * z).norm();
    }
    return out;
}

} // namespace ucp
