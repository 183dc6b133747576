#pragma once

// Marching solver for the integro-differential initial value problem
//   A(s) u'(s) + P(s) u(s) + int_0^s K(s, sigma) u(sigma) dsigma = g(s),  u(0) = u0
// on a uniform grid: trapezoid rule in the memory integral and the implicit
// trapezoid (Crank-Nicolson) step for the derivative, marching outward from 0.

#include "ucp/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <string>

namespace ucp {

/// One-directional march over nodes 0..N with signed spacing h. `kernel(k, j)`
/// returns K(s_k, s_j) for j <= k. Throws PreconditionError if |A| < min_leading.
template <class Scalar, class Kernel>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> volterra_march(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& A,
                                                        const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& P,
                                                        Kernel&& kernel,
                                                        const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& g,
                                                        Scalar h, Scalar u0, Scalar min_leading = Scalar(1e-12))
{
    const Eigen::Index N = A.size();
    for (Eigen::Index k = 0; k < N; ++k)
        if (!(std::abs(A(k)) >= min_leading))
            throw PreconditionError("volterra", "leading coefficient " + std::to_string(double(A(k))) +
                                                    " below threshold at node " + std::to_string(k));

    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> u(N);
    if (N == 0)
        return u;
    u(0) = u0;

    // rate(k) = u'(s_k) given u(0..k).
    auto memory = [&](Eigen::Index k, bool include_last) {
        if (k == 0)
            return Scalar(0);
        Scalar sum = Scalar(0.5) * kernel(k, 0) * u(0);
        for (Eigen::Index j = 1; j < k; ++j)
            sum += kernel(k, j) * u(j);
        if (include_last)
            sum += Scalar(0.5) * kernel(k, k) * u(k);
        return h * sum;
    };
    Scalar rate = (g(0) - P(0) * u(0)) / A(0);
    for (Eigen::Index k = 0; k + 1 < N; ++k) {
        const Eigen::Index k1 = k + 1;
        // rate(k1) = (g - P u - memory_known - h/2 K(k1,k1) u) / A, linear in u = u(k1).
        const Scalar known = memory(k1, false);
        const Scalar diag = Scalar(0.5) * h * kernel(k1, k1);
        const Scalar denom = Scalar(1) + Scalar(0.5) * h * (P(k1) + diag) / A(k1);
        if (denom == Scalar(0))
            throw PreconditionError("volterra", "implicit step is singular at node " + std::to_string(k1));
        u(k1) = (u(k) + Scalar(0.5) * h * (rate + (g(k1) - known) / A(k1))) / denom;
        rate = (g(k1) - P(k1) * u(k1) - known - diag * u(k1)) / A(k1);
    }
    return u;
}

/// Solution on the n equispaced nodes of [-epsilon, epsilon] (n odd, so 0 is the
/// middle node), marching from the middle in both directions. kernel(i, j) takes
/// global node indices.
template <class Scalar, class Kernel>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> volterra_symmetric(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& A,
                                                            const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& P,
                                                            Kernel&& kernel,
                                                            const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& g,
                                                            Scalar epsilon, Scalar u0,
                                                            Scalar min_leading = Scalar(1e-12))
{
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    const Eigen::Index n = A.size();
    if (n < 3 || n % 2 == 0)
        throw PreconditionError("volterra", "node count must be odd and at least 3");
    const Eigen::Index mid = n / 2;
    const Scalar h = Scalar(2) * epsilon / Scalar(n - 1);

    Vec out(n);
    for (int dir : {1, -1}) {
        const Eigen::Index len = mid + 1;
        Vec a(len), p(len), f(len);
        for (Eigen::Index k = 0; k < len; ++k) {
            const Eigen::Index idx = mid + dir * k;
            a(k) = A(idx);
            p(k) = P(idx);
            f(k) = g(idx);
        }
        const Vec part = volterra_march<Scalar>(
            a, p, [&](Eigen::Index k, Eigen::Index j) { return kernel(mid + dir * k, mid + dir * j); }, f,
            dir * h, u0, min_leading);
        for (Eigen::Index k = 0; k < len; ++k)
            out(mid + dir * k) = part(k);
    }
    return out;
}

/// Convenience wrapper taking coordinate functions.
inline Eigen::VectorXd volterra_ivp(const std::function<double(double)>& A, const std::function<double(double)>& P,
                                    const std::function<double(double, double)>& K,
                                    const std::function<double(double)>& g, double epsilon, int n, double u0 = 0.0,
                                    double min_leading = 1e-12)
{
    const double h = 2.0 * epsilon / (n - 1);
    Eigen::VectorXd a(n), p(n), f(n);
    for (int i = 0; i < n; ++i) {
        const double s = -epsilon + i * h;
        a(i) = A(s);
        p(i) = P(s);
        f(i) = g(s);
    }
    return volterra_symmetric<double>(
        a, p, [&](Eigen::Index i, Eigen::Index j) { return K(-epsilon + i * h, -epsilon + j * h); }, f, epsilon, u0,
        min_leading);
}

} // namespace ucp
