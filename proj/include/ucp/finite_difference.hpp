#pragma once

// Finite-difference weights on arbitrary 1D node sets (Fornberg's recursion).

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace ucp {

/// weights(k, j): weight of node j in the k-th derivative at z, for k = 0..m.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> fornberg_weights(Scalar z, const std::vector<Scalar>& x, int m)
{
    const int n = static_cast<int>(x.size());
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> c =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(m + 1, n);
    Scalar c1 = 1, c4 = x[0] - z;
    c(0, 0) = 1;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, m);
        Scalar c2 = 1;
        const Scalar c5 = c4;
        c4 = x[i] - z;
        for (int j = 0; j < i; ++j) {
            const Scalar c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c(k, i) = c1 * (k * c(k - 1, i - 1) - c5 * c(k, i - 1)) / c2;
                c(0, i) = -c1 * c5 * c(0, i - 1) / c2;
            }
            for (int k = mn; k >= 1; --k)
                c(k, j) = (c4 * c(k, j) - k * c(k - 1, j)) / c3;
            c(0, j) = c4 * c(0, j) / c3;
        }
        c1 = c2;
    }
    return c;
}

/// Integer offsets of a stencil with `width` nodes for a point at index i on a
/// grid of n nodes spaced `stride` apart: centered when it fits, otherwise
/// shifted inward (one-sided at the boundary).
inline std::vector<int> stencil_offsets(int i, int n, int width, int stride = 1)
{
    int lo = -(width / 2);
    // Shift so that i + stride*lo >= 0 and i + stride*(lo+width-1) <= n-1.
    while (i + stride * lo < 0)
        ++lo;
    while (i + stride * (lo + width - 1) > n - 1)
        --lo;
    std::vector<int> off(width);
    for (int k = 0; k < width; ++k)
        off[k] = stride * (lo + k);
    return off;
}

struct Stencil {
    std::vector<int> offsets;     // node offsets
    std::vector<double> weights;  // already divided by the spacing power
};

/// Derivative of order `order` at index i with formal accuracy `accuracy`, nodes
/// spaced stride*h apart: centered in the interior, one-sided near the ends.
inline Stencil make_stencil(int i, int n, int order, int accuracy, double h, int stride = 1)
{
    const int central = 2 * ((order + 1) / 2) - 1 + accuracy;
    const int half = central / 2;
    const bool fits = i - stride * half >= 0 && i + stride * half <= n - 1;
    Stencil st;
    st.offsets = stencil_offsets(i, n, fits ? central : order + accuracy, stride);
    std::vector<double> x(st.offsets.size());
    for (std::size_t k = 0; k < x.size(); ++k)
        x[k] = st.offsets[k] * h;
    const Eigen::MatrixXd w = fornberg_weights<double>(0.0, x, order);
    st.weights.resize(x.size());
    for (std::size_t k = 0; k < x.size(); ++k)
        st.weights[k] = w(order, static_cast<Eigen::Index>(k));
    return st;
}

} // namespace ucp
