#include "ucp/reduction.hpp"

#include "ucp/errors.hpp"
#include "ucp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ucp {

U2System reduce(const ElasticityCoefficients& c)
{
    U2System sys;
    sys.hyper = {c.a1112, c.a1212 + c.a1122, c.a1222, c.b[0][1][0], c.b[0][1][1], c.c[0][1]};
    sys.ell = {c.a1212, 2.0 * c.a1222, c.a2222, c.b[1][1][0], c.b[1][1][1], c.c[1][1]};
    return sys;
}

U2System scaled(const U2System& sys, const ScalarField& factor)
{
    U2System out;
    for (int k = 0; k < 6; ++k) {
        out.hyper[k] = factor * sys.hyper[k];
        out.ell[k] = factor * sys.ell[k];
    }
    return out;
}

Eigen::Matrix<double, 2, 3> second_order_symbols(const U2System& sys, double x, double y)
{
    Eigen::Matrix<double, 2, 3> m;
    for (int k = 0; k < 3; ++k) {
        m(0, k) = sys.hyper[k](x, y);
        m(1, k) = sys.ell[k](x, y);
    }
    return m;
}

int second_order_rank(const U2System& sys, double x, double y, double tol, ColumnMask mask)
{
    if (!(tol > 0.0))
        throw DomainError("second_order_rank: tol must be positive");
    const Eigen::Matrix<double, 2, 3> full = second_order_symbols(sys, x, y);
    const bool keep[3] = {mask.dxx, mask.dxy, mask.dyy};
    Eigen::MatrixXd m(2, 0);
    for (int k = 0; k < 3; ++k)
        if (keep[k]) {
            m.conservativeResize(2, m.cols() + 1);
            m.col(m.cols() - 1) = full.col(k);
        }
    if (m.cols() == 0)
        return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto sv = svd.singularValues();
    if (sv(0) == 0.0)
        return 0;
    int rank = 0;
    for (int k = 0; k < sv.size(); ++k)
        if (sv(k) > tol * sv(0))
            ++rank;
    return rank;
}

double apply_operator(const OperatorCoefficients& op, const ScalarField& u, double x, double y)
{
    const ScalarField ux = differentiate(u, Variable::X);
    const ScalarField uy = differentiate(u, Variable::Y);
    const ScalarField terms[6] = {differentiate(ux, Variable::X), differentiate(ux, Variable::Y),
                                  differentiate(uy, Variable::Y), ux, uy, u};
    double sum = 0.0;
    for (int k = 0; k < 6; ++k)
        sum += op[k](x, y) * terms[k](x, y);
    return sum;
}

Residual residual(const U2System& sys, const ScalarField& u2, const Region& region, int n)
{
    if (n < 2)
        throw DomainError("residual: n must be at least 2");
    const ScalarField ux = differentiate(u2, Variable::X);
    const ScalarField uy = differentiate(u2, Variable::Y);
    const ScalarField terms[6] = {differentiate(ux, Variable::X), differentiate(ux, Variable::Y),
                                  differentiate(uy, Variable::Y), ux, uy, u2};

    std::vector<double> hyper(static_cast<std::size_t>(n) * n), ell(hyper.size());
    parallel_for(hyper.size(), [&](std::size_t idx) {
        const double x = region.x_node(static_cast<int>(idx % n), n);
        const double y = region.y_node(static_cast<int>(idx / n), n);
        double h = 0.0, e = 0.0;
        for (int k = 0; k < 6; ++k) {
            const double t = terms[k](x, y);
            h += sys.hyper[k](x, y) * t;
            e += sys.ell[k](x, y) * t;
        }
        hyper[idx] = std::abs(h);
        ell[idx] = std::abs(e);
    });
    return {*std::max_element(hyper.begin(), hyper.end()), *std::max_element(ell.begin(), ell.end())};
}

} // namespace ucp
