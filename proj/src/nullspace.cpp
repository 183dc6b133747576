#include "ucp/nullspace.hpp"

#include "ucp/errors.hpp"
#include "ucp/finite_difference.hpp"
#include "ucp/parallel.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

namespace ucp {

Eigen::SparseMatrix<double> discretize_pair(const U2System& sys, const Region& region, int n, int accuracy)
{
    if (n < 17)
        throw DomainError("null-space grid needs n >= 17");
    const double hx = 2.0 * region.hx / (n - 1);
    const double hy = 2.0 * region.hy / (n - 1);
    const double weight = std::sqrt(hx * hy);

    std::vector<Stencil> dx1(n), dx2(n), dy1(n), dy2(n);
    for (int i = 0; i < n; ++i) {
        dx1[i] = make_stencil(i, n, 1, accuracy, hx);
        dx2[i] = make_stencil(i, n, 2, accuracy, hx);
        dy1[i] = make_stencil(i, n, 1, accuracy, hy);
        dy2[i] = make_stencil(i, n, 2, accuracy, hy);
    }

    const std::size_t N = static_cast<std::size_t>(n) * n;
    // Rows of each node assembled independently, merged in node order.
    std::vector<std::vector<Eigen::Triplet<double>>> rows(N);
    parallel_for(N, [&](std::size_t node) {
        const int i = static_cast<int>(node % n), j = static_cast<int>(node / n);
        const double x = region.x_node(i, n), y = region.y_node(j, n);
        for (int eq = 0; eq < 2; ++eq) {
            const OperatorCoefficients& op = eq == 0 ? sys.hyper : sys.ell;
            double c[6];
            for (int k = 0; k < 6; ++k)
                c[k] = op[k](x, y);
            std::map<int, double> entry;
            auto add = [&](int ii, int jj, double v) { entry[ii + n * jj] += v; };
            if (c[0] != 0.0)
                for (std::size_t a = 0; a < dx2[i].offsets.size(); ++a)
                    add(i + dx2[i].offsets[a], j, c[0] * dx2[i].weights[a]);
            if (c[1] != 0.0)
                for (std::size_t a = 0; a < dx1[i].offsets.size(); ++a)
                    for (std::size_t b = 0; b < dy1[j].offsets.size(); ++b)
                        add(i + dx1[i].offsets[a], j + dy1[j].offsets[b], c[1] * dx1[i].weights[a] * dy1[j].weights[b]);
            if (c[2] != 0.0)
                for (std::size_t b = 0; b < dy2[j].offsets.size(); ++b)
                    add(i, j + dy2[j].offsets[b], c[2] * dy2[j].weights[b]);
            if (c[3] != 0.0)
                for (std::size_t a = 0; a < dx1[i].offsets.size(); ++a)
                    add(i + dx1[i].offsets[a], j, c[3] * dx1[i].weights[a]);
            if (c[4] != 0.0)
                for (std::size_t b = 0; b < dy1[j].offsets.size(); ++b)
                    add(i, j + dy1[j].offsets[b], c[4] * dy1[j].weights[b]);
            if (c[5] != 0.0)
                add(i, j, c[5]);
            const int row = static_cast<int>(2 * node) + eq;
            for (const auto& [col, v] : entry)
                rows[node].emplace_back(row, col, weight * v);
        }
    });

    std::vector<Eigen::Triplet<double>> all;
    for (const auto& r : rows)
        all.insert(all.end(), r.begin(), r.end());
    Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(2 * N), static_cast<Eigen::Index>(N));
    A.setFromTriplets(all.begin(), all.end());
    return A;
}

namespace {

Eigen::MatrixXd start_block(Eigen::Index rows, int cols, unsigned seed)
{
    std::mt19937_64 gen(seed);
    Eigen::MatrixXd V(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r)
            V(r, c) = static_cast<double>(gen() >> 11) * 0x1.0p-53 - 0.5;
    return V;
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& V)
{
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(V);
    return qr.householderQ() * Eigen::MatrixXd::Identity(V.rows(), V.cols());
}

double largest_singular_value(const Eigen::SparseMatrix<double>& A)
{
    Eigen::VectorXd v = Eigen::VectorXd::Ones(A.cols());
    for (Eigen::Index k = 0; k < v.size(); ++k)
        v(k) += 0.1 * std::sin(0.7 * static_cast<double>(k));
    v.normalize();
    double sigma = 0.0;
    for (int it = 0; it < 500; ++it) {
        Eigen::VectorXd w = A.transpose() * (A * v);
        const double lambda = w.norm();
        w /= lambda;
        const double next = std::sqrt(lambda);
        const bool done = std::abs(next - sigma) <= 1e-10 * next;
        sigma = next;
        v = w;
        if (done && it > 10)
            break;
    }
    return sigma;
}

} // namespace

NullSpaceResult null_space_dimension(const U2System& sys, const Region& region, int n, const NullSpaceOptions& opt)
{
    const Eigen::SparseMatrix<double> A = discretize_pair(sys, region, n, opt.accuracy);
    const Eigen::Index N = A.cols();
    const int block = std::min<int>(opt.block, static_cast<int>(N));

    NullSpaceResult r;
    r.n = n;
    r.region = region;
    r.threshold = opt.threshold;
    r.sigma_max = largest_singular_value(A);
    r.floor = std::numeric_limits<double>::epsilon() * std::sqrt(static_cast<double>(N)) * r.sigma_max;

    // Inverse subspace iteration on A^T A + tau I.
    Eigen::SparseMatrix<double> M = A.transpose() * A;
    const double tau = 1e-14 * r.sigma_max * r.sigma_max;
    Eigen::SparseMatrix<double> I(N, N);
    I.setIdentity();
    M += tau * I;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(M);
    if (ldlt.info() != Eigen::Success)
        throw ConvergenceError("null space: factorization of the normal operator failed");

    Eigen::MatrixXd V = orthonormalize(start_block(N, block, opt.seed));
    for (int it = 0; it < opt.iterations; ++it) {
        Eigen::MatrixXd W(N, block);
        for (int c = 0; c < block; ++c)
            W.col(c) = ldlt.solve(V.col(c));
        V = orthonormalize(W);
    }

    // Rayleigh-Ritz on the block.
    const Eigen::MatrixXd B = A * V;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeThinV);
    const Eigen::VectorXd sv = svd.singularValues();  // descending
    const Eigen::MatrixXd ritz = V * svd.matrixV();
    std::vector<int> order(block);
    for (int k = 0; k < block; ++k)
        order[k] = block - 1 - k;

    r.singular_values.resize(block);
    for (int k = 0; k < block; ++k)
        r.singular_values[k] = sv(order[k]) / r.sigma_max;

    int d = 0;
    while (d < block && r.singular_values[d] <= opt.threshold)
        ++d;
    r.dimension = d;
    const double floor_rel = r.floor / r.sigma_max;
    if (d < block) {
        const double below = d == 0 ? floor_rel : std::max(r.singular_values[d - 1], floor_rel);
        r.gap = r.singular_values[d] / below;
        r.ambiguous = r.gap < opt.min_gap;
    } else {
        r.gap = 0.0;
        r.ambiguous = true;
    }
    r.basis.resize(N, d);
    for (int k = 0; k < d; ++k) {
        Eigen::VectorXd col = ritz.col(order[k]);
        // Fix the sign so the output does not depend on the SVD's choice.
        Eigen::Index arg;
        col.cwiseAbs().maxCoeff(&arg);
        if (col(arg) < 0.0)
            col = -col;
        r.basis.col(k) = col;
    }
    return r;
}

double projection_residual(const NullSpaceResult& ns, const ScalarField& f)
{
    const int n = ns.n;
    Eigen::VectorXd v(static_cast<Eigen::Index>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            v(i + n * j) = f(ns.region.x_node(i, n), ns.region.y_node(j, n));
    const double norm = v.norm();
    if (norm == 0.0)
        return 0.0;
    if (ns.basis.cols() == 0)
        return 1.0;
    const Eigen::VectorXd proj = ns.basis * (ns.basis.transpose() * v);
    return (v - proj).norm() / norm;
}

// ---------------------------------------------------------------------------

PointDataSpec PointDataSpec::five(double x0, double y0, double u, double ux, double uy, double uxx, double uyy)
{
    PointDataSpec s;
    s.x0 = x0;
    s.y0 = y0;
    s.values = {u, ux, uy, uxx, uyy};
    return s;
}

PointDataSpec PointDataSpec::four(double x0, double y0, double u, double ux, double uy, double second, int omit)
{
    if (omit != 3 && omit != 4)
        throw DomainError("four-value point data omits u_xx (3) or u_yy (4)");
    PointDataSpec s;
    s.x0 = x0;
    s.y0 = y0;
    s.values = {u, ux, uy, std::nullopt, std::nullopt};
    s.values[omit == 3 ? 4 : 3] = second;
    return s;
}

namespace {

PointDataSolution solve_map(const Eigen::MatrixXd& map, const Eigen::VectorXd& rhs, double tol)
{
    PointDataSolution out;
    out.map = map;
    out.unknowns = static_cast<int>(map.cols());
    if (map.cols() == 0)
        return out;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(map, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto sv = svd.singularValues();
    const double top = sv.size() > 0 ? sv(0) : 0.0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
        if (top > 0.0 && sv(k) > tol * top)
            ++out.rank;
    out.rank_deficient = out.rank < out.unknowns;
    svd.setThreshold(tol);
    out.coefficients = svd.solve(rhs);
    out.residual = (map * out.coefficients - rhs).norm();
    if (out.rank_deficient)
        out.null_direction = svd.matrixV().col(out.unknowns - 1);
    return out;
}

} // namespace

PointDataSolution point_data_solve(const std::vector<ScalarField>& family, const PointDataSpec& spec, double tol)
{
    std::vector<int> observed;
    for (int k = 0; k < 5; ++k)
        if (spec.values[k])
            observed.push_back(k);
    Eigen::MatrixXd map(observed.size(), family.size());
    Eigen::VectorXd rhs(observed.size());
    for (std::size_t c = 0; c < family.size(); ++c) {
        const ScalarField& f = family[c];
        const ScalarField fx = differentiate(f, Variable::X), fy = differentiate(f, Variable::Y);
        const ScalarField all[5] = {f, fx, fy, differentiate(fx, Variable::X), differentiate(fy, Variable::Y)};
        for (std::size_t r = 0; r < observed.size(); ++r)
            map(r, c) = all[observed[r]](spec.x0, spec.y0);
    }
    for (std::size_t r = 0; r < observed.size(); ++r)
        rhs(r) = *spec.values[observed[r]];
    return solve_map(map, rhs, tol);
}

PointDataSolution point_data_solve(const Eigen::MatrixXd& basis, const Region& region, int n,
                                   const PointDataSpec& spec, double tol, int accuracy)
{
    const double hx = 2.0 * region.hx / (n - 1), hy = 2.0 * region.hy / (n - 1);
    const double pi = (spec.x0 - region.xmin()) / hx, pj = (spec.y0 - region.ymin()) / hy;
    const int i = static_cast<int>(std::lround(pi)), j = static_cast<int>(std::lround(pj));
    if (i < 0 || i >= n || j < 0 || j >= n || std::abs(pi - i) > 1e-9 || std::abs(pj - j) > 1e-9)
        throw DomainError("point data location is not a node of the null-space grid");

    const Stencil sx1 = make_stencil(i, n, 1, accuracy, hx), sx2 = make_stencil(i, n, 2, accuracy, hx);
    const Stencil sy1 = make_stencil(j, n, 1, accuracy, hy), sy2 = make_stencil(j, n, 2, accuracy, hy);

    std::vector<int> observed;
    for (int k = 0; k < 5; ++k)
        if (spec.values[k])
            observed.push_back(k);
    Eigen::MatrixXd map(observed.size(), basis.cols());
    Eigen::VectorXd rhs(observed.size());
    for (Eigen::Index c = 0; c < basis.cols(); ++c) {
        auto at = [&](int ii, int jj) { return basis(ii + n * jj, c); };
        double vals[5] = {at(i, j), 0.0, 0.0, 0.0, 0.0};
        for (std::size_t a = 0; a < sx1.offsets.size(); ++a)
            vals[1] += sx1.weights[a] * at(i + sx1.offsets[a], j);
        for (std::size_t a = 0; a < sy1.offsets.size(); ++a)
            vals[2] += sy1.weights[a] * at(i, j + sy1.offsets[a]);
        for (std::size_t a = 0; a < sx2.offsets.size(); ++a)
            vals[3] += sx2.weights[a] * at(i + sx2.offsets[a], j);
        for (std::size_t a = 0; a < sy2.offsets.size(); ++a)
            vals[4] += sy2.weights[a] * at(i, j + sy2.offsets[a]);
        for (std::size_t r = 0; r < observed.size(); ++r)
            map(r, c) = vals[observed[r]];
    }
    for (std::size_t r = 0; r < observed.size(); ++r)
        rhs(r) = *spec.values[observed[r]];
    return solve_map(map, rhs, tol);
}

} // namespace ucp
