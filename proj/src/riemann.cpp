#include "ucp/riemann.hpp"

#include "ucp/errors.hpp"
#include "ucp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

namespace ucp {

int RiemannGrid::index_of(double v) const
{
    const double pos = (v + epsilon) / h();
    const long idx = std::lround(pos);
    if (idx < 0 || idx >= n || std::abs(pos - static_cast<double>(idx)) > 1e-9)
        throw DomainError("coordinate " + std::to_string(v) + " is not a node of the Riemann grid");
    return static_cast<int>(idx);
}

RiemannGrid make_grid(int n, double epsilon)
{
    if (n < 9 || n % 2 == 0)
        throw DomainError("Riemann grid needs an odd node count >= 9, got " + std::to_string(n));
    if (!(epsilon > 0.0))
        throw DomainError("Riemann grid needs epsilon > 0");
    return {n, epsilon};
}

CoefficientGrid sample_coefficients(const TransformedSystem& tsys, int n)
{
    CoefficientGrid c;
    c.grid = make_grid(n, tsys.epsilon);
    Eigen::MatrixXd* fields[] = {&c.B11, &c.B12, &c.C1, &c.A11, &c.A12, &c.A22, &c.B21, &c.B22, &c.C2};
    for (auto* f : fields)
        f->resize(n, n);
    parallel_for(static_cast<std::size_t>(n) * n, [&](std::size_t idx) {
        const int i = static_cast<int>(idx % n), j = static_cast<int>(idx / n);
        const CharacteristicCoefficients k = tsys.coefficients(c.grid.node(i), c.grid.node(j));
        c.B11(i, j) = k.B11;
        c.B12(i, j) = k.B12;
        c.C1(i, j) = k.C1;
        c.A11(i, j) = k.A11;
        c.A12(i, j) = k.A12;
        c.A22(i, j) = k.A22;
        c.B21(i, j) = k.B21;
        c.B22(i, j) = k.B22;
        c.C2(i, j) = k.C2;
    });
    return c;
}

NodeBox axis_box(const RiemannGrid& grid, int ip, int jp, int margin)
{
    const int m = grid.mid();
    NodeBox b;
    b.i0 = std::max(0, std::min(ip, m) - margin);
    b.i1 = std::min(grid.n - 1, std::max(ip, m) + margin);
    b.j0 = std::max(0, std::min(jp, m) - margin);
    b.j1 = std::min(grid.n - 1, std::max(jp, m) + margin);
    return b;
}

double RiemannTable::at(int i, int j) const
{
    if (!box.contains(i, j))
        throw DomainError("Riemann table queried outside its solved box");
    return values(i - box.i0, j - box.j0);
}

Eigen::MatrixXd RiemannTable::full() const
{
    Eigen::MatrixXd out = Eigen::MatrixXd::Constant(grid.n, grid.n, std::numeric_limits<double>::quiet_NaN());
    out.block(box.i0, box.j0, values.rows(), values.cols()) = values;
    return out;
}

namespace {

// Signed cumulative trapezoid of f along dimension 0 (columns) starting at row p.
void cumulative_rows(const Eigen::MatrixXd& f, int p, double h, Eigen::MatrixXd& out)
{
    const int ni = static_cast<int>(f.rows());
    out.resize(f.rows(), f.cols());
    out.row(p).setZero();
    for (int i = p + 1; i < ni; ++i)
        out.row(i) = out.row(i - 1) + 0.5 * h * (f.row(i - 1) + f.row(i));
    for (int i = p - 1; i >= 0; --i)
        out.row(i) = out.row(i + 1) - 0.5 * h * (f.row(i + 1) + f.row(i));
}

void cumulative_cols(const Eigen::MatrixXd& f, int p, double h, Eigen::MatrixXd& out)
{
    const int nj = static_cast<int>(f.cols());
    out.resize(f.rows(), f.cols());
    out.col(p).setZero();
    for (int j = p + 1; j < nj; ++j)
        out.col(j) = out.col(j - 1) + 0.5 * h * (f.col(j - 1) + f.col(j));
    for (int j = p - 1; j >= 0; --j)
        out.col(j) = out.col(j + 1) - 0.5 * h * (f.col(j + 1) + f.col(j));
}

struct BoxCoefficients {
    Eigen::MatrixXd B11, B12, C1;
};

BoxCoefficients box_coefficients(const CoefficientGrid& c, const NodeBox& b)
{
    const int ni = b.i1 - b.i0 + 1, nj = b.j1 - b.j0 + 1;
    return {c.B11.block(b.i0, b.j0, ni, nj), c.B12.block(b.i0, b.j0, ni, nj), c.C1.block(b.i0, b.j0, ni, nj)};
}

// One application of the integral operator: 1 + int B12 R ds + int B11 R dt - int int C1 R.
Eigen::MatrixXd picard_map(const BoxCoefficients& bc, const Eigen::MatrixXd& R, int pi, int pj, double h)
{
    Eigen::MatrixXd I1, I2, G, I3;
    cumulative_rows(bc.B12.cwiseProduct(R), pi, h, I1);
    cumulative_cols(bc.B11.cwiseProduct(R), pj, h, I2);
    cumulative_rows(bc.C1.cwiseProduct(R), pi, h, G);
    cumulative_cols(G, pj, h, I3);
    return (I1 + I2 - I3).array() + 1.0;
}

} // namespace

RiemannTable solve_riemann(const CoefficientGrid& coeffs, int ip, int jp, double tol, std::optional<NodeBox> box,
                           int max_iter)
{
    const RiemannGrid& g = coeffs.grid;
    if (ip < 0 || ip >= g.n || jp < 0 || jp >= g.n)
        throw DomainError("Riemann parameter node outside the grid");
    if (!(tol > 0.0))
        throw DomainError("Riemann tolerance must be positive");

    RiemannTable t;
    t.grid = g;
    t.ip = ip;
    t.jp = jp;
    t.xi = g.node(ip);
    t.eta = g.node(jp);
    t.box = box ? *box : NodeBox{0, g.n - 1, 0, g.n - 1};
    if (!t.box.contains(ip, jp))
        throw DomainError("Riemann box must contain the parameter node");

    const BoxCoefficients bc = box_coefficients(coeffs, t.box);
    const int pi = ip - t.box.i0, pj = jp - t.box.j0;
    Eigen::MatrixXd R = Eigen::MatrixXd::Ones(bc.B11.rows(), bc.B11.cols());
    for (int it = 1; it <= max_iter; ++it) {
        Eigen::MatrixXd next = picard_map(bc, R, pi, pj, g.h());
        const double diff = (next - R).cwiseAbs().maxCoeff();
        R.swap(next);
        t.history.push_back(diff);
        if (!std::isfinite(diff))
            break;
        if (diff <= tol) {
            t.iterations = it;
            t.residual = diff;
            t.values = std::move(R);
            return t;
        }
    }
    throw ConvergenceError("Riemann Picard iteration did not reach tol " + std::to_string(tol) + " within " +
                           std::to_string(max_iter) + " iterations (parameter node " + std::to_string(ip) + ", " +
                           std::to_string(jp) + ")");
}

RiemannTable solve_riemann(const TransformedSystem& tsys, double xi, double eta, int n, double tol)
{
    const CoefficientGrid c = sample_coefficients(tsys, n);
    return solve_riemann(c, c.grid.index_of(xi), c.grid.index_of(eta), tol);
}

double integral_equation_residual(const CoefficientGrid& coeffs, const RiemannTable& table)
{
    const BoxCoefficients bc = box_coefficients(coeffs, table.box);
    const Eigen::MatrixXd mapped =
        picard_map(bc, table.values, table.ip - table.box.i0, table.jp - table.box.j0, table.grid.h());
    return (mapped - table.values).cwiseAbs().maxCoeff();
}

void write_csv(std::ostream& os, const RiemannTable& table)
{
    os << "x,y,value\n";
    char buf[96];
    for (int j = table.box.j0; j <= table.box.j1; ++j)
        for (int i = table.box.i0; i <= table.box.i1; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", table.grid.node(i), table.grid.node(j),
                          table.at(i, j));
            os << buf;
        }
}

// ---------------------------------------------------------------------------

RiemannProvider::RiemannProvider(CoefficientGrid coeffs, double tol, int margin)
    : coeffs_(std::move(coeffs)), tol_(tol), margin_(margin)
{
}

RiemannProvider::Slices RiemannProvider::compute(int ip, int jp) const
{
    const NodeBox box = axis_box(coeffs_.grid, ip, jp, margin_);
    const RiemannTable t = solve_riemann(coeffs_, ip, jp, tol_, box);
    const int m = coeffs_.grid.mid();
    Slices s;
    s.i0 = box.i0;
    s.i1 = box.i1;
    s.j0 = box.j0;
    s.j1 = box.j1;
    s.row = t.values.col(m - box.j0);
    s.col = t.values.row(m - box.i0).transpose();
    s.iterations = t.iterations;
    s.residual = t.residual;
    return s;
}

const RiemannProvider::Slices& RiemannProvider::slices(int ip, int jp)
{
    const auto key = std::make_pair(ip, jp);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end())
            return *it->second;
    }
    auto fresh = std::make_unique<const Slices>(compute(ip, jp));
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = cache_.emplace(key, std::move(fresh));
    return *it->second;
}

void RiemannProvider::prefetch(std::vector<std::pair<int, int>> params)
{
    std::sort(params.begin(), params.end());
    params.erase(std::unique(params.begin(), params.end()), params.end());
    {
        std::lock_guard<std::mutex> lock(mutex_);
        params.erase(std::remove_if(params.begin(), params.end(), [&](const auto& p) { return cache_.count(p) > 0; }),
                     params.end());
    }
    std::vector<std::unique_ptr<const Slices>> results(params.size());
    parallel_for(params.size(), [&](std::size_t k) {
        results[k] = std::make_unique<const Slices>(compute(params[k].first, params[k].second));
    });
    std::lock_guard<std::mutex> lock(mutex_);
    for (std::size_t k = 0; k < params.size(); ++k)
        cache_.emplace(params[k], std::move(results[k]));
}

double RiemannProvider::row(int ip, int jp, int i)
{
    const Slices& s = slices(ip, jp);
    if (i < s.i0 || i > s.i1)
        throw DomainError("Riemann row slice queried outside its box");
    return s.row(i - s.i0);
}

double RiemannProvider::col(int ip, int jp, int j)
{
    const Slices& s = slices(ip, jp);
    if (j < s.j0 || j > s.j1)
        throw DomainError("Riemann column slice queried outside its box");
    return s.col(j - s.j0);
}

std::size_t RiemannProvider::cached() const
{
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.size();
}

int RiemannProvider::max_iterations() const
{
    std::lock_guard<std::mutex> lock(mutex_);
    int m = 0;
    for (const auto& [k, v] : cache_)
        m = std::max(m, v->iterations);
    return m;
}

double RiemannProvider::max_residual() const
{
    std::lock_guard<std::mutex> lock(mutex_);
    double m = 0.0;
    for (const auto& [k, v] : cache_)
        m = std::max(m, v->residual);
    return m;
}

// ---------------------------------------------------------------------------

ParameterStencils parameter_stencils(const RiemannGrid& grid, int ip, int jp, int stride)
{
    const double h = grid.h();
    return {make_stencil(ip, grid.n, 1, 2, h, stride), make_stencil(ip, grid.n, 2, 2, h, stride),
            make_stencil(jp, grid.n, 1, 2, h, stride), make_stencil(jp, grid.n, 2, 2, h, stride)};
}

std::vector<std::pair<int, int>> stencil_parameters(const RiemannGrid& grid, int ip, int jp, int stride)
{
    const ParameterStencils st = parameter_stencils(grid, ip, jp, stride);
    std::set<std::pair<int, int>> out;
    out.insert({ip, jp});
    for (int o : st.d3.offsets)
        out.insert({ip + o, jp});
    for (int o : st.d33.offsets)
        out.insert({ip + o, jp});
    for (int o : st.d4.offsets)
        out.insert({ip, jp + o});
    for (int o : st.d44.offsets)
        out.insert({ip, jp + o});
    for (int a : st.d3.offsets)
        for (int b : st.d4.offsets)
            out.insert({ip + a, jp + b});
    return {out.begin(), out.end()};
}

namespace {

double along_xi(const Stencil& st, int ip, int jp, const std::function<double(int, int)>& f)
{
    double sum = 0.0;
    for (std::size_t k = 0; k < st.offsets.size(); ++k)
        sum += st.weights[k] * f(ip + st.offsets[k], jp);
    return sum;
}

double along_eta(const Stencil& st, int ip, int jp, const std::function<double(int, int)>& f)
{
    double sum = 0.0;
    for (std::size_t k = 0; k < st.offsets.size(); ++k)
        sum += st.weights[k] * f(ip, jp + st.offsets[k]);
    return sum;
}

// Derivative of a slice vector (indexed from `first`) at global node i.
double slice_derivative(const Eigen::VectorXd& v, int first, int i, const RiemannGrid& grid)
{
    const int last = first + static_cast<int>(v.size()) - 1;
    // Stencil built on the slice's own index range.
    const Stencil st = make_stencil(i - first, last - first + 1, 1, 2, grid.h());
    double sum = 0.0;
    for (std::size_t k = 0; k < st.offsets.size(); ++k)
        sum += st.weights[k] * v(i - first + st.offsets[k]);
    return sum;
}

} // namespace

double apply_L(const CoefficientGrid& c, int ip, int jp, const std::function<double(int, int)>& f, int stride)
{
    const ParameterStencils st = parameter_stencils(c.grid, ip, jp, stride);
    const double d3 = along_xi(st.d3, ip, jp, f);
    const double d33 = along_xi(st.d33, ip, jp, f);
    const double d4 = along_eta(st.d4, ip, jp, f);
    const double d44 = along_eta(st.d44, ip, jp, f);
    double d34 = 0.0;
    for (std::size_t a = 0; a < st.d3.offsets.size(); ++a)
        for (std::size_t b = 0; b < st.d4.offsets.size(); ++b)
            d34 += st.d3.weights[a] * st.d4.weights[b] * f(ip + st.d3.offsets[a], jp + st.d4.offsets[b]);
    return c.A11(ip, jp) * d33 + 2.0 * c.A12(ip, jp) * d34 + c.A22(ip, jp) * d44 + c.B21(ip, jp) * d3 +
           c.B22(ip, jp) * d4 + c.C2(ip, jp) * f(ip, jp);
}

double P_at(RiemannProvider& provider, int ip, int jp, int stride)
{
    const CoefficientGrid& c = provider.coefficients();
    const RiemannGrid& g = c.grid;
    const ParameterStencils st = parameter_stencils(g, ip, jp, stride);
    // Evaluation point (s_ip, 0) on the row slice.
    auto rowval = [&](int a, int b) { return provider.row(a, b, ip); };
    const RiemannProvider::Slices& own = provider.slices(ip, jp);
    const double R = own.row(ip - own.i0);
    const double d1 = slice_derivative(own.row, own.i0, ip, g);
    const double d3 = along_xi(st.d3, ip, jp, rowval);
    const double d4 = along_eta(st.d4, ip, jp, rowval);
    return c.A11(ip, jp) * (d1 + 2.0 * d3) + 2.0 * c.A12(ip, jp) * d4 + c.B21(ip, jp) * R;
}

double Q_at(RiemannProvider& provider, int ip, int jp, int stride)
{
    const CoefficientGrid& c = provider.coefficients();
    const RiemannGrid& g = c.grid;
    const ParameterStencils st = parameter_stencils(g, ip, jp, stride);
    auto colval = [&](int a, int b) { return provider.col(a, b, jp); };
    const RiemannProvider::Slices& own = provider.slices(ip, jp);
    const double R = own.col(jp - own.j0);
    const double d2 = slice_derivative(own.col, own.j0, jp, g);
    const double d3 = along_xi(st.d3, ip, jp, colval);
    const double d4 = along_eta(st.d4, ip, jp, colval);
    return c.A22(ip, jp) * (d2 + 2.0 * d4) + 2.0 * c.A12(ip, jp) * d3 + c.B22(ip, jp) * R;
}

namespace {

std::vector<std::pair<int, int>> axis_parameters(const RiemannGrid& g, TraceAxis axis, int stride)
{
    std::set<std::pair<int, int>> all;
    const int m = g.mid();
    for (int k = 0; k < g.n; ++k) {
        const int ip = axis == TraceAxis::S ? k : m;
        const int jp = axis == TraceAxis::S ? m : k;
        for (const auto& p : stencil_parameters(g, ip, jp, stride))
            all.insert(p);
    }
    return {all.begin(), all.end()};
}

} // namespace

Eigen::VectorXd kernel_PQ(RiemannProvider& provider, TraceAxis axis, int stride)
{
    const RiemannGrid& g = provider.grid();
    provider.prefetch(axis_parameters(g, axis, stride));
    const int m = g.mid();
    Eigen::VectorXd out(g.n);
    parallel_for(static_cast<std::size_t>(g.n), [&](std::size_t k) {
        const int i = static_cast<int>(k);
        out(i) = axis == TraceAxis::S ? P_at(provider, i, m, stride) : Q_at(provider, m, i, stride);
    });
    return out;
}

CauchyTraces traces_from_field(const CoefficientGrid& c, const ScalarField& w)
{
    const ScalarField ws = differentiate(w, Variable::X);
    const ScalarField wt = differentiate(w, Variable::Y);
    const RiemannGrid& g = c.grid;
    const int m = g.mid();
    CauchyTraces tr;
    tr.phi.resize(g.n);
    tr.psi.resize(g.n);
    for (int k = 0; k < g.n; ++k) {
        const double v = g.node(k);
        tr.phi(k) = ws(v, 0.0) + c.B12(k, m) * w(v, 0.0);
        tr.psi(k) = wt(0.0, v) + c.B11(m, k) * w(0.0, v);
    }
    tr.provenance = CauchyTraces::Provenance::FromW;
    return tr;
}

std::vector<double> represent_solution(RiemannProvider& provider, double w00, const CauchyTraces& traces,
                                       const std::vector<std::pair<int, int>>& targets)
{
    const RiemannGrid& g = provider.grid();
    if (traces.phi.size() != g.n || traces.psi.size() != g.n)
        throw DomainError("traces must be given on every grid node");
    provider.prefetch(targets);
    const int m = g.mid();
    const double h = g.h();
    std::vector<double> out(targets.size());
    parallel_for(targets.size(), [&](std::size_t k) {
        const auto [ip, jp] = targets[k];
        const RiemannProvider::Slices& s = provider.slices(ip, jp);
        double value = w00 * s.row(m - s.i0);
        // Signed trapezoid from the origin to the target coordinate.
        auto integrate = [&](int to, const Eigen::VectorXd& slice, int first, const Eigen::VectorXd& trace) {
            if (to == m)
                return 0.0;
            const int dir = to > m ? 1 : -1;
            double sum = 0.0;
            for (int q = m; q != to; q += dir) {
                const double a = slice(q - first) * trace(q);
                const double b = slice(q + dir - first) * trace(q + dir);
                sum += 0.5 * (a + b);
            }
            return dir * h * sum;
        };
        value += integrate(ip, s.row, s.i0, traces.phi);
        value += integrate(jp, s.col, s.j0, traces.psi);
        out[k] = value;
    });
    return out;
}

TraceInitialData trace_initial_data(const CoefficientGrid& c, const WPointData& w)
{
    const RiemannGrid& g = c.grid;
    const int m = g.mid();
    const Stencil ds = make_stencil(m, g.n, 1, 2, g.h());
    double dB12 = 0.0, dB11 = 0.0;
    for (std::size_t k = 0; k < ds.offsets.size(); ++k) {
        dB12 += ds.weights[k] * c.B12(m + ds.offsets[k], m);
        dB11 += ds.weights[k] * c.B11(m, m + ds.offsets[k]);
    }
    TraceInitialData d;
    d.w00 = w.w;
    d.phi0 = w.ws + c.B12(m, m) * w.w;
    d.dphi0 = w.wss + dB12 * w.w + c.B12(m, m) * w.ws;
    d.psi0 = w.wt + c.B11(m, m) * w.w;
    d.dpsi0 = w.wtt + dB11 * w.w + c.B11(m, m) * w.wt;
    return d;
}

TraceSolve solve_traces(RiemannProvider& provider, const TraceInitialData& init, int stride)
{
    const CoefficientGrid& c = provider.coefficients();
    const RiemannGrid& g = c.grid;
    const int n = g.n, m = g.mid();

    provider.prefetch(axis_parameters(g, TraceAxis::S, stride));
    provider.prefetch(axis_parameters(g, TraceAxis::T, stride));

    TraceSolve out;
    Eigen::VectorXd P(n), Q(n), Qs(n), Pt(n), LRs(n), LRt(n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t kk) {
        const int k = static_cast<int>(kk);
        P(k) = P_at(provider, k, m, stride);
        Qs(k) = Q_at(provider, k, m, stride);
        Q(k) = Q_at(provider, m, k, stride);
        Pt(k) = P_at(provider, m, k, stride);
        // L R(0, 0, xi, eta) on each axis.
        LRs(k) = apply_L(c, k, m, [&](int a, int b) { return provider.row(a, b, m); }, stride);
        LRt(k) = apply_L(c, m, k, [&](int a, int b) { return provider.col(a, b, m); }, stride);
    });

    Eigen::VectorXd A11(n), A22(n), gphi(n), gpsi(n);
    for (int k = 0; k < n; ++k) {
        A11(k) = c.A11(k, m);
        A22(k) = c.A22(m, k);
        const double R00s = provider.row(k, m, m); // R(0,0,s_k,0)
        const double R00t = provider.col(m, k, m); // R(0,0,0,t_k)
        gphi(k) = -init.w00 * LRs(k) - c.A22(k, m) * R00s * init.dpsi0 - Qs(k) * init.psi0;
        gpsi(k) = -init.w00 * LRt(k) - c.A11(m, k) * R00t * init.dphi0 - Pt(k) * init.phi0;
    }

    // Kernels K(s, sigma) = L R(sigma, 0, s, 0) and K(t, tau) = L R(0, tau, 0, t), tabulated
    // once (in parallel) for every pair on the same side of the origin.
    Eigen::MatrixXd Kphi = Eigen::MatrixXd::Zero(n, n), Kpsi = Eigen::MatrixXd::Zero(n, n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t kk) {
        const int k = static_cast<int>(kk);
        const int lo = std::min(k, m), hi = std::max(k, m);
        for (int q = lo; q <= hi; ++q) {
            Kphi(k, q) = apply_L(c, k, m, [&](int a, int b) { return provider.row(a, b, q); }, stride);
            Kpsi(k, q) = apply_L(c, m, k, [&](int a, int b) { return provider.col(a, b, q); }, stride);
        }
    });

    out.traces.phi = volterra_symmetric<double>(
        A11, P, [&](Eigen::Index i, Eigen::Index j) { return Kphi(i, j); }, gphi, g.epsilon, init.phi0);
    out.traces.psi = volterra_symmetric<double>(
        A22, Q, [&](Eigen::Index i, Eigen::Index j) { return Kpsi(i, j); }, gpsi, g.epsilon, init.psi0);
    out.traces.provenance = CauchyTraces::Provenance::FromVolterra;
    out.P = P;
    out.Q = Q;
    out.min_abs_A11 = A11.cwiseAbs().minCoeff();
    out.min_abs_A22 = A22.cwiseAbs().minCoeff();
    return out;
}

} // namespace ucp
