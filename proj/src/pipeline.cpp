#include "ucp/pipeline.hpp"

#include "ucp/characteristics.hpp"
#include "ucp/nullspace.hpp"
#include "ucp/reduction.hpp"
#include "ucp/riemann.hpp"
#include "ucp/tensor.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <memory>
#include <set>

namespace ucp {

using nlohmann::ordered_json;

void write_csv(std::ostream& os, const GridDump& grid)
{
    os << "x,y,value\n";
    char line[96];
    for (const auto& r : grid.rows) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", r[0], r[1], r[2]);
        os << line;
    }
}

namespace {

constexpr int kConditionGrid = 17;   // spatial samples per axis for the hypothesis audit
constexpr int kSummaryGrid = 17;     // samples per axis for coefficient summaries
constexpr int kMaxTargetsPerAxis = 65;

template <class F>
auto in_stage(const char* name, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const ScenarioError&) {
        throw;
    } catch (const PreconditionError& e) {
        throw StageError(name, "precondition", e.what());
    } catch (const ConvergenceError& e) {
        throw StageError(name, "convergence", e.what());
    } catch (const DomainError& e) {
        throw StageError(name, "domain", e.what());
    } catch (const Error& e) {
        throw StageError(name, "error", e.what());
    }
}

ordered_json checked(double value, double tolerance, bool pass)
{
    return ordered_json{{"value", value}, {"tolerance", tolerance}, {"pass", pass}};
}

ordered_json to_json(const Eigen::MatrixXd& m)
{
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

ordered_json to_json(const Eigen::VectorXd& v)
{
    ordered_json out = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out.push_back(v(i));
    return out;
}

ordered_json to_json(const Tolerances& t)
{
    return ordered_json{{"rank", t.rank},
                        {"picard", t.picard},
                        {"ivp", t.ivp},
                        {"reconstruction", t.reconstruction},
                        {"transfer", t.transfer},
                        {"hyperbolic_residual", t.hyperbolic_residual},
                        {"nullspace_threshold", t.nullspace_threshold},
                        {"nullspace_gap", t.nullspace_gap},
                        {"projection", t.projection}};
}

const char* const kDataNames[] = {"u", "ux", "uy", "uxx", "uyy"};

// Per-run state shared between stages.
struct Context {
    const Scenario& sc;
    const RunOptions& opt;
    ScenarioReport& report;
    U2System sys;
    std::shared_ptr<const CharacteristicMap> map;
    std::optional<TransformedSystem> tsys;
    std::optional<CoefficientGrid> grid;
    std::unique_ptr<RiemannProvider> provider;
    std::optional<NullSpaceResult> nullspace;
    std::vector<Task> tasks;

    bool wants(Task t) const { return std::find(tasks.begin(), tasks.end(), t) != tasks.end(); }

    int riemann_n() const { return sc.n % 2 == 1 ? sc.n : sc.n + 1; }
};

// ---------------------------------------------------------------------------

ordered_json conditions_stage(Context& ctx)
{
    const Scenario& sc = ctx.sc;
    const ElasticityCoefficients& c = sc.coefficients;
    const int n = kConditionGrid;
    ordered_json out;

    const double ell = ellipticity_margin(c, sc.omega, n);
    out["strongly_elliptic"] = ordered_json{{"margin", ell}, {"grid", n}, {"pass", ell > 0.0}};
    const double cvx = convexity_margin(c, sc.omega, n);
    out["strongly_convex"] = ordered_json{{"margin", cvx}, {"grid", n}, {"pass", cvx > 0.0}};

    const DeltaRange delta = hyperbolicity_delta_range(c, sc.omega, n);
    out["hyperbolic"] = ordered_json{{"delta_at_point", hyperbolicity_delta(c, sc.x0, sc.y0)},
                                     {"delta_min", delta.min},
                                     {"delta_max", delta.max},
                                     {"grid", n},
                                     {"pass", delta.min > 0.0}};

    // a1222^2 - a1212 a2222 must be negative wherever the tensor is strongly elliptic.
    double derived = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double x = sc.omega.x_node(i, n), y = sc.omega.y_node(j, n);
            const double a1222 = c.a1222(x, y);
            derived = std::max(derived, a1222 * a1222 - c.a1212(x, y) * c.a2222(x, y));
        }
    out["derived_ellipticity"] = ordered_json{{"max", derived}, {"pass", derived < 0.0}};

    // Pencil behind the continuation argument: at the point and its worst conditioning on the grid.
    ordered_json pencil;
    try {
        const PencilEigenpairs pe = pencil_eigenpairs(c, sc.x0, sc.y0);
        ordered_json roots = ordered_json::array(), cond = ordered_json::array();
        double max_res = 0.0;
        for (int k = 0; k < 4; ++k) {
            roots.push_back({pe.roots[k].real(), pe.roots[k].imag()});
            cond.push_back(pe.conditioning[k]);
            max_res = std::max(max_res, pe.residual[k]);
        }
        double grid_min = std::numeric_limits<double>::infinity();
        bool defective = pe.defective();
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const PencilEigenpairs q = pencil_eigenpairs(c, sc.omega.x_node(i, n), sc.omega.y_node(j, n));
                grid_min = std::min(grid_min, q.min_conditioning());
                defective = defective || q.defective();
            }
        pencil["roots"] = roots;
        pencil["conditioning"] = cond;
        pencil["residual"] = checked(max_res, 1e-8, max_res <= 1e-8);
        pencil["min_conditioning_grid"] = grid_min;
        pencil["defective"] = defective;
        pencil["pass"] = !defective && grid_min > 0.0 && max_res <= 1e-8;
    } catch (const PreconditionError& e) {
        pencil["error"] = e.what();
        pencil["pass"] = false;
    }
    pencil["smoothness_in_position"] = "unchecked";
    out["pencil"] = pencil;
    return out;
}

ordered_json operator_json(const OperatorCoefficients& op)
{
    ordered_json out = ordered_json::array();
    for (const auto& f : op)
        out.push_back(f.to_string());
    return out;
}

ordered_json reduce_stage(Context& ctx)
{
    const Scenario& sc = ctx.sc;
    const double tol = sc.tolerances.rank;
    ordered_json out;
    out["hyper"] = operator_json(ctx.sys.hyper);
    out["ell"] = operator_json(ctx.sys.ell);
    out["symbol_at_point"] = to_json(Eigen::MatrixXd(second_order_symbols(ctx.sys, sc.x0, sc.y0)));
    out["rank_at_point"] = second_order_rank(ctx.sys, sc.x0, sc.y0, tol);

    const int n = kConditionGrid;
    int rmin = 2, rmax = 0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const int r = second_order_rank(ctx.sys, sc.omega.x_node(i, n), sc.omega.y_node(j, n), tol);
            rmin = std::min(rmin, r);
            rmax = std::max(rmax, r);
        }
    out["rank_map"] = ordered_json{{"grid", n}, {"min", rmin}, {"max", rmax}};
    out["tolerance"] = tol;

    if (sc.point_data) {
        // Second derivatives the data leave open: u_xy always, plus any omitted one.
        const auto& v = *sc.point_data;
        ColumnMask mask{!v[3].has_value(), true, !v[4].has_value()};
        ordered_json cols = ordered_json::array();
        if (mask.dxx)
            cols.push_back("dxx");
        cols.push_back("dxy");
        if (mask.dyy)
            cols.push_back("dyy");
        const int unknowns = static_cast<int>(cols.size());
        const int rank = second_order_rank(ctx.sys, sc.x0, sc.y0, tol, mask);
        out["reduced_data"] = ordered_json{
            {"unknown_columns", cols}, {"rank", rank}, {"required", unknowns}, {"degenerate", rank < unknowns}};
    }

    if (!sc.family.empty()) {
        ordered_json fam = ordered_json::array();
        for (const auto& f : sc.family) {
            const Residual r = residual(ctx.sys, f, sc.omega, kConditionGrid);
            const double worst = std::max(r.hyper, r.ell);
            fam.push_back(ordered_json{{"member", f.source().empty() ? f.to_string() : f.source()},
                                       {"hyper", r.hyper},
                                       {"ell", r.ell},
                                       {"tolerance", 1e-9},
                                       {"pass", worst <= 1e-9}});
        }
        out["family_residuals"] = fam;
    }
    return out;
}

ordered_json characteristics_stage(Context& ctx)
{
    const Scenario& sc = ctx.sc;
    const DeltaRange delta = hyperbolicity_delta_range(sc.coefficients, sc.omega, kConditionGrid);
    if (!(delta.min > 0.0)) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "hyperbolicity condition violated: min delta = %.6g <= 0 on omega", delta.min);
        throw PreconditionError("characteristics", buf);
    }

    MapOptions mo;
    mo.force_traced = sc.options.force_traced;
    ctx.map = std::make_shared<const CharacteristicMap>(build_map(ctx.sys, sc.omega, sc.x0, sc.y0, mo));
    TransformValidation val;
    ctx.tsys = transform_system(ctx.sys, ctx.map, sc.omega, &val);

    ordered_json out;
    out["case"] = to_string(ctx.map->kind());
    out["traced"] = ctx.map->traced();
    out["epsilon"] = ctx.tsys->epsilon;
    const MapJet jet = ctx.map->jet(sc.x0, sc.y0);
    out["jacobian_at_point"] = to_json(Eigen::MatrixXd(jet.J));
    out["det_jacobian"] = jet.J.determinant();
    out["validation"] = ordered_json{
        {"hyperbolic_residual",
         checked(val.max_hyper_residual, sc.tolerances.hyperbolic_residual,
                 val.max_hyper_residual <= sc.tolerances.hyperbolic_residual)},
        {"ellipticity_sign", checked(val.max_ellipticity_sign, 0.0, val.max_ellipticity_sign < 0.0)},
        {"min_abs_A11", val.min_abs_A11},
        {"min_abs_A22", val.min_abs_A22},
        {"min_abs_K", val.min_abs_K}};

    // Summaries of the transformed coefficients on the square.
    const int m = kSummaryGrid;
    const double eps = ctx.tsys->epsilon;
    std::array<double, 9> lo, hi;
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) {
            const double s = -eps + 2.0 * eps * i / (m - 1), t = -eps + 2.0 * eps * j / (m - 1);
            const CharacteristicCoefficients cc = ctx.tsys->coefficients(s, t);
            const double vals[9] = {cc.B11, cc.B12, cc.C1, cc.A11, cc.A12, cc.A22, cc.B21, cc.B22, cc.C2};
            for (int k = 0; k < 9; ++k) {
                lo[k] = std::min(lo[k], vals[k]);
                hi[k] = std::max(hi[k], vals[k]);
            }
        }
    static const char* names[9] = {"B11", "B12", "C1", "A11", "A12", "A22", "B21", "B22", "C2"};
    ordered_json summary;
    for (int k = 0; k < 9; ++k)
        summary[names[k]] = ordered_json{{"min", lo[k]}, {"max", hi[k]}};
    out["coefficients"] = ordered_json{{"grid", m}, {"range", summary}};

    if (ctx.opt.collect_grids || ctx.wants(Task::Riemann) || ctx.wants(Task::Ucp)) {
        ctx.grid = sample_coefficients(*ctx.tsys, ctx.riemann_n());
        if (ctx.opt.collect_grids) {
            const CoefficientGrid& g = *ctx.grid;
            const Eigen::MatrixXd* mats[9] = {&g.B11, &g.B12, &g.C1, &g.A11, &g.A12, &g.A22, &g.B21, &g.B22, &g.C2};
            for (int k = 0; k < 9; ++k) {
                GridDump d{std::string("coeff_") + names[k], {}};
                for (int j = 0; j < g.grid.n; ++j)
                    for (int i = 0; i < g.grid.n; ++i)
                        d.rows.push_back({g.grid.node(i), g.grid.node(j), (*mats[k])(i, j)});
                ctx.report.grids.push_back(std::move(d));
            }
        }
    }
    return out;
}

ordered_json table_json(const CoefficientGrid& g, const RiemannTable& t)
{
    return ordered_json{{"param", {t.xi, t.eta}},
                        {"iterations", t.iterations},
                        {"picard_difference", t.residual},
                        {"integral_residual", integral_equation_residual(g, t)}};
}

ordered_json riemann_stage(Context& ctx)
{
    const Scenario& sc = ctx.sc;
    if (!ctx.grid)
        ctx.grid = sample_coefficients(*ctx.tsys, ctx.riemann_n());
    const CoefficientGrid& g = *ctx.grid;
    const RiemannGrid& rg = g.grid;
    ctx.provider = std::make_unique<RiemannProvider>(g, sc.tolerances.picard);

    ordered_json out;
    out["n"] = rg.n;
    out["epsilon"] = rg.epsilon;
    out["tolerance"] = sc.tolerances.picard;

    // Origin and the four corners of the square: whole-grid tables.
    const int last = rg.n - 1, mid = rg.mid();
    const std::pair<int, int> params[] = {{mid, mid}, {0, 0}, {last, 0}, {0, last}, {last, last}};
    ordered_json tables = ordered_json::array();
    int max_it = 0;
    double max_int = 0.0;
    for (const auto& [ip, jp] : params) {
        const RiemannTable t = solve_riemann(g, ip, jp, sc.tolerances.picard);
        ordered_json tj = table_json(g, t);
        max_it = std::max(max_it, t.iterations);
        max_int = std::max(max_int, tj["integral_residual"].get<double>());
        tables.push_back(tj);
    }
    out["tables"] = tables;
    out["max_iterations"] = max_it;
    out["max_integral_residual"] = max_int;

    if (ctx.opt.collect_grids) {
        const auto param = ctx.opt.riemann_param.value_or(std::make_pair(0.0, 0.0));
        const int ip = rg.index_of(param.first), jp = rg.index_of(param.second);
        const RiemannTable t = solve_riemann(g, ip, jp, sc.tolerances.picard);
        GridDump d{"riemann", {}};
        for (int j = 0; j < rg.n; ++j)
            for (int i = 0; i < rg.n; ++i)
                d.rows.push_back({rg.node(i), rg.node(j), t.at(i, j)});
        ctx.report.grids.push_back(std::move(d));
        out["dumped_param"] = {rg.node(ip), rg.node(jp)};
    }
    return out;
}

ordered_json ucp_stage(Context& ctx)
{
    const Scenario& sc = ctx.sc;
    const Tolerances& tol = sc.tolerances;
    ordered_json out;

    std::array<std::optional<double>, 5> values{0.0, 0.0, 0.0, 0.0, 0.0};
    out["point_data_source"] = sc.point_data ? "scenario" : "default zero data";
    if (sc.point_data)
        values = *sc.point_data;
    bool zero_data = true;
    ordered_json observed;
    for (int k = 0; k < 5; ++k)
        if (values[k]) {
            observed[kDataNames[k]] = *values[k];
            zero_data = zero_data && *values[k] == 0.0;
        }
    out["point_data"] = observed;
    out["zero_data"] = zero_data;

    U2PointData d;
    d.u = *values[0];
    d.ux = *values[1];
    d.uy = *values[2];
    d.uxx = values[3];
    d.uyy = values[4];

    WPointData wd;
    try {
        wd = transfer_point_data(ctx.sys, *ctx.map, d, tol.rank);
    } catch (const PreconditionError& e) {
        // Reduced data that cannot fix the second derivatives: decline, do not guess.
        out["status"] = "declined";
        out["reason"] = e.what();
        return out;
    }
    const double tmax = std::max({std::abs(wd.w), std::abs(wd.ws), std::abs(wd.wt), std::abs(wd.wss),
                                  std::abs(wd.wst), std::abs(wd.wtt)});
    out["transferred"] = ordered_json{{"w", wd.w},     {"ws", wd.ws},   {"wt", wd.wt},
                                      {"wss", wd.wss}, {"wst", wd.wst}, {"wtt", wd.wtt},
                                      {"consistency", wd.consistency},
                                      {"max_abs", checked(tmax, tol.transfer, tmax <= tol.transfer)}};

    if (!ctx.provider)
        ctx.provider = std::make_unique<RiemannProvider>(*ctx.grid, tol.picard);
    RiemannProvider& provider = *ctx.provider;
    const CoefficientGrid& g = *ctx.grid;
    const TraceInitialData init = trace_initial_data(g, wd);
    const TraceSolve ts = solve_traces(provider, init);

    const double phi_sup = ts.traces.phi.lpNorm<Eigen::Infinity>();
    const double psi_sup = ts.traces.psi.lpNorm<Eigen::Infinity>();
    out["phi_sup"] = checked(phi_sup, tol.ivp, phi_sup <= tol.ivp);
    out["psi_sup"] = checked(psi_sup, tol.ivp, psi_sup <= tol.ivp);
    out["min_abs_A11_axis"] = ts.min_abs_A11;
    out["min_abs_A22_axis"] = ts.min_abs_A22;

    const int n = g.grid.n;
    const int stride = std::max(1, (n - 1 + kMaxTargetsPerAxis - 2) / (kMaxTargetsPerAxis - 1));
    std::vector<std::pair<int, int>> targets;
    for (int j = 0; j < n; j += stride)
        for (int i = 0; i < n; i += stride)
            targets.emplace_back(i, j);
    const std::vector<double> w = represent_solution(provider, init.w00, ts.traces, targets);
    double w_sup = 0.0;
    for (double v : w)
        w_sup = std::max(w_sup, std::abs(v));
    out["w_sup"] = checked(w_sup, tol.reconstruction, w_sup <= tol.reconstruction);
    out["targets"] = targets.size();
    out["riemann_tables"] = provider.cached();
    out["max_picard_iterations"] = provider.max_iterations();
    out["square"] = ordered_json{{"epsilon", g.grid.epsilon}, {"n", n}};

    if (zero_data) {
        const bool ok = tmax <= tol.transfer && phi_sup <= tol.ivp && psi_sup <= tol.ivp && w_sup <= tol.reconstruction;
        out["status"] = ok ? "verified" : "failed";
    } else {
        out["status"] = "reconstructed";
    }
    out["handoff"] = "w vanishes on the characteristic square; propagation to omega rests on the pencil "
                     "hypothesis reported under conditions.pencil";
    return out;
}

ordered_json nullspace_stage(Context& ctx)
{
    const Scenario& sc = ctx.sc;
    NullSpaceOptions no;
    no.threshold = sc.tolerances.nullspace_threshold;
    no.min_gap = sc.tolerances.nullspace_gap;
    no.seed = ctx.opt.seed;
    ctx.nullspace = null_space_dimension(ctx.sys, sc.omega, sc.n, no);
    const NullSpaceResult& r = *ctx.nullspace;

    ordered_json out;
    out["n"] = r.n;
    out["dimension"] = r.dimension;
    out["ambiguous"] = r.ambiguous;
    out["gap"] = checked(r.gap, no.min_gap, r.gap >= no.min_gap);
    out["threshold"] = r.threshold;
    out["sigma_max"] = r.sigma_max;
    out["singular_values"] = r.singular_values;
    if (!sc.family.empty()) {
        ordered_json fam = ordered_json::array();
        for (const auto& f : sc.family) {
            const double res = projection_residual(r, f);
            fam.push_back(ordered_json{{"member", f.source().empty() ? f.to_string() : f.source()},
                                       {"residual", res},
                                       {"tolerance", sc.tolerances.projection},
                                       {"pass", res <= sc.tolerances.projection}});
        }
        out["family_projection"] = fam;
    }
    if (ctx.opt.collect_grids) {
        for (int k = 0; k < r.dimension; ++k) {
            GridDump d{"nullspace_basis_" + std::to_string(k), {}};
            for (int j = 0; j < r.n; ++j)
                for (int i = 0; i < r.n; ++i)
                    d.rows.push_back({sc.omega.x_node(i, r.n), sc.omega.y_node(j, r.n), r.basis(i + r.n * j, k)});
            ctx.report.grids.push_back(std::move(d));
        }
    }
    return out;
}

ordered_json point_data_stage(Context& ctx)
{
    const Scenario& sc = ctx.sc;
    if (!sc.point_data)
        throw ScenarioError("point_data", "the point_data task needs point data");
    PointDataSpec spec;
    spec.x0 = sc.x0;
    spec.y0 = sc.y0;
    spec.values = *sc.point_data;

    ordered_json out;
    PointDataSolution sol;
    if (!sc.family.empty()) {
        out["source"] = "family";
        sol = point_data_solve(sc.family, spec, sc.tolerances.rank);
    } else {
        out["source"] = "nullspace_basis";
        sol = point_data_solve(ctx.nullspace->basis, sc.omega, sc.n, spec, sc.tolerances.rank);
    }
    ordered_json observed = ordered_json::array();
    bool zero = true;
    for (int k = 0; k < 5; ++k)
        if (spec.values[k]) {
            observed.push_back(kDataNames[k]);
            zero = zero && *spec.values[k] == 0.0;
        }
    out["observed"] = observed;
    out["map"] = to_json(sol.map);
    out["rank"] = sol.rank;
    out["unknowns"] = sol.unknowns;
    out["rank_deficient"] = sol.rank_deficient;
    out["tolerance"] = sc.tolerances.rank;
    out["coefficients"] = to_json(sol.coefficients);
    out["residual"] = sol.residual;
    if (sol.rank_deficient)
        out["null_direction"] = to_json(sol.null_direction);
    out["forces_zero"] = zero && !sol.rank_deficient;
    return out;
}

// Short expectation names and where they point in the report.
const std::pair<const char*, const char*> kExpectKeys[] = {
    {"nullspace_dim", "/nullspace/dimension"},
    {"nullspace_ambiguous", "/nullspace/ambiguous"},
    {"strongly_elliptic", "/conditions/strongly_elliptic/pass"},
    {"strongly_convex", "/conditions/strongly_convex/pass"},
    {"hyperbolic", "/conditions/hyperbolic/pass"},
    {"pencil_nonsingular", "/conditions/pencil/pass"},
    {"second_order_rank", "/reduce/rank_at_point"},
    {"reduced_data_degenerate", "/reduce/reduced_data/degenerate"},
    {"map_case", "/characteristics/case"},
    {"point_data_rank", "/point_data/rank"},
    {"point_data_rank_deficient", "/point_data/rank_deficient"},
    {"ucp_status", "/ucp/status"},
    {"w_sup", "/ucp/w_sup/value"},
};

} // namespace

std::vector<Task> resolve_tasks(const Scenario& sc, const RunOptions& options)
{
    std::set<Task> tasks;
    if (options.only) {
        for (Task t : *options.only)
            tasks.insert(t);
    } else {
        tasks.insert(sc.tasks.begin(), sc.tasks.end());
    }
    if (tasks.count(Task::Ucp) || tasks.count(Task::Riemann)) {
        tasks.insert(Task::Characteristics);
    }
    if (tasks.count(Task::PointData) && sc.family.empty())
        tasks.insert(Task::Nullspace);
    return {tasks.begin(), tasks.end()};
}

std::pair<ordered_json, int> evaluate_expectations(const ordered_json& expect, const ordered_json& report)
{
    ordered_json records = ordered_json::array();
    int failed = 0;
    for (const auto& item : expect.items()) {
        const std::string& key = item.key();
        std::string pointer;
        if (!key.empty() && key[0] == '/') {
            pointer = key;
        } else {
            for (const auto& [name, path] : kExpectKeys)
                if (key == name)
                    pointer = path;
            if (pointer.empty())
                throw ScenarioError("expect." + key, "unknown expectation");
        }
        const ordered_json& want = item.value();
        ordered_json rec{{"key", key}, {"expected", want}};
        nlohmann::ordered_json::json_pointer ptr;
        try {
            ptr = nlohmann::ordered_json::json_pointer(pointer);
        } catch (const nlohmann::json::exception&) {
            throw ScenarioError("expect." + key, "invalid JSON pointer");
        }
        if (!report.contains(ptr)) {
            rec["status"] = "skipped";
            records.push_back(rec);
            continue;
        }
        const ordered_json& got = report.at(ptr);
        rec["actual"] = got;
        bool pass;
        if (want.is_object()) {
            for (const auto& bound : want.items())
                if (bound.key() != "min" && bound.key() != "max")
                    throw ScenarioError("expect." + key + "." + bound.key(), "unknown bound");
            pass = got.is_number();
            if (pass && want.contains("min"))
                pass = got.get<double>() >= want["min"].get<double>();
            if (pass && want.contains("max"))
                pass = got.get<double>() <= want["max"].get<double>();
        } else if (want.is_number() && got.is_number()) {
            pass = got.get<double>() == want.get<double>();
        } else {
            pass = got == want;
        }
        rec["status"] = pass ? "pass" : "fail";
        failed += pass ? 0 : 1;
        records.push_back(rec);
    }
    return {records, failed};
}

ScenarioReport run(const Scenario& sc, const RunOptions& options)
{
    ScenarioReport report;
    Context ctx{sc, options, report, reduce(sc.coefficients), nullptr, std::nullopt, std::nullopt, nullptr,
                std::nullopt, resolve_tasks(sc, options)};
    const std::vector<Task>& tasks = ctx.tasks;

    ordered_json& j = report.json;
    j["schema_version"] = 1;
    j["scenario"] = sc.name;
    if (!sc.description.empty())
        j["description"] = sc.description;
    ordered_json task_names = ordered_json::array();
    for (Task t : tasks)
        task_names.push_back(to_string(t));
    j["tasks"] = task_names;
    j["seed"] = options.seed;
    j["point"] = {sc.x0, sc.y0};
    j["omega"] = ordered_json{{"center", {sc.omega.cx, sc.omega.cy}}, {"halfwidths", {sc.omega.hx, sc.omega.hy}}};
    j["grid"] = ordered_json{{"n", sc.n}};
    j["tensor"] = sc.tensor_source;
    if (!sc.lower_order_source.is_null())
        j["lower_order"] = sc.lower_order_source;
    j["options"] = ordered_json{{"divergence_form", sc.options.divergence_form},
                                {"force_traced", sc.options.force_traced}};
    j["tolerances"] = to_json(sc.tolerances);

    for (Task t : tasks) {
        const std::string name = to_string(t);
        switch (t) {
        case Task::Conditions:
            j[name] = in_stage("conditions", [&] { return conditions_stage(ctx); });
            break;
        case Task::Reduce:
            j[name] = in_stage("reduce", [&] { return reduce_stage(ctx); });
            break;
        case Task::Characteristics:
            j[name] = in_stage("characteristics", [&] { return characteristics_stage(ctx); });
            break;
        case Task::Riemann:
            j[name] = in_stage("riemann", [&] { return riemann_stage(ctx); });
            break;
        case Task::Ucp:
            j[name] = in_stage("ucp", [&] { return ucp_stage(ctx); });
            break;
        case Task::Nullspace:
            j[name] = in_stage("nullspace", [&] { return nullspace_stage(ctx); });
            break;
        case Task::PointData:
            j[name] = in_stage("point_data", [&] { return point_data_stage(ctx); });
            break;
        }
    }

    auto [records, failed] = evaluate_expectations(sc.expect, j);
    j["expectations"] = records;
    j["verdict"] = failed == 0 ? "pass" : "fail";
    report.expectations_failed = failed;
    return report;
}

} // namespace ucp
