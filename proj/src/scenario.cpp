#include "ucp/scenario.hpp"

#include "ucp/errors.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace ucp {

using nlohmann::ordered_json;

namespace {

constexpr const char* kTaskNames[] = {"conditions", "reduce",    "characteristics", "riemann",
                                      "ucp",        "nullspace", "point_data"};

void reject_unknown(const ordered_json& obj, const std::string& where, std::initializer_list<const char*> allowed)
{
    for (const auto& item : obj.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* a) { return item.key() == a; });
        if (!known)
            throw ScenarioError(where.empty() ? item.key() : where + "." + item.key(), "unknown key");
    }
}

double number(const ordered_json& v, const std::string& key)
{
    if (!v.is_number())
        throw ScenarioError(key, "expected a number");
    return v.get<double>();
}

ScalarField expression(const ordered_json& v, const std::string& key)
{
    if (v.is_number())
        return ScalarField::constant(v.get<double>());
    if (!v.is_string())
        throw ScenarioError(key, "expected an expression string or a number");
    try {
        return parse(v.get<std::string>());
    } catch (const ParseError& e) {
        throw ScenarioError(key, e.what());
    }
}

std::array<double, 2> pair(const ordered_json& v, const std::string& key)
{
    if (!v.is_array() || v.size() != 2)
        throw ScenarioError(key, "expected a two-element array");
    return {number(v[0], key + "[0]"), number(v[1], key + "[1]")};
}

} // namespace

std::string to_string(Task t)
{
    return kTaskNames[static_cast<int>(t)];
}

Task task_from_string(const std::string& name)
{
    for (int k = 0; k < 7; ++k)
        if (name == kTaskNames[k])
            return static_cast<Task>(k);
    throw ScenarioError("tasks", "unknown task '" + name + "'");
}

bool Scenario::has_task(Task t) const
{
    return std::find(tasks.begin(), tasks.end(), t) != tasks.end();
}

Scenario scenario_from_json(const ordered_json& doc, const std::string& fallback_name)
{
    if (!doc.is_object())
        throw ScenarioError("<root>", "scenario must be a JSON object");
    reject_unknown(doc, "",
                   {"schema_version", "name", "description", "tensor", "lower_order", "point", "omega", "grid",
                    "tolerances", "tasks", "point_data", "family", "options", "expect"});

    if (!doc.contains("schema_version"))
        throw ScenarioError("schema_version", "missing");
    if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != 1)
        throw ScenarioError("schema_version", "unsupported version (expected 1)");

    Scenario sc;
    sc.name = doc.value("name", fallback_name);
    sc.description = doc.value("description", std::string{});

    if (doc.contains("options")) {
        const auto& o = doc["options"];
        if (!o.is_object())
            throw ScenarioError("options", "expected an object");
        reject_unknown(o, "options", {"divergence_form", "force_traced"});
        for (const auto& [key, flag] : {std::pair{"divergence_form", &sc.options.divergence_form},
                                        std::pair{"force_traced", &sc.options.force_traced}}) {
            if (!o.contains(key))
                continue;
            if (!o[key].is_boolean())
                throw ScenarioError(std::string("options.") + key, "expected a boolean");
            *flag = o[key].get<bool>();
        }
    }

    // Tensor: all six components required.
    if (!doc.contains("tensor") || !doc["tensor"].is_object())
        throw ScenarioError("tensor", "missing or not an object");
    const auto& tensor = doc["tensor"];
    reject_unknown(tensor, "tensor", {"a1111", "a1112", "a1122", "a1212", "a1222", "a2222"});
    ElasticityCoefficients& c = sc.coefficients;
    const std::pair<const char*, ScalarField*> components[] = {{"a1111", &c.a1111}, {"a1112", &c.a1112},
                                                               {"a1122", &c.a1122}, {"a1212", &c.a1212},
                                                               {"a1222", &c.a1222}, {"a2222", &c.a2222}};
    for (const auto& [key, field] : components) {
        if (!tensor.contains(key))
            throw ScenarioError(std::string("tensor.") + key, "missing component");
        *field = expression(tensor[key], std::string("tensor.") + key);
    }
    sc.tensor_source = tensor;
    if (sc.options.divergence_form)
        c = with_divergence_terms(c);

    if (doc.contains("lower_order")) {
        const auto& lo = doc["lower_order"];
        if (!lo.is_object())
            throw ScenarioError("lower_order", "expected an object");
        for (const auto& item : lo.items()) {
            const std::string& key = item.key();
            const std::string where = "lower_order." + key;
            auto digit = [&](char ch) {
                if (ch != '1' && ch != '2')
                    throw ScenarioError(where, "unknown key");
                return ch - '1';
            };
            ScalarField value = expression(item.value(), where);
            if (key.size() == 4 && key[0] == 'b')
                c.b[digit(key[1])][digit(key[2])][digit(key[3])] =
                    c.b[digit(key[1])][digit(key[2])][digit(key[3])] + value;
            else if (key.size() == 3 && key[0] == 'c')
                c.c[digit(key[1])][digit(key[2])] = c.c[digit(key[1])][digit(key[2])] + value;
            else
                throw ScenarioError(where, "unknown key");
        }
        sc.lower_order_source = lo;
    }

    if (!doc.contains("point"))
        throw ScenarioError("point", "missing");
    const auto p = pair(doc["point"], "point");
    sc.x0 = p[0];
    sc.y0 = p[1];

    if (!doc.contains("omega") || !doc["omega"].is_object())
        throw ScenarioError("omega", "missing or not an object");
    reject_unknown(doc["omega"], "omega", {"center", "halfwidths"});
    if (!doc["omega"].contains("center") || !doc["omega"].contains("halfwidths"))
        throw ScenarioError("omega", "needs center and halfwidths");
    const auto center = pair(doc["omega"]["center"], "omega.center");
    const auto half = pair(doc["omega"]["halfwidths"], "omega.halfwidths");
    if (!(half[0] > 0.0) || !(half[1] > 0.0))
        throw ScenarioError("omega.halfwidths", "must be positive");
    sc.omega = Region{center[0], center[1], half[0], half[1]};
    if (!sc.omega.contains(sc.x0, sc.y0))
        throw ScenarioError("point", "lies outside omega");

    if (doc.contains("grid")) {
        const auto& g = doc["grid"];
        if (!g.is_object())
            throw ScenarioError("grid", "expected an object");
        reject_unknown(g, "grid", {"n"});
        if (g.contains("n")) {
            if (!g["n"].is_number_integer())
                throw ScenarioError("grid.n", "expected an integer");
            sc.n = g["n"].get<int>();
        }
    }
    if (sc.n < 17 || sc.n > 1025)
        throw ScenarioError("grid.n", "must lie in [17, 1025]");

    if (doc.contains("tolerances")) {
        const auto& t = doc["tolerances"];
        if (!t.is_object())
            throw ScenarioError("tolerances", "expected an object");
        Tolerances& tol = sc.tolerances;
        const std::pair<const char*, double*> entries[] = {
            {"rank", &tol.rank},
            {"picard", &tol.picard},
            {"ivp", &tol.ivp},
            {"reconstruction", &tol.reconstruction},
            {"transfer", &tol.transfer},
            {"hyperbolic_residual", &tol.hyperbolic_residual},
            {"nullspace_threshold", &tol.nullspace_threshold},
            {"nullspace_gap", &tol.nullspace_gap},
            {"projection", &tol.projection}};
        for (const auto& item : t.items()) {
            const std::string where = "tolerances." + item.key();
            auto it = std::find_if(std::begin(entries), std::end(entries),
                                   [&](const auto& e) { return item.key() == e.first; });
            if (it == std::end(entries))
                throw ScenarioError(where, "unknown key");
            const double v = number(item.value(), where);
            if (!(v > 0.0))
                throw ScenarioError(where, "must be positive");
            *it->second = v;
        }
    }

    if (!doc.contains("tasks") || !doc["tasks"].is_array() || doc["tasks"].empty())
        throw ScenarioError("tasks", "expected a non-empty list");
    std::set<Task> seen;
    for (const auto& t : doc["tasks"]) {
        if (!t.is_string())
            throw ScenarioError("tasks", "task names must be strings");
        seen.insert(task_from_string(t.get<std::string>()));
    }
    sc.tasks.assign(seen.begin(), seen.end());  // dependency order = enum order

    if (doc.contains("point_data")) {
        const auto& pd = doc["point_data"];
        std::array<std::optional<double>, 5> values;
        static const char* names[] = {"u", "ux", "uy", "uxx", "uyy"};
        if (pd.is_array()) {
            // Five values, or four with u_yy dropped.
            if (pd.size() != 5 && pd.size() != 4)
                throw ScenarioError("point_data", "expected four or five values");
            for (std::size_t k = 0; k < pd.size(); ++k)
                values[k] = number(pd[k], "point_data[" + std::to_string(k) + "]");
        } else if (pd.is_object()) {
            reject_unknown(pd, "point_data", {"u", "ux", "uy", "uxx", "uyy"});
            for (int k = 0; k < 5; ++k)
                if (pd.contains(names[k]))
                    values[k] = number(pd[names[k]], std::string("point_data.") + names[k]);
            if (!values[0] || !values[1] || !values[2] || (!values[3] && !values[4]))
                throw ScenarioError("point_data", "needs u, ux, uy and at least one of uxx, uyy");
        } else {
            throw ScenarioError("point_data", "expected a list or an object");
        }
        sc.point_data = values;
    }

    if (doc.contains("family")) {
        const auto& f = doc["family"];
        if (!f.is_array())
            throw ScenarioError("family", "expected a list of expressions");
        for (std::size_t k = 0; k < f.size(); ++k)
            sc.family.push_back(expression(f[k], "family[" + std::to_string(k) + "]"));
    }

    if (doc.contains("expect")) {
        if (!doc["expect"].is_object())
            throw ScenarioError("expect", "expected an object");
        sc.expect = doc["expect"];
    }
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ScenarioError("<file>", "cannot open " + path.string());
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ScenarioError("<file>", std::string("invalid JSON: ") + e.what());
    }
    return scenario_from_json(doc, path.stem().string());
}

} // namespace ucp
