#pragma once

// Scenario files (JSON, schema_version 1) and their in-memory form.

#include "ucp/field.hpp"
#include "ucp/region.hpp"
#include "ucp/tensor.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ucp {

enum class Task { Conditions, Reduce, Characteristics, Riemann, Ucp, Nullspace, PointData };

std::string to_string(Task t);
/// Throws ScenarioError("tasks", ...) for an unknown name.
Task task_from_string(const std::string& name);

struct Tolerances {
    double rank = 1e-9;                 // relative SVD threshold for symbol / point-data ranks
    double picard = 1e-10;              // Riemann successive-difference tolerance
    double ivp = 1e-10;                 // sup-norm of the traces in the zero-data demonstration
    double reconstruction = 1e-8;       // sup-norm of the represented w
    double transfer = 1e-12;            // transferred point data at the origin
    double hyperbolic_residual = 1e-8;  // relative w_ss / w_tt residual after the transform
    double nullspace_threshold = 1e-12; // relative singular-value cutoff
    double nullspace_gap = 1e3;
    double projection = 1e-6;           // family members against the numerical null space
};

struct ScenarioOptions {
    bool divergence_form = false;  // add the lower-order terms of div(a : grad u)
    bool force_traced = false;     // trace characteristics even for constant symbols
};

struct Scenario {
    std::string name;
    std::string description;
    ElasticityCoefficients coefficients;
    nlohmann::ordered_json tensor_source;       // echoed into the report
    nlohmann::ordered_json lower_order_source;
    double x0 = 0.0, y0 = 0.0;
    Region omega;
    int n = 65;
    Tolerances tolerances;
    std::vector<Task> tasks;
    /// u, u_x, u_y, u_xx, u_yy at the point; absent entries are not observed.
    std::optional<std::array<std::optional<double>, 5>> point_data;
    std::vector<ScalarField> family;            // closed-form solution family, optional
    ScenarioOptions options;
    nlohmann::ordered_json expect = nlohmann::ordered_json::object();

    bool has_task(Task t) const;
};

/// Validates and converts; every failure is a ScenarioError naming the key.
Scenario scenario_from_json(const nlohmann::ordered_json& doc, const std::string& fallback_name = "scenario");
Scenario load_scenario(const std::filesystem::path& path);

} // namespace ucp
