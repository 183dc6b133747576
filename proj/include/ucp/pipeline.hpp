#pragma once

// Runs a scenario's tasks in dependency order and assembles a deterministic
// JSON report (plus optional CSV grids).

#include "ucp/errors.hpp"
#include "ucp/scenario.hpp"

#include <json.hpp>

#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace ucp {

/// Any library error raised inside a stage, tagged with the stage name and the
/// kind of failure ("precondition", "convergence", "domain", "input").
class StageError : public Error {
public:
    StageError(std::string stage, std::string kind, const std::string& what)
        : Error("stage '" + stage + "' (" + kind + "): " + what), stage_(std::move(stage)), kind_(std::move(kind)) {}

    const std::string& stage() const noexcept { return stage_; }
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string stage_;
    std::string kind_;
};

/// Sampled field for CSV output; rows are (x, y, value).
struct GridDump {
    std::string name;
    std::vector<std::array<double, 3>> rows;
};

/// CSV with header `x,y,value`, 17 significant digits.
void write_csv(std::ostream& os, const GridDump& grid);

struct RunOptions {
    unsigned seed = 0;
    /// Restricts the scenario's task list (dependencies are still added).
    std::optional<std::vector<Task>> only;
    /// Parameter point (xi, eta) of the dumped Riemann table; the origin by default.
    std::optional<std::pair<double, double>> riemann_param;
    bool collect_grids = false;
};

struct ScenarioReport {
    nlohmann::ordered_json json;
    std::vector<GridDump> grids;
    int expectations_failed = 0;

    bool passed() const { return expectations_failed == 0; }
};

/// Tasks actually executed for a scenario: the requested ones plus what they need.
std::vector<Task> resolve_tasks(const Scenario& sc, const RunOptions& options = {});

/// Throws StageError when a stage fails and ScenarioError for malformed expectations.
ScenarioReport run(const Scenario& sc, const RunOptions& options = {});

/// Compares the `expect` block against a report; returns the per-key records and
/// the number of failures. Keys are short names (e.g. "nullspace_dim") or JSON
/// pointers into the report. Expected values are literals or {"min": a, "max": b}.
std::pair<nlohmann::ordered_json, int> evaluate_expectations(const nlohmann::ordered_json& expect,
                                                             const nlohmann::ordered_json& report);

} // namespace ucp
