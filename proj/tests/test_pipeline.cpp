#include "ucp/parallel.hpp"
#include "ucp/pipeline.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <sstream>

using namespace ucp;
using nlohmann::ordered_json;

namespace {

const std::filesystem::path kScenarios = UCP_SCENARIO_DIR;

ordered_json base_doc()
{
    return ordered_json::parse(R"({
        "schema_version": 1,
        "tensor": {"a1111": 3, "a1112": 0, "a1122": 1, "a1212": 1, "a1222": 0, "a2222": "3"},
        "point": [0, 0],
        "omega": {"center": [0, 0], "halfwidths": [0.3, 0.3]},
        "grid": {"n": 33},
        "tasks": ["conditions"]
    })");
}

std::string error_key(const ordered_json& doc)
{
    try {
        scenario_from_json(doc);
    } catch (const ScenarioError& e) {
        return e.key();
    }
    return "<none>";
}

} // namespace

TEST(Scenario, MinimalDocument)
{
    const Scenario sc = scenario_from_json(base_doc(), "fallback");
    EXPECT_EQ(sc.name, "fallback");
    EXPECT_EQ(sc.n, 33);
    EXPECT_EQ(sc.tasks, std::vector<Task>{Task::Conditions});
    EXPECT_FALSE(sc.point_data.has_value());
    EXPECT_EQ(sc.coefficients.a2222(0.1, 0.1), 3.0);
}

TEST(Scenario, TasksAreOrderedAndNamed)
{
    ordered_json d = base_doc();
    d["tasks"] = {"ucp", "conditions", "nullspace", "reduce"};
    const Scenario sc = scenario_from_json(d);
    EXPECT_EQ(sc.tasks, (std::vector<Task>{Task::Conditions, Task::Reduce, Task::Ucp, Task::Nullspace}));
    for (Task t : {Task::Conditions, Task::Reduce, Task::Characteristics, Task::Riemann, Task::Ucp, Task::Nullspace,
                   Task::PointData})
        EXPECT_EQ(task_from_string(to_string(t)), t);
}

TEST(Scenario, RejectsMalformedInput)
{
    ordered_json d = base_doc();
    d["colour"] = "blue";
    EXPECT_EQ(error_key(d), "colour");

    d = base_doc();
    d["schema_version"] = 2;
    EXPECT_EQ(error_key(d), "schema_version");

    d = base_doc();
    d["tensor"].erase("a1212");
    EXPECT_EQ(error_key(d), "tensor.a1212");

    d = base_doc();
    d["tensor"]["a1111"] = "3 + sin(";
    EXPECT_EQ(error_key(d), "tensor.a1111");

    d = base_doc();
    d["grid"]["n"] = 9;
    EXPECT_EQ(error_key(d), "grid.n");

    d = base_doc();
    d["point"] = {0.5, 0};
    EXPECT_EQ(error_key(d), "point");

    d = base_doc();
    d["omega"]["halfwidths"] = {0.3, 0};
    EXPECT_EQ(error_key(d), "omega.halfwidths");

    d = base_doc();
    d["tasks"] = {"conditions", "teleport"};
    EXPECT_EQ(error_key(d), "tasks");

    d = base_doc();
    d["lower_order"] = {{"b333", "x"}};
    EXPECT_EQ(error_key(d), "lower_order.b333");

    d = base_doc();
    d["point_data"] = {0, 0, 0};
    EXPECT_EQ(error_key(d), "point_data");

    d = base_doc();
    d["point_data"] = {{"u", 0}, {"ux", 0}, {"uy", 0}};
    EXPECT_EQ(error_key(d), "point_data");

    d = base_doc();
    d["tolerances"] = {{"rank", -1}};
    EXPECT_EQ(error_key(d), "tolerances.rank");
}

TEST(Scenario, PointDataForms)
{
    ordered_json d = base_doc();
    d["point_data"] = {1, 2, 3, 4, 5};
    auto pd = *scenario_from_json(d).point_data;
    for (int k = 0; k < 5; ++k)
        EXPECT_EQ(pd[k], k + 1.0);

    d["point_data"] = {1, 2, 3, 4};
    pd = *scenario_from_json(d).point_data;
    EXPECT_EQ(pd[3], 4.0);
    EXPECT_FALSE(pd[4].has_value());

    d["point_data"] = {{"u", 1}, {"ux", 2}, {"uy", 3}, {"uyy", 5}};
    pd = *scenario_from_json(d).point_data;
    EXPECT_FALSE(pd[3].has_value());
    EXPECT_EQ(pd[4], 5.0);
}

TEST(Expectations, Evaluator)
{
    const ordered_json report = ordered_json::parse(R"({
        "nullspace": {"dimension": 4, "ambiguous": false},
        "ucp": {"status": "verified", "w_sup": {"value": 1e-12}}
    })");
    const ordered_json expect = ordered_json::parse(R"({
        "nullspace_dim": 4,
        "nullspace_ambiguous": true,
        "w_sup": {"min": 0, "max": 1e-8},
        "/ucp/status": "verified",
        "point_data_rank": 2
    })");
    const auto [records, failed] = evaluate_expectations(expect, report);
    EXPECT_EQ(failed, 1);
    ASSERT_EQ(records.size(), 5u);
    EXPECT_EQ(records[0]["status"], "pass");
    EXPECT_EQ(records[1]["status"], "fail");
    EXPECT_EQ(records[2]["status"], "pass");
    EXPECT_EQ(records[3]["status"], "pass");
    EXPECT_EQ(records[4]["status"], "skipped");

    EXPECT_THROW(evaluate_expectations(ordered_json::parse(R"({"favourite_colour": 1})"), report), ScenarioError);
}

TEST(Pipeline, ResolvesDependencies)
{
    ordered_json d = base_doc();
    d["tasks"] = {"ucp", "point_data"};
    const Scenario sc = scenario_from_json(d);
    EXPECT_EQ(resolve_tasks(sc),
              (std::vector<Task>{Task::Characteristics, Task::Ucp, Task::Nullspace, Task::PointData}));
    RunOptions o;
    o.only = std::vector<Task>{Task::Riemann};
    EXPECT_EQ(resolve_tasks(sc, o), (std::vector<Task>{Task::Characteristics, Task::Riemann}));
}

TEST(Pipeline, LameScenario)
{
    const ScenarioReport r = run(load_scenario(kScenarios / "lame_constant.json"));
    EXPECT_TRUE(r.passed());
    const ordered_json& j = r.json;
    EXPECT_EQ(j["schema_version"], 1);
    EXPECT_EQ(j["scenario"], "lame_constant");
    EXPECT_EQ(j["conditions"]["hyperbolic"]["pass"], true);
    EXPECT_EQ(j["nullspace"]["dimension"], 4);
    EXPECT_EQ(j["ucp"]["status"], "verified");
    EXPECT_LE(j["ucp"]["w_sup"]["value"].get<double>(), 1e-8);
    EXPECT_LE(j["ucp"]["phi_sup"]["value"].get<double>(), 1e-10);
    EXPECT_EQ(j["verdict"], "pass");
}

TEST(Pipeline, WeakenedDataOnTheDegenerateExampleIsDeclined)
{
    const ScenarioReport r = run(load_scenario(kScenarios / "degenerate_a1222.json"));
    EXPECT_TRUE(r.passed());
    EXPECT_EQ(r.json["ucp"]["status"], "declined");
    EXPECT_EQ(r.json["point_data"]["rank_deficient"], true);
    EXPECT_EQ(r.json["conditions"]["strongly_elliptic"]["pass"], true);
}

TEST(Pipeline, StageErrorsNameTheStage)
{
    ordered_json d = base_doc();
    d["tensor"] = {{"a1111", 3}, {"a1112", 1}, {"a1122", 0}, {"a1212", 1}, {"a1222", 1}, {"a2222", 3}};
    d["tasks"] = {"ucp"};
    try {
        run(scenario_from_json(d));
        FAIL() << "expected a stage error";
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "characteristics");
        EXPECT_EQ(e.kind(), "precondition");
        EXPECT_NE(std::string(e.what()).find("hyperbolicity"), std::string::npos);
    }
}

TEST(Pipeline, FailedExpectationIsReported)
{
    ordered_json d = base_doc();
    d["expect"] = {{"hyperbolic", false}};
    const ScenarioReport r = run(scenario_from_json(d));
    EXPECT_FALSE(r.passed());
    EXPECT_EQ(r.expectations_failed, 1);
    EXPECT_EQ(r.json["verdict"], "fail");
}

TEST(Pipeline, ReportsDoNotDependOnWorkerCount)
{
    for (const char* name : {"lame_constant.json", "orthotropic_rotated_traced.json", "example_b221_expy.json"}) {
        const Scenario sc = load_scenario(kScenarios / name);
        set_worker_count(1);
        const std::string a = run(sc).json.dump();
        set_worker_count(4);
        const std::string b = run(sc).json.dump();
        set_worker_count(1);
        EXPECT_EQ(a, b) << name;
    }
}

TEST(Pipeline, GridDumps)
{
    RunOptions o;
    o.collect_grids = true;
    o.only = std::vector<Task>{Task::Riemann};
    const ScenarioReport r = run(load_scenario(kScenarios / "orthotropic_rotated_traced.json"), o);
    const auto it = std::find_if(r.grids.begin(), r.grids.end(), [](const GridDump& g) { return g.name == "riemann"; });
    ASSERT_NE(it, r.grids.end());
    std::ostringstream os;
    write_csv(os, *it);
    const std::string text = os.str();
    EXPECT_EQ(text.substr(0, 10), "x,y,value\n");
    EXPECT_EQ(static_cast<long>(std::count(text.begin(), text.end(), '\n')),
              static_cast<long>(it->rows.size()) + 1);
    // The Riemann function equals one at its parameter.
    for (const auto& row : it->rows)
        if (row[0] == 0.0 && row[1] == 0.0)
            EXPECT_EQ(row[2], 1.0);
}

TEST(Parallel, EveryIndexOnce)
{
    for (int workers : {1, 2, 8}) {
        set_worker_count(workers);
        std::vector<std::atomic<int>> hits(1000);
        parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
        for (const auto& h : hits)
            EXPECT_EQ(h.load(), 1);
    }
    set_worker_count(1);
}
